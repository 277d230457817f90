//! Sieve of Eratosthenes, bounded by a hard memory cap.

use crate::error::{Error, Result};

/// Largest sieve bound accepted (keeps the bit array under ~13 MB).
pub const SIEVE_LIMIT: u64 = 100_000_000;

pub fn primes_up_to(limit: u64) -> Result<Vec<u64>> {
    if limit > SIEVE_LIMIT {
        return Err(Error::ResourceLimit(format!(
            "sieve bound {limit} exceeds the supported limit {SIEVE_LIMIT}"
        )));
    }
    if limit < 2 {
        return Ok(Vec::new());
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for p in 2..=n {
        if composite[p] {
            continue;
        }
        primes.push(p as u64);
        let mut q = p * p;
        while q <= n {
            composite[q] = true;
            q += p;
        }
    }
    Ok(primes)
}
