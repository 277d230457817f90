//! Argument-principle winding counts and Rouché certification.
//!
//! Phase is tracked along contours with adaptive bisection until every
//! consecutive jump is below π/2, the standard safeguard against winding
//! slips; a minimum-modulus floor catches contours passing through (or
//! numerically indistinguishable from) a zero.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy)]
pub struct ContourOptions {
    /// Initial sample count per rectangle edge.
    pub resolution: u32,
    /// Bisection depth limit for any initial segment.
    pub max_depth: u32,
    /// Samples with modulus below this abort with a contour error.
    pub min_modulus: f64,
}

impl Default for ContourOptions {
    fn default() -> Self {
        ContourOptions {
            resolution: 16,
            max_depth: 48,
            min_modulus: 1e-9,
        }
    }
}

/// Winding number of `f` along the counterclockwise boundary of
/// [sigma_lo, sigma_hi] × [t_lo, t_hi].
pub fn rectangle_winding(
    f: &mut dyn FnMut(Complex64) -> Result<Complex64>,
    sigma_lo: f64,
    sigma_hi: f64,
    t_lo: f64,
    t_hi: f64,
    opts: ContourOptions,
) -> Result<i64> {
    if !(sigma_lo < sigma_hi && t_lo < t_hi)
        || ![sigma_lo, sigma_hi, t_lo, t_hi]
            .iter()
            .all(|v| v.is_finite())
    {
        return Err(Error::Validation(format!(
            "degenerate rectangle [{sigma_lo}, {sigma_hi}] x [{t_lo}, {t_hi}]"
        )));
    }
    if opts.resolution == 0 {
        return Err(Error::Validation(
            "contour resolution must be positive".into(),
        ));
    }
    let corners = [
        Complex64::new(sigma_lo, t_lo),
        Complex64::new(sigma_hi, t_lo),
        Complex64::new(sigma_hi, t_hi),
        Complex64::new(sigma_lo, t_hi),
    ];
    let mut total = 0.0f64;
    for e in 0..4 {
        total += edge_phase_sweep(f, corners[e], corners[(e + 1) % 4], opts)?;
    }
    let winding = total / (2.0 * PI);
    let rounded = winding.round();
    if (winding - rounded).abs() > 0.25 {
        return Err(Error::Undersampled(format!(
            "accumulated phase / 2π = {winding} is not close to an integer"
        )));
    }
    Ok(rounded as i64)
}

fn edge_phase_sweep(
    f: &mut dyn FnMut(Complex64) -> Result<Complex64>,
    from: Complex64,
    to: Complex64,
    opts: ContourOptions,
) -> Result<f64> {
    let eval = |f: &mut dyn FnMut(Complex64) -> Result<Complex64>,
                z: Complex64,
                seg: (Complex64, Complex64)|
     -> Result<Complex64> {
        let v = f(z)?;
        if v.norm() < opts.min_modulus {
            return Err(Error::Contour {
                from: seg.0,
                to: seg.1,
                message: format!(
                    "|f({z})| = {} is below the modulus floor {}; a zero sits on or \
                     numerically on the contour",
                    v.norm(),
                    opts.min_modulus
                ),
            });
        }
        Ok(v)
    };

    // Initial uniform samples, then a bisection stack per subsegment.
    let n = opts.resolution as usize;
    let mut points = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let z = from + (to - from) * (k as f64 / n as f64);
        points.push((z, eval(f, z, (from, to))?));
    }

    let mut total = 0.0f64;
    let mut stack: Vec<(Complex64, Complex64, Complex64, Complex64, u32)> = Vec::new();
    for pair in points.windows(2).rev() {
        let (za, fa) = pair[0];
        let (zb, fb) = pair[1];
        stack.push((za, fa, zb, fb, 0));
    }
    while let Some((za, fa, zb, fb, depth)) = stack.pop() {
        let step = (fb / fa).arg();
        if step.abs() < PI / 2.0 {
            total += step;
            continue;
        }
        if depth >= opts.max_depth {
            return Err(Error::Contour {
                from: za,
                to: zb,
                message: format!("phase jump {step} still ≥ π/2 after {depth} bisections",),
            });
        }
        let zm = (za + zb) * 0.5;
        let fm = eval(f, zm, (za, zb))?;
        stack.push((zm, fm, zb, fb, depth + 1));
        stack.push((za, fa, zm, fm, depth + 1));
    }
    Ok(total)
}

/// Successful Rouché comparison: dominance held at every sample and both
/// windings agree, certifying equal zero counts inside the contour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoucheCertificate {
    pub winding_f: i64,
    pub winding_g: i64,
}

/// Check |f − g| < |g| pointwise on a sampled closed contour and compare
/// winding numbers. Sample lists describe the same positively-oriented
/// contour; closure (last back to first) is implicit.
pub fn rouche_compare(
    f_samples: &[Complex64],
    g_samples: &[Complex64],
) -> Result<RoucheCertificate> {
    if f_samples.len() != g_samples.len() {
        return Err(Error::Validation(format!(
            "sample lists differ in length: {} vs {}",
            f_samples.len(),
            g_samples.len()
        )));
    }
    if f_samples.len() < 3 {
        return Err(Error::Validation(
            "a closed contour needs at least 3 samples".into(),
        ));
    }
    for (i, (&fv, &gv)) in f_samples.iter().zip(g_samples).enumerate() {
        let difference = (fv - gv).norm();
        let reference = gv.norm();
        if difference >= reference {
            return Err(Error::Dominance {
                index: i,
                difference,
                reference,
            });
        }
    }
    let winding_f = sampled_winding(f_samples)?;
    let winding_g = sampled_winding(g_samples)?;
    if winding_f != winding_g {
        return Err(Error::Undersampled(format!(
            "windings disagree ({winding_f} vs {winding_g}) despite pointwise dominance; \
             the contour sampling is too coarse"
        )));
    }
    Ok(RoucheCertificate {
        winding_f,
        winding_g,
    })
}

/// Winding number of a closed sample loop; every consecutive phase step
/// must stay below π/2.
pub fn sampled_winding(samples: &[Complex64]) -> Result<i64> {
    let mut total = 0.0f64;
    for i in 0..samples.len() {
        let a = samples[i];
        let b = samples[(i + 1) % samples.len()];
        if a.norm() == 0.0 {
            return Err(Error::Validation(format!("sample {i} is exactly zero")));
        }
        let step = (b / a).arg();
        if step.abs() >= PI / 2.0 {
            return Err(Error::Undersampled(format!(
                "phase step {step} between samples {i} and {} reaches π/2",
                (i + 1) % samples.len()
            )));
        }
        total += step;
    }
    let winding = total / (2.0 * PI);
    let rounded = winding.round();
    if (winding - rounded).abs() > 0.25 {
        return Err(Error::Undersampled(format!(
            "accumulated phase / 2π = {winding} is not close to an integer"
        )));
    }
    Ok(rounded as i64)
}
