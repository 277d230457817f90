//! Polynomial approximation on compact masks with connected complement,
//! and zero-free approximation in measure: flatten the small-modulus set
//! to a plateau, carve the gap band away, and fit one polynomial that is
//! certifiably bounded away from zero on what remains.

use crate::error::{Error, Result};
use crate::grid::{self, RegionMask};
use crate::reduction::{zero_split, SampledFunction};
use num_complex::Complex64;
use serde::de::{Deserializer, Error as _};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

/// Orthogonalization stops when a new basis direction is this much
/// smaller than the largest one.
const CONDITION_CAP: f64 = 1e12;
/// Smallest degree the zero-free ladder tries first.
const LADDER_START: u32 = 8;

/// Polynomial with ascending coefficients; the trailing coefficient is
/// nonzero unless the polynomial is zero (empty coefficient list).
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    /// Normalize: trailing zero coefficients are trimmed away.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last() == Some(&Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Poly::new(vec![c])
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut v = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            v = v * z + c;
        }
        v
    }
}

impl Serialize for Poly {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.coeffs.iter().map(|c| [c.re, c.im]).collect();
        pairs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Poly {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(deserializer)?;
        for [re, im] in &pairs {
            if !re.is_finite() || !im.is_finite() {
                return Err(D::Error::custom("polynomial coefficients must be finite"));
            }
        }
        Ok(Poly::new(
            pairs
                .into_iter()
                .map(|[re, im]| Complex64::new(re, im))
                .collect(),
        ))
    }
}

/// Zero-free approximation certificate. `min_modulus_on_keps > 0`
/// certifies zero-freeness on the sampled K_ε; the value on all of K is
/// reported for information only — the guarantee lives on K_ε.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroFreeReport {
    pub k_eps: RegionMask,
    pub sup_error_on_keps: f64,
    pub min_modulus_on_keps: f64,
    pub min_modulus_on_k: f64,
    pub area_removed: f64,
    /// Plateau value 1/j planted on the small-modulus set.
    pub plateau: f64,
}

fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

struct WBasisFit {
    /// Coefficients in the shifted basis w = (z − center)/radius.
    coeffs_w: Vec<Complex64>,
    /// Columns the orthogonalization accepted before hitting the
    /// condition cap (== requested columns when nothing was dropped).
    cols_used: usize,
    center: Complex64,
    radius: f64,
}

/// Least squares on the centered-and-scaled monomial basis via modified
/// Gram–Schmidt with one reorthogonalization pass.
#[allow(clippy::needless_range_loop)] // k walks r, q, and the power ladder together
fn lsq_fit(centers: &[Complex64], values: &[Complex64], m: usize) -> WBasisFit {
    let n = centers.len();
    let (mut re_lo, mut re_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut im_lo, mut im_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for z in centers {
        re_lo = re_lo.min(z.re);
        re_hi = re_hi.max(z.re);
        im_lo = im_lo.min(z.im);
        im_hi = im_hi.max(z.im);
    }
    let center = Complex64::new(0.5 * (re_lo + re_hi), 0.5 * (im_lo + im_hi));
    let radius = (0.5 * (re_hi - re_lo))
        .hypot(0.5 * (im_hi - im_lo))
        .max(1e-300);
    let ws: Vec<Complex64> = centers.iter().map(|&z| (z - center) / radius).collect();

    let mut q: Vec<Vec<Complex64>> = Vec::with_capacity(m);
    let mut r = vec![vec![Complex64::new(0.0, 0.0); m]; m];
    let mut col = vec![Complex64::new(1.0, 0.0); n];
    let mut max_diag = 0.0f64;
    let mut cols_used = m;
    for k in 0..m {
        if k > 0 {
            for i in 0..n {
                col[i] *= ws[i];
            }
        }
        let mut v = col.clone();
        for _pass in 0..2 {
            for (j, qj) in q.iter().enumerate() {
                let proj = inner(qj, &v);
                for i in 0..n {
                    v[i] -= proj * qj[i];
                }
                r[j][k] += proj;
            }
        }
        let d = norm(&v);
        max_diag = max_diag.max(d);
        if d * CONDITION_CAP <= max_diag {
            cols_used = k;
            break;
        }
        r[k][k] = Complex64::new(d, 0.0);
        for x in &mut v {
            *x /= d;
        }
        q.push(v);
    }

    let mut beta: Vec<Complex64> = (0..cols_used).map(|j| inner(&q[j], values)).collect();
    for k in (0..cols_used).rev() {
        for j in k + 1..cols_used {
            let b = beta[j];
            beta[k] -= r[k][j] * b;
        }
        beta[k] /= r[k][k];
    }
    WBasisFit {
        coeffs_w: beta,
        cols_used,
        center,
        radius,
    }
}

/// Expand Σ a_k ((z − c)/r)^k into plain ascending coefficients of z.
fn w_basis_to_poly(fit: &WBasisFit) -> Poly {
    let inv = 1.0 / fit.radius;
    let mut acc: Vec<Complex64> = Vec::new();
    for &a in fit.coeffs_w.iter().rev() {
        let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
        for (i, &qc) in acc.iter().enumerate() {
            next[i + 1] += qc * inv;
            next[i] -= qc * inv * fit.center;
        }
        next[0] += a;
        acc = next;
    }
    Poly::new(acc)
}

fn sup_over_cells(poly: &Poly, g: &SampledFunction) -> f64 {
    let grid = g.grid();
    let mut sup = 0.0f64;
    for (row, c) in g.domain().iter_cells() {
        let z = grid.cell_center(row, c);
        sup = sup.max((poly.eval(z) - g.value(row, c)).norm());
    }
    sup
}

/// Least-squares polynomial approximation of g at the cell centers of
/// its domain. The returned sup error is measured a posteriori from the
/// returned polynomial — that measurement, not the solver, is the
/// contract.
pub fn mergelyan_fit(g: &SampledFunction, degree: u32) -> Result<(Poly, f64)> {
    let mask = g.domain();
    if mask.is_empty() {
        return Err(Error::Validation("cannot fit on an empty mask".into()));
    }
    if grid::complement_labeling(mask).hole_count() > 0 {
        return Err(Error::Geometry(
            "complement of the sample mask is not connected".into(),
        ));
    }
    let m = degree as usize + 1;
    if m > mask.cell_count() {
        return Err(Error::Validation(format!(
            "degree {degree} needs {m} samples but the mask has {}",
            mask.cell_count()
        )));
    }
    let mut centers = Vec::with_capacity(mask.cell_count());
    let mut values = Vec::with_capacity(mask.cell_count());
    for (r, c) in mask.iter_cells() {
        centers.push(mask.grid().cell_center(r, c));
        values.push(g.value(r, c));
    }
    let fit = lsq_fit(&centers, &values, m);
    let poly = w_basis_to_poly(&fit);
    let sup = sup_over_cells(&poly, g);
    if fit.cols_used < m {
        return Err(Error::DegreeLimit {
            message: format!(
                "basis conditioning exceeded {CONDITION_CAP:.0e} after {} of {m} columns",
                fit.cols_used
            ),
            best_error: sup,
        });
    }
    Ok((poly, sup))
}

/// Zero-free polynomial approximation in measure: plateau the
/// small-modulus set A_j at 1/j, keep g on the large-modulus set B_j,
/// discard the thin band in between (plus corridors that reconnect the
/// complement), and fit until the sup error drops below ε/2. `degree`
/// caps the fitting ladder.
pub fn zero_free_approx_in_measure(
    g: &SampledFunction,
    epsilon: f64,
    degree: u32,
) -> Result<(Poly, ZeroFreeReport)> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Validation(format!("need ε > 0, got {epsilon}")));
    }
    let k = g.domain();
    if k.is_empty() {
        return Err(Error::Validation("domain has no cells".into()));
    }
    let j0 = (1.0 / epsilon).ceil() as u32;
    let max_abs = k
        .iter_cells()
        .map(|(r, c)| g.value(r, c).norm())
        .fold(0.0f64, f64::max);

    // Degenerate branch: |g| never rises above the plateau, so the
    // constant 1/j is already within 2/j of g everywhere.
    if max_abs <= 1.0 / j0 as f64 {
        let plateau = 1.0 / j0 as f64;
        return Ok((
            Poly::constant(Complex64::new(plateau, 0.0)),
            ZeroFreeReport {
                k_eps: k.clone(),
                sup_error_on_keps: 0.0,
                min_modulus_on_keps: plateau,
                min_modulus_on_k: plateau,
                area_removed: 0.0,
                plateau,
            },
        ));
    }

    // Smallest j ≥ ⌈1/ε⌉ whose gap band K \ (A_j ∪ B_j) is thinner
    // than ε in area.
    let mut chosen: Option<(u32, RegionMask, RegionMask)> = None;
    for j in j0..j0 + 4096 {
        let (a, b) = zero_split(g, j)?;
        let gap = grid::area(k) - grid::area(&a) - grid::area(&b);
        if gap < epsilon {
            chosen = Some((j, a, b));
            break;
        }
    }
    let Some((j, a_mask, b_mask)) = chosen else {
        return Err(Error::Resolution {
            message: format!(
                "no modulus split below ε = {epsilon} admits a gap band of area < ε \
                 at this resolution"
            ),
            required_level: k.grid().level() + 1,
        });
    };
    let plateau = 1.0 / j as f64;

    let union = RegionMask::from_cells(*k.grid(), a_mask.iter_cells().chain(b_mask.iter_cells()))?;
    let holes = grid::complement_labeling(&union).hole_count();
    let k_eps = if holes > 0 {
        grid::carve_connectors(&union, epsilon / holes as f64)?
    } else {
        union
    };
    debug_assert_eq!(grid::complement_labeling(&k_eps).hole_count(), 0);

    // The flattened target on K_ε.
    let values: Vec<Complex64> = k_eps
        .iter_cells()
        .map(|(r, c)| {
            if a_mask.contains(r, c) {
                Complex64::new(plateau, 0.0)
            } else {
                g.value(r, c)
            }
        })
        .collect();
    let g_eps = SampledFunction::from_values(k_eps.clone(), values)?;

    // Fitting ladder: climb by twos until the sup error clears ε/2.
    let degree_cap = degree.min(k_eps.cell_count() as u32 - 1);
    let mut ds: Vec<u32> = (LADDER_START.min(degree_cap)..=degree_cap)
        .step_by(2)
        .collect();
    if ds.last() != Some(&degree_cap) {
        ds.push(degree_cap);
    }
    let mut best: Option<(Poly, f64)> = None;
    for d in ds {
        let (poly, sup) = match mergelyan_fit(&g_eps, d) {
            Ok(fit) => fit,
            Err(Error::DegreeLimit { best_error, .. }) => {
                // Conditioning wall: no higher degree will help.
                let achieved = best.as_ref().map_or(best_error, |(_, s)| s.min(best_error));
                return Err(Error::DegreeLimit {
                    message: format!(
                        "conditioning stopped the ladder before reaching ε/2 = {}",
                        epsilon / 2.0
                    ),
                    best_error: achieved,
                });
            }
            Err(other) => return Err(other),
        };
        if best.as_ref().is_none_or(|(_, s)| sup < *s) {
            best = Some((poly, sup));
        }
        if best.as_ref().unwrap().1 < epsilon / 2.0 {
            break;
        }
    }
    let (poly, sup) = best.expect("ladder tried at least one degree");
    if sup >= epsilon / 2.0 {
        return Err(Error::DegreeLimit {
            message: format!(
                "degree cap {degree} reached with sup error {sup} ≥ ε/2 = {}",
                epsilon / 2.0
            ),
            best_error: sup,
        });
    }

    let min_on = |mask: &RegionMask| {
        mask.iter_cells()
            .map(|(r, c)| poly.eval(k.grid().cell_center(r, c)).norm())
            .fold(f64::INFINITY, f64::min)
    };
    let report = ZeroFreeReport {
        sup_error_on_keps: sup,
        min_modulus_on_keps: min_on(&k_eps),
        min_modulus_on_k: min_on(k),
        area_removed: grid::area(k) - grid::area(&k_eps),
        plateau,
        k_eps,
    };
    Ok((poly, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{dyadic_partition, Rect};

    fn unit_square(level: u32) -> RegionMask {
        let part = dyadic_partition(Rect::new(0.0, 0.0, 1.0, 1.0).unwrap(), level).unwrap();
        RegionMask::full(part.grid)
    }

    #[test]
    fn low_degree_polynomial_is_recovered() {
        let k = unit_square(4);
        let truth = Poly::new(vec![
            Complex64::new(0.3, 0.2),
            Complex64::new(1.0, -0.5),
            Complex64::new(2.0, 0.0),
            Complex64::new(-1.0, 0.25),
        ]);
        let g = SampledFunction::from_fn(k, |z| truth.eval(z)).unwrap();
        let (poly, sup) = mergelyan_fit(&g, 5).unwrap();
        assert!(sup < 1e-9, "recovery sup {sup}");
        for (got, want) in poly.coeffs().iter().zip(truth.coeffs()) {
            assert!((got - want).norm() < 1e-9);
        }
    }

    #[test]
    fn exponential_fits_to_taylor_accuracy() {
        let k = unit_square(4);
        let g = SampledFunction::from_fn(k, |z| z.exp()).unwrap();
        let (_, sup) = mergelyan_fit(&g, 12).unwrap();
        assert!(sup < 1e-8, "exp fit sup {sup}");
    }

    #[test]
    fn ladder_error_is_weakly_decreasing() {
        let k = unit_square(4);
        let g = SampledFunction::from_fn(k, |z| z.exp()).unwrap();
        let mut last = f64::INFINITY;
        for d in [2, 4, 6, 8] {
            let (_, sup) = mergelyan_fit(&g, d).unwrap();
            assert!(sup <= last, "degree {d}: {sup} > {last}");
            last = sup;
        }
    }

    #[test]
    fn disconnected_complement_is_rejected() {
        let grid = *unit_square(4).grid();
        let mut mask = RegionMask::full(grid);
        // Punch a hole: the complement now has a bounded component.
        for r in 6..10 {
            for c in 6..10 {
                mask.remove(r, c);
            }
        }
        let g = SampledFunction::from_fn(mask, |_| Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(mergelyan_fit(&g, 4), Err(Error::Geometry(_))));
    }

    #[test]
    fn degree_above_sample_count_is_rejected() {
        let grid = *unit_square(2).grid();
        let mut mask = RegionMask::empty(grid);
        for c in 0..4 {
            mask.insert(0, c);
        }
        let g = SampledFunction::from_fn(mask, |z| z).unwrap();
        assert!(matches!(mergelyan_fit(&g, 10), Err(Error::Validation(_))));
    }

    #[test]
    fn zero_function_becomes_the_plateau_constant() {
        let k = unit_square(4);
        let g = SampledFunction::from_fn(k.clone(), |_| Complex64::new(0.0, 0.0)).unwrap();
        let (poly, report) = zero_free_approx_in_measure(&g, 0.25, 16).unwrap();
        assert_eq!(poly, Poly::constant(Complex64::new(0.25, 0.0)));
        assert_eq!(report.plateau, 0.25);
        assert_eq!(report.area_removed, 0.0);
        assert_eq!(report.min_modulus_on_k, 0.25);
        assert_eq!(report.k_eps, k);
    }

    #[test]
    fn nonzero_constant_passes_straight_through() {
        let k = unit_square(4);
        let c = Complex64::new(0.8, 0.1);
        let g = SampledFunction::from_fn(k, |_| c).unwrap();
        let (poly, report) = zero_free_approx_in_measure(&g, 0.1, 12).unwrap();
        assert!(report.sup_error_on_keps < 1e-10);
        assert!((report.min_modulus_on_keps - c.norm()).abs() < 1e-9);
        assert!(report.min_modulus_on_k > 0.0);
        assert_eq!(report.area_removed, 0.0);
        assert!((poly.eval(Complex64::new(0.3, 0.6)) - c).norm() < 1e-9);
    }

    #[test]
    fn linear_map_meets_the_corollary_bounds() {
        // g(z) = z on the unit square: one (corner) zero, ε = 0.1.
        let k = unit_square(5);
        let g = SampledFunction::from_fn(k.clone(), |z| z).unwrap();
        let (poly, report) = zero_free_approx_in_measure(&g, 0.1, 48).unwrap();
        assert!(
            report.sup_error_on_keps < 0.05,
            "sup {}",
            report.sup_error_on_keps
        );
        assert!(report.min_modulus_on_keps > 0.0);
        assert!(report.area_removed < 0.2, "removed {}", report.area_removed);
        assert!(report.k_eps.subset_of(&k));
        assert_eq!(grid::complement_labeling(&report.k_eps).hole_count(), 0);

        // Self-consistency: re-derive the certificate from the outputs.
        let (a_mask, _) = zero_split(&g, (1.0 / report.plateau).round() as u32).unwrap();
        let mut sup = 0.0f64;
        let mut min_eps = f64::INFINITY;
        for (r, c) in report.k_eps.iter_cells() {
            let z = k.grid().cell_center(r, c);
            let target = if a_mask.contains(r, c) {
                Complex64::new(report.plateau, 0.0)
            } else {
                g.value(r, c)
            };
            sup = sup.max((poly.eval(z) - target).norm());
            min_eps = min_eps.min(poly.eval(z).norm());
        }
        assert!((sup - report.sup_error_on_keps).abs() < 1e-12);
        assert!((min_eps - report.min_modulus_on_keps).abs() < 1e-12);
        let area = grid::area(&k) - grid::area(&report.k_eps);
        assert!((area - report.area_removed).abs() < 1e-12);
    }

    #[test]
    fn poly_json_round_trips_as_pairs() {
        let p = Poly::new(vec![
            Complex64::new(1.0, 2.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, -0.5),
        ]);
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(text, "[[1.0,2.0],[0.0,0.0],[0.0,-0.5]]");
        let back: Poly = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
        // Trailing zeros trim on the way in.
        let trimmed: Poly = serde_json::from_str("[[3.0,0.0],[0.0,0.0]]").unwrap();
        assert_eq!(trimmed.degree(), Some(0));
    }

    #[test]
    fn zero_poly_has_no_degree() {
        assert_eq!(Poly::zero().degree(), None);
        assert_eq!(Poly::new(vec![Complex64::new(0.0, 0.0)]), Poly::zero());
        assert_eq!(
            Poly::zero().eval(Complex64::new(2.0, 1.0)),
            Complex64::new(0.0, 0.0)
        );
    }
}
