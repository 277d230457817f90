//! Dirichlet-series engine: evaluation with continuation into the strip,
//! axiom checks (Euler product, prime mean-square, functional equation),
//! and the zero census by argument principle.

pub mod contour;
mod eulermac;
mod gamma;
pub mod primes;

pub use contour::{rouche_compare, sampled_winding, ContourOptions, RoucheCertificate};
pub use eulermac::{
    chi4_eval, hurwitz_zeta_eval, zeta_eval, EvalResult, HEIGHT_LIMIT, POLE_MARGIN,
};
pub use gamma::{gamma, gamma_pole_distance, lngamma};

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Accuracy requested from the evaluator at contour samples.
const CONTOUR_TARGET: f64 = 1e-10;
/// Accuracy requested for each factor of the completed function.
const FE_TARGET: f64 = 1e-12;
/// Largest series cutoff `lfun_eval` will choose on its own before handing
/// off to the continuation method.
const SERIES_AUTO_CAP: usize = 200_000;
/// Hard ceiling for explicit series evaluation requests.
const SERIES_HARD_CAP: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientRule {
    /// a(n) = 1.
    Zeta,
    /// a(n) = χ₄(n), the nonprincipal character mod 4.
    DirichletChi4,
    /// Not a Dirichlet series at all: an explicit polynomial in s
    /// (coefficients in ascending degree), used to exercise plumbing on a
    /// function with known, plantable zeros.
    Synthetic(Vec<Complex64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContinuationMethod {
    /// No continuation available; only σ > 1 is reachable.
    None,
    /// Euler–Maclaurin directly on the series (ζ).
    EulerMaclaurin,
    /// Hurwitz-style shifted Euler–Maclaurin (Dirichlet L mod 4).
    HurwitzEulerMaclaurin,
    /// Entire by construction; evaluate the polynomial anywhere.
    Polynomial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalData {
    pub q: f64,
    /// (λ_j, μ_j) pairs of the gamma factors Γ(λ_j s + μ_j).
    pub gammas: Vec<(f64, f64)>,
    pub omega: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletSeriesSpec {
    pub rule: CoefficientRule,
    pub continuation: ContinuationMethod,
    pub euler_degree: u32,
    pub sigma_l: f64,
    pub mu_l: f64,
    pub pole_order_at_1: u32,
    pub functional: Option<FunctionalData>,
}

impl DirichletSeriesSpec {
    pub fn zeta() -> Self {
        DirichletSeriesSpec {
            rule: CoefficientRule::Zeta,
            continuation: ContinuationMethod::EulerMaclaurin,
            euler_degree: 1,
            sigma_l: 0.0,
            mu_l: 0.5,
            pole_order_at_1: 1,
            functional: Some(FunctionalData {
                q: (1.0 / PI).sqrt(),
                gammas: vec![(0.5, 0.0)],
                omega: Complex64::new(1.0, 0.0),
            }),
        }
    }

    pub fn dirichlet_chi4() -> Self {
        DirichletSeriesSpec {
            rule: CoefficientRule::DirichletChi4,
            continuation: ContinuationMethod::HurwitzEulerMaclaurin,
            euler_degree: 1,
            sigma_l: 0.0,
            mu_l: 0.5,
            pole_order_at_1: 0,
            functional: Some(FunctionalData {
                q: (4.0 / PI).sqrt(),
                gammas: vec![(0.5, 0.5)],
                omega: Complex64::new(1.0, 0.0),
            }),
        }
    }

    pub fn synthetic(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Validation(
                "polynomial needs at least one coefficient".into(),
            ));
        }
        if coeffs
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::Validation(
                "polynomial coefficients must be finite".into(),
            ));
        }
        let spec = DirichletSeriesSpec {
            rule: CoefficientRule::Synthetic(coeffs),
            continuation: ContinuationMethod::Polynomial,
            euler_degree: 1,
            sigma_l: 0.0,
            mu_l: 0.0,
            pole_order_at_1: 0,
            functional: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma_l >= 1.0 {
            return Err(Error::Validation(format!(
                "continuation abscissa must be < 1, got {}",
                self.sigma_l
            )));
        }
        if self.mu_l < 0.0 {
            return Err(Error::Validation(format!(
                "growth exponent must be nonnegative, got {}",
                self.mu_l
            )));
        }
        if let Some(fd) = &self.functional {
            if !(fd.q > 0.0) {
                return Err(Error::Validation(format!(
                    "Q must be positive, got {}",
                    fd.q
                )));
            }
            if (fd.omega.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::Validation(format!(
                    "root number must be unimodular, got |ω| = {}",
                    fd.omega.norm()
                )));
            }
            for &(lam, mu) in &fd.gammas {
                if !(lam > 0.0) || mu < 0.0 {
                    return Err(Error::Validation(format!(
                        "gamma factor (λ, μ) = ({lam}, {mu}) out of range"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Coefficient a(n); synthetic rules carry none.
    pub fn coefficient(&self, n: u64) -> Result<Complex64> {
        if n == 0 {
            return Err(Error::Validation("coefficients are indexed from 1".into()));
        }
        match &self.rule {
            CoefficientRule::Zeta => Ok(Complex64::new(1.0, 0.0)),
            CoefficientRule::DirichletChi4 => Ok(Complex64::new(chi4_char(n), 0.0)),
            CoefficientRule::Synthetic(_) => Err(Error::Capability(
                "a synthetic polynomial rule has no Dirichlet coefficients".into(),
            )),
        }
    }

    /// Local root α_j(p) of the degree-m Euler factor.
    pub fn alpha(&self, p: u64, j: u32) -> Result<Complex64> {
        if j >= self.euler_degree {
            return Err(Error::Validation(format!(
                "local root index {j} out of range for degree {}",
                self.euler_degree
            )));
        }
        match &self.rule {
            CoefficientRule::Zeta => Ok(Complex64::new(1.0, 0.0)),
            CoefficientRule::DirichletChi4 => Ok(Complex64::new(chi4_char(p), 0.0)),
            CoefficientRule::Synthetic(_) => Err(Error::Capability(
                "a synthetic polynomial rule has no Euler product".into(),
            )),
        }
    }

    /// Left edge of the universality strip. Known rules record the proven
    /// value 1/2; anything else falls back to the growth-based bound.
    pub fn sigma_m(&self) -> f64 {
        match self.rule {
            CoefficientRule::Zeta | CoefficientRule::DirichletChi4 => 0.5,
            CoefficientRule::Synthetic(_) => {
                sigma_m_upper(self.sigma_l, self.mu_l).expect("validated fields")
            }
        }
    }
}

fn chi4_char(n: u64) -> f64 {
    match n % 4 {
        1 => 1.0,
        3 => -1.0,
        _ => 0.0,
    }
}

/// Vertical strip σ_m < σ < right_edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripSpec {
    pub sigma_m: f64,
    pub right_edge: f64,
}

impl StripSpec {
    pub fn new(sigma_m: f64) -> Result<Self> {
        if !(sigma_m < 1.0) {
            return Err(Error::Validation(format!(
                "strip left edge must be < 1, got {sigma_m}"
            )));
        }
        Ok(StripSpec {
            sigma_m,
            right_edge: 1.0,
        })
    }

    pub fn contains(&self, s: Complex64) -> bool {
        self.sigma_m < s.re && s.re < self.right_edge
    }
}

/// max{1/2, 1 − (1−σ_L)/(1+2μ_L)}; always < 1.
pub fn sigma_m_upper(sigma_l: f64, mu_l: f64) -> Result<f64> {
    if !(sigma_l < 1.0) {
        return Err(Error::Validation(format!(
            "continuation abscissa must be < 1, got {sigma_l}"
        )));
    }
    if mu_l < 0.0 {
        return Err(Error::Validation(format!(
            "growth exponent must be nonnegative, got {mu_l}"
        )));
    }
    Ok((1.0 - (1.0 - sigma_l) / (1.0 + 2.0 * mu_l)).max(0.5))
}

/// Evaluate L(s) to the requested accuracy: truncated series where it
/// converges fast enough, otherwise the continuation method the series
/// description declares.
pub fn lfun_eval(
    spec: &DirichletSeriesSpec,
    s: Complex64,
    target_error: f64,
) -> Result<EvalResult> {
    if !(target_error > 0.0) {
        return Err(Error::Validation(format!(
            "target error must be positive, got {target_error}"
        )));
    }
    if let CoefficientRule::Synthetic(coeffs) = &spec.rule {
        return Ok(eval_polynomial(coeffs, s));
    }
    if s.re > 1.0 {
        if let Some(n) = series_cutoff(s.re, target_error).filter(|&n| n <= SERIES_AUTO_CAP) {
            return series_eval(spec, s, n);
        }
    }
    match (&spec.rule, spec.continuation) {
        (CoefficientRule::Zeta, ContinuationMethod::EulerMaclaurin) => zeta_eval(s, target_error),
        (CoefficientRule::DirichletChi4, ContinuationMethod::HurwitzEulerMaclaurin) => {
            chi4_eval(s, target_error)
        }
        (_, ContinuationMethod::None) => {
            if s.re > 1.0 {
                Err(Error::Precision(format!(
                    "series truncation cannot reach {target_error} at s = {s} without \
                     a continuation method"
                )))
            } else {
                Err(Error::Capability(format!(
                    "no continuation method: σ = {} is outside the half-plane of \
                     absolute convergence",
                    s.re
                )))
            }
        }
        (rule, method) => Err(Error::Capability(format!(
            "continuation method {method:?} is not applicable to the {} rule",
            rule_name(rule)
        ))),
    }
}

fn rule_name(rule: &CoefficientRule) -> &'static str {
    match rule {
        CoefficientRule::Zeta => "zeta",
        CoefficientRule::DirichletChi4 => "dirichlet-chi4",
        CoefficientRule::Synthetic(_) => "synthetic",
    }
}

/// Smallest cutoff whose integral tail bound meets half the target, or
/// None when it overflows any practical range.
fn series_cutoff(sigma: f64, target_error: f64) -> Option<usize> {
    let need = ((sigma - 1.0) * target_error * 0.5).powf(-1.0 / (sigma - 1.0));
    if need.is_finite() && need < 1e17 {
        Some((need.ceil() as usize).max(2))
    } else {
        None
    }
}

fn eval_polynomial(coeffs: &[Complex64], s: Complex64) -> EvalResult {
    let mut value = Complex64::new(0.0, 0.0);
    let mut magnitude = 0.0f64;
    for &c in coeffs.iter().rev() {
        value = value * s + c;
        magnitude = magnitude * s.norm() + c.norm();
    }
    EvalResult {
        value,
        error_bound: 4.0 * f64::EPSILON * magnitude * coeffs.len() as f64,
        terms_used: coeffs.len(),
    }
}

/// Plain truncated Dirichlet series with the integral tail bound; only
/// meaningful in the half-plane of absolute convergence.
pub fn series_eval(spec: &DirichletSeriesSpec, s: Complex64, n_terms: usize) -> Result<EvalResult> {
    if s.re <= 1.0 {
        return Err(Error::Validation(format!(
            "the Dirichlet series converges absolutely only for σ > 1; got σ = {}",
            s.re
        )));
    }
    if n_terms == 0 {
        return Err(Error::Validation("series needs at least one term".into()));
    }
    if n_terms > SERIES_HARD_CAP {
        return Err(Error::ResourceLimit(format!(
            "series cutoff {n_terms} exceeds the cap {SERIES_HARD_CAP}"
        )));
    }
    if matches!(spec.rule, CoefficientRule::Synthetic(_)) {
        return Err(Error::Capability(
            "a synthetic polynomial rule has no Dirichlet coefficients".into(),
        ));
    }
    let mut value = Complex64::new(0.0, 0.0);
    let mut abs_sum = 0.0f64;
    for n in 1..=n_terms as u64 {
        let a = spec.coefficient(n)?;
        if a == Complex64::new(0.0, 0.0) {
            continue;
        }
        let term = a * (-s * (n as f64).ln()).exp();
        value += term;
        abs_sum += term.norm();
    }
    // |a(n)| ≤ 1 for the built-in rules.
    let tail = (n_terms as f64).powf(1.0 - s.re) / (s.re - 1.0);
    Ok(EvalResult {
        value,
        error_bound: tail + 10.0 * f64::EPSILON * abs_sum,
        terms_used: n_terms,
    })
}

/// Finite Euler product over p ≤ prime_limit, in log space, with the
/// omitted-primes tail folded into the error bound.
pub fn euler_product_eval(
    spec: &DirichletSeriesSpec,
    s: Complex64,
    prime_limit: u64,
) -> Result<EvalResult> {
    if s.re <= 1.0 {
        return Err(Error::Validation(format!(
            "the Euler product converges only for σ > 1; got σ = {}",
            s.re
        )));
    }
    if matches!(spec.rule, CoefficientRule::Synthetic(_)) {
        return Err(Error::Capability(
            "a synthetic polynomial rule has no Euler product".into(),
        ));
    }
    let primes = primes::primes_up_to(prime_limit)?;
    let mut log_acc = Complex64::new(0.0, 0.0);
    let mut log_abs = 0.0f64;
    for &p in &primes {
        for j in 0..spec.euler_degree {
            let alpha = spec.alpha(p, j)?;
            if alpha == Complex64::new(0.0, 0.0) {
                continue;
            }
            let x = alpha * (-s * (p as f64).ln()).exp();
            let term = -(Complex64::new(1.0, 0.0) - x).ln();
            log_acc += term;
            log_abs += term.norm();
        }
    }
    let value = log_acc.exp();
    let tail_log =
        2.0 * spec.euler_degree as f64 * (prime_limit as f64).powf(1.0 - s.re) / (s.re - 1.0);
    let bound = value.norm() * (tail_log.exp_m1() + 10.0 * f64::EPSILON * log_abs);
    Ok(EvalResult {
        value,
        error_bound: bound,
        terms_used: primes.len(),
    })
}

/// (1/π(x)) Σ_{p ≤ x} |a(p)|². Exact arithmetic for unit coefficients:
/// sum and count are both small integers in f64.
pub fn prime_mean_square(spec: &DirichletSeriesSpec, x: f64) -> Result<f64> {
    if !(x >= 2.0) || !x.is_finite() {
        return Err(Error::Validation(format!("need x ≥ 2, got {x}")));
    }
    if matches!(spec.rule, CoefficientRule::Synthetic(_)) {
        return Err(Error::Capability(
            "a synthetic polynomial rule has no Dirichlet coefficients".into(),
        ));
    }
    let primes = primes::primes_up_to(x.floor() as u64)?;
    let mut sum = 0.0f64;
    for &p in &primes {
        sum += spec.coefficient(p)?.norm_sqr();
    }
    Ok(sum / primes.len() as f64)
}

/// Rows of the local-coefficient growth report: |b(p^k)| against p^{kθ}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelbergGrowthRow {
    pub p: u64,
    pub k: u32,
    pub b_modulus: f64,
    pub reference: f64,
}

/// Report |b(p^k)| = |Σ_j α_j(p)^k / k| against p^{kθ} for p, k within the
/// sieve limits. Reported as evidence, never asserted as a proof.
pub fn selberg_growth_report(
    spec: &DirichletSeriesSpec,
    p_limit: u64,
    k_limit: u32,
    theta: f64,
) -> Result<Vec<SelbergGrowthRow>> {
    if k_limit == 0 || theta < 0.0 {
        return Err(Error::Validation(
            "need k_limit ≥ 1 and θ ≥ 0 for the growth report".into(),
        ));
    }
    let primes = primes::primes_up_to(p_limit)?;
    let mut rows = Vec::new();
    for &p in &primes {
        for k in 1..=k_limit {
            let mut b = Complex64::new(0.0, 0.0);
            for j in 0..spec.euler_degree {
                b += spec.alpha(p, j)?.powu(k) / k as f64;
            }
            rows.push(SelbergGrowthRow {
                p,
                k,
                b_modulus: b.norm(),
                reference: (p as f64).powf(k as f64 * theta),
            });
        }
    }
    Ok(rows)
}

/// |Λ(s) − ω·conj(Λ(1 − conj s))| with Λ(s) = L(s)·Q^s·Π Γ(λ_j s + μ_j).
pub fn functional_equation_residual(spec: &DirichletSeriesSpec, s: Complex64) -> Result<f64> {
    let fd = spec
        .functional
        .as_ref()
        .ok_or_else(|| Error::Capability("spec carries no functional data".into()))?;
    let reflected = Complex64::new(1.0, 0.0) - s.conj();
    if spec.pole_order_at_1 > 0 {
        for (point, pole) in [(s, 1.0), (s, 0.0)] {
            let d = (point - pole).norm();
            if d < POLE_MARGIN {
                return Err(Error::PoleProximity(format!(
                    "s = {s} is within {POLE_MARGIN} of the pole image at {pole}"
                )));
            }
        }
    }
    for &(lam, mu) in &fd.gammas {
        for arg in [s * lam + mu, reflected * lam + mu] {
            let d = gamma_pole_distance(arg);
            if d < POLE_MARGIN {
                return Err(Error::PoleProximity(format!(
                    "gamma argument {arg} is within {POLE_MARGIN} of a pole"
                )));
            }
        }
    }
    let lambda_s = completed(spec, fd, s)?;
    let lambda_r = completed(spec, fd, reflected)?;
    Ok((lambda_s - fd.omega * lambda_r.conj()).norm())
}

fn completed(spec: &DirichletSeriesSpec, fd: &FunctionalData, s: Complex64) -> Result<Complex64> {
    let l = lfun_eval(spec, s, FE_TARGET)?;
    let mut log_factor = s * fd.q.ln();
    for &(lam, mu) in &fd.gammas {
        log_factor += lngamma(s * lam + mu);
    }
    Ok(l.value * log_factor.exp())
}

/// Count zeros of L inside [sigma_lo, sigma_hi] × [t_lo, t_hi] by the
/// argument principle. If the series has its pole at s = 1 on or within
/// the margin of the boundary, the grazing edges are pulled inside by
/// twice the margin (the count then refers to the nudged rectangle); a
/// pole strictly inside is rejected.
pub fn zero_count_rectangle(
    spec: &DirichletSeriesSpec,
    sigma_lo: f64,
    sigma_hi: f64,
    t_lo: f64,
    t_hi: f64,
    resolution: u32,
) -> Result<u32> {
    let (sigma_lo, sigma_hi, t_lo, t_hi) = nudge_rectangle(spec, sigma_lo, sigma_hi, t_lo, t_hi)?;
    let mut eval = |z: Complex64| lfun_eval(spec, z, CONTOUR_TARGET).map(|r| r.value);
    let opts = ContourOptions {
        resolution,
        ..ContourOptions::default()
    };
    let w = contour::rectangle_winding(&mut eval, sigma_lo, sigma_hi, t_lo, t_hi, opts)?;
    u32::try_from(w).map_err(|_| {
        Error::Undersampled(format!(
            "negative winding {w} for a pole-free function; contour tracking failed"
        ))
    })
}

fn nudge_rectangle(
    spec: &DirichletSeriesSpec,
    mut sigma_lo: f64,
    mut sigma_hi: f64,
    mut t_lo: f64,
    mut t_hi: f64,
) -> Result<(f64, f64, f64, f64)> {
    if !(sigma_lo < sigma_hi && t_lo < t_hi) {
        return Err(Error::Validation(format!(
            "degenerate rectangle [{sigma_lo}, {sigma_hi}] x [{t_lo}, {t_hi}]"
        )));
    }
    if spec.pole_order_at_1 == 0 {
        return Ok((sigma_lo, sigma_hi, t_lo, t_hi));
    }
    let m = POLE_MARGIN;
    if sigma_lo + m < 1.0 && 1.0 < sigma_hi - m && t_lo + m < 0.0 && 0.0 < t_hi - m {
        return Err(Error::Validation(
            "the pole at s = 1 lies inside the contour".into(),
        ));
    }
    let sigma_gap = if 1.0 < sigma_lo {
        sigma_lo - 1.0
    } else if 1.0 > sigma_hi {
        1.0 - sigma_hi
    } else {
        0.0
    };
    let t_gap = if 0.0 < t_lo {
        t_lo
    } else if 0.0 > t_hi {
        -t_hi
    } else {
        0.0
    };
    if sigma_gap.hypot(t_lo) < m {
        t_lo = 2.0 * m;
    }
    if sigma_gap.hypot(t_hi) < m {
        t_hi = -2.0 * m;
    }
    if t_gap.hypot(sigma_lo - 1.0) < m {
        sigma_lo = 1.0 + 2.0 * m;
    }
    if t_gap.hypot(sigma_hi - 1.0) < m {
        sigma_hi = 1.0 - 2.0 * m;
    }
    if !(sigma_lo < sigma_hi && t_lo < t_hi) {
        return Err(Error::Validation(
            "rectangle is too thin to keep the required margin from s = 1".into(),
        ));
    }
    Ok((sigma_lo, sigma_hi, t_lo, t_hi))
}

/// Fraction of the intervals I_j = ((j−1)m, jm], j = 1..n, over which the
/// rectangle (σ*, 1) × I_j contains no zeros.
pub fn zero_free_interval_fraction(
    spec: &DirichletSeriesSpec,
    sigma_star: f64,
    m: f64,
    n: u32,
    resolution: u32,
) -> Result<f64> {
    if !(m > 0.0) || !m.is_finite() || n == 0 {
        return Err(Error::Validation(format!(
            "need a positive interval length and count, got m = {m}, n = {n}"
        )));
    }
    let left = spec.sigma_m();
    if !(sigma_star > left && sigma_star < 1.0) {
        return Err(Error::Validation(format!(
            "σ* = {sigma_star} must lie in the strip ({left}, 1)"
        )));
    }
    let mut free = 0u32;
    for j in 1..=n {
        let t_lo = (j - 1) as f64 * m;
        let t_hi = j as f64 * m;
        let count = zero_count_rectangle(spec, sigma_star, 1.0, t_lo, t_hi, resolution).map_err(
            |e| match e {
                Error::Contour { from, to, message } => Error::Contour {
                    from,
                    to,
                    message: format!("interval {j} (({t_lo}, {t_hi}]): {message}"),
                },
                other => other,
            },
        )?;
        if count == 0 {
            free += 1;
        }
    }
    Ok(free as f64 / n as f64)
}

/// θ(t) = Im ln Γ(1/4 + it/2) − (t/2)·ln π, the phase that makes
/// e^{iθ(t)} ζ(1/2 + it) real.
pub fn riemann_siegel_theta(t: f64) -> f64 {
    lngamma(Complex64::new(0.25, t / 2.0)).im - (t / 2.0) * PI.ln()
}

/// Hardy's Z(t): real, same zeros as ζ on the critical line — the sign
/// changes bracket the zero ordinates.
pub fn hardy_z(t: f64, target_error: f64) -> Result<f64> {
    let z = zeta_eval(Complex64::new(0.5, t), target_error)?;
    Ok((Complex64::from_polar(1.0, riemann_siegel_theta(t)) * z.value).re)
}

// ---------------------------------------------------------------------------
// Spec files: flat `key = value` text
// ---------------------------------------------------------------------------

/// Parse a spec file. The `rule` key is required ("zeta", "dirichlet-chi4",
/// or "synthetic:<c0>,<c1>,…"); it fills in the canonical defaults, which
/// the remaining keys may override:
///
/// ```text
/// rule = zeta
/// continuation = euler-maclaurin   # none | euler-maclaurin | hurwitz-euler-maclaurin | polynomial
/// euler_degree = 1
/// sigma_l = 0
/// mu_l = 0.5
/// pole_order_at_1 = 1
/// functional_q = 0.5641895835477563
/// functional_gammas = 0.5:0
/// functional_omega = 1
/// ```
pub fn parse_spec_text(text: &str) -> Result<DirichletSeriesSpec> {
    let mut rule_line = None;
    let mut overrides = Vec::new();
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected `key = value`, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if key == "rule" {
            rule_line = Some(value.to_string());
        } else {
            overrides.push((key.to_string(), value.to_string()));
        }
    }
    let rule = rule_line.ok_or_else(|| Error::Parse("spec file has no `rule` key".into()))?;
    let mut spec = if rule == "zeta" {
        DirichletSeriesSpec::zeta()
    } else if rule == "dirichlet-chi4" {
        DirichletSeriesSpec::dirichlet_chi4()
    } else if let Some(list) = rule.strip_prefix("synthetic:") {
        let coeffs = list
            .split(',')
            .map(parse_complex)
            .collect::<Result<Vec<_>>>()?;
        DirichletSeriesSpec::synthetic(coeffs)?
    } else {
        return Err(Error::Parse(format!("unknown coefficient rule {rule:?}")));
    };
    for (key, value) in overrides {
        apply_override(&mut spec, &key, &value)?;
    }
    spec.validate()?;
    Ok(spec)
}

fn apply_override(spec: &mut DirichletSeriesSpec, key: &str, value: &str) -> Result<()> {
    match key {
        "continuation" => {
            spec.continuation = match value {
                "none" => ContinuationMethod::None,
                "euler-maclaurin" => ContinuationMethod::EulerMaclaurin,
                "hurwitz-euler-maclaurin" => ContinuationMethod::HurwitzEulerMaclaurin,
                "polynomial" => ContinuationMethod::Polynomial,
                _ => {
                    return Err(Error::Parse(format!(
                        "unknown continuation method {value:?}"
                    )))
                }
            };
        }
        "euler_degree" => spec.euler_degree = parse_int(value)?,
        "sigma_l" => spec.sigma_l = parse_float(value)?,
        "mu_l" => spec.mu_l = parse_float(value)?,
        "pole_order_at_1" => spec.pole_order_at_1 = parse_int(value)?,
        "functional_q" => {
            spec.ensure_functional().q = parse_float(value)?;
        }
        "functional_gammas" => {
            let gammas = value
                .split(',')
                .map(|pair| {
                    let (lam, mu) = pair
                        .split_once(':')
                        .ok_or_else(|| Error::Parse(format!("bad gamma factor {pair:?}")))?;
                    Ok((parse_float(lam.trim())?, parse_float(mu.trim())?))
                })
                .collect::<Result<Vec<_>>>()?;
            spec.ensure_functional().gammas = gammas;
        }
        "functional_omega" => {
            spec.ensure_functional().omega = parse_complex(value)?;
        }
        "functional" if value == "none" => spec.functional = None,
        _ => return Err(Error::Parse(format!("unknown spec key {key:?}"))),
    }
    Ok(())
}

impl DirichletSeriesSpec {
    fn ensure_functional(&mut self) -> &mut FunctionalData {
        self.functional.get_or_insert_with(|| FunctionalData {
            q: 1.0,
            gammas: Vec::new(),
            omega: Complex64::new(1.0, 0.0),
        })
    }
}

fn parse_float(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad float {s:?}")))
}

fn parse_int<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad integer {s:?}")))
}

/// Parse a complex literal: "1", "-2.5", "3i", "-i", "1+2i", "1.5e-3-2e+1i".
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let s = text.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty complex literal".into()));
    }
    if let Some(body) = s.strip_suffix(['i', 'I']) {
        let bytes = body.as_bytes();
        let mut split = None;
        for i in (1..bytes.len()).rev() {
            if (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
                split = Some(i);
                break;
            }
        }
        let (re_str, im_str) = match split {
            Some(i) => (&body[..i], &body[i..]),
            None => ("", body),
        };
        let re = if re_str.is_empty() {
            0.0
        } else {
            parse_float(re_str)?
        };
        let im = match im_str {
            "" | "+" => 1.0,
            "-" => -1.0,
            _ => parse_float(im_str)?,
        };
        Ok(Complex64::new(re, im))
    } else {
        Ok(Complex64::new(parse_float(s)?, 0.0))
    }
}
