//! Number-theoretic pipelines: point evaluation, the axiom check suite,
//! the zero census, and the Rouché certificate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use umlab_core::lfun::contour::rouche_compare;
use umlab_core::lfun::{
    euler_product_eval, functional_equation_residual, lfun_eval, prime_mean_square,
    selberg_growth_report, series_eval, zero_count_rectangle, zero_free_interval_fraction,
};
use umlab_core::Complex64;

use crate::commands::{fmt, series_spec};
use crate::config::{format_complex, RunConfig};
use crate::output::OutputWriter;
use crate::CliError;

pub fn zeta_eval(cfg: &RunConfig, out: &mut OutputWriter) -> Result<(String, Value), CliError> {
    let spec = series_spec(cfg)?;
    let s = cfg.complex_or("s", Complex64::new(2.0, 0.0))?;
    let err = cfg.f64_or("err", 1e-10)?;
    cfg.finish()?;

    let r = lfun_eval(&spec, s, err)?;
    out.csv(
        "data.csv",
        &[
            "s_re",
            "s_im",
            "value_re",
            "value_im",
            "error_bound",
            "terms",
        ],
        &[vec![
            fmt(s.re),
            fmt(s.im),
            fmt(r.value.re),
            fmt(r.value.im),
            fmt(r.error_bound),
            r.terms_used.to_string(),
        ]],
    )?;
    let line = format!(
        "L({}) = {}  (error bound {}, {} terms)",
        format_complex(s),
        format_complex(r.value),
        r.error_bound,
        r.terms_used
    );
    let outputs = json!({
        "value_re": r.value.re,
        "value_im": r.value.im,
        "error_bound": r.error_bound,
        "terms_used": r.terms_used,
    });
    Ok((line, outputs))
}

pub fn lfun_check(cfg: &RunConfig, out: &mut OutputWriter) -> Result<(String, Value), CliError> {
    let spec = series_spec(cfg)?;
    let sigma = cfg.f64_or("sigma", 2.0)?;
    let prime_limit = cfg.u64_or("prime-limit", 100_000)?;
    let pms_xs = cfg.f64_list_or("pms-x", &[100.0, 1000.0, 10_000.0])?;
    let growth_p = cfg.u64_or("growth-p-limit", 500)?;
    let probes = cfg.usize_or("probes", 10)?;
    let seed = cfg.u64_or("seed", 0)?;
    cfg.finish()?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut checks: Vec<Value> = Vec::new();
    let mut all_pass = true;
    let push = |rows: &mut Vec<Vec<String>>,
                checks: &mut Vec<Value>,
                all_pass: &mut bool,
                name: &str,
                detail: String,
                statistic: f64,
                bound: f64| {
        let pass = statistic <= bound;
        *all_pass &= pass;
        rows.push(vec![
            name.to_string(),
            detail.clone(),
            fmt(statistic),
            fmt(bound),
            (pass as u8).to_string(),
        ]);
        checks.push(json!({
            "name": name,
            "detail": detail,
            "statistic": statistic,
            "bound": bound,
            "pass": pass,
        }));
    };

    // Axiom (i): the continued evaluator agrees with the raw series in
    // the absolute-convergence half-plane.
    let s0 = Complex64::new(sigma, 0.3);
    let cont = lfun_eval(&spec, s0, 1e-12)?;
    let series = series_eval(&spec, s0, 50_000)?;
    let gap = (cont.value - series.value).norm() / series.value.norm();
    push(
        &mut rows,
        &mut checks,
        &mut all_pass,
        "series-agreement",
        format!("s={}", format_complex(s0)),
        gap,
        1e-8 + cont.error_bound + series.error_bound,
    );

    // Axiom (ii): polynomial Euler product matches the series.  The
    // baseline is the tightly-converged evaluation, not the 50k-term
    // truncation above, whose own tail would swamp the product's.
    let euler = euler_product_eval(&spec, s0, prime_limit)?;
    let egap = (euler.value - cont.value).norm() / cont.value.norm();
    push(
        &mut rows,
        &mut checks,
        &mut all_pass,
        "euler-product",
        format!("P={prime_limit}"),
        egap,
        1e-6,
    );

    // Axiom (iii): Selberg-style coefficient growth |b(p^k)| ≤ p^{kθ}
    // with θ = 1/2 (comfortable for degree-one unimodular data).
    let growth = selberg_growth_report(&spec, growth_p, 3, 0.5)?;
    let worst = growth
        .iter()
        .map(|row| row.b_modulus / row.reference)
        .fold(0.0f64, f64::max);
    push(
        &mut rows,
        &mut checks,
        &mut all_pass,
        "coefficient-growth",
        format!("p≤{growth_p} k≤3"),
        worst,
        1.0 + 1e-12,
    );

    // Axiom (iv): prime mean square at each requested x.
    for &x in &pms_xs {
        let v = prime_mean_square(&spec, x)?;
        push(
            &mut rows,
            &mut checks,
            &mut all_pass,
            "prime-mean-square",
            format!("x={x}"),
            (v - 1.0).abs(),
            1e-12,
        );
    }

    // Functional equation residual at seeded random strip points, kept
    // away from s = 0 and s = 1 by the height offset.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_residual = 0.0f64;
    for _ in 0..probes {
        let s = Complex64::new(rng.gen_range(0.2..0.8), rng.gen_range(2.0..30.0));
        max_residual = max_residual.max(functional_equation_residual(&spec, s)?);
    }
    push(
        &mut rows,
        &mut checks,
        &mut all_pass,
        "functional-equation",
        format!("{probes} points seed {seed}"),
        max_residual,
        1e-8,
    );

    out.csv(
        "data.csv",
        &["check", "detail", "statistic", "bound", "pass"],
        &rows,
    )?;
    let line = if all_pass {
        format!("all {} checks pass", rows.len())
    } else {
        let failed: Vec<&str> = rows
            .iter()
            .filter(|r| r[4] == "0")
            .map(|r| r[0].as_str())
            .collect();
        format!("FAILED: {}", failed.join(", "))
    };
    Ok((line, json!({ "all_pass": all_pass, "checks": checks })))
}

pub fn zeros_census(cfg: &RunConfig, out: &mut OutputWriter) -> Result<(String, Value), CliError> {
    let spec = series_spec(cfg)?;
    let sigma_star = cfg.f64_or("sigma-star", 0.6)?;
    let sigma_hi = cfg.f64_or("sigma-hi", 1.2)?;
    let t_max = cfg.f64_or("T", 100.0)?;
    let n = cfg.u32_or("n", 5)?;
    if n == 0 {
        return Err(CliError::Usage(
            "parameter `n`: need at least one interval".into(),
        ));
    }
    let m = cfg.f64_or("m", t_max / n as f64)?;
    let resolution = cfg.u32_or("resolution", 16)?;
    cfg.finish()?;

    let count = zero_count_rectangle(&spec, sigma_star, sigma_hi, 0.0, t_max, resolution)?;
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for j in 1..=n {
        let fraction = zero_free_interval_fraction(&spec, sigma_star, m, j, resolution)?;
        rows.push(vec![j.to_string(), fmt(fraction)]);
        table.push(json!({ "n": j, "fraction": fraction }));
    }
    out.csv("data.csv", &["n", "nu_over_n"], &rows)?;

    let last = rows.last().expect("n >= 1").clone();
    let line = format!(
        "{count} zeros in [{sigma_star}, {sigma_hi}] x [0, {t_max}]; v({n})/{n} = {}",
        last[1]
    );
    let outputs = json!({
        "count": count,
        "rectangle": { "sigma": [sigma_star, sigma_hi], "t": [0.0, t_max] },
        "interval_length": m,
        "table": table,
    });
    Ok((line, outputs))
}

pub fn rouche(cfg: &RunConfig, out: &mut OutputWriter) -> Result<(String, Value), CliError> {
    let spec = series_spec(cfg)?;
    let rect = cfg.rect_or("rect", [0.3, 13.0, 0.7, 15.5])?;
    let delta = cfg.complex_or("delta", Complex64::new(0.02, 0.0))?;
    let per_edge = cfg.usize_or("samples", 64)?;
    if per_edge == 0 {
        return Err(CliError::Usage(
            "parameter `samples`: need at least 1 per edge".into(),
        ));
    }
    cfg.finish()?;

    // Counterclockwise rectangle walk, corner points once each.
    let corners = [
        Complex64::new(rect.x0, rect.y0),
        Complex64::new(rect.x1, rect.y0),
        Complex64::new(rect.x1, rect.y1),
        Complex64::new(rect.x0, rect.y1),
    ];
    let mut points = Vec::with_capacity(4 * per_edge);
    for e in 0..4 {
        let a = corners[e];
        let b = corners[(e + 1) % 4];
        for i in 0..per_edge {
            points.push(a + (b - a) * (i as f64 / per_edge as f64));
        }
    }
    let mut g_samples = Vec::with_capacity(points.len());
    for &p in &points {
        g_samples.push(lfun_eval(&spec, p, 1e-10)?.value);
    }
    let f_samples: Vec<Complex64> = g_samples.iter().map(|&g| g + delta).collect();
    let cert = rouche_compare(&f_samples, &g_samples)?;

    let mut rows = Vec::with_capacity(points.len());
    let mut min_reference = f64::INFINITY;
    for (i, (&p, &g)) in points.iter().zip(&g_samples).enumerate() {
        min_reference = min_reference.min(g.norm());
        rows.push(vec![
            i.to_string(),
            fmt(p.re),
            fmt(p.im),
            fmt(g.norm()),
            fmt(delta.norm()),
        ]);
    }
    out.csv(
        "data.csv",
        &["index", "s_re", "s_im", "abs_g", "abs_diff"],
        &rows,
    )?;

    let line = format!(
        "Rouche certificate: winding {} = {} under perturbation |{}| (min |g| on contour {})",
        cert.winding_f,
        cert.winding_g,
        format_complex(delta),
        min_reference
    );
    let outputs = json!({
        "winding_f": cert.winding_f,
        "winding_g": cert.winding_g,
        "min_reference": min_reference,
        "perturbation": delta.norm(),
        "samples": points.len(),
    });
    Ok((line, outputs))
}
