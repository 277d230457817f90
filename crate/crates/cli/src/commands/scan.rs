//! Shift-scan pipelines: the sup and measure density statistics, the
//! n = 1..n_max shift sequence, and the self-approximation scan.

use serde_json::{json, Value};
use umlab_core::grid::{area, dyadic_partition, Rect, RegionMask};
use umlab_core::lfun::lfun_eval;
use umlab_core::reduction::{Piece, PiecewiseConstantTarget, SampledFunction};
use umlab_core::universality::{
    density_scan, find_shift_sequence, measure_density_scan, ScanConfig, ScanMode, ScanOutcome,
};
use umlab_core::Complex64;

use crate::commands::{fmt, series_spec};
use crate::config::RunConfig;
use crate::output::OutputWriter;
use crate::CliError;

/// Rasterize a disk onto the level-`level` dyadic lattice; the grid
/// window is the disk's bounding box padded by one cell.
fn disk_mask(center: Complex64, radius: f64, level: u32) -> Result<RegionMask, CliError> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(CliError::Usage(format!(
            "parameter `radius`: need a positive radius, got {radius}"
        )));
    }
    let pad = (-(level as f64)).exp2();
    let bbox = Rect::new(
        center.re - radius - pad,
        center.im - radius - pad,
        center.re + radius + pad,
        center.im + radius + pad,
    )?;
    let part = dyadic_partition(bbox, level)?;
    let mask = RegionMask::from_center_predicate(part.grid, |z| (z - center).norm() <= radius);
    if mask.is_empty() {
        return Err(CliError::Usage(format!(
            "disk of radius {radius} captures no cell centers at level {level}; \
             raise `level`"
        )));
    }
    Ok(mask)
}

fn scan_params(
    cfg: &RunConfig,
    default_eps: f64,
    default_t_max: f64,
) -> Result<ScanConfig, CliError> {
    Ok(ScanConfig {
        t_min: cfg.f64_or("t-min", 0.0)?,
        t_max: cfg.f64_or("t-max", default_t_max)?,
        step: cfg.f64_or("step", 0.05)?,
        refine_depth: cfg.u32_or("refine-depth", 0)?,
        epsilon: cfg.f64_or("eps", default_eps)?,
    })
}

fn scan_mode(cfg: &RunConfig) -> Result<ScanMode, CliError> {
    match cfg.str_or("mode", "faithful").as_str() {
        "faithful" => Ok(ScanMode::TheoremFaithful),
        "exploratory" => Ok(ScanMode::Exploratory),
        other => Err(CliError::Usage(format!(
            "parameter `mode`: expected faithful|exploratory, got `{other}`"
        ))),
    }
}

fn write_scan(out: &mut OutputWriter, outcome: &ScanOutcome) -> Result<Value, CliError> {
    let rows: Vec<Vec<String>> = outcome
        .rows
        .iter()
        .map(|r| vec![fmt(r.t), fmt(r.discrepancy), (r.hit as u8).to_string()])
        .collect();
    out.csv("data.csv", &["t", "discrepancy", "hit"], &rows)?;
    let e = &outcome.estimate;
    Ok(json!({
        "epsilon": e.epsilon,
        "T": e.t_max,
        "fraction": e.fraction,
        "hits": e.hits,
        "samples": e.samples,
        "step": e.step,
        "hit_intervals": outcome.hit_intervals,
    }))
}

fn scan_line(outcome: &ScanOutcome) -> String {
    let e = &outcome.estimate;
    let first = outcome
        .hit_intervals
        .first()
        .map(|(a, b)| format!("; first hit interval [{a}, {b}]"))
        .unwrap_or_default();
    format!(
        "fraction {} ({}/{} lattice points hit, eps = {}){first}",
        e.fraction, e.hits, e.samples, e.epsilon
    )
}

pub fn scan(cfg: &RunConfig, out: &mut OutputWriter) -> Result<(String, Value), CliError> {
    let spec = series_spec(cfg)?;
    let center = cfg.complex_or("center", Complex64::new(0.75, 0.0))?;
    let radius = cfg.f64_or("radius", 0.03)?;
    let level = cfg.u32_or("level", 8)?;
    let target = cfg.complex_or("target", Complex64::new(1.0, 0.0))?;
    let config = scan_params(cfg, 0.8, 2000.0)?;
    let mode = scan_mode(cfg)?;
    cfg.finish()?;

    let k = disk_mask(center, radius, level)?;
    let g = PiecewiseConstantTarget::new(
        *k.grid(),
        vec![Piece {
            cells: k.iter_cells().collect(),
            value: target,
        }],
    )?;
    let outcome = density_scan(&spec, &k, &g, config, mode)?;
    let outputs = write_scan(out, &outcome)?;
    Ok((scan_line(&outcome), outputs))
}

pub fn scan_measure(cfg: &RunConfig, out: &mut OutputWriter) -> Result<(String, Value), CliError> {
    let spec = series_spec(cfg)?;
    let center = cfg.complex_or("center", Complex64::new(0.75, 0.0))?;
    let radius = cfg.f64_or("radius", 0.03)?;
    let level = cfg.u32_or("level", 8)?;
    let target = cfg.complex_or("target", Complex64::new(1.0, 0.0))?;
    let eps_approx = cfg.f64_or("eps-approx", 0.8)?;

    let a = disk_mask(center, radius, level)?;
    // The hit threshold is an area; half the mask is a visible default.
    let config = scan_params(cfg, 0.5 * area(&a), 2000.0)?;
    cfg.finish()?;

    let phi = PiecewiseConstantTarget::new(
        *a.grid(),
        vec![Piece {
            cells: a.iter_cells().collect(),
            value: target,
        }],
    )?;
    let outcome = measure_density_scan(&spec, &a, &phi, eps_approx, config)?;
    let outputs = write_scan(out, &outcome)?;
    Ok((scan_line(&outcome), outputs))
}

pub fn sequence(cfg: &RunConfig, out: &mut OutputWriter) -> Result<(String, Value), CliError> {
    let spec = series_spec(cfg)?;
    let rect = cfg.rect_or("box", [0.7, 0.0, 0.8, 0.1])?;
    let level = cfg.u32_or("level", 5)?;
    let value = cfg.complex_or("f", Complex64::new(1.0, 0.0))?;
    let n_max = cfg.u32_or("n-max", 2)?;
    let t_max = cfg.f64_or("t-max", 2000.0)?;
    let step = cfg.f64_or("step", 0.05)?;
    cfg.finish()?;

    let part = dyadic_partition(rect, level)?;
    let domain = RegionMask::from_center_predicate(part.grid, |z| {
        z.re >= rect.x0 && z.re <= rect.x1 && z.im >= rect.y0 && z.im <= rect.y1
    });
    let f = SampledFunction::from_fn(domain, |_| value)?;
    let result = find_shift_sequence(&spec, &f, n_max, t_max, step)?;

    let rows: Vec<Vec<String>> = result
        .entries
        .iter()
        .map(|e| {
            vec![
                e.n.to_string(),
                (e.found as u8).to_string(),
                e.t_n.map(fmt).unwrap_or_default(),
                e.sup_error.map(fmt).unwrap_or_default(),
                e.measure_error.map(fmt).unwrap_or_default(),
            ]
        })
        .collect();
    out.csv(
        "data.csv",
        &["n", "found", "t_n", "sup_error", "measure_error"],
        &rows,
    )?;

    let found = result.entries.iter().filter(|e| e.found).count();
    let line = format!(
        "{found}/{} shifts found up to T = {t_max} (slack {})",
        result.entries.len(),
        result.slack
    );
    let outputs = serde_json::to_value(&result)
        .map_err(|e| CliError::Io(format!("result serialization failed: {e}")))?;
    Ok((line, outputs))
}

pub fn self_approx(cfg: &RunConfig, out: &mut OutputWriter) -> Result<(String, Value), CliError> {
    let spec = series_spec(cfg)?;
    let center = cfg.complex_or("center", Complex64::new(0.75, 0.0))?;
    let radius = cfg.f64_or("radius", 0.03)?;
    let level = cfg.u32_or("level", 8)?;
    let config = scan_params(cfg, 0.1, 50.0)?;
    cfg.finish()?;

    let k = disk_mask(center, radius, level)?;
    let mut values = Vec::with_capacity(k.cell_count());
    for (r, c) in k.iter_cells() {
        let s = k.grid().cell_center(r, c);
        values.push(lfun_eval(&spec, s, config.epsilon / 100.0)?.value);
    }
    let g = SampledFunction::from_values(k.clone(), values)?;
    let outcome = density_scan(&spec, &k, &g, config, ScanMode::TheoremFaithful)?;
    let outputs = write_scan(out, &outcome)?;
    Ok((scan_line(&outcome), outputs))
}
