//! Plane-geometry pipelines: the zero-free polynomial corollary, the
//! Dirichlet skeleton, boundary densities, and the harmonic fitter.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use umlab_core::grid::{dyadic_partition, Rect, RegionMask};
use umlab_core::planar::{
    boundary_density, build_dirichlet_skeleton, harmonic_fit, mean_value_residual, DomainSpec,
};
use umlab_core::polyfree::zero_free_approx_in_measure;
use umlab_core::reduction::SampledFunction;
use umlab_core::Complex64;

use crate::commands::fmt;
use crate::config::{format_complex, RunConfig};
use crate::output::OutputWriter;
use crate::CliError;

pub fn polyfree(cfg: &RunConfig, out: &mut OutputWriter) -> Result<(String, Value), CliError> {
    let rect = cfg.rect_or("box", [0.0, 0.0, 1.0, 1.0])?;
    let level = cfg.u32_or("level", 5)?;
    let eps = cfg.f64_or("eps", 0.1)?;
    let degree = cfg.u32_or("degree", 48)?;
    let target = cfg.str_or("target", "z");
    let value = cfg.complex_or("value", Complex64::new(0.8, 0.1))?;
    cfg.finish()?;

    let part = dyadic_partition(rect, level)?;
    let domain = RegionMask::full(part.grid);
    let g = match target.as_str() {
        "z" => SampledFunction::from_fn(domain, |z| z)?,
        "zero" => SampledFunction::from_fn(domain, |_| Complex64::new(0.0, 0.0))?,
        "const" => SampledFunction::from_fn(domain, |_| value)?,
        other => {
            return Err(CliError::Usage(format!(
                "parameter `target`: expected z|zero|const, got `{other}`"
            )))
        }
    };
    let (poly, report) = zero_free_approx_in_measure(&g, eps, degree)?;

    let rows: Vec<Vec<String>> = poly
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, c)| vec![k.to_string(), fmt(c.re), fmt(c.im)])
        .collect();
    out.csv("data.csv", &["k", "coeff_re", "coeff_im"], &rows)?;
    out.mask("keps.mask.txt", &report.k_eps)?;

    let line = format!(
        "degree {}: sup error on K_eps {}, min modulus {}, area removed {}, plateau {}",
        poly.degree().unwrap_or(0),
        report.sup_error_on_keps,
        report.min_modulus_on_keps,
        report.area_removed,
        report.plateau
    );
    let outputs = json!({
        "degree": poly.degree().unwrap_or(0),
        "coefficients": poly,
        "plateau": report.plateau,
        "sup_error_on_keps": report.sup_error_on_keps,
        "min_modulus_on_keps": report.min_modulus_on_keps,
        "min_modulus_on_k": report.min_modulus_on_k,
        "area_removed": report.area_removed,
    });
    Ok((line, outputs))
}

/// Disk domain shared by `dirichlet-build` and `density`.
fn disk_domain(cfg: &RunConfig) -> Result<DomainSpec, CliError> {
    let center = cfg.point_or("center", (0.0, 0.0))?;
    let radius = cfg.f64_or("radius", 0.95)?;
    let level = cfg.u32_or("level", 6)?;
    let samples = cfg.usize_or("samples", 64)?;
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(CliError::Usage(format!(
            "parameter `radius`: need a positive radius, got {radius}"
        )));
    }
    let pad = 2.0 * (-(level as f64)).exp2();
    let bbox = Rect::new(
        center.re - radius - pad,
        center.im - radius - pad,
        center.re + radius + pad,
        center.im + radius + pad,
    )?;
    let part = dyadic_partition(bbox, level)?;
    DomainSpec::disk(part.grid, center, radius, samples).map_err(CliError::Core)
}

pub fn dirichlet_build(
    cfg: &RunConfig,
    out: &mut OutputWriter,
) -> Result<(String, Value), CliError> {
    let u = disk_domain(cfg)?;
    let disks = cfg.u32_or("disks", 6)?;
    let phi_kind = cfg.str_or("phi", "re");
    cfg.finish()?;

    let phi: Vec<f64> = match phi_kind.as_str() {
        "re" => u.boundary_samples().iter().map(|p| p.re).collect(),
        "im" => u.boundary_samples().iter().map(|p| p.im).collect(),
        "one" => vec![1.0; u.boundary_samples().len()],
        other => {
            return Err(CliError::Usage(format!(
                "parameter `phi`: expected re|im|one, got `{other}`"
            )))
        }
    };
    let skel = build_dirichlet_skeleton(&u, &phi, disks)?;

    let mut rows = Vec::new();
    for (j, ((x, r), shell)) in skel
        .family
        .disks
        .iter()
        .zip(&skel.family.shells)
        .enumerate()
    {
        rows.push(vec![
            j.to_string(),
            fmt(x.re),
            fmt(x.im),
            fmt(*r),
            fmt(skel.family.budgets[j]),
            shell.cell_count().to_string(),
        ]);
    }
    out.csv(
        "data.csv",
        &[
            "disk",
            "center_re",
            "center_im",
            "radius",
            "budget",
            "shell_cells",
        ],
        &rows,
    )?;

    let piece_rows: Vec<Vec<String>> = skel
        .g
        .pieces()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            vec![
                i.to_string(),
                p.cells.len().to_string(),
                fmt(p.value.re),
                fmt(p.value.im),
            ]
        })
        .collect();
    out.csv(
        "pieces.csv",
        &["piece", "cells", "value_re", "value_im"],
        &piece_rows,
    )?;

    out.mask("core.mask.txt", &skel.core)?;
    out.mask("f.mask.txt", &skel.f)?;
    for (j, shell) in skel.family.shells.iter().enumerate() {
        out.mask(&format!("shell_{j}.mask.txt"), shell)?;
    }

    let line = format!(
        "{} disk(s), core {} cells, F {} cells, {} piece(s)",
        skel.family.disks.len(),
        skel.core.cell_count(),
        skel.f.cell_count(),
        skel.g.pieces().len()
    );
    let outputs = json!({
        "disks": skel.family.disks.len(),
        "budgets": skel.family.budgets,
        "core_cells": skel.core.cell_count(),
        "f_cells": skel.f.cell_count(),
        "pieces": skel.g.pieces().len(),
    });
    Ok((line, outputs))
}

pub fn density(cfg: &RunConfig, out: &mut OutputWriter) -> Result<(String, Value), CliError> {
    let u = disk_domain(cfg)?;
    let p_index = cfg.usize_or("p-index", 0)?;
    let set = cfg.str_or("set", "right");
    let radii = cfg.f64_list_or("radii", &[0.6, 0.4, 0.25, 0.1])?;
    cfg.finish()?;

    let p = *u.boundary_samples().get(p_index).ok_or_else(|| {
        CliError::Usage(format!(
            "parameter `p-index`: {p_index} out of range, {} samples",
            u.boundary_samples().len()
        ))
    })?;
    let center = {
        // midpoint of the domain's bounding box = the disk's center.
        let b = u.mask().bounding_rect().expect("domain is nonempty");
        Complex64::new(0.5 * (b.x0 + b.x1), 0.5 * (b.y0 + b.y1))
    };
    let grid = *u.grid();
    let keep = |z: Complex64| match set.as_str() {
        "right" => z.re >= center.re,
        "left" => z.re <= center.re,
        "upper" => z.im >= center.im,
        "lower" => z.im <= center.im,
        "all" => true,
        _ => true,
    };
    if !matches!(set.as_str(), "right" | "left" | "upper" | "lower" | "all") {
        return Err(CliError::Usage(format!(
            "parameter `set`: expected right|left|upper|lower|all, got `{set}`"
        )));
    }
    let a = RegionMask::from_cells(
        grid,
        u.mask()
            .iter_cells()
            .filter(|&(r, c)| keep(grid.cell_center(r, c))),
    )?;
    let ratios = boundary_density(&a, &u, p, &radii)?;

    let rows: Vec<Vec<String>> = ratios
        .iter()
        .map(|(r, q)| vec![fmt(*r), q.map(fmt).unwrap_or_default()])
        .collect();
    out.csv("data.csv", &["r", "ratio"], &rows)?;
    out.mask("set.mask.txt", &a)?;

    let line = format!(
        "density of `{set}` at p = {} across {} radii: {}",
        format_complex(p),
        ratios.len(),
        ratios
            .iter()
            .map(|(_, q)| q.map(fmt).unwrap_or_else(|| "-".into()))
            .collect::<Vec<_>>()
            .join(", ")
    );
    let outputs = json!({
        "p_re": p.re,
        "p_im": p.im,
        "set": set,
        "rows": ratios
            .iter()
            .map(|(r, q)| json!({ "r": r, "ratio": q }))
            .collect::<Vec<_>>(),
    });
    Ok((line, outputs))
}

pub fn harmonic_demo(cfg: &RunConfig, out: &mut OutputWriter) -> Result<(String, Value), CliError> {
    let level = cfg.u32_or("level", 6)?;
    let sources = cfg.usize_or("sources", 64)?;
    let probes = cfg.usize_or("probes", 20)?;
    let seed = cfg.u64_or("seed", 1)?;
    let disk_radius = cfg.f64_or("disk-radius", 0.14)?;
    cfg.finish()?;

    if !(disk_radius > 0.0 && disk_radius < 0.22) {
        return Err(CliError::Usage(format!(
            "parameter `disk-radius`: the two data disks must stay disjoint \
             inside the unit square, need 0 < r < 0.22, got {disk_radius}"
        )));
    }

    let part = dyadic_partition(Rect::new(0.0, 0.0, 1.0, 1.0)?, level)?;
    let grid = part.grid;
    let c1 = Complex64::new(0.28, 0.5);
    let c2 = Complex64::new(0.72, 0.5);
    let m1 = RegionMask::from_center_predicate(grid, |z| (z - c1).norm() <= disk_radius);
    let m2 = RegionMask::from_center_predicate(grid, |z| (z - c2).norm() <= disk_radius);
    let pieces = [(m1, 0.0), (m2, 1.0)];
    let fit = harmonic_fit(&pieces, sources)?;

    // Seeded probe circles, kept clear of every log source so the
    // mean-value property is testable on each.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut max_residual = 0.0f64;
    let mut attempts = 0;
    while rows.len() < probes {
        attempts += 1;
        if attempts > 200 * probes.max(1) {
            return Err(CliError::Core(umlab_core::Error::Geometry(
                "probe placement exhausted its attempts; the sources leave no room".into(),
            )));
        }
        let center = Complex64::new(rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9));
        let radius = rng.gen_range(0.02..0.05);
        let clear = fit
            .sources
            .iter()
            .all(|([x, y], _)| (center - Complex64::new(*x, *y)).norm() > radius + 0.01);
        if !clear {
            continue;
        }
        let residual = mean_value_residual(&fit, center, radius, 256)?;
        max_residual = max_residual.max(residual);
        rows.push(vec![
            fmt(center.re),
            fmt(center.im),
            fmt(radius),
            fmt(residual),
        ]);
    }
    out.csv("data.csv", &["x", "y", "r", "residual"], &rows)?;

    let line = format!(
        "fit error {} with {} sources; max mean-value residual {} over {} probes",
        fit.fit_error,
        fit.sources.len(),
        max_residual,
        probes
    );
    let outputs = json!({
        "fit_error": fit.fit_error,
        "sources_placed": fit.sources.len(),
        "max_residual": max_residual,
        "probes": probes,
        "fit": fit,
    });
    Ok((line, outputs))
}
