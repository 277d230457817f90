//! Plane-domain machinery: lens areas, thin shells with density budgets,
//! boundary-relative density, the Dirichlet-in-measure skeleton, and a
//! fundamental-solution harmonic fitter.
//!
//! Everything here lives on dyadic masks. The guiding estimate is the
//! two-disk lens: a removed set whose area stays below `budget ·
//! lens_area(h, h)` meets every boundary ball in relative measure below
//! `budget`. At grid resolution the strict area form of that bound is
//! often unattainable (a connected ring can't be thinner than one cell),
//! so construction keeps shells as thin as connectivity allows and the
//! density claims are verified directly, with an explicit grid slack.

use crate::error::{Error, Result};
use crate::grid::{self, GridSpec, RegionMask};
use crate::reduction::{reduce_to_piecewise, PiecewiseConstantTarget, SampledFunction};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Orthogonalization stop for the harmonic fitter, matching the
/// polynomial fitter's threshold.
const CONDITION_CAP: f64 = 1e12;
/// Ring half-widths to try, in cell sides: the first 4-connected ring
/// wins. 0.75 guarantees every cell the circle passes through is caught.
const RING_LADDER: [f64; 7] = [0.75, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0];

/// An open set modeled by a mask of interior cells, together with
/// sample points on its topological boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    u: RegionMask,
    boundary_samples: Vec<Complex64>,
}

impl DomainSpec {
    /// Samples must lie within one cell (diagonal) of the mask's
    /// boundary layer.
    pub fn new(u: RegionMask, boundary_samples: Vec<Complex64>) -> Result<Self> {
        if u.is_empty() {
            return Err(Error::Validation("domain mask has no cells".into()));
        }
        if boundary_samples.is_empty() {
            return Err(Error::Validation(
                "need at least one boundary sample".into(),
            ));
        }
        let tol = u.grid().cell_side() * std::f64::consts::SQRT_2;
        let layer = boundary_centers(&u);
        for (i, p) in boundary_samples.iter().enumerate() {
            let d = layer
                .iter()
                .map(|b| (p - b).norm())
                .fold(f64::INFINITY, f64::min);
            if d > tol {
                return Err(Error::Validation(format!(
                    "boundary sample {i} at ({}, {}) sits {d:.3e} from the mask \
                     boundary (limit {tol:.3e})",
                    p.re, p.im
                )));
            }
        }
        Ok(DomainSpec {
            u,
            boundary_samples,
        })
    }

    pub fn mask(&self) -> &RegionMask {
        &self.u
    }

    pub fn grid(&self) -> &GridSpec {
        self.u.grid()
    }

    pub fn boundary_samples(&self) -> &[Complex64] {
        &self.boundary_samples
    }

    /// Disk domain helper: cells with center within `radius` of
    /// `center`, boundary sampled uniformly on the circle.
    pub fn disk(grid: GridSpec, center: Complex64, radius: f64, samples: usize) -> Result<Self> {
        if !(radius > 0.0) || samples == 0 {
            return Err(Error::Validation(
                "disk needs radius > 0 and samples > 0".into(),
            ));
        }
        let u = RegionMask::from_center_predicate(grid, |z| (z - center).norm() <= radius);
        let pts = (0..samples)
            .map(|i| {
                let th = 2.0 * std::f64::consts::PI * i as f64 / samples as f64;
                center + radius * Complex64::new(th.cos(), th.sin())
            })
            .collect();
        DomainSpec::new(u, pts)
    }
}

/// Covering disks, their shells, and the density budget assigned to
/// each shell (deepest disk first, budget 2^{-1} down to 2^{-J}).
#[derive(Debug, Clone, PartialEq)]
pub struct ShellFamily {
    pub disks: Vec<(Complex64, f64)>,
    pub shells: Vec<RegionMask>,
    pub budgets: Vec<f64>,
}

/// Harmonic function Σ wᵢ log|x − qᵢ| plus a harmonic polynomial in the
/// fixed basis 1, x, y, x²−y², 2xy, Re z³, Im z³.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicFit {
    pub sources: Vec<([f64; 2], f64)>,
    pub poly_coeffs: Vec<f64>,
    pub fit_error: f64,
}

pub(crate) fn harmonic_basis(x: f64, y: f64) -> [f64; 7] {
    [
        1.0,
        x,
        y,
        x * x - y * y,
        2.0 * x * y,
        x * x * x - 3.0 * x * y * y,
        3.0 * x * x * y - y * y * y,
    ]
}

impl HarmonicFit {
    pub fn eval(&self, z: Complex64) -> f64 {
        let mut v = 0.0;
        for (c, b) in self.poly_coeffs.iter().zip(harmonic_basis(z.re, z.im)) {
            v += c * b;
        }
        for ([qx, qy], w) in &self.sources {
            v += w * (z - Complex64::new(*qx, *qy)).norm().ln();
        }
        v
    }
}

/// Area of the intersection of two radius-`h` disks at center distance
/// `d`: 2h²·arccos(d/2h) − (d/2)·√(4h² − d²), zero once they separate.
pub fn lens_area(h: f64, d: f64) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Validation(format!(
            "lens radius must be positive, got {h}"
        )));
    }
    if !(d >= 0.0) || !d.is_finite() {
        return Err(Error::Validation(format!(
            "center distance must be ≥ 0, got {d}"
        )));
    }
    if d >= 2.0 * h {
        return Ok(0.0);
    }
    Ok(2.0 * h * h * (d / (2.0 * h)).acos() - 0.5 * d * (4.0 * h * h - d * d).sqrt())
}

fn boundary_centers(mask: &RegionMask) -> Vec<Complex64> {
    let g = mask.grid();
    mask.boundary_cells()
        .into_iter()
        .map(|(r, c)| g.cell_center(r, c))
        .collect()
}

/// 4-connected components of a mask, row-major discovery order.
fn mask_components(mask: &RegionMask) -> Vec<Vec<(u32, u32)>> {
    let g = mask.grid();
    let mut seen = vec![false; g.cell_count()];
    let idx = |r: u32, c: u32| r as usize * g.width() as usize + c as usize;
    let mut out = Vec::new();
    for (r0, c0) in mask.iter_cells() {
        if seen[idx(r0, c0)] {
            continue;
        }
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([(r0, c0)]);
        seen[idx(r0, c0)] = true;
        while let Some((r, c)) = queue.pop_front() {
            comp.push((r, c));
            let mut push = |rr: i64, cc: i64| {
                if rr >= 0 && cc >= 0 && (rr as u32) < g.height() && (cc as u32) < g.width() {
                    let (rr, cc) = (rr as u32, cc as u32);
                    if mask.contains(rr, cc) && !seen[idx(rr, cc)] {
                        seen[idx(rr, cc)] = true;
                        queue.push_back((rr, cc));
                    }
                }
            };
            push(r as i64 - 1, c as i64);
            push(r as i64 + 1, c as i64);
            push(r as i64, c as i64 - 1);
            push(r as i64, c as i64 + 1);
        }
        out.push(comp);
    }
    out
}

/// Thinnest 4-connected ring of `u` cells tracking the circle. Errors
/// if the circle leaves the mask or no ladder width connects.
fn thin_ring(u: &RegionMask, center: Complex64, radius: f64) -> Result<RegionMask> {
    let g = u.grid();
    let cs = g.cell_side();
    // Cells the circle itself passes through must be present in u.
    let mut circle_cells = Vec::new();
    for i in 0..64 {
        let th = 2.0 * std::f64::consts::PI * i as f64 / 64.0;
        let p = center + radius * Complex64::new(th.cos(), th.sin());
        match g.cell_at(p) {
            Some((r, c)) if u.contains(r, c) => circle_cells.push((r, c)),
            _ => {
                return Err(Error::Geometry(format!(
                    "circle of radius {radius} around ({}, {}) leaves the domain mask",
                    center.re, center.im
                )))
            }
        }
    }
    for t in RING_LADDER {
        let hw = t * cs;
        let ring =
            RegionMask::from_center_predicate(*g, |z| ((z - center).norm() - radius).abs() <= hw);
        let ring = intersect(&ring, u);
        if ring.is_empty() {
            continue;
        }
        if circle_cells.iter().any(|&(r, c)| !ring.contains(r, c)) {
            continue;
        }
        if mask_components(&ring).len() == 1 {
            return Ok(ring);
        }
    }
    Err(Error::Geometry(format!(
        "no connected ring of width ≤ {:.1} cells tracks the circle of radius {radius}",
        RING_LADDER[RING_LADDER.len() - 1]
    )))
}

fn intersect(a: &RegionMask, b: &RegionMask) -> RegionMask {
    RegionMask::from_cells(*a.grid(), a.iter_cells().filter(|&(r, c)| b.contains(r, c)))
        .expect("cells come from a valid mask")
}

fn subtract(a: &RegionMask, b: &RegionMask) -> RegionMask {
    RegionMask::from_cells(
        *a.grid(),
        a.iter_cells().filter(|&(r, c)| !b.contains(r, c)),
    )
    .expect("cells come from a valid mask")
}

/// Connected annular neighborhood of the circle `(center, radius)` with
/// area below `budget · lens_area(h, h)`. The circle must clear the
/// domain boundary by more than 2h on the grid.
pub fn shell_construct(
    center: Complex64,
    radius: f64,
    u: &DomainSpec,
    budget: f64,
    h: f64,
) -> Result<RegionMask> {
    if !(h > 0.0) || !(budget > 0.0) || !(radius > 0.0) {
        return Err(Error::Validation(
            "shell needs radius > 0, budget > 0 and h > 0".into(),
        ));
    }
    let clearance = boundary_centers(&u.u)
        .iter()
        .map(|b| ((b - center).norm() - radius).abs())
        .fold(f64::INFINITY, f64::min);
    if clearance <= 2.0 * h {
        return Err(Error::Geometry(format!(
            "circle clears the boundary by {clearance:.4}, need more than 2h = {}",
            2.0 * h
        )));
    }
    let bound = budget * lens_area(h, h)?;
    let cell = u.grid().cell_area();
    if bound <= cell {
        return Err(Error::InfeasibleBudget(format!(
            "area budget {bound:.3e} is below one cell ({cell:.3e})"
        )));
    }
    let ring = thin_ring(&u.u, center, radius)?;
    let got = grid::area(&ring);
    if got >= bound {
        return Err(Error::InfeasibleBudget(format!(
            "thinnest connected ring has area {got:.3e}, budget allows {bound:.3e}; \
             a finer grid is needed"
        )));
    }
    Ok(ring)
}

/// Relative density of `a` against the domain in balls around the
/// boundary point `p`: for each radius, area(A ∩ B(p,r)) / area(U ∩
/// B(p,r)), or None when the denominator is empty on this grid.
pub fn boundary_density(
    a: &RegionMask,
    u: &DomainSpec,
    p: Complex64,
    radii: &[f64],
) -> Result<Vec<(f64, Option<f64>)>> {
    if !u.boundary_samples.iter().any(|s| (s - p).norm() < 1e-9) {
        return Err(Error::Validation(format!(
            "({}, {}) is not one of the domain's boundary samples",
            p.re, p.im
        )));
    }
    for w in radii.windows(2) {
        if w[1] > w[0] {
            return Err(Error::Validation(
                "radii must be given in descending order".into(),
            ));
        }
    }
    if radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::Validation("radii must be positive".into()));
    }
    let g = u.grid();
    let cell = g.cell_area();
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut num = 0usize;
        let mut den = 0usize;
        for (row, col) in u.u.iter_cells() {
            if (g.cell_center(row, col) - p).norm() <= r {
                den += 1;
                if a.contains(row, col) {
                    num += 1;
                }
            }
        }
        let ratio = (den > 0).then(|| num as f64 * cell / (den as f64 * cell));
        out.push((r, ratio));
    }
    Ok(out)
}

/// Everything the skeleton verification needs to recompute the budget
/// chain. `core` is the truncation the disks cover: U minus a collar
/// whose depth the construction adapts to the disk count. All density
/// slack near the boundary beyond the shell budgets is the measured
/// collar plus one grid layer per active shell.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub family: ShellFamily,
    pub core: RegionMask,
    pub f: RegionMask,
    pub g: PiecewiseConstantTarget,
}

/// Cover a truncation of U by `j_count` disks (deepest first), ring
/// each disk's boundary circle with a thin shell carrying budget 2^{-j},
/// and put the boundary data on the leftover compact pieces.
pub fn build_dirichlet_skeleton(u: &DomainSpec, phi: &[f64], j_count: u32) -> Result<Skeleton> {
    if j_count == 0 {
        return Err(Error::Validation("need at least one covering disk".into()));
    }
    if phi.len() != u.boundary_samples.len() {
        return Err(Error::Validation(format!(
            "{} boundary values for {} samples",
            phi.len(),
            u.boundary_samples.len()
        )));
    }
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("boundary values must be finite".into()));
    }
    if mask_components(&u.u).len() != 1 {
        return Err(Error::Geometry("domain mask is not connected".into()));
    }
    let g = *u.grid();
    let cs = g.cell_side();
    let bc = boundary_centers(&u.u);

    // Distance-to-boundary field over U's cells.
    let cells: Vec<(u32, u32)> = u.u.iter_cells().collect();
    let depth: Vec<f64> = cells
        .iter()
        .map(|&(r, c)| {
            let z = g.cell_center(r, c);
            bc.iter()
                .map(|b| (z - b).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let max_depth = depth.iter().copied().fold(0.0f64, f64::max);

    // Adaptive truncation: deepen the collar until j_count disks cover
    // what is left, keeping the collar as thin as the cover allows.
    // Each disk is centered 40% deeper than the cell it must reach —
    // depth there is larger, so the 0.3·depth radius covers more while
    // the diameter stays below the center's boundary distance.
    let point_depth = |p: Complex64| {
        bc.iter()
            .map(|b| (p - b).norm())
            .fold(f64::INFINITY, f64::min)
    };
    // A candidate cover: the chosen disks and the core-cell indices left over.
    type Cover = (Vec<(Complex64, f64)>, Vec<usize>);
    let mut delta = 2.0 * cs;
    let mut cover: Option<Cover> = None;
    while delta <= max_depth {
        let core: Vec<usize> = (0..cells.len()).filter(|&i| depth[i] >= delta).collect();
        if core.is_empty() {
            break;
        }
        let mut covered = vec![false; cells.len()];
        let mut disks = Vec::new();
        for _ in 0..j_count {
            let Some(&deepest) = core
                .iter()
                .filter(|&&i| !covered[i])
                .max_by(|&&a, &&b| depth[a].total_cmp(&depth[b]))
            else {
                break;
            };
            let cell_pt = g.cell_center(cells[deepest].0, cells[deepest].1);
            let near_b = bc
                .iter()
                .copied()
                .min_by(|a, b| (cell_pt - a).norm().total_cmp(&(cell_pt - b).norm()))
                .expect("connected domains have boundary cells");
            let inward = (cell_pt - near_b) / (cell_pt - near_b).norm();
            let mut x = cell_pt + inward * (0.4 * depth[deepest]);
            let mut r = 0.3 * point_depth(x);
            if (x - cell_pt).norm() > r {
                // Non-convex pocket: the inward ray gained no depth, so
                // fall back to the cell itself.
                x = cell_pt;
                r = 0.3 * depth[deepest];
            }
            for &i in &core {
                if (g.cell_center(cells[i].0, cells[i].1) - x).norm() <= r {
                    covered[i] = true;
                }
            }
            disks.push((x, r));
        }
        if core.iter().all(|&i| covered[i]) {
            cover = Some((disks, core));
            break;
        }
        delta *= 1.2;
    }
    let Some((mut disks, core_idx)) = cover else {
        return Err(Error::Geometry(format!(
            "{j_count} disks cannot cover any truncation of the domain at this resolution"
        )));
    };
    disks.sort_by(|a, b| {
        point_depth(b.0)
            .total_cmp(&point_depth(a.0))
            .then(a.0.re.total_cmp(&b.0.re))
            .then(a.0.im.total_cmp(&b.0.im))
    });

    // Budgets 2^{-1}, 2^{-2}, … assigned deepest-first, so the shells a
    // small boundary ball can meet carry the small tail budgets.
    let budgets: Vec<f64> = (0..disks.len())
        .map(|j| 0.5f64.powi(j as i32 + 1))
        .collect();
    let mut shells = Vec::with_capacity(disks.len());
    for &(x, r) in &disks {
        // The disk's own boundary gap is 0.7·depth by construction, but
        // a re-entrant wall elsewhere can still graze the circle; keep
        // two cells of true clearance so the shell stays compactly
        // inside U.
        let clearance = bc
            .iter()
            .map(|b| ((b - x).norm() - r).abs())
            .fold(f64::INFINITY, f64::min);
        if clearance <= 2.0 * cs {
            return Err(Error::Geometry(format!(
                "shell at ({}, {}) has no margin to the boundary",
                x.re, x.im
            )));
        }
        shells.push(thin_ring(&u.u, x, r)?);
    }

    let core = RegionMask::from_cells(g, core_idx.iter().map(|&i| cells[i]))?;
    let mut f = core.clone();
    for shell in &shells {
        f = subtract(&f, shell);
    }

    // Pieces: each F cell goes to its first covering disk; the value is
    // φ at the boundary sample nearest the piece's anchor cell.
    let mut piece_cells: Vec<Vec<(u32, u32)>> = vec![Vec::new(); disks.len()];
    'cell: for (r, c) in f.iter_cells() {
        let z = g.cell_center(r, c);
        for (j, &(x, radius)) in disks.iter().enumerate() {
            if (z - x).norm() <= radius {
                piece_cells[j].push((r, c));
                continue 'cell;
            }
        }
        return Err(Error::Geometry(
            "leftover cell escaped every covering disk".into(),
        ));
    }
    let mut pieces = Vec::new();
    for cells_j in piece_cells.into_iter().filter(|p| !p.is_empty()) {
        let anchor = g.cell_center(cells_j[0].0, cells_j[0].1);
        let nearest = u
            .boundary_samples
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (anchor - *a).norm().total_cmp(&(anchor - *b).norm()))
            .map(|(i, _)| i)
            .expect("samples are nonempty");
        pieces.push(crate::reduction::Piece {
            cells: cells_j,
            value: Complex64::new(phi[nearest], 0.0),
        });
    }
    if pieces.is_empty() {
        return Err(Error::Geometry(
            "shells swallowed the entire truncation; nothing left to carry values".into(),
        ));
    }
    let target = PiecewiseConstantTarget::new(g, pieces)?;
    Ok(Skeleton {
        family: ShellFamily {
            disks,
            shells,
            budgets,
        },
        core,
        f,
        g: target,
    })
}

/// Real least squares via modified Gram–Schmidt (one reorthogonalization
/// pass). Returns coefficients and how many columns survived the
/// condition cap.
fn real_lsq(cols: &[Vec<f64>], rhs: &[f64]) -> (Vec<f64>, usize) {
    let n = rhs.len();
    let m = cols.len();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut r = vec![vec![0.0f64; m]; m];
    let mut max_diag = 0.0f64;
    let mut used = m;
    for k in 0..m {
        let mut v = cols[k].clone();
        for _pass in 0..2 {
            for (j, qj) in q.iter().enumerate() {
                let proj: f64 = qj.iter().zip(&v).map(|(a, b)| a * b).sum();
                for i in 0..n {
                    v[i] -= proj * qj[i];
                }
                r[j][k] += proj;
            }
        }
        let d = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        max_diag = max_diag.max(d);
        if d * CONDITION_CAP <= max_diag {
            used = k;
            break;
        }
        r[k][k] = d;
        for x in &mut v {
            *x /= d;
        }
        q.push(v);
    }
    let mut beta: Vec<f64> = (0..used)
        .map(|j| q[j].iter().zip(rhs).map(|(a, b)| a * b).sum())
        .collect();
    for k in (0..used).rev() {
        for j in k + 1..used {
            beta[k] -= r[k][j] * beta[j];
        }
        beta[k] /= r[k][k];
    }
    (beta, used)
}

/// Least-squares harmonic fit to piecewise-constant data: fundamental
/// solutions on rings around each connected cluster of pieces, plus the
/// degree-3 harmonic polynomial basis. Pieces must not share cells;
/// adjacent pieces are treated as one cluster for source placement.
pub fn harmonic_fit(pieces: &[(RegionMask, f64)], source_count: usize) -> Result<HarmonicFit> {
    if pieces.is_empty() {
        return Err(Error::Validation("no pieces to fit".into()));
    }
    let g = *pieces[0].0.grid();
    let cs = g.cell_side();
    let mut occupancy = RegionMask::empty(g);
    for (i, (mask, value)) in pieces.iter().enumerate() {
        if mask.grid() != &g {
            return Err(Error::Validation("pieces live on different grids".into()));
        }
        if !value.is_finite() {
            return Err(Error::Validation("piece values must be finite".into()));
        }
        if mask.is_empty() {
            return Err(Error::Validation(format!("piece {i} is empty")));
        }
        for (r, c) in mask.iter_cells() {
            if occupancy.contains(r, c) {
                return Err(Error::Validation(format!(
                    "piece {i} overlaps an earlier piece at cell ({r}, {c})"
                )));
            }
            occupancy.insert(r, c);
        }
    }

    // Sources ring each cluster just outside its farthest cell; any
    // that land within a cell of some other cluster are dropped, so
    // every kept source stays clear of the approximation set.
    let clusters = mask_components(&occupancy);
    let n_clusters = clusters.len();
    let mut sources: Vec<Complex64> = Vec::new();
    if source_count > 0 {
        let occupied: Vec<Complex64> = occupancy
            .iter_cells()
            .map(|(r, c)| g.cell_center(r, c))
            .collect();
        for (ci, cluster) in clusters.iter().enumerate() {
            let share = source_count / n_clusters + usize::from(ci < source_count % n_clusters);
            if share == 0 {
                continue;
            }
            let centroid = cluster
                .iter()
                .map(|&(r, c)| g.cell_center(r, c))
                .sum::<Complex64>()
                / cluster.len() as f64;
            let reach = cluster
                .iter()
                .map(|&(r, c)| (g.cell_center(r, c) - centroid).norm())
                .fold(0.0f64, f64::max);
            let ring = reach + 1.5 * cs;
            for i in 0..share {
                let th = 2.0 * std::f64::consts::PI * (i as f64 + 0.37 * ci as f64) / share as f64;
                let q = centroid + ring * Complex64::new(th.cos(), th.sin());
                let min_d = occupied
                    .iter()
                    .map(|z| (z - q).norm())
                    .fold(f64::INFINITY, f64::min);
                if min_d >= 1.2 * cs {
                    sources.push(q);
                }
            }
        }
    }

    let mut pts = Vec::new();
    let mut rhs = Vec::new();
    for (mask, value) in pieces {
        for (r, c) in mask.iter_cells() {
            pts.push(g.cell_center(r, c));
            rhs.push(*value);
        }
    }
    let m = 7 + sources.len();
    if pts.len() < m {
        return Err(Error::Validation(format!(
            "{} sample cells cannot determine {m} coefficients",
            pts.len()
        )));
    }
    let mut cols: Vec<Vec<f64>> = (0..7)
        .map(|k| pts.iter().map(|z| harmonic_basis(z.re, z.im)[k]).collect())
        .collect();
    for q in &sources {
        cols.push(pts.iter().map(|z| (z - q).norm().ln()).collect());
    }
    let (coeffs, used) = real_lsq(&cols, &rhs);

    let build = |coeffs: &[f64], n_src: usize| -> HarmonicFit {
        HarmonicFit {
            sources: sources[..n_src]
                .iter()
                .zip(&coeffs[7..])
                .map(|(q, &w)| ([q.re, q.im], w))
                .collect(),
            poly_coeffs: coeffs[..7].to_vec(),
            fit_error: 0.0,
        }
    };
    let measure = |fit: &HarmonicFit| -> f64 {
        pts.iter()
            .zip(&rhs)
            .map(|(z, v)| (fit.eval(*z) - v).abs())
            .fold(0.0f64, f64::max)
    };
    if used < m {
        let mut fit = build(&coeffs, used.saturating_sub(7));
        fit.fit_error = measure(&fit);
        return Err(Error::DegreeLimit {
            message: format!(
                "source-count limit: conditioning exceeded {CONDITION_CAP:.0e} \
                 after {used} of {m} basis columns"
            ),
            best_error: fit.fit_error,
        });
    }
    let mut fit = build(&coeffs, sources.len());
    fit.fit_error = measure(&fit);
    Ok(fit)
}

/// |circle average − center value| of the fitted function, trapezoid
/// rule on `nodes` points. Meaningful only when the circle and its
/// interior avoid every source.
pub fn mean_value_residual(
    fit: &HarmonicFit,
    center: Complex64,
    radius: f64,
    nodes: usize,
) -> Result<f64> {
    if !(radius > 0.0) || nodes < 8 {
        return Err(Error::Validation(
            "probe needs radius > 0 and at least 8 nodes".into(),
        ));
    }
    for ([qx, qy], _) in &fit.sources {
        if (Complex64::new(*qx, *qy) - center).norm() <= radius {
            return Err(Error::Validation(format!(
                "probe circle at ({}, {}) radius {radius} contains a source",
                center.re, center.im
            )));
        }
    }
    let mut avg = 0.0;
    for i in 0..nodes {
        let th = 2.0 * std::f64::consts::PI * i as f64 / nodes as f64;
        avg += fit.eval(center + radius * Complex64::new(th.cos(), th.sin()));
    }
    avg /= nodes as f64;
    Ok((avg - fit.eval(center)).abs())
}

fn sequence_source_count(n_pieces: usize) -> usize {
    (32 + 4 * n_pieces).min(160)
}

/// For n = 1..n_max: reduce v to a piecewise-constant target, fit it
/// harmonically, and measure the area where the fit misses v by more
/// than 1/n. Values must be real (the imaginary parts all zero).
pub fn harmonic_measure_sequence(
    v: &SampledFunction,
    n_max: u32,
) -> Result<Vec<(HarmonicFit, f64)>> {
    if n_max == 0 {
        return Err(Error::Validation("need n_max ≥ 1".into()));
    }
    let g = *v.grid();
    for (r, c) in v.domain().iter_cells() {
        if v.value(r, c).im != 0.0 {
            return Err(Error::Validation(format!(
                "value at cell ({r}, {c}) has a nonzero imaginary part; \
                 this pipeline is real-valued"
            )));
        }
    }
    let mut out = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let (target, _report) = reduce_to_piecewise(v, n)?;
        let pieces: Vec<(RegionMask, f64)> = target
            .pieces()
            .iter()
            .map(|p| RegionMask::from_cells(g, p.cells.iter().copied()).map(|m| (m, p.value.re)))
            .collect::<Result<_>>()?;
        let fit = harmonic_fit(&pieces, sequence_source_count(pieces.len()))?;
        let threshold = 1.0 / n as f64;
        let exceed = v
            .domain()
            .iter_cells()
            .filter(|&(r, c)| (fit.eval(g.cell_center(r, c)) - v.value(r, c).re).abs() > threshold)
            .count();
        out.push((fit, exceed as f64 * g.cell_area()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{dyadic_partition, Rect};
    use std::f64::consts::PI;

    fn unit_disk(level: u32, samples: usize) -> DomainSpec {
        let part = dyadic_partition(Rect::new(-1.0, -1.0, 1.0, 1.0).unwrap(), level).unwrap();
        DomainSpec::disk(part.grid, Complex64::new(0.0, 0.0), 0.95, samples).unwrap()
    }

    #[test]
    fn lens_area_closed_forms() {
        let h = 0.7;
        assert!((lens_area(h, 0.0).unwrap() - PI * h * h).abs() < 1e-14);
        assert_eq!(lens_area(h, 2.0 * h).unwrap(), 0.0);
        assert_eq!(lens_area(h, 5.0).unwrap(), 0.0);
        let expected = 2.0 * PI / 3.0 - 3.0f64.sqrt() / 2.0;
        assert!((lens_area(1.0, 1.0).unwrap() - expected).abs() < 1e-14);
        // Scaling: area is h² times the unit-radius lens at scaled distance.
        let a = lens_area(2.0, 1.0).unwrap();
        let b = 4.0 * lens_area(1.0, 0.5).unwrap();
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn lens_area_decreases_in_distance() {
        let mut last = f64::INFINITY;
        for i in 0..=40 {
            let d = i as f64 * 0.05;
            let v = lens_area(1.0, d).unwrap();
            assert!(v <= last + 1e-15, "d = {d}");
            last = v;
        }
        assert!(lens_area(1.0, 1.999).unwrap() > 0.0);
        assert!(lens_area(1.0, 1.999).unwrap() < 1e-3);
    }

    #[test]
    fn far_boundary_samples_are_rejected() {
        let part = dyadic_partition(Rect::new(0.0, 0.0, 1.0, 1.0).unwrap(), 4).unwrap();
        let u = RegionMask::full(part.grid);
        let err = DomainSpec::new(u, vec![Complex64::new(0.5, 0.5)]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn shell_respects_a_feasible_budget() {
        let u = unit_disk(6, 128);
        let cell = u.grid().cell_side();
        let (center, radius, h) = (Complex64::new(0.0, 0.0), 0.45, 0.12);
        let ring = shell_construct(center, radius, &u, 10.0, h).unwrap();
        assert_eq!(mask_components(&ring).len(), 1);
        assert!(ring.subset_of(u.mask()));
        assert!(grid::area(&ring) < 10.0 * lens_area(h, h).unwrap());
        // The ring surrounds the circle…
        for i in 0..32 {
            let th = 2.0 * PI * i as f64 / 32.0;
            let p = center + radius * Complex64::new(th.cos(), th.sin());
            let (r, c) = u.grid().cell_at(p).unwrap();
            assert!(ring.contains(r, c));
        }
        // …and keeps clear of the boundary by nearly the 2h margin.
        let bc = boundary_centers(u.mask());
        let min_d = ring
            .iter_cells()
            .flat_map(|(r, c)| {
                let z = u.grid().cell_center(r, c);
                bc.iter().map(move |b| (z - b).norm()).collect::<Vec<_>>()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(min_d > 2.0 * h - 3.0 * cell, "clearance {min_d}");
    }

    #[test]
    fn tight_budgets_are_reported_infeasible() {
        let u = unit_disk(6, 128);
        let (center, radius, h) = (Complex64::new(0.0, 0.0), 0.3, 0.1);
        // Budget whose area allowance is below a single cell.
        let err = shell_construct(center, radius, &u, 1e-4, h).unwrap_err();
        assert!(matches!(err, Error::InfeasibleBudget(_)));
        // A 0.01 density budget needs a ring far thinner than one cell
        // at this resolution: honest infeasibility, not a thick ring.
        let err = shell_construct(center, radius, &u, 0.01, h).unwrap_err();
        assert!(matches!(err, Error::InfeasibleBudget(_)), "{err:?}");
    }

    #[test]
    fn missing_margin_is_a_geometry_error() {
        let u = unit_disk(6, 128);
        let err = shell_construct(Complex64::new(0.0, 0.0), 0.85, &u, 10.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::Geometry(_)));
    }

    #[test]
    fn density_of_whole_and_empty_sets() {
        let u = unit_disk(5, 64);
        let p = u.boundary_samples()[0];
        let radii = [0.8, 0.5, 0.3];
        for (_, ratio) in boundary_density(u.mask(), &u, p, &radii).unwrap() {
            assert_eq!(ratio, Some(1.0));
        }
        let empty = RegionMask::empty(*u.grid());
        for (_, ratio) in boundary_density(&empty, &u, p, &radii).unwrap() {
            assert_eq!(ratio, Some(0.0));
        }
        // A ball too small to catch any cell center is undefined.
        let rows = boundary_density(u.mask(), &u, p, &[1e-9]).unwrap();
        assert_eq!(rows[0].1, None);
    }

    #[test]
    fn half_domain_density_approaches_one_half() {
        // Upper half disk with the boundary point at the origin; A is
        // the right half, so every ball at 0 sees about half of U.
        let part = dyadic_partition(Rect::new(-0.9, -0.9, 0.9, 0.9).unwrap(), 6).unwrap();
        let mask = RegionMask::from_center_predicate(part.grid, |z| z.norm() <= 0.85 && z.im > 0.0);
        let mut samples: Vec<Complex64> = (1..16)
            .map(|i| {
                let th = PI * i as f64 / 16.0;
                0.85 * Complex64::new(th.cos(), th.sin())
            })
            .collect();
        samples.push(Complex64::new(0.0, 0.0));
        let u = DomainSpec::new(mask, samples).unwrap();
        let a = RegionMask::from_center_predicate(part.grid, |z| {
            z.norm() <= 0.85 && z.im > 0.0 && z.re > 0.0
        });
        let cell = u.grid().cell_side();
        for (r, ratio) in
            boundary_density(&a, &u, Complex64::new(0.0, 0.0), &[0.6, 0.4, 0.25]).unwrap()
        {
            let ratio = ratio.unwrap();
            // Half, up to one layer of boundary cells in the ball.
            let slack = 4.0 * cell / r;
            assert!((ratio - 0.5).abs() < slack, "r = {r}: {ratio}");
        }
    }

    #[test]
    fn skeleton_covers_and_labels_the_unit_disk() {
        let u = unit_disk(6, 128);
        let phi = vec![3.0; 128];
        let skel = build_dirichlet_skeleton(&u, &phi, 5).unwrap();
        assert!(!skel.family.disks.is_empty());
        assert_eq!(skel.family.disks.len(), skel.family.shells.len());
        for (j, b) in skel.family.budgets.iter().enumerate() {
            assert_eq!(*b, 0.5f64.powi(j as i32 + 1));
        }
        // Deepest-first ordering and the diameter < clearance rule.
        let bc = boundary_centers(u.mask());
        let depth_of = |x: Complex64| {
            bc.iter()
                .map(|b| (x - b).norm())
                .fold(f64::INFINITY, f64::min)
        };
        let mut last = f64::INFINITY;
        for &(x, r) in &skel.family.disks {
            let d = depth_of(x);
            assert!(d <= last + 1e-12);
            last = d;
            assert!(2.0 * r < d, "diameter {} vs clearance {d}", 2.0 * r);
        }
        for shell in &skel.family.shells {
            assert_eq!(mask_components(shell).len(), 1);
            assert!(shell.subset_of(u.mask()));
        }
        assert!(!skel.f.is_empty());
        // Constant boundary data rides through to every piece.
        for piece in skel.g.pieces() {
            assert_eq!(piece.value, Complex64::new(3.0, 0.0));
        }
    }

    #[test]
    fn skeleton_density_chain_holds_at_boundary_samples() {
        let u = unit_disk(6, 64);
        let phi: Vec<f64> = u.boundary_samples().iter().map(|p| p.re).collect();
        let skel = build_dirichlet_skeleton(&u, &phi, 5).unwrap();
        let g = u.grid();
        let cell = g.cell_side();
        // Near a boundary point, whatever a ball sees outside F splits
        // into the declared truncation collar (measured from the
        // returned core) and the active shells, each only a few cells
        // thick. Budget tail plus that slack must pay for all of it.
        let radii = [1.2, 0.9, 0.6];
        let mut reached = 0;
        for &p in u.boundary_samples().iter().step_by(8) {
            for &r in &radii {
                let in_ball = |m: &RegionMask| {
                    m.iter_cells()
                        .filter(|&(row, col)| (g.cell_center(row, col) - p).norm() <= r)
                        .count()
                };
                let den = in_ball(u.mask());
                assert!(den > 0, "ball at ({}, {}) missed the domain", p.re, p.im);
                let ratio = in_ball(&skel.f) as f64 / den as f64;
                let collar = (den - in_ball(&skel.core)) as f64 / den as f64;
                let active = skel
                    .family
                    .shells
                    .iter()
                    .zip(&skel.family.budgets)
                    .filter(|(s, _)| in_ball(s) > 0)
                    .map(|(_, b)| *b)
                    .collect::<Vec<f64>>();
                let tail: f64 = active.iter().sum();
                let grid_term = active.len() as f64 * 4.0 * std::f64::consts::SQRT_2 * cell / r;
                assert!(
                    ratio >= 1.0 - tail - collar - grid_term - 1e-12,
                    "p = ({}, {}), r = {r}: {ratio} < 1 - {tail} - {collar} - {grid_term}",
                    p.re,
                    p.im
                );
                if ratio > 0.0 {
                    reached += 1;
                }
            }
        }
        assert!(reached > 0, "no ball ever reached the retained set");
    }

    #[test]
    fn dumbbell_skeleton_uses_a_disk_per_lobe() {
        // Two round lobes joined by a thin bar: the deep cells form two
        // separate blobs, so the cover needs at least one disk in each.
        let part = dyadic_partition(Rect::new(-1.2, -1.2, 1.2, 1.2).unwrap(), 6).unwrap();
        let g = part.grid;
        let lobe_l = Complex64::new(-0.55, 0.0);
        let lobe_r = Complex64::new(0.55, 0.0);
        let mask = RegionMask::from_center_predicate(g, |z| {
            (z - lobe_l).norm() <= 0.38
                || (z - lobe_r).norm() <= 0.38
                || (z.re.abs() <= 0.55 && z.im.abs() <= 0.1)
        });
        let samples: Vec<Complex64> = boundary_centers(&mask).into_iter().step_by(3).collect();
        let phi: Vec<f64> = samples.iter().map(|p| p.re).collect();
        let u = DomainSpec::new(mask, samples.clone()).unwrap();
        let skel = build_dirichlet_skeleton(&u, &phi, 8).unwrap();

        assert!(
            skel.family.disks.len() >= 2,
            "one disk cannot serve both lobes"
        );
        let sides: Vec<f64> = skel.family.disks.iter().map(|(x, _)| x.re).collect();
        assert!(sides.iter().any(|x| *x < 0.0) && sides.iter().any(|x| *x > 0.0));

        // Deepest-first budgets, and each piece keeps the value of the
        // boundary sample nearest its anchor — opposite signs here.
        let bc = boundary_centers(u.mask());
        let depth_of = |p: Complex64| {
            bc.iter()
                .map(|b| (p - b).norm())
                .fold(f64::INFINITY, f64::min)
        };
        for (j, (x, _)) in skel.family.disks.iter().enumerate() {
            assert!((skel.family.budgets[j] - 0.5f64.powi(j as i32 + 1)).abs() < 1e-15);
            if j > 0 {
                assert!(depth_of(*x) <= depth_of(skel.family.disks[j - 1].0) + 1e-12);
            }
        }
        let mut signs = Vec::new();
        for piece in skel.g.pieces() {
            let anchor = g.cell_center(piece.cells[0].0, piece.cells[0].1);
            let nearest = samples
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| (anchor - *a).norm().total_cmp(&(anchor - *b).norm()))
                .map(|(i, _)| i)
                .unwrap();
            assert_eq!(piece.value, Complex64::new(phi[nearest], 0.0));
            signs.push(piece.value.re.signum());
        }
        assert!(signs.contains(&1.0) && signs.contains(&-1.0));
    }

    #[test]
    fn skeleton_values_use_the_nearest_sample() {
        let u = unit_disk(6, 64);
        let phi: Vec<f64> = u.boundary_samples().iter().map(|p| p.re).collect();
        let skel = build_dirichlet_skeleton(&u, &phi, 5).unwrap();
        let g = u.grid();
        for piece in skel.g.pieces() {
            let anchor = g.cell_center(piece.cells[0].0, piece.cells[0].1);
            let want = u
                .boundary_samples()
                .iter()
                .min_by(|a, b| (anchor - *a).norm().total_cmp(&(anchor - *b).norm()))
                .unwrap()
                .re;
            assert_eq!(piece.value, Complex64::new(want, 0.0));
        }
    }

    #[test]
    fn constant_piece_needs_no_sources() {
        let part = dyadic_partition(Rect::new(0.0, 0.0, 1.0, 1.0).unwrap(), 5).unwrap();
        let disk = RegionMask::from_center_predicate(part.grid, |z| {
            (z - Complex64::new(0.5, 0.5)).norm() <= 0.3
        });
        let fit = harmonic_fit(&[(disk, 2.5)], 0).unwrap();
        assert!(fit.sources.is_empty());
        assert!((fit.poly_coeffs[0] - 2.5).abs() < 1e-12);
        assert!(fit.fit_error < 1e-12);
    }

    #[test]
    fn two_disks_fit_below_a_millesimal() {
        let part = dyadic_partition(Rect::new(0.0, 0.0, 1.0, 1.0).unwrap(), 6).unwrap();
        let mk = |cx: f64| {
            RegionMask::from_center_predicate(part.grid, |z| {
                (z - Complex64::new(cx, 0.5)).norm() <= 0.14
            })
        };
        let pieces = [(mk(0.28), 0.0), (mk(0.72), 1.0)];
        let fit = harmonic_fit(&pieces, 64).unwrap();
        assert!(fit.fit_error < 1e-3, "fit error {}", fit.fit_error);
        assert!(!fit.sources.is_empty());
        // Every source stays outside the pieces.
        for ([qx, qy], _) in &fit.sources {
            let q = Complex64::new(*qx, *qy);
            for (mask, _) in &pieces {
                for (r, c) in mask.iter_cells() {
                    assert!((part.grid.cell_center(r, c) - q).norm() > part.grid.cell_side());
                }
            }
        }
    }

    #[test]
    fn fitted_field_obeys_the_mean_value_property() {
        let part = dyadic_partition(Rect::new(0.0, 0.0, 1.0, 1.0).unwrap(), 6).unwrap();
        let mk = |cx: f64| {
            RegionMask::from_center_predicate(part.grid, |z| {
                (z - Complex64::new(cx, 0.5)).norm() <= 0.14
            })
        };
        let fit = harmonic_fit(&[(mk(0.28), 0.0), (mk(0.72), 1.0)], 64).unwrap();
        // Probe circles strictly inside the disks, away from all sources.
        for (i, &cx) in [0.28, 0.72].iter().enumerate() {
            for k in 0..5 {
                let th = 2.0 * PI * (k as f64 + 0.13 * i as f64) / 5.0;
                let center = Complex64::new(cx, 0.5) + 0.05 * Complex64::new(th.cos(), th.sin());
                let resid = mean_value_residual(&fit, center, 0.04, 256).unwrap();
                assert!(resid < 1e-6, "probe {i}/{k}: residual {resid}");
            }
        }
    }

    #[test]
    fn probe_containing_a_source_is_rejected() {
        let fit = HarmonicFit {
            sources: vec![([0.5, 0.5], 1.0)],
            poly_coeffs: vec![0.0; 7],
            fit_error: 0.0,
        };
        let err = mean_value_residual(&fit, Complex64::new(0.5, 0.52), 0.1, 64).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn step_function_sequence_stays_within_budget() {
        let part = dyadic_partition(Rect::new(0.0, 0.0, 1.0, 1.0).unwrap(), 6).unwrap();
        let domain = RegionMask::full(part.grid);
        let v = SampledFunction::from_fn(domain, |z| {
            Complex64::new(if z.re < 0.5 { 0.0 } else { 1.0 }, 0.0)
        })
        .unwrap();
        let rows = harmonic_measure_sequence(&v, 2).unwrap();
        assert_eq!(rows.len(), 2);
        for (n, (fit, exceed)) in rows.iter().enumerate() {
            let n = n as u32 + 1;
            // Exceedance is bounded by what the reduction discarded
            // plus cells the fit could have flipped across the line.
            let (target, report) = reduce_to_piecewise(&v, n).unwrap();
            let threshold = 1.0 / n as f64;
            let mut flip = 0usize;
            for piece in target.pieces() {
                for &(r, c) in &piece.cells {
                    let gap = (v.value(r, c) - piece.value).norm();
                    if gap + fit.fit_error > threshold {
                        flip += 1;
                    }
                }
            }
            let slack = flip as f64 * part.grid.cell_area();
            assert!(
                *exceed <= report.area_lost + slack + 1e-12,
                "n = {n}: {exceed} vs lost {} + slack {slack}",
                report.area_lost
            );
            assert!(*exceed <= 3.0 / n as f64 + slack, "n = {n}: {exceed}");
        }
    }

    #[test]
    fn harmonic_target_has_negligible_exceedance() {
        let part = dyadic_partition(Rect::new(0.0, 0.0, 1.0, 1.0).unwrap(), 5).unwrap();
        let domain = RegionMask::full(part.grid);
        let v = SampledFunction::from_fn(domain, |z| Complex64::new(z.re, 0.0)).unwrap();
        let rows = harmonic_measure_sequence(&v, 2).unwrap();
        // v is already harmonic: the staircase fit lands within the
        // oscillation bound, so almost nothing exceeds 1/n.
        assert!(rows[0].1 < 0.02, "n = 1 exceedance {}", rows[0].1);
        assert!(rows[1].1 < 0.30, "n = 2 exceedance {}", rows[1].1);
    }

    #[test]
    fn complex_values_are_rejected_by_the_sequence() {
        let part = dyadic_partition(Rect::new(0.0, 0.0, 1.0, 1.0).unwrap(), 3).unwrap();
        let v = SampledFunction::from_fn(RegionMask::full(part.grid), |z| z).unwrap();
        assert!(matches!(
            harmonic_measure_sequence(&v, 1),
            Err(Error::Validation(_))
        ));
    }
}
