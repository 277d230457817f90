//! Reduction of sampled functions to zero-free piecewise-constant targets.
//!
//! The pipeline mirrors a constructive measure-theoretic argument: trim
//! cells where the function oscillates too much, open corridors so the
//! complement stays connected, partition the survivors into dyadic blocks
//! with small oscillation, and shrink each block away from its boundary.
//! Every loss is an explicit area with an explicit budget.

use crate::error::{Error, Result};
use crate::grid::{self, GridSpec, RegionMask};
use num_complex::Complex64;
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

/// A complex-valued function known only at the cells of a mask.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    domain: RegionMask,
    /// Full-grid row-major storage; entries off the domain are unused.
    values: Vec<Complex64>,
}

impl SampledFunction {
    /// Sample a closure at every cell center of the domain.
    pub fn from_fn(domain: RegionMask, mut f: impl FnMut(Complex64) -> Complex64) -> Result<Self> {
        let g = *domain.grid();
        let mut values = vec![Complex64::new(0.0, 0.0); g.cell_count()];
        for (r, c) in domain.iter_cells() {
            let v = f(g.cell_center(r, c));
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::Validation(format!(
                    "non-finite sample {v} at cell ({r}, {c})"
                )));
            }
            values[r as usize * g.width() as usize + c as usize] = v;
        }
        Ok(SampledFunction { domain, values })
    }

    /// Build from values listed in the domain's row-major cell order.
    pub fn from_values(domain: RegionMask, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != domain.cell_count() {
            return Err(Error::Validation(format!(
                "{} values for {} cells",
                values.len(),
                domain.cell_count()
            )));
        }
        let mut it = values.into_iter();
        SampledFunction::from_fn(domain, move |_| it.next().unwrap())
    }

    pub fn domain(&self) -> &RegionMask {
        &self.domain
    }

    pub fn grid(&self) -> &GridSpec {
        self.domain.grid()
    }

    /// Value at a domain cell. Panics off the domain.
    pub fn value(&self, row: u32, col: u32) -> Complex64 {
        assert!(
            self.domain.contains(row, col),
            "cell off the sampled domain"
        );
        self.values[row as usize * self.grid().width() as usize + col as usize]
    }
}

/// Outcome of the oscillation-trimming stage.
#[derive(Debug, Clone)]
pub struct LuzinSelection {
    pub mask: RegionMask,
    pub removed_area: f64,
    /// False when meeting the oscillation bound cost more area than the
    /// budget allowed. The bound itself always holds on `mask`.
    pub within_budget: bool,
}

/// Greedily remove worst-oscillation cells until the local oscillation
/// (maximum difference to any retained 8-neighbor) is at most
/// `oscillation_bound` everywhere.
pub fn luzin_select(
    f: &SampledFunction,
    oscillation_bound: f64,
    loss_budget: f64,
) -> Result<LuzinSelection> {
    if !(oscillation_bound >= 0.0) || !oscillation_bound.is_finite() {
        return Err(Error::Validation(format!(
            "oscillation bound must be finite and nonnegative, got {oscillation_bound}"
        )));
    }
    if !(loss_budget >= 0.0) {
        return Err(Error::Validation(format!(
            "loss budget must be nonnegative, got {loss_budget}"
        )));
    }
    let g = *f.grid();
    let w = g.width() as i64;
    let h = g.height() as i64;
    let mut retained = f.domain().clone();

    let osc_at = |mask: &RegionMask, r: u32, c: u32| -> f64 {
        let v = f.value(r, c);
        let mut worst = 0.0f64;
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                if nr >= 0 && nr < h && nc >= 0 && nc < w && mask.contains(nr as u32, nc as u32) {
                    worst = worst.max((f.value(nr as u32, nc as u32) - v).norm());
                }
            }
        }
        worst
    };

    // Max-heap on (oscillation, lowest index first); stale entries are
    // skipped by re-checking the current oscillation on pop.
    let idx = |r: u32, c: u32| r as usize * w as usize + c as usize;
    let mut current = vec![0.0f64; g.cell_count()];
    let mut heap: BinaryHeap<(u64, Reverse<usize>)> = BinaryHeap::new();
    for (r, c) in retained.iter_cells() {
        let o = osc_at(&retained, r, c);
        current[idx(r, c)] = o;
        if o > oscillation_bound {
            heap.push((o.to_bits(), Reverse(idx(r, c))));
        }
    }

    let mut removed = 0usize;
    while let Some((bits, Reverse(i))) = heap.pop() {
        let (r, c) = ((i / w as usize) as u32, (i % w as usize) as u32);
        if !retained.contains(r, c) || current[i].to_bits() != bits {
            continue;
        }
        if current[i] <= oscillation_bound {
            break;
        }
        retained.remove(r, c);
        removed += 1;
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                if (dr != 0 || dc != 0)
                    && nr >= 0
                    && nr < h
                    && nc >= 0
                    && nc < w
                    && retained.contains(nr as u32, nc as u32)
                {
                    let ni = idx(nr as u32, nc as u32);
                    let o = osc_at(&retained, nr as u32, nc as u32);
                    current[ni] = o;
                    if o > oscillation_bound {
                        heap.push((o.to_bits(), Reverse(ni)));
                    }
                }
            }
        }
    }

    let removed_area = removed as f64 * g.cell_area();
    Ok(LuzinSelection {
        mask: retained,
        removed_area,
        within_budget: removed_area <= loss_budget,
    })
}

/// One constant piece of a target: the cells and the value on them.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub cells: Vec<(u32, u32)>,
    pub value: Complex64,
}

/// A zero-free piecewise-constant target on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantTarget {
    grid: GridSpec,
    pieces: Vec<Piece>,
    support: RegionMask,
    zero_free: bool,
}

impl PiecewiseConstantTarget {
    /// Assemble from pieces; rejects overlapping cells and recomputes the
    /// support and zero-free flag.
    pub fn new(grid: GridSpec, pieces: Vec<Piece>) -> Result<Self> {
        let mut support = RegionMask::empty(grid);
        for (pi, piece) in pieces.iter().enumerate() {
            if piece.cells.is_empty() {
                return Err(Error::Validation(format!("piece {pi} has no cells")));
            }
            if !piece.value.re.is_finite() || !piece.value.im.is_finite() {
                return Err(Error::Validation(format!(
                    "piece {pi} has non-finite value {}",
                    piece.value
                )));
            }
            for &(r, c) in &piece.cells {
                if r >= grid.height() || c >= grid.width() {
                    return Err(Error::Validation(format!(
                        "piece {pi} cell ({r}, {c}) outside grid"
                    )));
                }
                if support.contains(r, c) {
                    return Err(Error::Validation(format!(
                        "cell ({r}, {c}) belongs to more than one piece"
                    )));
                }
                support.insert(r, c);
            }
        }
        let zero_free = pieces.iter().all(|p| p.value != Complex64::new(0.0, 0.0));
        Ok(PiecewiseConstantTarget {
            grid,
            pieces,
            support,
            zero_free,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn support(&self) -> &RegionMask {
        &self.support
    }

    pub fn is_zero_free(&self) -> bool {
        self.zero_free
    }

    /// Value at a support cell, `None` elsewhere.
    pub fn value_at(&self, row: u32, col: u32) -> Option<Complex64> {
        if !self.support.contains(row, col) {
            return None;
        }
        self.pieces
            .iter()
            .find(|p| p.cells.contains(&(row, col)))
            .map(|p| p.value)
    }

    /// Fast per-cell lookup table (row-major over the full grid).
    pub fn value_table(&self) -> Vec<Option<Complex64>> {
        let mut table = vec![None; self.grid.cell_count()];
        for piece in &self.pieces {
            for &(r, c) in &piece.cells {
                table[r as usize * self.grid.width() as usize + c as usize] = Some(piece.value);
            }
        }
        table
    }
}

/// Diagnostics attached to a reduction result; every field is recomputed
/// from the output, not echoed from intermediate stages.
#[derive(Debug, Clone)]
pub struct ReductionReport {
    pub n: u32,
    pub area_lost: f64,
    pub max_error_on_support: f64,
    pub complement_connected: bool,
}

/// Reduce a sampled function to a zero-free piecewise-constant target with
/// sup error `< 2/n` on the support and area loss `< 3/n`.
///
/// Stages: oscillation trim (bound `1/(2n)`, budget `1/n`), corridor
/// carving (total budget `1/n`), dyadic block partition with per-piece
/// oscillation `< 1/n`, one-cell shrink of every block. Pieces anchor at
/// their first cell in row-major order; a zero anchor value is replaced by
/// `1/(2n)` so the target stays zero-free.
pub fn reduce_to_piecewise(
    f: &SampledFunction,
    n: u32,
) -> Result<(PiecewiseConstantTarget, ReductionReport)> {
    if n == 0 {
        return Err(Error::Validation(
            "reduction index n must be positive".into(),
        ));
    }
    if f.domain().is_empty() {
        return Err(Error::Validation("sampled domain has no cells".into()));
    }
    let g = *f.grid();
    let tol = 1.0 / n as f64;

    let luzin = luzin_select(f, tol / 2.0, tol)?;
    if !luzin.within_budget {
        return Err(Error::Resolution {
            message: format!(
                "trimming to oscillation {} cost area {} > budget {tol}",
                tol / 2.0,
                luzin.removed_area
            ),
            required_level: g.level() + 2,
        });
    }

    let holes = grid::complement_labeling(&luzin.mask).hole_count();
    let carved = if holes > 0 {
        grid::carve_connectors(&luzin.mask, tol / holes as f64)?
    } else {
        luzin.mask.clone()
    };

    // Largest dyadic block side whose shrunken pieces all oscillate < 1/n.
    // Side 4 always qualifies: its pieces sit inside 2x2 interiors where
    // all pairs are 8-neighbors, so oscillation <= the trimmed bound.
    let max_dim = g.width().max(g.height());
    let mut side = 4u32;
    while side < max_dim {
        side <<= 1;
    }
    let chosen = loop {
        if side == 4 || partition_oscillation_ok(f, &carved, side, tol) {
            break side;
        }
        side >>= 1;
    };

    let mut pieces = Vec::new();
    for_each_block_piece(&carved, chosen, |cells| {
        let (ar, ac) = cells[0]; // anchor: first retained cell, row-major
        let sample = f.value(ar, ac);
        let value = if sample == Complex64::new(0.0, 0.0) {
            Complex64::new(1.0 / (2.0 * n as f64), 0.0)
        } else {
            sample
        };
        pieces.push(Piece {
            cells: cells.to_vec(),
            value,
        });
    });

    let target = PiecewiseConstantTarget::new(g, pieces)?;
    let area_lost = grid::area(f.domain()) - grid::area(target.support());
    if area_lost >= 3.0 * tol {
        return Err(Error::Resolution {
            message: format!(
                "area lost {area_lost} reaches the 3/n budget {} at block side {chosen}",
                3.0 * tol
            ),
            required_level: g.level() + 2,
        });
    }

    let mut max_err = 0.0f64;
    for piece in target.pieces() {
        for &(r, c) in &piece.cells {
            max_err = max_err.max((f.value(r, c) - piece.value).norm());
        }
    }
    debug_assert!(max_err < 2.0 * tol);

    let report = ReductionReport {
        n,
        area_lost,
        max_error_on_support: max_err,
        complement_connected: grid::complement_labeling(target.support()).hole_count() == 0,
    };
    Ok((target, report))
}

/// Check that every shrunken block piece of `mask` has value oscillation
/// strictly below `tol`.
fn partition_oscillation_ok(f: &SampledFunction, mask: &RegionMask, side: u32, tol: f64) -> bool {
    let mut ok = true;
    for_each_block_piece(mask, side, |cells| {
        if ok && value_oscillation(f, cells) >= tol {
            ok = false;
        }
    });
    ok
}

/// Visit the retained cells of every shrunken block (block minus its
/// outermost cell layer), in row-major block order, row-major within.
fn for_each_block_piece(mask: &RegionMask, side: u32, mut visit: impl FnMut(&[(u32, u32)])) {
    let g = mask.grid();
    let blocks_w = g.width().div_ceil(side);
    let blocks_h = g.height().div_ceil(side);
    let mut cells = Vec::new();
    for bre in 0..blocks_h {
        for bc in 0..blocks_w {
            cells.clear();
            // Interior rows/cols of the block, clipped to the grid.
            let r0 = bre * side + 1;
            let r1 = ((bre + 1) * side - 1).min(g.height());
            let c0 = bc * side + 1;
            let c1 = ((bc + 1) * side - 1).min(g.width());
            for r in r0..r1 {
                for c in c0..c1 {
                    if mask.contains(r, c) {
                        cells.push((r, c));
                    }
                }
            }
            if !cells.is_empty() {
                visit(&cells);
            }
        }
    }
}

/// Exact value-set diameter for small pieces, bounding-box diagonal
/// (an upper bound) for large ones.
fn value_oscillation(f: &SampledFunction, cells: &[(u32, u32)]) -> f64 {
    if cells.len() <= 64 {
        let mut worst = 0.0f64;
        for (i, &(r1, c1)) in cells.iter().enumerate() {
            let vi = f.value(r1, c1);
            for &(r2, c2) in &cells[i + 1..] {
                worst = worst.max((vi - f.value(r2, c2)).norm());
            }
        }
        worst
    } else {
        let (mut re_lo, mut re_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut im_lo, mut im_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(r, c) in cells {
            let v = f.value(r, c);
            re_lo = re_lo.min(v.re);
            re_hi = re_hi.max(v.re);
            im_lo = im_lo.min(v.im);
            im_hi = im_hi.max(v.im);
        }
        ((re_hi - re_lo).powi(2) + (im_hi - im_lo).powi(2)).sqrt()
    }
}

/// Split a sampled function's domain by modulus: cells with `|g| <= 1/j`
/// and cells with `|g| >= 2/j` (both inclusive; the open band between is
/// in neither part).
pub fn zero_split(g: &SampledFunction, j: u32) -> Result<(RegionMask, RegionMask)> {
    if j == 0 {
        return Err(Error::Validation("split index j must be positive".into()));
    }
    let lo = 1.0 / j as f64;
    let hi = 2.0 / j as f64;
    let mut small = RegionMask::empty(*g.grid());
    let mut large = RegionMask::empty(*g.grid());
    for (r, c) in g.domain().iter_cells() {
        let m = g.value(r, c).norm();
        if m <= lo {
            small.insert(r, c);
        } else if m >= hi {
            large.insert(r, c);
        }
    }
    Ok((small, large))
}

// ---------------------------------------------------------------------------
// Text serialization
// ---------------------------------------------------------------------------

/// Serialize a piecewise-constant target:
///
/// ```text
/// target
/// grid <x0> <y0> <cell_side> <width> <height>
/// piece <re> <im>
/// row <r> <col>+<len> ...
/// ...
/// end
/// ```
pub fn target_to_text(target: &PiecewiseConstantTarget) -> String {
    let g = target.grid();
    let mut s = String::from("target\n");
    writeln!(
        s,
        "grid {} {} {} {} {}",
        g.origin().re,
        g.origin().im,
        g.cell_side(),
        g.width(),
        g.height()
    )
    .unwrap();
    for piece in target.pieces() {
        writeln!(s, "piece {} {}", piece.value.re, piece.value.im).unwrap();
        let mut by_row: Vec<(u32, Vec<u32>)> = Vec::new();
        for &(r, c) in &piece.cells {
            match by_row.last_mut() {
                Some((row, cols)) if *row == r => cols.push(c),
                _ => by_row.push((r, vec![c])),
            }
        }
        for (row, cols) in by_row {
            write!(s, "row {row}").unwrap();
            let mut i = 0;
            while i < cols.len() {
                let start = cols[i];
                let mut len = 1;
                while i + 1 < cols.len() && cols[i + 1] == cols[i] + 1 {
                    i += 1;
                    len += 1;
                }
                write!(s, " {start}+{len}").unwrap();
                i += 1;
            }
            s.push('\n');
        }
    }
    s.push_str("end\n");
    s
}

pub fn target_from_text(text: &str) -> Result<PiecewiseConstantTarget> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    if lines.next() != Some("target") {
        return Err(Error::Parse("missing target header".into()));
    }
    let grid_line = lines
        .next()
        .ok_or_else(|| Error::Parse("missing grid line".into()))?;
    let fields: Vec<&str> = grid_line.split_whitespace().collect();
    if fields.len() != 6 || fields[0] != "grid" {
        return Err(Error::Parse(format!("bad grid line: {grid_line:?}")));
    }
    let grid = GridSpec::new(
        Complex64::new(parse_f64(fields[1])?, parse_f64(fields[2])?),
        parse_f64(fields[3])?,
        parse_u32(fields[4])?,
        parse_u32(fields[5])?,
    )?;

    let mut pieces: Vec<Piece> = Vec::new();
    let mut saw_end = false;
    for line in lines {
        if line == "end" {
            saw_end = true;
            break;
        }
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("piece") => {
                let re = parse_f64(
                    parts
                        .next()
                        .ok_or_else(|| Error::Parse("piece missing re".into()))?,
                )?;
                let im = parse_f64(
                    parts
                        .next()
                        .ok_or_else(|| Error::Parse("piece missing im".into()))?,
                )?;
                pieces.push(Piece {
                    cells: Vec::new(),
                    value: Complex64::new(re, im),
                });
            }
            Some("row") => {
                let piece = pieces
                    .last_mut()
                    .ok_or_else(|| Error::Parse("row line before any piece".into()))?;
                let row = parse_u32(
                    parts
                        .next()
                        .ok_or_else(|| Error::Parse("row line missing index".into()))?,
                )?;
                for run in parts {
                    let (start, len) = run
                        .split_once('+')
                        .ok_or_else(|| Error::Parse(format!("bad run {run:?}")))?;
                    let start = parse_u32(start)?;
                    let len = parse_u32(len)?;
                    if len == 0 {
                        return Err(Error::Parse(format!("empty run {run:?}")));
                    }
                    for c in start..start + len {
                        piece.cells.push((row, c));
                    }
                }
            }
            other => {
                return Err(Error::Parse(format!("unexpected line start {other:?}")));
            }
        }
    }
    if !saw_end {
        return Err(Error::Parse("target text missing end marker".into()));
    }
    PiecewiseConstantTarget::new(grid, pieces)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Parse(format!("bad float {s:?}")))
}

fn parse_u32(s: &str) -> Result<u32> {
    s.parse()
        .map_err(|_| Error::Parse(format!("bad integer {s:?}")))
}
