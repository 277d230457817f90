//! Dyadic grid model for planar sets.
//!
//! Measurable subsets of the plane are approximated by finite unions of
//! closed squares from the dyadic lattice of side `2^-k`. A [`RegionMask`]
//! marks cells of a [`GridSpec`]; its area is exactly `cells * side^2`.
//! Connectivity (of a mask's complement) uses 4-adjacency on both sides,
//! with an implicit one-cell padding ring standing in for the unbounded
//! component.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::fmt::Write as _;

/// Hard cap on cells a single partition or mask may hold.
pub const MAX_CELLS: usize = 1 << 24;

/// Closed axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        if !(x0.is_finite() && y0.is_finite() && x1.is_finite() && y1.is_finite()) {
            return Err(Error::Validation("rectangle has non-finite corner".into()));
        }
        if x1 <= x0 || y1 <= y0 {
            return Err(Error::Validation(format!(
                "degenerate rectangle [{x0}, {x1}] x [{y0}, {y1}]"
            )));
        }
        Ok(Rect { x0, y0, x1, y1 })
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }
}

/// A finite window onto the dyadic lattice of side `2^-k`.
///
/// `origin` is the lower-left corner of cell `(row 0, col 0)`; rows grow in
/// `+y`, columns in `+x`. Cell side must be an exact power of two `<= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    origin: Complex64,
    cell_side: f64,
    width: u32,
    height: u32,
}

impl GridSpec {
    pub fn new(origin: Complex64, cell_side: f64, width: u32, height: u32) -> Result<Self> {
        if !origin.re.is_finite() || !origin.im.is_finite() {
            return Err(Error::Validation("grid origin must be finite".into()));
        }
        if level_of(cell_side).is_none() {
            return Err(Error::Validation(format!(
                "cell side {cell_side} is not 2^-k for integer k >= 0"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::Validation("grid must have positive extent".into()));
        }
        let cells = width as usize * height as usize;
        if cells > MAX_CELLS {
            return Err(Error::ResourceLimit(format!(
                "grid of {width} x {height} = {cells} cells exceeds cap {MAX_CELLS}"
            )));
        }
        Ok(GridSpec {
            origin,
            cell_side,
            width,
            height,
        })
    }

    pub fn origin(&self) -> Complex64 {
        self.origin
    }

    pub fn cell_side(&self) -> f64 {
        self.cell_side
    }

    /// Dyadic level `k` with `cell_side = 2^-k`.
    pub fn level(&self) -> u32 {
        level_of(self.cell_side).expect("validated at construction")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn cell_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_side * self.cell_side
    }

    pub fn cell_center(&self, row: u32, col: u32) -> Complex64 {
        debug_assert!(row < self.height && col < self.width);
        Complex64::new(
            self.origin.re + (col as f64 + 0.5) * self.cell_side,
            self.origin.im + (row as f64 + 0.5) * self.cell_side,
        )
    }

    /// Cell containing the point, None outside the covered rectangle.
    pub fn cell_at(&self, p: Complex64) -> Option<(u32, u32)> {
        let col = ((p.re - self.origin.re) / self.cell_side).floor();
        let row = ((p.im - self.origin.im) / self.cell_side).floor();
        if row < 0.0 || col < 0.0 || row >= self.height as f64 || col >= self.width as f64 {
            return None;
        }
        Some((row as u32, col as u32))
    }

    /// Covered rectangle (union of all cell squares).
    pub fn bbox(&self) -> Rect {
        Rect {
            x0: self.origin.re,
            y0: self.origin.im,
            x1: self.origin.re + self.width as f64 * self.cell_side,
            y1: self.origin.im + self.height as f64 * self.cell_side,
        }
    }

    fn index(&self, row: u32, col: u32) -> usize {
        row as usize * self.width as usize + col as usize
    }
}

fn level_of(cell_side: f64) -> Option<u32> {
    if !(cell_side > 0.0) || cell_side > 1.0 {
        return None;
    }
    // Exact powers of two have zero mantissa bits.
    let bits = cell_side.to_bits();
    if bits & ((1u64 << 52) - 1) != 0 {
        return None;
    }
    let exp = ((bits >> 52) & 0x7ff) as i32 - 1023;
    if exp > 0 {
        return None;
    }
    Some((-exp) as u32)
}

/// Snap a bounding box outward to the level-`k` dyadic lattice and return
/// the covering partition of closed squares.
///
/// The squares are exactly the cells of the returned grid, so the partition
/// is reported as the grid plus its full index range.
pub fn dyadic_partition(bbox: Rect, k: u32) -> Result<DyadicPartition> {
    if k > 52 {
        return Err(Error::ResourceLimit(format!(
            "dyadic level k = {k} exceeds f64-exact range (max 52)"
        )));
    }
    let scale = (k as f64).exp2();
    let i0 = (bbox.x0 * scale).floor();
    let i1 = (bbox.x1 * scale).ceil();
    let j0 = (bbox.y0 * scale).floor();
    let j1 = (bbox.y1 * scale).ceil();
    let width = (i1 - i0) as usize;
    let height = (j1 - j0) as usize;
    let total = width.saturating_mul(height);
    if total > MAX_CELLS {
        return Err(Error::ResourceLimit(format!(
            "partition of {bbox:?} at level {k} needs {total} squares (cap {MAX_CELLS})"
        )));
    }
    let h = scale.recip();
    let grid = GridSpec::new(
        Complex64::new(i0 * h, j0 * h),
        h,
        width as u32,
        height as u32,
    )?;
    Ok(DyadicPartition { grid })
}

/// Result of [`dyadic_partition`]: a grid whose cells are the squares.
#[derive(Debug, Clone)]
pub struct DyadicPartition {
    pub grid: GridSpec,
}

impl DyadicPartition {
    pub fn square_count(&self) -> usize {
        self.grid.cell_count()
    }

    /// Row-major enumeration of squares as `(row, col)` index pairs.
    pub fn squares(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.grid.width();
        let h = self.grid.height();
        (0..h).flat_map(move |r| (0..w).map(move |c| (r, c)))
    }
}

/// Finite union of closed dyadic squares, as marked cells of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    grid: GridSpec,
    bits: Vec<bool>,
    count: usize,
}

impl RegionMask {
    pub fn empty(grid: GridSpec) -> Self {
        let n = grid.cell_count();
        RegionMask {
            grid,
            bits: vec![false; n],
            count: 0,
        }
    }

    pub fn full(grid: GridSpec) -> Self {
        let n = grid.cell_count();
        RegionMask {
            grid,
            bits: vec![true; n],
            count: n,
        }
    }

    pub fn from_cells<I: IntoIterator<Item = (u32, u32)>>(
        grid: GridSpec,
        cells: I,
    ) -> Result<Self> {
        let mut mask = RegionMask::empty(grid);
        for (row, col) in cells {
            if row >= grid.height() || col >= grid.width() {
                return Err(Error::Validation(format!(
                    "cell ({row}, {col}) outside grid {} x {}",
                    grid.height(),
                    grid.width()
                )));
            }
            mask.insert(row, col);
        }
        Ok(mask)
    }

    /// Mark every cell whose center satisfies the predicate.
    pub fn from_center_predicate(grid: GridSpec, mut pred: impl FnMut(Complex64) -> bool) -> Self {
        let mut mask = RegionMask::empty(grid);
        for row in 0..grid.height() {
            for col in 0..grid.width() {
                if pred(grid.cell_center(row, col)) {
                    mask.insert(row, col);
                }
            }
        }
        mask
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn contains(&self, row: u32, col: u32) -> bool {
        row < self.grid.height() && col < self.grid.width() && self.bits[self.grid.index(row, col)]
    }

    pub fn insert(&mut self, row: u32, col: u32) {
        assert!(row < self.grid.height() && col < self.grid.width());
        let i = self.grid.index(row, col);
        if !self.bits[i] {
            self.bits[i] = true;
            self.count += 1;
        }
    }

    pub fn remove(&mut self, row: u32, col: u32) {
        assert!(row < self.grid.height() && col < self.grid.width());
        let i = self.grid.index(row, col);
        if self.bits[i] {
            self.bits[i] = false;
            self.count -= 1;
        }
    }

    pub fn cell_count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Marked cells in row-major order.
    pub fn iter_cells(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.grid.width();
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| ((i / w as usize) as u32, (i % w as usize) as u32))
    }

    /// Tight cell-index bounds `(row0, col0, row1, col1)`, inclusive.
    pub fn cell_bbox(&self) -> Option<(u32, u32, u32, u32)> {
        let mut bounds: Option<(u32, u32, u32, u32)> = None;
        for (r, c) in self.iter_cells() {
            bounds = Some(match bounds {
                None => (r, c, r, c),
                Some((r0, c0, r1, c1)) => (r0.min(r), c0.min(c), r1.max(r), c1.max(c)),
            });
        }
        bounds
    }

    /// Bounding rectangle of the marked squares (not just centers).
    pub fn bounding_rect(&self) -> Option<Rect> {
        let (r0, c0, r1, c1) = self.cell_bbox()?;
        let h = self.grid.cell_side();
        let o = self.grid.origin();
        Some(Rect {
            x0: o.re + c0 as f64 * h,
            y0: o.im + r0 as f64 * h,
            x1: o.re + (c1 + 1) as f64 * h,
            y1: o.im + (r1 + 1) as f64 * h,
        })
    }

    pub fn subset_of(&self, other: &RegionMask) -> bool {
        self.grid == other.grid && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Marked cells 4-adjacent to an unmarked cell or to the grid edge.
    pub fn boundary_cells(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for (r, c) in self.iter_cells() {
            let on_edge =
                r == 0 || c == 0 || r + 1 == self.grid.height() || c + 1 == self.grid.width();
            let exposed = on_edge
                || !self.contains(r - 1, c)
                || !self.contains(r + 1, c)
                || !self.contains(r, c - 1)
                || !self.contains(r, c + 1);
            if exposed {
                out.push((r, c));
            }
        }
        out
    }

    /// Area of a one-cell-thick layer along the mask's boundary; the
    /// standard slack term for grid-vs-continuum comparisons.
    pub fn boundary_layer_area(&self) -> f64 {
        self.boundary_cells().len() as f64 * self.grid.cell_area()
    }
}

/// Exact area: marked cells times cell area.
pub fn area(mask: &RegionMask) -> f64 {
    mask.cell_count() as f64 * mask.grid().cell_area()
}

/// Labels for the complement of a mask within its padded frame.
///
/// The frame is the grid extended by a one-cell ring; the ring is always
/// part of the unbounded component. Mask cells carry no label.
#[derive(Debug, Clone)]
pub struct ComponentLabeling {
    frame_width: u32,
    frame_height: u32,
    /// Component id per frame cell; `u32::MAX` marks mask cells.
    labels: Vec<u32>,
    component_count: u32,
    unbounded_id: u32,
}

const MASK_CELL: u32 = u32::MAX;

impl ComponentLabeling {
    pub fn component_count(&self) -> u32 {
        self.component_count
    }

    pub fn unbounded_id(&self) -> u32 {
        self.unbounded_id
    }

    /// Label of the complement cell at frame coordinates (the grid cell
    /// `(row, col)` sits at frame `(row + 1, col + 1)`).
    pub fn label_in_frame(&self, frame_row: u32, frame_col: u32) -> Option<u32> {
        if frame_row >= self.frame_height || frame_col >= self.frame_width {
            return None;
        }
        let l = self.labels[frame_row as usize * self.frame_width as usize + frame_col as usize];
        (l != MASK_CELL).then_some(l)
    }

    /// Ids of enclosed components (everything except the unbounded one).
    pub fn hole_ids(&self) -> Vec<u32> {
        (0..self.component_count)
            .filter(|&id| id != self.unbounded_id)
            .collect()
    }

    pub fn hole_count(&self) -> u32 {
        self.component_count - 1
    }

    /// Grid cells belonging to the given component, row-major.
    pub fn component_cells(&self, id: u32) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for fr in 1..self.frame_height - 1 {
            for fc in 1..self.frame_width - 1 {
                if self.labels[fr as usize * self.frame_width as usize + fc as usize] == id {
                    out.push((fr - 1, fc - 1));
                }
            }
        }
        out
    }
}

/// Label the complement components of `mask` inside its one-cell padded
/// frame. 4-connectivity; the padding ring seeds the unbounded component.
pub fn complement_labeling(mask: &RegionMask) -> ComponentLabeling {
    let fw = mask.grid().width() + 2;
    let fh = mask.grid().height() + 2;
    let idx = |r: u32, c: u32| r as usize * fw as usize + c as usize;
    let mut labels = vec![MASK_CELL; fw as usize * fh as usize];

    // Pre-mark complement cells with a placeholder below any real label.
    const UNLABELED: u32 = u32::MAX - 1;
    for fr in 0..fh {
        for fc in 0..fw {
            let in_grid = fr >= 1 && fr <= fh - 2 && fc >= 1 && fc <= fw - 2;
            let masked = in_grid && mask.contains(fr - 1, fc - 1);
            if !masked {
                labels[idx(fr, fc)] = UNLABELED;
            }
        }
    }

    let mut next = 0u32;
    let mut unbounded_id = 0u32;
    let mut queue = std::collections::VecDeque::new();
    for fr in 0..fh {
        for fc in 0..fw {
            if labels[idx(fr, fc)] != UNLABELED {
                continue;
            }
            let id = next;
            next += 1;
            if fr == 0 && fc == 0 {
                unbounded_id = id; // ring corner is always first seed
            }
            labels[idx(fr, fc)] = id;
            queue.push_back((fr, fc));
            while let Some((r, c)) = queue.pop_front() {
                let mut visit = |nr: u32, nc: u32, labels: &mut Vec<u32>| {
                    if nr < fh && nc < fw && labels[idx(nr, nc)] == UNLABELED {
                        labels[idx(nr, nc)] = id;
                        queue.push_back((nr, nc));
                    }
                };
                if r > 0 {
                    visit(r - 1, c, &mut labels);
                }
                if c > 0 {
                    visit(r, c - 1, &mut labels);
                }
                visit(r + 1, c, &mut labels);
                visit(r, c + 1, &mut labels);
            }
        }
    }

    ComponentLabeling {
        frame_width: fw,
        frame_height: fh,
        labels,
        component_count: next,
        unbounded_id,
    }
}

/// Decide whether the complement of `mask` within `frame` is connected.
///
/// `frame` is snapped outward to the mask's lattice; its outermost cell
/// ring models the unbounded component, so the mask must stay strictly
/// inside (an error reports any mask cell touching the ring or outside).
pub fn is_complement_connected(mask: &RegionMask, frame: Rect) -> Result<bool> {
    let g = mask.grid();
    let h = g.cell_side();
    // Frame cell range on the mask's lattice, snapped outward.
    let fc0 = ((frame.x0 - g.origin().re) / h).floor() as i64;
    let fidx_c1 = ((frame.x1 - g.origin().re) / h).ceil() as i64;
    let fr0 = ((frame.y0 - g.origin().im) / h).floor() as i64;
    let fidx_r1 = ((frame.y1 - g.origin().im) / h).ceil() as i64;
    if fidx_c1 - fc0 < 3 || fidx_r1 - fr0 < 3 {
        return Err(Error::Validation(
            "frame thinner than three cells cannot strictly contain a mask".into(),
        ));
    }
    for (r, c) in mask.iter_cells() {
        let (ri, ci) = (r as i64, c as i64);
        if ri <= fr0 || ri >= fidx_r1 - 1 || ci <= fc0 || ci >= fidx_c1 - 1 {
            return Err(Error::Validation(format!(
                "mask cell ({r}, {c}) touches or crosses the frame boundary"
            )));
        }
    }

    // BFS over complement cells of the frame, seeded at the frame corner.
    let fw = (fidx_c1 - fc0) as usize;
    let fh = (fidx_r1 - fr0) as usize;
    let masked = |fr: usize, fc: usize| -> bool {
        let r = fr as i64 + fr0;
        let c = fc as i64 + fc0;
        r >= 0
            && c >= 0
            && (r as u32) < g.height()
            && (c as u32) < g.width()
            && mask.contains(r as u32, c as u32)
    };
    let mut seen = vec![false; fw * fh];
    let mut queue = std::collections::VecDeque::new();
    seen[0] = true;
    queue.push_back((0usize, 0usize));
    let mut visited = 1usize;
    while let Some((r, c)) = queue.pop_front() {
        for (nr, nc) in [
            (r.wrapping_sub(1), c),
            (r + 1, c),
            (r, c.wrapping_sub(1)),
            (r, c + 1),
        ] {
            if nr < fh && nc < fw && !seen[nr * fw + nc] && !masked(nr, nc) {
                seen[nr * fw + nc] = true;
                visited += 1;
                queue.push_back((nr, nc));
            }
        }
    }
    let complement_total = fw * fh - mask.cell_count();
    Ok(visited == complement_total)
}

/// Join every enclosed complement component to the unbounded one by
/// removing straight one-cell-wide corridors from the mask.
///
/// Corridors are axis-aligned and shortest-first; ties prefer horizontal
/// over vertical, then lower scan order. Each corridor's area may use up
/// to `per_hole_budget` (inclusive). Errors if the budget is below one
/// cell's area or some hole needs a longer corridor than the budget pays.
pub fn carve_connectors(mask: &RegionMask, per_hole_budget: f64) -> Result<RegionMask> {
    let cell_area = mask.grid().cell_area();
    if per_hole_budget < cell_area {
        return Err(Error::InfeasibleBudget(format!(
            "per-hole budget {per_hole_budget} is below one cell's area {cell_area}"
        )));
    }
    let mut out = mask.clone();
    loop {
        let labeling = complement_labeling(&out);
        let holes = labeling.hole_ids();
        let Some(&hole) = holes.first() else {
            return Ok(out);
        };
        let corridor = shortest_corridor(&out, &labeling, hole).ok_or_else(|| {
            Error::Geometry(format!("no straight corridor leaves component {hole}"))
        })?;
        let corridor_area = corridor.len() as f64 * cell_area;
        // Inclusive comparison: a corridor may spend the whole budget.
        if corridor_area > per_hole_budget * (1.0 + 1e-12) {
            return Err(Error::InfeasibleBudget(format!(
                "component {hole} needs a corridor of area {corridor_area} > budget {per_hole_budget}"
            )));
        }
        for (r, c) in corridor {
            out.remove(r, c);
        }
    }
}

/// Shortest straight run of mask cells from `hole` to any other complement
/// component. Directions in tie-break order: +col, -col, +row, -row.
fn shortest_corridor(
    mask: &RegionMask,
    labeling: &ComponentLabeling,
    hole: u32,
) -> Option<Vec<(u32, u32)>> {
    let g = mask.grid();
    let (w, h) = (g.width() as i64, g.height() as i64);
    let mut best: Option<Vec<(u32, u32)>> = None;
    for (r, c) in labeling.component_cells(hole) {
        for (dr, dc) in [(0i64, 1i64), (0, -1), (1, 0), (-1, 0)] {
            let mut run = Vec::new();
            let (mut cr, mut cc) = (r as i64 + dr, c as i64 + dc);
            loop {
                let inside = cr >= 0 && cr < h && cc >= 0 && cc < w;
                if inside && mask.contains(cr as u32, cc as u32) {
                    run.push((cr as u32, cc as u32));
                    if best.as_ref().is_some_and(|b| run.len() >= b.len()) {
                        break; // cannot beat the incumbent
                    }
                    cr += dr;
                    cc += dc;
                    continue;
                }
                // First non-mask cell: outside the grid it belongs to the
                // unbounded ring; inside, look its component up.
                let label = if inside {
                    labeling.label_in_frame((cr + 1) as u32, (cc + 1) as u32)
                } else {
                    Some(labeling.unbounded_id())
                };
                match label {
                    Some(l)
                        if l != hole
                            && !run.is_empty()
                            && best.as_ref().is_none_or(|b| run.len() < b.len()) =>
                    {
                        best = Some(run);
                    }
                    _ => {}
                }
                break;
            }
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Text serialization
// ---------------------------------------------------------------------------

/// Serialize a mask to the run-length text format:
///
/// ```text
/// grid <x0> <y0> <cell_side> <width> <height>
/// row <r> <col>+<len> [<col>+<len> ...]
/// end
/// ```
///
/// Floats print in shortest round-trip form, so load(save(m)) == m exactly.
pub fn mask_to_text(mask: &RegionMask) -> String {
    let g = mask.grid();
    let mut s = String::new();
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
    for row in 0..g.height() {
        let mut runs: Vec<(u32, u32)> = Vec::new();
        let mut col = 0;
        while col < g.width() {
            if mask.contains(row, col) {
                let start = col;
                while col < g.width() && mask.contains(row, col) {
                    col += 1;
                }
                runs.push((start, col - start));
            } else {
                col += 1;
            }
        }
        if !runs.is_empty() {
            write!(s, "row {row}").unwrap();
            for (start, len) in runs {
                write!(s, " {start}+{len}").unwrap();
            }
            s.push('\n');
        }
    }
    s.push_str("end\n");
    s
}

pub fn mask_from_text(text: &str) -> Result<RegionMask> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty mask text".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 6 || fields[0] != "grid" {
        return Err(Error::Parse(format!("bad grid header: {header:?}")));
    }
    let x0: f64 = parse_num(fields[1])?;
    let y0: f64 = parse_num(fields[2])?;
    let side: f64 = parse_num(fields[3])?;
    let width: u32 = parse_num(fields[4])?;
    let height: u32 = parse_num(fields[5])?;
    let grid = GridSpec::new(Complex64::new(x0, y0), side, width, height)?;
    let mut mask = RegionMask::empty(grid);
    let mut saw_end = false;
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line == "end" {
            saw_end = true;
            break;
        }
        let mut parts = line.split_whitespace();
        if parts.next() != Some("row") {
            return Err(Error::Parse(format!("expected row line, got: {line:?}")));
        }
        let row: u32 = parse_num(
            parts
                .next()
                .ok_or_else(|| Error::Parse("row line missing index".into()))?,
        )?;
        if row >= height {
            return Err(Error::Parse(format!(
                "row {row} outside grid height {height}"
            )));
        }
        for run in parts {
            let (start, len) = run
                .split_once('+')
                .ok_or_else(|| Error::Parse(format!("bad run {run:?}")))?;
            let start: u32 = parse_num(start)?;
            let len: u32 = parse_num(len)?;
            if len == 0 || start + len > width {
                return Err(Error::Parse(format!(
                    "run {run:?} leaves grid width {width} on row {row}"
                )));
            }
            for col in start..start + len {
                mask.insert(row, col);
            }
        }
    }
    if !saw_end {
        return Err(Error::Parse("mask text missing end marker".into()));
    }
    Ok(mask)
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("bad numeric field {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(k: u32) -> GridSpec {
        let side = (-(k as f64)).exp2();
        GridSpec::new(Complex64::new(0.0, 0.0), side, 1 << k, 1 << k).unwrap()
    }

    #[test]
    fn rejects_non_dyadic_cell_side() {
        assert!(GridSpec::new(Complex64::new(0.0, 0.0), 0.3, 4, 4).is_err());
        assert!(GridSpec::new(Complex64::new(0.0, 0.0), 2.0, 4, 4).is_err());
        assert!(GridSpec::new(Complex64::new(0.0, 0.0), 0.25, 4, 4).is_ok());
    }

    #[test]
    fn partition_snaps_outward_and_covers() {
        // [0, 1]^2 at k = 2 is exactly 16 squares.
        let p = dyadic_partition(Rect::new(0.0, 0.0, 1.0, 1.0).unwrap(), 2).unwrap();
        assert_eq!(p.square_count(), 16);
        // A box not aligned to the lattice still gets covered.
        let p = dyadic_partition(Rect::new(0.1, 0.1, 0.9, 0.9).unwrap(), 2).unwrap();
        let bb = p.grid.bbox();
        assert!(bb.x0 <= 0.1 && bb.x1 >= 0.9 && bb.y0 <= 0.1 && bb.y1 >= 0.9);
        assert_eq!(p.grid.cell_side(), 0.25);
    }

    #[test]
    fn partition_rejects_huge_levels() {
        let bbox = Rect::new(0.0, 0.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            dyadic_partition(bbox, 20),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn refinement_nests_exactly() {
        // Every level-(k+1) square lies in exactly one level-k square.
        let bbox = Rect::new(-0.37, 0.21, 0.43, 0.77).unwrap();
        let coarse = dyadic_partition(bbox, 3).unwrap();
        let fine = dyadic_partition(bbox, 4).unwrap();
        for (r, c) in fine.squares() {
            let center = fine.grid.cell_center(r, c);
            let g = &coarse.grid;
            let col = ((center.re - g.origin().re) / g.cell_side()).floor() as i64;
            let row = ((center.im - g.origin().im) / g.cell_side()).floor() as i64;
            assert!(row >= 0 && col >= 0);
            assert!((row as u32) < g.height() && (col as u32) < g.width());
        }
    }

    #[test]
    fn area_is_cell_count_times_cell_area() {
        let g = unit_grid(3);
        let mask = RegionMask::from_cells(g, [(0, 0), (1, 1), (7, 7)]).unwrap();
        assert_eq!(area(&mask), 3.0 / 64.0);
        assert_eq!(area(&RegionMask::full(g)), 1.0);
        assert_eq!(area(&RegionMask::empty(g)), 0.0);
    }

    #[test]
    fn area_additive_over_disjoint_union() {
        let g = unit_grid(3);
        let a = RegionMask::from_cells(g, [(0, 0), (0, 1)]).unwrap();
        let b = RegionMask::from_cells(g, [(5, 5), (6, 6), (7, 7)]).unwrap();
        let mut u = a.clone();
        for (r, c) in b.iter_cells() {
            u.insert(r, c);
        }
        assert_eq!(area(&u), area(&a) + area(&b));
    }

    fn annulus(
        g: GridSpec,
        outer: std::ops::RangeInclusive<u32>,
        hole: std::ops::RangeInclusive<u32>,
    ) -> RegionMask {
        let mut m = RegionMask::empty(g);
        for r in outer.clone() {
            for c in outer.clone() {
                if !(hole.contains(&r) && hole.contains(&c)) {
                    m.insert(r, c);
                }
            }
        }
        m
    }

    #[test]
    fn full_square_has_connected_complement() {
        let g = unit_grid(3);
        let frame = Rect::new(-0.5, -0.5, 1.5, 1.5).unwrap();
        let m = annulus(g, 1..=6, 7..=7); // solid block, no hole
        assert!(is_complement_connected(&m, frame).unwrap());
    }

    #[test]
    fn annulus_complement_is_disconnected() {
        let g = unit_grid(3);
        let frame = Rect::new(-0.5, -0.5, 1.5, 1.5).unwrap();
        let m = annulus(g, 1..=6, 3..=4);
        assert!(!is_complement_connected(&m, frame).unwrap());
        let labeling = complement_labeling(&m);
        assert_eq!(labeling.hole_count(), 1);
        assert_eq!(labeling.component_cells(labeling.hole_ids()[0]).len(), 4);
    }

    #[test]
    fn mask_touching_frame_is_rejected() {
        let g = unit_grid(3);
        let m = RegionMask::from_cells(g, [(0, 0)]).unwrap();
        // Frame equal to the grid: cell (0,0) lies in the outermost ring.
        let err = is_complement_connected(&m, g.bbox()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn carve_opens_annulus_within_budget() {
        let g = unit_grid(3);
        let m = annulus(g, 1..=6, 3..=4);
        let budget = 4.0 * g.cell_area();
        let carved = carve_connectors(&m, budget).unwrap();
        assert!(carved.subset_of(&m));
        assert_eq!(complement_labeling(&carved).hole_count(), 0);
        assert!(area(&m) - area(&carved) <= budget + 1e-12);
        // Wall is two cells thick, so the corridor removes exactly two.
        assert_eq!(m.cell_count() - carved.cell_count(), 2);
    }

    #[test]
    fn carve_rejects_sub_cell_budget() {
        let g = unit_grid(3);
        let m = annulus(g, 1..=6, 3..=4);
        let err = carve_connectors(&m, 0.5 * g.cell_area()).unwrap_err();
        assert!(matches!(err, Error::InfeasibleBudget(_)));
    }

    #[test]
    fn carve_handles_nested_annuli() {
        let g = unit_grid(4);
        let mut m = RegionMask::empty(g);
        for r in 1..=14u32 {
            for c in 1..=14u32 {
                let ring1 = (1..=14).contains(&r)
                    && (1..=14).contains(&c)
                    && !((3..=12).contains(&r) && (3..=12).contains(&c));
                let ring2 = (5..=10).contains(&r)
                    && (5..=10).contains(&c)
                    && !((7..=8).contains(&r) && (7..=8).contains(&c));
                if ring1 || ring2 {
                    m.insert(r, c);
                }
            }
        }
        assert_eq!(complement_labeling(&m).hole_count(), 2);
        let carved = carve_connectors(&m, 2.0 * g.cell_area()).unwrap();
        assert_eq!(complement_labeling(&carved).hole_count(), 0);
        assert!(carved.subset_of(&m));
    }

    #[test]
    fn carve_noop_when_no_holes() {
        let g = unit_grid(3);
        let m = RegionMask::from_cells(g, [(2, 2), (2, 3), (4, 5)]).unwrap();
        let carved = carve_connectors(&m, g.cell_area()).unwrap();
        assert_eq!(carved, m);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let g = GridSpec::new(Complex64::new(-0.375, 0.21875), 0.0625, 9, 5).unwrap();
        let mut m = RegionMask::empty(g);
        for (r, c) in [(0, 0), (0, 1), (0, 2), (2, 4), (2, 6), (4, 8)] {
            m.insert(r, c);
        }
        let text = mask_to_text(&m);
        let back = mask_from_text(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(mask_to_text(&back), text);
    }

    #[test]
    fn text_rejects_out_of_range_runs() {
        let g = unit_grid(2);
        let text = mask_to_text(&RegionMask::full(g));
        let bad = text.replace("0+4", "2+4");
        assert!(mask_from_text(&bad).is_err());
    }

    #[test]
    fn empty_mask_round_trips() {
        let g = unit_grid(2);
        let m = RegionMask::empty(g);
        assert_eq!(mask_from_text(&mask_to_text(&m)).unwrap(), m);
    }
}
