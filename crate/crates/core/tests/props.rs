//! Randomized invariants. Each property states something the modules
//! promise for *all* inputs, so shrunk counterexamples point straight
//! at a contract violation rather than a tuning issue.

use std::collections::BTreeSet;

use proptest::prelude::*;

use umlab_core::grid::{
    self, complement_labeling, dyadic_partition, mask_from_text, mask_to_text, GridSpec, Rect,
    RegionMask,
};
use umlab_core::lfun::{hardy_z, parse_complex, riemann_siegel_theta, zeta_eval};
use umlab_core::planar::lens_area;
use umlab_core::polyfree::Poly;
use umlab_core::reduction::{
    reduce_to_piecewise, target_from_text, target_to_text, zero_split, SampledFunction,
};
use umlab_core::Complex64;

fn grid16() -> GridSpec {
    dyadic_partition(Rect::new(0.0, 0.0, 1.0, 1.0).unwrap(), 4)
        .unwrap()
        .grid
}

fn cells() -> impl Strategy<Value = BTreeSet<(u32, u32)>> {
    prop::collection::btree_set((0u32..16, 0u32..16), 0..=96)
}

fn complexish() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

/// Components of the mask's complement that never touch the grid
/// border, counted by a from-scratch flood fill.
fn holes_by_flood_fill(mask: &RegionMask) -> u32 {
    let g = mask.grid();
    let (w, h) = (g.width() as usize, g.height() as usize);
    let mut seen = vec![false; w * h];
    let mut holes = 0;
    for r in 0..h {
        for c in 0..w {
            if mask.contains(r as u32, c as u32) || seen[r * w + c] {
                continue;
            }
            let mut stack = vec![(r, c)];
            seen[r * w + c] = true;
            let mut touches_border = false;
            while let Some((rr, cc)) = stack.pop() {
                if rr == 0 || rr == h - 1 || cc == 0 || cc == w - 1 {
                    touches_border = true;
                }
                for (nr, nc) in [
                    (rr.wrapping_sub(1), cc),
                    (rr + 1, cc),
                    (rr, cc.wrapping_sub(1)),
                    (rr, cc + 1),
                ] {
                    if nr < h
                        && nc < w
                        && !mask.contains(nr as u32, nc as u32)
                        && !seen[nr * w + nc]
                    {
                        seen[nr * w + nc] = true;
                        stack.push((nr, nc));
                    }
                }
            }
            if !touches_border {
                holes += 1;
            }
        }
    }
    holes
}

proptest! {
    #[test]
    fn area_is_monotone_and_splits_with_the_complement(base in cells(), extra in cells()) {
        let g = grid16();
        let a = RegionMask::from_cells(g, base.clone()).unwrap();
        let b = RegionMask::from_cells(g, base.union(&extra).copied().collect::<Vec<_>>()).unwrap();
        prop_assert!(a.subset_of(&b));
        prop_assert!(grid::area(&a) <= grid::area(&b) + 1e-15);

        let full = RegionMask::full(g);
        let complement: Vec<(u32, u32)> = full
            .iter_cells()
            .filter(|&(r, c)| !a.contains(r, c))
            .collect();
        let comp = RegionMask::from_cells(g, complement).unwrap();
        let total = grid::area(&full);
        prop_assert!((grid::area(&a) + grid::area(&comp) - total).abs() < 1e-12 * total.max(1.0));
    }

    #[test]
    fn dyadic_partitions_nest(
        x0 in -2.0..2.0f64,
        y0 in -2.0..2.0f64,
        w in 0.05..1.5f64,
        h in 0.05..1.5f64,
        k in 0u32..5,
    ) {
        let rect = Rect::new(x0, y0, x0 + w, y0 + h).unwrap();
        let coarse = dyadic_partition(rect, k).unwrap().grid;
        let fine = dyadic_partition(rect, k + 1).unwrap().grid;
        prop_assert_eq!(coarse.cell_side(), 2.0 * fine.cell_side());
        for (r, c) in RegionMask::full(fine).iter_cells() {
            let center = fine.cell_center(r, c);
            let host = coarse.cell_at(center);
            prop_assert!(host.is_some(), "fine cell ({r}, {c}) escapes the coarse cover");
            let (hr, hc) = host.unwrap();
            let hcenter = coarse.cell_center(hr, hc);
            prop_assert!((center - hcenter).norm() <= coarse.cell_side());
        }
    }

    #[test]
    fn mask_text_round_trips(cell_set in cells()) {
        let mask = RegionMask::from_cells(grid16(), cell_set).unwrap();
        let back = mask_from_text(&mask_to_text(&mask)).unwrap();
        prop_assert_eq!(&back, &mask);
        prop_assert_eq!(mask_to_text(&back), mask_to_text(&mask));
    }

    #[test]
    fn hole_count_matches_an_independent_flood_fill(cell_set in cells()) {
        let mask = RegionMask::from_cells(grid16(), cell_set).unwrap();
        prop_assert_eq!(complement_labeling(&mask).hole_count(), holes_by_flood_fill(&mask));
    }

    #[test]
    fn rect_rejects_degenerate_corners(x in -5.0..5.0f64, y in -5.0..5.0f64, shrink in 0.0..3.0f64) {
        prop_assert!(Rect::new(x, y, x - shrink, y + 1.0).is_err());
        prop_assert!(Rect::new(x, y, x + 1.0, y - shrink).is_err());
        prop_assert!(Rect::new(f64::NAN, y, x + 1.0, y + 1.0).is_err());
    }

    #[test]
    fn from_cells_rejects_out_of_range(r in 16u32..100, c in 0u32..16) {
        prop_assert!(RegionMask::from_cells(grid16(), [(r, c)]).is_err());
        prop_assert!(RegionMask::from_cells(grid16(), [(c, r)]).is_err());
    }

    #[test]
    fn lens_area_is_positive_bounded_and_shrinks_with_distance(
        h in 0.05..2.0f64,
        frac in 0.05..0.95f64,
    ) {
        let d = 2.0 * h * frac;
        let v = lens_area(h, d).unwrap();
        prop_assert!(v > 0.0);
        prop_assert!(v <= std::f64::consts::PI * h * h + 1e-12);
        let farther = lens_area(h, (d * 1.2).min(2.0 * h * 0.999)).unwrap();
        prop_assert!(farther <= v + 1e-12);
    }

    #[test]
    fn parse_complex_round_trips_formatted_literals(
        re in -1e15..1e15f64,
        im in -1e15..1e15f64,
    ) {
        let z = Complex64::new(re, im);
        let rendered = format!("{re:e}{im:+e}i");
        prop_assert_eq!(parse_complex(&rendered).unwrap(), z);
        let real_only = format!("{re:e}");
        prop_assert_eq!(parse_complex(&real_only).unwrap(), Complex64::new(re, 0.0));
    }

    #[test]
    fn poly_serde_round_trips_and_eval_is_horner(
        coeffs in prop::collection::vec(complexish(), 0..8),
        z in complexish(),
    ) {
        let poly = Poly::new(coeffs.clone());
        let json = serde_json::to_string(&poly).unwrap();
        let back: Poly = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(&back, &poly);

        let mut horner = Complex64::new(0.0, 0.0);
        for &c in coeffs.iter().rev() {
            horner = horner * z + c;
        }
        prop_assert!((poly.eval(z) - horner).norm() < 1e-12);

        match poly.degree() {
            None => prop_assert!(poly.coeffs().is_empty()),
            Some(d) => {
                prop_assert_eq!(d + 1, poly.coeffs().len());
                prop_assert!(poly.coeffs()[d].norm() > 0.0);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zero_split_parts_are_disjoint_and_monotone_in_j(
        seeds in prop::collection::vec((0.0..0.6f64, 0.0..std::f64::consts::TAU), 256),
        j in 1u32..12,
    ) {
        let g = grid16();
        let values: Vec<Complex64> = seeds
            .iter()
            .map(|&(m, arg)| Complex64::from_polar(m, arg))
            .collect();
        let f = SampledFunction::from_values(RegionMask::full(g), values).unwrap();

        let (small, large) = zero_split(&f, j).unwrap();
        for (r, c) in small.iter_cells() {
            prop_assert!(!large.contains(r, c), "cell ({r}, {c}) in both parts");
            prop_assert!(f.value(r, c).norm() <= 1.0 / j as f64);
        }
        for (r, c) in large.iter_cells() {
            prop_assert!(f.value(r, c).norm() >= 2.0 / j as f64);
        }

        let (small2, large2) = zero_split(&f, 2 * j).unwrap();
        prop_assert!(small2.subset_of(&small), "tightening j must shrink the small part");
        prop_assert!(large.subset_of(&large2), "tightening j must grow the large part");
    }

    #[test]
    fn reduction_targets_survive_their_text_format(
        a in complexish(),
        b in complexish(),
        n in 1u32..5,
    ) {
        let g = grid16();
        let f = SampledFunction::from_fn(RegionMask::full(g), |z| a * z + b).unwrap();
        // A slope too steep for a 16x16 grid draws an honest refusal
        // pointing at a finer level; only successful reductions have a
        // target to round-trip.
        let (target, _) = match reduce_to_piecewise(&f, n) {
            Ok(pair) => pair,
            Err(umlab_core::Error::Resolution { .. }) => return Ok(()),
            Err(other) => panic!("unexpected reduction failure: {other}"),
        };
        let back = target_from_text(&target_to_text(&target)).unwrap();
        prop_assert_eq!(&back, &target);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn zeta_commutes_with_conjugation(
        re in 0.3..3.0f64,
        im in 0.1..20.0f64,
    ) {
        prop_assume!((Complex64::new(re, im) - Complex64::new(1.0, 0.0)).norm() > 0.3);
        let s = Complex64::new(re, im);
        let upper = zeta_eval(s, 1e-10).unwrap();
        let lower = zeta_eval(s.conj(), 1e-10).unwrap();
        let gap = (lower.value - upper.value.conj()).norm();
        prop_assert!(
            gap <= upper.error_bound + lower.error_bound + 1e-13,
            "conjugation symmetry broken by {gap}"
        );
    }

    #[test]
    fn hardy_z_has_the_critical_line_modulus(t in 1.0..40.0f64) {
        let z = hardy_z(t, 1e-9).unwrap();
        let zeta = zeta_eval(Complex64::new(0.5, t), 1e-9).unwrap();
        let gap = (z.abs() - zeta.value.norm()).abs();
        prop_assert!(gap < 1e-8 + zeta.error_bound, "modulus gap {gap} at t = {t}");
    }

    #[test]
    fn riemann_siegel_theta_increases_past_two_pi(
        t in 7.0..500.0f64,
        dt in 1e-3..50.0f64,
    ) {
        prop_assert!(riemann_siegel_theta(t) < riemann_siegel_theta(t + dt));
    }
}
