use fdlab_core::estimates::*;
use fdlab_core::spectral::{SpectralMeasure, StableSymbol};
use fdlab_core::subkernels::{geometric_ladder, KernelRoute, KernelTable};
use fdlab_core::{Error, Grid};
use proptest::prelude::*;

fn sym1(beta: f64) -> StableSymbol {
    StableSymbol::new(beta, SpectralMeasure::symmetric_atoms(1.0).unwrap()).unwrap()
}

/// Unit-spacing table whose ladder steps by at most 1.19 between `ell = 4` and `ell = 256`.
fn fine_ladder_table(alpha: f64, beta: f64) -> KernelTable {
    let grid = Grid::new(1, 4096, 2048.0).unwrap();
    let q = beta / alpha;
    let count = (64f64.powf(q).ln() / 1.19f64.ln()).ceil() as usize + 1;
    let times = geometric_ladder(4.0001f64.powf(q), 255.9f64.powf(q), count);
    KernelTable::build(&sym1(beta), alpha, &grid, &times, KernelRoute::Fourier).unwrap()
}

#[test]
fn omega_examples() {
    assert!((omega_scale(1.0, &[2.0], 0.5, 1.0).unwrap().omega - 2.0).abs() < 1e-15);
    let w = omega_scale(4.0, &[1.0], 0.5, 1.0).unwrap();
    assert!((w.omega - 0.5).abs() < 1e-15);
    assert!(w.is_near() && !w.is_far());
    assert!(matches!(omega_scale(1.0, &[0.0, 0.0], 0.5, 1.0), Err(Error::Domain(_))));
    assert!(matches!(omega_scale(0.0, &[1.0], 0.5, 1.0), Err(Error::Domain(_))));
}

#[test]
fn shape_examples() {
    let (a, t) = (0.6, 3.0);
    // d < beta: flat in x near the origin.
    let s1 = z_bound_shape(t, &[0.1], a, 1.5).unwrap();
    let s2 = z_bound_shape(t, &[0.5], a, 1.5).unwrap();
    assert!((s1 - t.powf(-a * 2.0 / 3.0)).abs() < 1e-14 && (s1 - s2).abs() < 1e-14);
    // d = beta: logarithmic.
    let x = 0.2;
    let om = x / t.powf(a);
    let expect = t.powf(-a) * (om.ln().abs() + 1.0);
    assert!((z_bound_shape(t, &[x], a, 1.0).unwrap() - expect).abs() < 1e-13);
    // Y with d < 2 beta and d = 2 beta.
    let y1 = y_bound_shape(t, &[x], a, 1.0).unwrap();
    assert!((y1 - t.powf(-a + a - 1.0)).abs() < 1e-14);
    let r = 0.3f64;
    let om2 = r / t.powf(a);
    let y2 = y_bound_shape(t, &[r, 0.0], a, 1.0).unwrap();
    assert!((y2 - t.powf(-2.0 * a + a - 1.0) * (om2.ln().abs() + 1.0)).abs() < 1e-13);
    // Far field: log-slope -(d + beta) in |x|.
    for (d, beta) in [(1usize, 1.5), (1, 0.6), (2, 1.0)] {
        let xs = |r: f64| {
            let mut v = vec![0.0; d];
            v[0] = r;
            v
        };
        for f in [z_bound_shape, y_bound_shape] {
            let (r1, r2) = (50.0, 80.0);
            let slope = (f(1.0, &xs(r2), a, beta).unwrap() / f(1.0, &xs(r1), a, beta).unwrap()).ln() / (r2 / r1).ln();
            assert!((slope + d as f64 + beta).abs() < 1e-12);
        }
    }
    assert!(z_bound_shape(1.0, &[1.0], 0.5, 2.5).is_err());
    assert!(y_bound_shape(1.0, &[1.0], 1.5, 1.0).is_err());
}

#[test]
fn case_labels() {
    let label = |w, b, d| ShapeSpec::two_sided(w, 0.5, b, d).unwrap().label;
    assert_eq!(label(Which::Z, 1.5, 1), "Z, d<beta");
    assert_eq!(label(Which::Z, 1.0, 1), "Z, d=beta");
    assert_eq!(label(Which::Z, 0.6, 1), "Z, d>beta");
    assert_eq!(label(Which::Y, 0.5, 1), "Y, d=2beta");
    assert_eq!(label(Which::Y, 0.4, 1), "Y, d>2beta");
    assert_eq!(label(Which::Y, 1.0, 2), "Y, d=2beta");
}

proptest! {
    #[test]
    fn shapes_positive_and_continuous(
        alpha in 0.05f64..0.95,
        beta in 0.1f64..1.95,
        t in 1e-3f64..1e3,
        dim in 1usize..3,
    ) {
        for w in [Which::Z, Which::Y] {
            for shape in [
                ShapeSpec::two_sided(w, alpha, beta, dim).unwrap(),
                ShapeSpec::space_increment(w, alpha, beta, dim).unwrap(),
                ShapeSpec::time_increment(w, alpha, beta, dim).unwrap(),
            ] {
                let lo = shape.eval(t, 1.0 - 1e-9);
                let hi = shape.eval(t, 1.0 + 1e-9);
                prop_assert!(lo > 0.0 && hi > 0.0);
                prop_assert!(lo / hi <= 2.0 && hi / lo <= 2.0);
                for om in [1e-6, 1e-2, 0.5, 3.0, 1e4] {
                    prop_assert!(shape.eval(t, om) > 0.0);
                }
            }
        }
    }

    #[test]
    fn omega_is_scale_invariant(c in 0.01f64..100.0, t in 0.01f64..10.0, x in 0.1f64..10.0, alpha in 0.1f64..0.9, beta in 0.2f64..1.9) {
        let a = omega_scale(t, &[x], alpha, beta).unwrap().omega;
        let b = omega_scale(c * t, &[c.powf(alpha / beta) * x], alpha, beta).unwrap().omega;
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }
}

#[test]
fn two_sided_z_d_below_beta_and_controls() {
    let (a, b) = (0.6, 1.5);
    let table = estimate_table(&sym1(b), a, 65536, 24).unwrap();
    let r = verify_two_sided(&table, Which::Z).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{}", r.to_json());
    assert!(r.slopes.iter().any(|s| s.label.starts_with("far")));
    assert!(r.slopes.iter().any(|s| s.label.starts_with("near")));
    assert!(r.regimes.iter().all(|g| g.spread <= 50.0 && g.ratio_min > 0.0));

    let opts = EstimateOptions::default();
    let swapped = ShapeSpec::two_sided(Which::Y, a, b, 1).unwrap();
    assert_eq!(verify_two_sided_with(&table, Which::Z, &swapped, &opts).unwrap().verdict, Verdict::Fail);
    let perturbed = ShapeSpec::two_sided(Which::Z, a, b, 1).unwrap().perturbed(1.2);
    let bad = verify_two_sided_with(&table, Which::Z, &perturbed, &opts).unwrap();
    assert_eq!(bad.verdict, Verdict::Fail);
    assert!(bad.slopes.iter().any(|s| !s.pass));
}

#[test]
fn two_sided_y_log_case_in_two_dimensions() {
    let sym = StableSymbol::new(1.0, SpectralMeasure::isotropic_2d()).unwrap();
    let table = estimate_table(&sym, 0.4, 2048, 20).unwrap();
    let r = verify_two_sided(&table, Which::Y).unwrap();
    assert_eq!(r.case, "Y, d=2beta");
    assert_eq!(r.verdict, Verdict::Pass, "{}", r.to_json());
    let z = ShapeSpec::two_sided(Which::Z, 0.4, 1.0, 2).unwrap();
    let swapped = verify_two_sided_with(&table, Which::Y, &z, &EstimateOptions::default()).unwrap();
    assert_eq!(swapped.verdict, Verdict::Fail);
}

#[test]
fn small_table_is_inconclusive() {
    let grid = Grid::new(1, 256, 32.0).unwrap();
    let table = KernelTable::build(&sym1(1.5), 0.6, &grid, &[1.0, 2.0], KernelRoute::Fourier).unwrap();
    let r = verify_two_sided(&table, Which::Z).unwrap();
    assert_eq!(r.verdict, Verdict::Inconclusive);
    assert!(!r.pass);
    assert!(!r.notes.is_empty());
}

#[test]
fn ratio_statistics_stable_under_refinement() {
    let (a, b) = (0.6, 1.5);
    let times = geometric_ladder(10.0, 200.0, 6);
    let stats = |n: usize| {
        let grid = Grid::new(1, n, 512.0).unwrap();
        let table = KernelTable::build(&sym1(b), a, &grid, &times, KernelRoute::Fourier).unwrap();
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for (k, &t) in times.iter().enumerate() {
            for i in grid.origin_index()..grid.n() {
                let x = grid.axis_coord(i);
                if (2.0..=256.0).contains(&x) {
                    let r = table.z(k).values()[i] / z_bound_shape(t, &[x], a, b).unwrap();
                    lo = lo.min(r);
                    hi = hi.max(r);
                }
            }
        }
        (lo, hi)
    };
    let (l1, h1) = stats(2048);
    let (l2, h2) = stats(4096);
    assert!((l1 / l2 - 1.0).abs() <= 0.1 && (h1 / h2 - 1.0).abs() <= 0.1, "{l1} {l2} {h1} {h2}");
}

#[test]
fn z_time_increments_uniform() {
    let table = fine_ladder_table(0.6, 1.5);
    let r = verify_increments(&table, Which::Z, IncrementMode::Time).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert!(r.regimes[0].spread <= 50.0);
    assert!(r.constant.unwrap() > 0.0);
}

#[test]
fn y_space_increments_uniform() {
    for (a, b) in [(0.6, 1.5), (0.5, 0.6)] {
        let table = fine_ladder_table(a, b);
        let r = verify_increments(&table, Which::Y, IncrementMode::Space).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.to_json());
        assert!(r.constant.unwrap().is_finite());
    }
}

#[test]
fn time_increments_need_fine_ladder() {
    let grid = Grid::new(1, 1024, 256.0).unwrap();
    let table = KernelTable::build(&sym1(1.5), 0.6, &grid, &[40.0, 60.0], KernelRoute::Fourier).unwrap();
    assert!(matches!(verify_increments(&table, Which::Z, IncrementMode::Time), Err(Error::Precondition(_))));
}

#[test]
fn shift_bound() {
    let grid = Grid::new(1, 256, 16.0).unwrap();
    let table = KernelTable::build(&sym1(1.5), 0.6, &grid, &[0.5, 1.0, 2.0], KernelRoute::Fourier).unwrap();
    let o = grid.origin_index();
    let same = verify_shift_bound(&table, o + 3, o + 3).unwrap();
    assert!(same.pass);
    assert_eq!(same.constant, Some(0.0));
    for shift in [1, 8] {
        let r = verify_shift_bound(&table, o, o + shift).unwrap();
        assert!(r.pass, "{}", r.to_json());
        let c = r.constant.unwrap();
        assert!(c > 0.05 && c < 5.0);
    }
    assert!(matches!(verify_shift_bound(&table, o, o + 40), Err(Error::Precondition(_))));
}

#[test]
fn gaussian_lower_bounds() {
    let grid = Grid::new(1, 1024, 64.0).unwrap();
    let table = KernelTable::build(&sym1(1.0), 0.5, &grid, &[0.5, 1.0, 2.0, 4.0], KernelRoute::Fourier).unwrap();
    for w in [Which::Z, Which::Y] {
        let r = gaussian_lower_bound(&table, w).unwrap();
        assert!(r.pass);
        let c1 = r.constant.unwrap();
        assert!(c1 > 0.0 && c1.is_finite());
    }
    let other = KernelTable::build(&sym1(1.0), 0.6, &grid, &[1.0], KernelRoute::Fourier).unwrap();
    assert!(matches!(gaussian_lower_bound(&other, Which::Z), Err(Error::Precondition(_))));
}

#[test]
fn report_serialization() {
    let grid = Grid::new(1, 1024, 64.0).unwrap();
    let table = KernelTable::build(&sym1(1.0), 0.5, &grid, &[1.0, 2.0], KernelRoute::Fourier).unwrap();
    let r = gaussian_lower_bound(&table, Which::Z).unwrap();
    let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(v["verdict"], "pass");
    let csv = summary_csv(&[r.clone(), r]);
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("case,verdict,constant"));
}
