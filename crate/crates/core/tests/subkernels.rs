use fdlab_core::green::convolve;
use fdlab_core::specfun::{g_kernel, mittag_leffler, recip_gamma, MLParams, StableIndex};
use fdlab_core::spectral::{DensityLaw, SpectralMeasure, StableSymbol};
use fdlab_core::subkernels::*;
use fdlab_core::{Error, Field, Grid};
use proptest::prelude::*;
use std::f64::consts::PI;

fn sym(dim: usize, beta: f64) -> StableSymbol {
    let m = if dim == 1 {
        SpectralMeasure::symmetric_atoms(1.0).unwrap()
    } else {
        SpectralMeasure::density(DensityLaw::Cosine { c0: 1.0 / (2.0 * PI), c1: 0.04, m: 2 }, 512).unwrap()
    };
    StableSymbol::new(beta, m).unwrap()
}

/// Grid with `h = ell / 4` and `L = 16 ell` for the kernel length scale `ell = t^{a/b}`.
fn grid_for(dim: usize, alpha: f64, beta: f64, t: f64, n: usize) -> Grid {
    let ell = t.powf(alpha / beta);
    Grid::new(dim, n, n as f64 * ell / 8.0).unwrap()
}

/// Grid with `L = 8 ell(t_max)`, which resolves every time from `t_max` down to
/// where `ell` reaches `32 ell(t_max) / n`.
fn grid_upto(dim: usize, alpha: f64, beta: f64, t_max: f64, n: usize) -> Grid {
    Grid::new(dim, n, 8.0 * t_max.powf(alpha / beta)).unwrap()
}

#[test]
fn z_mass_and_evenness() {
    let s = sym(1, 1.5);
    let grid = Grid::new(1, 1024, 32.0).unwrap();
    for &t in &[0.25, 1.0, 4.0] {
        let z = z_kernel(&s, 0.6, t, &grid).unwrap();
        assert!((z.mass() - 1.0).abs() < 2e-3, "t {t}: {}", z.mass());
        assert!(z.evenness_residual() <= 1e-12 * z.linf());
    }
}

#[test]
fn z_origin_matches_fourier_oracle() {
    let s = sym(1, 1.5);
    let grid = grid_for(1, 0.6, 1.5, 1.0, 512);
    let a = z_kernel(&s, 0.6, 1.0, &grid).unwrap().at_origin();
    let b = z_kernel_fourier(&s, 0.6, 1.0, &grid).unwrap().at_origin();
    assert!((a - b).abs() <= 1e-3 * b.abs());
}

#[test]
fn z_fourier_multiplier_at_small_times() {
    // E_{a,1}(-x) = 1 - x/Gamma(1+a) + O(x^2), which matches exp(-x/Gamma(1+a)) to second order.
    let a = 0.9;
    let p = MLParams::new(a, 1.0).unwrap();
    let g = recip_gamma(1.0 + a);
    for &t in &[1e-2f64, 1e-3, 1e-4] {
        let x = t.powf(a) * 1.0;
        let e = mittag_leffler(p, -x).unwrap();
        let diff = (e - (-x * g).exp()).abs();
        assert!(diff <= x * x, "t {t}: {diff}");
    }
}

#[test]
fn y_mass_matches_g_alpha() {
    let s = sym(1, 1.0);
    let grid = grid_for(1, 0.5, 1.0, 1.0, 512);
    let y = y_kernel(&s, 0.5, 1.0, &grid).unwrap();
    assert!((y.mass() - 0.5641895835).abs() < 1e-3);
    assert!(y.min() >= -1e-3 * y.max());
    assert!(y.evenness_residual() <= 1e-12 * y.linf());
    let yf = y_kernel_fourier(&s, 0.5, 1.0, &grid).unwrap();
    assert!(y.max_abs_diff(&yf).unwrap() <= 1e-3 * y.linf());
}

#[test]
fn subordination_agrees_with_fourier_on_matrix() {
    for dim in [1usize, 2] {
        for &alpha in &[0.3, 0.5, 0.75] {
            for &beta in &[0.6, 1.0, 1.5] {
                let s = sym(dim, beta);
                let grid = grid_upto(dim, alpha, beta, 1.0, 256);
                let table_s = KernelTable::build(&s, alpha, &grid, &[0.5, 1.0], KernelRoute::Subordination).unwrap();
                let table_f = KernelTable::build(&s, alpha, &grid, &[0.5, 1.0], KernelRoute::Fourier).unwrap();
                for i in 0..2 {
                    let (zs, zf) = (table_s.z(i), table_f.z(i));
                    assert!(zs.max_abs_diff(zf).unwrap() <= 1e-3 * zs.linf(), "Z d {dim} a {alpha} b {beta}");
                    let (ys, yf) = (table_s.y(i), table_f.y(i));
                    assert!(ys.max_abs_diff(yf).unwrap() <= 1e-3 * ys.linf(), "Y d {dim} a {alpha} b {beta}");
                }
            }
        }
    }
}

#[test]
fn subordination_rule_moments() {
    for &alpha in &[0.3, 0.5, 0.75] {
        let rule = SubordinationRule::new(alpha).unwrap();
        assert!((rule.integrate(|_| 1.0) - 1.0).abs() < 1e-10);
        assert!((rule.integrate(|s| s) - recip_gamma(1.0 + alpha)).abs() < 1e-10);
        assert!((rule.integrate(|s| s * s) - 2.0 * recip_gamma(1.0 + 2.0 * alpha)).abs() < 1e-9);
        // Laplace transform of M_a is E_{a,1}(-lambda).
        let p = MLParams::new(alpha, 1.0).unwrap();
        for &lam in &[0.1, 1.0, 10.0, 1e3] {
            let v = rule.integrate(|s| (-lam * s).exp());
            assert!(
                (v - mittag_leffler(p, -lam).unwrap()).abs() < 1e-10,
                "a {alpha} lam {lam}: {v} vs {}",
                mittag_leffler(p, -lam).unwrap()
            );
        }
    }
    assert!(SubordinationRule::new(1.0).is_err());
    let _ = StableIndex::new(0.5).unwrap();
}

#[test]
fn table_mass_laws_across_ladder() {
    let (alpha, beta) = (0.4, 1.2);
    let s = sym(2, beta);
    let times = geometric_ladder(0.5, 2.0, 8);
    let grid = grid_upto(2, alpha, beta, 2.0, 128);
    let table = KernelTable::build(&s, alpha, &grid, &times, KernelRoute::Fourier).unwrap();
    for (k, &t) in table.times().iter().enumerate() {
        let g = g_kernel(alpha, t).unwrap();
        assert!((table.z(k).mass() - 1.0).abs() < 2e-3);
        assert!((table.y(k).mass() - g).abs() < 2e-3 * g);
        assert!(table.z(k).evenness_residual() <= 1e-12 * table.z(k).linf());
        assert!(table.y(k).evenness_residual() <= 1e-12 * table.y(k).linf());
    }
}

#[test]
fn kernels_scale_self_similarly() {
    let (alpha, beta) = (0.5, 1.5);
    let s = sym(1, beta);
    let t: f64 = 8.0;
    let n = 512;
    let grid_t = grid_for(1, alpha, beta, t, n);
    let grid_1 = grid_for(1, alpha, beta, 1.0, n);
    let zt = z_kernel_fourier(&s, alpha, t, &grid_t).unwrap();
    let z1 = z_kernel_fourier(&s, alpha, 1.0, &grid_1).unwrap();
    let scale = t.powf(-alpha / beta);
    let err = zt.values().iter().zip(z1.values()).map(|(a, b)| (a - scale * b).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-3 * zt.linf());
}

#[test]
fn guard_refuses_unresolved_times() {
    let s = sym(1, 1.0);
    let grid = Grid::new(1, 64, 8.0).unwrap();
    assert!(matches!(z_kernel(&s, 0.5, 1e-4, &grid), Err(Error::Resolution(_))));
    assert!(matches!(y_kernel_fourier(&s, 0.5, 1e4, &grid), Err(Error::Resolution(_))));
    assert!(matches!(z_kernel(&s, 1.0, 1.0, &grid), Err(Error::Domain(_))));
    assert!(matches!(z_kernel(&sym(2, 1.0), 0.5, 1.0, &grid), Err(Error::GridMismatch(_))));
    assert!(KernelTable::build(&s, 0.5, &grid, &[1.0, 1.0], KernelRoute::Fourier).is_err());
}

#[test]
fn approximate_identity() {
    let (alpha, beta) = (0.75, 1.5);
    let s = sym(1, beta);
    let grid = Grid::new(1, 4096, 8.0).unwrap();
    let f = Field::from_fn(grid, 0.0, |x| {
        let r = x[0] / 1.5;
        if r.abs() < 1.0 {
            (1.0 - 1.0 / (1.0 - r * r)).exp()
        } else {
            0.0
        }
    })
    .unwrap();
    let l = grid.half_width();
    let mut errs = Vec::new();
    for &t in &[1e-1, 1e-2, 1e-3] {
        let z = z_kernel(&s, alpha, t, &grid).unwrap();
        let c = convolve(&z, &f).unwrap();
        let e = (0..grid.len())
            .filter(|&i| grid.radius(i) <= l / 4.0)
            .map(|i| (c.values()[i] - f.values()[i]).abs())
            .fold(0.0, f64::max);
        errs.push(e);
    }
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    assert!(errs[2] <= 0.02 * f.linf(), "{errs:?}");
}

#[test]
fn yz_relation_holds_at_probes() {
    for (alpha, beta) in [(0.5, 1.0), (0.3, 1.5)] {
        let s = sym(1, beta);
        let (t0, t1) = (1e-3f64, 1.0f64);
        let h = t0.powf(alpha / beta) / 4.0;
        let l = 16.0 * 10f64.powf(1.0 / beta) * t1.powf(alpha / beta);
        let mut n = 64;
        while 2.0 * l / n as f64 > h {
            n *= 2;
        }
        let grid = Grid::new(1, n, l).unwrap();
        let count = ((t1 / t0).ln() / 1.05f64.ln()).ceil() as usize + 1;
        let table =
            KernelTable::build(&s, alpha, &grid, &geometric_ladder(t0, t1, count), KernelRoute::Fourier).unwrap();
        let o = grid.origin_index();
        let probes: Vec<usize> = [1.0f64, 10.0]
            .iter()
            .map(|om| o + (om.powf(1.0 / beta) * t1.powf(alpha / beta) / grid.h()).round() as usize)
            .chain([o])
            .collect();
        let rep = verify_yz_relation(&table, &probes).unwrap();
        assert_eq!(rep.skipped, vec![o]);
        assert!(rep.pass, "a {alpha} b {beta}: {}", rep.max_residual);
        assert!(rep.max_residual <= 2e-2);
    }
}

#[test]
fn yz_relation_refuses_coarse_ladder() {
    let s = sym(1, 1.0);
    let grid = Grid::new(1, 256, 8.0).unwrap();
    let table = KernelTable::build(&s, 0.5, &grid, &geometric_ladder(0.1, 1.0, 6), KernelRoute::Fourier).unwrap();
    assert!(matches!(verify_yz_relation(&table, &[140]), Err(Error::Precondition(_))));
}

#[test]
fn table_export_import_round_trip() {
    let dir = std::env::temp_dir().join(format!("fdlab-table-{}", std::process::id()));
    let s = sym(2, 0.9);
    let grid = grid_upto(2, 0.6, 0.9, 1.3, 128);
    let table = KernelTable::build(&s, 0.6, &grid, &[0.7, 1.0, 1.3], KernelRoute::Fourier).unwrap();
    table.export(&dir).unwrap();
    let back = KernelTable::import(&dir).unwrap();
    assert_eq!(back.times(), table.times());
    assert_eq!(back.alpha(), table.alpha());
    assert_eq!(back.sym().beta(), 0.9);
    assert_eq!(back.sym().measure(), s.measure());
    for k in 0..3 {
        assert_eq!(back.z(k), table.z(k));
        assert_eq!(back.y(k), table.y(k));
    }
    std::fs::write(dir.join("manifest.json"), "{\"format\": \"other\"}").unwrap();
    assert!(matches!(KernelTable::import(&dir), Err(Error::Format(_))));
    std::fs::remove_dir_all(&dir).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mass_laws_hold(alpha in 0.15f64..0.9, beta in 0.4f64..1.9, t in 0.2f64..5.0) {
        let s = sym(1, beta);
        let grid = grid_for(1, alpha, beta, t, 128);
        let table = KernelTable::build(&s, alpha, &grid, &[t], KernelRoute::Fourier).unwrap();
        let g = g_kernel(alpha, t).unwrap();
        prop_assert!((table.z(0).mass() - 1.0).abs() < 2e-3);
        prop_assert!((table.y(0).mass() - g).abs() < 2e-3 * g);
        prop_assert!(table.z(0).evenness_residual() <= 1e-12 * table.z(0).linf());
        prop_assert!(table.z(0).min() >= -1e-3 * table.z(0).max());
    }
}
