use fdlab_core::quad::{integrate_with_breaks, Tolerance};
use fdlab_core::specfun::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// e^{x^2} erfc(x), switching to the asymptotic expansion where the product overflows.
fn erfcx(x: f64) -> f64 {
    if x < 20.0 {
        (x * x).exp() * statrs::function::erf::erfc(x)
    } else {
        let y = 1.0 / (2.0 * x * x);
        let mut s = 1.0;
        let mut t = 1.0;
        for k in 1..12 {
            t *= -((2 * k - 1) as f64) * y;
            s += t;
        }
        s / (x * PI.sqrt())
    }
}

fn series_oracle(a: f64, b: f64, z: f64) -> f64 {
    let mut s = 0.0;
    for k in 0..400 {
        let g = statrs::function::gamma::gamma(a * k as f64 + b);
        if !g.is_finite() {
            break;
        }
        s += z.powi(k) / g;
    }
    s
}

fn levy(tau: f64) -> f64 {
    (-1.0 / (4.0 * tau)).exp() / (2.0 * PI.sqrt() * tau.powf(1.5))
}

/// Tail mass P(T > tau) of the one-sided stable law, from its convergent series.
fn stable_tail(alpha: f64, tau: f64) -> f64 {
    let mut s = 0.0;
    let mut fact = 1.0;
    for k in 1..200 {
        fact *= k as f64;
        let mag = statrs::function::gamma::gamma(alpha * k as f64) / fact * tau.powf(-alpha * k as f64);
        let term = mag * (PI * alpha * k as f64).sin();
        s += if k % 2 == 1 { term } else { -term };
        if mag < 1e-20 {
            break;
        }
    }
    s / PI
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp()).collect()
}

fn lsq_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[test]
fn gamma_matches_reference_on_0_50() {
    for i in 1..=500 {
        let x = 0.1 * i as f64;
        let r = statrs::function::gamma::gamma(x);
        assert!(rel(gamma_fn(x).unwrap(), r) < 1e-12, "x = {x}");
    }
    for &x in &[1e-3, 0.013, 0.27, 0.5] {
        let r = statrs::function::gamma::gamma(x);
        assert!(rel(gamma_fn(x).unwrap(), r) < 1e-12, "x = {x}");
    }
}

proptest! {
    #[test]
    fn gamma_recurrence(x in 0.001f64..10.0) {
        let lhs = gamma_fn(x + 1.0).unwrap();
        let rhs = x * gamma_fn(x).unwrap();
        prop_assert!(rel(lhs, rhs) <= 1e-10);
    }

    #[test]
    fn g_kernel_decreasing(rho in 0.05f64..0.99, t in 0.01f64..100.0, f in 1.01f64..3.0) {
        prop_assert!(g_kernel(rho, t * f).unwrap() < g_kernel(rho, t).unwrap());
    }

    #[test]
    fn ml_completely_monotone_samples(a in 0.2f64..1.0, x in 0.0f64..199.0) {
        let p = MLParams::new(a, 1.0).unwrap();
        let e0 = mittag_leffler(p, -x).unwrap();
        let e1 = mittag_leffler(p, -(x + 1.0)).unwrap();
        prop_assert!(e1 >= 0.0);
        prop_assert!(e1 <= e0 * (1.0 + 1e-12));
    }
}

#[test]
fn ml_order_one_is_exp() {
    let p = MLParams::new(1.0, 1.0).unwrap();
    for i in 0..=400 {
        let z = -20.0 + 0.1 * i as f64;
        assert!(rel(mittag_leffler(p, z).unwrap(), z.exp()) <= 1e-10, "z = {z}");
    }
}

#[test]
fn ml_half_order_matches_erfcx() {
    let p = MLParams::new(0.5, 1.0).unwrap();
    let e = std::f64::consts::E * statrs::function::erf::erfc(1.0);
    assert!(rel(mittag_leffler(p, -1.0).unwrap(), e) < 1e-8);
    for i in 0..=300 {
        let x = 200f64 * (i as f64 / 300.0).powi(2);
        let v = mittag_leffler(p, -x).unwrap();
        assert!(rel(v, erfcx(x)) < 1e-8, "x = {x}: {v} vs {}", erfcx(x));
    }
    let table = MittagLefflerTable::new(p).unwrap();
    for &x in &[500.0, 1e3, 3e3, 1e4, 1e6, 1e8] {
        assert!(rel(mittag_leffler(p, -x).unwrap(), erfcx(x)) < 1e-12, "x = {x}");
        assert!(rel(table.eval_neg(x), erfcx(x)) < 1e-11, "table x = {x}");
    }
}

#[test]
fn ml_series_oracle_small_arguments() {
    for &a in &[0.2, 0.35, 0.5, 0.75, 0.9] {
        for &b in &[a, 1.0, a + 1.0, a + 2.0, 1.7] {
            let p = MLParams::new(a, b).unwrap();
            for i in 0..=40 {
                let z = -2.0 + 4.0 * i as f64 / 40.0;
                if (z < 0.0 && z.abs().powf(1.0 / a) > 4.0) || z.abs().powf(1.0 / a) > 40.0 {
                    continue;
                }
                let o = series_oracle(a, b, z);
                let v = mittag_leffler(p, z).unwrap();
                assert!((v - o).abs() <= 1e-9 * o.abs().max(1e-3), "a={a} b={b} z={z}: {v} vs {o}");
            }
        }
    }
}

#[test]
fn ml_crossover_band_matches_series() {
    // Regimes meet at |z|^{1/a} = 3; compare with the plain series across the band.
    for &a in &[0.3, 0.5, 0.8] {
        for &b in &[1.0, a, a + 1.0] {
            let p = MLParams::new(a, b).unwrap();
            for i in 0..=30 {
                let r = 2.0 + 2.0 * i as f64 / 30.0;
                let z = -r.powf(a);
                let o = series_oracle(a, b, z);
                let v = mittag_leffler(p, z).unwrap();
                assert!(rel(v, o) <= 1e-9, "a={a} b={b} z={z}: {v} vs {o}");
            }
        }
    }
}

#[test]
fn ml_laplace_transform_of_subordination_weight() {
    // E_{a,1}(-x) = int_0^inf e^{-x s} M_a(s) ds.
    for &a in &[0.3, 0.6, 0.85] {
        let idx = StableIndex::new(a).unwrap();
        for &x in &[0.5, 3.0, 30.0, 150.0] {
            let f = |u: f64| {
                let s = u.exp();
                (ln_subordination_weight(idx, s).unwrap() - x * s + u).exp()
            };
            let c = -(x.ln());
            let pts = [-60.0, c - 4.0, c, c + 4.0, 6.0];
            let tol = Tolerance { abs: 1e-15, rel: 1e-11, max_intervals: 4000 };
            let o = integrate_with_breaks(f, &pts, tol).unwrap().value;
            let v = mittag_leffler(MLParams::new(a, 1.0).unwrap(), -x).unwrap();
            assert!(rel(v, o) < 1e-8, "a={a} x={x}: {v} vs {o}");
        }
    }
}

#[test]
fn ml_large_negative_asymptotics() {
    for &a in &[0.2, 0.5, 0.7] {
        for &b in &[1.0, a, a + 1.0] {
            let p = MLParams::new(a, b).unwrap();
            let x = 200.0f64;
            let mut o = 0.0;
            for j in 1..8 {
                let g = statrs::function::gamma::gamma(b - a * j as f64);
                let t = x.powi(-j) / g;
                o += if j % 2 == 1 { t } else { -t };
            }
            let v = mittag_leffler(p, -x).unwrap();
            assert!(rel(v, o) < 1e-8, "a={a} b={b}: {v} vs {o}");
        }
    }
}

#[test]
fn ml_positive_arguments() {
    for &a in &[0.5, 0.8, 0.9] {
        let p = MLParams::new(a, 1.0).unwrap();
        for &z in &[0.5, 2.0, 5.0, 20.0, 50.0] {
            let v = mittag_leffler(p, z).unwrap();
            let big = z.powf(1.0 / a);
            if big > 700.0 {
                assert_eq!(v, f64::INFINITY);
                continue;
            }
            let o = if big <= 30.0 {
                series_oracle(a, 1.0, z)
            } else {
                let mut s = big.exp() / a;
                for j in 1..6 {
                    s -= z.powi(-j) / statrs::function::gamma::gamma(1.0 - a * j as f64);
                }
                s
            };
            assert!(rel(v, o) < 1e-8, "a={a} z={z}: {v} vs {o}");
        }
    }
}

#[test]
fn stable_density_levy_case() {
    let idx = StableIndex::new(0.5).unwrap();
    assert!(rel(stable_density(idx, 1.0).unwrap(), 0.219_695_644_733_861_3) < 1e-9);
    for tau in log_grid(0.05, 50.0, 200) {
        assert!(rel(stable_density(idx, tau).unwrap(), levy(tau)) < 1e-6, "tau {tau}");
    }
    for tau in log_grid(1e-3, 1e8, 60) {
        let l = levy(tau).ln();
        assert!((ln_stable_density(idx, tau).unwrap() - l).abs() < 1e-8 * l.abs().max(1.0));
    }
    assert!(stable_density(idx, 0.0).is_err());
}

#[test]
fn stable_density_laplace_transform() {
    for &a in &[0.3, 0.7] {
        let idx = StableIndex::new(a).unwrap();
        for &lam in &[0.3, 1.0, 4.0] {
            let f = |u: f64| {
                let t = u.exp();
                (ln_stable_density(idx, t).unwrap() - lam * t + u).exp()
            };
            let tol = Tolerance { abs: 1e-14, rel: 1e-11, max_intervals: 4000 };
            let v = integrate_with_breaks(f, &[-25.0, -3.0, 0.0, 3.0, 6.0], tol).unwrap().value;
            assert!(rel(v, (-lam.powf(a)).exp()) < 1e-8, "a={a} lam={lam}: {v}");
        }
    }
}

fn mass_between(a: f64, lo: f64, hi: f64) -> f64 {
    let idx = StableIndex::new(a).unwrap();
    let f = |u: f64| (ln_stable_density(idx, u.exp()).unwrap() + u).exp();
    let tol = Tolerance { abs: 1e-13, rel: 1e-11, max_intervals: 4000 };
    let mut pts = vec![lo.ln()];
    let mut u = lo.ln().ceil();
    while u < hi.ln() {
        pts.push(u);
        u += 1.0;
    }
    pts.push(hi.ln());
    integrate_with_breaks(f, &pts, tol).unwrap().value
}

#[test]
fn stable_density_normalization() {
    for &a in &[0.3, 0.5, 0.7] {
        let inner = mass_between(a, 1e-4, 1e4);
        let tail = stable_tail(a, 1e4);
        assert!((inner + tail - 1.0).abs() <= 1e-4, "alpha {a}: {inner} + {tail}");
        assert!((inner - (1.0 - tail)).abs() <= 1e-8, "alpha {a}: {inner} {tail}");
    }
}

#[test]
fn stable_density_tail_slope() {
    for &a in &[0.3, 0.5, 0.7] {
        let idx = StableIndex::new(a).unwrap();
        let ts = log_grid(1e2, 1e4, 41);
        let x: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
        let y: Vec<f64> = ts.iter().map(|&t| ln_stable_density(idx, t).unwrap()).collect();
        let s = lsq_slope(&x, &y);
        assert!(rel(s, -(1.0 + a)) <= 0.02, "alpha {a}: slope {s}");
    }
}

#[test]
fn stable_density_small_tau_rate() {
    for &(a, tau) in &[(0.5, 1e-3), (0.3, 1e-10), (0.7, 1e-3)] {
        let idx = StableIndex::new(a).unwrap();
        let c = -ln_stable_density(idx, tau).unwrap() * tau.powf(a / (1.0 - a));
        assert!(rel(c, idx.rate_constant()) <= 0.05, "alpha {a}: {c}");
    }
}

#[test]
fn subordination_weight_moments() {
    let moment = |a: f64, k: i32| {
        let idx = StableIndex::new(a).unwrap();
        let f = |u: f64| (ln_subordination_weight(idx, u.exp()).unwrap() + (k + 1) as f64 * u).exp();
        let tol = Tolerance { abs: 1e-14, rel: 1e-11, max_intervals: 4000 };
        let pts: Vec<f64> = (-40..=4).map(|i| i as f64).collect();
        integrate_with_breaks(f, &pts, tol).unwrap().value
    };
    assert!((moment(0.6, 0) - 1.0).abs() <= 1e-6);
    assert!((moment(0.5, 1) - std::f64::consts::FRAC_2_SQRT_PI).abs() <= 1e-5);
    for &a in &[0.3, 0.75] {
        assert!((moment(a, 0) - 1.0).abs() <= 1e-8);
        let m1 = 1.0 / gamma_fn(1.0 + a).unwrap();
        assert!(rel(moment(a, 1), m1) <= 1e-8);
    }
}

#[test]
fn subordination_weight_shape() {
    let idx = StableIndex::new(0.5).unwrap();
    // M_{1/2}(s) = exp(-s^2/4)/sqrt(pi)
    for &s in &[1e-6f64, 0.1, 1.0, 3.0, 10.0] {
        let o = (-s * s / 4.0).exp() / PI.sqrt();
        assert!(rel(subordination_weight(idx, s).unwrap(), o) < 1e-9, "s {s}");
    }
    let m50 = subordination_weight(idx, 50.0).unwrap();
    assert!(m50 * 50f64.powi(40) < 1e-100);
    let idx = StableIndex::new(0.3).unwrap();
    let m0 = subordination_weight(idx, 1e-9).unwrap();
    assert!(rel(m0, 1.0 / gamma_fn(0.7).unwrap()) < 1e-6);
    assert!(subordination_weight(idx, -1.0).is_err());
}
