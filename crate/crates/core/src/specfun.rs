//! Scalar special functions: Gamma, the fractional kernel `g_rho`, two-parameter
//! Mittag-Leffler functions, the one-sided stable density and the subordination weight.

use crate::error::{domain, Error, Result};
use crate::quad::{integrate_with_breaks, Tolerance};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Parameters `(a, b)` of the Mittag-Leffler function `E_{a,b}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MLParams {
    a: f64,
    b: f64,
}

impl MLParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a <= 1.0) {
            return domain(format!("Mittag-Leffler order a = {a} outside (0, 1]"));
        }
        if !(b > 0.0 && b.is_finite()) {
            return domain(format!("Mittag-Leffler parameter b = {b} must be positive"));
        }
        Ok(MLParams { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

/// Stability index `alpha` in `(0, 1)` of a one-sided stable law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableIndex {
    alpha: f64,
}

impl StableIndex {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return domain(format!("stable index alpha = {alpha} outside (0, 1)"));
        }
        Ok(StableIndex { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Small-argument rate constant `c_alpha = (1-alpha) alpha^{alpha/(1-alpha)}`.
    pub fn rate_constant(&self) -> f64 {
        let a = self.alpha;
        (1.0 - a) * a.powf(a / (1.0 - a))
    }
}

fn lanczos_sum(x: f64) -> f64 {
    let mut s = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        s += c / (x + i as f64);
    }
    s
}

/// `sin(pi x)` with exact zeros at the integers.
fn sin_pi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    (PI * r).sin()
}

/// Euler Gamma function for positive arguments.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || x.is_nan() {
        return domain(format!("gamma_fn requires x > 0, got {x}"));
    }
    Ok(gamma_pos(x))
}

fn gamma_pos(x: f64) -> f64 {
    if x >= 1.0 && x == x.floor() && x <= 171.0 {
        let mut f = 1.0;
        let mut k = 2.0;
        while k < x {
            f *= k;
            k += 1.0;
        }
        return f;
    }
    if x < 0.5 {
        return PI / (sin_pi(x) * gamma_pos(1.0 - x));
    }
    if x > 171.7 {
        return f64::INFINITY;
    }
    let y = x - 1.0;
    let t = y + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(y + 0.5) * (-t).exp() * lanczos_sum(y)
}

/// Natural logarithm of Gamma for positive arguments.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return domain(format!("ln_gamma requires x > 0, got {x}"));
    }
    Ok(ln_gamma_pos(x))
}

fn ln_gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        return (PI / sin_pi(x)).ln() - ln_gamma_pos(1.0 - x);
    }
    if x < 20.0 {
        return gamma_pos(x).ln();
    }
    let y = x - 1.0;
    let t = y + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (y + 0.5) * t.ln() - t + lanczos_sum(y).ln()
}

/// `1/Gamma(x)` for any real `x`, zero at the non-positive integers.
pub fn recip_gamma(x: f64) -> f64 {
    if x > 0.0 {
        if x > 171.0 {
            return (-ln_gamma_pos(x)).exp();
        }
        return 1.0 / gamma_pos(x);
    }
    if x == x.floor() {
        return 0.0;
    }
    sin_pi(x) * gamma_pos(1.0 - x) / PI
}

/// Fractional integration kernel `g_rho(t) = t^{rho-1}/Gamma(rho)`.
pub fn g_kernel(rho: f64, t: f64) -> Result<f64> {
    if !(rho > 0.0 && rho <= 1.0) {
        return domain(format!("g_kernel requires rho in (0, 1], got {rho}"));
    }
    if !(t > 0.0) {
        return domain(format!("g_kernel requires t > 0, got {t}"));
    }
    Ok(g_any(rho, t))
}

/// `t^{rho-1}/Gamma(rho)` for any `rho > 0` and `t > 0`.
pub(crate) fn g_any(rho: f64, t: f64) -> f64 {
    if rho == 1.0 {
        return 1.0;
    }
    t.powf(rho - 1.0) * recip_gamma(rho)
}

/// Two-parameter Mittag-Leffler function `E_{a,b}(z)` for real `z`.
///
/// Returns `+inf` when the value overflows (large positive `z`).
pub fn mittag_leffler(p: MLParams, z: f64) -> Result<f64> {
    if !z.is_finite() {
        return domain(format!("Mittag-Leffler argument must be finite, got {z}"));
    }
    let (a, b) = (p.a, p.b);
    if z == 0.0 {
        return Ok(recip_gamma(b));
    }
    if a == 1.0 {
        return Ok(ml_order_one(b, z));
    }
    ml_fractional(a, b, z)
}

fn ml_order_one(b: f64, z: f64) -> f64 {
    if b == 1.0 {
        return z.exp();
    }
    if b == 2.0 {
        return z.exp_m1() / z;
    }
    if z >= -3.0 {
        return ml_series(1.0, b, z);
    }
    if b < 1.0 {
        return recip_gamma(b) + z * ml_order_one(b + 1.0, z);
    }
    // E_{1,b}(z) = (1/Gamma(b-1)) int_0^1 e^{zs} (1-s)^{b-2} ds for b > 1.
    let tol = Tolerance { abs: 1e-300, rel: 1e-14, max_intervals: 4000 };
    let brk = [0.0, (1.0 / -z).min(0.5), 0.5, 1.0];
    let r = integrate_with_breaks(|s| (z * s).exp() * (1.0 - s).powf(b - 2.0), &brk, tol)
        .map(|q| q.value)
        .unwrap_or(f64::NAN);
    r * recip_gamma(b - 1.0)
}

fn ml_series(a: f64, b: f64, z: f64) -> f64 {
    let lz = z.abs().ln();
    let neg = z < 0.0;
    let kpeak = (z.abs().powf(1.0 / a) / a).ceil() as usize + 2;
    let mut sum = 0.0;
    let mut small = 0;
    for k in 0..20_000usize {
        let arg = a * k as f64 + b;
        let lmag = k as f64 * lz;
        let term =
            if arg < 150.0 && lmag < 600.0 { lmag.exp() * recip_gamma(arg) } else { (lmag - ln_gamma_pos(arg)).exp() };
        let term = if neg && k % 2 == 1 { -term } else { term };
        sum += term;
        if k > kpeak && term.abs() <= 1e-17 * sum.abs() {
            small += 1;
            if small >= 2 {
                break;
            }
        } else {
            small = 0;
        }
    }
    sum
}

fn ml_asymptotic(a: f64, b: f64, x: f64) -> Option<f64> {
    // E_{a,b}(-x) ~ sum_{j>=1} (-1)^{j+1} x^{-j} / Gamma(b - a j)
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut xp = 1.0;
    for j in 1..60 {
        xp /= x;
        let term = xp * recip_gamma(b - a * j as f64);
        let signed = if j % 2 == 1 { term } else { -term };
        sum += signed;
        let mag = term.abs();
        if mag != 0.0 && mag > prev && j > 2 {
            return None;
        }
        if j > 1 && mag != 0.0 && mag <= 1e-17 * sum.abs() {
            return Some(sum);
        }
        if mag != 0.0 {
            prev = mag;
        }
    }
    None
}

fn ml_fractional(a: f64, b: f64, z: f64) -> Result<f64> {
    let big_r = z.abs().powf(1.0 / a);
    if z < 0.0 && big_r <= 3.0 {
        return Ok(ml_series(a, b, z));
    }
    if z > 0.0 && big_r <= 50.0 {
        return Ok(ml_series(a, b, z));
    }
    if z > 0.0 && big_r > 700.0 {
        return Ok(f64::INFINITY);
    }
    if z < 0.0 && -z >= 1e3 {
        if let Some(v) = ml_asymptotic(a, b, -z) {
            return Ok(v);
        }
    }
    if b >= 1.0 + a - 0.05 && b - a > 0.0 {
        let lower = ml_fractional(a, b - a, z)?;
        return Ok((lower - recip_gamma(b - a)) / z);
    }
    let residue = if z > 0.0 { z.powf((1.0 - b) / a) * big_r.exp() / a } else { 0.0 };
    let cut = ml_branch_cut(a, b, z, residue.abs())?;
    Ok(residue + cut)
}

/// Branch-cut integral for `0 < a < 1`, `0 < b < 1 + a`, evaluated in `u = ln r`.
fn ml_branch_cut(a: f64, b: f64, z: f64, scale: f64) -> Result<f64> {
    let x = -z;
    let sb = (PI * b).sin();
    let sab = (PI * (a - b)).sin();
    let ca = (PI * a).cos();
    let f = |u: f64| {
        let r = u.exp();
        let ra = (a * u).exp();
        let num = ra * sb - x * sab;
        let den = ra * ra + 2.0 * x * ra * ca + x * x;
        (-r).exp() * ((a - b + 1.0) * u).exp() * num / den / PI
    };
    let rate = 1.0 + a - b;
    let lx = x.abs().ln();
    let u_lo = (-(45.0 + lx.abs()) / rate).max(-740.0);
    let u_hi = 60f64.ln();
    let mut pts = vec![u_lo, 0.0, u_hi];
    let ustar = lx / a;
    for d in [-2.0, 0.0, 2.0] {
        let u = ustar + d;
        if u > u_lo && u < u_hi {
            pts.push(u);
        }
    }
    pts.sort_by(|p, q| p.total_cmp(q));
    pts.dedup();
    let tol = Tolerance { abs: 1e-17 * (1.0 + scale), rel: 1e-13, max_intervals: 6000 };
    let r = integrate_with_breaks(f, &pts, tol)
        .map_err(|e| Error::Quadrature(format!("Mittag-Leffler a={a} b={b} z={z}: {e}")))?;
    Ok(r.value)
}

/// Fast evaluator of `x -> E_{a,b}(-x)` on `x >= 0`, for `0 < a < 1`.
///
/// Piecewise Chebyshev interpolation in `ln x` on `[1e-6, 1e6]`; series and
/// asymptotic expansions outside. Accuracy is about 1e-12 relative.
#[derive(Debug, Clone)]
pub struct MittagLefflerTable {
    a: f64,
    b: f64,
    u_lo: f64,
    width: f64,
    coeffs: Vec<[f64; CHEB_N]>,
    x_lo: f64,
    x_hi: f64,
    small: [f64; 3],
}

const CHEB_N: usize = 25;

impl MittagLefflerTable {
    pub fn new(p: MLParams) -> Result<Self> {
        let (a, b) = (p.a, p.b);
        if a >= 1.0 {
            return domain("MittagLefflerTable needs a < 1");
        }
        let u_lo = 1e-6f64.ln();
        let u_hi = 1e6f64.ln();
        let width = (2.0 * (1.0 - a)).clamp(0.1, 0.5);
        let panels = ((u_hi - u_lo) / width).ceil() as usize;
        let width = (u_hi - u_lo) / panels as f64;
        let m = CHEB_N;
        let nodes: Vec<f64> = (0..m).map(|j| (PI * (j as f64 + 0.5) / m as f64).cos()).collect();
        let mut coeffs = Vec::with_capacity(panels);
        for i in 0..panels {
            let c = u_lo + (i as f64 + 0.5) * width;
            let mut vals = [0.0; CHEB_N];
            for (v, t) in vals.iter_mut().zip(&nodes) {
                *v = ml_fractional(a, b, -(c + 0.5 * width * t).exp())?;
            }
            let mut cf = [0.0; CHEB_N];
            for (k, ck) in cf.iter_mut().enumerate() {
                let mut s = 0.0;
                for (j, v) in vals.iter().enumerate() {
                    s += v * (PI * k as f64 * (j as f64 + 0.5) / m as f64).cos();
                }
                *ck = 2.0 * s / m as f64;
            }
            cf[0] *= 0.5;
            coeffs.push(cf);
        }
        let small = [recip_gamma(b), -recip_gamma(a + b), recip_gamma(2.0 * a + b)];
        Ok(MittagLefflerTable { a, b, u_lo, width, coeffs, x_lo: u_lo.exp(), x_hi: u_hi.exp(), small })
    }

    pub fn params(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// Evaluates `E_{a,b}(-x)` for `x >= 0`.
    pub fn eval_neg(&self, x: f64) -> f64 {
        if x < self.x_lo {
            return self.small[0] + x * (self.small[1] + x * self.small[2]);
        }
        if x >= self.x_hi {
            return ml_asymptotic(self.a, self.b, x)
                .unwrap_or_else(|| ml_fractional(self.a, self.b, -x).unwrap_or(f64::NAN));
        }
        let u = x.ln();
        let pos = (u - self.u_lo) / self.width;
        let i = (pos.floor() as usize).min(self.coeffs.len() - 1);
        let t = 2.0 * (pos - i as f64) - 1.0;
        let c = &self.coeffs[i];
        let (mut b1, mut b2) = (0.0, 0.0);
        for k in (1..CHEB_N).rev() {
            let b0 = 2.0 * t * b1 - b2 + c[k];
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + c[0]
    }
}

/// Argument transform `A(phi)` of the Zolotarev representation and `A - c_alpha`.
struct Zolotarev {
    alpha: f64,
    p: f64,
    c: f64,
    k2: f64,
    k4: f64,
}

impl Zolotarev {
    fn new(alpha: f64) -> Self {
        let p = 1.0 / (1.0 - alpha);
        let c = (1.0 - alpha) * alpha.powf(alpha * p);
        let k2 = alpha / 2.0;
        let k4 = ((1.0 + alpha) * (1.0 + alpha * alpha)
            - (1.0 - 2.0 * alpha) * (1.0 - 2.0 * alpha + 2.0 * alpha * alpha))
            / 180.0;
        Zolotarev { alpha, p, c, k2, k4 }
    }

    fn a_of(&self, phi: f64) -> f64 {
        self.a_with_sin(phi, phi.sin())
    }

    /// `A(phi)` with `sin(phi)` supplied, so that `phi` near `pi` keeps full precision.
    fn a_with_sin(&self, phi: f64, sin_phi: f64) -> f64 {
        let al = self.alpha;
        let sa = (al * phi).sin();
        (sa / sin_phi).powf(self.p) * ((1.0 - al) * phi).sin() / sa
    }

    fn excess(&self, phi: f64) -> f64 {
        if phi < 0.01 {
            let q = phi * phi;
            self.c * (q * (self.k2 + self.k4 * q)).exp_m1()
        } else {
            self.a_of(phi) - self.c
        }
    }
}

/// Natural log of the one-sided stable density, as a function of `ln tau`.
pub(crate) fn ln_stable_density_ln(alpha: f64, ln_tau: f64) -> Result<f64> {
    let z = Zolotarev::new(alpha);
    let p = z.p;
    let ln_x = -alpha * p * ln_tau;
    let x = ln_x.exp();
    let tol = Tolerance { abs: 0.0, rel: 1e-12, max_intervals: 4000 };
    let half = PI / 2.0;
    let core = |phi: f64| z.a_of(phi) * (-x * z.excess(phi)).exp();
    let mut pts = vec![0.0];
    let width = (x * z.c * z.k2).sqrt().recip();
    let mut w = width;
    while w < half {
        pts.push(w);
        w *= 4.0;
    }
    pts.push(half);
    let mut total = integrate_with_breaks(core, &pts, tol)?.value;
    if x * z.excess(half) < 745.0 {
        let c_tail = (alpha * PI).sin().powf(p);
        let ln_c = c_tail.ln();
        let v_lo = (ln_x + ln_c - 800f64.ln()) / p;
        let v_hi = half.ln();
        if v_lo < v_hi {
            let tail = |v: f64| {
                let th = v.exp();
                let aa = z.a_with_sin(PI - th, th.sin());
                aa * (-x * (aa - z.c)).exp() * th
            };
            let mut tp = vec![v_lo, v_hi];
            let vstar = (ln_x + ln_c) / p;
            for d in [-1.0, 0.0, 1.0] {
                let v = vstar + d;
                if v > v_lo && v < v_hi {
                    tp.push(v);
                }
            }
            tp.sort_by(|a, b| a.total_cmp(b));
            total += integrate_with_breaks(tail, &tp, tol)?.value;
        }
    }
    if !(total > 0.0) {
        return Err(Error::Quadrature(format!(
            "stable density integral non-positive at alpha={alpha}, ln tau={ln_tau}"
        )));
    }
    Ok((alpha * p / PI).ln() - p * ln_tau - x * z.c + total.ln())
}

/// Density of the standard one-sided stable law with Laplace transform `exp(-lambda^alpha)`.
pub fn stable_density(idx: StableIndex, tau: f64) -> Result<f64> {
    Ok(ln_stable_density(idx, tau)?.exp())
}

/// Natural log of [`stable_density`]; finite far below the underflow threshold.
pub fn ln_stable_density(idx: StableIndex, tau: f64) -> Result<f64> {
    if !(tau > 0.0) || !tau.is_finite() {
        return domain(format!("stable_density requires finite tau > 0, got {tau}"));
    }
    ln_stable_density_ln(idx.alpha, tau.ln())
}

/// Subordination weight `M_alpha(s) = (1/alpha) s^{-1-1/alpha} w_alpha(s^{-1/alpha})`.
pub fn subordination_weight(idx: StableIndex, s: f64) -> Result<f64> {
    Ok(ln_subordination_weight(idx, s)?.exp())
}

/// Natural log of [`subordination_weight`].
pub fn ln_subordination_weight(idx: StableIndex, s: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return domain(format!("subordination_weight requires finite s > 0, got {s}"));
    }
    let a = idx.alpha;
    let ls = s.ln();
    Ok(-a.ln() - (1.0 + 1.0 / a) * ls + ln_stable_density_ln(a, -ls / a)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gamma_examples() {
        assert!(rel(gamma_fn(0.5).unwrap(), PI.sqrt()) < 1e-14);
        assert_eq!(gamma_fn(5.0).unwrap(), 24.0);
        assert_eq!(gamma_fn(1.0).unwrap(), 1.0);
        assert!(gamma_fn(0.0).is_err());
        assert!(gamma_fn(-1.5).is_err());
    }

    #[test]
    fn recip_gamma_negative_arguments() {
        assert_eq!(recip_gamma(-3.0), 0.0);
        // Gamma(-0.5) = -2 sqrt(pi)
        assert!(rel(recip_gamma(-0.5), -1.0 / (2.0 * PI.sqrt())) < 1e-14);
    }

    #[test]
    fn g_kernel_examples() {
        assert_eq!(g_kernel(1.0, 7.3).unwrap(), 1.0);
        assert!(rel(g_kernel(0.5, 1.0).unwrap(), 0.564_189_583_547_756_3) < 1e-13);
        assert!(rel(g_kernel(0.5, 4.0).unwrap(), 0.282_094_791_773_878_1) < 1e-13);
        assert!(g_kernel(0.5, 0.0).is_err());
    }

    #[test]
    fn ml_trivial_values() {
        let p = MLParams::new(1.0, 1.0).unwrap();
        assert!(rel(mittag_leffler(p, 1.0).unwrap(), std::f64::consts::E) < 1e-15);
        let p = MLParams::new(0.7, 1.0).unwrap();
        assert_eq!(mittag_leffler(p, 0.0).unwrap(), 1.0);
        assert!(MLParams::new(1.2, 1.0).is_err());
        assert!(MLParams::new(0.5, 0.0).is_err());
    }

    #[test]
    fn ml_positive_overflow_is_infinite() {
        let p = MLParams::new(0.2, 1.0).unwrap();
        assert_eq!(mittag_leffler(p, 50.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn ml_table_matches_direct() {
        for &(a, b) in &[(0.5, 1.0), (0.3, 0.3), (0.75, 1.75), (0.9, 2.9), (0.5, 2.5)] {
            let p = MLParams::new(a, b).unwrap();
            let t = MittagLefflerTable::new(p).unwrap();
            for i in 0..200 {
                let x = 10f64.powf(-7.0 + 14.0 * i as f64 / 199.0);
                let d = mittag_leffler(p, -x).unwrap();
                let v = t.eval_neg(x);
                assert!(rel(v, d) < 1e-11, "a={a} b={b} x={x}: {v} vs {d}");
            }
        }
    }

    #[test]
    fn stable_rate_constant() {
        let idx = StableIndex::new(0.5).unwrap();
        assert!(rel(idx.rate_constant(), 0.25) < 1e-15);
        assert!(StableIndex::new(1.0).is_err());
    }

    #[test]
    fn zolotarev_expansion_is_continuous() {
        for &a in &[0.2, 0.5, 0.8] {
            let z = Zolotarev::new(a);
            let phi = 0.01;
            let direct = z.a_of(phi) - z.c;
            let series = {
                let q = phi * phi;
                z.c * (q * (z.k2 + z.k4 * q)).exp_m1()
            };
            assert!(rel(series, direct) < 1e-7, "alpha {a}: {series} vs {direct}");
        }
    }
}
