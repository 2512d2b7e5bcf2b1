//! The scaled deconvolution kernel
//! `ṽ_h(u) = (1/π) ∫_0^1 cos(su) exp(((s/h)^λ - (1/h)^λ)/μ) ds`.
//!
//! Three evaluation routes:
//! * composite Gauss–Legendre on a panel set graded toward `s = 1` (where the
//!   damping factor carries its mass) and toward `s = 0` (where `s^λ` is not
//!   smooth), with panel widths bounded by the oscillation frequency;
//! * for large `|u|·h`, the path `[0, 1]` is deformed into the two vertical
//!   rays `Re s = 0` and `Re s = 1`, turning the oscillatory integral into two
//!   exponentially damped ones;
//! * a cubic Hermite table built from the composite rule, for bulk evaluation.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::estimator::EstimatorConfig;
use crate::quadrature::{integrate_breaks, GaussLegendre, QuadOptions, QuadValue};

/// Damping exponents below this are treated as zero weight (`e^-46 ≈ 1e-20`).
const NEGLIGIBLE_LN: f64 = -46.0;
/// Largest change of `ln F` across one panel.
const MAX_LN_STEP: f64 = 4.0;
/// Largest phase change `u·Δs` across one panel.
const MAX_PHASE_STEP: f64 = 2.0;
/// Table spacing in `u`.
const TABLE_STEP: f64 = 0.01;
/// Upper end of the table in `u`.
const TABLE_CAP: f64 = 400.0;
/// Direct-route convergence threshold between successive panel doublings.
const DOUBLING_TOL: f64 = 1e-12;
const MAX_DOUBLINGS: usize = 6;

/// `ln F(s) = κ (s^λ - 1)` with `κ = (1/h)^λ / μ`.
pub(crate) fn ln_damping(s: f64, cfg: &EstimatorConfig) -> f64 {
    let kappa = cfg.log_scale();
    if s <= 0.0 {
        return -kappa;
    }
    kappa * (cfg.noise.lambda() * s.ln()).exp_m1()
}

pub(crate) fn damping(s: f64, cfg: &EstimatorConfig) -> f64 {
    ln_damping(s, cfg).exp()
}

/// `|u|·h` beyond which the contour route is used.
pub(crate) fn far_distance(cfg: &EstimatorConfig) -> f64 {
    let p = cfg.noise;
    10.0 * p.mu().powf(-1.0 / p.lambda()).max(1.0)
}

/// Panel breakpoints on `[0, 1]` adequate for frequencies up to `max_freq`.
pub(crate) fn vh_breaks(cfg: &EstimatorConfig, max_freq: f64) -> Vec<f64> {
    let lambda = cfg.noise.lambda();
    let kappa = cfg.log_scale();
    let mut seeds = vec![0.0, 1.0];
    if lambda.fract() != 0.0 && -kappa > NEGLIGIBLE_LN {
        let mut s = 0.5;
        for _ in 0..52 {
            seeds.push(s);
            s *= 0.5;
        }
    }
    // Length scale of the damping factor at s = 1.
    let ell = 1.0 / (kappa * lambda);
    let mut d = ell;
    while d < 1.0 {
        seeds.push(1.0 - d);
        d *= 2.0;
    }
    seeds.sort_by(f64::total_cmp);
    seeds.dedup();

    let max_width = if max_freq > 0.0 { (MAX_PHASE_STEP / max_freq).min(0.125) } else { 0.125 };
    let mut out = vec![0.0];
    let mut stack: Vec<(f64, f64)> = Vec::new();
    for w in seeds.windows(2).rev() {
        stack.push((w[0], w[1]));
    }
    while let Some((a, b)) = stack.pop() {
        let lb = ln_damping(b, cfg);
        let too_wide = b - a > max_width;
        let too_steep = lb > NEGLIGIBLE_LN && lb - ln_damping(a, cfg) > MAX_LN_STEP;
        if (too_wide || too_steep) && b - a > 1e-15 {
            let m = 0.5 * (a + b);
            stack.push((m, b));
            stack.push((a, m));
        } else {
            out.push(b);
        }
    }
    out
}

/// Composite-rule nodes `s_k` and weights `W_k = w_k F(s_k) / π`.
pub(crate) fn weighted_nodes(cfg: &EstimatorConfig, breaks: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::sixteen();
    let mut nodes = Vec::with_capacity(16 * breaks.len());
    let mut weights = Vec::with_capacity(16 * breaks.len());
    for w in breaks.windows(2) {
        rule.push_panel(w[0], w[1], &mut nodes, &mut weights);
    }
    for (s, w) in nodes.iter().zip(weights.iter_mut()) {
        *w *= damping(*s, cfg) / PI;
    }
    (nodes, weights)
}

fn cosine_sum(nodes: &[f64], weights: &[f64], u: f64) -> f64 {
    nodes.iter().zip(weights).map(|(s, w)| w * (s * u).cos()).sum()
}

fn bisect_all(breaks: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * breaks.len());
    out.push(breaks[0]);
    for w in breaks.windows(2) {
        out.push(0.5 * (w[0] + w[1]));
        out.push(w[1]);
    }
    out
}

/// Composite quadrature, halving every panel until two successive results
/// agree to [`DOUBLING_TOL`].
pub(crate) fn vh_direct(u: f64, cfg: &EstimatorConfig) -> Result<f64> {
    let u = u.abs();
    let mut breaks = vh_breaks(cfg, u);
    let (n, w) = weighted_nodes(cfg, &breaks);
    let mut prev = cosine_sum(&n, &w, u);
    for _ in 0..MAX_DOUBLINGS {
        breaks = bisect_all(&breaks);
        let (n, w) = weighted_nodes(cfg, &breaks);
        let cur = cosine_sum(&n, &w, u);
        if (cur - prev).abs() <= DOUBLING_TOL {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::numerical(format!("kernel quadrature at u = {u} did not settle under panel doubling")))
}

/// `∫_0^1 g(s) F(s) ds` on the kernel panel layout, doubled until two
/// successive results agree to `rel_tol` relative to their magnitude.
pub(crate) fn damped_integral<V: QuadValue, G: Fn(f64) -> V>(
    cfg: &EstimatorConfig,
    max_freq: f64,
    rel_tol: f64,
    g: G,
) -> Result<V> {
    let rule = GaussLegendre::sixteen();
    let sum = |breaks: &[f64]| {
        let mut nodes = Vec::with_capacity(16 * breaks.len());
        let mut weights = Vec::with_capacity(16 * breaks.len());
        for w in breaks.windows(2) {
            rule.push_panel(w[0], w[1], &mut nodes, &mut weights);
        }
        nodes.iter().zip(&weights).fold(V::zero(), |acc, (s, w)| acc + g(*s) * (w * damping(*s, cfg)))
    };
    let mut breaks = vh_breaks(cfg, max_freq);
    let mut prev = sum(&breaks);
    for _ in 0..MAX_DOUBLINGS {
        breaks = bisect_all(&breaks);
        let cur = sum(&breaks);
        if (cur - prev).magnitude() <= rel_tol * cur.magnitude() || (cur - prev).magnitude() < 1e-300 {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::numerical("damped integral over [0, 1] did not settle under panel doubling"))
}

/// `e^w - 1` without cancellation for small `|w|`.
fn cexp_m1(w: Complex64) -> Complex64 {
    let (s, c) = w.im.sin_cos();
    let half = (0.5 * w.im).sin();
    let em1 = w.re.exp_m1();
    Complex64::new(em1 * c - 2.0 * half * half, w.re.exp() * s)
}

/// Contour route, valid for `|u|·h ≥ far_distance(cfg)`.
pub(crate) fn vh_contour(u: f64, cfg: &EstimatorConfig) -> Result<f64> {
    let u = u.abs();
    let lambda = cfg.noise.lambda();
    let mu = cfg.noise.mu();
    let kappa = cfg.log_scale();
    let dist = u * cfg.h;
    let opts = QuadOptions::tol(1e-16, 1e-14);
    let breaks: Vec<f64> = std::iter::once(0.0).chain((0..9).map(|k| 0.25 * 2f64.powi(k))).collect();

    // Ray Re s = 1: F(1 + iv/u).
    let g1 = integrate_breaks(
        |v: f64| {
            let y = v / u;
            let ln1 = Complex64::new(0.5 * (y * y).ln_1p(), y.atan());
            let e = cexp_m1(ln1 * lambda) * kappa;
            Complex64::new(e.re - v, e.im).exp()
        },
        &breaks,
        opts,
    )?
    .value;

    // Ray Re s = 0: F(iv/u) = e^{-κ} exp(e^{iπλ/2} (v/(uh))^λ / μ).
    let rot = Complex64::from_polar(1.0 / mu, FRAC_PI_2 * lambda);
    let g0 = if -kappa < 2.0 * NEGLIGIBLE_LN {
        Complex64::new(0.0, 0.0)
    } else if lambda < 1.0 {
        contour_series(rot / dist.powf(lambda), lambda)? * (-kappa).exp()
    } else {
        integrate_breaks(
            |v: f64| {
                let e = rot * (v / dist).powf(lambda);
                Complex64::new(e.re - v - kappa, e.im).exp()
            },
            &breaks,
            opts,
        )?
        .value
    };
    let phase = Complex64::from_polar(1.0, u);
    let z = Complex64::new(0.0, 1.0 / u) * (g0 - phase * g1);
    Ok(z.re / PI)
}

/// `∫_0^∞ e^{-v} exp(c v^λ) dv = Σ_k c^k Γ(kλ + 1) / k!` for `λ < 1`.
fn contour_series(c: Complex64, lambda: f64) -> Result<Complex64> {
    let mut total = Complex64::new(1.0, 0.0);
    let ln_c = c.norm().ln();
    let arg = c.arg();
    for k in 1..400 {
        let kf = k as f64;
        let ln_mag = kf * ln_c + ln_gamma(kf * lambda + 1.0) - ln_gamma(kf + 1.0);
        let term = Complex64::from_polar(ln_mag.exp(), kf * arg);
        total += term;
        if ln_mag < -41.0 && k > 2 {
            return Ok(total);
        }
    }
    Err(Error::numerical("contour series did not converge"))
}

/// Reference evaluation of `ṽ_h(u)`: contour route far out, composite
/// quadrature with panel doubling otherwise.
pub fn scaled_vh(u: f64, cfg: &EstimatorConfig) -> Result<f64> {
    if u.abs() * cfg.h >= far_distance(cfg) {
        vh_contour(u, cfg)
    } else {
        vh_direct(u, cfg)
    }
}

/// Tabulated `ṽ_h` for repeated evaluation under one configuration.
#[derive(Debug, Clone)]
pub struct VhKernel {
    cfg: EstimatorConfig,
    step: f64,
    table_end: f64,
    far_u: f64,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl VhKernel {
    pub fn new(cfg: EstimatorConfig) -> Self {
        let far_u = far_distance(&cfg) / cfg.h;
        let step = TABLE_STEP;
        let entries = (far_u.min(TABLE_CAP) / step).ceil() as usize + 1;
        let table_end = (entries - 1) as f64 * step;
        let breaks = vh_breaks(&cfg, table_end);
        let (nodes, weights) = weighted_nodes(&cfg, &breaks);

        let mut values = vec![0.0; entries];
        let mut derivs = vec![0.0; entries];
        let (rot_s, rot_c): (Vec<f64>, Vec<f64>) = nodes.iter().map(|s| (s * step).sin_cos()).unzip();
        let mut cos_su = vec![1.0; nodes.len()];
        let mut sin_su = vec![0.0; nodes.len()];
        for i in 0..entries {
            if i % 128 == 0 {
                let u = i as f64 * step;
                for (k, s) in nodes.iter().enumerate() {
                    let (sn, cs) = (s * u).sin_cos();
                    sin_su[k] = sn;
                    cos_su[k] = cs;
                }
            }
            let mut v = 0.0;
            let mut d = 0.0;
            for k in 0..nodes.len() {
                v += weights[k] * cos_su[k];
                d -= weights[k] * nodes[k] * sin_su[k];
            }
            values[i] = v;
            derivs[i] = d;
            // Advance the angle by s·step.
            for k in 0..nodes.len() {
                let c = cos_su[k] * rot_c[k] - sin_su[k] * rot_s[k];
                let s = sin_su[k] * rot_c[k] + cos_su[k] * rot_s[k];
                cos_su[k] = c;
                sin_su[k] = s;
            }
        }
        Self { cfg, step, table_end, far_u, values, derivs }
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    pub fn eval(&self, u: f64) -> Result<f64> {
        let a = u.abs();
        if a <= self.table_end {
            let pos = a / self.step;
            let i = (pos.floor() as usize).min(self.values.len() - 2);
            let t = pos - i as f64;
            let (t2, t3) = (t * t, t * t * t);
            let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
            let h10 = t3 - 2.0 * t2 + t;
            let h01 = -2.0 * t3 + 3.0 * t2;
            let h11 = t3 - t2;
            Ok(h00 * self.values[i]
                + h10 * self.step * self.derivs[i]
                + h01 * self.values[i + 1]
                + h11 * self.step * self.derivs[i + 1])
        } else if a >= self.far_u {
            vh_contour(a, &self.cfg)
        } else {
            vh_direct(a, &self.cfg)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use crate::stable::StableParams;

    fn cfg(lambda: f64, mu: f64, h: f64) -> EstimatorConfig {
        EstimatorConfig::new(h, StableParams::new(lambda, mu).unwrap()).unwrap()
    }

    /// Independent reference: plain adaptive Gauss–Kronrod on [0, 1] split
    /// into many uniform panels.
    fn reference(u: f64, c: &EstimatorConfig) -> f64 {
        let panels = (u.abs() * 2.0).ceil().max(64.0) as usize;
        let breaks: Vec<f64> = (0..=panels).map(|k| k as f64 / panels as f64).collect();
        let f = |s: f64| (s * u).cos() * (c.log_scale() * (s.powf(c.noise.lambda()) - 1.0)).exp();
        integrate_breaks(f, &breaks, QuadOptions { abs_tol: 1e-15, rel_tol: 1e-14, max_panels: 100_000 })
            .unwrap()
            .value
            / PI
    }

    #[test]
    fn lambda_one_value_at_zero_is_closed_form() {
        let c = cfg(1.0, 1.0, 0.5);
        let expected = 0.5 * (1.0 - (-2.0f64).exp()) / PI;
        assert!((scaled_vh(0.0, &c).unwrap() - expected).abs() < 1e-14);
        assert!((expected - 0.1376157).abs() < 1e-7);
    }

    #[test]
    fn lambda_two_value_at_zero_matches_fixed_rule() {
        let c = cfg(2.0, 1.0, 0.2);
        // 10^6-node midpoint rule for (1/π)∫ e^{25(s²-1)} ds.
        let n = 1_000_000;
        let mid: f64 = (0..n).map(|k| {
            let s = (k as f64 + 0.5) / n as f64;
            (25.0 * (s * s - 1.0)).exp()
        }).sum::<f64>() / n as f64 / PI;
        assert!((scaled_vh(0.0, &c).unwrap() - mid).abs() < 1e-11);
    }

    #[test]
    fn direct_route_matches_reference() {
        for &(l, m, h) in &[(0.5, 1.0, 0.3), (1.0, 1.0, 0.25), (1.5, 1.0, 0.3), (2.0, 2.0, 0.4), (0.6, 1.0, 0.15), (1.7, 0.5, 0.1)] {
            let c = cfg(l, m, h);
            for &u in &[0.0, 0.3, 1.0, 4.7, 17.0, 33.3] {
                let d = vh_direct(u, &c).unwrap();
                let r = reference(u, &c);
                assert!((d - r).abs() < 1e-12, "λ={l} h={h} u={u}: {d} vs {r}");
            }
        }
    }

    #[test]
    fn contour_route_matches_direct_route() {
        for &(l, m, h) in &[(0.5, 1.0, 0.3), (0.6, 1.0, 0.15), (1.0, 1.0, 0.25), (1.5, 1.0, 0.3), (2.0, 2.0, 0.4), (0.8, 3.0, 0.2), (1.2, 0.3, 0.5)] {
            let c = cfg(l, m, h);
            let far = far_distance(&c) / h;
            for &mult in &[1.0, 1.37, 2.9] {
                let u = far * mult;
                let a = vh_contour(u, &c).unwrap();
                let b = reference(u, &c);
                assert!((a - b).abs() < 1e-12, "λ={l} h={h} u={u}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn kernel_table_matches_reference() {
        for &(l, m, h) in &[(0.5, 1.0, 0.3), (1.0, 1.0, 0.25), (2.0, 2.0, 0.4), (0.6, 1.0, 0.15)] {
            let c = cfg(l, m, h);
            let k = VhKernel::new(c);
            let scale = scaled_vh(0.0, &c).unwrap();
            for &u in &[0.0, 0.005, 0.123, -2.71, 9.999, 27.3, 40.1, 65.7, 1e3, -3e5] {
                let a = k.eval(u).unwrap();
                let b = scaled_vh(u, &c).unwrap();
                assert!((a - b).abs() < 1e-10 * scale, "λ={l} h={h} u={u}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn even_in_u() {
        let c = cfg(1.3, 0.7, 0.3);
        for &u in &[0.4, 3.0, 250.0] {
            assert_eq!(scaled_vh(u, &c).unwrap(), scaled_vh(-u, &c).unwrap());
        }
    }

    #[test]
    fn series_matches_quadrature() {
        let c = Complex64::from_polar(0.3, 0.7);
        let lambda = 0.6;
        let s = contour_series(c, lambda).unwrap();
        let q = integrate(
            |v: f64| (c * v.powf(lambda) - v).exp(),
            0.0,
            80.0,
            QuadOptions::tol(1e-15, 1e-14),
        )
        .unwrap()
        .value;
        assert!((s - q).norm() < 1e-13);
    }
}
