//! Closed-form asymptotic objects of the scaled estimator: the normalizing
//! constant `c(h)` and the law of `S` with density `e^{(s/h)^λ/μ}/c(h)` on
//! `[0, 1]`, the normalized variable `E_n`, the exponential-average kernels
//! `w1`, `w2`, the per-observation statistic `V`, limiting variances and
//! normalization rates per regime.
//!
//! Quantities proportional to `e^{(1/h)^λ/μ}` are returned with that factor
//! removed.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{g_density, EstimatorConfig};
use crate::quadrature::{integrate_breaks, QuadOptions};
use crate::stable::{Regime, StableParams};
use crate::target::TargetDensity;
use crate::vh::damped_integral;

const MOMENT_TOL: f64 = 1e-13;

/// Quadrature value of an integral next to its one- and three-term
/// expansions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionResult {
    #[serde(with = "crate::io::real")]
    pub numeric: f64,
    #[serde(with = "crate::io::real")]
    pub leading: f64,
    #[serde(with = "crate::io::real")]
    pub refined: f64,
    #[serde(with = "crate::io::real")]
    pub abs_error_leading: f64,
    #[serde(with = "crate::io::real")]
    pub abs_error_refined: f64,
}

impl ExpansionResult {
    fn new(numeric: f64, leading: f64, refined: f64) -> Self {
        Self {
            numeric,
            leading,
            refined,
            abs_error_leading: (numeric - leading).abs(),
            abs_error_refined: (numeric - refined).abs(),
        }
    }
}

/// Limiting variance of the normalized estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaSquared {
    pub regime: Regime,
    #[serde(with = "crate::io::real")]
    pub value: f64,
    /// Whether the observation density `g` entered the value.
    pub needs_g: bool,
}

fn config(h: f64, params: &StableParams) -> Result<EstimatorConfig> {
    EstimatorConfig::new(h, *params)
}

fn supported(params: &StableParams) -> Result<Regime> {
    match params.regime() {
        Regime::Unsupported => Err(Error::UnsupportedRegime { lambda: params.lambda() }),
        r => Ok(r),
    }
}

/// `∫_0^1 s^m e^{((s/h)^λ - (1/h)^λ)/μ} ds`.
fn scaled_power_integral(m: u32, cfg: &EstimatorConfig) -> Result<f64> {
    damped_integral(cfg, 0.0, MOMENT_TOL, |s: f64| s.powi(m as i32))
}

/// `c̃(h) = e^{-(1/h)^λ/μ} ∫_0^1 e^{(s/h)^λ/μ} ds`.
pub fn scaled_c(h: f64, params: &StableParams) -> Result<f64> {
    scaled_power_integral(0, &config(h, params)?)
}

/// Expansion of the scaled `∫_0^1 s^m e^{(s/h)^λ/μ} ds` in powers of
/// `a = (μ/λ) h^λ`, truncated after one or three terms.
pub fn power_integral_expansion(m: u32, h: f64, params: &StableParams, order: u32) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::invalid(format!("bandwidth h must be positive, got {h}")));
    }
    let lambda = params.lambda();
    let a = params.mu() / lambda * h.powf(lambda);
    let m = m as f64;
    match order {
        1 => Ok(a),
        3 => {
            let p = m - lambda + 1.0;
            let q = m - 2.0 * lambda + 1.0;
            Ok(a - p * a * a + p * q * a * a * a)
        }
        _ => Err(Error::invalid(format!("expansion order must be 1 or 3, got {order}"))),
    }
}

/// Expansion of `c̃(h)`: `(μ/λ)h^λ`, refined by
/// `(μ/λ)²(λ-1)h^{2λ} + (μ/λ)³(1-λ)(1-2λ)h^{3λ}`.
pub fn c_expansion(h: f64, params: &StableParams, order: u32) -> Result<f64> {
    power_integral_expansion(0, h, params, order)
}

/// `E S^m` for `m ≤ 4`.
pub fn s_moment(m: u32, h: f64, params: &StableParams) -> Result<f64> {
    if m > 4 {
        return Err(Error::invalid(format!("moment order must be at most 4, got {m}")));
    }
    let cfg = config(h, params)?;
    if m == 0 {
        return Ok(1.0);
    }
    Ok(scaled_power_integral(m, &cfg)? / scaled_power_integral(0, &cfg)?)
}

/// Expansions of `E S`: `1 - (μ/λ)h^λ`, refined by `+ 2(1-λ)(μ/λ)²h^{2λ}`.
pub fn s_mean_expansion(h: f64, params: &StableParams, order: u32) -> Result<f64> {
    let a = power_integral_expansion(0, h, params, 1)?;
    match order {
        1 => Ok(1.0 - a),
        3 => Ok(1.0 - a + 2.0 * (1.0 - params.lambda()) * a * a),
        _ => Err(Error::invalid(format!("expansion order must be 1 or 3, got {order}"))),
    }
}

/// `Var S` by quadrature of the centered second moment, and its leading
/// term `(μ/λ)² h^{2λ}`.
pub fn s_variance(h: f64, params: &StableParams) -> Result<(f64, f64)> {
    let cfg = config(h, params)?;
    let c = scaled_power_integral(0, &cfg)?;
    let mean = scaled_power_integral(1, &cfg)? / c;
    let central = damped_integral(&cfg, 0.0, MOMENT_TOL, |s: f64| (s - mean) * (s - mean))? / c;
    let a = power_integral_expansion(0, h, params, 1)?;
    Ok((central, a * a))
}

/// Density of `E_n = (λ/μ)(S - 1)/h^λ`, supported on `[-(λ/μ)h^{-λ}, 0]`.
#[derive(Debug, Clone, Copy)]
pub struct EnDensity {
    a: f64,
    kappa: f64,
    lambda: f64,
    c: f64,
}

impl EnDensity {
    pub fn new(h: f64, params: &StableParams) -> Result<Self> {
        let cfg = config(h, params)?;
        Ok(Self {
            a: params.mu() / params.lambda() * h.powf(params.lambda()),
            kappa: cfg.log_scale(),
            lambda: params.lambda(),
            c: scaled_power_integral(0, &cfg)?,
        })
    }

    /// Left end of the support.
    pub fn lower(&self) -> f64 {
        -1.0 / self.a
    }

    pub fn eval(&self, v: f64) -> f64 {
        if v > 0.0 || v < self.lower() {
            return 0.0;
        }
        let s = 1.0 + self.a * v;
        let ln_f = if s <= 0.0 { -self.kappa } else { self.kappa * (self.lambda * s.ln()).exp_m1() };
        self.a / self.c * ln_f.exp()
    }
}

pub fn f_en_density(v: f64, h: f64, params: &StableParams) -> Result<f64> {
    Ok(EnDensity::new(h, params)?.eval(v))
}

/// `w1(u) = λ² / (λ² + μ²u²)`.
pub fn w1(u: f64, params: &StableParams) -> f64 {
    let (l, m) = (params.lambda(), params.mu());
    l * l / (l * l + m * m * u * u)
}

/// `w2(u) = -μλu / (λ² + μ²u²)`.
pub fn w2(u: f64, params: &StableParams) -> f64 {
    let (l, m) = (params.lambda(), params.mu());
    -m * l * u / (l * l + m * m * u * u)
}

/// `E cos(a(S-1)/h)` and `E sin(a(S-1)/h)` under the law of `S`.
pub fn en_trig_moments(a: f64, h: f64, params: &StableParams) -> Result<(f64, f64)> {
    let cfg = config(h, params)?;
    let c = scaled_power_integral(0, &cfg)?;
    let freq = a / h;
    let z = damped_integral(&cfg, freq.abs(), MOMENT_TOL, |s: f64| Complex64::from_polar(1.0, freq * (s - 1.0)))?;
    Ok((z.re / c, z.im / c))
}

/// Distance between the `E_n` averages of `cos`/`sin((μ/λ)h^{λ-1}E_n a)` and
/// their exponential limits `w1(h^{λ-1}a)`, `w2(h^{λ-1}a)`.
pub fn trig_moment_gap(a: f64, h: f64, params: &StableParams) -> Result<(f64, f64)> {
    trig_moment_gap_with(a, h, params, w2)
}

/// [`trig_moment_gap`] with a caller-supplied `w2`.
pub fn trig_moment_gap_with(
    a: f64,
    h: f64,
    params: &StableParams,
    w2_fn: impl Fn(f64, &StableParams) -> f64,
) -> Result<(f64, f64)> {
    let (c, s) = en_trig_moments(a, h, params)?;
    let u = h.powf(params.lambda() - 1.0) * a;
    Ok(((c - w1(u, params)).abs(), (s - w2_fn(u, params)).abs()))
}

/// `V = cos(d/h) w1(h^{λ-1}d) - sin(d/h) w2(h^{λ-1}d)` with `d = x_obs - x`.
pub fn v_stat(x_obs: f64, x: f64, h: f64, params: &StableParams) -> f64 {
    let d = x_obs - x;
    let u = h.powf(params.lambda() - 1.0) * d;
    let (sin, cos) = (d / h).sin_cos();
    cos * w1(u, params) - sin * w2(u, params)
}

/// `∫ g(u) / (1 + μ²(u-x)²) du` for Cauchy noise. The range is cut where
/// the remaining mass is below `1e-9`; beyond it `g(u) ≈ 1/(πμu²)` and the
/// tail is added in closed form.
pub fn cauchy_weighted_mass(params: &StableParams, target: &TargetDensity, x: f64) -> Result<f64> {
    let mu = params.mu();
    let (loc, spread) = target.location_scale();
    let width = spread.min(1.0 / mu);
    let reach = 200.0 * spread.max(1.0 / mu) + (x - loc).abs();
    let mut breaks = Vec::new();
    for centre in [x, loc] {
        breaks.push(centre);
        let mut d = 0.25 * width;
        while d < reach {
            breaks.push(centre - d);
            breaks.push(centre + d);
            d *= 2.0;
        }
    }
    let (lo, hi) = (x.min(loc) - reach, x.max(loc) + reach);
    breaks.retain(|b| (lo..=hi).contains(b));
    breaks.extend([lo, hi]);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let failure = RefCell::new(None);
    let f = |u: f64| match g_density(u, target, params) {
        Ok(g) => g / (1.0 + mu * mu * (u - x) * (u - x)),
        Err(e) => {
            failure.borrow_mut().get_or_insert(e.to_string());
            0.0
        }
    };
    let out = integrate_breaks(f, &breaks, QuadOptions { abs_tol: 1e-12, rel_tol: 1e-11, max_panels: 20_000 });
    if let Some(msg) = failure.into_inner() {
        return Err(Error::numerical(msg));
    }
    let tail = |d: f64| 1.0 / (3.0 * PI * mu.powi(3) * d.powi(3));
    Ok(out?.value + tail(hi - x) + tail(x - lo))
}

/// Sub-Cauchy `σ² = (1/2π)(μ/λ) g(x)` from a known `g(x)`.
pub fn sub_cauchy_sigma2(params: &StableParams, gx: f64) -> f64 {
    params.mu() / params.lambda() * gx / (2.0 * PI)
}

/// Sub-Cauchy `Var V ≈ (1/2)(λ/μ) π h^{1-λ} g(x)` from a known `g(x)`.
pub fn sub_cauchy_var_v(params: &StableParams, gx: f64, h: f64) -> f64 {
    0.5 * params.lambda() / params.mu() * PI * h.powf(1.0 - params.lambda()) * gx
}

/// Limiting (for sub-Cauchy noise: leading-order, `h`-dependent) variance of
/// `V` for observations from `g = k * f`.
pub fn var_v_limit(params: &StableParams, target: &TargetDensity, x: f64, h: f64) -> Result<f64> {
    match supported(params)? {
        Regime::SuperCauchy => Ok(0.5),
        Regime::Cauchy => Ok(0.5 * cauchy_weighted_mass(params, target, x)?),
        _ => Ok(sub_cauchy_var_v(params, g_density(x, target, params)?, h)),
    }
}

/// Limiting variance of the normalized estimator at `x`.
pub fn sigma2(params: &StableParams, target: &TargetDensity, x: f64) -> Result<SigmaSquared> {
    let regime = supported(params)?;
    let (mu, lambda) = (params.mu(), params.lambda());
    let (value, needs_g) = match regime {
        Regime::SuperCauchy => ((mu / lambda).powi(2) / (2.0 * PI * PI), false),
        Regime::Cauchy => (mu * mu * cauchy_weighted_mass(params, target, x)? / (2.0 * PI * PI), true),
        _ => (sub_cauchy_sigma2(params, g_density(x, target, params)?), true),
    };
    Ok(SigmaSquared { regime, value, needs_g })
}

/// Natural log of the factor that normalizes `f_nh(x) - E f_nh(x)`.
pub fn log_normalization(n: usize, h: f64, params: &StableParams) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("sample size n must be at least 1"));
    }
    let cfg = config(h, params)?;
    let lambda = params.lambda();
    let half_ln_n = 0.5 * (n as f64).ln();
    let kappa = cfg.log_scale();
    match supported(params)? {
        Regime::SuperCauchy => Ok(half_ln_n - (lambda - 1.0) * h.ln() - kappa),
        Regime::Cauchy => Ok(half_ln_n - kappa),
        _ => Ok(half_ln_n - 0.5 * (lambda - 1.0) * h.ln() - kappa),
    }
}

/// Scaled `∫_0^1 s^m e^{(s/h)^λ/μ} ds` against its expansions, `m ≤ 2`.
pub fn mexpansion_check(m: u32, h: f64, params: &StableParams) -> Result<ExpansionResult> {
    if m > 2 {
        return Err(Error::invalid(format!("mexpansion_check covers m = 0, 1, 2; got {m}")));
    }
    let cfg = config(h, params)?;
    Ok(ExpansionResult::new(
        scaled_power_integral(m, &cfg)?,
        power_integral_expansion(m, h, params, 1)?,
        power_integral_expansion(m, h, params, 3)?,
    ))
}

/// `c̃(h)` against [`c_expansion`].
pub fn c_check(h: f64, params: &StableParams) -> Result<ExpansionResult> {
    mexpansion_check(0, h, params)
}

/// `E S` against [`s_mean_expansion`].
pub fn s_mean_check(h: f64, params: &StableParams) -> Result<ExpansionResult> {
    Ok(ExpansionResult::new(
        s_moment(1, h, params)?,
        s_mean_expansion(h, params, 1)?,
        s_mean_expansion(h, params, 3)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn p(lambda: f64, mu: f64) -> StableParams {
        StableParams::new(lambda, mu).unwrap()
    }

    fn closed_c(h: f64) -> f64 {
        h * (1.0 - (-1.0 / h).exp())
    }

    #[test]
    fn c_matches_cauchy_closed_form() {
        assert!((scaled_c(0.5, &p(1.0, 1.0)).unwrap() - closed_c(0.5)).abs() < 1e-14);
        assert!((scaled_c(0.5, &p(1.0, 1.0)).unwrap() - 0.4323324).abs() < 1e-7);
        assert!((scaled_c(0.1, &p(1.0, 1.0)).unwrap() - 0.0999955).abs() < 1e-7);
        for h in [0.02, 0.3, 2.0] {
            let c = scaled_c(h, &p(1.0, 1.0)).unwrap();
            assert!(((c - closed_c(h)) / closed_c(h)).abs() < 1e-12, "h = {h}");
        }
    }

    #[test]
    fn c_matches_million_node_midpoint_rule() {
        for h in [0.2, 0.5] {
            let n = 1_000_000;
            let kappa = 1.0 / (h * h);
            let reference: f64 = (0..n)
                .map(|i| {
                    let s = (i as f64 + 0.5) / n as f64;
                    (kappa * (s * s - 1.0)).exp()
                })
                .sum::<f64>()
                / n as f64;
            let c = scaled_c(h, &p(2.0, 1.0)).unwrap();
            assert!((c - reference).abs() < 1e-10, "h = {h}: {c} vs {reference}");
        }
    }

    #[test]
    fn c_in_unit_interval() {
        for lambda in [0.4, 0.5, 1.0, 1.5, 2.0] {
            for h in [0.05, 0.3, 1.0, 5.0] {
                let c = scaled_c(h, &p(lambda, 0.7)).unwrap();
                assert!(c > 0.0 && c < 1.0, "lambda {lambda} h {h}: {c}");
            }
        }
    }

    #[test]
    fn c_expansion_terms() {
        let cauchy = p(1.0, 1.0);
        assert_eq!(c_expansion(0.1, &cauchy, 1).unwrap(), 0.1);
        for h in [0.03, 0.1, 0.7] {
            let diff = c_expansion(h, &cauchy, 3).unwrap() - c_expansion(h, &cauchy, 1).unwrap();
            assert!(diff.abs() < 1e-16);
        }
        let normal = p(2.0, 1.0);
        let c = scaled_c(0.2, &normal).unwrap();
        let lead = c_expansion(0.2, &normal, 1).unwrap();
        let refined = c_expansion(0.2, &normal, 3).unwrap();
        assert!((c - refined).abs() < (c - lead).abs());
        assert!(c_expansion(0.2, &normal, 2).is_err());
    }

    #[test]
    fn moments_of_s() {
        let cauchy = p(1.0, 1.0);
        assert_eq!(s_moment(0, 0.1, &cauchy).unwrap(), 1.0);
        let h: f64 = 0.1;
        let e = (1.0 / h).exp();
        let closed = ((1.0 - h) * e + h) / (e - 1.0);
        let m1 = s_moment(1, h, &cauchy).unwrap();
        assert!((m1 - closed).abs() < 1e-13);
        assert!((m1 - 0.9000454).abs() < 1e-7);
        for h in [0.01, 0.005] {
            let m1 = s_moment(1, h, &cauchy).unwrap();
            assert!((m1 - (1.0 - h)).abs() < 1e-10);
        }
        for lambda in [0.5, 1.0, 1.5, 2.0] {
            let params = p(lambda, 1.0);
            let ms: Vec<f64> = (0..=4).map(|m| s_moment(m, 0.2, &params).unwrap()).collect();
            assert!(ms.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0), "{ms:?}");
        }
        assert!(s_moment(5, 0.2, &cauchy).is_err());
    }

    #[test]
    fn variance_of_s() {
        let (num, exp) = s_variance(0.05, &p(1.0, 1.0)).unwrap();
        assert!((0.8..=1.2).contains(&(num / exp)), "{}", num / exp);
        assert!(s_variance(0.3, &p(2.0, 1.0)).unwrap().0 > 0.0);
        let ratio = |h| {
            let (n, e) = s_variance(h, &p(1.5, 1.0)).unwrap();
            n / e
        };
        assert!((ratio(0.05) - 1.0).abs() < (ratio(0.2) - 1.0).abs());
        // Against E S² - (E S)² where cancellation is still mild.
        let params = p(1.5, 1.0);
        let direct = s_moment(2, 0.3, &params).unwrap() - s_moment(1, 0.3, &params).unwrap().powi(2);
        assert!((s_variance(0.3, &params).unwrap().0 - direct).abs() < 1e-12);
    }

    #[test]
    fn en_density_support_and_normalization() {
        let cauchy = p(1.0, 1.0);
        assert_eq!(f_en_density(0.5, 0.1, &cauchy).unwrap(), 0.0);
        let at_zero = f_en_density(0.0, 0.1, &cauchy).unwrap();
        assert!((at_zero - 1.0 / (1.0 - (-10.0f64).exp())).abs() < 1e-12);
        assert!((at_zero - 1.0000454).abs() < 1e-7);
        for lambda in [0.5, 1.0, 1.5, 2.0] {
            for h in [0.4, 0.1] {
                let d = EnDensity::new(h, &p(lambda, 1.0)).unwrap();
                let lo = d.lower();
                let mut breaks = vec![lo, 0.0];
                let mut v = -0.25;
                while v > lo {
                    breaks.push(v);
                    v *= 2.0;
                }
                breaks.sort_by(f64::total_cmp);
                let total = integrate_breaks(|v| d.eval(v), &breaks, QuadOptions::tol(1e-14, 1e-13)).unwrap();
                assert!((total.value - 1.0).abs() < 1e-8, "lambda {lambda} h {h}: {}", total.value);
            }
        }
    }

    #[test]
    fn en_density_approaches_exponential() {
        for lambda in [0.5, 1.0, 1.5, 2.0] {
            let sup = |h| {
                let d = EnDensity::new(h, &p(lambda, 1.0)).unwrap();
                (0..=500).map(|i| -5.0 * i as f64 / 500.0).map(|v| (d.eval(v) - v.exp()).abs()).fold(0.0, f64::max)
            };
            let s: Vec<f64> = [0.4, 0.2, 0.1].iter().map(|&h| sup(h)).collect();
            assert!(s[1] < s[0] && s[2] < s[1], "lambda {lambda}: {s:?}");
        }
    }

    #[test]
    fn w_closed_forms() {
        let cauchy = p(1.0, 1.0);
        assert_eq!(w1(0.0, &cauchy), 1.0);
        assert_eq!(w2(0.0, &cauchy), 0.0);
        assert_eq!(w1(1.0, &cauchy), 0.5);
        assert_eq!(w2(1.0, &cauchy), -0.5);
        let params = p(1.3, 0.6);
        let peak = params.lambda() / params.mu();
        assert!((w2(-peak, &params) - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn w_identity_and_bounds(u in -1e3f64..1e3, lambda in 0.05f64..=2.0, mu in 0.01f64..100.0) {
            let params = p(lambda, mu);
            let (a, b) = (w1(u, &params), w2(u, &params));
            prop_assert!((a * a + b * b - a).abs() <= 1e-14);
            prop_assert!(a > 0.0 && a <= 1.0);
            prop_assert!(b.abs() <= 0.5 + 1e-15);
        }

        #[test]
        fn v_stat_bounded(x_obs in -50f64..50.0, x in -5f64..5.0, h in 0.01f64..2.0, lambda in 0.35f64..=2.0) {
            let params = p(lambda, 1.0);
            let v = v_stat(x_obs, x, h, &params);
            let u = h.powf(lambda - 1.0) * (x_obs - x);
            prop_assert!(v.abs() <= w1(u, &params).sqrt() + 1e-15);
        }
    }

    #[test]
    fn exponential_average_oracle() {
        for b in [0.0, 0.5, 1.0, 3.0] {
            let out = integrate(|v: f64| (b * v).cos() * (-v).exp(), 0.0, 60.0, QuadOptions::default()).unwrap();
            assert!((out.value - 1.0 / (1.0 + b * b)).abs() < 1e-8);
        }
    }

    #[test]
    fn gap_vanishes_at_zero_offset() {
        let (c, s) = trig_moment_gap(0.0, 0.1, &p(1.5, 1.0)).unwrap();
        assert!(c < 1e-12 && s < 1e-15, "{c} {s}");
    }

    #[test]
    fn gap_halves_with_bandwidth() {
        let params = p(1.0, 1.0);
        let (c1, s1) = trig_moment_gap(1.0, 0.1, &params).unwrap();
        let (c2, s2) = trig_moment_gap(1.0, 0.05, &params).unwrap();
        assert!(c2 / c1 <= 0.7 && s2 / s1 <= 0.7, "{} {}", c2 / c1, s2 / s1);
    }

    #[test]
    fn trig_moments_match_en_density_quadrature() {
        let params = p(1.5, 1.0);
        let h = 0.2;
        let a = 1.0;
        let d = EnDensity::new(h, &params).unwrap();
        let b = params.mu() / params.lambda() * h.powf(params.lambda() - 1.0) * a;
        let breaks: Vec<f64> = (0..=400).map(|i| d.lower() * i as f64 / 400.0).rev().collect();
        let c = integrate_breaks(|v| (b * v).cos() * d.eval(v), &breaks, QuadOptions::default()).unwrap();
        let s = integrate_breaks(|v| (b * v).sin() * d.eval(v), &breaks, QuadOptions::default()).unwrap();
        let (mc, ms) = en_trig_moments(a, h, &params).unwrap();
        assert!((c.value - mc).abs() < 1e-11 && (s.value - ms).abs() < 1e-11);
    }

    #[test]
    fn v_stat_examples() {
        let cauchy = p(1.0, 1.0);
        assert_eq!(v_stat(0.7, 0.7, 0.3, &cauchy), 1.0);
        let v = v_stat(PI, 0.0, 1.0, &cauchy);
        assert!((v + 1.0 / (1.0 + PI * PI)).abs() < 1e-15);
        assert!((v + 0.0919997).abs() < 1e-7);
    }

    #[test]
    fn sigma2_closed_forms() {
        let t = TargetDensity::standard_normal();
        let s = sigma2(&p(2.0, 2.0), &t, 0.0).unwrap();
        assert_eq!(s.regime, Regime::SuperCauchy);
        assert!(!s.needs_g);
        assert!((s.value - 1.0 / (2.0 * PI * PI)).abs() < 1e-16);
        assert!((s.value - 0.0506606).abs() < 1e-7);
        assert!((sigma2(&p(1.5, 1.0), &t, 0.0).unwrap().value - 0.0225158).abs() < 1e-7);
        assert!((sub_cauchy_sigma2(&p(0.5, 1.0), 0.2) - 0.0636620).abs() < 1e-7);
        assert!(matches!(sigma2(&p(0.3, 1.0), &t, 0.0), Err(Error::UnsupportedRegime { .. })));
    }

    #[test]
    fn sub_cauchy_sigma2_uses_g_at_x() {
        let t = TargetDensity::standard_normal();
        let params = p(0.5, 1.0);
        let g = g_density(0.3, &t, &params).unwrap();
        let s = sigma2(&params, &t, 0.3).unwrap();
        assert!(s.needs_g);
        assert!((s.value - sub_cauchy_sigma2(&params, g)).abs() < 1e-16);
    }

    /// `∫ g(u)/(1+μ²(u-x)²) du` through the Fourier side:
    /// `(1/μ) ∫_0^∞ Re[φ_f(t) e^{-itx}] e^{-t/μ} e^{-t^λ/μ} dt`.
    fn fourier_weighted_mass(params: &StableParams, t: &TargetDensity, x: f64) -> f64 {
        let mu = params.mu();
        let lambda = params.lambda();
        let f = |s: f64| {
            (t.cf(s) * Complex64::from_polar(1.0, -s * x)).re * (-s / mu - s.powf(lambda) / mu).exp()
        };
        let breaks: Vec<f64> = (0..=400).map(|i| i as f64 * 0.25).collect();
        integrate_breaks(f, &breaks, QuadOptions::tol(1e-15, 1e-13)).unwrap().value / mu
    }

    #[test]
    fn cauchy_sigma2_matches_fourier_route() {
        let targets = [TargetDensity::standard_normal(), TargetDensity::laplace(0.2, 0.5).unwrap()];
        for t in &targets {
            for (mu, x) in [(1.0, 0.0), (2.0, 0.4), (0.5, -1.0)] {
                let params = p(1.0, mu);
                let s = sigma2(&params, t, x).unwrap();
                let oracle = mu * mu * fourier_weighted_mass(&params, t, x) / (2.0 * PI * PI);
                assert!(((s.value - oracle) / oracle).abs() < 1e-7, "{t:?} mu {mu}: {} vs {oracle}", s.value);
                assert!(s.value <= mu * mu / (2.0 * PI * PI));
            }
        }
    }

    #[test]
    fn var_v_limits() {
        let t = TargetDensity::standard_normal();
        assert_eq!(var_v_limit(&p(1.7, 1.0), &t, 0.0, 0.1).unwrap(), 0.5);
        assert!((sub_cauchy_var_v(&p(0.5, 1.0), 0.2, 0.1) - 0.0496729).abs() < 1e-7);
        assert!(var_v_limit(&p(0.2, 1.0), &t, 0.0, 0.1).is_err());
    }

    #[test]
    fn cauchy_var_v_matches_monte_carlo() {
        let t = TargetDensity::standard_normal();
        let params = p(1.0, 1.0);
        let limit = var_v_limit(&params, &t, 0.0, 0.05).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| {
                let x = t.sample(&mut rng) + crate::stable::stable_sample(&params, &mut rng);
                0.5 * w1(x, &params)
            })
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let sd = (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((mean - limit).abs() < 3.0 * sd / (n as f64).sqrt(), "{mean} vs {limit}");
    }

    #[test]
    fn log_normalization_values() {
        let cauchy = p(1.0, 1.0);
        assert!((log_normalization(100, 0.5, &cauchy).unwrap() - 0.3025851).abs() < 1e-7);
        assert_eq!(log_normalization(1, 1.0, &p(2.0, 1.0)).unwrap(), -1.0);
        for h in [0.1, 0.4] {
            let c = log_normalization(50, h, &cauchy).unwrap();
            assert!((c - (0.5 * 50f64.ln() - 1.0 / h)).abs() < 1e-12);
        }
        for lambda in [0.5, 1.0, 1.5, 2.0] {
            let params = p(lambda, 1.0);
            let hs = [0.9, 0.5, 0.2, 0.05];
            let ls: Vec<f64> = hs.iter().map(|&h| log_normalization(100, h, &params).unwrap()).collect();
            assert!(ls.windows(2).all(|w| w[1] < w[0]), "lambda {lambda}: {ls:?}");
            assert!(log_normalization(200, 0.3, &params).unwrap() > log_normalization(100, 0.3, &params).unwrap());
        }
    }

    #[test]
    fn mexpansion_cases() {
        let cauchy = p(1.0, 1.0);
        let r = mexpansion_check(1, 0.1, &cauchy).unwrap();
        assert!((r.numeric - closed_c(0.1) * 0.9000454).abs() < 1e-7);
        assert!((r.numeric - 0.0900005).abs() < 1e-7);
        assert!((r.refined - 0.09).abs() < 1e-16);
        for lambda in [0.5, 1.0, 1.5, 2.0] {
            let params = p(lambda, 1.0);
            let r0 = mexpansion_check(0, 0.1, &params).unwrap();
            assert_eq!(r0.refined, c_expansion(0.1, &params, 3).unwrap());
            assert_eq!(r0.numeric, scaled_c(0.1, &params).unwrap());
        }
        let params = p(1.5, 1.0);
        for m in 0..=2 {
            let e1 = mexpansion_check(m, 0.2, &params).unwrap().abs_error_refined;
            let e2 = mexpansion_check(m, 0.1, &params).unwrap().abs_error_refined;
            assert!(e2 / e1 <= 2.0 * 2f64.powf(-4.5), "m {m}: {}", e2 / e1);
        }
        assert!(mexpansion_check(3, 0.1, &params).is_err());
    }
}
