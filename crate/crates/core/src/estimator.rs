//! The sinc-kernel deconvolution estimator
//!
//! ```text
//! f_nh(x) = (1/(π n h)) Σ_j ∫_0^1 cos(s (X_j - x)/h) exp((s/h)^λ / μ) ds
//! ```
//!
//! evaluated in the scaled domain (everything multiplied by
//! `exp(-(1/h)^λ/μ)`), its exact expectation, the observation density
//! `g = k * f`, and synthetic data `X = Y + Z`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{geometric_breaks, integrate_breaks, QuadOptions};
use crate::scaled::ScaledValue;
use crate::stable::{stable_sample, StableParams};
use crate::target::TargetDensity;
use crate::vh::VhKernel;

pub use crate::vh::scaled_vh;

/// Bandwidth plus noise law. The kernel is always the sinc kernel, whose
/// Fourier transform is the indicator of `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    #[serde(with = "crate::io::real")]
    pub h: f64,
    pub noise: StableParams,
}

impl EstimatorConfig {
    pub fn new(h: f64, noise: StableParams) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid(format!("bandwidth h must be positive and finite, got {h}")));
        }
        let cfg = Self { h, noise };
        if !cfg.log_scale().is_finite() {
            return Err(Error::invalid(format!("exponent (1/h)^lambda/mu is not finite for h = {h}")));
        }
        let steepness = cfg.log_scale() * noise.lambda();
        if steepness > MAX_STEEPNESS {
            return Err(Error::numerical(format!(
                "bandwidth h = {h:e} too small for double precision: lambda (1/h)^lambda/mu = {steepness:.3e} exceeds {MAX_STEEPNESS:e}"
            )));
        }
        Ok(cfg)
    }

    /// `(1/h)^λ / μ`, the natural log of the factor removed from all
    /// scaled quantities.
    pub fn log_scale(&self) -> f64 {
        (1.0 / self.h).powf(self.noise.lambda()) / self.noise.mu()
    }
}

pub const DEFAULT_CF_NODES: usize = 4096;

/// Largest `λ(1/h)^λ/μ` accepted. The kernel weight lives within
/// `1/(λ(1/h)^λ/μ)` of `s = 1`; beyond this, rounding of `s` alone costs
/// more than `1e-10` relative accuracy.
pub const MAX_STEEPNESS: f64 = 1e6;

/// Pairwise summation in a fixed left-to-right tree.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        let mut acc = 0.0;
        for x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Estimator bound to one configuration; holds the tabulated kernel so
/// repeated evaluations share it.
#[derive(Debug, Clone)]
pub struct Estimator {
    kernel: VhKernel,
}

impl Estimator {
    pub fn new(cfg: EstimatorConfig) -> Self {
        Self { kernel: VhKernel::new(cfg) }
    }

    pub fn config(&self) -> &EstimatorConfig {
        self.kernel.config()
    }

    pub fn kernel(&self) -> &VhKernel {
        &self.kernel
    }

    pub fn estimate_at(&self, data: &[f64], x: f64) -> Result<ScaledValue> {
        if data.is_empty() {
            return Err(Error::Empty("observations"));
        }
        let cfg = self.config();
        let h = cfg.h;
        let mut terms = Vec::with_capacity(data.len());
        for &xj in data {
            let u = (x - xj) / h;
            if !u.is_finite() {
                return Err(Error::numerical(format!("kernel argument (x - X_j)/h overflows for X_j = {xj}, h = {h}")));
            }
            terms.push(self.kernel.eval(u)?);
        }
        let mantissa = pairwise_sum(&terms) / (data.len() as f64 * h);
        Ok(ScaledValue::new(mantissa, cfg.log_scale()))
    }

    pub fn estimate_grid(&self, data: &[f64], grid: &[f64]) -> Result<Vec<ScaledValue>> {
        if grid.is_empty() {
            return Err(Error::Empty("grid"));
        }
        grid.iter().map(|&x| self.estimate_at(data, x)).collect()
    }
}

/// `f_nh(x)` by direct summation of the kernel over observations.
pub fn estimate_at(data: &[f64], x: f64, cfg: &EstimatorConfig) -> Result<ScaledValue> {
    if data.is_empty() {
        return Err(Error::Empty("observations"));
    }
    Estimator::new(*cfg).estimate_at(data, x)
}

/// Result of the Fourier-inversion route.
#[derive(Debug, Clone)]
pub struct CfGridEstimate {
    pub values: Vec<ScaledValue>,
    /// Largest `|Im|` of the inversion integral before it is discarded.
    pub max_abs_imag: f64,
    /// Largest `|Re|` over the grid.
    pub max_abs_real: f64,
}

/// `f_nh` on a grid via the empirical characteristic function,
/// `(1/2π) ∫_{-1/h}^{1/h} e^{-itx} φ_emp(t) / φ_k(t) dt`, using the trapezoid
/// rule on `nodes` equispaced frequencies (endpoints included) with
/// Euler–Maclaurin end corrections through the `dt⁴` term. Observations too
/// far out for the frequency grid to resolve (`|X_j|·dt > 1`) are left out
/// of the end corrections.
pub fn estimate_grid_cf(data: &[f64], grid: &[f64], cfg: &EstimatorConfig, nodes: usize) -> Result<Vec<ScaledValue>> {
    Ok(estimate_grid_cf_detailed(data, grid, cfg, nodes)?.values)
}

pub fn estimate_grid_cf_detailed(
    data: &[f64],
    grid: &[f64],
    cfg: &EstimatorConfig,
    nodes: usize,
) -> Result<CfGridEstimate> {
    if grid.is_empty() {
        return Err(Error::Empty("grid"));
    }
    if data.is_empty() {
        return Err(Error::Empty("observations"));
    }
    if nodes < 2 {
        return Err(Error::invalid("frequency grid needs at least two nodes"));
    }
    let n = data.len() as f64;
    let t_max = 1.0 / cfg.h;
    let dt = 2.0 * t_max / (nodes - 1) as f64;
    let kappa = cfg.log_scale();
    let lambda = cfg.noise.lambda();

    // Weighted, damped empirical CF at each node.
    let mut integrand = Vec::with_capacity(nodes);
    let mut freqs = Vec::with_capacity(nodes);
    for k in 0..nodes {
        let t = -t_max + k as f64 * dt;
        let t = if k == nodes - 1 { t_max } else { t };
        let (mut re, mut im) = (0.0, 0.0);
        for &xj in data {
            let (s, c) = (t * xj).sin_cos();
            re += c;
            im += s;
        }
        let damp = (kappa * (lambda * (t.abs() * cfg.h).ln()).exp_m1()).exp();
        let damp = if t == 0.0 { (-kappa).exp() } else { damp };
        let w = if k == 0 || k == nodes - 1 { 0.5 * dt } else { dt };
        integrand.push(Complex64::new(re / n, im / n) * (w * damp));
        freqs.push(t);
    }

    // Derivatives of order 0..=3 at t = ±1/h of the empirical CF and of the
    // damping factor exp((|t|^λ - (1/h)^λ)/μ).
    let mu = cfg.noise.mu();
    let mut ecf = [[Complex64::new(0.0, 0.0); 4]; 2];
    for &xj in data.iter().filter(|xj| xj.abs() * dt <= 1.0) {
        for (side, t) in [(0, -t_max), (1, t_max)] {
            let base = Complex64::from_polar(1.0 / n, t * xj);
            let mut factor = Complex64::new(1.0, 0.0);
            for d in ecf[side].iter_mut() {
                *d += base * factor;
                factor *= Complex64::new(0.0, xj);
            }
        }
    }
    let g1 = lambda * t_max.powf(lambda - 1.0) / mu;
    let g2 = lambda * (lambda - 1.0) * t_max.powf(lambda - 2.0) / mu;
    let g3 = lambda * (lambda - 1.0) * (lambda - 2.0) * t_max.powf(lambda - 3.0) / mu;
    let damp_right = [1.0, g1, g1 * g1 + g2, g1 * g1 * g1 + 3.0 * g1 * g2 + g3];
    // The damping factor is even: odd derivatives flip sign on the left.
    let damp_left = [1.0, -g1, g1 * g1 + g2, -(g1 * g1 * g1 + 3.0 * g1 * g2 + g3)];
    const BINOM: [[f64; 4]; 4] = [[1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0], [1.0, 2.0, 1.0, 0.0], [1.0, 3.0, 3.0, 1.0]];

    let mut values = Vec::with_capacity(grid.len());
    let mut max_abs_imag: f64 = 0.0;
    let mut max_abs_real: f64 = 0.0;
    for &x in grid {
        let mut acc = Complex64::new(0.0, 0.0);
        for (t, v) in freqs.iter().zip(&integrand) {
            acc += Complex64::from_polar(1.0, -t * x) * v;
        }
        // k-th derivative of e^{-itx} φ_emp(t) D(t) at the end `t`.
        let end_derivative = |k: usize, t: f64, side: usize, damp: &[f64; 4]| {
            let mut total = Complex64::new(0.0, 0.0);
            for i in 0..=k {
                let mut inner = Complex64::new(0.0, 0.0);
                for j in 0..=(k - i) {
                    inner += ecf[side][j] * (BINOM[k - i][j] * damp[k - i - j]);
                }
                total += Complex64::new(0.0, -x).powu(i as u32) * BINOM[k][i] * inner;
            }
            total * Complex64::from_polar(1.0, -t * x)
        };
        let d1 = end_derivative(1, t_max, 1, &damp_right) - end_derivative(1, -t_max, 0, &damp_left);
        let d3 = end_derivative(3, t_max, 1, &damp_right) - end_derivative(3, -t_max, 0, &damp_left);
        acc += -d1 * (dt * dt / 12.0) + d3 * (dt.powi(4) / 720.0);
        let acc = acc / (2.0 * PI);
        max_abs_imag = max_abs_imag.max(acc.im.abs());
        max_abs_real = max_abs_real.max(acc.re.abs());
        values.push(ScaledValue::new(acc.re, kappa));
    }
    Ok(CfGridEstimate { values, max_abs_imag, max_abs_real })
}

/// `E f_nh(x) = (1/π) ∫_0^{1/h} Re[e^{-itx} φ_f(t)] dt` (unscaled).
pub fn expected_estimate(x: f64, target: &TargetDensity, cfg: &EstimatorConfig) -> Result<f64> {
    let mut upper = 1.0 / cfg.h;
    if let Some(cut) = target.cf_cutoff() {
        upper = upper.min(cut);
    }
    let (_, spread) = target.location_scale();
    let (loc, _) = target.location_scale();
    let freq = (x - loc).abs() + loc.abs() + 1.0 / spread;
    let panels = ((upper * freq / 3.0).ceil() as usize).clamp(8, 20_000);
    let breaks: Vec<f64> = (0..=panels).map(|k| upper * k as f64 / panels as f64).collect();
    let f = |t: f64| (Complex64::from_polar(1.0, -t * x) * target.cf(t)).re;
    let out = integrate_breaks(f, &breaks, QuadOptions { abs_tol: 1e-13, rel_tol: 1e-13, max_panels: 200_000 })?;
    Ok(out.value / PI)
}

/// `exp(-(1/h)^λ/μ) · E f_nh(x)`, on the same scale as estimate mantissas.
pub fn scaled_expected_estimate(x: f64, target: &TargetDensity, cfg: &EstimatorConfig) -> Result<f64> {
    Ok(expected_estimate(x, target, cfg)? * (-cfg.log_scale()).exp())
}

/// Observation density `g(u) = (1/π) ∫_0^∞ Re[e^{-itu} φ_f(t)] e^{-t^λ/μ} dt`.
pub fn g_density(u: f64, target: &TargetDensity, noise: &StableParams) -> Result<f64> {
    let lambda = noise.lambda();
    let mu = noise.mu();
    let mut upper = (46.0 * mu).powf(1.0 / lambda);
    if let Some(cut) = target.cf_cutoff() {
        upper = upper.min(cut);
    }
    let (loc, spread) = target.location_scale();
    let scale = (mu.powf(1.0 / lambda)).min(1.0 / spread).min(upper / 4.0);
    let mut breaks = geometric_breaks(scale, upper);
    // Oscillation e^{-itu}: keep panels within a few periods.
    let freq = (u - loc).abs() + loc.abs();
    if freq > 0.0 {
        let width = 6.0 / freq;
        let mut refined = vec![0.0];
        for w in breaks.windows(2) {
            let k = ((w[1] - w[0]) / width).ceil().max(1.0) as usize;
            for i in 1..=k {
                refined.push(w[0] + (w[1] - w[0]) * i as f64 / k as f64);
            }
        }
        breaks = refined;
    }
    let f = |t: f64| (Complex64::from_polar(1.0, -t * u) * target.cf(t)).re * (-t.powf(lambda) / mu).exp();
    let out = integrate_breaks(f, &breaks, QuadOptions { abs_tol: 1e-14, rel_tol: 1e-12, max_panels: 100_000 })?;
    Ok(out.value / PI)
}

/// Draws `X_j = Y_j + Z_j`, `Y ~ f`, `Z ~ k`, alternating the two draws per
/// observation.
pub fn sample_observations<R: Rng + ?Sized>(
    target: &TargetDensity,
    noise: &StableParams,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("sample size n must be at least 1"));
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let y = target.sample(rng);
        let z = stable_sample(noise, rng);
        out.push(y + z);
    }
    Ok(out)
}
