//! Symmetric stable noise with characteristic function `exp(-|t|^λ / μ)`.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{geometric_breaks, integrate_breaks, QuadOptions};

/// Noise law parameters in rate form: `φ_k(t) = exp(-|t|^lambda / mu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StableParams {
    lambda: f64,
    mu: f64,
}

impl StableParams {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 2.0) {
            return Err(Error::invalid(format!(
                "stability exponent lambda must lie in (0, 2], got {lambda}"
            )));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::invalid(format!("rate mu must be positive and finite, got {mu}")));
        }
        Ok(Self { lambda, mu })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Scale σ of the conventional form `exp(-(σ|t|)^λ)`, i.e. `(1/μ)^{1/λ}`.
    pub fn scale(&self) -> f64 {
        (1.0 / self.mu).powf(1.0 / self.lambda)
    }

    pub fn regime(&self) -> Regime {
        Regime::classify(self.lambda)
    }
}

impl<'de> Deserialize<'de> for StableParams {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            #[serde(with = "crate::io::real")]
            lambda: f64,
            #[serde(with = "crate::io::real")]
            mu: f64,
        }
        let raw = Raw::deserialize(deserializer)?;
        StableParams::new(raw.lambda, raw.mu).map_err(serde::de::Error::custom)
    }
}

/// Which limit theorem governs the estimator for a given λ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// 1 < λ ≤ 2
    SuperCauchy,
    /// λ = 1
    Cauchy,
    /// 1/3 < λ < 1
    SubCauchy,
    /// λ ≤ 1/3: no limit theorem available.
    Unsupported,
}

impl Regime {
    pub fn classify(lambda: f64) -> Regime {
        if lambda == 1.0 {
            Regime::Cauchy
        } else if lambda > 1.0 {
            Regime::SuperCauchy
        } else if lambda > 1.0 / 3.0 {
            Regime::SubCauchy
        } else {
            Regime::Unsupported
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regime::SuperCauchy => "SuperCauchy",
            Regime::Cauchy => "Cauchy",
            Regime::SubCauchy => "SubCauchy",
            Regime::Unsupported => "Unsupported",
        }
    }
}

pub fn stable_cf(params: &StableParams, t: f64) -> f64 {
    (-t.abs().powf(params.lambda) / params.mu).exp()
}

/// Density `k(z) = (1/π) ∫_0^∞ cos(tz) exp(-t^λ/μ) dt`.
///
/// The integral is taken along the ray `t = r e^{iθ}` with
/// `θ = π / (4 max(λ, 1))`; on that ray both factors decay so there is no
/// oscillatory cancellation even for large `|z|`.
pub fn stable_density(params: &StableParams, z: f64) -> Result<f64> {
    let z = z.abs();
    let lambda = params.lambda;
    let mu = params.mu;
    let theta = FRAC_PI_4 / lambda.max(1.0);
    let ray = Complex64::from_polar(1.0, theta);
    let ray_pow = Complex64::from_polar(1.0, lambda * theta);
    let (sin_t, cos_lt) = (theta.sin(), (lambda * theta).cos());

    // exp(-46) ~ 1e-20
    let natural = mu.powf(1.0 / lambda);
    let mut upper = (46.0 * mu / cos_lt).powf(1.0 / lambda);
    let mut scale = natural;
    if z > 0.0 {
        upper = upper.min(46.0 / (z * sin_t));
        scale = scale.min(1.0 / (z * sin_t));
    }
    let scale = scale.min(upper / 2.0);
    let breaks = geometric_breaks(scale, upper);
    let integrand = |r: f64| {
        if r == 0.0 {
            return ray;
        }
        let exponent = Complex64::new(0.0, z * r) * ray - ray_pow * (r.powf(lambda) / mu);
        ray * exponent.exp()
    };
    let out = integrate_breaks(integrand, &breaks, QuadOptions::tol(1e-14, 1e-12))?;
    Ok((out.value.re / PI).max(0.0))
}

/// Draws one variate with characteristic function `exp(-|t|^λ/μ)` using the
/// Chambers–Mallows–Stuck transform (symmetric case).
pub fn stable_sample<R: Rng + ?Sized>(params: &StableParams, rng: &mut R) -> f64 {
    let lambda = params.lambda;
    if lambda == 2.0 {
        let z: f64 = StandardNormal.sample(rng);
        return z * (2.0 / params.mu).sqrt();
    }
    let v = PI * (rng.random::<f64>() - 0.5);
    if lambda == 1.0 {
        return v.tan() / params.mu;
    }
    let w: f64 = Exp1.sample(rng);
    let sigma = params.scale();
    let a = lambda;
    let x = (a * v).sin() / v.cos().powf(1.0 / a) * (((1.0 - a) * v).cos() / w).powf((1.0 - a) / a);
    sigma * x
}

/// Fills `out` with independent draws.
pub fn stable_sample_into<R: Rng + ?Sized>(params: &StableParams, rng: &mut R, out: &mut [f64]) {
    for slot in out.iter_mut() {
        *slot = stable_sample(params, rng);
    }
}
