//! Test densities for the unobserved variable `Y`, each with a closed-form
//! characteristic function.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetDensity {
    Normal {
        #[serde(with = "crate::io::real")]
        mean: f64,
        #[serde(with = "crate::io::real")]
        sd: f64,
    },
    Laplace {
        #[serde(with = "crate::io::real")]
        location: f64,
        #[serde(with = "crate::io::real")]
        scale: f64,
    },
    NormalMixture {
        #[serde(with = "crate::io::real_vec")]
        weights: Vec<f64>,
        #[serde(with = "crate::io::real_vec")]
        means: Vec<f64>,
        #[serde(with = "crate::io::real_vec")]
        sds: Vec<f64>,
    },
}

fn normal_pdf(y: f64, mean: f64, sd: f64) -> f64 {
    let z = (y - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
}

fn normal_cdf(y: f64, mean: f64, sd: f64) -> f64 {
    0.5 * erfc(-(y - mean) / (sd * std::f64::consts::SQRT_2))
}

fn normal_cf(t: f64, mean: f64, sd: f64) -> Complex64 {
    Complex64::from_polar((-0.5 * sd * sd * t * t).exp(), t * mean)
}

impl TargetDensity {
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        let t = TargetDensity::Normal { mean, sd };
        t.validate()?;
        Ok(t)
    }

    pub fn standard_normal() -> Self {
        TargetDensity::Normal { mean: 0.0, sd: 1.0 }
    }

    pub fn laplace(location: f64, scale: f64) -> Result<Self> {
        let t = TargetDensity::Laplace { location, scale };
        t.validate()?;
        Ok(t)
    }

    pub fn normal_mixture(weights: Vec<f64>, means: Vec<f64>, sds: Vec<f64>) -> Result<Self> {
        let t = TargetDensity::NormalMixture { weights, means, sds };
        t.validate()?;
        Ok(t)
    }

    /// Checks the invariants of each family; deserialized values must be
    /// validated before use.
    pub fn validate(&self) -> Result<()> {
        match self {
            TargetDensity::Normal { mean, sd } => {
                if !mean.is_finite() || !(*sd > 0.0 && sd.is_finite()) {
                    return Err(Error::invalid(format!("normal target needs finite mean and sd > 0 (got {mean}, {sd})")));
                }
            }
            TargetDensity::Laplace { location, scale } => {
                if !location.is_finite() || !(*scale > 0.0 && scale.is_finite()) {
                    return Err(Error::invalid(format!(
                        "laplace target needs finite location and scale > 0 (got {location}, {scale})"
                    )));
                }
            }
            TargetDensity::NormalMixture { weights, means, sds } => {
                if weights.is_empty() || weights.len() != means.len() || weights.len() != sds.len() {
                    return Err(Error::invalid("mixture weights, means and sds must be nonempty and equally long"));
                }
                if weights.iter().any(|w| !(*w > 0.0)) {
                    return Err(Error::invalid("mixture weights must be positive"));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::invalid(format!("mixture weights must sum to 1 (sum = {total})")));
                }
                if means.iter().any(|m| !m.is_finite()) || sds.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                    return Err(Error::invalid("mixture components need finite means and sds > 0"));
                }
            }
        }
        Ok(())
    }

    pub fn density(&self, y: f64) -> f64 {
        match self {
            TargetDensity::Normal { mean, sd } => normal_pdf(y, *mean, *sd),
            TargetDensity::Laplace { location, scale } => (-(y - location).abs() / scale).exp() / (2.0 * scale),
            TargetDensity::NormalMixture { weights, means, sds } => weights
                .iter()
                .zip(means)
                .zip(sds)
                .map(|((w, m), s)| w * normal_pdf(y, *m, *s))
                .sum(),
        }
    }

    pub fn cdf(&self, y: f64) -> f64 {
        match self {
            TargetDensity::Normal { mean, sd } => normal_cdf(y, *mean, *sd),
            TargetDensity::Laplace { location, scale } => {
                let z = (y - location) / scale;
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
            TargetDensity::NormalMixture { weights, means, sds } => weights
                .iter()
                .zip(means)
                .zip(sds)
                .map(|((w, m), s)| w * normal_cdf(y, *m, *s))
                .sum(),
        }
    }

    /// Characteristic function `E exp(i t Y)`.
    pub fn cf(&self, t: f64) -> Complex64 {
        match self {
            TargetDensity::Normal { mean, sd } => normal_cf(t, *mean, *sd),
            TargetDensity::Laplace { location, scale } => {
                Complex64::from_polar(1.0 / (1.0 + scale * scale * t * t), t * location)
            }
            TargetDensity::NormalMixture { weights, means, sds } => weights
                .iter()
                .zip(means)
                .zip(sds)
                .map(|((w, m), s)| normal_cf(t, *m, *s) * *w)
                .sum(),
        }
    }

    /// Frequency beyond which `|φ_f(t)| < 1e-17`, or `None` when the
    /// characteristic function only decays algebraically.
    pub fn cf_cutoff(&self) -> Option<f64> {
        match self {
            TargetDensity::Normal { sd, .. } => Some((2.0 * 39.2f64).sqrt() / sd),
            TargetDensity::Laplace { .. } => None,
            TargetDensity::NormalMixture { sds, .. } => {
                let smallest = sds.iter().cloned().fold(f64::INFINITY, f64::min);
                Some((2.0 * 39.2f64).sqrt() / smallest)
            }
        }
    }

    /// Center and spread used to lay out real-space quadrature panels.
    pub fn location_scale(&self) -> (f64, f64) {
        match self {
            TargetDensity::Normal { mean, sd } => (*mean, *sd),
            TargetDensity::Laplace { location, scale } => (*location, *scale),
            TargetDensity::NormalMixture { weights, means, sds } => {
                let m: f64 = weights.iter().zip(means).map(|(w, m)| w * m).sum();
                let v: f64 = weights
                    .iter()
                    .zip(means)
                    .zip(sds)
                    .map(|((w, mi), s)| w * (s * s + (mi - m) * (mi - m)))
                    .sum();
                (m, v.sqrt())
            }
        }
    }

    pub fn is_symmetric_about_zero(&self) -> bool {
        match self {
            TargetDensity::Normal { mean, .. } => *mean == 0.0,
            TargetDensity::Laplace { location, .. } => *location == 0.0,
            TargetDensity::NormalMixture { .. } => false,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            TargetDensity::Normal { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
            TargetDensity::Laplace { location, scale } => {
                let e: f64 = Exp1.sample(rng);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                location + sign * scale * e
            }
            TargetDensity::NormalMixture { weights, means, sds } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut k = weights.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        k = i;
                        break;
                    }
                }
                let z: f64 = StandardNormal.sample(rng);
                means[k] + sds[k] * z
            }
        }
    }
}
