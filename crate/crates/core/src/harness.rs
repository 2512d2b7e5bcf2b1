//! Monte Carlo experiments for the limit laws of the normalized estimator,
//! the asymptotic uniformity of `(X - x)/h mod 2π`, and the variance of the
//! per-observation statistic `V`.

use std::f64::consts::TAU;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::asymptotics::{log_normalization, sigma2, v_stat, var_v_limit};
use crate::error::{Error, Result};
use crate::estimator::{sample_observations, scaled_expected_estimate, Estimator, EstimatorConfig};
use crate::io;
use crate::rng::{stream, Purpose};
use crate::stable::{Regime, StableParams};
use crate::target::TargetDensity;

pub const SPEC_VERSION: u32 = 1;

/// Smallest `n·h` accepted for sub-Cauchy experiments.
pub const SUB_CAUCHY_MIN_NH: f64 = 10.0;

/// One limit-law experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub version: u32,
    #[serde(default)]
    pub label: String,
    pub target: TargetDensity,
    pub noise: StableParams,
    #[serde(with = "crate::io::real")]
    pub x: f64,
    #[serde(with = "crate::io::real")]
    pub h: f64,
    pub n: usize,
    pub replicates: usize,
    pub master_seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.version != SPEC_VERSION {
            return Err(Error::invalid(format!("unsupported spec version {} (expected {SPEC_VERSION})", self.version)));
        }
        self.target.validate()?;
        if self.noise.regime() == Regime::Unsupported {
            return Err(Error::UnsupportedRegime { lambda: self.noise.lambda() });
        }
        if !self.x.is_finite() {
            return Err(Error::invalid("evaluation point x must be finite"));
        }
        EstimatorConfig::new(self.h, self.noise)?;
        if self.n < 2 {
            return Err(Error::invalid(format!("n must be at least 2, got {}", self.n)));
        }
        if self.replicates < 2 {
            return Err(Error::invalid(format!("replicates must be at least 2, got {}", self.replicates)));
        }
        if self.noise.regime() == Regime::SubCauchy && (self.n as f64) * self.h < SUB_CAUCHY_MIN_NH {
            return Err(Error::invalid(format!(
                "sub-Cauchy experiments need n*h >= {SUB_CAUCHY_MIN_NH}, got {}",
                self.n as f64 * self.h
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Replicate statistics of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub regime: Regime,
    /// Natural log of the normalizing factor.
    #[serde(with = "crate::io::real")]
    pub log_normalization: f64,
    /// `E f_nh(x)` on the mantissa scale.
    #[serde(with = "crate::io::real")]
    pub scaled_expectation: f64,
    #[serde(with = "crate::io::real_vec")]
    pub statistics: Vec<f64>,
    #[serde(with = "crate::io::real")]
    pub mean: f64,
    #[serde(with = "crate::io::real")]
    pub empirical_variance: f64,
    #[serde(with = "crate::io::real")]
    pub sigma2_theoretical: f64,
    #[serde(with = "crate::io::real")]
    pub variance_ratio: f64,
    #[serde(with = "crate::io::real")]
    pub ks_statistic: f64,
    #[serde(with = "crate::io::real")]
    pub skewness: f64,
    #[serde(with = "crate::io::real")]
    pub excess_kurtosis: f64,
    #[serde(with = "crate::io::real")]
    pub wall_time: f64,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Writes the normalized statistics as a one-column CSV.
    pub fn write_statistics_csv(&self, path: &Path) -> Result<()> {
        io::write_column(path, "t", &self.statistics)
    }
}

/// Everything a replicate needs; shared read-only across threads.
#[derive(Debug, Clone)]
pub struct CltContext {
    estimator: Estimator,
    target: TargetDensity,
    x: f64,
    n: usize,
    /// `E f_nh(x)` on the mantissa scale.
    pub centering: f64,
    /// `exp(log normalization + (1/h)^λ/μ)`, applied to mantissas.
    pub factor: f64,
    pub log_normalization: f64,
}

impl CltContext {
    pub fn new(spec: &ExperimentSpec) -> Result<Self> {
        spec.validate()?;
        let cfg = EstimatorConfig::new(spec.h, spec.noise)?;
        let log_norm = log_normalization(spec.n, spec.h, &spec.noise)?;
        Ok(Self {
            estimator: Estimator::new(cfg),
            target: spec.target.clone(),
            x: spec.x,
            n: spec.n,
            centering: scaled_expected_estimate(spec.x, &spec.target, &cfg)?,
            factor: (log_norm + cfg.log_scale()).exp(),
            log_normalization: log_norm,
        })
    }

    /// Scaled estimate `e^{-(1/h)^λ/μ} f_nh(x)` for a fresh sample.
    pub fn mantissa<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let noise = self.estimator.config().noise;
        let data = sample_observations(&self.target, &noise, self.n, rng)?;
        Ok(self.estimator.estimate_at(&data, self.x)?.mantissa)
    }

    /// Normalized statistic `T` for a fresh sample.
    pub fn statistic<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(self.factor * (self.mantissa(rng)? - self.centering))
    }
}

/// Mean, sample variance, skewness and excess kurtosis.
pub fn moments(xs: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in xs {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let var = m2 / (n - 1.0);
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    (mean, var, m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

/// One-sample Kolmogorov–Smirnov distance.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Empty("sample"));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(d.clamp(0.0, 1.0))
}

/// Runs the replicates of `spec` in parallel; replicate `r` draws from the
/// stream keyed by `(master_seed, r)`.
pub fn run_clt_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let start = Instant::now();
    let ctx = CltContext::new(spec)?;
    let sigma = sigma2(&spec.noise, &spec.target, spec.x)?;
    let statistics: Vec<f64> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(spec.master_seed, r as u64, Purpose::Observations);
            ctx.statistic(&mut rng).map_err(|e| Error::Replicate { replicate: r, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    let (mean, var, skewness, excess_kurtosis) = moments(&statistics);
    let normal = Normal::new(0.0, sigma.value.sqrt()).map_err(|e| Error::numerical(e.to_string()))?;
    let ks = ks_statistic(&statistics, |t| normal.cdf(t))?;
    Ok(ExperimentReport {
        spec: spec.clone(),
        regime: sigma.regime,
        log_normalization: ctx.log_normalization,
        scaled_expectation: ctx.centering,
        statistics,
        mean,
        empirical_variance: var,
        sigma2_theoretical: sigma.value,
        variance_ratio: var / sigma.value,
        ks_statistic: ks,
        skewness,
        excess_kurtosis,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Centering checked against pilot replicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotCheck {
    pub exact: f64,
    pub pilot_mean: f64,
    pub pilot_standard_error: f64,
}

impl PilotCheck {
    /// Distance between the two centerings in pilot standard errors.
    pub fn z(&self) -> f64 {
        (self.exact - self.pilot_mean).abs() / self.pilot_standard_error
    }
}

/// Compares the exact scaled expectation with the mean mantissa of `pilots`
/// independent replicates.
pub fn pilot_centering(spec: &ExperimentSpec, pilots: usize) -> Result<PilotCheck> {
    if pilots < 2 {
        return Err(Error::invalid("at least two pilot replicates are needed"));
    }
    let ctx = CltContext::new(spec)?;
    let mantissas: Vec<f64> = (0..pilots)
        .into_par_iter()
        .map(|r| ctx.mantissa(&mut stream(spec.master_seed, r as u64, Purpose::Pilot)))
        .collect::<Result<_>>()?;
    let (mean, var, _, _) = moments(&mantissas);
    Ok(PilotCheck { exact: ctx.centering, pilot_mean: mean, pilot_standard_error: (var / pilots as f64).sqrt() })
}

/// `(x_obs - x)/h` reduced to `[0, 2π)`.
pub fn wrapped_phase(x_obs: f64, x: f64, h: f64) -> f64 {
    let y = ((x_obs - x) / h).rem_euclid(TAU);
    if y >= TAU {
        0.0
    } else {
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairIndResult {
    /// KS distance of the wrapped phases to the uniform law on `[0, 2π)`.
    #[serde(with = "crate::io::real")]
    pub ks_uniform: f64,
    /// Pearson statistic of the 8×8 contingency table of observation and
    /// phase octiles.
    #[serde(with = "crate::io::real")]
    pub chi2_independence: f64,
    /// 99% quantile of the chi-square law with 49 degrees of freedom.
    #[serde(with = "crate::io::real")]
    pub chi2_critical_99: f64,
}

const GRID: usize = 8;

fn octile_bins(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut bins = vec![0; values.len()];
    for (rank, &i) in order.iter().enumerate() {
        bins[i] = rank * GRID / values.len();
    }
    bins
}

/// Draws `n` observations and tests whether `(X - x)/h mod 2π` is uniform
/// and independent of `X`.
pub fn run_pairind_experiment(
    target: &TargetDensity,
    noise: &StableParams,
    x: f64,
    h: f64,
    n: usize,
    seed: u64,
) -> Result<PairIndResult> {
    if n < 1000 {
        return Err(Error::invalid(format!("pair experiment needs n >= 1000, got {n}")));
    }
    EstimatorConfig::new(h, *noise)?;
    let mut rng = stream(seed, 0, Purpose::PairInd);
    let obs = sample_observations(target, noise, n, &mut rng)?;
    let phases: Vec<f64> = obs.iter().map(|&xo| wrapped_phase(xo, x, h)).collect();
    let ks_uniform = ks_statistic(&phases, |y| y / TAU)?;

    let (bx, by) = (octile_bins(&obs), octile_bins(&phases));
    let mut table = [[0usize; GRID]; GRID];
    for (i, j) in bx.iter().zip(&by) {
        table[*i][*j] += 1;
    }
    let rows: Vec<usize> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<usize> = (0..GRID).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let mut chi2 = 0.0;
    for i in 0..GRID {
        for j in 0..GRID {
            let expected = rows[i] as f64 * cols[j] as f64 / n as f64;
            let d = table[i][j] as f64 - expected;
            chi2 += d * d / expected;
        }
    }
    let df = ((GRID - 1) * (GRID - 1)) as f64;
    let critical = ChiSquared::new(df).map_err(|e| Error::numerical(e.to_string()))?.inverse_cdf(0.99);
    Ok(PairIndResult { ks_uniform, chi2_independence: chi2, chi2_critical_99: critical })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarVResult {
    #[serde(with = "crate::io::real")]
    pub empirical_var_v: f64,
    #[serde(with = "crate::io::real")]
    pub limit: f64,
    #[serde(with = "crate::io::real")]
    pub ratio: f64,
}

/// Sample variance of `V` over `spec.n` observations against its limit.
pub fn run_var_v_experiment(spec: &ExperimentSpec) -> Result<VarVResult> {
    spec.validate()?;
    let mut rng = stream(spec.master_seed, 0, Purpose::VarV);
    let obs = sample_observations(&spec.target, &spec.noise, spec.n, &mut rng)?;
    let v: Vec<f64> = obs.iter().map(|&xo| v_stat(xo, spec.x, spec.h, &spec.noise)).collect();
    let (_, var, _, _) = moments(&v);
    let limit = var_v_limit(&spec.noise, &spec.target, spec.x, spec.h)?;
    Ok(VarVResult { empirical_var_v: var, limit, ratio: var / limit })
}
