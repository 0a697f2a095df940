//! Nonparametric (whole-record) bootstrap with percentile intervals.
//!
//! Replicate `r` draws its resample indices from a stream keyed by
//! `(seed, r)`, and the reduction runs over replicates in index order, so
//! serial and parallel execution give bit-identical summaries.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::discrete::{self, DiscreteOptions};
use crate::error::{Error, Result};
use crate::json;
use crate::model::{stable_sum, Dataset, EffectEstimates, EstimandValues, FeatureSpec};
use crate::parametric::{self, FitOptions};
use crate::rng;

/// Largest tolerated share of failed replicates.
pub const MAX_FAILURE_RATE: f64 = 0.10;

/// Which estimator each replicate re-runs.
#[derive(Debug, Clone, PartialEq)]
pub enum Estimator {
    Parametric { spec: FeatureSpec, options: FitOptions },
    Discrete(DiscreteOptions),
}

impl Estimator {
    pub fn parametric(spec: FeatureSpec) -> Self {
        Estimator::Parametric {
            spec,
            options: FitOptions::default(),
        }
    }

    pub fn estimate(&self, dataset: &Dataset) -> Result<EffectEstimates> {
        match self {
            Estimator::Parametric { spec, options } => {
                parametric::estimate_effects_with(dataset, spec, options).map(|e| e.effects)
            }
            Estimator::Discrete(options) => discrete::identify_effects_with(dataset, options),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapConfig {
    pub b: usize,
    pub alpha: f64,
    pub seed: u64,
    pub parallel: bool,
}

impl BootstrapConfig {
    pub fn new(b: usize, alpha: f64, seed: u64) -> Self {
        BootstrapConfig {
            b,
            alpha,
            seed,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub cause: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapSummary {
    pub point: EffectEstimates,
    pub b: usize,
    #[serde(serialize_with = "json::f64_17")]
    pub alpha: f64,
    pub se: EstimandValues,
    pub ci_lower: EstimandValues,
    pub ci_upper: EstimandValues,
    pub seed: u64,
    pub failures: usize,
    pub failure_causes: Vec<ReplicateFailure>,
    /// Successful replicate estimates in replicate order.
    #[serde(skip)]
    pub replicates: Vec<EffectEstimates>,
}

/// Bootstraps the parametric pipeline with default fit options.
pub fn bootstrap_effects(dataset: &Dataset, spec: &FeatureSpec, b: usize, alpha: f64, seed: u64) -> Result<BootstrapSummary> {
    bootstrap_with(
        dataset,
        &Estimator::parametric(spec.clone()),
        &BootstrapConfig::new(b, alpha, seed),
    )
}

fn resample(dataset: &Dataset, seed: u64, replicate: usize) -> Dataset {
    let n = dataset.len();
    let mut rng = rng::stream(seed, rng::BOOTSTRAP, replicate as u64);
    let recs = dataset.records();
    let picked = (0..n).map(|_| recs[rng.random_range(0..n)].clone()).collect();
    Dataset::new(dataset.k(), dataset.p(), picked)
}

pub fn bootstrap_with(dataset: &Dataset, estimator: &Estimator, config: &BootstrapConfig) -> Result<BootstrapSummary> {
    if config.b < 2 {
        return Err(Error::InvalidArgument(format!("bootstrap needs b >= 2, got {}", config.b)));
    }
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {}",
            config.alpha
        )));
    }
    let point = estimator.estimate(dataset)?;

    let run = |r: usize| estimator.estimate(&resample(dataset, config.seed, r));
    let outcomes: Vec<Result<EffectEstimates>> = if config.parallel {
        (0..config.b).into_par_iter().map(run).collect()
    } else {
        (0..config.b).map(run).collect()
    };

    let mut replicates = Vec::with_capacity(config.b);
    let mut failure_causes = Vec::new();
    for (replicate, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(e) => replicates.push(e),
            Err(e) => failure_causes.push(ReplicateFailure {
                replicate,
                cause: e.to_string(),
            }),
        }
    }
    let failures = failure_causes.len();
    if failures as f64 > MAX_FAILURE_RATE * config.b as f64 || replicates.len() < 2 {
        return Err(Error::TooManyFailures {
            failures,
            b: config.b,
            first_cause: failure_causes
                .first()
                .map(|f| f.cause.clone())
                .unwrap_or_default(),
        });
    }

    let mut se = [0.0; 5];
    let mut lower = [0.0; 5];
    let mut upper = [0.0; 5];
    for j in 0..5 {
        let column: Vec<f64> = replicates.iter().map(|e| e.values().to_array()[j]).collect();
        se[j] = sample_sd(&column);
        let (lo, hi) = percentile_interval(&column, config.alpha);
        lower[j] = lo;
        upper[j] = hi;
    }

    Ok(BootstrapSummary {
        point,
        b: config.b,
        alpha: config.alpha,
        se: EstimandValues::from_array(se),
        ci_lower: EstimandValues::from_array(lower),
        ci_upper: EstimandValues::from_array(upper),
        seed: config.seed,
        failures,
        failure_causes,
        replicates,
    })
}

pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = stable_sum(values.iter().copied()) / n;
    let ss = stable_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    (ss / (n - 1.0)).sqrt()
}

/// Quantile with linear interpolation between order statistics
/// (`h = (n − 1)·q`).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Empirical `(alpha/2, 1 − alpha/2)` quantiles.
pub fn percentile_interval(values: &[f64], alpha: f64) -> (f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = quantile(&sorted, alpha / 2.0);
    let hi = quantile(&sorted, 1.0 - alpha / 2.0);
    (lo.min(hi), hi.max(lo))
}
