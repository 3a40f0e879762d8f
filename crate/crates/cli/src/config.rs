//! Experiment configuration: built-in defaults, then an optional JSON file
//! with flat keys, then command-line flags.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sors_core::data::ZeroPolicy;
use sors_core::{Algorithm, LearnerConfig, SplitSpec};

use crate::UsageError;

pub const DEFAULT_KS: [usize; 5] = [1, 5, 10, 20, 50];

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub algorithms: Vec<Algorithm>,
    pub lambda: f64,
    pub eta: f64,
    pub delta: f64,
    pub c: f64,
    pub iters: u64,
    pub eval_every: u64,
    pub seed: u64,
    pub out: PathBuf,
    pub ks: Vec<usize>,
    pub train_fraction: f64,
    pub dim: Option<usize>,
    pub reject_zeros: bool,
}

/// Every key is optional; absent keys fall through to the defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub dataset: Option<PathBuf>,
    /// One algorithm name, or a comma-separated list for `bench`.
    pub algo: Option<String>,
    pub lambda: Option<f64>,
    pub eta: Option<f64>,
    pub delta: Option<f64>,
    pub c: Option<f64>,
    pub iters: Option<u64>,
    pub eval_every: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// Comma-separated cutoffs, e.g. "1,5,10".
    pub k: Option<String>,
    pub train_fraction: Option<f64>,
    pub dim: Option<usize>,
    pub reject_zeros: Option<bool>,
}

impl ConfigLayer {
    pub fn from_json_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| UsageError(format!("invalid config file {}: {e}", path.display())).into())
    }

    /// Values set in `over` replace those in `self`.
    pub fn overridden_by(self, over: ConfigLayer) -> ConfigLayer {
        ConfigLayer {
            dataset: over.dataset.or(self.dataset),
            algo: over.algo.or(self.algo),
            lambda: over.lambda.or(self.lambda),
            eta: over.eta.or(self.eta),
            delta: over.delta.or(self.delta),
            c: over.c.or(self.c),
            iters: over.iters.or(self.iters),
            eval_every: over.eval_every.or(self.eval_every),
            seed: over.seed.or(self.seed),
            out: over.out.or(self.out),
            k: over.k.or(self.k),
            train_fraction: over.train_fraction.or(self.train_fraction),
            dim: over.dim.or(self.dim),
            reject_zeros: over.reject_zeros.or(self.reject_zeros),
        }
    }

    /// Applies defaults and validates.
    pub fn resolve(self) -> Result<ExperimentConfig, UsageError> {
        let dataset = self
            .dataset
            .ok_or_else(|| UsageError("a dataset path is required (--dataset)".into()))?;
        let algorithms = parse_algorithms(self.algo.as_deref().unwrap_or("sors_1"))?;
        let iters = self.iters.unwrap_or(100_000);
        let config = ExperimentConfig {
            dataset,
            algorithms,
            lambda: self.lambda.unwrap_or(1e-6),
            eta: self.eta.unwrap_or(0.1),
            delta: self.delta.unwrap_or(1.0),
            c: self.c.unwrap_or(0.1),
            iters,
            eval_every: self.eval_every.unwrap_or((iters / 10).max(1)),
            seed: self.seed.unwrap_or(0),
            out: self.out.unwrap_or_else(|| PathBuf::from("out")),
            ks: match self.k {
                Some(k) => parse_ks(&k)?,
                None => DEFAULT_KS.to_vec(),
            },
            train_fraction: self.train_fraction.unwrap_or(0.7),
            dim: self.dim,
            reject_zeros: self.reject_zeros.unwrap_or(false),
        };
        config.validate()?;
        Ok(config)
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), UsageError> {
        if self.iters == 0 {
            return Err(UsageError("iterations must be positive".into()));
        }
        if self.eval_every == 0 || self.eval_every > self.iters {
            return Err(UsageError(format!(
                "eval-every must lie in [1, iters = {}], got {}",
                self.iters, self.eval_every
            )));
        }
        self.split_spec()?;
        for &algorithm in &self.algorithms {
            // Dimension is only known after loading; any positive value
            // exercises the hyperparameter checks.
            self.learner_config(algorithm, 1)
                .validate()
                .map_err(|e| UsageError(e.to_string()))?;
        }
        if self.dim == Some(0) {
            return Err(UsageError("dim must be positive".into()));
        }
        Ok(())
    }

    pub fn learner_config(&self, algorithm: Algorithm, dim: usize) -> LearnerConfig {
        LearnerConfig::new(algorithm, dim)
            .with_lambda(self.lambda)
            .with_eta(self.eta)
            .with_delta(self.delta)
            .with_aggressiveness(self.c)
    }

    pub fn split_spec(&self) -> Result<SplitSpec, UsageError> {
        SplitSpec::new(self.train_fraction, self.seed).map_err(|e| UsageError(e.to_string()))
    }

    pub fn zero_policy(&self) -> ZeroPolicy {
        if self.reject_zeros {
            ZeroPolicy::Reject
        } else {
            ZeroPolicy::Drop
        }
    }

    /// The single algorithm for `train`.
    pub fn algorithm(&self) -> Result<Algorithm, UsageError> {
        match self.algorithms[..] {
            [one] => Ok(one),
            _ => Err(UsageError("train takes exactly one algorithm".into())),
        }
    }
}

pub fn parse_algorithms(list: &str) -> Result<Vec<Algorithm>, UsageError> {
    let algorithms = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<Algorithm>()
                .map_err(|e| UsageError(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if algorithms.is_empty() {
        return Err(UsageError("no algorithm given".into()));
    }
    Ok(algorithms)
}

pub fn parse_ks(list: &str) -> Result<Vec<usize>, UsageError> {
    let ks = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .ok()
                .filter(|&k| k > 0)
                .ok_or_else(|| UsageError(format!("invalid cutoff '{s}' in --k")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if ks.is_empty() {
        return Err(UsageError("--k needs at least one cutoff".into()));
    }
    sors_core::eval::normalize_ks(&ks).map_err(|e| UsageError(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(dataset: &str) -> ConfigLayer {
        ConfigLayer {
            dataset: Some(dataset.into()),
            ..Default::default()
        }
    }

    #[test]
    fn defaults() {
        let cfg = layer("d.svm").resolve().unwrap();
        assert_eq!(cfg.algorithms, vec!["sors_1".parse().unwrap()]);
        assert_eq!(cfg.ks, DEFAULT_KS.to_vec());
        assert_eq!(cfg.iters, 100_000);
        assert_eq!(cfg.eval_every, 10_000);
        assert_eq!(cfg.train_fraction, 0.7);
    }

    #[test]
    fn flags_override_file() {
        let file: ConfigLayer =
            serde_json::from_str(r#"{"dataset": "a.svm", "eta": 0.5, "iters": 10, "k": "1,2"}"#)
                .unwrap();
        let flags = ConfigLayer {
            eta: Some(0.01),
            ..Default::default()
        };
        let cfg = file.overridden_by(flags).resolve().unwrap();
        assert_eq!(cfg.eta, 0.01);
        assert_eq!(cfg.iters, 10);
        assert_eq!(cfg.eval_every, 1);
        assert_eq!(cfg.ks, vec![1, 2]);
        assert_eq!(cfg.dataset, PathBuf::from("a.svm"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<ConfigLayer>(r#"{"etaa": 1}"#).is_err());
    }

    #[test]
    fn usage_errors() {
        let with = |f: fn(&mut ConfigLayer)| {
            let mut l = layer("d.svm");
            f(&mut l);
            l.resolve()
        };
        assert!(with(|l| l.iters = Some(0)).is_err());
        assert!(with(|l| {
            l.iters = Some(10);
            l.eval_every = Some(11)
        })
        .is_err());
        assert!(with(|l| l.eta = Some(-1.0)).is_err());
        assert!(with(|l| l.algo = Some("lmnn".into())).is_err());
        assert!(with(|l| l.k = Some("0,5".into())).is_err());
        assert!(with(|l| l.train_fraction = Some(1.0)).is_err());
        assert!(ConfigLayer::default().resolve().is_err());
    }

    #[test]
    fn algorithm_lists() {
        let algos = parse_algorithms("sors_1, oasis,euclidean").unwrap();
        assert_eq!(algos.len(), 3);
        assert!(parse_algorithms(" , ").is_err());
    }
}
