//! Online learners over triplet streams.
//!
//! Every learner starts from the identity model and consumes one triplet per
//! step. The sparse learners take a subgradient step followed by a proximal
//! step on every round, including rounds with zero loss, so the penalty keeps
//! shrinking entries that stop receiving gradient.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::model::{SimilarityModel, Triplet};
use crate::prox::{scaled_gradient_step, shrink, shrink_adaptive, Accumulator, Regularizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Algorithm {
    /// Proximal online gradient descent with a sparsity penalty.
    Sors(Regularizer),
    /// Proximal steps scaled per coordinate by accumulated gradient magnitude.
    AdaSors(Regularizer),
    /// Passive-aggressive updates with aggressiveness `C`.
    Oasis,
    /// Plain online gradient descent.
    Ogd,
    /// The identity model, never updated.
    Euclidean,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Sors(Regularizer::L1),
        Algorithm::Sors(Regularizer::OffDiagonalL1),
        Algorithm::AdaSors(Regularizer::L1),
        Algorithm::AdaSors(Regularizer::OffDiagonalL1),
        Algorithm::Oasis,
        Algorithm::Ogd,
        Algorithm::Euclidean,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sors(Regularizer::L1) => "sors_1",
            Algorithm::Sors(Regularizer::OffDiagonalL1) => "sors_2",
            Algorithm::AdaSors(Regularizer::L1) => "adasors_1",
            Algorithm::AdaSors(Regularizer::OffDiagonalL1) => "adasors_2",
            Algorithm::Oasis => "oasis",
            Algorithm::Ogd => "ogd",
            Algorithm::Euclidean => "euclidean",
        }
    }

    /// The penalty this algorithm optimizes, if any.
    pub fn regularizer(self) -> Option<Regularizer> {
        match self {
            Algorithm::Sors(r) | Algorithm::AdaSors(r) => Some(r),
            _ => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Algorithm::ALL.iter().map(|a| a.name()).collect();
                Error::argument(format!(
                    "unknown algorithm '{s}' (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

impl From<Algorithm> for String {
    fn from(a: Algorithm) -> String {
        a.name().to_string()
    }
}

impl TryFrom<String> for Algorithm {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Hyperparameters shared by all learners. Each algorithm reads only the
/// fields it needs: `lambda` for the sparse learners, `delta` for AdaSORS
/// and `aggressiveness` for OASIS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    pub lambda: f64,
    pub eta: f64,
    pub delta: f64,
    pub aggressiveness: f64,
    pub dim: usize,
}

impl LearnerConfig {
    pub fn new(algorithm: Algorithm, dim: usize) -> Self {
        Self {
            algorithm,
            lambda: 1e-6,
            eta: 0.1,
            delta: 1.0,
            aggressiveness: 0.1,
            dim,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_aggressiveness(mut self, c: f64) -> Self {
        self.aggressiveness = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::argument("dimension must be positive"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::argument(format!(
                "lambda must be finite and nonnegative, got {}",
                self.lambda
            )));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::argument(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::argument(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if !(self.aggressiveness > 0.0 && self.aggressiveness.is_finite()) {
            return Err(Error::argument(format!(
                "aggressiveness C must be positive, got {}",
                self.aggressiveness
            )));
        }
        Ok(())
    }

    /// λ as it enters the objective: zero for algorithms without a penalty.
    pub fn effective_lambda(&self) -> f64 {
        if self.algorithm.regularizer().is_some() {
            self.lambda
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub model: SimilarityModel,
    /// Present only for AdaSORS.
    pub accumulator: Option<Accumulator>,
    pub step_count: u64,
    /// `Σ_t ℓ_t(M_t)`, each loss measured before that round's update.
    pub cumulative_loss: f64,
    /// `Σ_t ℓ_t(M_t) + λ r(M_t)`.
    pub cumulative_objective: f64,
}

/// What happened on one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// Hinge loss of the model before the update.
    pub loss: f64,
    /// `loss + λ r(M_t)` for the pre-update model.
    pub objective: f64,
    /// Stored entries after the update.
    pub nnz: usize,
}

#[derive(Debug, Clone)]
pub struct Learner {
    config: LearnerConfig,
    state: LearnerState,
    #[cfg(test)]
    freeze_accumulator: bool,
}

impl Learner {
    /// Initializes `M₁ = I`, with an empty accumulator for AdaSORS.
    pub fn new(config: LearnerConfig) -> Result<Self> {
        config.validate()?;
        let accumulator = match config.algorithm {
            Algorithm::AdaSors(_) => Some(Accumulator::new(config.dim, config.delta)?),
            _ => None,
        };
        let state = LearnerState {
            model: SimilarityModel::identity(config.dim),
            accumulator,
            step_count: 0,
            cumulative_loss: 0.0,
            cumulative_objective: 0.0,
        };
        Ok(Self {
            config,
            state,
            #[cfg(test)]
            freeze_accumulator: false,
        })
    }

    /// Resumes from an existing state, e.g. a model loaded from disk.
    pub fn from_state(config: LearnerConfig, state: LearnerState) -> Result<Self> {
        config.validate()?;
        check_dim(config.dim, state.model.dim())?;
        let wants_accumulator = matches!(config.algorithm, Algorithm::AdaSors(_));
        if wants_accumulator != state.accumulator.is_some() {
            return Err(Error::argument(format!(
                "state accumulator does not match algorithm {}",
                config.algorithm
            )));
        }
        Ok(Self {
            config,
            state,
            #[cfg(test)]
            freeze_accumulator: false,
        })
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn state(&self) -> &LearnerState {
        &self.state
    }

    pub fn model(&self) -> &SimilarityModel {
        &self.state.model
    }

    pub fn into_state(self) -> LearnerState {
        self.state
    }

    /// Consumes one triplet.
    pub fn step(&mut self, t: &Triplet) -> Result<StepRecord> {
        check_dim(self.config.dim, t.dim())?;
        let config = &self.config;
        let state = &mut self.state;

        let (loss, gradient) = state.model.loss_and_subgradient(t)?;
        let lambda = config.effective_lambda();
        let penalty = match config.algorithm.regularizer() {
            Some(r) if lambda > 0.0 => lambda * r.value(&state.model),
            _ => 0.0,
        };

        match config.algorithm {
            Algorithm::Euclidean => {}
            Algorithm::Ogd => {
                state
                    .model
                    .add_outer(-config.eta, &gradient.left, &gradient.right);
            }
            Algorithm::Oasis => {
                // ‖x (x⁺ − x⁻)ᵀ‖²_F factors into ‖x‖² ‖x⁺ − x⁻‖².
                let denom = gradient.left.squared_norm() * gradient.right.squared_norm();
                if loss > 0.0 && denom > 0.0 {
                    let tau = config.aggressiveness.min(loss / denom);
                    state.model.add_outer(-tau, &gradient.left, &gradient.right);
                }
            }
            Algorithm::Sors(r) => {
                state
                    .model
                    .add_outer(-config.eta, &gradient.left, &gradient.right);
                shrink(&mut state.model, config.eta * config.lambda, r);
            }
            Algorithm::AdaSors(r) => {
                let accumulator = state
                    .accumulator
                    .as_mut()
                    .expect("AdaSORS state always carries an accumulator");
                #[cfg(test)]
                let frozen = self.freeze_accumulator;
                #[cfg(not(test))]
                let frozen = false;
                if !frozen {
                    accumulator.accumulate_in_place(&gradient);
                }
                scaled_gradient_step(&mut state.model, config.eta, &gradient, accumulator);
                shrink_adaptive(&mut state.model, config.lambda * config.eta, accumulator, r);
            }
        }

        state.step_count += 1;
        state.cumulative_loss += loss;
        state.cumulative_objective += loss + penalty;
        Ok(StepRecord {
            loss,
            objective: loss + penalty,
            nnz: state.model.nnz(),
        })
    }
}

/// Folds [`Learner::step`] over `stream`, returning the final state and one
/// record per step.
pub fn run<'a>(
    config: LearnerConfig,
    stream: impl IntoIterator<Item = &'a Triplet>,
) -> Result<(LearnerState, Vec<StepRecord>)> {
    let mut learner = Learner::new(config)?;
    let mut trace = Vec::new();
    for t in stream {
        trace.push(learner.step(t)?);
    }
    Ok((learner.into_state(), trace))
}
