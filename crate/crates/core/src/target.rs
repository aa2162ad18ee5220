//! Log-posterior evaluation for the binary-exposure logistic model.
//!
//! The study model is `P(Y=1 | X) = expit(b0 + b1*X)` with binary outcome Y
//! and binary exposure X. Observations are stored as weighted cells, so one
//! posterior evaluation costs O(number of distinct cells), four for a 2x2
//! table, regardless of how many records the data came from.

use crate::error::Error;
use crate::Result;

/// Numerically stable logistic function `exp(x) / (1 + exp(x))`.
///
/// Branches on the sign of `x` so neither branch exponentiates a positive
/// argument; no overflow for any finite input.
pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(expit(x))`, computed as `-ln(1 + exp(-x))` without overflow.
pub fn log_expit(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// A point in parameter space; the state sampled by a chain.
///
/// For the study model this is `(b0, b1)`: intercept and log-odds ratio.
/// All entries are finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter(
                "parameter vector must have at least one component".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "parameter vector has a non-finite entry: {values:?}"
            )));
        }
        Ok(Self(values))
    }

    /// Constructor for values that are finite by construction (kernel internals).
    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl std::ops::Index<usize> for ParamVector {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// One aggregated observation cell: `count` subjects sharing an outcome and
/// an exposure level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    pub outcome: bool,
    pub exposed: bool,
    pub count: u64,
}

/// Binary-outcome / binary-exposure data, aggregated into weighted cells.
///
/// Record-level input is collapsed on construction; aggregated and expanded
/// representations give identical log-likelihoods. A Dataset may be empty
/// (log-likelihood 0); the CLI rejects empty data files on ingestion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    cells: Vec<Observation>,
}

impl Dataset {
    /// Builds a dataset from `(outcome, exposed, count)` cells, merging
    /// duplicate cells. Zero counts are rejected.
    pub fn from_cells<I>(cells: I) -> Result<Self>
    where
        I: IntoIterator<Item = (bool, bool, u64)>,
    {
        // Fixed cell order (y,x) = (1,1), (1,0), (0,1), (0,0).
        let mut counts = [0u64; 4];
        for (outcome, exposed, count) in cells {
            if count == 0 {
                return Err(Error::InvalidDataset(
                    "cell count must be at least 1".into(),
                ));
            }
            counts[Self::slot(outcome, exposed)] += count;
        }
        let cells = (0..4)
            .filter(|&s| counts[s] > 0)
            .map(|s| {
                let (outcome, exposed) = Self::unslot(s);
                Observation {
                    outcome,
                    exposed,
                    count: counts[s],
                }
            })
            .collect();
        Ok(Self { cells })
    }

    /// Builds a dataset from record-level `(outcome, exposed)` pairs.
    pub fn from_records<I>(records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (bool, bool)>,
    {
        Self::from_cells(records.into_iter().map(|(y, x)| (y, x, 1)))
    }

    fn slot(outcome: bool, exposed: bool) -> usize {
        match (outcome, exposed) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        }
    }

    fn unslot(slot: usize) -> (bool, bool) {
        match slot {
            0 => (true, true),
            1 => (true, false),
            2 => (false, true),
            _ => (false, false),
        }
    }

    pub fn cells(&self) -> &[Observation] {
        &self.cells
    }

    pub fn total_count(&self) -> u64 {
        self.cells.iter().map(|c| c.count).sum()
    }

    pub fn case_count(&self) -> u64 {
        self.cells
            .iter()
            .filter(|c| c.outcome)
            .map(|c| c.count)
            .sum()
    }

    pub fn control_count(&self) -> u64 {
        self.cells
            .iter()
            .filter(|c| !c.outcome)
            .map(|c| c.count)
            .sum()
    }

    /// Count for a single `(outcome, exposed)` cell.
    pub fn cell_count(&self, outcome: bool, exposed: bool) -> u64 {
        self.cells
            .iter()
            .filter(|c| c.outcome == outcome && c.exposed == exposed)
            .map(|c| c.count)
            .sum()
    }
}

/// Log-likelihood of `beta = (b0, b1)` under the logistic model, summed over
/// weighted cells entirely in log space.
pub fn log_likelihood(beta: &ParamVector, data: &Dataset) -> f64 {
    assert_eq!(beta.dim(), 2, "the study model has two parameters");
    let (b0, b1) = (beta[0], beta[1]);
    data.cells()
        .iter()
        .map(|cell| {
            let eta = b0 + if cell.exposed { b1 } else { 0.0 };
            let term = if cell.outcome {
                log_expit(eta)
            } else {
                log_expit(-eta)
            };
            cell.count as f64 * term
        })
        .sum()
}

/// Prior for one parameter component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorComponent {
    /// Improper uniform over the whole real line; contributes 0 to the
    /// log-posterior (only density ratios enter the acceptance probability).
    Flat,
    Normal {
        mean: f64,
        variance: f64,
    },
}

impl PriorComponent {
    pub fn normal(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !variance.is_finite() || variance <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "normal prior needs finite mean and positive variance, got ({mean}, {variance})"
            )));
        }
        Ok(Self::Normal { mean, variance })
    }

    /// Log density up to an additive constant.
    fn log_density(&self, value: f64) -> f64 {
        match *self {
            PriorComponent::Flat => 0.0,
            PriorComponent::Normal { mean, variance } => {
                let d = value - mean;
                -d * d / (2.0 * variance)
            }
        }
    }
}

/// Per-component prior specification.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    components: Vec<PriorComponent>,
}

impl Prior {
    pub fn new(components: Vec<PriorComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter(
                "prior must cover at least one component".into(),
            ));
        }
        Ok(Self { components })
    }

    /// All-flat prior of the given dimension.
    pub fn flat(dim: usize) -> Self {
        Self {
            components: vec![PriorComponent::Flat; dim.max(1)],
        }
    }

    pub fn components(&self) -> &[PriorComponent] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }
}

/// Log prior density up to an additive constant; flat components contribute 0.
pub fn log_prior(beta: &ParamVector, prior: &Prior) -> f64 {
    assert_eq!(beta.dim(), prior.dim(), "prior dimension mismatch");
    beta.values()
        .iter()
        .zip(prior.components())
        .map(|(&v, c)| c.log_density(v))
        .sum()
}

/// Log posterior up to an additive constant: log-likelihood + log-prior.
pub fn log_posterior(beta: &ParamVector, data: &Dataset, prior: &Prior) -> f64 {
    log_likelihood(beta, data) + log_prior(beta, prior)
}

/// Anything the sampler can draw from: a deterministic log density known up
/// to an additive constant. Evaluation must be pure (the same `beta` always
/// yields the same value) and callable from concurrent chains.
pub trait TargetDensity: Sync {
    fn log_density(&self, beta: &ParamVector) -> f64;
}

/// The study posterior: logistic likelihood over a dataset times a prior.
#[derive(Debug, Clone)]
pub struct LogisticPosterior {
    data: Dataset,
    prior: Prior,
}

impl LogisticPosterior {
    pub fn new(data: Dataset, prior: Prior) -> Result<Self> {
        if prior.dim() != 2 {
            return Err(Error::InvalidParameter(format!(
                "the logistic study model has 2 parameters, prior covers {}",
                prior.dim()
            )));
        }
        Ok(Self { data, prior })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn prior(&self) -> &Prior {
        &self.prior
    }
}

impl TargetDensity for LogisticPosterior {
    fn log_density(&self, beta: &ParamVector) -> f64 {
        log_posterior(beta, &self.data, &self.prior)
    }
}
