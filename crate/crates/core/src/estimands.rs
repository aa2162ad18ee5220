//! Epidemiologic estimands from sampled parameters: odds ratio, population
//! risk difference via incidence calibration, and the maximum-likelihood /
//! bootstrap comparator.
//!
//! Case-control data identify the odds ratio but not absolute risks. Given a
//! known population incidence, an intercept offset recovers risks: the offset
//! is solved so the model's marginal risk equals the incidence. The default
//! policy solves one offset at a reference point and applies it to every
//! draw (the classical model-offset approach); per-draw recalibration, which
//! pins every draw's marginal risk exactly, is available as an option.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::diagnostics::{percentile, summarize, PosteriorSummary};
use crate::error::Error;
use crate::sampler::Chain;
use crate::target::{expit, Dataset, ParamVector};
use crate::Result;

/// Offset search bracket and residual tolerance for [`calibrate_offset`].
const OFFSET_BRACKET: (f64, f64) = (-40.0, 10.0);
const CALIBRATION_TOL: f64 = 1e-12;
const MAX_BISECTIONS: usize = 200;

/// A 2x2 case-control table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoByTwo {
    pub cases_exposed: u64,
    pub cases_unexposed: u64,
    pub controls_exposed: u64,
    pub controls_unexposed: u64,
}

impl TwoByTwo {
    pub fn new(
        cases_exposed: u64,
        cases_unexposed: u64,
        controls_exposed: u64,
        controls_unexposed: u64,
    ) -> Result<Self> {
        let t = Self {
            cases_exposed,
            cases_unexposed,
            controls_exposed,
            controls_unexposed,
        };
        if t.cases() == 0 || t.controls() == 0 {
            return Err(Error::InvalidDataset(
                "both case and control margins must be positive".into(),
            ));
        }
        Ok(t)
    }

    pub fn from_dataset(data: &Dataset) -> Result<Self> {
        Self::new(
            data.cell_count(true, true),
            data.cell_count(true, false),
            data.cell_count(false, true),
            data.cell_count(false, false),
        )
    }

    /// Inverse of [`from_dataset`](Self::from_dataset); zero cells simply
    /// produce no row.
    pub fn to_dataset(&self) -> Dataset {
        Dataset::from_cells(
            [
                (true, true, self.cases_exposed),
                (true, false, self.cases_unexposed),
                (false, true, self.controls_exposed),
                (false, false, self.controls_unexposed),
            ]
            .into_iter()
            .filter(|&(_, _, n)| n > 0),
        )
        .expect("positive cells form a valid dataset")
    }

    pub fn cases(&self) -> u64 {
        self.cases_exposed + self.cases_unexposed
    }

    pub fn controls(&self) -> u64 {
        self.controls_exposed + self.controls_unexposed
    }

    /// Exposure prevalence among controls, the usual rare-disease surrogate
    /// for the population prevalence.
    pub fn control_exposure_prevalence(&self) -> f64 {
        self.controls_exposed as f64 / self.controls() as f64
    }
}

/// Closed-form logistic fit of a saturated binary-covariate model.
#[derive(Debug, Clone)]
pub struct MleFit {
    pub beta: ParamVector,
    pub se_beta1: f64,
}

impl MleFit {
    pub fn beta0(&self) -> f64 {
        self.beta[0]
    }

    pub fn beta1(&self) -> f64 {
        self.beta[1]
    }

    pub fn odds_ratio(&self) -> f64 {
        self.beta1().exp()
    }

    /// Wald 95% interval for the odds ratio.
    pub fn or_wald_ci(&self) -> (f64, f64) {
        (
            (self.beta1() - 1.96 * self.se_beta1).exp(),
            (self.beta1() + 1.96 * self.se_beta1).exp(),
        )
    }
}

/// Exact logistic MLE for a 2x2 table: `b1 = ln(ad/bc)`, `b0 = ln(b/d)`,
/// `se(b1) = sqrt(1/a + 1/b + 1/c + 1/d)`. Any zero cell means the MLE
/// diverges (quasi-complete separation).
pub fn mle_2x2(table: &TwoByTwo) -> Result<MleFit> {
    let cells = [
        (table.cases_exposed, "cases_exposed"),
        (table.cases_unexposed, "cases_unexposed"),
        (table.controls_exposed, "controls_exposed"),
        (table.controls_unexposed, "controls_unexposed"),
    ];
    for (count, name) in cells {
        if count == 0 {
            return Err(Error::Separation { cell: name });
        }
    }
    let (a, b, c, d) = (
        table.cases_exposed as f64,
        table.cases_unexposed as f64,
        table.controls_exposed as f64,
        table.controls_unexposed as f64,
    );
    let beta1 = (a * d / (b * c)).ln();
    let beta0 = (b / d).ln();
    let se_beta1 = (1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d).sqrt();
    Ok(MleFit {
        beta: ParamVector::new(vec![beta0, beta1])?,
        se_beta1,
    })
}

/// Population inputs for risk-difference calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidenceCalibration {
    /// Population risk I.
    pub incidence: f64,
    /// Population exposure prevalence P(X=1).
    pub exposure_prevalence: f64,
}

impl IncidenceCalibration {
    pub fn new(incidence: f64, exposure_prevalence: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&incidence) || incidence <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "incidence must lie strictly between 0 and 1, got {incidence}"
            )));
        }
        if !(0.0..=1.0).contains(&exposure_prevalence) {
            return Err(Error::InvalidParameter(format!(
                "exposure prevalence must lie in [0, 1], got {exposure_prevalence}"
            )));
        }
        Ok(Self {
            incidence,
            exposure_prevalence,
        })
    }
}

/// Marginal risk of the offset model at `beta` and offset `delta`:
/// `(1-p1)·expit(b0+δ) + p1·expit(b0+δ+b1)`.
fn marginal_risk(beta: &ParamVector, cal: &IncidenceCalibration, delta: f64) -> f64 {
    let p1 = cal.exposure_prevalence;
    (1.0 - p1) * expit(beta[0] + delta) + p1 * expit(beta[0] + delta + beta[1])
}

/// Solves the intercept offset δ making the marginal risk equal the
/// population incidence, by bisection on [-40, 10] to |residual| < 1e-12.
/// The marginal risk is strictly increasing in δ, so the root is unique.
pub fn calibrate_offset(beta: &ParamVector, cal: &IncidenceCalibration) -> Result<f64> {
    let (mut lo, mut hi) = OFFSET_BRACKET;
    let range_err = || Error::CalibrationRange {
        incidence: cal.incidence,
        lo: OFFSET_BRACKET.0,
        hi: OFFSET_BRACKET.1,
    };
    if marginal_risk(beta, cal, lo) - cal.incidence > 0.0
        || marginal_risk(beta, cal, hi) - cal.incidence < 0.0
    {
        return Err(range_err());
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let residual = marginal_risk(beta, cal, mid) - cal.incidence;
        if residual.abs() < CALIBRATION_TOL {
            return Ok(mid);
        }
        if residual > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(range_err())
}

/// Risk difference implied by `beta` under intercept offset `delta`, on the
/// natural (risk) scale.
pub fn risk_difference(beta: &ParamVector, delta: f64) -> f64 {
    expit(beta[0] + delta + beta[1]) - expit(beta[0] + delta)
}

/// How the offset is chosen when mapping a chain to risk differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OffsetPolicy {
    /// One offset, solved in advance (typically at the MLE), applied to every
    /// draw. Propagates intercept uncertainty into the risk difference.
    Fixed(f64),
    /// Re-solve the offset for every draw, pinning each draw's marginal risk
    /// at the incidence exactly.
    PerDraw(IncidenceCalibration),
}

/// Risk difference for every draw, in draw order. Per-draw calibration runs
/// in parallel; a calibration failure reports the lowest offending draw index.
pub fn rd_series(draws: &[ParamVector], policy: &OffsetPolicy) -> Result<Vec<f64>> {
    match *policy {
        OffsetPolicy::Fixed(delta) => Ok(draws.iter().map(|b| risk_difference(b, delta)).collect()),
        OffsetPolicy::PerDraw(cal) => {
            let results: Vec<Result<f64>> = draws
                .par_iter()
                .map(|b| calibrate_offset(b, &cal).map(|delta| risk_difference(b, delta)))
                .collect();
            let mut out = Vec::with_capacity(results.len());
            for (j, r) in results.into_iter().enumerate() {
                out.push(r.map_err(|e| e.at_draw(j))?);
            }
            Ok(out)
        }
    }
}

/// Posterior summary of the risk difference over the retained draws; the
/// median is the point estimate.
pub fn rd_posterior(chain: &Chain, policy: &OffsetPolicy) -> Result<PosteriorSummary> {
    if chain.is_empty() {
        return Err(Error::EmptyChain);
    }
    let series = rd_series(&chain.draws, policy)?;
    summarize(&series)
}

/// Posterior summary of `exp(b1)` over the retained draws; the median is the
/// point estimate (equal to exp of the median log-odds ratio by
/// monotonicity).
pub fn odds_ratio_summary(chain: &Chain) -> Result<PosteriorSummary> {
    if chain.is_empty() {
        return Err(Error::EmptyChain);
    }
    if chain.dim() < 2 {
        return Err(Error::InvalidParameter(
            "odds ratio needs a chain with at least two components".into(),
        ));
    }
    let series: Vec<f64> = chain.draws.iter().map(|d| d[1].exp()).collect();
    summarize(&series)
}

/// Result of a stratified case-control bootstrap of the 2x2 MLE.
#[derive(Debug, Clone)]
pub struct BootstrapReport {
    pub resamples: usize,
    /// Resamples whose table had a zero cell, making the MLE diverge. These
    /// are counted, never silently dropped.
    pub separated: usize,
    /// Per-resample `(b0, b1)`, `None` where the refit separated.
    pub estimates: Vec<Option<(f64, f64)>>,
    /// Percentile 95% interval for b1 over the successful resamples.
    pub beta1_ci: Option<(f64, f64)>,
    /// True when any resample separated; the percentile interval then misses
    /// part of the sampling distribution and must not be trusted.
    pub ci_unreliable: bool,
}

impl BootstrapReport {
    pub fn separated_fraction(&self) -> f64 {
        self.separated as f64 / self.resamples as f64
    }

    /// Percentile interval for the odds ratio over successful resamples.
    pub fn or_ci(&self) -> Option<(f64, f64)> {
        self.beta1_ci.map(|(lo, hi)| (lo.exp(), hi.exp()))
    }
}

/// Stratified bootstrap: resamples cases with replacement from the case
/// stratum and controls from the control stratum, refitting the closed-form
/// MLE each time.
pub fn bootstrap_mle(table: &TwoByTwo, resamples: usize, seed: u64) -> Result<BootstrapReport> {
    if resamples == 0 {
        return Err(Error::InvalidParameter("need at least one resample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases = table.cases();
    let controls = table.controls();
    let mut estimates = Vec::with_capacity(resamples);
    let mut separated = 0usize;
    for _ in 0..resamples {
        let mut cases_exposed = 0u64;
        for _ in 0..cases {
            if rng.random_range(0..cases) < table.cases_exposed {
                cases_exposed += 1;
            }
        }
        let mut controls_exposed = 0u64;
        for _ in 0..controls {
            if rng.random_range(0..controls) < table.controls_exposed {
                controls_exposed += 1;
            }
        }
        let resample = TwoByTwo {
            cases_exposed,
            cases_unexposed: cases - cases_exposed,
            controls_exposed,
            controls_unexposed: controls - controls_exposed,
        };
        match mle_2x2(&resample) {
            Ok(fit) => estimates.push(Some((fit.beta0(), fit.beta1()))),
            Err(Error::Separation { .. }) => {
                separated += 1;
                estimates.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    let mut beta1s: Vec<f64> = estimates.iter().flatten().map(|&(_, b1)| b1).collect();
    beta1s.sort_by(|a, b| a.partial_cmp(b).expect("finite estimates"));
    let beta1_ci = if beta1s.len() >= 2 {
        Some((percentile(&beta1s, 0.025), percentile(&beta1s, 0.975)))
    } else {
        None
    };
    Ok(BootstrapReport {
        resamples,
        separated,
        estimates,
        beta1_ci,
        ci_unreliable: separated > 0,
    })
}
