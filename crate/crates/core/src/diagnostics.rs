//! Chain diagnostics: autocorrelation, effective sample size, Monte Carlo
//! standard error, and posterior summaries.
//!
//! ESS follows `M / (1 + 2 Σ ρ_ℓ)` with the lag sum truncated by Geyer's
//! initial-positive-sequence rule: consecutive autocorrelations are summed in
//! pairs (ρ_{2k−1} + ρ_{2k}) while the pair sum stays positive. Percentiles
//! use linear interpolation of order statistics (type 7), stated exactly so
//! golden values stay stable.

use crate::error::Error;
use crate::sampler::Chain;
use crate::target::ParamVector;
use crate::Result;

/// Minimum series length for ESS estimation.
const ESS_MIN_LEN: usize = 10;

/// Posterior summary of one scalar quantity.
///
/// `mode` is only available for chain components (the draw with the highest
/// log-posterior); plain series summaries leave it `None`. `ess`/`mcse` are
/// `None` for series that are too short or have zero variance; moments are
/// still reported for those.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub mean: f64,
    pub median: f64,
    pub mode: Option<f64>,
    pub sd: f64,
    pub pct2_5: f64,
    pub pct97_5: f64,
    pub ess: Option<f64>,
    pub mcse: Option<f64>,
}

fn mean(series: &[f64]) -> f64 {
    series.iter().sum::<f64>() / series.len() as f64
}

fn sample_variance(series: &[f64], center: f64) -> f64 {
    let n = series.len() as f64;
    series
        .iter()
        .map(|v| (v - center) * (v - center))
        .sum::<f64>()
        / (n - 1.0)
}

/// Centered copy plus the lag-0 sum of squares, shared by the ACF estimators.
fn centered(series: &[f64]) -> (Vec<f64>, f64) {
    let m = mean(series);
    let c: Vec<f64> = series.iter().map(|v| v - m).collect();
    let denom = c.iter().map(|v| v * v).sum::<f64>();
    (c, denom)
}

fn acf_from_centered(c: &[f64], denom: f64, lag: usize) -> f64 {
    let n = c.len();
    let num: f64 = (0..n - lag).map(|i| c[i] * c[i + lag]).sum();
    num / denom
}

/// Lag-ℓ autocorrelation with the biased (lag-0 denominator) normalization;
/// ρ̂_0 = 1 by definition.
pub fn autocorrelation(series: &[f64], lag: usize) -> Result<f64> {
    if lag >= series.len() {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            min: lag + 1,
        });
    }
    if lag == 0 {
        return Ok(1.0);
    }
    let (c, denom) = centered(series);
    if denom == 0.0 {
        return Err(Error::DegenerateSeries);
    }
    Ok(acf_from_centered(&c, denom, lag))
}

/// Effective sample size `M / (1 + 2 Σ_{ℓ=1}^{L} ρ̂_ℓ)` with Geyer
/// initial-positive-pair truncation; clamped to (0, M].
pub fn effective_sample_size(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < ESS_MIN_LEN {
        return Err(Error::SeriesTooShort {
            len: n,
            min: ESS_MIN_LEN,
        });
    }
    let (c, denom) = centered(series);
    if denom == 0.0 {
        return Err(Error::DegenerateSeries);
    }
    let mut rho_sum = 0.0;
    let mut k = 1usize;
    loop {
        let l1 = 2 * k - 1;
        if l1 > n - 1 {
            break;
        }
        let r1 = acf_from_centered(&c, denom, l1);
        let l2 = 2 * k;
        let r2 = if l2 < n {
            acf_from_centered(&c, denom, l2)
        } else {
            0.0
        };
        if r1 + r2 <= 0.0 {
            break;
        }
        rho_sum += r1 + r2;
        k += 1;
    }
    Ok((n as f64 / (1.0 + 2.0 * rho_sum)).min(n as f64))
}

/// Monte Carlo standard error of the series mean: sample SD / sqrt(ESS).
pub fn mc_standard_error(series: &[f64]) -> Result<f64> {
    let ess = effective_sample_size(series)?;
    let sd = sample_variance(series, mean(series)).sqrt();
    Ok(sd / ess.sqrt())
}

/// Percentile by linear interpolation of order statistics (type 7):
/// at rank `(n-1)·p` between neighbouring sorted values. `p` is a fraction
/// in [0, 1]; `sorted` must be ascending and non-empty.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty() && (0.0..=1.0).contains(&p));
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// Moments, percentile interval, and simulation precision of one series.
///
/// Median of an even-length series is the midpoint of the two central order
/// statistics. `ess`/`mcse` are `None` (not an error) when the series is
/// shorter than 10 values or has zero variance.
pub fn summarize(series: &[f64]) -> Result<PosteriorSummary> {
    if series.len() < 2 {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            min: 2,
        });
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("series values must be comparable"));
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let m = mean(series);
    let sd = sample_variance(series, m).sqrt();
    let ess = effective_sample_size(series).ok();
    let mcse = ess.map(|e| sd / e.sqrt());
    Ok(PosteriorSummary {
        mean: m,
        median,
        mode: None,
        sd,
        pct2_5: percentile(&sorted, 0.025),
        pct97_5: percentile(&sorted, 0.975),
        ess,
        mcse,
    })
}

/// Index of the retained draw with the highest log-posterior; ties break to
/// the lowest index.
pub fn map_index(log_posts: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (j, &lp) in log_posts.iter().enumerate() {
        if best.is_none_or(|b| lp > log_posts[b]) {
            best = Some(j);
        }
    }
    best
}

/// Maximum a posteriori estimate: the sampled draw with the highest evaluated
/// log-posterior.
pub fn map_estimate(chain: &Chain) -> Result<ParamVector> {
    let idx = map_index(&chain.log_posts).ok_or(Error::EmptyChain)?;
    Ok(chain.draws[idx].clone())
}
