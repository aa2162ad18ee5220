//! Flat `key = value` run configuration with line-accurate errors.
//!
//! `#` begins a comment anywhere on a line. Unknown keys are errors, not
//! warnings, so a typo cannot silently fall back to a default. Every value
//! is range-checked here; the defaults reproduce the bundled study's
//! guided-adaptive uniform-prior analysis.

use std::path::PathBuf;

use metro_core::sampler::Variant;
use metro_core::target::PriorComponent;

use crate::CliError;

/// Default per-component proposal variance.
pub const DEFAULT_PROPOSAL_VARIANCE: f64 = 0.1;
/// Default population incidence (4.8 per 100,000).
pub const DEFAULT_INCIDENCE: f64 = 4.8e-5;

/// How the risk-difference offset is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffsetPolicyChoice {
    /// Solve one offset at the closed-form MLE and apply it to every draw.
    Anchored,
    /// Re-solve the offset for every posterior draw.
    PerDraw,
}

impl OffsetPolicyChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            OffsetPolicyChoice::Anchored => "anchored",
            OffsetPolicyChoice::PerDraw => "per-draw",
        }
    }
}

/// Fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data: PathBuf,
    pub variant: Variant,
    pub iterations: usize,
    pub burnin: usize,
    pub adapt_interval: usize,
    pub seed: u64,
    pub proposal_variances: [f64; 2],
    pub priors: [PriorComponent; 2],
    pub incidence: f64,
    /// Population exposure prevalence; `None` means "use the exposed-control
    /// fraction of the dataset".
    pub exposure_prevalence: Option<f64>,
    pub offset_policy: OffsetPolicyChoice,
    pub output_dir: PathBuf,
    /// Keep every k-th point in trace plots.
    pub thin: usize,
    /// Restrict trace plots to retained iterations `start..=end` (1-based).
    pub window: Option<(usize, usize)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: PathBuf::from("data/leukemia.csv"),
            variant: Variant::GuidedAdaptive,
            iterations: 100_000,
            burnin: 1000,
            adapt_interval: 100,
            seed: 1,
            proposal_variances: [DEFAULT_PROPOSAL_VARIANCE; 2],
            priors: [PriorComponent::Flat; 2],
            incidence: DEFAULT_INCIDENCE,
            exposure_prevalence: None,
            offset_policy: OffsetPolicyChoice::Anchored,
            output_dir: PathBuf::from("out"),
            thin: 1,
            window: None,
        }
    }
}

fn usage(line: usize, key: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("config line {line}: {key}: {message}"))
}

pub fn parse_positive_int(value: &str) -> Result<usize, String> {
    let n: i64 = value
        .parse()
        .map_err(|_| format!("expected an integer, got `{value}`"))?;
    if n < 1 {
        return Err(format!("must be at least 1, got {n}"));
    }
    Ok(n as usize)
}

pub fn parse_non_negative_int(value: &str) -> Result<usize, String> {
    let n: i64 = value
        .parse()
        .map_err(|_| format!("expected an integer, got `{value}`"))?;
    if n < 0 {
        return Err(format!("must be non-negative, got {n}"));
    }
    Ok(n as usize)
}

pub fn parse_seed(value: &str) -> Result<u64, String> {
    value
        .parse()
        .map_err(|_| format!("expected an unsigned 64-bit integer, got `{value}`"))
}

pub fn parse_variant(value: &str) -> Result<Variant, String> {
    match value {
        "random-walk" => Ok(Variant::RandomWalk),
        "guided" => Ok(Variant::Guided),
        "guided-adaptive" => Ok(Variant::GuidedAdaptive),
        other => Err(format!(
            "expected one of random-walk | guided | guided-adaptive, got `{other}`"
        )),
    }
}

pub fn parse_offset_policy(value: &str) -> Result<OffsetPolicyChoice, String> {
    match value {
        "anchored" => Ok(OffsetPolicyChoice::Anchored),
        "per-draw" => Ok(OffsetPolicyChoice::PerDraw),
        other => Err(format!("expected anchored | per-draw, got `{other}`")),
    }
}

pub fn parse_positive_variance(value: &str) -> Result<f64, String> {
    let v: f64 = value
        .parse()
        .map_err(|_| format!("expected a number, got `{value}`"))?;
    if !v.is_finite() || v <= 0.0 {
        return Err(format!("must be a positive finite variance, got {v}"));
    }
    Ok(v)
}

pub fn parse_probability(value: &str, open: bool) -> Result<f64, String> {
    let v: f64 = value
        .parse()
        .map_err(|_| format!("expected a number, got `{value}`"))?;
    let ok = if open {
        v > 0.0 && v < 1.0
    } else {
        (0.0..=1.0).contains(&v)
    };
    if !ok {
        return Err(format!("must be a probability, got {v}"));
    }
    Ok(v)
}

/// `flat` or `normal(mean, variance)`.
pub fn parse_prior(value: &str) -> Result<PriorComponent, String> {
    if value == "flat" {
        return Ok(PriorComponent::Flat);
    }
    let inner = value
        .strip_prefix("normal(")
        .and_then(|rest| rest.strip_suffix(')'))
        .ok_or_else(|| format!("expected `flat` or `normal(mean, variance)`, got `{value}`"))?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected `normal(mean, variance)`, got `{value}`"));
    }
    let mean: f64 = parts[0]
        .parse()
        .map_err(|_| format!("bad normal mean `{}`", parts[0]))?;
    let variance: f64 = parts[1]
        .parse()
        .map_err(|_| format!("bad normal variance `{}`", parts[1]))?;
    PriorComponent::normal(mean, variance).map_err(|e| e.to_string())
}

/// `start:end`, 1-based inclusive.
pub fn parse_window(value: &str) -> Result<(usize, usize), String> {
    let (a, b) = value
        .split_once(':')
        .ok_or_else(|| format!("expected `start:end`, got `{value}`"))?;
    let start: usize = a.trim().parse().map_err(|_| format!("bad start `{a}`"))?;
    let end: usize = b.trim().parse().map_err(|_| format!("bad end `{b}`"))?;
    if start < 1 || end < start {
        return Err(format!("need 1 <= start <= end, got {start}:{end}"));
    }
    Ok((start, end))
}

/// Parses `key = value` text into a config, starting from the defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "config line {line_no}: expected `key = value`, got `{line}`"
            ))
        })?;
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(usage(line_no, key, "missing value"));
        }
        let set = |e: String| usage(line_no, key, e);
        match key {
            "data" => cfg.data = PathBuf::from(value),
            "variant" => cfg.variant = parse_variant(value).map_err(set)?,
            "iterations" => cfg.iterations = parse_positive_int(value).map_err(set)?,
            "burnin" => cfg.burnin = parse_non_negative_int(value).map_err(set)?,
            "adapt_interval" => cfg.adapt_interval = parse_positive_int(value).map_err(set)?,
            "seed" => cfg.seed = parse_seed(value).map_err(set)?,
            "proposal.beta0" => {
                cfg.proposal_variances[0] = parse_positive_variance(value).map_err(set)?
            }
            "proposal.beta1" => {
                cfg.proposal_variances[1] = parse_positive_variance(value).map_err(set)?
            }
            "prior.beta0" => cfg.priors[0] = parse_prior(value).map_err(set)?,
            "prior.beta1" => cfg.priors[1] = parse_prior(value).map_err(set)?,
            "incidence" => cfg.incidence = parse_probability(value, true).map_err(set)?,
            "exposure_prevalence" => {
                cfg.exposure_prevalence = Some(parse_probability(value, false).map_err(set)?)
            }
            "offset_policy" => cfg.offset_policy = parse_offset_policy(value).map_err(set)?,
            "output_dir" => cfg.output_dir = PathBuf::from(value),
            "thin" => cfg.thin = parse_positive_int(value).map_err(set)?,
            "window" => cfg.window = Some(parse_window(value).map_err(set)?),
            other => {
                return Err(CliError::Usage(format!(
                    "config line {line_no}: unknown key `{other}`"
                )))
            }
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.variant, Variant::GuidedAdaptive);
        assert_eq!(cfg.iterations, 100_000);
        assert_eq!(cfg.burnin, 1000);
        assert_eq!(cfg.adapt_interval, 100);
        assert_eq!(cfg.proposal_variances, [0.1, 0.1]);
        assert_eq!(cfg.priors, [PriorComponent::Flat, PriorComponent::Flat]);
        assert_eq!(cfg.incidence, 4.8e-5);
        assert_eq!(cfg.exposure_prevalence, None);
        assert_eq!(cfg.offset_policy, OffsetPolicyChoice::Anchored);
        assert_eq!(cfg.thin, 1);
        assert_eq!(cfg.window, None);
    }

    #[test]
    fn normal_prior_key() {
        let cfg = parse_config("prior.beta1 = normal(0, 0.5)\n").unwrap();
        assert_eq!(cfg.priors[1], PriorComponent::normal(0.0, 0.5).unwrap());
        assert_eq!(cfg.priors[0], PriorComponent::Flat);
    }

    #[test]
    fn negative_iterations_is_a_range_error_naming_the_key() {
        let err = parse_config("iterations = -5\n").unwrap_err().to_string();
        assert!(err.contains("iterations"), "{err}");
        assert!(err.contains("line 1"), "{err}");
        assert!(err.contains("at least 1"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_line_numbers() {
        let err = parse_config("seed = 4\nitertions = 10\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("unknown key `itertions`"), "{err}");
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let cfg = parse_config("# full-line comment\n\nseed = 9 # trailing comment\n").unwrap();
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn value_validation() {
        assert!(parse_config("proposal.beta0 = 0\n").is_err());
        assert!(parse_config("proposal.beta0 = -0.1\n").is_err());
        assert!(parse_config("incidence = 0\n").is_err());
        assert!(parse_config("incidence = 1.5\n").is_err());
        assert!(parse_config("variant = walk\n").is_err());
        assert!(parse_config("prior.beta0 = normal(0)\n").is_err());
        assert!(parse_config("prior.beta0 = normal(0, -1)\n").is_err());
        assert!(parse_config("window = 5:2\n").is_err());
        assert!(parse_config("thin = 0\n").is_err());
        assert!(parse_config("seed =\n").is_err());
        assert!(parse_config("just a line\n").is_err());
    }

    #[test]
    fn window_and_thin_parse() {
        let cfg = parse_config("window = 500:1500\nthin = 10\n").unwrap();
        assert_eq!(cfg.window, Some((500, 1500)));
        assert_eq!(cfg.thin, 10);
    }
}
