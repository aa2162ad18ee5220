//! Summary tables, chain CSV round-trip, and the reference comparison for
//! the bundled study data.
//!
//! Floats are written in Rust's shortest round-trip decimal form, so parsing
//! an emitted chain CSV and recomputing the summaries reproduces every
//! number in `summary.tsv` byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use metro_core::diagnostics::{map_index, summarize, PosteriorSummary};
use metro_core::estimands::{rd_series, OffsetPolicy, TwoByTwo};
use metro_core::sampler::Variant;
use metro_core::target::{ParamVector, PriorComponent};

use crate::CliError;

pub const SUMMARY_HEADER: &str = "quantity\tmean\tmedian\tmode\tsd\tpct2_5\tpct97_5\tess\tmcse";

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), fmt)
}

/// One summary row per reported quantity.
#[derive(Debug, Clone)]
pub struct SummaryTable {
    pub rows: Vec<(String, PosteriorSummary)>,
}

impl SummaryTable {
    pub fn render_tsv(&self) -> String {
        let mut out = String::from(SUMMARY_HEADER);
        out.push('\n');
        for (name, s) in &self.rows {
            let _ = writeln!(
                out,
                "{name}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                fmt(s.mean),
                fmt(s.median),
                fmt_opt(s.mode),
                fmt(s.sd),
                fmt(s.pct2_5),
                fmt(s.pct97_5),
                fmt_opt(s.ess),
                fmt_opt(s.mcse),
            );
        }
        out
    }

    pub fn row(&self, name: &str) -> Option<&PosteriorSummary> {
        self.rows.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }
}

/// Builds the run summary: beta0, beta1, the odds ratio, and (when an offset
/// policy is supplied) the risk difference on the displayed x1000 scale.
/// Modes are the corresponding transforms of the highest-log-posterior draw.
pub fn build_summary_table(
    draws: &[ParamVector],
    log_posts: &[f64],
    rd_policy: Option<&OffsetPolicy>,
) -> Result<SummaryTable, CliError> {
    let map = map_index(log_posts).ok_or(CliError::Numeric(metro_core::Error::EmptyChain))?;
    let beta0: Vec<f64> = draws.iter().map(|d| d[0]).collect();
    let beta1: Vec<f64> = draws.iter().map(|d| d[1]).collect();
    let or: Vec<f64> = beta1.iter().map(|v| v.exp()).collect();

    let mut rows = Vec::new();
    let mut push = |name: &str, series: &[f64]| -> Result<(), CliError> {
        let mut s = summarize(series).map_err(CliError::Numeric)?;
        s.mode = Some(series[map]);
        rows.push((name.to_string(), s));
        Ok(())
    };
    push("beta0", &beta0)?;
    push("beta1", &beta1)?;
    push("or", &or)?;
    if let Some(policy) = rd_policy {
        let rd: Vec<f64> = rd_series(draws, policy)
            .map_err(CliError::Numeric)?
            .iter()
            .map(|v| v * 1000.0)
            .collect();
        push("rd_x1000", &rd)?;
    }
    Ok(SummaryTable { rows })
}

pub const CHAIN_CSV_HEADER: &str = "iteration,beta0,beta1,log_post,accepted";

/// Writes the retained chain, one row per iteration (1-based), floats in
/// round-trip form, accepted as 0/1.
pub fn render_chain_csv(draws: &[ParamVector], log_posts: &[f64], accepted: &[bool]) -> String {
    let mut out = String::from(CHAIN_CSV_HEADER);
    out.push('\n');
    for (j, ((d, lp), acc)) in draws.iter().zip(log_posts).zip(accepted).enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            j + 1,
            fmt(d[0]),
            fmt(d[1]),
            fmt(*lp),
            u8::from(*acc)
        );
    }
    out
}

pub fn render_burnin_csv(burnin_draws: &[ParamVector]) -> String {
    let mut out = String::from("iteration,beta0,beta1");
    out.push('\n');
    for (j, d) in burnin_draws.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", j + 1, fmt(d[0]), fmt(d[1]));
    }
    out
}

/// Parsed chain CSV: draws, log-posteriors, accept flags.
pub struct LoadedChain {
    pub draws: Vec<ParamVector>,
    pub log_posts: Vec<f64>,
    pub accepted: Vec<bool>,
}

pub fn read_chain_csv(path: &Path) -> Result<LoadedChain, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CHAIN_CSV_HEADER => {}
        _ => {
            return Err(CliError::Data(format!(
                "{}: expected header `{CHAIN_CSV_HEADER}`",
                path.display()
            )))
        }
    }
    let mut chain = LoadedChain {
        draws: Vec::new(),
        log_posts: Vec::new(),
        accepted: Vec::new(),
    };
    for (idx, raw) in lines {
        let row = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(CliError::Data(format!(
                "row {row}: expected 5 fields, got {}",
                fields.len()
            )));
        }
        let parse_f = |s: &str, name: &str| -> Result<f64, CliError> {
            s.parse()
                .map_err(|_| CliError::Data(format!("row {row}: bad {name} `{s}`")))
        };
        let b0 = parse_f(fields[1], "beta0")?;
        let b1 = parse_f(fields[2], "beta1")?;
        chain.draws.push(
            ParamVector::new(vec![b0, b1])
                .map_err(|e| CliError::Data(format!("row {row}: {e}")))?,
        );
        chain.log_posts.push(parse_f(fields[3], "log_post")?);
        chain.accepted.push(match fields[4].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(CliError::Data(format!(
                    "row {row}: accepted must be 0 or 1, got `{other}`"
                )))
            }
        });
    }
    if chain.draws.is_empty() {
        return Err(CliError::Data(format!("{}: no chain rows", path.display())));
    }
    Ok(chain)
}

/// Published reference estimates for the bundled magnetic-field/leukemia
/// study, used for side-by-side comparison in run reports.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceRow {
    pub beta1_mean: f64,
    pub beta1_median: f64,
    pub beta1_mode: f64,
    pub sd: f64,
    pub or_median: f64,
    pub or_ci: (f64, f64),
    pub rd_x1000: f64,
    pub rd_ci: (f64, f64),
    pub ess: f64,
}

pub fn reference_row(variant: Variant, priors: &[PriorComponent; 2]) -> Option<ReferenceRow> {
    let flat = priors == &[PriorComponent::Flat, PriorComponent::Flat];
    let study_normal = *priors
        == [
            PriorComponent::Normal {
                mean: 0.0,
                variance: 100.0,
            },
            PriorComponent::Normal {
                mean: 0.0,
                variance: 0.5,
            },
        ];
    match (variant, flat, study_normal) {
        (Variant::RandomWalk, true, _) => Some(ReferenceRow {
            beta1_mean: 1.23,
            beta1_median: 1.25,
            beta1_mode: 1.26,
            sd: 0.79,
            or_median: 3.49,
            or_ci: (0.67, 15.0),
            rd_x1000: 0.11,
            rd_ci: (-0.02, 0.59),
            ess: 1929.0,
        }),
        (Variant::Guided, true, _) => Some(ReferenceRow {
            beta1_mean: 1.19,
            beta1_median: 1.22,
            beta1_mode: 1.25,
            sd: 0.80,
            or_median: 3.38,
            or_ci: (0.64, 15.0),
            rd_x1000: 0.11,
            rd_ci: (-0.02, 0.60),
            ess: 15309.0,
        }),
        (Variant::GuidedAdaptive, true, _) => Some(ReferenceRow {
            beta1_mean: 1.20,
            beta1_median: 1.22,
            beta1_mode: 1.26,
            sd: 0.80,
            or_median: 3.40,
            or_ci: (0.63, 15.2),
            rd_x1000: 0.11,
            rd_ci: (-0.02, 0.60),
            ess: 34680.0,
        }),
        (Variant::GuidedAdaptive, _, true) => Some(ReferenceRow {
            beta1_mean: 0.53,
            beta1_median: 0.54,
            beta1_mode: 0.55,
            sd: 0.55,
            or_median: 1.71,
            or_ci: (0.57, 4.91),
            rd_x1000: 0.03,
            rd_ci: (-0.02, 0.18),
            ess: 40769.0,
        }),
        _ => None,
    }
}

pub fn is_bundled_study_table(table: &TwoByTwo) -> bool {
    *table
        == TwoByTwo {
            cases_exposed: 3,
            cases_unexposed: 33,
            controls_exposed: 5,
            controls_unexposed: 193,
        }
}

/// Renders the computed-vs-reference block for a study run, or an empty
/// string when no reference applies.
pub fn reference_comparison(
    variant: Variant,
    priors: &[PriorComponent; 2],
    table: &TwoByTwo,
    summary: &SummaryTable,
    ess_beta1: Option<f64>,
) -> String {
    if !is_bundled_study_table(table) {
        return String::new();
    }
    let Some(r) = reference_row(variant, priors) else {
        return String::new();
    };
    let (Some(b1), Some(or), Some(rd)) = (
        summary.row("beta1"),
        summary.row("or"),
        summary.row("rd_x1000"),
    ) else {
        return String::new();
    };
    let mut out = String::from("reference comparison (bundled leukemia study)\n");
    out.push_str("quantity\tcomputed\treference\n");
    let mut line = |name: &str, computed: f64, reference: f64| {
        let _ = writeln!(out, "{name}\t{computed:.4}\t{reference}");
    };
    line("beta1_mean", b1.mean, r.beta1_mean);
    line("beta1_median", b1.median, r.beta1_median);
    line("beta1_mode", b1.mode.unwrap_or(f64::NAN), r.beta1_mode);
    line("beta1_sd", b1.sd, r.sd);
    line("or_median", or.median, r.or_median);
    line("or_pct2_5", or.pct2_5, r.or_ci.0);
    line("or_pct97_5", or.pct97_5, r.or_ci.1);
    line("rd_x1000_median", rd.median, r.rd_x1000);
    line("rd_x1000_pct2_5", rd.pct2_5, r.rd_ci.0);
    line("rd_x1000_pct97_5", rd.pct97_5, r.rd_ci.1);
    if let Some(ess) = ess_beta1 {
        line("ess_beta1", ess, r.ess);
    }
    out
}
