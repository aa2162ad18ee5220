//! Metropolis chains: random-walk, guided, and guided-adaptive kernels, plus
//! a discrete kernel for stationarity checks.
//!
//! The random-walk variant proposes and accepts the whole parameter vector
//! jointly. The guided variants run a deterministic scan instead: each
//! component gets its own signed half-normal step, its own accept/reject
//! decision against the full target, and its own direction flip on rejection.
//! Holding a component's direction until one of its proposals is rejected
//! suppresses the random walk's backtracking and, with an adapted proposal
//! scale, traverses the target far faster than the joint kernel.
//!
//! Randomness is consumed in a fixed order (per step: d standard normals then
//! one uniform for the joint kernel; one normal then one uniform per component
//! for the scan), so a chain is bit-reproducible from its seed and can be
//! replayed from any checkpoint of (state, RNG).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Error;
use crate::target::{ParamVector, TargetDensity};
use crate::Result;

/// Relative tolerance for symmetry and semidefiniteness checks.
const MATRIX_TOL: f64 = 1e-12;

/// Scaling for adapted proposal covariances (optimal random-walk scaling
/// constant 2.38^2 divided by the dimension).
const ADAPT_SCALE_NUMERATOR: f64 = 2.38 * 2.38;

/// Ridge added to the empirical covariance before scaling, so the adapted
/// matrix stays positive-definite even when burn-in draws are degenerate.
const ADAPT_RIDGE: f64 = 1e-6;

/// Symmetric positive-semidefinite proposal covariance.
///
/// Semidefinite (not definite) on purpose: a zero matrix is a legal
/// degenerate proposal in tests. Production configs built by the CLI require
/// strictly positive variances.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    dim: usize,
    data: Vec<f64>, // row-major, dim x dim
}

impl CovMatrix {
    pub fn diagonal(variances: &[f64]) -> Result<Self> {
        if variances.is_empty() {
            return Err(Error::InvalidConfig(
                "covariance needs dimension >= 1".into(),
            ));
        }
        if variances.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "diagonal variances must be finite and non-negative, got {variances:?}"
            )));
        }
        let dim = variances.len();
        let mut data = vec![0.0; dim * dim];
        for (k, &v) in variances.iter().enumerate() {
            data[k * dim + k] = v;
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidConfig("covariance must be square".into()));
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "covariance has non-finite entries".into(),
            ));
        }
        let scale = data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for i in 0..dim {
            for j in (i + 1)..dim {
                if (data[i * dim + j] - data[j * dim + i]).abs() > MATRIX_TOL * scale {
                    return Err(Error::InvalidConfig("covariance is not symmetric".into()));
                }
            }
        }
        let m = Self { dim, data };
        m.cholesky()?; // reject indefinite matrices at construction
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Lower-triangular factor L with `L L^T = Σ`, tolerant of semidefinite
    /// input: zero pivots produce zero columns instead of failing.
    pub fn cholesky(&self) -> Result<CholeskyFactor> {
        let n = self.dim;
        let scale = self
            .data
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1.0);
        let tol = MATRIX_TOL * scale;
        let mut lower = vec![0.0; n * n];
        for j in 0..n {
            let mut d = self.entry(j, j);
            for k in 0..j {
                d -= lower[j * n + k] * lower[j * n + k];
            }
            if d > tol {
                lower[j * n + j] = d.sqrt();
            } else if d >= -tol {
                lower[j * n + j] = 0.0;
            } else {
                return Err(Error::NotPositiveSemidefinite);
            }
            for i in (j + 1)..n {
                let mut s = self.entry(i, j);
                for k in 0..j {
                    s -= lower[i * n + k] * lower[j * n + k];
                }
                if lower[j * n + j] > 0.0 {
                    lower[i * n + j] = s / lower[j * n + j];
                } else if s.abs() <= tol {
                    lower[i * n + j] = 0.0;
                } else {
                    return Err(Error::NotPositiveSemidefinite);
                }
            }
        }
        Ok(CholeskyFactor { dim: n, lower })
    }
}

/// Lower-triangular Cholesky factor of a proposal covariance.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    dim: usize,
    lower: Vec<f64>,
}

impl CholeskyFactor {
    /// `L z` for a standard-normal vector `z`: a draw from N(0, Σ).
    pub fn mul_vec(&self, z: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|i| (0..=i).map(|k| self.lower[i * n + k] * z[k]).sum())
            .collect()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.dim + j]
    }
}

/// Which Metropolis kernel drives the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    RandomWalk,
    Guided,
    GuidedAdaptive,
}

impl Variant {
    pub fn is_guided(self) -> bool {
        matches!(self, Variant::Guided | Variant::GuidedAdaptive)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::RandomWalk => "random-walk",
            Variant::Guided => "guided",
            Variant::GuidedAdaptive => "guided-adaptive",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything needed to run a chain.
#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub variant: Variant,
    pub proposal_cov: CovMatrix,
    /// Retained iterations M.
    pub iterations: usize,
    /// Discarded warm-up iterations B (the only phase where adaptation runs).
    pub burnin: usize,
    /// GuidedAdaptive: recompute the proposal covariance every this many
    /// burn-in iterations.
    pub adapt_interval: usize,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(
        variant: Variant,
        proposal_cov: CovMatrix,
        iterations: usize,
        burnin: usize,
        adapt_interval: usize,
        seed: u64,
    ) -> Result<Self> {
        let cfg = Self {
            variant,
            proposal_cov,
            iterations,
            burnin,
            adapt_interval,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        self.proposal_cov.cholesky()?;
        if self.variant == Variant::GuidedAdaptive {
            if self.adapt_interval == 0 {
                return Err(Error::InvalidConfig(
                    "adapt_interval must be at least 1".into(),
                ));
            }
            if self.adapt_interval > self.burnin {
                return Err(Error::InvalidConfig(format!(
                    "adapt_interval ({}) must not exceed burnin ({})",
                    self.adapt_interval, self.burnin
                )));
            }
        }
        Ok(())
    }
}

/// Mutable state of a running chain.
///
/// `current_log_post` always equals the target evaluated at `current`; the
/// cached value is carried forward on rejection and replaced on acceptance.
/// `signs` holds each component's current move direction (guided variants
/// only; ignored by the random walk).
#[derive(Debug, Clone)]
pub struct ChainState {
    pub current: ParamVector,
    pub current_log_post: f64,
    pub signs: Vec<f64>,
    pub iteration: u64,
}

impl ChainState {
    /// Initializes chain state at `init`, drawing a fair-coin initial
    /// direction per component for guided variants.
    pub fn init<T, R>(
        target: &T,
        init: &ParamVector,
        config: &SamplerConfig,
        rng: &mut R,
    ) -> Result<Self>
    where
        T: TargetDensity + ?Sized,
        R: Rng,
    {
        let lp = target.log_density(init);
        if !lp.is_finite() {
            return Err(Error::NonFiniteInit);
        }
        let signs = if config.variant.is_guided() {
            (0..init.dim())
                .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
                .collect()
        } else {
            vec![1.0; init.dim()]
        };
        Ok(Self {
            current: init.clone(),
            current_log_post: lp,
            signs,
            iteration: 0,
        })
    }
}

/// What one Metropolis step did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    /// True when the retained draw differs from the previous one.
    pub moved: bool,
    /// Accept/reject decisions taken this step (1 joint, or d per-component).
    pub proposals: u32,
    pub accepts: u32,
}

/// Joint candidate draw.
///
/// RandomWalk: `current + L z` with `z` standard normal. Guided variants:
/// `current + s ⊙ |L z|`, every component displaced in its held direction.
/// This is the one-shot form; the guided chain kernel applies the same signed
/// magnitude rule one component at a time (see [`metropolis_step`]).
pub fn propose<R: Rng>(
    state: &ChainState,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<ParamVector> {
    let chol = config.proposal_cov.cholesky()?;
    let d = state.current.dim();
    let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let delta = chol.mul_vec(&z);
    let values = if config.variant.is_guided() {
        (0..d)
            .map(|k| state.current[k] + state.signs[k] * delta[k].abs())
            .collect()
    } else {
        (0..d).map(|k| state.current[k] + delta[k]).collect()
    };
    Ok(ParamVector::from_raw(values))
}

/// Log acceptance probability: `min(0, candidate - current)`.
///
/// A candidate with zero density (log-posterior −∞) yields −∞, i.e. certain
/// rejection; the current state is never at zero density.
pub fn log_acceptance(candidate_log_post: f64, current_log_post: f64) -> f64 {
    if candidate_log_post == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    (candidate_log_post - current_log_post).min(0.0)
}

/// Accept/reject decision: compare ln(u) against the log acceptance
/// probability, avoiding exponentiation underflow.
pub fn accepts(log_acceptance: f64, uniform: f64) -> bool {
    uniform.ln() < log_acceptance
}

/// Advances the chain by one step.
///
/// RandomWalk: one joint proposal, one uniform; on rejection the state is
/// unchanged. Guided variants scan the components in order; component `k`
/// moves by `signs[k] * |z| * sqrt(Σ_kk)`, is accepted or rejected against the
/// full target, and flips its own sign on rejection, so every flip marks a
/// rejection of that component.
pub fn metropolis_step<T, R>(
    state: &mut ChainState,
    target: &T,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<StepOutcome>
where
    T: TargetDensity + ?Sized,
    R: Rng,
{
    let d = state.current.dim();
    let outcome = if config.variant.is_guided() {
        let mut accepted = 0u32;
        for k in 0..d {
            let step_sd = config.proposal_cov.entry(k, k).sqrt();
            let z: f64 = rng.sample(StandardNormal);
            let mut values = state.current.values().to_vec();
            values[k] += state.signs[k] * z.abs() * step_sd;
            let candidate = ParamVector::from_raw(values);
            let cand_lp = target.log_density(&candidate);
            let la = log_acceptance(cand_lp, state.current_log_post);
            let u: f64 = rng.random();
            if accepts(la, u) {
                state.current = candidate;
                state.current_log_post = cand_lp;
                accepted += 1;
            } else {
                state.signs[k] = -state.signs[k];
            }
        }
        StepOutcome {
            moved: accepted > 0,
            proposals: d as u32,
            accepts: accepted,
        }
    } else {
        let candidate = propose(state, config, rng)?;
        let cand_lp = target.log_density(&candidate);
        let la = log_acceptance(cand_lp, state.current_log_post);
        let u: f64 = rng.random();
        let moved = accepts(la, u);
        if moved {
            state.current = candidate;
            state.current_log_post = cand_lp;
        }
        StepOutcome {
            moved,
            proposals: 1,
            accepts: moved as u32,
        }
    };
    state.iteration += 1;
    Ok(outcome)
}

/// Scaled empirical covariance of the draws so far:
/// `(2.38²/d) · (S + 1e-6·I)` with `S` the sample covariance (denominator
/// n−1). Returns `None` when fewer than `d + 2` rows are available, in which
/// case the caller keeps its previous proposal covariance.
pub fn adapt_covariance(history: &[ParamVector], dim: usize) -> Option<CovMatrix> {
    let n = history.len();
    if n < dim + 2 {
        return None;
    }
    let nf = n as f64;
    let mut mean = vec![0.0; dim];
    for row in history {
        for k in 0..dim {
            mean[k] += row[k];
        }
    }
    for m in &mut mean {
        *m /= nf;
    }
    let scale = ADAPT_SCALE_NUMERATOR / dim as f64;
    let mut rows = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        for j in i..dim {
            let mut s = 0.0;
            for row in history {
                s += (row[i] - mean[i]) * (row[j] - mean[j]);
            }
            let mut cov = s / (nf - 1.0);
            if i == j {
                cov += ADAPT_RIDGE;
            }
            rows[i][j] = scale * cov;
            rows[j][i] = rows[i][j];
        }
    }
    Some(CovMatrix::from_rows(&rows).expect("ridged sample covariance is positive definite"))
}

/// A finished run: retained draws with their cached log-posteriors and
/// accept flags, the burn-in trajectory kept for adaptation audit, the
/// original config, and the proposal covariance in force after burn-in.
#[derive(Debug, Clone)]
pub struct Chain {
    pub draws: Vec<ParamVector>,
    pub log_posts: Vec<f64>,
    pub accepted: Vec<bool>,
    pub burnin_draws: Vec<ParamVector>,
    pub config: SamplerConfig,
    pub adapted_cov: CovMatrix,
    /// Accept/reject decisions over the retained phase.
    pub proposals: u64,
    pub accepts: u64,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.draws.first().map_or(0, |d| d.dim())
    }

    /// One scalar component of every retained draw, in order.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d[k]).collect()
    }

    /// Fraction of accept decisions that accepted, over the retained phase.
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            return 0.0;
        }
        self.accepts as f64 / self.proposals as f64
    }
}

/// Runs burn-in then `iterations` retained Metropolis steps.
///
/// GuidedAdaptive recomputes the proposal covariance from all burn-in draws
/// so far every `adapt_interval` burn-in iterations and freezes it afterwards,
/// so the retained-phase kernel is time-homogeneous. Identical (config, init)
/// produce bit-identical chains.
pub fn run_chain<T>(target: &T, config: &SamplerConfig, init: &ParamVector) -> Result<Chain>
where
    T: TargetDensity + ?Sized,
{
    config.validate()?;
    if config.proposal_cov.dim() != init.dim() {
        return Err(Error::InvalidConfig(format!(
            "proposal covariance is {}x{} but the initial point has dimension {}",
            config.proposal_cov.dim(),
            config.proposal_cov.dim(),
            init.dim()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = ChainState::init(target, init, config, &mut rng)?;
    let mut live = config.clone();

    let mut burnin_draws = Vec::with_capacity(config.burnin);
    for j in 1..=config.burnin {
        metropolis_step(&mut state, target, &live, &mut rng)?;
        burnin_draws.push(state.current.clone());
        if config.variant == Variant::GuidedAdaptive && j % config.adapt_interval == 0 {
            if let Some(cov) = adapt_covariance(&burnin_draws, init.dim()) {
                live.proposal_cov = cov;
            }
        }
    }

    let mut draws = Vec::with_capacity(config.iterations);
    let mut log_posts = Vec::with_capacity(config.iterations);
    let mut accepted = Vec::with_capacity(config.iterations);
    let mut proposals = 0u64;
    let mut accepts_total = 0u64;
    for _ in 0..config.iterations {
        let outcome = metropolis_step(&mut state, target, &live, &mut rng)?;
        draws.push(state.current.clone());
        log_posts.push(state.current_log_post);
        accepted.push(outcome.moved);
        proposals += u64::from(outcome.proposals);
        accepts_total += u64::from(outcome.accepts);
    }

    Ok(Chain {
        draws,
        log_posts,
        accepted,
        burnin_draws,
        config: config.clone(),
        adapted_cov: live.proposal_cov,
        proposals,
        accepts: accepts_total,
    })
}

/// Metropolis kernel on a finite state space with masses proportional to
/// `masses` and a uniform propose-another-state move. Returns the empirical
/// visit frequency of each state over `steps` transitions.
pub fn discrete_chain<R: Rng>(masses: &[f64], steps: usize, rng: &mut R) -> Result<Vec<f64>> {
    if masses.len() < 2 {
        return Err(Error::InvalidConfig("need at least two states".into()));
    }
    if masses.iter().any(|m| !m.is_finite() || *m <= 0.0) {
        return Err(Error::InvalidConfig("state masses must be positive".into()));
    }
    if steps == 0 {
        return Err(Error::InvalidConfig("steps must be at least 1".into()));
    }
    let n = masses.len();
    let mut counts = vec![0u64; n];
    let mut state = 0usize;
    for _ in 0..steps {
        // Uniform proposal over the other n-1 states.
        let mut cand = rng.random_range(0..n - 1);
        if cand >= state {
            cand += 1;
        }
        let la = (masses[cand].ln() - masses[state].ln()).min(0.0);
        let u: f64 = rng.random();
        if accepts(la, u) {
            state = cand;
        }
        counts[state] += 1;
    }
    Ok(counts.iter().map(|&c| c as f64 / steps as f64).collect())
}

/// Two-state Metropolis kernel with the always-swap proposal, where state `b`
/// carries `mass_ratio` times the mass of state `a`. Returns the empirical
/// frequency of `b`, which converges to `r / (1 + r)`.
pub fn two_state_chain<R: Rng>(mass_ratio: f64, steps: usize, rng: &mut R) -> Result<f64> {
    if !mass_ratio.is_finite() || mass_ratio <= 0.0 {
        return Err(Error::InvalidConfig("mass ratio must be positive".into()));
    }
    let freqs = discrete_chain(&[1.0, mass_ratio], steps, rng)?;
    Ok(freqs[1])
}

/// [`two_state_chain`] with the toolkit's seeded generator.
pub fn two_state_chain_seeded(mass_ratio: f64, steps: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    two_state_chain(mass_ratio, steps, &mut rng)
}
