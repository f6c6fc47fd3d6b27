//! Coupled exact/approximate chains on common random numbers.
//!
//! The exact chain is always the penalty chain; its normal log-ratio is the
//! quantile coupling of the approximate chain's estimate, so both chains see
//! the same proposal, estimator inputs and acceptance uniform. A separation
//! mark B_t = 1 is recorded when V_t falls between the two acceptance
//! probabilities, i.e. when the chains decide differently.

use std::fmt::Debug;

use rand::RngCore;
use rayon::prelude::*;

use crate::algorithms::{naive_step, penalty_estimate_step, penalty_step_flagged, Algorithm};
use crate::diagnostics::{batch_means_se, mean, mean_se, ols, LinearFit};
use crate::error::{Error, Result};
use crate::estimators::EstimatorModel;
use crate::kernel::{Proposal, StepOutcome, Target};
use crate::rng::{stream, UpdateDraws};

pub const DEFAULT_BURN_IN: usize = 10_000;
pub const DEFAULT_CAP: u64 = 1_000_000;
/// Fewest acceptance pairs accepted by [`rho_hat1`].
pub const MIN_GAP_PAIRS: usize = 1000;
/// Fewest inter-event intervals accepted by [`rho_hat2`].
pub const MIN_INTERVALS: usize = 30;

/// Which approximate chain runs against the exact penalty chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    /// Naive chain with the shifted inverse-gamma estimator.
    PenaltyVsNaive,
    /// Penalty chain with estimated variance, normal estimator with σ² = 1.
    PenaltyVsPenaltyEstimate,
}

impl Pairing {
    pub fn name(&self) -> &'static str {
        match self {
            Pairing::PenaltyVsNaive => "penalty-naive",
            Pairing::PenaltyVsPenaltyEstimate => "penalty-estimate",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "penalty-naive" => Some(Pairing::PenaltyVsNaive),
            "penalty-estimate" => Some(Pairing::PenaltyVsPenaltyEstimate),
            _ => None,
        }
    }

    /// The estimator model both chains share at sample size `m`.
    pub fn estimator(&self, m: usize) -> Result<EstimatorModel> {
        match self {
            Pairing::PenaltyVsNaive => EstimatorModel::inv_gamma_shifted(m),
            Pairing::PenaltyVsPenaltyEstimate => EstimatorModel::normal_with_sample_variance(1.0, m),
        }
    }

    pub fn approx_algorithm(&self) -> Algorithm {
        match self {
            Pairing::PenaltyVsNaive => Algorithm::Naive,
            Pairing::PenaltyVsPenaltyEstimate => Algorithm::PenaltyEstimate,
        }
    }
}

/// B_t for acceptance probabilities given on the log scale:
/// min(α) < V ≤ max(α).
pub fn separation_mark(log_alpha_a: f64, log_alpha_b: f64, log_v: f64) -> bool {
    let (lo, hi) = if log_alpha_a <= log_alpha_b { (log_alpha_a, log_alpha_b) } else { (log_alpha_b, log_alpha_a) };
    lo < log_v && log_v <= hi
}

/// Both chains advanced by one update.
#[derive(Debug, Clone)]
pub struct CoupledStep<S> {
    pub exact: StepOutcome<S>,
    pub approx: StepOutcome<S>,
    pub separated: bool,
    /// The coupling clamped a tail probability at this update.
    pub clamped: bool,
}

/// One coupled update from (`exact`, `approx`).
pub fn coupled_step<S, T, P>(
    pairing: Pairing,
    target: &T,
    proposal: &P,
    model: &EstimatorModel,
    exact: &S,
    approx: &S,
    draws: &UpdateDraws,
) -> Result<CoupledStep<S>>
where
    S: Clone + Debug,
    T: Target<S> + ?Sized,
    P: Proposal<S> + ?Sized,
{
    let (e, clamped) = penalty_step_flagged(target, proposal, model, exact, draws)?;
    let a = match pairing {
        Pairing::PenaltyVsNaive => naive_step(target, proposal, model, approx, draws)?,
        Pairing::PenaltyVsPenaltyEstimate => penalty_estimate_step(target, proposal, model, approx, draws)?,
    };
    let separated = separation_mark(e.log_alpha, a.log_alpha, draws.log_accept_uniform());
    Ok(CoupledStep { exact: e, approx: a, separated, clamped })
}

/// One row of a coupled trace, after update `t` (1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledRecord<S> {
    pub t: u64,
    pub exact: S,
    pub approx: S,
    pub separated: bool,
    /// The chains occupy the same state again after having separated.
    pub coalesced: bool,
    pub alpha_exact: f64,
    pub alpha_approx: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoupledRunConfig {
    /// Exact-chain updates before the coupled run starts.
    pub burn_in: usize,
    pub n_updates: usize,
    /// Reset the approximate chain onto the exact one after every separation.
    pub remerge: bool,
    /// Keep every k-th record; `None` keeps none.
    pub record_every: Option<usize>,
    /// Keep |α_exact − α_approx| for every update.
    pub keep_gaps: bool,
}

impl Default for CoupledRunConfig {
    fn default() -> Self {
        Self { burn_in: DEFAULT_BURN_IN, n_updates: 0, remerge: false, record_every: None, keep_gaps: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledRun<S> {
    pub records: Vec<CoupledRecord<S>>,
    /// Update indices t with B_t = 1.
    pub event_times: Vec<u64>,
    pub gaps: Vec<f64>,
    /// Updates after which both chains were bitwise equal.
    pub identical: u64,
    pub clamped: u64,
    pub n_updates: u64,
    pub final_exact: S,
    pub final_approx: S,
}

impl<S> CoupledRun<S> {
    pub fn identical_fraction(&self) -> f64 {
        self.identical as f64 / self.n_updates as f64
    }
}

fn burn_in<S, T, P>(
    target: &T,
    proposal: &P,
    model: &EstimatorModel,
    start: S,
    n: usize,
    draws: &mut UpdateDraws,
    rng: &mut dyn RngCore,
) -> Result<S>
where
    S: Clone + Debug,
    T: Target<S> + ?Sized,
    P: Proposal<S> + ?Sized,
{
    let mut state = start;
    for _ in 0..n {
        draws.redraw(rng, proposal, model);
        state = penalty_step_flagged(target, proposal, model, &state, draws)?.0.state;
    }
    Ok(state)
}

/// Burns in the exact chain from `start`, then runs both chains from the
/// same state for `cfg.n_updates` coupled updates.
#[allow(clippy::too_many_arguments)]
pub fn run_coupled<S, T, P>(
    pairing: Pairing,
    target: &T,
    proposal: &P,
    model: &EstimatorModel,
    start: S,
    cfg: &CoupledRunConfig,
    rng: &mut dyn RngCore,
) -> Result<CoupledRun<S>>
where
    S: Clone + Debug + PartialEq,
    T: Target<S> + ?Sized,
    P: Proposal<S> + ?Sized,
{
    let mut draws = UpdateDraws::new();
    let mut exact = burn_in(target, proposal, model, start, cfg.burn_in, &mut draws, rng)?;
    let mut approx = exact.clone();
    let mut run = CoupledRun {
        records: Vec::new(),
        event_times: Vec::new(),
        gaps: if cfg.keep_gaps { Vec::with_capacity(cfg.n_updates) } else { Vec::new() },
        identical: 0,
        clamped: 0,
        n_updates: cfg.n_updates as u64,
        final_exact: exact.clone(),
        final_approx: approx.clone(),
    };
    let mut ever_separated = false;
    for i in 0..cfg.n_updates {
        let t = i as u64 + 1;
        draws.redraw(rng, proposal, model);
        let step = coupled_step(pairing, target, proposal, model, &exact, &approx, &draws)?;
        exact = step.exact.state;
        approx = step.approx.state;
        ever_separated |= step.separated;
        if step.separated {
            run.event_times.push(t);
        }
        if step.clamped {
            run.clamped += 1;
        }
        let same = exact == approx;
        if same {
            run.identical += 1;
        }
        if cfg.keep_gaps {
            run.gaps.push((step.exact.log_alpha.exp() - step.approx.log_alpha.exp()).abs());
        }
        if let Some(k) = cfg.record_every {
            if i % k.max(1) == 0 {
                run.records.push(CoupledRecord {
                    t,
                    exact: exact.clone(),
                    approx: approx.clone(),
                    separated: step.separated,
                    coalesced: ever_separated && same,
                    alpha_exact: step.exact.log_alpha.exp(),
                    alpha_approx: step.approx.log_alpha.exp(),
                });
            }
        }
        if cfg.remerge && step.separated {
            approx = exact.clone();
        }
    }
    run.final_exact = exact;
    run.final_approx = approx;
    Ok(run)
}

/// First update index T ≥ 1 with B_T = 1 after `burn_in` exact updates, or
/// `None` if the chains are still together after `cap` updates.
#[allow(clippy::too_many_arguments)]
pub fn first_separation_time<S, T, P>(
    pairing: Pairing,
    target: &T,
    proposal: &P,
    model: &EstimatorModel,
    start: S,
    burn_in_len: usize,
    cap: u64,
    rng: &mut dyn RngCore,
) -> Result<Option<u64>>
where
    S: Clone + Debug,
    T: Target<S> + ?Sized,
    P: Proposal<S> + ?Sized,
{
    let mut draws = UpdateDraws::new();
    let mut state = burn_in(target, proposal, model, start, burn_in_len, &mut draws, rng)?;
    for t in 1..=cap {
        draws.redraw(rng, proposal, model);
        // before separation both chains share the state
        let step = coupled_step(pairing, target, proposal, model, &state, &state, &draws)?;
        if step.separated {
            return Ok(Some(t));
        }
        state = step.exact.state;
    }
    Ok(None)
}

/// A separation-time estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationEstimate {
    pub value: f64,
    pub se: f64,
}

impl SeparationEstimate {
    /// An infinite value stands for "no separation possible": the
    /// acceptance gap was identically zero.
    pub fn is_sentinel(&self) -> bool {
        self.value.is_infinite()
    }
}

/// ρ̂₁ = 1 / mean |α_exact − α_approx| over a stationary run, with a delta
/// method standard error from the batch-means SE of the mean gap.
pub fn rho_hat1(gaps: &[f64]) -> Result<SeparationEstimate> {
    if gaps.len() < MIN_GAP_PAIRS {
        return Err(Error::InsufficientEvents { found: gaps.len(), required: MIN_GAP_PAIRS });
    }
    let g = mean(gaps);
    if g == 0.0 {
        return Ok(SeparationEstimate { value: f64::INFINITY, se: f64::INFINITY });
    }
    let se_g = batch_means_se(gaps);
    Ok(SeparationEstimate { value: 1.0 / g, se: se_g / (g * g) })
}

/// Intervals T_i − T_{i−1} between consecutive events.
pub fn event_intervals(event_times: &[u64]) -> Vec<u64> {
    event_times.windows(2).map(|w| w[1] - w[0]).collect()
}

/// ρ̂₂ = mean inter-event interval; at least [`MIN_INTERVALS`] intervals.
pub fn rho_hat2(event_times: &[u64]) -> Result<SeparationEstimate> {
    let iv: Vec<f64> = event_intervals(event_times).into_iter().map(|d| d as f64).collect();
    if iv.len() < MIN_INTERVALS {
        return Err(Error::InsufficientEvents { found: iv.len(), required: MIN_INTERVALS });
    }
    let (value, se) = mean_se(&iv);
    Ok(SeparationEstimate { value, se })
}

/// Mean first separation time over replicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauEstimate {
    pub value: f64,
    pub se: f64,
    pub n_replicates: usize,
    /// Replicates that reached the cap; counted at the cap, so `value` is a
    /// lower bound whenever this is nonzero.
    pub censored: usize,
}

pub fn tau_hat(times: &[Option<u64>], cap: u64) -> Result<TauEstimate> {
    if times.len() < 2 {
        return Err(Error::InsufficientEvents { found: times.len(), required: 2 });
    }
    let censored = times.iter().filter(|t| t.is_none()).count();
    let v: Vec<f64> = times.iter().map(|t| t.unwrap_or(cap) as f64).collect();
    let (value, se) = mean_se(&v);
    Ok(TauEstimate { value, se, n_replicates: times.len(), censored })
}

/// Per-m summary of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationStats {
    pub m: usize,
    pub rho1: Option<SeparationEstimate>,
    pub rho2: Option<SeparationEstimate>,
    pub tau: TauEstimate,
    pub n_events: usize,
    pub stationary_updates: usize,
    pub clamped: u64,
    pub event_intervals: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub m_list: Vec<usize>,
    pub pairing: Pairing,
    pub replicates: usize,
    pub burn_in: usize,
    pub cap: u64,
    /// Shortest stationary run for ρ̂₁ and ρ̂₂; the run is lengthened to
    /// `stationary_tau_multiple · τ̂` when that is longer.
    pub stationary_updates: usize,
    pub stationary_tau_multiple: f64,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            m_list: vec![8, 16, 32, 64],
            pairing: Pairing::PenaltyVsNaive,
            replicates: 500,
            burn_in: DEFAULT_BURN_IN,
            cap: DEFAULT_CAP,
            stationary_updates: 100_000,
            stationary_tau_multiple: 200.0,
            seed: 1,
        }
    }
}

/// Log-log fit of one separation quantity against m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub quantity: &'static str,
    pub fit: LinearFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SeparationStats>,
    /// Present when the sweep has at least three values of m.
    pub fits: Vec<ScalingFit>,
}

/// Stream index for replicate `r` at sample size `m`; the all-ones
/// replicate slot is reserved for the stationary run.
pub fn replicate_stream_index(m: usize, r: u32) -> u64 {
    ((m as u64) << 32) | r as u64
}

const STATIONARY_SLOT: u32 = u32::MAX;

/// τ̂, ρ̂₁ and ρ̂₂ for every m in `cfg.m_list`. Replicates run in parallel on
/// the current rayon pool and are reduced in replicate order.
pub fn septime_sweep<S, T, P>(target: &T, proposal: &P, start: &S, cfg: &SweepConfig) -> Result<SweepTable>
where
    S: Clone + Debug + PartialEq + Send + Sync,
    T: Target<S> + Sync + ?Sized,
    P: Proposal<S> + Sync + ?Sized,
{
    if cfg.m_list.is_empty() {
        return Err(Error::InvalidParameter { name: "m_list", reason: "empty".into() });
    }
    if cfg.m_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter { name: "m_list", reason: "must be strictly increasing".into() });
    }
    if cfg.replicates as u64 >= STATIONARY_SLOT as u64 {
        return Err(Error::InvalidParameter { name: "replicates", reason: "too many".into() });
    }
    let mut rows = Vec::with_capacity(cfg.m_list.len());
    for &m in &cfg.m_list {
        let model = cfg.pairing.estimator(m)?;
        let times = (0..cfg.replicates as u32)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream(cfg.seed, replicate_stream_index(m, r));
                first_separation_time(
                    cfg.pairing,
                    target,
                    proposal,
                    &model,
                    start.clone(),
                    cfg.burn_in,
                    cfg.cap,
                    &mut rng,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let tau = tau_hat(&times, cfg.cap)?;
        let n = cfg.stationary_updates.max((cfg.stationary_tau_multiple * tau.value).ceil() as usize);
        let mut rng = stream(cfg.seed, replicate_stream_index(m, STATIONARY_SLOT));
        let run_cfg =
            CoupledRunConfig { burn_in: cfg.burn_in, n_updates: n, remerge: true, record_every: None, keep_gaps: true };
        let run = run_coupled(cfg.pairing, target, proposal, &model, start.clone(), &run_cfg, &mut rng)?;
        rows.push(SeparationStats {
            m,
            rho1: rho_hat1(&run.gaps).ok(),
            rho2: rho_hat2(&run.event_times).ok(),
            tau,
            n_events: run.event_times.len(),
            stationary_updates: n,
            clamped: run.clamped,
            event_intervals: event_intervals(&run.event_times),
        });
    }
    let fits = if rows.len() >= 3 { scaling_fits(&rows)? } else { Vec::new() };
    Ok(SweepTable { rows, fits })
}

type Quantity = (&'static str, fn(&SeparationStats) -> Option<f64>);

fn scaling_fits(rows: &[SeparationStats]) -> Result<Vec<ScalingFit>> {
    let mut fits = Vec::new();
    let quantities: [Quantity; 3] =
        [("tau", |r| Some(r.tau.value)), ("rho1", |r| r.rho1.map(|e| e.value)), ("rho2", |r| r.rho2.map(|e| e.value))];
    for (name, get) in quantities {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| get(r).filter(|v| v.is_finite() && *v > 0.0).map(|v| ((r.m as f64).ln(), v.ln())))
            .collect();
        if pts.len() >= 3 {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            fits.push(ScalingFit { quantity: name, fit: ols(&x, &y, 0.95)? });
        }
    }
    Ok(fits)
}
