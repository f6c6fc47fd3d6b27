//! The named single-update algorithms for intractable target ratios:
//! naive plug-in, penalty, penalty with estimated variance, and the single
//! variable exchange algorithm.
//!
//! Estimators are centred on the exact log target ratio D computed from the
//! target, which makes exact and approximate chains comparable side by side.
//! For asymmetric proposals the Hastings term is added exactly on top of
//! the estimate.

use std::fmt::Debug;

use rand::RngCore;
use rand_distr::{Distribution, Open01};

use crate::error::{Error, Result};
use crate::estimators::EstimatorModel;
use crate::kernel::{finish, s_step, Proposal, Randomization, StepOutcome, Target};
use crate::rng::{RawSource, UpdateDraws};
use crate::targets::{IsingConfig, IsingGrid, ISING_STATES};

/// Split of the log Hastings ratio into the target part D and the proposal
/// part log q(θ', θ) − log q(θ, θ').
pub fn log_ratio_parts<S, T, P>(target: &T, proposal: &P, from: &S, to: &S) -> Result<(f64, f64)>
where
    S: Debug,
    T: Target<S> + ?Sized,
    P: Proposal<S> + ?Sized,
{
    let l0 = target.log_density(from);
    let l1 = target.log_density(to);
    if !l0.is_finite() {
        return Err(Error::NonFiniteDensity { state: format!("{from:?}") });
    }
    if !l1.is_finite() {
        return Err(Error::NonFiniteDensity { state: format!("{to:?}") });
    }
    let hastings = if proposal.is_symmetric() { 0.0 } else { proposal.log_q(to, from) - proposal.log_q(from, to) };
    Ok((l1 - l0, hastings))
}

/// Naive plug-in: accept with probability min{1, e^{x}}, x the raw estimate.
pub fn naive_step<S, T, P>(
    target: &T,
    proposal: &P,
    model: &EstimatorModel,
    from: &S,
    draws: &UpdateDraws,
) -> Result<StepOutcome<S>>
where
    S: Clone + Debug,
    T: Target<S> + ?Sized,
    P: Proposal<S> + ?Sized,
{
    let to = proposal.propose(from, &draws.proposal);
    let (d, hastings) = log_ratio_parts(target, proposal, from, &to)?;
    let x = model.estimate(d, &draws.estimator).value;
    Ok(finish(from, to, x + hastings, draws))
}

/// Penalty method: accept with probability min{1, e^{y − σ²/2m}} where y is
/// normal with mean D and variance σ²/m. For models that are not exactly
/// normal, y is the quantile-coupled value and σ² the asymptotic variance.
pub fn penalty_step<S, T, P>(
    target: &T,
    proposal: &P,
    model: &EstimatorModel,
    from: &S,
    draws: &UpdateDraws,
) -> Result<StepOutcome<S>>
where
    S: Clone + Debug,
    T: Target<S> + ?Sized,
    P: Proposal<S> + ?Sized,
{
    penalty_step_flagged(target, proposal, model, from, draws).map(|(out, _)| out)
}

/// [`penalty_step`], also reporting whether the coupling clamped a tail
/// probability.
pub fn penalty_step_flagged<S, T, P>(
    target: &T,
    proposal: &P,
    model: &EstimatorModel,
    from: &S,
    draws: &UpdateDraws,
) -> Result<(StepOutcome<S>, bool)>
where
    S: Clone + Debug,
    T: Target<S> + ?Sized,
    P: Proposal<S> + ?Sized,
{
    let to = proposal.propose(from, &draws.proposal);
    let (d, hastings) = log_ratio_parts(target, proposal, from, &to)?;
    let y = model.coupled_normal(d, &draws.estimator);
    let penalty = 0.5 * model.sigma2_asymptotic() / model.m() as f64;
    Ok((finish(from, to, y.value - penalty + hastings, draws), y.clamped))
}

/// Penalty method with σ² replaced by the sample variance s²: accept with
/// probability min{1, e^{y − s²/2m}}. Not exact.
pub fn penalty_estimate_step<S, T, P>(
    target: &T,
    proposal: &P,
    model: &EstimatorModel,
    from: &S,
    draws: &UpdateDraws,
) -> Result<StepOutcome<S>>
where
    S: Clone + Debug,
    T: Target<S> + ?Sized,
    P: Proposal<S> + ?Sized,
{
    let to = proposal.propose(from, &draws.proposal);
    let (d, hastings) = log_ratio_parts(target, proposal, from, &to)?;
    let est = model.estimate(d, &draws.estimator);
    let s2 = est.s2.ok_or(Error::InvalidParameter {
        name: "model",
        reason: format!("{} does not provide a sample variance", model.name()),
    })?;
    assert!(s2 > 0.0, "sample variance must be positive");
    Ok(finish(from, to, est.value - 0.5 * s2 / model.m() as f64 + hastings, draws))
}

/// The kernels selectable at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Standard,
    Naive,
    Penalty,
    PenaltyEstimate,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Standard => "standard",
            Algorithm::Naive => "naive",
            Algorithm::Penalty => "penalty",
            Algorithm::PenaltyEstimate => "penalty_estimate",
        }
    }

    pub fn step<S, T, P>(
        &self,
        target: &T,
        proposal: &P,
        model: &EstimatorModel,
        from: &S,
        draws: &UpdateDraws,
    ) -> Result<StepOutcome<S>>
    where
        S: Clone + Debug,
        T: Target<S> + ?Sized,
        P: Proposal<S> + ?Sized,
    {
        match self {
            Algorithm::Standard => s_step(target, proposal, from, draws),
            Algorithm::Naive => naive_step(target, proposal, model, from, draws),
            Algorithm::Penalty => penalty_step(target, proposal, model, from, draws),
            Algorithm::PenaltyEstimate => penalty_estimate_step(target, proposal, model, from, draws),
        }
    }
}

/// Runs `burn_in + n` updates of `algorithm` and returns the last `n` states.
#[allow(clippy::too_many_arguments)]
pub fn run_chain<S, T, P>(
    algorithm: Algorithm,
    target: &T,
    proposal: &P,
    model: &EstimatorModel,
    start: S,
    burn_in: usize,
    n: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<S>>
where
    S: Clone + Debug,
    T: Target<S> + ?Sized,
    P: Proposal<S> + ?Sized,
{
    let mut draws = UpdateDraws::new();
    let mut state = start;
    let mut out = Vec::with_capacity(n);
    for i in 0..burn_in + n {
        draws.redraw(rng, proposal, model);
        state = algorithm.step(target, proposal, model, &state, &draws)?.state;
        if i >= burn_in {
            out.push(state.clone());
        }
    }
    Ok(out)
}

/// Whether synthetic data live in a finite enumerable set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataSpace {
    DiscreteFinite { n_states: usize },
    Continuous,
}

/// Likelihood with an intractable normalizer: only log L̃ is visible to the
/// sampler, plus an exact simulator for L(θ, ·).
pub trait LikelihoodModel<S>: RawSource {
    type Data: Clone + Debug;

    fn log_unnorm_lik(&self, theta: &S, data: &Self::Data) -> f64;

    fn sample_data(&self, theta: &S, raw: &[f64]) -> Self::Data;

    fn data_space(&self) -> DataSpace;
}

impl RawSource for IsingGrid {
    fn fill_raw(&self, rng: &mut dyn RngCore, out: &mut Vec<f64>) {
        out.push(Open01.sample(rng));
    }
}

impl LikelihoodModel<usize> for IsingGrid {
    type Data = IsingConfig;

    fn log_unnorm_lik(&self, k: &usize, x: &IsingConfig) -> f64 {
        self.theta(*k) * self.bond_sum(*x) as f64
    }

    fn sample_data(&self, k: &usize, raw: &[f64]) -> IsingConfig {
        self.sample_config(*k, raw[0])
    }

    fn data_space(&self) -> DataSpace {
        DataSpace::DiscreteFinite { n_states: ISING_STATES }
    }
}

/// log α_E before truncation at zero, for synthetic data `x`.
pub fn sve_log_ratio<S, Pr, L, P>(
    prior: &Pr,
    lik: &L,
    data: &L::Data,
    proposal: &P,
    from: &S,
    to: &S,
    x: &L::Data,
) -> Result<f64>
where
    S: Debug,
    Pr: Target<S> + ?Sized,
    L: LikelihoodModel<S> + ?Sized,
    P: Proposal<S> + ?Sized,
{
    let (dp, hastings) = log_ratio_parts(prior, proposal, from, to)?;
    let new_side = lik.log_unnorm_lik(to, data) - lik.log_unnorm_lik(to, x);
    let old_side = lik.log_unnorm_lik(from, data) - lik.log_unnorm_lik(from, x);
    Ok(dp + (new_side - old_side) + hastings)
}

/// Single variable exchange: simulate x ~ L(θ', ·) and accept with
/// probability min{1, [p(θ')L̃(θ', d) / p(θ)L̃(θ, d)] · [L̃(θ, x) / L̃(θ', x)]}.
///
/// Raw inputs: the proposal's, then the likelihood simulator's.
pub fn sve_step<S, Pr, L, P>(
    prior: &Pr,
    lik: &L,
    data: &L::Data,
    proposal: &P,
    from: &S,
    draws: &UpdateDraws,
) -> Result<StepOutcome<S>>
where
    S: Clone + Debug,
    Pr: Target<S> + ?Sized,
    L: LikelihoodModel<S> + ?Sized,
    P: Proposal<S> + ?Sized,
{
    let to = proposal.propose(from, &draws.proposal);
    let x = lik.sample_data(&to, &draws.estimator);
    let lr = sve_log_ratio(prior, lik, data, proposal, from, &to, &x)?;
    Ok(finish(from, to, lr, draws))
}

/// The exchange algorithm viewed as a randomized acceptance:
/// ξ(x; θ, θ') = L(θ', x) with the identity involution. Densities are the
/// normalized ones, known here by enumeration.
#[derive(Debug, Clone, Copy)]
pub struct IsingExchangeRandomization<'a> {
    pub grid: &'a IsingGrid,
}

impl<'a> RawSource for IsingExchangeRandomization<'a> {
    fn fill_raw(&self, rng: &mut dyn RngCore, out: &mut Vec<f64>) {
        self.grid.fill_raw(rng, out);
    }
}

impl<'a> Randomization<usize> for IsingExchangeRandomization<'a> {
    type Aux = IsingConfig;

    fn sample_aux(&self, _from: &usize, to: &usize, raw: &[f64]) -> IsingConfig {
        self.grid.sample_config(*to, raw[0])
    }

    fn log_aux_density(&self, x: &IsingConfig, _from: &usize, to: &usize) -> f64 {
        self.grid.log_lik(*to, *x)
    }

    fn involute(&self, x: &IsingConfig) -> IsingConfig {
        *x
    }

    fn log_abs_jacobian(&self, _x: &IsingConfig) -> f64 {
        0.0
    }

    fn in_support(&self, x: &IsingConfig) -> bool {
        (*x as usize) < ISING_STATES
    }

    fn describe_support(&self) -> String {
        format!("{{0, …, {}}}", ISING_STATES - 1)
    }
}

/// All 512 configurations, for enumeration.
pub fn all_ising_configs() -> Vec<IsingConfig> {
    (0..ISING_STATES as IsingConfig).collect()
}

/// Adds a per-θ constant to log L̃; the exchange algorithm must not notice.
#[derive(Debug, Clone)]
pub struct OffsetLikelihood<'a> {
    pub inner: &'a IsingGrid,
    pub offsets: Vec<f64>,
}

impl<'a> RawSource for OffsetLikelihood<'a> {
    fn fill_raw(&self, rng: &mut dyn RngCore, out: &mut Vec<f64>) {
        self.inner.fill_raw(rng, out);
    }
}

impl<'a> LikelihoodModel<usize> for OffsetLikelihood<'a> {
    type Data = IsingConfig;

    fn log_unnorm_lik(&self, k: &usize, x: &IsingConfig) -> f64 {
        self.inner.log_unnorm_lik(k, x) + self.offsets[*k]
    }

    fn sample_data(&self, k: &usize, raw: &[f64]) -> IsingConfig {
        self.inner.sample_data(k, raw)
    }

    fn data_space(&self) -> DataSpace {
        self.inner.data_space()
    }
}
