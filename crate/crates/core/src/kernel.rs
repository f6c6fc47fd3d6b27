//! Metropolis–Hastings acceptance arithmetic and the single-update kernels:
//! the standard rule and the rule whose acceptance is randomized by an
//! auxiliary draw paired through an involution.
//!
//! Everything is done in log space; a proposal is accepted when
//! `ln V <= min(0, log_ratio)`.

use std::fmt::Debug;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::quadrature::{self, Interval, QuadOptions};
use crate::rng::{RawSource, UpdateDraws};
use crate::special::ln_normal_pdf;

/// Declared support of a target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    ContinuousBox { dim: usize },
    DiscreteFinite { n_states: usize },
}

/// Unnormalized log-density log π̃ over states of type `S`.
///
/// Implementations must be pure: the same state always yields the same bits.
pub trait Target<S> {
    fn log_density(&self, state: &S) -> f64;

    fn support(&self) -> Support;

    /// Known log normalizer, for oracle checks only.
    fn exact_log_norm(&self) -> Option<f64> {
        None
    }
}

/// Hastings proposal. `propose` is a deterministic function of the raw
/// inputs produced by [`RawSource::fill_raw`].
pub trait Proposal<S>: RawSource {
    fn propose(&self, from: &S, raw: &[f64]) -> S;

    /// log q(from, to); `-inf` where the proposal density vanishes.
    fn log_q(&self, from: &S, to: &S) -> f64;

    fn is_symmetric(&self) -> bool;
}

/// f with f(f(x)) = x, together with log |f'(x)|.
#[derive(Clone, Copy)]
pub struct Involution(InvolutionKind);

#[derive(Clone, Copy)]
enum InvolutionKind {
    Identity,
    Reflection { center: f64 },
    Mobius { a: f64, b: f64, c: f64 },
    Custom { apply: fn(f64) -> f64, log_abs_deriv: fn(f64) -> f64 },
}

impl Involution {
    pub const IDENTITY: Involution = Involution(InvolutionKind::Identity);

    /// f(x) = center - x.
    pub fn reflection(center: f64) -> Self {
        Involution(InvolutionKind::Reflection { center })
    }

    /// f(x) = (a x + b) / (c x - a), requires a² + bc ≠ 0.
    pub fn mobius(a: f64, b: f64, c: f64) -> Result<Self> {
        let det = a * a + b * c;
        if !det.is_finite() || det == 0.0 {
            return Err(Error::InvalidParameter {
                name: "mobius",
                reason: format!("a^2 + bc must be nonzero, got {det}"),
            });
        }
        Ok(Involution(InvolutionKind::Mobius { a, b, c }))
    }

    /// Arbitrary map. Not checked; used for negative controls and
    /// user-supplied pairings.
    pub fn custom(apply: fn(f64) -> f64, log_abs_deriv: fn(f64) -> f64) -> Self {
        Involution(InvolutionKind::Custom { apply, log_abs_deriv })
    }

    pub fn apply(&self, x: f64) -> f64 {
        match self.0 {
            InvolutionKind::Identity => x,
            InvolutionKind::Reflection { center } => center - x,
            InvolutionKind::Mobius { a, b, c } => (a * x + b) / (c * x - a),
            InvolutionKind::Custom { apply, .. } => apply(x),
        }
    }

    pub fn log_abs_deriv(&self, x: f64) -> f64 {
        match self.0 {
            InvolutionKind::Identity | InvolutionKind::Reflection { .. } => 0.0,
            InvolutionKind::Mobius { a, b, c } => (a * a + b * c).abs().ln() - 2.0 * (c * x - a).abs().ln(),
            InvolutionKind::Custom { log_abs_deriv, .. } => log_abs_deriv(x),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.0, InvolutionKind::Identity)
    }
}

impl Debug for Involution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            InvolutionKind::Identity => write!(f, "Identity"),
            InvolutionKind::Reflection { center } => write!(f, "Reflection({center})"),
            InvolutionKind::Mobius { a, b, c } => write!(f, "Mobius({a}, {b}, {c})"),
            InvolutionKind::Custom { .. } => write!(f, "Custom"),
        }
    }
}

/// The pair (ξ, f): a density for the auxiliary draw X given (θ, θ') and an
/// involution of its support.
pub trait Randomization<S>: RawSource {
    type Aux: Clone + Debug;

    /// Draws X ~ ξ(·; from, to) from this source's raw inputs.
    fn sample_aux(&self, from: &S, to: &S, raw: &[f64]) -> Self::Aux;

    /// log ξ(x; from, to) with respect to Lebesgue or counting measure.
    fn log_aux_density(&self, x: &Self::Aux, from: &S, to: &S) -> f64;

    fn involute(&self, x: &Self::Aux) -> Self::Aux;

    fn log_abs_jacobian(&self, x: &Self::Aux) -> f64;

    fn in_support(&self, x: &Self::Aux) -> bool;

    fn describe_support(&self) -> String;
}

/// Scalar randomizations additionally expose their support interval and a
/// location/scale hint so the averaged acceptance can be integrated.
pub trait ScalarRandomization<S>: Randomization<S, Aux = f64> {
    fn support(&self) -> Interval;

    fn location_scale(&self, from: &S, to: &S) -> (f64, f64);
}

/// Outcome of one update.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<S> {
    pub state: S,
    pub accepted: bool,
    /// log of the acceptance probability actually used, always ≤ 0.
    pub log_alpha: f64,
}

impl<S> StepOutcome<S> {
    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }
}

/// `min(0, log_ratio)` and the decision against `ln V`.
#[inline]
pub fn decide(log_ratio: f64, log_v: f64) -> (bool, f64) {
    let log_alpha = if log_ratio >= 0.0 { 0.0 } else { log_ratio };
    (log_alpha >= 0.0 || log_v <= log_alpha, log_alpha)
}

fn checked_log_density<S: Debug, T: Target<S> + ?Sized>(target: &T, s: &S) -> Result<f64> {
    let v = target.log_density(s);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteDensity { state: format!("{s:?}") })
    }
}

/// log h(θ, θ') = log π̃(θ') − log π̃(θ) + log q(θ', θ) − log q(θ, θ').
///
/// The proposal terms are skipped for symmetric proposals, where they cancel.
pub fn std_log_ratio<S, T, P>(target: &T, proposal: &P, from: &S, to: &S) -> Result<f64>
where
    S: Debug,
    T: Target<S> + ?Sized,
    P: Proposal<S> + ?Sized,
{
    let l0 = checked_log_density(target, from)?;
    let l1 = checked_log_density(target, to)?;
    let mut r = l1 - l0;
    if !proposal.is_symmetric() {
        let fwd = proposal.log_q(from, to);
        let back = proposal.log_q(to, from);
        if !fwd.is_finite() || !back.is_finite() {
            return Err(Error::NonFiniteDensity { state: format!("proposal {from:?} -> {to:?}") });
        }
        r += back - fwd;
    }
    Ok(r)
}

/// log h_ξ(θ, θ'; x) = log h + log ξ(f(x); θ', θ) − log ξ(x; θ, θ') + log |f'(x)|.
pub fn randomized_log_ratio<S, R>(spec: &R, log_h: f64, x: &R::Aux, from: &S, to: &S) -> Result<f64>
where
    R: Randomization<S> + ?Sized,
{
    if !spec.in_support(x) {
        return Err(Error::OutsideSupport { value: format!("{x:?}"), support: spec.describe_support() });
    }
    let fx = spec.involute(x);
    let correction = spec.log_aux_density(&fx, to, from) - spec.log_aux_density(x, from, to) + spec.log_abs_jacobian(x);
    Ok(log_h + correction)
}

/// One update of the randomized-acceptance algorithm.
pub fn r_step<S, T, P, R>(target: &T, proposal: &P, spec: &R, from: &S, draws: &UpdateDraws) -> Result<StepOutcome<S>>
where
    S: Clone + Debug,
    T: Target<S> + ?Sized,
    P: Proposal<S> + ?Sized,
    R: Randomization<S> + ?Sized,
{
    let to = proposal.propose(from, &draws.proposal);
    let log_h = std_log_ratio(target, proposal, from, &to)?;
    let x = spec.sample_aux(from, &to, &draws.estimator);
    let lr = randomized_log_ratio(spec, log_h, &x, from, &to)?;
    Ok(finish(from, to, lr, draws))
}

/// One update of the standard Metropolis–Hastings algorithm.
pub fn s_step<S, T, P>(target: &T, proposal: &P, from: &S, draws: &UpdateDraws) -> Result<StepOutcome<S>>
where
    S: Clone + Debug,
    T: Target<S> + ?Sized,
    P: Proposal<S> + ?Sized,
{
    let to = proposal.propose(from, &draws.proposal);
    let log_h = std_log_ratio(target, proposal, from, &to)?;
    Ok(finish(from, to, log_h, draws))
}

#[inline]
pub(crate) fn finish<S: Clone>(from: &S, to: S, log_ratio: f64, draws: &UpdateDraws) -> StepOutcome<S> {
    let (accepted, log_alpha) = decide(log_ratio, draws.log_accept_uniform());
    StepOutcome { state: if accepted { to } else { from.clone() }, accepted, log_alpha }
}

/// α_ξ(θ, θ') = ∫ ξ(x; θ, θ') min(1, h_ξ(θ, θ'; x)) dx by adaptive quadrature,
/// split where h_ξ crosses 1. Absolute tolerance 1e-8 or an error.
pub fn avg_accept_prob<S, R>(spec: &R, log_h: f64, from: &S, to: &S) -> Result<f64>
where
    R: ScalarRandomization<S> + ?Sized,
{
    let support = spec.support();
    let (center, scale) = spec.location_scale(from, to);
    let integrand = |x: f64| {
        if !support.contains(x) {
            return 0.0;
        }
        let lx = spec.log_aux_density(&x, from, to);
        if lx == f64::NEG_INFINITY {
            return 0.0;
        }
        let lr = randomized_log_ratio(spec, log_h, &x, from, to).unwrap_or(f64::NEG_INFINITY);
        (lx + lr.min(0.0)).exp()
    };
    let kink = |x: f64| {
        if !support.contains(x) {
            return f64::NAN;
        }
        randomized_log_ratio(spec, log_h, &x, from, to).unwrap_or(f64::NAN)
    };
    let v = quadrature::integrate(integrand, support, center, scale, kink, QuadOptions::default())?;
    Ok(v.clamp(0.0, 1.0))
}

/// Averaged acceptance for a randomization over a finite auxiliary space, by
/// exhaustive enumeration.
pub fn avg_accept_prob_enumerated<S, R>(spec: &R, aux_states: &[R::Aux], log_h: f64, from: &S, to: &S) -> Result<f64>
where
    R: Randomization<S> + ?Sized,
{
    let mut total = 0.0;
    for x in aux_states {
        let lx = spec.log_aux_density(x, from, to);
        if lx == f64::NEG_INFINITY {
            continue;
        }
        let lr = randomized_log_ratio(spec, log_h, x, from, to)?;
        total += (lx + lr.min(0.0)).exp();
    }
    Ok(total)
}

/// The example randomization: ξ(x; θ, θ') = N(x; D, 1) with D = log π(θ')/π(θ)
/// and the identity involution, giving acceptance min{1, (π(θ')/π(θ))^{1-2x}}.
#[derive(Clone, Copy)]
pub struct ToyRandomization<'a, T: ?Sized> {
    target: &'a T,
    involution: Involution,
}

/// Builds the example randomization for `target`.
pub fn toy_r_spec<T: ?Sized>(target: &T) -> ToyRandomization<'_, T> {
    ToyRandomization { target, involution: Involution::IDENTITY }
}

impl<'a, T: ?Sized> ToyRandomization<'a, T> {
    /// Replaces the involution. Anything other than the identity breaks the
    /// balance identity; this exists for negative controls.
    pub fn with_involution(mut self, involution: Involution) -> Self {
        self.involution = involution;
        self
    }

    fn log_ratio<S>(&self, from: &S, to: &S) -> f64
    where
        T: Target<S>,
    {
        self.target.log_density(to) - self.target.log_density(from)
    }
}

impl<'a, T: ?Sized> RawSource for ToyRandomization<'a, T> {
    fn fill_raw(&self, rng: &mut dyn RngCore, out: &mut Vec<f64>) {
        out.push(StandardNormal.sample(rng));
    }
}

impl<'a, S, T: Target<S> + ?Sized> Randomization<S> for ToyRandomization<'a, T> {
    type Aux = f64;

    fn sample_aux(&self, from: &S, to: &S, raw: &[f64]) -> f64 {
        self.log_ratio(from, to) + raw[0]
    }

    fn log_aux_density(&self, x: &f64, from: &S, to: &S) -> f64 {
        ln_normal_pdf(*x, self.log_ratio(from, to), 1.0)
    }

    fn involute(&self, x: &f64) -> f64 {
        self.involution.apply(*x)
    }

    fn log_abs_jacobian(&self, x: &f64) -> f64 {
        self.involution.log_abs_deriv(*x)
    }

    fn in_support(&self, x: &f64) -> bool {
        !x.is_nan()
    }

    fn describe_support(&self) -> String {
        Interval::REAL_LINE.to_string()
    }
}

impl<'a, S, T: Target<S> + ?Sized> ScalarRandomization<S> for ToyRandomization<'a, T> {
    fn support(&self) -> Interval {
        Interval::REAL_LINE
    }

    fn location_scale(&self, from: &S, to: &S) -> (f64, f64) {
        (self.log_ratio(from, to), 1.0)
    }
}

/// The penalty-method randomization: ξ = N(0, σ²/m) independent of (θ, θ')
/// and f(x) = σ²/m − x, so that h_ξ = h · e^{x − σ²/2m}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyRandomization {
    variance: f64,
}

impl PenaltyRandomization {
    pub fn new(sigma2: f64, m: usize) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidParameter { name: "sigma2", reason: format!("must be positive, got {sigma2}") });
        }
        if m == 0 {
            return Err(Error::InvalidParameter { name: "m", reason: "must be positive".into() });
        }
        Ok(Self { variance: sigma2 / m as f64 })
    }

    /// σ²/m.
    pub fn variance(&self) -> f64 {
        self.variance
    }
}

impl RawSource for PenaltyRandomization {
    fn fill_raw(&self, rng: &mut dyn RngCore, out: &mut Vec<f64>) {
        out.push(StandardNormal.sample(rng));
    }
}

impl<S> Randomization<S> for PenaltyRandomization {
    type Aux = f64;

    fn sample_aux(&self, _from: &S, _to: &S, raw: &[f64]) -> f64 {
        self.variance.sqrt() * raw[0]
    }

    fn log_aux_density(&self, x: &f64, _from: &S, _to: &S) -> f64 {
        ln_normal_pdf(*x, 0.0, self.variance)
    }

    fn involute(&self, x: &f64) -> f64 {
        self.variance - x
    }

    fn log_abs_jacobian(&self, _x: &f64) -> f64 {
        0.0
    }

    fn in_support(&self, x: &f64) -> bool {
        !x.is_nan()
    }

    fn describe_support(&self) -> String {
        Interval::REAL_LINE.to_string()
    }
}

impl<S> ScalarRandomization<S> for PenaltyRandomization {
    fn support(&self) -> Interval {
        Interval::REAL_LINE
    }

    fn location_scale(&self, _from: &S, _to: &S) -> (f64, f64) {
        (0.0, self.variance.sqrt())
    }
}

/// A normal ξ(x) = N(x; mean, var) not depending on (θ, θ'), with any
/// involution. With the identity this is the trivial randomization.
#[derive(Debug, Clone, Copy)]
pub struct FixedNormalRandomization {
    pub mean: f64,
    pub var: f64,
    pub involution: Involution,
}

impl FixedNormalRandomization {
    pub fn trivial() -> Self {
        Self { mean: 0.0, var: 1.0, involution: Involution::IDENTITY }
    }
}

impl RawSource for FixedNormalRandomization {
    fn fill_raw(&self, rng: &mut dyn RngCore, out: &mut Vec<f64>) {
        out.push(StandardNormal.sample(rng));
    }
}

impl<S> Randomization<S> for FixedNormalRandomization {
    type Aux = f64;

    fn sample_aux(&self, _from: &S, _to: &S, raw: &[f64]) -> f64 {
        self.mean + self.var.sqrt() * raw[0]
    }

    fn log_aux_density(&self, x: &f64, _from: &S, _to: &S) -> f64 {
        ln_normal_pdf(*x, self.mean, self.var)
    }

    fn involute(&self, x: &f64) -> f64 {
        self.involution.apply(*x)
    }

    fn log_abs_jacobian(&self, x: &f64) -> f64 {
        self.involution.log_abs_deriv(*x)
    }

    fn in_support(&self, x: &f64) -> bool {
        !x.is_nan()
    }

    fn describe_support(&self) -> String {
        Interval::REAL_LINE.to_string()
    }
}

impl<S> ScalarRandomization<S> for FixedNormalRandomization {
    fn support(&self) -> Interval {
        Interval::REAL_LINE
    }

    fn location_scale(&self, _from: &S, _to: &S) -> (f64, f64) {
        (self.mean, self.var.sqrt())
    }
}

/// ξ(x) = rate · e^{−rate·x} on (0, ∞), independent of (θ, θ'). Pairs
/// naturally with Möbius involutions of the form x ↦ k/x.
#[derive(Debug, Clone, Copy)]
pub struct FixedExponentialRandomization {
    pub rate: f64,
    pub involution: Involution,
}

impl RawSource for FixedExponentialRandomization {
    fn fill_raw(&self, rng: &mut dyn RngCore, out: &mut Vec<f64>) {
        out.push(rand_distr::Exp1.sample(rng));
    }
}

impl<S> Randomization<S> for FixedExponentialRandomization {
    type Aux = f64;

    fn sample_aux(&self, _from: &S, _to: &S, raw: &[f64]) -> f64 {
        raw[0] / self.rate
    }

    fn log_aux_density(&self, x: &f64, _from: &S, _to: &S) -> f64 {
        if *x > 0.0 {
            self.rate.ln() - self.rate * x
        } else {
            f64::NEG_INFINITY
        }
    }

    fn involute(&self, x: &f64) -> f64 {
        self.involution.apply(*x)
    }

    fn log_abs_jacobian(&self, x: &f64) -> f64 {
        self.involution.log_abs_deriv(*x)
    }

    fn in_support(&self, x: &f64) -> bool {
        *x > 0.0
    }

    fn describe_support(&self) -> String {
        Interval::new(0.0, f64::INFINITY).to_string()
    }
}

impl<S> ScalarRandomization<S> for FixedExponentialRandomization {
    fn support(&self) -> Interval {
        Interval::new(0.0, f64::INFINITY)
    }

    fn location_scale(&self, _from: &S, _to: &S) -> (f64, f64) {
        (0.0, 1.0 / self.rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::special::std_normal_cdf;
    use crate::targets::{DiscreteTarget, UniformDiscreteProposal};

    fn discrete3() -> (DiscreteTarget, UniformDiscreteProposal) {
        (DiscreteTarget::new(vec![0.2, 0.3, 0.5]).unwrap(), UniformDiscreteProposal::new(3))
    }

    fn draws(v: f64) -> UpdateDraws {
        UpdateDraws { proposal: vec![], estimator: vec![], accept_uniform: v }
    }

    #[test]
    fn std_log_ratio_discrete() {
        let (t, p) = discrete3();
        let r = std_log_ratio(&t, &p, &0usize, &2usize).unwrap();
        assert!((r - (0.5f64 / 0.2).ln()).abs() < 1e-15);
        assert!((r - 0.916_290_731_874_155).abs() < 1e-12);
        assert_eq!(std_log_ratio(&t, &p, &1usize, &1usize).unwrap(), 0.0);
    }

    #[test]
    fn std_log_ratio_rejects_non_finite_state() {
        let t = DiscreteTarget::new(vec![0.0, 1.0]).unwrap();
        let p = UniformDiscreteProposal::new(2);
        let err = std_log_ratio(&t, &p, &0usize, &1usize).unwrap_err();
        assert!(matches!(err, Error::NonFiniteDensity { ref state } if state == "0"));
    }

    #[test]
    fn identity_randomization_leaves_ratio_unchanged() {
        let spec = FixedNormalRandomization::trivial();
        for &x in &[-3.0, 0.0, 0.25, 7.0] {
            assert_eq!(randomized_log_ratio(&spec, 0.37, &x, &0usize, &1usize).unwrap(), 0.37);
        }
    }

    #[test]
    fn penalty_randomization_closed_form() {
        let spec = PenaltyRandomization::new(1.0, 4).unwrap();
        let lr = randomized_log_ratio(&spec, 0.1, &0.5, &0usize, &1usize).unwrap();
        assert!((lr - (0.1 + 0.375)).abs() < 1e-14);
    }

    #[test]
    fn toy_randomization_closed_form() {
        // π(θ')/π(θ) = 2
        let t = DiscreteTarget::new(vec![1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let spec = toy_r_spec(&t);
        let d = 2f64.ln();
        let lr = randomized_log_ratio(&spec, d, &1.0, &0usize, &1usize).unwrap();
        assert!((lr + 2f64.ln()).abs() < 1e-14);
        // x = 1/2 gives exponent zero
        let lr = randomized_log_ratio(&spec, d, &0.5, &0usize, &1usize).unwrap();
        assert!(lr.abs() < 1e-15);
        // ratio e, x = 1 gives h_ξ = e^{-1}
        let t = DiscreteTarget::from_log_weights(vec![0.0, 1.0]).unwrap();
        let spec = toy_r_spec(&t);
        let lr = randomized_log_ratio(&spec, 1.0, &1.0, &0usize, &1usize).unwrap();
        assert!((lr + 1.0).abs() < 1e-14);
    }

    #[test]
    fn toy_zero_ratio_always_accepts() {
        let t = DiscreteTarget::new(vec![0.5, 0.5]).unwrap();
        let spec = toy_r_spec(&t);
        for &x in &[-10.0, -1.0, 0.0, 3.0, 100.0] {
            let lr = randomized_log_ratio(&spec, 0.0, &x, &0usize, &1usize).unwrap();
            assert_eq!(decide(lr, (0.999f64).ln()).1, 0.0);
        }
    }

    #[test]
    fn outside_support_is_domain_error() {
        let spec = FixedExponentialRandomization { rate: 1.0, involution: Involution::mobius(0.0, 1.0, 1.0).unwrap() };
        let err = randomized_log_ratio(&spec, 0.0, &-1.0, &0usize, &0usize).unwrap_err();
        assert!(matches!(err, Error::OutsideSupport { .. }));
    }

    #[test]
    fn decision_rule_examples() {
        let ln06 = 0.6f64.ln();
        assert_eq!(decide(ln06, 0.5f64.ln()), (true, ln06));
        assert!(!decide(ln06, 0.7f64.ln()).0);
        assert_eq!(decide(0.3, (1.0 - 1e-16f64).ln()), (true, 0.0));
        // s_step: π(θ')/π(θ) = 0.5 with V = 0.6 rejects
        assert!(!decide(0.5f64.ln(), 0.6f64.ln()).0);
    }

    #[test]
    fn rejected_step_keeps_state() {
        let t = DiscreteTarget::new(vec![0.6, 0.4]).unwrap();
        // proposal raw: index 1 is always proposed
        let p = UniformDiscreteProposal::new(2);
        let mut d = draws(0.7);
        d.proposal.push(0.75);
        let out = s_step(&t, &p, &0usize, &d).unwrap();
        assert_eq!(out.state, 0);
        assert!(!out.accepted);
        assert!((out.alpha() - 4.0 / 6.0).abs() < 1e-15);
        d.accept_uniform = 0.6;
        let out = s_step(&t, &p, &0usize, &d).unwrap();
        assert_eq!(out.state, 1);
    }

    #[test]
    fn equal_density_gives_unit_alpha() {
        let t = DiscreteTarget::new(vec![0.5, 0.5]).unwrap();
        let p = UniformDiscreteProposal::new(2);
        let mut d = draws(0.999);
        d.proposal.push(0.9);
        let out = s_step(&t, &p, &0usize, &d).unwrap();
        assert_eq!(out.log_alpha, 0.0);
        assert!(out.accepted);
    }

    #[test]
    fn trivial_r_step_matches_s_step_bitwise() {
        let (t, p) = discrete3();
        let spec = FixedNormalRandomization::trivial();
        let mut rng = stream(11, 0);
        let mut state = 0usize;
        for _ in 0..5000 {
            let d = UpdateDraws::sample(&mut rng, &p, &spec);
            let a = s_step(&t, &p, &state, &d).unwrap();
            let b = r_step(&t, &p, &spec, &state, &d).unwrap();
            assert_eq!(a.state, b.state);
            assert_eq!(a.log_alpha.to_bits(), b.log_alpha.to_bits());
            state = a.state;
        }
    }

    #[test]
    fn mobius_involution_round_trip() {
        let f = Involution::mobius(0.5, 2.0, 1.0).unwrap();
        for &x in &[-4.0, -0.3, 0.1, 1.7, 9.0] {
            let y = f.apply(x);
            assert!((f.apply(y) - x).abs() <= 1e-12 * x.abs().max(1.0));
            assert!((f.log_abs_deriv(y) + f.log_abs_deriv(x)).abs() < 1e-10);
        }
        assert!(Involution::mobius(1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn avg_accept_trivial_equals_standard() {
        let spec = FixedNormalRandomization::trivial();
        for &lh in &[-3.0, -0.5, 0.0, 1.2] {
            let a = avg_accept_prob(&spec, lh, &0usize, &1usize).unwrap();
            assert!((a - f64::min(1.0, lh.exp())).abs() < 1e-10, "{a} vs {lh}");
        }
    }

    /// E[min(1, e^{D + X − c/2})], X ~ N(0, c): integrating the truncated
    /// lognormal mean gives Φ(μ/s) + e^{D} Φ(−μ/s − s) with μ = D − c/2, s = √c.
    fn penalty_closed_form(d: f64, c: f64) -> f64 {
        let mu = d - 0.5 * c;
        let s = c.sqrt();
        std_normal_cdf(mu / s) + d.exp() * std_normal_cdf(-mu / s - s)
    }

    #[test]
    fn avg_accept_penalty_matches_closed_form() {
        for &(sigma2, m) in &[(1.0, 4usize), (4.0, 1), (0.5, 50), (32.0, 8)] {
            let spec = PenaltyRandomization::new(sigma2, m).unwrap();
            for &d in &[-6.0, -1.0, -0.1, 0.0, 0.3, 2.5] {
                let a = avg_accept_prob(&spec, d, &0usize, &1usize).unwrap();
                let exact = penalty_closed_form(d, sigma2 / m as f64);
                assert!((a - exact).abs() < 1e-9, "σ²={sigma2} m={m} D={d}: {a} vs {exact}");
                assert!(a <= f64::min(1.0, d.exp()) + 1e-8);
            }
        }
    }

    #[test]
    fn r_step_alpha_used_is_reported() {
        let t = DiscreteTarget::new(vec![0.5, 0.5]).unwrap();
        let p = UniformDiscreteProposal::new(2);
        let spec = PenaltyRandomization::new(1.0, 1).unwrap();
        // raw normal z = 0 gives x = 0, h_ξ = e^{-1/2}
        let d = UpdateDraws { proposal: vec![0.9], estimator: vec![0.0], accept_uniform: 0.5 };
        let out = r_step(&t, &p, &spec, &0usize, &d).unwrap();
        assert!((out.log_alpha + 0.5).abs() < 1e-15);
        assert!(out.accepted);
    }
}
