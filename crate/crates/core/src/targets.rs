//! Built-in targets and proposals: the equal mixture of two correlated
//! bivariate normals, small discrete targets for exact oracles, the 3×3
//! Ising likelihood, and random-walk / independence / grid proposals.

use rand::RngCore;
use rand_distr::{Distribution, Open01, StandardNormal};

use crate::error::{Error, Result};
use crate::kernel::{Proposal, Support, Target};
use crate::rng::RawSource;
use crate::special::{normal_pdf, std_normal_cdf};

pub type Point2 = [f64; 2];

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Bivariate normal with precomputed inverse covariance and Cholesky factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian2 {
    mean: Point2,
    cov: [[f64; 2]; 2],
    inv: [[f64; 2]; 2],
    chol: [[f64; 2]; 2],
    log_norm: f64,
}

impl Gaussian2 {
    pub fn new(mean: Point2, cov: [[f64; 2]; 2]) -> Result<Self> {
        let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
        if !(cov[0][0] > 0.0 && det > 0.0) || cov[0][1] != cov[1][0] {
            return Err(Error::InvalidParameter {
                name: "cov",
                reason: format!("covariance {cov:?} is not symmetric positive definite"),
            });
        }
        let inv = [[cov[1][1] / det, -cov[0][1] / det], [-cov[1][0] / det, cov[0][0] / det]];
        let l00 = cov[0][0].sqrt();
        let l10 = cov[1][0] / l00;
        let l11 = (cov[1][1] - l10 * l10).sqrt();
        Ok(Self {
            mean,
            cov,
            inv,
            chol: [[l00, 0.0], [l10, l11]],
            log_norm: -(2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln(),
        })
    }

    pub fn mean(&self) -> Point2 {
        self.mean
    }

    pub fn cov(&self) -> [[f64; 2]; 2] {
        self.cov
    }

    pub fn det(&self) -> f64 {
        self.cov[0][0] * self.cov[1][1] - self.cov[0][1] * self.cov[1][0]
    }

    pub fn log_pdf(&self, x: &Point2) -> f64 {
        let d0 = x[0] - self.mean[0];
        let d1 = x[1] - self.mean[1];
        let quad = d0 * (self.inv[0][0] * d0 + self.inv[0][1] * d1) + d1 * (self.inv[1][0] * d0 + self.inv[1][1] * d1);
        self.log_norm - 0.5 * quad
    }

    /// Maps two standard normals to a draw from this law.
    pub fn from_standard(&self, z0: f64, z1: f64) -> Point2 {
        [self.mean[0] + self.chol[0][0] * z0, self.mean[1] + self.chol[1][0] * z0 + self.chol[1][1] * z1]
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let c = self.cov;
        Self::new(self.mean, [[c[0][0] * factor, c[0][1] * factor], [c[1][0] * factor, c[1][1] * factor]])
    }
}

/// Two-component bivariate normal mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureTarget {
    log_weights: [f64; 2],
    components: [Gaussian2; 2],
}

impl Default for MixtureTarget {
    /// Equal weights, means (3, 3) and (6, 6), unit variances and
    /// correlations +0.5 and −0.5.
    fn default() -> Self {
        let c1 = Gaussian2::new([3.0, 3.0], [[1.0, 0.5], [0.5, 1.0]]).unwrap();
        let c2 = Gaussian2::new([6.0, 6.0], [[1.0, -0.5], [-0.5, 1.0]]).unwrap();
        Self::new([0.5, 0.5], [c1, c2]).unwrap()
    }
}

impl MixtureTarget {
    pub fn new(weights: [f64; 2], components: [Gaussian2; 2]) -> Result<Self> {
        let total = weights[0] + weights[1];
        if !(weights[0] >= 0.0 && weights[1] >= 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "weights",
                reason: format!("{weights:?} must be a probability vector"),
            });
        }
        Ok(Self { log_weights: [weights[0].ln(), weights[1].ln()], components })
    }

    pub fn components(&self) -> &[Gaussian2; 2] {
        &self.components
    }

    pub fn weights(&self) -> [f64; 2] {
        [self.log_weights[0].exp(), self.log_weights[1].exp()]
    }

    /// Normalized mixture log-density, via log-sum-exp.
    pub fn log_pdf(&self, x: &Point2) -> f64 {
        log_sum_exp(
            self.log_weights[0] + self.components[0].log_pdf(x),
            self.log_weights[1] + self.components[1].log_pdf(x),
        )
    }

    /// Same mixture with every covariance multiplied by `factor`.
    pub fn inflated(&self, factor: f64) -> Result<Self> {
        Self::new(self.weights(), [self.components[0].scaled(factor)?, self.components[1].scaled(factor)?])
    }

    /// Draw from the mixture using a uniform in (0, 1) and two standard normals.
    pub fn from_raw(&self, u: f64, z0: f64, z1: f64) -> Point2 {
        let k = if u < self.weights()[0] { 0 } else { 1 };
        self.components[k].from_standard(z0, z1)
    }

    /// Law of θ₁ + θ₂: a two-component univariate normal mixture.
    pub fn sum_law(&self) -> [(f64, f64, f64); 2] {
        let w = self.weights();
        let f = |k: usize| {
            let g = &self.components[k];
            let c = g.cov();
            (w[k], g.mean()[0] + g.mean()[1], c[0][0] + c[1][1] + 2.0 * c[0][1])
        };
        [f(0), f(1)]
    }
}

impl Target<Point2> for MixtureTarget {
    fn log_density(&self, state: &Point2) -> f64 {
        self.log_pdf(state)
    }

    fn support(&self) -> Support {
        Support::ContinuousBox { dim: 2 }
    }

    fn exact_log_norm(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Density of θ₁ + θ₂ under the default mixture: 0.5·N(6, 3) + 0.5·N(12, 1).
pub fn sum_marginal_pdf(s: f64) -> f64 {
    0.5 * normal_pdf(s, 6.0, 3.0) + 0.5 * normal_pdf(s, 12.0, 1.0)
}

pub fn sum_marginal_cdf(s: f64) -> f64 {
    0.5 * std_normal_cdf((s - 6.0) / 3f64.sqrt()) + 0.5 * std_normal_cdf(s - 12.0)
}

/// Start for chains on the default mixture, midway between the component means.
pub const MIXTURE_START: Point2 = [4.5, 4.5];

/// Mean 9 and variance 0.5·(3 + 1) + 0.5·(9 + 9) = 11.
pub const SUM_MARGINAL_MEAN: f64 = 9.0;
pub const SUM_MARGINAL_VARIANCE: f64 = 11.0;

/// Finite target given by a probability vector over `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteTarget {
    probs: Vec<f64>,
    log_probs: Vec<f64>,
}

impl DiscreteTarget {
    pub const MAX_STATES: usize = 32;

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.len() > Self::MAX_STATES {
            return Err(Error::InvalidParameter {
                name: "probs",
                reason: format!("need between 1 and {} states, got {}", Self::MAX_STATES, probs.len()),
            });
        }
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "probs",
                reason: format!("not a probability vector (sum {sum})"),
            });
        }
        let log_probs = probs.iter().map(|p| p.ln()).collect();
        Ok(Self { probs, log_probs })
    }

    /// Normalizes `exp(log_weights)`.
    pub fn from_log_weights(log_weights: Vec<f64>) -> Result<Self> {
        let m = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = log_weights.iter().map(|l| (l - m).exp()).collect();
        let z: f64 = w.iter().sum();
        Self::new(w.into_iter().map(|x| x / z).collect())
    }

    pub fn n_states(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

impl Target<usize> for DiscreteTarget {
    fn log_density(&self, state: &usize) -> f64 {
        self.log_probs.get(*state).copied().unwrap_or(f64::NEG_INFINITY)
    }

    fn support(&self) -> Support {
        Support::DiscreteFinite { n_states: self.probs.len() }
    }

    fn exact_log_norm(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Proposes uniformly over all `n` states, the current one included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformDiscreteProposal {
    n: usize,
}

impl UniformDiscreteProposal {
    pub fn new(n: usize) -> Self {
        assert!(n > 0);
        Self { n }
    }
}

impl RawSource for UniformDiscreteProposal {
    fn fill_raw(&self, rng: &mut dyn RngCore, out: &mut Vec<f64>) {
        out.push(Open01.sample(rng));
    }
}

impl Proposal<usize> for UniformDiscreteProposal {
    fn propose(&self, _from: &usize, raw: &[f64]) -> usize {
        ((raw[0] * self.n as f64) as usize).min(self.n - 1)
    }

    fn log_q(&self, _from: &usize, to: &usize) -> f64 {
        if *to < self.n {
            -(self.n as f64).ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

/// Nearest-neighbour proposal on a cyclic grid of `n` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyclicGridProposal {
    n: usize,
}

impl CyclicGridProposal {
    pub fn new(n: usize) -> Self {
        assert!(n >= 3, "cyclic neighbour proposal needs at least 3 points");
        Self { n }
    }
}

impl RawSource for CyclicGridProposal {
    fn fill_raw(&self, rng: &mut dyn RngCore, out: &mut Vec<f64>) {
        out.push(Open01.sample(rng));
    }
}

impl Proposal<usize> for CyclicGridProposal {
    fn propose(&self, from: &usize, raw: &[f64]) -> usize {
        if raw[0] < 0.5 {
            (from + self.n - 1) % self.n
        } else {
            (from + 1) % self.n
        }
    }

    fn log_q(&self, from: &usize, to: &usize) -> f64 {
        let up = (from + 1) % self.n == *to;
        let down = (from + self.n - 1) % self.n == *to;
        if up || down {
            -(2f64).ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

/// Isotropic normal random walk in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomWalkProposal {
    scale: f64,
}

impl RandomWalkProposal {
    pub const DEFAULT_SCALE: f64 = 4.0;

    pub fn new(scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidParameter {
                name: "step_scale",
                reason: format!("must be positive, got {scale}"),
            });
        }
        Ok(Self { scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// Random-walk proposal with per-coordinate standard deviation `step_scale`.
pub fn rw_proposal(step_scale: f64) -> Result<RandomWalkProposal> {
    RandomWalkProposal::new(step_scale)
}

impl RawSource for RandomWalkProposal {
    fn fill_raw(&self, rng: &mut dyn RngCore, out: &mut Vec<f64>) {
        out.push(StandardNormal.sample(rng));
        out.push(StandardNormal.sample(rng));
    }
}

impl Proposal<Point2> for RandomWalkProposal {
    fn propose(&self, from: &Point2, raw: &[f64]) -> Point2 {
        [from[0] + self.scale * raw[0], from[1] + self.scale * raw[1]]
    }

    fn log_q(&self, from: &Point2, to: &Point2) -> f64 {
        let v = self.scale * self.scale;
        let d0 = to[0] - from[0];
        let d1 = to[1] - from[1];
        -0.5 * (d0 * d0 + d1 * d1) / v - (2.0 * std::f64::consts::PI * v).ln()
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

/// Independence sampler drawing each candidate from a fixed mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceProposal {
    law: MixtureTarget,
}

impl IndependenceProposal {
    pub const DEFAULT_INFLATION: f64 = 6.0;

    pub fn new(law: MixtureTarget) -> Self {
        Self { law }
    }

    pub fn law(&self) -> &MixtureTarget {
        &self.law
    }
}

/// Independence proposal from `spec`: the default mixture with covariances
/// multiplied by this inflation factor.
pub fn independence_proposal(inflation: f64) -> Result<IndependenceProposal> {
    if !(inflation > 0.0) {
        return Err(Error::InvalidParameter {
            name: "inflation",
            reason: format!("must be positive, got {inflation}"),
        });
    }
    Ok(IndependenceProposal::new(MixtureTarget::default().inflated(inflation)?))
}

impl RawSource for IndependenceProposal {
    fn fill_raw(&self, rng: &mut dyn RngCore, out: &mut Vec<f64>) {
        out.push(Open01.sample(rng));
        out.push(StandardNormal.sample(rng));
        out.push(StandardNormal.sample(rng));
    }
}

impl Proposal<Point2> for IndependenceProposal {
    fn propose(&self, _from: &Point2, raw: &[f64]) -> Point2 {
        self.law.from_raw(raw[0], raw[1], raw[2])
    }

    fn log_q(&self, _from: &Point2, to: &Point2) -> f64 {
        self.law.log_pdf(to)
    }

    fn is_symmetric(&self) -> bool {
        false
    }
}

/// Either planar proposal, selectable by name.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum PlanarProposal {
    RandomWalk(RandomWalkProposal),
    Independence(IndependenceProposal),
}

impl PlanarProposal {
    pub fn name(&self) -> &'static str {
        match self {
            PlanarProposal::RandomWalk(_) => "rw",
            PlanarProposal::Independence(_) => "is",
        }
    }
}

impl RawSource for PlanarProposal {
    fn fill_raw(&self, rng: &mut dyn RngCore, out: &mut Vec<f64>) {
        match self {
            PlanarProposal::RandomWalk(p) => p.fill_raw(rng, out),
            PlanarProposal::Independence(p) => p.fill_raw(rng, out),
        }
    }
}

impl Proposal<Point2> for PlanarProposal {
    fn propose(&self, from: &Point2, raw: &[f64]) -> Point2 {
        match self {
            PlanarProposal::RandomWalk(p) => p.propose(from, raw),
            PlanarProposal::Independence(p) => p.propose(from, raw),
        }
    }

    fn log_q(&self, from: &Point2, to: &Point2) -> f64 {
        match self {
            PlanarProposal::RandomWalk(p) => p.log_q(from, to),
            PlanarProposal::Independence(p) => p.log_q(from, to),
        }
    }

    fn is_symmetric(&self) -> bool {
        match self {
            PlanarProposal::RandomWalk(p) => p.is_symmetric(),
            PlanarProposal::Independence(p) => p.is_symmetric(),
        }
    }
}

pub const ISING_SITES: usize = 9;
pub const ISING_STATES: usize = 1 << ISING_SITES;

/// Spin configuration of the 3×3 lattice; bit i set means spin +1 at site i.
pub type IsingConfig = u16;

/// Σ over the 12 nearest-neighbour bonds (free boundary) of s_i s_j.
pub fn ising_bond_sum(config: IsingConfig) -> i32 {
    let spin = |i: usize| if config >> i & 1 == 1 { 1 } else { -1 };
    let mut s = 0;
    for r in 0..3 {
        for c in 0..3 {
            let i = 3 * r + c;
            if c < 2 {
                s += spin(i) * spin(i + 1);
            }
            if r < 2 {
                s += spin(i) * spin(i + 3);
            }
        }
    }
    s
}

/// 3×3 Ising likelihood L(θ, x) = c(θ) exp(θ · S(x)) over a fixed grid of
/// coupling values, with exact samplers built by enumeration.
#[derive(Debug, Clone)]
pub struct IsingGrid {
    thetas: Vec<f64>,
    bond_sums: Vec<i32>,
    log_norms: Vec<f64>,
    cdfs: Vec<Vec<f64>>,
}

impl IsingGrid {
    pub fn new(thetas: Vec<f64>) -> Result<Self> {
        if thetas.is_empty() || thetas.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter { name: "thetas", reason: "grid must be non-empty and finite".into() });
        }
        let bond_sums: Vec<i32> = (0..ISING_STATES).map(|x| ising_bond_sum(x as IsingConfig)).collect();
        let mut log_norms = Vec::with_capacity(thetas.len());
        let mut cdfs = Vec::with_capacity(thetas.len());
        for &t in &thetas {
            let logs: Vec<f64> = bond_sums.iter().map(|&s| t * s as f64).collect();
            let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
            let z: f64 = w.iter().sum();
            log_norms.push(m + z.ln());
            let mut acc = 0.0;
            let mut cdf: Vec<f64> = w
                .iter()
                .map(|x| {
                    acc += x / z;
                    acc
                })
                .collect();
            *cdf.last_mut().unwrap() = 1.0;
            cdfs.push(cdf);
        }
        Ok(Self { thetas, bond_sums, log_norms, cdfs })
    }

    /// The default testbed grid: θ ∈ {−0.8, −0.7, …, 0.8}.
    pub fn standard() -> Self {
        Self::new((0..17).map(|k| -0.8 + 0.1 * k as f64).collect()).unwrap()
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn theta(&self, k: usize) -> f64 {
        self.thetas[k]
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn bond_sum(&self, x: IsingConfig) -> i32 {
        self.bond_sums[x as usize]
    }

    /// log Σ_x exp(θ_k S(x)) = −log c(θ_k).
    pub fn log_partition(&self, k: usize) -> f64 {
        self.log_norms[k]
    }

    /// Normalized log L(θ_k, x).
    pub fn log_lik(&self, k: usize, x: IsingConfig) -> f64 {
        self.thetas[k] * self.bond_sum(x) as f64 - self.log_norms[k]
    }

    /// Exact draw from L(θ_k, ·) by inverting the enumerated cdf at `u`.
    pub fn sample_config(&self, k: usize, u: f64) -> IsingConfig {
        let cdf = &self.cdfs[k];
        cdf.partition_point(|&c| c < u).min(ISING_STATES - 1) as IsingConfig
    }
}

/// Ising posterior over the grid with a uniform prior and one observed
/// configuration; normalizers are known here by enumeration.
#[derive(Debug, Clone)]
pub struct IsingPosterior<'a> {
    pub grid: &'a IsingGrid,
    pub data: IsingConfig,
}

impl<'a> IsingPosterior<'a> {
    /// Exact posterior probabilities on the grid.
    pub fn exact(&self) -> Vec<f64> {
        let logs: Vec<f64> = (0..self.grid.len()).map(|k| self.log_density(&k)).collect();
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    }
}

impl<'a> Target<usize> for IsingPosterior<'a> {
    fn log_density(&self, k: &usize) -> f64 {
        if *k >= self.grid.len() {
            return f64::NEG_INFINITY;
        }
        self.grid.log_lik(*k, self.data)
    }

    fn support(&self) -> Support {
        Support::DiscreteFinite { n_states: self.grid.len() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_finite, QuadOptions};
    use std::f64::consts::PI;

    #[test]
    fn mixture_at_first_mean() {
        let t = MixtureTarget::default();
        // 1/(2π√0.75) for the first component; the second evaluated by hand:
        // d = (−3, −3), Σ₂⁻¹ = (4/3)[[1, .5], [.5, 1]] → quad = (4/3)(9 + 9 + 9) = 36
        let peak = 1.0 / (2.0 * PI * 0.75f64.sqrt());
        assert!((peak - 0.183_776_298_473_930_7).abs() < 1e-15);
        let cross = peak * (-18.0f64).exp();
        let expected = (0.5 * peak + 0.5 * cross).ln();
        assert!((t.log_pdf(&[3.0, 3.0]) - expected).abs() < 1e-14);
    }

    #[test]
    fn mixture_swap_symmetry() {
        let t = MixtureTarget::default();
        let [c1, c2] = t.components();
        for &(a, b) in &[(0.3, -1.2), (2.0, 0.5), (-0.7, -0.7)] {
            let l1 = c1.log_pdf(&[3.0 + a, 3.0 + b]);
            let l2 = c2.log_pdf(&[6.0 + b, 6.0 - a]);
            assert!((l1 - l2).abs() < 1e-13);
        }
    }

    #[test]
    fn mixture_far_tail_is_finite() {
        let t = MixtureTarget::default();
        let v = t.log_pdf(&[100.0, 100.0]);
        assert!(v.is_finite() && v < -1000.0);
    }

    #[test]
    fn mixture_integrates_to_one() {
        let t = MixtureTarget::default();
        let h = 0.05;
        let mut total = 0.0;
        let n = ((18.0 - -9.0) / h) as usize;
        for i in 0..n {
            for j in 0..n {
                let x = [-9.0 + (i as f64 + 0.5) * h, -9.0 + (j as f64 + 0.5) * h];
                total += t.log_pdf(&x).exp() * h * h;
            }
        }
        assert!((total - 1.0).abs() < 1e-4, "{total}");
        assert!((t.components()[0].det() - 0.75).abs() < 1e-15);
        assert!((t.components()[1].det() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn sum_law_matches_closed_form() {
        let law = MixtureTarget::default().sum_law();
        assert_eq!(law[0], (0.5, 6.0, 3.0));
        assert_eq!(law[1], (0.5, 12.0, 1.0));
        let at6 = sum_marginal_pdf(6.0);
        let main = 0.5 / (2.0 * PI * 3.0).sqrt();
        assert!(at6 > main && at6 - main < 1e-8);
        let mass = integrate_finite(sum_marginal_pdf, -40.0, 60.0, &[6.0, 12.0], QuadOptions::default()).unwrap();
        assert!((mass - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sum_marginal_modes() {
        // golden-section search near each mode
        let argmax = |mut a: f64, mut b: f64| {
            let g = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..200 {
                let c = b - g * (b - a);
                let d = a + g * (b - a);
                if sum_marginal_pdf(c) > sum_marginal_pdf(d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            0.5 * (a + b)
        };
        assert!((argmax(3.0, 9.0) - 6.0).abs() < 0.05);
        assert!((argmax(10.0, 14.0) - 12.0).abs() < 0.05);
    }

    #[test]
    fn rw_symmetric_and_is_state_free() {
        let rw = rw_proposal(0.7).unwrap();
        let a = [1.0, -2.0];
        let b = [0.3, 4.5];
        assert_eq!(rw.log_q(&a, &b), rw.log_q(&b, &a));
        let is = independence_proposal(2.0).unwrap();
        assert_eq!(is.log_q(&a, &b), is.log_q(&[50.0, 50.0], &b));
        assert!(rw_proposal(0.0).is_err());
    }

    #[test]
    fn ising_enumeration_facts() {
        assert_eq!(ising_bond_sum(0), 12);
        assert_eq!(ising_bond_sum((ISING_STATES - 1) as IsingConfig), 12);
        // checkerboard: every bond anti-aligned
        assert_eq!(ising_bond_sum(0b101_010_101), -12);
        let g = IsingGrid::new(vec![0.0]).unwrap();
        assert!((g.log_partition(0) - (ISING_STATES as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn ising_sampler_matches_enumeration() {
        use crate::rng::stream;
        use rand::Rng;
        let g = IsingGrid::new(vec![0.4]).unwrap();
        let mut rng = stream(3, 0);
        let n = 100_000;
        let mut counts = vec![0usize; ISING_STATES];
        for _ in 0..n {
            let u: f64 = rng.sample(Open01);
            counts[g.sample_config(0, u) as usize] += 1;
        }
        // Sampling noise alone puts the TV over all 512 states near 0.03 at
        // this n, so compare the law of the bond sum (25 values) instead.
        let mut emp = [0.0; 25];
        let mut exact = [0.0; 25];
        for x in 0..ISING_STATES {
            let k = (ising_bond_sum(x as IsingConfig) + 12) as usize;
            emp[k] += counts[x] as f64 / n as f64;
            exact[k] += g.log_lik(0, x as IsingConfig).exp();
        }
        let tv: f64 = 0.5 * emp.iter().zip(&exact).map(|(a, b)| (a - b).abs()).sum::<f64>();
        assert!(tv < 0.005, "tv={tv}");
        // every configuration is hit at its enumerated rate within 5 SE
        for x in 0..ISING_STATES {
            let p = g.log_lik(0, x as IsingConfig).exp();
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((counts[x] as f64 / n as f64 - p).abs() < 5.0 * se + 1e-12);
        }
    }

    #[test]
    fn default_random_walk_acceptance_rate() {
        use crate::kernel::s_step;
        use crate::rng::{stream, NoDraws, UpdateDraws};
        let t = MixtureTarget::default();
        let p = rw_proposal(RandomWalkProposal::DEFAULT_SCALE).unwrap();
        let mut rng = stream(1, 0);
        let mut d = UpdateDraws::new();
        let mut s = [4.5, 4.5];
        let n = 100_000;
        let mut accepted = 0;
        for _ in 0..n {
            d.redraw(&mut rng, &p, &NoDraws);
            let out = s_step(&t, &p, &s, &d).unwrap();
            accepted += out.accepted as usize;
            s = out.state;
        }
        let rate = accepted as f64 / n as f64;
        assert!((0.12..0.18).contains(&rate), "{rate}");
    }
}
