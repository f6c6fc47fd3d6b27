//! Numerical checks of the balance and ordering properties of randomized
//! kernels: pointwise and averaged detailed balance, Peskun ordering against
//! the standard kernel, the ε lower bound on Pr(Ξ ≥ 1), and minorization on
//! small discrete spaces through exact transition matrices.

use std::fmt::Debug;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::kernel::{
    avg_accept_prob, randomized_log_ratio, std_log_ratio, Proposal, Randomization, ScalarRandomization, Target,
};
use crate::special::std_normal_cdf;

/// Floor on densities in relative residuals.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// Largest residual over a set of test points and where it occurred.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport {
    pub max_abs_residual: f64,
    pub n_points: usize,
    pub worst_case: Option<String>,
}

impl BalanceReport {
    fn new() -> Self {
        Self { max_abs_residual: 0.0, n_points: 0, worst_case: None }
    }

    fn record(&mut self, residual: f64, at: impl FnOnce() -> String) {
        self.n_points += 1;
        // NaN residuals count as failures
        if residual.is_nan() || residual > self.max_abs_residual {
            self.max_abs_residual = if residual.is_nan() { f64::INFINITY } else { residual };
            self.worst_case = Some(at());
        }
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_abs_residual < tolerance
    }
}

/// |a − b| / max(a, b, floor) for a = e^{la}, b = e^{lb}, without leaving
/// log space until the end.
pub fn log_relative_residual(la: f64, lb: f64) -> f64 {
    if la == f64::NEG_INFINITY && lb == f64::NEG_INFINITY {
        return 0.0;
    }
    let hi = la.max(lb);
    let lo = la.min(lb);
    let diff = -(lo - hi).exp_m1();
    let floor = DENSITY_FLOOR.ln();
    if hi >= floor {
        diff
    } else {
        diff * (hi - floor).exp()
    }
}

/// A (θ, θ', x) test point.
pub type Triple<S, A> = (S, S, A);

/// Draws `n` triples: θ from `state`, θ' from the proposal, x ~ ξ(·; θ, θ').
pub fn sample_triples<S, P, R>(
    n: usize,
    mut state: impl FnMut(&mut dyn RngCore) -> S,
    proposal: &P,
    spec: &R,
    rng: &mut dyn RngCore,
) -> Vec<Triple<S, R::Aux>>
where
    P: Proposal<S> + ?Sized,
    R: Randomization<S> + ?Sized,
{
    let mut raw = Vec::new();
    (0..n)
        .map(|_| {
            let from = state(rng);
            raw.clear();
            proposal.fill_raw(rng, &mut raw);
            let to = proposal.propose(&from, &raw);
            raw.clear();
            spec.fill_raw(rng, &mut raw);
            let x = spec.sample_aux(&from, &to, &raw);
            (from, to, x)
        })
        .collect()
}

/// Pointwise balance
/// π(θ)q(θ,θ')ξ(x;θ,θ')α_ξ(θ,θ';x) = π(θ')q(θ',θ)ξ(f(x);θ',θ)α_ξ(θ',θ;f(x))|f'(x)|
/// as a relative residual.
pub fn check_vdb<S, T, P, R>(target: &T, proposal: &P, spec: &R, points: &[Triple<S, R::Aux>]) -> Result<BalanceReport>
where
    S: Debug,
    T: Target<S> + ?Sized,
    P: Proposal<S> + ?Sized,
    R: Randomization<S> + ?Sized,
{
    check_vdb_with(target, proposal, spec, points, |log_h, x, from, to| randomized_log_ratio(spec, log_h, x, from, to))
}

/// [`check_vdb`] with the acceptance log-ratio supplied by the caller, so a
/// kernel can be checked against the (ξ, f) pair it claims to implement.
pub fn check_vdb_with<S, T, P, R, F>(
    target: &T,
    proposal: &P,
    spec: &R,
    points: &[Triple<S, R::Aux>],
    log_ratio: F,
) -> Result<BalanceReport>
where
    S: Debug,
    T: Target<S> + ?Sized,
    P: Proposal<S> + ?Sized,
    R: Randomization<S> + ?Sized,
    F: Fn(f64, &R::Aux, &S, &S) -> Result<f64>,
{
    let mut report = BalanceReport::new();
    for (from, to, x) in points {
        let fx = spec.involute(x);
        let lh_fwd = std_log_ratio(target, proposal, from, to)?;
        let lh_back = std_log_ratio(target, proposal, to, from)?;
        let fwd = target.log_density(from)
            + proposal.log_q(from, to)
            + spec.log_aux_density(x, from, to)
            + log_ratio(lh_fwd, x, from, to)?.min(0.0);
        let back_ratio =
            if spec.in_support(&fx) { log_ratio(lh_back, &fx, to, from)?.min(0.0) } else { f64::NEG_INFINITY };
        let back = target.log_density(to)
            + proposal.log_q(to, from)
            + spec.log_aux_density(&fx, to, from)
            + back_ratio
            + spec.log_abs_jacobian(x);
        report.record(log_relative_residual(fwd, back), || format!("({from:?}, {to:?}, {x:?})"));
    }
    Ok(report)
}

/// Averaged balance π(θ)q(θ,θ')α(θ,θ') = π(θ')q(θ',θ)α(θ',θ) over `pairs`,
/// as a relative residual, for any averaged acceptance `alpha`.
pub fn check_db_average<S, T, P, A>(target: &T, proposal: &P, pairs: &[(S, S)], alpha: A) -> Result<BalanceReport>
where
    S: Debug,
    T: Target<S> + ?Sized,
    P: Proposal<S> + ?Sized,
    A: Fn(&S, &S) -> Result<f64>,
{
    let mut report = BalanceReport::new();
    for (a, b) in pairs {
        let fwd = target.log_density(a) + proposal.log_q(a, b) + alpha(a, b)?.ln();
        let back = target.log_density(b) + proposal.log_q(b, a) + alpha(b, a)?.ln();
        report.record(log_relative_residual(fwd, back), || format!("({a:?}, {b:?})"));
    }
    Ok(report)
}

/// Averaged acceptance of `spec` by quadrature, as a closure for
/// [`check_db_average`] and the matrix builders.
pub fn quadrature_alpha<'a, S, T, P, R>(
    target: &'a T,
    proposal: &'a P,
    spec: &'a R,
) -> impl Fn(&S, &S) -> Result<f64> + 'a
where
    S: Debug,
    T: Target<S> + ?Sized,
    P: Proposal<S> + ?Sized,
    R: ScalarRandomization<S> + ?Sized,
{
    move |a, b| {
        let log_h = std_log_ratio(target, proposal, a, b)?;
        avg_accept_prob(spec, log_h, a, b)
    }
}

/// Standard acceptance min(1, h) as a closure.
pub fn standard_alpha<'a, S, T, P>(target: &'a T, proposal: &'a P) -> impl Fn(&S, &S) -> Result<f64> + 'a
where
    S: Debug,
    T: Target<S> + ?Sized,
    P: Proposal<S> + ?Sized,
{
    move |a, b| Ok(std_log_ratio(target, proposal, a, b)?.min(0.0).exp())
}

/// E min(1, e^{μ + Z}) for Z ~ N(0, v): the averaged acceptance when a
/// normal log-ratio estimate is plugged in uncorrected.
pub fn naive_normal_avg_accept(log_h: f64, var: f64) -> f64 {
    let s = var.sqrt();
    std_normal_cdf(log_h / s) + (log_h + 0.5 * var).exp() * std_normal_cdf(-log_h / s - s)
}

/// E min(1, e^{μ − v/2 + Z}) for Z ~ N(0, v): the penalty method's averaged
/// acceptance, Φ(a/s) + e^{μ} Φ(−a/s − s) with a = μ − v/2.
pub fn penalty_avg_accept(log_h: f64, var: f64) -> f64 {
    naive_normal_avg_accept(log_h - 0.5 * var, var)
}

/// Peskun comparison of averaged against standard acceptance.
#[derive(Debug, Clone, PartialEq)]
pub struct PeskunReport {
    /// max over pairs of α_ξ − min(1, h); must not exceed 1e-8.
    pub max_violation: f64,
    /// max over pairs of min(1, h) − α_ξ.
    pub max_gap: f64,
    pub n_pairs: usize,
    pub worst_case: Option<String>,
}

pub fn peskun_check<S, T, P, R>(spec: &R, target: &T, proposal: &P, pairs: &[(S, S)]) -> Result<PeskunReport>
where
    S: Debug,
    T: Target<S> + ?Sized,
    P: Proposal<S> + ?Sized,
    R: ScalarRandomization<S> + ?Sized,
{
    let mut rep =
        PeskunReport { max_violation: f64::NEG_INFINITY, max_gap: f64::NEG_INFINITY, n_pairs: 0, worst_case: None };
    for (a, b) in pairs {
        let log_h = std_log_ratio(target, proposal, a, b)?;
        let std = log_h.min(0.0).exp();
        let r = avg_accept_prob(spec, log_h, a, b)?;
        let v = r - std;
        if v > rep.max_violation {
            rep.max_violation = v;
            rep.worst_case = Some(format!("({a:?}, {b:?})"));
        }
        rep.max_gap = rep.max_gap.max(-v);
        rep.n_pairs += 1;
    }
    Ok(rep)
}

/// log Ξ(x) = log ξ(f(x); θ', θ) − log ξ(x; θ, θ') + log |f'(x)|.
pub fn log_xi_ratio<S, R>(spec: &R, x: &R::Aux, from: &S, to: &S) -> f64
where
    R: Randomization<S> + ?Sized,
{
    let fx = spec.involute(x);
    spec.log_aux_density(&fx, to, from) - spec.log_aux_density(x, from, to) + spec.log_abs_jacobian(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairEpsilon<S> {
    pub from: S,
    pub to: S,
    pub estimate: f64,
    pub se: f64,
    /// Below the caller's floor: near a boundary where Pr(Ξ ≥ 1) may vanish.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonReport<S> {
    /// Smallest per-pair estimate.
    pub epsilon: f64,
    pub se: f64,
    pub per_pair: Vec<PairEpsilon<S>>,
}

/// Monte Carlo estimate of Pr(Ξ(X) ≥ 1), X ~ ξ(·; θ, θ'), for each pair.
pub fn epsilon_bound<S, R>(
    spec: &R,
    pairs: &[(S, S)],
    n_mc: usize,
    floor: f64,
    rng: &mut dyn RngCore,
) -> Result<EpsilonReport<S>>
where
    S: Clone,
    R: Randomization<S> + ?Sized,
{
    if pairs.is_empty() || n_mc == 0 {
        return Err(Error::InvalidParameter { name: "pairs", reason: "need at least one pair and one draw".into() });
    }
    let mut raw = Vec::new();
    let mut per_pair = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let mut hits = 0usize;
        for _ in 0..n_mc {
            raw.clear();
            spec.fill_raw(rng, &mut raw);
            let x = spec.sample_aux(a, b, &raw);
            if log_xi_ratio(spec, &x, a, b) >= 0.0 {
                hits += 1;
            }
        }
        let p = hits as f64 / n_mc as f64;
        let se = (p * (1.0 - p) / n_mc as f64).sqrt();
        per_pair.push(PairEpsilon { from: a.clone(), to: b.clone(), estimate: p, se, flagged: p < floor });
    }
    let worst = per_pair.iter().min_by(|x, y| x.estimate.total_cmp(&y.estimate)).expect("nonempty");
    Ok(EpsilonReport { epsilon: worst.estimate, se: worst.se, per_pair })
}

pub type Matrix = Vec<Vec<f64>>;

/// Transition matrix on {0, …, n−1}: off-diagonal entries q(i, j)·α(i, j),
/// diagonal the remaining mass (rejections plus proposals of i itself).
pub fn transition_matrix<P, A>(n: usize, proposal: &P, alpha: A) -> Result<Matrix>
where
    P: Proposal<usize> + ?Sized,
    A: Fn(&usize, &usize) -> Result<f64>,
{
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut off = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let lq = proposal.log_q(&i, &j);
            if lq == f64::NEG_INFINITY {
                continue;
            }
            let v = lq.exp() * alpha(&i, &j)?;
            m[i][j] = v;
            off += v;
        }
        m[i][i] = 1.0 - off;
        let sum: f64 = m[i].iter().sum();
        if m[i][i] < -1e-12 || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NotStochastic { row: i, sum: off });
        }
    }
    Ok(m)
}

/// Solves πP = π, Σπ = 1 by Gaussian elimination with partial pivoting.
pub fn stationary_distribution(p: &Matrix) -> Result<Vec<f64>> {
    let n = p.len();
    // rows of (Pᵀ − I), with the last equation replaced by Σπ = 1
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| p[j][i] - if i == j { 1.0 } else { 0.0 }).collect();
            row.push(0.0);
            row
        })
        .collect();
    a[n - 1] = vec![1.0; n + 1];
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).expect("nonempty");
        if a[piv][col].abs() < 1e-300 {
            return Err(Error::Numeric("singular stationarity system".into()));
        }
        a.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..=n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    Ok((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinorizationReport {
    pub holds: bool,
    /// max over entries of ε·P[i][j] − P_ξ[i][j].
    pub max_deficit: f64,
    pub worst_entry: (usize, usize),
}

/// Elementwise check of P_ξ ≥ ε P, diagonal included, to 1e-9.
pub fn minorization_check(p_xi: &Matrix, p: &Matrix, epsilon: f64) -> MinorizationReport {
    let mut rep = MinorizationReport { holds: true, max_deficit: f64::NEG_INFINITY, worst_entry: (0, 0) };
    for (i, (rx, r)) in p_xi.iter().zip(p).enumerate() {
        for (j, (a, b)) in rx.iter().zip(r).enumerate() {
            let d = epsilon * b - a;
            if d > rep.max_deficit {
                rep.max_deficit = d;
                rep.worst_entry = (i, j);
            }
        }
    }
    rep.holds = rep.max_deficit <= 1e-9;
    rep
}
