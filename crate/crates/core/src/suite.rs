//! The shipped battery of balance, ordering and minorization checks, with
//! negative controls that must fail.

use rand::RngCore;
use rand_distr::{Distribution, Open01, StandardNormal};

use crate::algorithms::{all_ising_configs, IsingExchangeRandomization};
use crate::error::Result;
use crate::kernel::{avg_accept_prob_enumerated, std_log_ratio, toy_r_spec, Involution, PenaltyRandomization};
use crate::rng::stream;
use crate::special::std_normal_cdf;
use crate::targets::{
    rw_proposal, CyclicGridProposal, DiscreteTarget, IsingConfig, IsingGrid, IsingPosterior, MixtureTarget, Point2,
    RandomWalkProposal, UniformDiscreteProposal,
};
use crate::verify::{
    check_db_average, check_vdb, check_vdb_with, epsilon_bound, minorization_check, naive_normal_avg_accept,
    peskun_check, quadrature_alpha, sample_triples, standard_alpha, stationary_distribution, total_variation,
    transition_matrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    /// Passes when value < threshold.
    Below,
    /// Passes when value > threshold.
    Above,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub pass: bool,
    /// Negative controls are expected to fail.
    pub control: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, value: f64, threshold: f64, comparison: Comparison, detail: String) -> Self {
        let pass = match comparison {
            Comparison::Below => value < threshold,
            Comparison::Above => value > threshold,
        };
        Self { name, value, threshold, comparison, pass, control: false, detail }
    }

    fn control(mut self) -> Self {
        self.control = true;
        self
    }

    /// A check is satisfied when it passes, a control when it fails.
    pub fn as_expected(&self) -> bool {
        self.pass != self.control
    }
}

/// Sizes of the randomized parts of the suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteSizes {
    pub vdb_triples: usize,
    pub peskun_pairs: usize,
    pub epsilon_draws: usize,
}

impl Default for SuiteSizes {
    fn default() -> Self {
        Self { vdb_triples: 1000, peskun_pairs: 10_000, epsilon_draws: 20_000 }
    }
}

pub const THREE_STATE: [f64; 3] = [0.2, 0.3, 0.5];
pub const FIVE_STATE: [f64; 5] = [0.1, 0.15, 0.2, 0.25, 0.3];
/// Observed configuration for the Ising checks.
pub const ISING_DATA: IsingConfig = 0b110_100_011;

fn mixture_draw(t: &MixtureTarget) -> impl FnMut(&mut dyn RngCore) -> Point2 + '_ {
    move |rng| {
        let u: f64 = Open01.sample(rng);
        let z0: f64 = StandardNormal.sample(rng);
        let z1: f64 = StandardNormal.sample(rng);
        t.from_raw(u, z0, z1)
    }
}

fn mixture_pairs(t: &MixtureTarget, p: &RandomWalkProposal, n: usize, rng: &mut dyn RngCore) -> Vec<(Point2, Point2)> {
    let spec = toy_r_spec(t);
    sample_triples(n, mixture_draw(t), p, &spec, rng).into_iter().map(|(a, b, _)| (a, b)).collect()
}

fn off_diagonal_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect()
}

/// Runs every check; with `negative_controls` the controls are appended.
pub fn run_suite(seed: u64, sizes: SuiteSizes, negative_controls: bool) -> Result<Vec<CheckResult>> {
    use Comparison::*;
    let mut out = Vec::new();
    let mixture = MixtureTarget::default();
    let rw = rw_proposal(RandomWalkProposal::DEFAULT_SCALE)?;
    let toy_mix = toy_r_spec(&mixture);
    let penalty = PenaltyRandomization::new(1.0, 8)?;

    // pointwise balance
    let mut rng = stream(seed, 1);
    let pts = sample_triples(sizes.vdb_triples, mixture_draw(&mixture), &rw, &toy_mix, &mut rng);
    let rep = check_vdb(&mixture, &rw, &toy_mix, &pts)?;
    out.push(CheckResult::new("vdb_toy", rep.max_abs_residual, 1e-10, Below, format!("{} triples", rep.n_points)));

    let pen_pts = sample_triples(sizes.vdb_triples, mixture_draw(&mixture), &rw, &penalty, &mut rng);
    let rep = check_vdb(&mixture, &rw, &penalty, &pen_pts)?;
    out.push(CheckResult::new("vdb_penalty", rep.max_abs_residual, 1e-10, Below, format!("{} triples", rep.n_points)));

    let grid = IsingGrid::standard();
    let post = IsingPosterior { grid: &grid, data: ISING_DATA };
    let cyc = CyclicGridProposal::new(grid.len());
    let sve = IsingExchangeRandomization { grid: &grid };
    let n_grid = grid.len() as u32;
    let sve_pts = sample_triples(sizes.vdb_triples, |r| (r.next_u32() % n_grid) as usize, &cyc, &sve, &mut rng);
    let rep = check_vdb(&post, &cyc, &sve, &sve_pts)?;
    out.push(CheckResult::new("vdb_exchange", rep.max_abs_residual, 1e-10, Below, format!("{} triples", rep.n_points)));

    // averaged balance
    let three = DiscreteTarget::new(THREE_STATE.to_vec())?;
    let u3 = UniformDiscreteProposal::new(3);
    let toy3 = toy_r_spec(&three);
    let rep = check_db_average(&three, &u3, &off_diagonal_pairs(3), quadrature_alpha(&three, &u3, &toy3))?;
    out.push(CheckResult::new("db_average_toy", rep.max_abs_residual, 1e-8, Below, "3-state target, all pairs".into()));

    let configs = all_ising_configs();
    let ising_pairs: Vec<(usize, usize)> =
        (0..grid.len()).flat_map(|k| [(k, (k + 1) % grid.len()), (k, (k + grid.len() - 1) % grid.len())]).collect();
    let enum_alpha = |a: &usize, b: &usize| {
        let log_h = std_log_ratio(&post, &cyc, a, b)?;
        avg_accept_prob_enumerated(&sve, &configs, log_h, a, b)
    };
    let rep = check_db_average(&post, &cyc, &ising_pairs, enum_alpha)?;
    out.push(CheckResult::new(
        "db_average_exchange",
        rep.max_abs_residual,
        1e-12,
        Below,
        format!("{} neighbour pairs, 512 data states", rep.n_points),
    ));

    // Peskun ordering
    let pairs = mixture_pairs(&mixture, &rw, sizes.peskun_pairs, &mut rng);
    let rep = peskun_check(&toy_mix, &mixture, &rw, &pairs)?;
    out.push(CheckResult::new("peskun_toy", rep.max_violation, 1e-8, Below, format!("{} pairs", rep.n_pairs)));
    let wide = PenaltyRandomization::new(4.0, 1)?;
    let rep = peskun_check(&wide, &mixture, &rw, &pairs)?;
    out.push(CheckResult::new("peskun_penalty", rep.max_violation, 1e-8, Below, format!("{} pairs", rep.n_pairs)));
    out.push(CheckResult::new("peskun_penalty_gap", rep.max_gap, 0.01, Above, "σ²/m = 4".into()));

    // ε bound and minorization on five states
    let five = DiscreteTarget::new(FIVE_STATE.to_vec())?;
    let u5 = UniformDiscreteProposal::new(5);
    let toy5 = toy_r_spec(&five);
    let mut erng = stream(seed, 2);
    let eps = epsilon_bound(&toy5, &off_diagonal_pairs(5), sizes.epsilon_draws, 1e-3, &mut erng)?;
    let p_std = transition_matrix(5, &u5, standard_alpha(&five, &u5))?;
    let p_xi = transition_matrix(5, &u5, quadrature_alpha(&five, &u5, &toy5))?;
    let mrep = minorization_check(&p_xi, &p_std, eps.epsilon);
    out.push(CheckResult::new(
        "minorization_toy",
        mrep.max_deficit,
        1e-9,
        Below,
        format!("ε̂ = {:.4} ± {:.4}", eps.epsilon, eps.se),
    ));
    let pen_eps = epsilon_bound(&penalty, &[(0usize, 1usize)], sizes.epsilon_draws, 1e-3, &mut erng)?;
    let exact = std_normal_cdf(-1.0 / (2.0 * 8f64.sqrt()));
    out.push(CheckResult::new(
        "epsilon_penalty",
        (pen_eps.epsilon - exact).abs() / pen_eps.se,
        4.0,
        Below,
        format!("estimate {:.4}, closed form {exact:.4}", pen_eps.epsilon),
    ));

    // stationarity of exact and naive matrices
    let pen5 = PenaltyRandomization::new(1.0, 4)?;
    let p_pen = transition_matrix(5, &u5, quadrature_alpha(&five, &u5, &pen5))?;
    let tv = total_variation(&stationary_distribution(&p_pen)?, five.probs());
    out.push(CheckResult::new("stationary_penalty", tv, 1e-8, Below, "5-state target, σ²/m = 1/4".into()));
    let naive_tv = |m: f64| -> Result<f64> {
        let alpha = |a: &usize, b: &usize| Ok(naive_normal_avg_accept(std_log_ratio(&five, &u5, a, b)?, 1.0 / m));
        let p = transition_matrix(5, &u5, alpha)?;
        Ok(total_variation(&stationary_distribution(&p)?, five.probs()))
    };
    let tvs = [naive_tv(4.0)?, naive_tv(16.0)?, naive_tv(64.0)?];
    // positive when the bias shrinks strictly with m
    let shrink = (tvs[0] - tvs[1]).min(tvs[1] - tvs[2]);
    out.push(CheckResult::new(
        "naive_bias_shrinks",
        shrink,
        0.0,
        Above,
        format!("TV at m = 4, 16, 64: {:.3e}, {:.3e}, {:.3e}", tvs[0], tvs[1], tvs[2]),
    ));

    if negative_controls {
        let broken = toy_r_spec(&mixture).with_involution(Involution::custom(|x| x + 1.0, |_| 0.0));
        let rep = check_vdb(&mixture, &rw, &broken, &pts)?;
        out.push(
            CheckResult::new(
                "vdb_broken_involution",
                rep.max_abs_residual,
                1e-10,
                Below,
                rep.worst_case.unwrap_or_default(),
            )
            .control(),
        );
        let rep = check_vdb_with(&mixture, &rw, &penalty, &pen_pts, |log_h, x, _, _| Ok(log_h + x))?;
        out.push(
            CheckResult::new(
                "vdb_missing_penalty_term",
                rep.max_abs_residual,
                1e-10,
                Below,
                rep.worst_case.unwrap_or_default(),
            )
            .control(),
        );
        let naive3 = |a: &usize, b: &usize| Ok(naive_normal_avg_accept(std_log_ratio(&three, &u3, a, b)?, 1.0));
        let rep = check_db_average(&three, &u3, &off_diagonal_pairs(3), naive3)?;
        out.push(
            CheckResult::new("db_average_naive", rep.max_abs_residual, 1e-8, Below, rep.worst_case.unwrap_or_default())
                .control(),
        );
        out.push(CheckResult::new("stationary_naive", tvs[0], 1e-8, Below, "5-state target, m = 4".into()).control());
        let too_big = minorization_check(&p_xi, &p_std, 1.0);
        out.push(
            CheckResult::new("minorization_epsilon_one", too_big.max_deficit, 1e-9, Below, "ε = 1".into()).control(),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_behaves() {
        let sizes = SuiteSizes { vdb_triples: 100, peskun_pairs: 200, epsilon_draws: 5000 };
        let results = run_suite(1, sizes, true).unwrap();
        for r in &results {
            assert!(r.as_expected(), "{r:?}");
        }
        assert!(results.iter().any(|r| r.control));
    }
}
