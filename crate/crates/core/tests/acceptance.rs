//! End-to-end acceptance runs. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use rmcmc::algorithms::{all_ising_configs, run_chain, sve_step, Algorithm, OffsetLikelihood};
use rmcmc::coupling::{
    first_separation_time, replicate_stream_index, run_coupled, septime_sweep, tau_hat, CoupledRunConfig, Pairing,
    SweepConfig, SweepTable, DEFAULT_BURN_IN, DEFAULT_CAP,
};
use rmcmc::diagnostics::{autocorr_time, batch_means_se, bootstrap_ci, ecdf_sup_distance, mean, thin, variance};
use rmcmc::estimators::{sample_values, EstimatorModel};
use rmcmc::kernel::Proposal;
use rmcmc::rng::{stream, RawSource, UpdateDraws};
use rmcmc::suite::{run_suite, SuiteSizes, ISING_DATA};
use rmcmc::targets::{
    independence_proposal, rw_proposal, sum_marginal_cdf, CyclicGridProposal, DiscreteTarget, IndependenceProposal,
    IsingGrid, MixtureTarget, Point2, RandomWalkProposal, MIXTURE_START,
};
use statrs::distribution::{ContinuousCDF, Normal};

const SEED: u64 = 20_240_501;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// 0.5·N(6, 3) + 0.5·N(12, 1): component means and variances of θ1 + θ2
// worked out by hand from the mixture parameters.
fn sum_law_cdf(s: f64) -> f64 {
    let a = Normal::new(6.0, 3f64.sqrt()).unwrap();
    let b = Normal::new(12.0, 1.0).unwrap();
    0.5 * a.cdf(s) + 0.5 * b.cdf(s)
}

const SUM_LAW_VARIANCE: f64 = 0.5 * 3.0 + 0.5 * 1.0 + 0.25 * (12.0 - 6.0) * (12.0 - 6.0);

fn mixture_sums(alg: Algorithm, m: usize, n: usize, index: u64) -> Vec<f64> {
    let target = MixtureTarget::default();
    let proposal = rw_proposal(RandomWalkProposal::DEFAULT_SCALE).unwrap();
    let model = Pairing::PenaltyVsNaive.estimator(m).unwrap();
    let mut rng = stream(SEED, index);
    let chain = run_chain(alg, &target, &proposal, &model, MIXTURE_START, DEFAULT_BURN_IN, n, &mut rng).unwrap();
    chain.iter().map(|p| p[0] + p[1]).collect()
}

fn penalty_exactness() -> Outcome {
    let sums = mixture_sums(Algorithm::Penalty, 8, 200_000, 1);
    let iat = autocorr_time(&sums);
    let kept = thin(&sums, iat.ceil() as usize);
    let d = ecdf_sup_distance(&kept, sum_law_cdf);
    let lib_gap =
        (0..=180).map(|i| (sum_marginal_cdf(i as f64 * 0.1) - sum_law_cdf(i as f64 * 0.1)).abs()).fold(0.0, f64::max);
    outcome(
        d < 0.02 && lib_gap < 1e-9,
        format!("sup-distance {d:.4} < 0.02 on {} draws thinned by {:.1}", kept.len(), iat),
    )
}

fn naive_overdispersion() -> Outcome {
    let stats = |m: usize, index: u64| {
        let sums = mixture_sums(Algorithm::Naive, m, 200_000, index);
        let kept = thin(&sums, autocorr_time(&sums).ceil() as usize);
        let ci = bootstrap_ci(&kept, variance, 2000, 0.95, &mut stream(SEED, 100 + index));
        (variance(&kept), ci)
    };
    let (v8, ci8) = stats(8, 2);
    let (v64, ci64) = stats(64, 3);
    let true_var = SUM_LAW_VARIANCE;
    let pass = ci8.0 > true_var && (v64 - true_var) < (v8 - true_var);
    outcome(
        pass,
        format!(
            "var {v8:.3} at m=8, 95% CI ({:.3}, {:.3}) vs {true_var}; var {v64:.3} at m=64, CI ({:.3}, {:.3})",
            ci8.0, ci8.1, ci64.0, ci64.1
        ),
    )
}

fn tau_at_m8<P: Proposal<Point2> + Sync>(proposal: &P, replicates: u32) -> (f64, f64, usize) {
    let target = MixtureTarget::default();
    let model = Pairing::PenaltyVsNaive.estimator(8).unwrap();
    let times: Vec<Option<u64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(SEED, replicate_stream_index(8, r));
            first_separation_time(
                Pairing::PenaltyVsNaive,
                &target,
                proposal,
                &model,
                MIXTURE_START,
                DEFAULT_BURN_IN,
                DEFAULT_CAP,
                &mut rng,
            )
            .unwrap()
        })
        .collect();
    let t = tau_hat(&times, DEFAULT_CAP).unwrap();
    (t.value, t.se, t.censored)
}

fn separation_times() -> Outcome {
    let rw = rw_proposal(RandomWalkProposal::DEFAULT_SCALE).unwrap();
    let is = independence_proposal(IndependenceProposal::DEFAULT_INFLATION).unwrap();
    let (t_rw, se_rw, c_rw) = tau_at_m8(&rw, 1000);
    let (t_is, se_is, c_is) = tau_at_m8(&is, 1000);
    let pass = (50.0..=95.0).contains(&t_rw) && (22.0..=45.0).contains(&t_is);
    outcome(
        pass,
        format!("RW tau {t_rw:.1} ± {se_rw:.1} in [50, 95], IS tau {t_is:.1} ± {se_is:.1} in [22, 45], censored {c_rw}/{c_is}"),
    )
}

fn sweep(pairing: Pairing) -> SweepTable {
    let target = MixtureTarget::default();
    let proposal = rw_proposal(RandomWalkProposal::DEFAULT_SCALE).unwrap();
    let cfg = SweepConfig { pairing, replicates: 500, seed: SEED, ..SweepConfig::default() };
    septime_sweep(&target, &proposal, &MIXTURE_START, &cfg).unwrap()
}

fn tau_fit(t: &SweepTable) -> rmcmc::diagnostics::LinearFit {
    t.fits.iter().find(|f| f.quantity == "tau").expect("tau fit").fit
}

fn linear_scaling(t: &SweepTable) -> Outcome {
    let f = tau_fit(t);
    let taus: Vec<String> = t.rows.iter().map(|r| format!("{:.0}", r.tau.value)).collect();
    outcome(
        (0.85..=1.15).contains(&f.slope) && f.r_squared > 0.97,
        format!("slope {:.3} in [0.85, 1.15], R² {:.4} > 0.97, tau {}", f.slope, f.r_squared, taus.join("/")),
    )
}

fn three_halves_scaling(t: &SweepTable) -> Outcome {
    let f = tau_fit(t);
    let taus: Vec<String> = t.rows.iter().map(|r| format!("{:.0}", r.tau.value)).collect();
    outcome((1.3..=1.7).contains(&f.slope), format!("slope {:.3} in [1.3, 1.7], tau {}", f.slope, taus.join("/")))
}

fn estimator_agreement(tables: &[(&str, &SweepTable)]) -> Outcome {
    let mut pass = true;
    let mut worst_z: f64 = 0.0;
    let mut worst_bound = f64::INFINITY;
    for (_, t) in tables {
        for r in &t.rows {
            let (Some(r1), Some(r2)) = (r.rho1, r.rho2) else {
                pass = false;
                continue;
            };
            let z = (r1.value - r2.value).abs() / (r1.se * r1.se + r2.se * r2.se).sqrt();
            worst_z = worst_z.max(z);
            // 2τ̂ ≥ ρ̂₂ − 3·SE, with the SE of 2τ̂ − ρ̂₂
            let se = (r2.se * r2.se + 4.0 * r.tau.se * r.tau.se).sqrt();
            let margin = (2.0 * r.tau.value - r2.value) / se;
            worst_bound = worst_bound.min(margin);
            pass &= z < 3.0 && margin >= -3.0;
        }
    }
    let names: Vec<&str> = tables.iter().map(|(n, _)| *n).collect();
    outcome(
        pass,
        format!(
            "max |rho1 - rho2| = {worst_z:.2} combined SE (< 3); min (2 tau - rho2)/SE = {worst_bound:.2} (>= -3) over {}",
            names.join(", ")
        ),
    )
}

fn identical_fraction() -> Outcome {
    let target = MixtureTarget::default();
    let proposal = independence_proposal(IndependenceProposal::DEFAULT_INFLATION).unwrap();
    let model = Pairing::PenaltyVsNaive.estimator(8).unwrap();
    let cfg = CoupledRunConfig { n_updates: 10_000, ..CoupledRunConfig::default() };
    let fractions: Vec<f64> = (0..20u64)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream(SEED + s, 7);
            run_coupled(Pairing::PenaltyVsNaive, &target, &proposal, &model, MIXTURE_START, &cfg, &mut rng)
                .unwrap()
                .identical_fraction()
        })
        .collect();
    let f = mean(&fractions);
    outcome((0.85..=0.95).contains(&f), format!("mean identical fraction {f:.4} in [0.85, 0.95] over 20 seeds"))
}

fn theorem_suite() -> Outcome {
    let results = run_suite(SEED, SuiteSizes::default(), true).unwrap();
    let bad: Vec<&str> = results.iter().filter(|r| !r.as_expected()).map(|r| r.name).collect();
    let controls = results.iter().filter(|r| r.control).count();
    outcome(
        bad.is_empty() && controls >= 3,
        format!("{} checks, {controls} negative controls, unexpected: {:?}", results.len() - controls, bad),
    )
}

fn estimator_moments() -> Outcome {
    let n = 1_000_000;
    let d = 0.7;
    let ig = EstimatorModel::inv_gamma_shifted(10).unwrap();
    let x = sample_values(&ig, d, n, &mut stream(SEED, 11));
    let mu = mean(&x);
    let bias_se = (variance(&x) / n as f64).sqrt();
    let bias_z = ((mu - d) - 1.0 / 9.0) / bias_se;
    let var = variance(&x);
    let m4 = x.iter().map(|v| (v - mu).powi(4)).sum::<f64>() / n as f64;
    let var_se = ((m4 - var * var) / n as f64).sqrt();
    let var_z = (var - 100.0 / 648.0) / var_se;

    let ig8 = EstimatorModel::inv_gamma_shifted(8).unwrap();
    let mut rng = stream(SEED, 12);
    let mut raw = Vec::new();
    let y: Vec<f64> = (0..n)
        .map(|_| {
            raw.clear();
            ig8.fill_raw(&mut rng, &mut raw);
            ig8.coupled_normal(d, &raw).value
        })
        .collect();
    let normal = Normal::new(d, (1.0f64 / 8.0).sqrt()).unwrap();
    let ks = ecdf_sup_distance(&y, |v| normal.cdf(v));
    outcome(
        bias_z.abs() < 3.0 && var_z.abs() < 3.0 && ks < 0.002,
        format!("bias z {bias_z:.2}, variance z {var_z:.2} (|z| < 3); coupled sup-distance {ks:.5} < 0.002"),
    )
}

// Posterior on the θ grid by brute-force enumeration, bonds counted directly.
fn enumerated_posterior(grid: &IsingGrid, data: u16) -> Vec<f64> {
    let bonds = |x: u16| -> f64 {
        let spin = |i: usize, j: usize| if x >> (3 * i + j) & 1 == 1 { 1.0 } else { -1.0 };
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                if j + 1 < 3 {
                    s += spin(i, j) * spin(i, j + 1);
                }
                if i + 1 < 3 {
                    s += spin(i, j) * spin(i + 1, j);
                }
            }
        }
        s
    };
    let w: Vec<f64> = grid
        .thetas()
        .iter()
        .map(|&th| {
            let z: f64 = (0..512u16).map(|x| (th * bonds(x)).exp()).sum();
            (th * bonds(data)).exp() / z
        })
        .collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

fn exchange_correctness() -> Outcome {
    let grid = IsingGrid::standard();
    let k = grid.len();
    let prior = DiscreteTarget::new(vec![1.0 / k as f64; k]).unwrap();
    let proposal = CyclicGridProposal::new(k);
    let mut rng = stream(SEED, 13);
    let mut draws = UpdateDraws::new();
    let n = 1_000_000;
    let mut state = k / 2;
    let mut visits = vec![Vec::with_capacity(n); k];
    for _ in 0..n {
        draws.redraw(&mut rng, &proposal, &grid);
        state = sve_step(&prior, &grid, &ISING_DATA, &proposal, &state, &draws).unwrap().state;
        for (j, v) in visits.iter_mut().enumerate() {
            v.push(if j == state { 1.0 } else { 0.0 });
        }
    }
    let exact = enumerated_posterior(&grid, ISING_DATA);
    let tv = 0.5 * visits.iter().zip(&exact).map(|(v, p)| (mean(v) - p).abs()).sum::<f64>();
    let bound = 3.0 * 0.5 * visits.iter().map(|v| batch_means_se(v)).sum::<f64>();

    let offsets: Vec<f64> = (0..k).map(|j| 1e3 * ((j * j) as f64).cos()).collect();
    let shifted = OffsetLikelihood { inner: &grid, offsets };
    let mut rng = stream(SEED, 14);
    let (mut a, mut b) = (k / 2, k / 2);
    let mut identical = true;
    for _ in 0..200_000 {
        draws.redraw(&mut rng, &proposal, &grid);
        let x = sve_step(&prior, &grid, &ISING_DATA, &proposal, &a, &draws).unwrap();
        let y = sve_step(&prior, &shifted, &ISING_DATA, &proposal, &b, &draws).unwrap();
        identical &= x.accepted == y.accepted && x.state == y.state;
        (a, b) = (x.state, y.state);
    }
    let lib_gap = grid_posterior_gap(&grid, &exact);
    outcome(
        tv <= bound && identical && lib_gap < 1e-12,
        format!(
            "TV {tv:.5} <= 3 MC SE {bound:.5}; offset decisions identical: {identical}; {} data states",
            all_ising_configs().len()
        ),
    )
}

fn grid_posterior_gap(grid: &IsingGrid, exact: &[f64]) -> f64 {
    let post = rmcmc::targets::IsingPosterior { grid, data: ISING_DATA }.exact();
    post.iter().zip(exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn report(n: u32, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let took = start.elapsed();
    let in_time = limit.map_or(true, |l| took <= l);
    let pass = o.pass && in_time;
    let budget = limit.map(|l| format!(", budget {}s", l.as_secs())).unwrap_or_default();
    println!(
        "criterion {n:>2} [{}] {name}: {} ({:.1}s{budget})",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        took.as_secs_f64()
    );
    pass
}

fn main() {
    // `cargo test` passes harness flags; a name filter that excludes this
    // target's criteria should not run them
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !filters.is_empty() && !filters.iter().any(|f| "acceptance".contains(f.as_str())) {
        return;
    }
    let mut ok = true;
    ok &= report(1, "penalty chain exactness", Some(Duration::from_secs(120)), penalty_exactness);
    ok &= report(2, "naive over-dispersion", None, naive_overdispersion);
    ok &= report(3, "separation times at m=8", Some(Duration::from_secs(300)), separation_times);
    let mut naive_sweep = None;
    let mut estimate_sweep = None;
    ok &= report(4, "linear scaling, penalty vs naive", None, || {
        linear_scaling(naive_sweep.insert(sweep(Pairing::PenaltyVsNaive)))
    });
    ok &= report(5, "three-halves scaling, penalty vs penalty-estimate", None, || {
        three_halves_scaling(estimate_sweep.insert(sweep(Pairing::PenaltyVsPenaltyEstimate)))
    });
    let (naive_sweep, estimate_sweep) = (naive_sweep.unwrap(), estimate_sweep.unwrap());
    ok &= report(6, "separation estimator agreement", None, || {
        estimator_agreement(&[("penalty-naive", &naive_sweep), ("penalty-estimate", &estimate_sweep)])
    });
    ok &= report(7, "identical-sample fraction, IS", None, identical_fraction);
    ok &= report(8, "balance and ordering checks", Some(Duration::from_secs(60)), theorem_suite);
    ok &= report(9, "estimator moments and coupling", None, estimator_moments);
    ok &= report(10, "single-variable exchange", None, exchange_correctness);
    if !ok {
        std::process::exit(1);
    }
}
