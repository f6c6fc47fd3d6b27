//! `rmcmc`: runs coupled chains, density comparisons, separation-time sweeps
//! and the balance check battery, writing CSV or JSON-lines output.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use rmcmc::algorithms::{run_chain, Algorithm};
use rmcmc::config::{Bandwidth, RunConfig};
use rmcmc::coupling::{run_coupled, septime_sweep, CoupledRunConfig, Pairing, SweepConfig};
use rmcmc::diagnostics::{gaussian_kde, mean, silverman_bandwidth, variance};
use rmcmc::rng::stream;
use rmcmc::suite::{run_suite, Comparison, SuiteSizes};
use rmcmc::table::{Cell, TableWriter};
use rmcmc::targets::{sum_marginal_pdf, MixtureTarget, MIXTURE_START};

const ENV_OUT_DIR: &str = "RMCMC_OUT_DIR";
const DENSITY_GRID_POINTS: usize = 361;
const DENSITY_GRID_MAX: f64 = 18.0;

#[derive(Parser)]
#[command(name = "rmcmc", version, about = "Randomized-acceptance MCMC experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coupled exact/approximate chain trace.
    Trace(CommonArgs),
    /// Kernel density of θ1 + θ2 under the penalty and naive chains.
    Density(CommonArgs),
    /// Separation-time estimates over a list of sample sizes.
    Septimes(CommonArgs),
    /// Balance, ordering and minorization checks.
    Verify(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// `key = value` config file; command-line options override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for parallel replicates.
    #[arg(long)]
    threads: Option<usize>,
    /// Leave the generation time out of the output header.
    #[arg(long)]
    no_timestamp: bool,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct Overrides {
    #[arg(long, help = "penalty-naive or penalty-estimate")]
    pair: Option<String>,
    #[arg(long, help = "rw or is")]
    proposal: Option<String>,
    #[arg(long, alias = "step_scale")]
    step_scale: Option<String>,
    #[arg(long)]
    inflation: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long, alias = "m_list", help = "comma-separated, strictly increasing")]
    m_list: Option<String>,
    #[arg(long, alias = "n_updates")]
    n_updates: Option<String>,
    #[arg(long, alias = "burn_in")]
    burn_in: Option<String>,
    #[arg(long)]
    replicates: Option<String>,
    #[arg(long)]
    cap: Option<String>,
    #[arg(long, alias = "stationary_updates")]
    stationary_updates: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    thin: Option<String>,
    #[arg(long, help = "auto or a positive width")]
    bandwidth: Option<String>,
    #[arg(long, alias = "negative_controls")]
    negative_controls: bool,
    #[arg(long)]
    out: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        let fields = [
            ("pair", &self.pair),
            ("proposal", &self.proposal),
            ("step_scale", &self.step_scale),
            ("inflation", &self.inflation),
            ("m", &self.m),
            ("m_list", &self.m_list),
            ("n_updates", &self.n_updates),
            ("burn_in", &self.burn_in),
            ("replicates", &self.replicates),
            ("cap", &self.cap),
            ("stationary_updates", &self.stationary_updates),
            ("seed", &self.seed),
            ("thin", &self.thin),
            ("bandwidth", &self.bandwidth),
            ("out", &self.out),
        ];
        let mut out: Vec<_> = fields.into_iter().filter_map(|(k, v)| v.as_deref().map(|v| (k, v))).collect();
        if self.negative_controls {
            out.push(("negative_controls", "true"));
        }
        out
    }
}

/// Failure classes, each with its own exit status.
enum Failure {
    Usage(String),
    Numeric(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numeric(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numeric(m) | Failure::Io(m) => m,
        }
    }
}

impl From<rmcmc::Error> for Failure {
    fn from(e: rmcmc::Error) -> Self {
        match e {
            rmcmc::Error::Config { .. } | rmcmc::Error::InvalidParameter { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn load_config(name: &str, args: &CommonArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            RunConfig::from_text(&text)?
        }
        None => RunConfig::default(),
    };
    for (key, value) in args.overrides.pairs() {
        cfg.set(key, value, &format!("option --{}", key.replace('_', "-")))?;
    }
    cfg.command = name.to_string();
    Ok(cfg)
}

fn output_path(cfg: &RunConfig, default_name: &str) -> PathBuf {
    if let Some(p) = &cfg.out {
        return p.clone();
    }
    match std::env::var_os(ENV_OUT_DIR) {
        Some(dir) => Path::new(&dir).join(default_name),
        None => PathBuf::from(default_name),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    }
    let f = File::create(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn header(cfg: &RunConfig, timestamp: bool) -> Vec<String> {
    let mut lines = cfg.to_lines();
    if timestamp {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        lines.push(format!("generated_unix = {secs}"));
    }
    lines
}

fn trace(cfg: &RunConfig, timestamp: bool) -> Result<PathBuf, Failure> {
    let target = MixtureTarget::default();
    let proposal = cfg.planar_proposal()?;
    let model = cfg.pair.estimator(cfg.m)?;
    let run_cfg = CoupledRunConfig {
        burn_in: cfg.burn_in,
        n_updates: cfg.n_updates,
        remerge: false,
        record_every: Some(cfg.thin),
        keep_gaps: false,
    };
    let mut rng = stream(cfg.seed, 0);
    let run = run_coupled(cfg.pair, &target, &proposal, &model, MIXTURE_START, &run_cfg, &mut rng)?;

    let path = output_path(cfg, "trace.csv");
    let columns = ["t", "theta_sum_exact", "theta_sum_approx", "B_t", "coalesced"];
    let mut w = TableWriter::new(create(&path)?, &header(cfg, timestamp), &columns)?;
    for r in &run.records {
        w.row(&[
            r.t.into(),
            (r.exact[0] + r.exact[1]).into(),
            (r.approx[0] + r.approx[1]).into(),
            r.separated.into(),
            r.coalesced.into(),
        ])?;
    }
    w.comment(&format!("separations = {}", run.event_times.len()))?;
    w.comment(&format!("clamped = {}", run.clamped))?;
    w.finish()?;
    Ok(path)
}

fn density(cfg: &RunConfig, timestamp: bool) -> Result<PathBuf, Failure> {
    let target = MixtureTarget::default();
    let proposal = cfg.planar_proposal()?;
    let model = Pairing::PenaltyVsNaive.estimator(cfg.m)?;
    let sums = |alg: Algorithm, index: u64| -> Result<Vec<f64>, Failure> {
        let mut rng = stream(cfg.seed, index);
        let chain = run_chain(alg, &target, &proposal, &model, MIXTURE_START, cfg.burn_in, cfg.n_updates, &mut rng)?;
        Ok(chain.iter().step_by(cfg.thin).map(|p| p[0] + p[1]).collect())
    };
    let penalty = sums(Algorithm::Penalty, 0)?;
    let naive = sums(Algorithm::Naive, 1)?;
    if penalty.len() < 2 {
        return Err(Failure::Usage("density needs at least two retained updates".into()));
    }
    let width = |x: &[f64]| match cfg.bandwidth {
        Bandwidth::Silverman => silverman_bandwidth(x),
        Bandwidth::Fixed(h) => h,
    };
    let (h_pen, h_naive) = (width(&penalty), width(&naive));
    let grid: Vec<f64> =
        (0..DENSITY_GRID_POINTS).map(|i| DENSITY_GRID_MAX * i as f64 / (DENSITY_GRID_POINTS - 1) as f64).collect();
    let pdf_pen = gaussian_kde(&penalty, h_pen, &grid);
    let pdf_naive = gaussian_kde(&naive, h_naive, &grid);

    let path = output_path(cfg, "density.csv");
    let mut w = TableWriter::new(
        create(&path)?,
        &header(cfg, timestamp),
        &["s", "pdf_true", "pdf_penalty_est", "pdf_naive_est"],
    )?;
    for (i, &s) in grid.iter().enumerate() {
        w.row(&[s.into(), sum_marginal_pdf(s).into(), pdf_pen[i].into(), pdf_naive[i].into()])?;
    }
    for (name, x, h) in [("penalty", &penalty, h_pen), ("naive", &naive, h_naive)] {
        w.comment(&format!("{name}: mean = {}, variance = {}, bandwidth = {h}", mean(x), variance(x)))?;
    }
    w.finish()?;
    Ok(path)
}

fn opt_cells(e: Option<rmcmc::coupling::SeparationEstimate>) -> [Cell; 2] {
    match e {
        Some(e) => [e.value.into(), e.se.into()],
        None => [f64::NAN.into(), f64::NAN.into()],
    }
}

fn septimes(cfg: &RunConfig, timestamp: bool) -> Result<PathBuf, Failure> {
    if cfg.m_list.is_empty() {
        return Err(Failure::Usage("septimes needs a nonempty m_list".into()));
    }
    let target = MixtureTarget::default();
    let proposal = cfg.planar_proposal()?;
    let sweep = SweepConfig {
        m_list: cfg.m_list.clone(),
        pairing: cfg.pair,
        replicates: cfg.replicates,
        burn_in: cfg.burn_in,
        cap: cfg.cap,
        stationary_updates: cfg.stationary_updates,
        seed: cfg.seed,
        ..SweepConfig::default()
    };
    let table = septime_sweep(&target, &proposal, &MIXTURE_START, &sweep)?;

    let path = output_path(cfg, "septimes.csv");
    let columns = ["m", "pair", "proposal", "rho1", "rho1_se", "rho2", "rho2_se", "tau", "tau_se", "censored_count"];
    let mut w = TableWriter::new(create(&path)?, &header(cfg, timestamp), &columns)?;
    for r in &table.rows {
        let [r1, r1se] = opt_cells(r.rho1);
        let [r2, r2se] = opt_cells(r.rho2);
        w.row(&[
            r.m.into(),
            cfg.pair.name().into(),
            proposal.name().into(),
            r1,
            r1se,
            r2,
            r2se,
            r.tau.value.into(),
            r.tau.se.into(),
            r.tau.censored.into(),
        ])?;
    }
    w.comment("fit,quantity,slope,intercept,slope_lo,slope_hi,r_squared")?;
    for f in &table.fits {
        let cells = [f.fit.slope, f.fit.intercept, f.fit.slope_ci.0, f.fit.slope_ci.1, f.fit.r_squared];
        let text: Vec<String> = cells.iter().map(|&v| rmcmc::table::format_float(v)).collect();
        w.comment(&format!("fit,{},{}", f.quantity, text.join(",")))?;
    }
    w.finish()?;
    Ok(path)
}

fn verify(cfg: &RunConfig) -> Result<Option<PathBuf>, Failure> {
    let results = run_suite(cfg.seed, SuiteSizes::default(), cfg.negative_controls)?;
    let mut lines = Vec::with_capacity(results.len());
    let mut stderr = io::stderr().lock();
    writeln!(stderr, "{:<26} {:>12} {:>10}  result", "check", "value", "threshold")?;
    for r in &results {
        let status = match (r.control, r.pass) {
            (false, true) => "pass",
            (false, false) => "FAIL",
            (true, false) => "fails as expected",
            (true, true) => "CONTROL PASSED",
        };
        let cmp = if r.comparison == Comparison::Below { "<" } else { ">" };
        writeln!(stderr, "{:<26} {:>12.3e} {cmp}{:>9.1e}  {status}", r.name, r.value, r.threshold)?;
        let record = serde_json::json!({
            "name": r.name,
            "kind": if r.control { "control" } else { "check" },
            "residual": r.value,
            "tolerance": r.threshold,
            "comparison": if r.comparison == Comparison::Below { "below" } else { "above" },
            "pass": r.pass,
            "as_expected": r.as_expected(),
            "detail": r.detail,
        });
        lines.push(record.to_string());
    }
    let path = match &cfg.out {
        Some(p) => {
            let mut f = create(p)?;
            for l in &lines {
                writeln!(f, "{l}")?;
            }
            f.flush()?;
            Some(p.clone())
        }
        None => {
            let mut out = io::stdout().lock();
            for l in &lines {
                writeln!(out, "{l}")?;
            }
            None
        }
    };
    let bad = results.iter().filter(|r| !r.as_expected()).count();
    if bad > 0 {
        return Err(Failure::Numeric(format!("{bad} of {} checks did not behave as expected", results.len())));
    }
    Ok(path)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (name, args) = match &cli.command {
        Command::Trace(a) => ("trace", a),
        Command::Density(a) => ("density", a),
        Command::Septimes(a) => ("septimes", a),
        Command::Verify(a) => ("verify", a),
    };
    let cfg = load_config(name, args)?;
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    }
    let stamp = !args.no_timestamp;
    let written = match cli.command {
        Command::Trace(_) => Some(trace(&cfg, stamp)?),
        Command::Density(_) => Some(density(&cfg, stamp)?),
        Command::Septimes(_) => Some(septimes(&cfg, stamp)?),
        Command::Verify(_) => verify(&cfg)?,
    };
    if let Some(p) = written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("rmcmc: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
