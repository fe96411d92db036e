//! Batch front end: capacity tables, figure data, protocol simulation,
//! attacks and security estimates.
//!
//! Exit codes: 0 success, 2 invalid parameters, 3 I/O failure, 4 search
//! budget exceeded. `ELASTIC_COMMIT_SEED` overrides `--seed` when set.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use elastic_commit::adversary::{CensusMode, EXHAUSTIVE_LIMIT};
use elastic_commit::capacity::{
    capacity_ec, capacity_rec, capacity_unc, contour_series, curve_series, unc_impossible, write_contour_csv,
    write_curve_csv, ChannelFamily, ChannelKind,
};
use elastic_commit::estimator::{
    estimate_binding, estimate_census, estimate_concealment_exact, estimate_soundness, estimate_z_channel,
    AttackMode, Scenario, SecurityReport, TrialPlan, EXACT_LIMIT,
};
use elastic_commit::infotheory::binary_entropy;
use elastic_commit::protocol::{
    derive_params, ProtocolParams, DEFAULT_ALPHA1, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_BETA3,
};
use elastic_commit::{Error, Probability};

const SEED_ENV: &str = "ELASTIC_COMMIT_SEED";

#[derive(Parser)]
#[command(name = "elastic-commit", version, about = "String commitment over elastic binary symmetric channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Commitment capacity of one channel family.
    Capacity(CapacityArgs),
    /// Capacities of every family against gamma, one series per delta.
    Curve(TableArgs),
    /// EC and REC crossovers with equal capacity, per delta.
    Contour(TableArgs),
    /// Honest commit and reveal runs; reports the rejection rate.
    Simulate(RunArgs),
    /// Cheating-Alice binding attack.
    Attack(AttackArgs),
    /// One security property, estimated with a confidence interval.
    Estimate(EstimateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct CapacityArgs {
    #[arg(long, value_parser = parse_kind)]
    family: ChannelKind,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long = "gamma-a")]
    gamma_a: Option<f64>,
    #[arg(long = "gamma-b")]
    gamma_b: Option<f64>,
    #[arg(long)]
    delta: f64,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct TableArgs {
    /// Comma-separated; may be repeated or omitted.
    #[arg(long, value_delimiter = ',')]
    delta: Vec<f64>,
    /// Grid points per delta.
    #[arg(long, default_value_t = 199)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct ProtocolArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = DEFAULT_BETA1)]
    beta1: f64,
    #[arg(long, default_value_t = DEFAULT_BETA2)]
    beta2: f64,
    #[arg(long, default_value_t = DEFAULT_BETA3)]
    beta3: f64,
    #[arg(long, default_value_t = DEFAULT_ALPHA1)]
    alpha1: f64,
    /// Override the first-round hash length.
    #[arg(long)]
    l1: Option<usize>,
    /// Override the second-round hash length.
    #[arg(long)]
    l2: Option<usize>,
    /// Override the committed-string length.
    #[arg(long)]
    m: Option<usize>,
}

impl ProtocolArgs {
    fn params(&self) -> Result<ProtocolParams, Error> {
        let mut p = derive_params(
            self.n,
            self.gamma,
            self.delta,
            self.beta1,
            self.beta2,
            self.beta3,
            self.alpha1,
        )?;
        if self.l1.is_some() || self.l2.is_some() {
            p = p.with_hash_lengths(self.l1.unwrap_or(p.l1()), self.l2.unwrap_or(p.l2()))?;
        }
        if let Some(m) = self.m {
            p = p.with_commit_bits(m)?;
        }
        Ok(p)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    protocol: ProtocolArgs,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Resumable state file for long runs.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exhaustive,
    Sampled,
}

#[derive(Args)]
struct AttackArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum, default_value = "exhaustive")]
    mode: Mode,
    /// Candidate draws per session in sampled mode.
    #[arg(long, default_value_t = 1024)]
    candidates: usize,
    /// Crossover the cheating Alice sets; defaults to gamma.
    #[arg(long)]
    s: Option<f64>,
    /// Also run the first-round collision census.
    #[arg(long)]
    census: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PropertyArg {
    Soundness,
    Binding,
    Concealment,
    Crossover,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum)]
    property: PropertyArg,
    #[arg(long, value_enum, default_value = "exhaustive")]
    mode: Mode,
    #[arg(long, default_value_t = 1024)]
    candidates: usize,
    /// Crossover set by the cheating party: Alice for binding and crossover,
    /// a dishonest Bob for concealment.
    #[arg(long)]
    s: Option<f64>,
}

fn parse_kind(s: &str) -> Result<ChannelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failures carry their exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) => 3,
            Error::Budget { .. } => 4,
            Error::Internal(_) | Error::Json(_) => 1,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Error::Io(e).into()
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn seed(flag: u64) -> Result<u64, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| invalid(format!("{SEED_ENV}={v:?} is not a 64-bit unsigned integer"))),
        Err(_) => Ok(flag),
    }
}

fn probability(v: f64, name: &str) -> Result<Probability, Failure> {
    Probability::new(v).map_err(|_| invalid(format!("--{name} must be a probability, got {v}")))
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(value: &T, path: &Option<PathBuf>) -> Result<(), Failure> {
    let mut out = open_out(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(Error::from)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn cmd_capacity(args: CapacityArgs) -> Result<(), Failure> {
    let family = ChannelFamily::new(args.family, args.gamma, args.gamma_a, args.gamma_b, args.delta)?;
    let delta = family.delta();
    let (value, note) = match args.family {
        ChannelKind::Bsc => (Some(binary_entropy(delta)), None),
        ChannelKind::Ec => (Some(capacity_ec(family.gamma().unwrap(), delta)?.value), None),
        ChannelKind::Rec => (Some(capacity_rec(family.gamma().unwrap(), delta)?.value), None),
        ChannelKind::Unc => {
            let gamma = family.gamma().unwrap();
            let note = unc_impossible(gamma, delta).then_some("commitment impossible: delta >= 2 gamma (1 - gamma)");
            (Some(capacity_unc(gamma, delta)?.value), note)
        }
        ChannelKind::Gec => (None, Some("conjectured equal to REC capacity; not computed")),
    };
    if let Some(Format::Json) = args.format {
        #[derive(Serialize)]
        struct Out<'a> {
            family: ChannelFamily,
            capacity: Option<f64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            note: Option<&'a str>,
        }
        return write_json(
            &Out {
                family,
                capacity: value,
                note,
            },
            &None,
        );
    }
    let mut echo = format!("family={}", args.family);
    for (name, v) in [("gamma", args.gamma), ("gamma_a", args.gamma_a), ("gamma_b", args.gamma_b)] {
        if let (Some(v), true) = (v, family_uses(args.family, name)) {
            echo.push_str(&format!(" {name}={v}"));
        }
    }
    echo.push_str(&format!(" delta={}", args.delta));
    match (value, note) {
        (Some(v), None) => println!("{echo} capacity={v:.9}"),
        (Some(v), Some(n)) => println!("{echo} capacity={v:.9} ({n})"),
        (None, Some(n)) => println!("{echo}: {n}"),
        (None, None) => unreachable!(),
    }
    Ok(())
}

fn family_uses(kind: ChannelKind, field: &str) -> bool {
    match kind {
        ChannelKind::Bsc => false,
        ChannelKind::Gec => field != "gamma",
        _ => field == "gamma",
    }
}

fn deltas(values: &[f64]) -> Result<Vec<Probability>, Failure> {
    values
        .iter()
        .map(|&d| {
            if d > 0.0 && d < 0.5 {
                probability(d, "delta")
            } else {
                Err(invalid(format!("need 0 < delta < 1/2, got {d}")))
            }
        })
        .collect()
}

fn cmd_curve(args: TableArgs) -> Result<(), Failure> {
    let rows = curve_series(&deltas(&args.delta)?, args.points)?;
    match args.format {
        Format::Csv => {
            let mut out = open_out(&args.out)?;
            write_curve_csv(&rows, &mut out)?;
            out.flush()?;
            Ok(())
        }
        Format::Json => write_json(&rows, &args.out),
    }
}

fn cmd_contour(args: TableArgs) -> Result<(), Failure> {
    if args.points == 0 {
        return Err(invalid("--points must be at least 1"));
    }
    let table = contour_series(&deltas(&args.delta)?, args.points)?;
    match args.format {
        Format::Csv => {
            let mut out = open_out(&args.out)?;
            write_contour_csv(&table, &mut out)?;
            out.flush()?;
            Ok(())
        }
        Format::Json => write_json(&table, &args.out),
    }
}

/// Validated run: parameters, plan and worker pool, all checked before any
/// computation.
struct Prepared {
    params: ProtocolParams,
    seed: u64,
    pool: rayon::ThreadPool,
}

fn prepare(run: &RunArgs) -> Result<Prepared, Failure> {
    if let Format::Csv = run.format {
        return Err(invalid("reports are written as JSON only"));
    }
    if run.trials == 0 {
        return Err(invalid("--trials must be at least 1"));
    }
    let params = run.protocol.params()?;
    let seed = seed(run.seed)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = run.workers {
        if w == 0 {
            return Err(invalid("--workers must be at least 1"));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Failure {
        code: 1,
        message: e.to_string(),
    })?;
    if let Some(out) = &run.out {
        check_writable(out)?;
    }
    Ok(Prepared { params, seed, pool })
}

/// Fails early on an output path whose directory does not exist.
fn check_writable(path: &Path) -> Result<(), Failure> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if !dir.is_dir() {
        return Err(Failure {
            code: 3,
            message: format!("output directory {} does not exist", dir.display()),
        });
    }
    Ok(())
}

fn plan(prep: &Prepared, run: &RunArgs, scenario: Scenario) -> Result<TrialPlan, Failure> {
    let mut plan = TrialPlan::new(prep.params, scenario, run.trials, prep.seed)?;
    if let Some(path) = &run.checkpoint {
        plan = plan.with_checkpoint(path);
    }
    Ok(plan)
}

#[derive(Serialize)]
struct RunReport<'a, T: Serialize> {
    command: &'a str,
    master_seed: u64,
    params: ProtocolParams,
    report: T,
}

fn summary(command: &str, r: &SecurityReport) {
    eprintln!(
        "{command}: {:?} estimate {:.6} [{:.6}, {:.6}] over {} trials; bound {:.6} ({})",
        r.property,
        r.point_estimate,
        r.ci_low,
        r.ci_high,
        r.trials,
        r.comparison_bound,
        if r.consistent_with_bound() { "consistent" } else { "exceeded" }
    );
}

fn emit(command: &str, prep: &Prepared, run: &RunArgs, report: SecurityReport) -> Result<(), Failure> {
    write_json(
        &RunReport {
            command,
            master_seed: prep.seed,
            params: prep.params,
            report: &report,
        },
        &run.out,
    )?;
    summary(command, &report);
    Ok(())
}

fn cmd_simulate(run: RunArgs) -> Result<(), Failure> {
    let prep = prepare(&run)?;
    let plan = plan(&prep, &run, Scenario::Honest)?;
    let mut report = prep.pool.install(|| estimate_soundness(&plan))?;
    report.extra.insert("rejection_rate".into(), report.point_estimate);
    emit("simulate", &prep, &run, report)
}

fn attack_mode(mode: Mode, candidates: usize, n: usize) -> Result<AttackMode, Failure> {
    match mode {
        Mode::Exhaustive if n > EXHAUSTIVE_LIMIT => Err(Error::Budget {
            n,
            limit: EXHAUSTIVE_LIMIT,
        }
        .into()),
        Mode::Exhaustive => Ok(AttackMode::Exhaustive),
        Mode::Sampled if candidates == 0 => Err(invalid("--candidates must be at least 1")),
        Mode::Sampled => Ok(AttackMode::Sampled(candidates)),
    }
}

fn cheating_s(s: Option<f64>, params: &ProtocolParams) -> Result<Probability, Failure> {
    let s = match s {
        Some(v) => probability(v, "s")?,
        None => params.gamma(),
    };
    if s < params.gamma() || s > params.delta() {
        return Err(invalid(format!("--s must lie in [gamma, delta], got {s}")));
    }
    Ok(s)
}

fn cmd_attack(args: AttackArgs) -> Result<(), Failure> {
    let n = args.run.protocol.n;
    let mode = attack_mode(args.mode, args.candidates, n)?;
    let prep = prepare(&args.run)?;
    let s = cheating_s(args.s, &prep.params)?;
    let plan = plan(&prep, &args.run, Scenario::CheatingAlice { s })?;
    if !args.census {
        let report = prep.pool.install(|| estimate_binding(&plan, mode))?;
        return emit("attack", &prep, &args.run, report);
    }
    let census_mode = match mode {
        AttackMode::Exhaustive => CensusMode::Exhaustive,
        AttackMode::Sampled(k) => CensusMode::Sampled(k),
    };
    let (report, census) = prep.pool.install(|| -> Result<_, Error> {
        Ok((estimate_binding(&plan, mode)?, estimate_census(&plan, census_mode)?))
    })?;
    #[derive(Serialize)]
    struct WithCensus<'a> {
        binding: &'a SecurityReport,
        census: elastic_commit::estimator::CensusSummary,
    }
    write_json(
        &RunReport {
            command: "attack",
            master_seed: prep.seed,
            params: prep.params,
            report: WithCensus {
                binding: &report,
                census,
            },
        },
        &args.run.out,
    )?;
    summary("attack", &report);
    Ok(())
}

fn cmd_estimate(args: EstimateArgs) -> Result<(), Failure> {
    let n = args.run.protocol.n;
    let mode = match args.property {
        PropertyArg::Binding => Some(attack_mode(args.mode, args.candidates, n)?),
        PropertyArg::Concealment if n > EXACT_LIMIT => {
            return Err(Error::Budget { n, limit: EXACT_LIMIT }.into());
        }
        _ => None,
    };
    let prep = prepare(&args.run)?;
    let p = prep.params;
    let report = match args.property {
        PropertyArg::Soundness => {
            let plan = plan(&prep, &args.run, Scenario::Honest)?;
            prep.pool.install(|| estimate_soundness(&plan))?
        }
        PropertyArg::Binding => {
            let plan = plan(&prep, &args.run, Scenario::CheatingAlice { s: cheating_s(args.s, &p)? })?;
            prep.pool.install(|| estimate_binding(&plan, mode.expect("set above")))?
        }
        PropertyArg::Concealment => {
            let scenario = match args.s {
                Some(_) => Scenario::DishonestBob { s: cheating_s(args.s, &p)? },
                None => Scenario::Honest,
            };
            let plan = plan(&prep, &args.run, scenario)?;
            prep.pool.install(|| estimate_concealment_exact(&plan))?
        }
        PropertyArg::Crossover => {
            let s = cheating_s(args.s, &p)?;
            prep.pool.install(|| estimate_z_channel(p.gamma(), p.delta(), s, n, args.run.trials, prep.seed))?
        }
    };
    emit("estimate", &prep, &args.run, report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Capacity(a) => cmd_capacity(a),
        Command::Curve(a) => cmd_curve(a),
        Command::Contour(a) => cmd_contour(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Attack(a) => cmd_attack(a),
        Command::Estimate(a) => cmd_estimate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
