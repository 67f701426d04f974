//! `leadsto`: simulate factor-model returns, infer causal relations with the
//! temporal-logic engine or the Granger baseline, and score the results.
//!
//! Exit codes: 0 success, 2 usage or invalid configuration, 3 data or
//! numerical error, 4 success but a numerical fallback was used.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Serialize;

use leadsto_core::engine::{write_scores_csv, EngineConfig};
use leadsto_core::eval::{
    consensus, overlap, read_relations_csv, score, write_relations_csv, write_table_csv, Metrics,
    RelationSet, TableRow,
};
use leadsto_core::fdr::{
    summary, write_grid_csv, write_report_csv, FdrConfig, FdrReport, Labeling, NullMode,
    DEFAULT_BINS, DEFAULT_DEGREE, DEFAULT_THRESHOLD,
};
use leadsto_core::granger::write_results_csv;
use leadsto_core::pipeline::{granger, infer, GrangerConfig, GrangerSelection, InferConfig};
use leadsto_core::sim::{simulate, two_periods, Scenario, SimOutput, SimSpec};
use leadsto_core::trace::{load_csv, write_series_csv, RawSeries};
use leadsto_core::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_FALLBACK: u8 = 4;

#[derive(Parser)]
#[command(name = "leadsto", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic returns with known causal structure.
    Simulate(SimulateArgs),
    /// Score pairwise leads-to hypotheses and label them by local fdr.
    Infer(InferArgs),
    /// Pairwise Granger tests with fdr or step-up labeling.
    Granger(GrangerArgs),
    /// Compare found relations with ground truth.
    Evaluate(EvaluateArgs),
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    /// Scenario letter, A to F.
    #[arg(long, value_parser = parse_scenario)]
    #[serde(serialize_with = "as_display")]
    scenario: Scenario,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Generate two periods sharing betas, lags and dependencies.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    periods: u8,
    /// JSON file with simulation parameters; flags below override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    portfolios: Option<usize>,
    #[arg(long)]
    days: Option<usize>,
    #[arg(long)]
    dependencies: Option<usize>,
    #[arg(long)]
    alt_lag: Option<usize>,
    /// Set every factor loading to zero.
    #[arg(long)]
    zero_betas: bool,
    /// Also write residuals of each portfolio regressed on the factors.
    #[arg(long)]
    residuals: bool,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum NullArg {
    Empirical,
    Theoretical,
}

impl From<NullArg> for NullMode {
    fn from(n: NullArg) -> Self {
        match n {
            NullArg::Empirical => NullMode::Empirical,
            NullArg::Theoretical => NullMode::Theoretical,
        }
    }
}

#[derive(Args, Serialize)]
struct FdrArgs {
    /// Label hypotheses with fdr below this value.
    #[arg(long = "fdr", default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long = "null", value_enum, default_value_t = NullArg::Empirical)]
    null_mode: NullArg,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    #[arg(long, default_value_t = DEFAULT_DEGREE)]
    degree: usize,
}

#[derive(Args, Serialize)]
struct InferArgs {
    /// CSV of aligned numeric series, optional date column first.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    lags: Vec<usize>,
    /// Discretization threshold: up when value > theta, down when < -theta.
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    /// Minimum time points in each conditioning cell.
    #[arg(long, default_value_t = 5)]
    min_support: usize,
    /// Compare causes across all windows of an effect.
    #[arg(long)]
    pool_windows: bool,
    #[command(flatten)]
    #[serde(flatten)]
    fdr: FdrArgs,
    /// Label by |z| >= cutoff instead of fdr.
    #[arg(long, conflicts_with = "manual_eps")]
    manual_z: Option<f64>,
    /// Label by |score| >= cutoff instead of fdr.
    #[arg(long)]
    manual_eps: Option<f64>,
}

#[derive(Args, Serialize)]
struct GrangerArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    lags: Vec<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    fdr: FdrArgs,
    /// Select by Benjamini-Hochberg at this level instead of local fdr.
    #[arg(long)]
    step_up: Option<f64>,
}

#[derive(Args, Serialize)]
struct EvaluateArgs {
    /// Ground-truth CSV (source, target, delta[, kind]).
    #[arg(long)]
    truth: PathBuf,
    /// Found relations, one file per period (at most two).
    #[arg(long, required = true, num_args = 1..=2)]
    found: Vec<PathBuf>,
    #[arg(long, default_value = "leadsto")]
    method: String,
    #[arg(long, default_value = "")]
    scenario: String,
    /// Output table CSV.
    #[arg(long)]
    out: PathBuf,
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn as_display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Fully resolved configuration, written next to every command's outputs.
#[derive(Serialize)]
struct RunConfig<'a, A: Serialize, R: Serialize> {
    command: &'a str,
    version: &'a str,
    args: &'a A,
    resolved: &'a R,
}

fn write_run_config<A: Serialize, R: Serialize>(
    dir: &Path,
    command: &str,
    args: &A,
    resolved: &R,
) -> leadsto_core::Result<()> {
    let rc = RunConfig {
        command,
        version: env!("CARGO_PKG_VERSION"),
        args,
        resolved,
    };
    write_json(&dir.join("run_config.json"), &rc)
}

fn create(path: &Path) -> leadsto_core::Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Data(format!("cannot create {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> leadsto_core::Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    std::io::Write::write_all(&mut w, b"\n")?;
    Ok(())
}

fn ensure_dir(dir: &Path) -> leadsto_core::Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::Data(format!("cannot create directory {}: {e}", dir.display())))
}

fn open(path: &Path) -> leadsto_core::Result<File> {
    File::open(path).map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))
}

/// Normal completion, or completion with a numerical fallback.
enum Done {
    Clean,
    Fallback,
}

fn fdr_config(a: &FdrArgs, upper_tail_only: bool) -> FdrConfig {
    FdrConfig {
        bins: a.bins,
        degree: a.degree,
        threshold: a.threshold,
        null_mode: a.null_mode.into(),
        upper_tail_only,
    }
}

/// Warnings were already logged where they arose.
fn report_done(report: &FdrReport) -> Done {
    if report.used_fallback() {
        Done::Fallback
    } else {
        Done::Clean
    }
}

fn write_sim_files(dir: &Path, out: &SimOutput, residuals: bool) -> leadsto_core::Result<()> {
    ensure_dir(dir)?;
    out.write_returns_csv(create(&dir.join("returns.csv"))?)?;
    out.write_errors_csv(create(&dir.join("errors.csv"))?)?;
    out.write_factors_csv(create(&dir.join("factors.csv"))?)?;
    out.write_ground_truth_csv(create(&dir.join("ground_truth.csv"))?)?;
    out.ground_truth
        .write_alternates_csv(create(&dir.join("ground_truth_alternates.csv"))?)?;
    if residuals {
        let series = out
            .residualize()?
            .into_iter()
            .zip(&out.names)
            .map(|(v, n)| RawSeries::new(n.clone(), v))
            .collect::<leadsto_core::Result<Vec<_>>>()?;
        write_series_csv(
            create(&dir.join("residuals.csv"))?,
            &series,
            &[format!("residuals of returns on same-day factors, seed={}", out.spec.seed)],
        )?;
    }
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> leadsto_core::Result<Done> {
    let mut spec = match &a.spec {
        Some(p) => serde_json::from_reader(open(p)?)?,
        None => SimSpec::default(),
    };
    spec.scenario = a.scenario;
    spec.seed = a.seed;
    if let Some(v) = a.portfolios {
        spec.n_portfolios = v;
    }
    if let Some(v) = a.days {
        spec.n_days = v;
    }
    if let Some(v) = a.dependencies {
        spec.n_dependencies = v;
    }
    if let Some(v) = a.alt_lag {
        spec.alt_lag = v;
    }
    spec.zero_betas |= a.zero_betas;
    spec.validate()?;

    ensure_dir(&a.out)?;
    if a.periods == 2 {
        let (p1, p2) = two_periods(&spec)?;
        write_sim_files(&a.out.join("period1"), &p1, a.residuals)?;
        write_sim_files(&a.out.join("period2"), &p2, a.residuals)?;
    } else {
        write_sim_files(&a.out, &simulate(&spec)?, a.residuals)?;
    }
    write_json(&a.out.join("spec.json"), &spec)?;
    write_run_config(&a.out, "simulate", a, &spec)?;
    info!("wrote scenario {} seed {} to {}", spec.scenario, spec.seed, a.out.display());
    Ok(Done::Clean)
}

fn cmd_infer(a: &InferArgs) -> leadsto_core::Result<Done> {
    let manual = match (a.manual_z, a.manual_eps) {
        (Some(z), _) => Some(Labeling::ManualZ(z)),
        (None, Some(e)) => Some(Labeling::ManualScore(e)),
        (None, None) => None,
    };
    let config = InferConfig {
        lags: a.lags.clone(),
        threshold: a.theta,
        engine: EngineConfig {
            min_support: a.min_support,
            pool_windows: a.pool_windows,
        },
        fdr: fdr_config(&a.fdr, false),
        manual,
    };
    let series = load_csv(&a.input)?;
    let result = infer(&series, &config)?;

    ensure_dir(&a.out)?;
    result.trace.write_csv(create(&a.out.join("trace.csv"))?)?;
    write_scores_csv(create(&a.out.join("scores.csv"))?, &result.scores)?;
    write_report_csv(create(&a.out.join("fdr.csv"))?, &result.report)?;
    write_grid_csv(create(&a.out.join("grid.csv"))?, &result.report)?;
    write_json(&a.out.join("summary.json"), &summary(&result.report))?;
    write_relations_csv(create(&a.out.join("relations.csv"))?, &result.relations)?;
    write_run_config(&a.out, "infer", a, &config)?;
    info!(
        "{} hypotheses, {} scored, {} significant relations",
        result.hypotheses.len(),
        result.z.len(),
        result.relations.len()
    );
    Ok(report_done(&result.report))
}

fn cmd_granger(a: &GrangerArgs) -> leadsto_core::Result<Done> {
    let config = GrangerConfig {
        lags: a.lags.clone(),
        fdr: fdr_config(&a.fdr, true),
        selection: match a.step_up {
            Some(level) => GrangerSelection::StepUp(level),
            None => GrangerSelection::LocalFdr,
        },
    };
    let series = load_csv(&a.input)?;
    let run = granger(&series, &config)?;

    ensure_dir(&a.out)?;
    write_results_csv(create(&a.out.join("granger.csv"))?, &run.results)?;
    write_report_csv(create(&a.out.join("fdr.csv"))?, &run.report)?;
    write_grid_csv(create(&a.out.join("grid.csv"))?, &run.report)?;
    write_json(&a.out.join("summary.json"), &summary(&run.report))?;
    write_relations_csv(create(&a.out.join("relations.csv"))?, &run.relations)?;
    write_run_config(&a.out, "granger", a, &config)?;
    info!("{} tests, {} significant relations", run.results.len(), run.relations.len());
    Ok(report_done(&run.report))
}

fn cmd_evaluate(a: &EvaluateArgs) -> leadsto_core::Result<Done> {
    let truth = read_relations_csv(open(&a.truth)?)?;
    let found: Vec<RelationSet> = a
        .found
        .iter()
        .map(|p| read_relations_csv(open(p)?))
        .collect::<leadsto_core::Result<_>>()?;
    let per: Vec<Metrics> = found.iter().map(|f| score(f, &truth)).collect();
    let mut rows: Vec<TableRow> = per
        .iter()
        .enumerate()
        .map(|(i, m)| TableRow::new(&a.method, &a.scenario, &(i + 1).to_string(), m, None))
        .collect();
    if let [f1, f2] = &found[..] {
        let ov = overlap(f1, f2);
        rows.push(TableRow::new(
            &a.method,
            &a.scenario,
            "pooled",
            &Metrics::pooled(&per),
            Some(ov.jaccard),
        ));
        rows.push(TableRow::new(
            &a.method,
            &a.scenario,
            "consensus",
            &score(&consensus(f1, f2), &truth),
            None,
        ));
        println!(
            "intersection: jaccard {:.4}, share of period 1 {:.4}, share of period 2 {:.4}",
            ov.jaccard, ov.of_first, ov.of_second
        );
    }
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    write_table_csv(create(&a.out)?, &rows)?;
    for r in &rows {
        println!(
            "{} {} {}: tp {} fp {} fn {} fdr {:.4} fnr {:.4}",
            r.method, r.scenario, r.period, r.tp, r.fp, r.fn_, r.fdr, r.fnr
        );
    }
    Ok(Done::Clean)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::InvalidSpec(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Infer(a) => cmd_infer(a),
        Command::Granger(a) => cmd_granger(a),
        Command::Evaluate(a) => cmd_evaluate(a),
    };
    match result {
        Ok(Done::Clean) => ExitCode::SUCCESS,
        Ok(Done::Fallback) => {
            warn!("completed with a numerical fallback");
            ExitCode::from(EXIT_FALLBACK)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
