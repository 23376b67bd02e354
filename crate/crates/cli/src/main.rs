//! Single-binary front end for the record-based Sharpe estimation pipeline.
//! Every subcommand emits plot-ready CSV (or key=value lines) with
//! self-describing `#` headers; nothing here renders graphics.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use record_sharpe::analytic;
use record_sharpe::calibration::{CalibrationTable, CurveRequirements};
use record_sharpe::error::Error as CoreError;
use record_sharpe::estimator::{efficiency_study, Method};
use record_sharpe::market::{
    ingest_csv, liquidity_filter, ranking_divergence, rolling_estimates, threshold_backtest,
    BacktestMethod, LiquidityParams, RollingOptions,
};
use record_sharpe::records::{r0_statistic, DEFAULT_PERMUTATIONS};
use record_sharpe::synthetic::{geometric_grid, SliceFamily, SurfaceGrid, SurfaceOptions};

use config::Config;
use output::OutputTarget;

/// Exit codes: 0 success, 2 usage (clap), 3 input or market data,
/// 4 calibration table, 5 numeric failure.
const EXIT_INPUT: u8 = 3;
const EXIT_TABLE: u8 = 4;
const EXIT_NUMERIC: u8 = 5;

#[derive(Parser)]
#[command(
    name = "record-sharpe",
    version,
    about = "Moment-free Sharpe ratio estimation from drawdown/drawup durations",
    after_help = "A --config file holds key=value lines (long option names as keys); \
explicit flags always win over config values. All randomness derives from --seed, \
so identical inputs, flags and seed give byte-identical outputs."
)]
struct Cli {
    /// Plain key=value config file merged under the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Cap on worker threads (default: available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count records and drawdown/drawup durations of one return series.
    Records(RecordsArgs),
    /// Build and persist a calibration table by Monte Carlo.
    Calibrate(CalibrateArgs),
    /// Batch rolling Sharpe estimates over a market CSV.
    Estimate(EstimateArgs),
    /// Variance efficiency of the record estimator vs the vanilla one.
    Efficiency(EfficiencyArgs),
    /// Evaluate the analytic reference quantities.
    Analytics(AnalyticsArgs),
    /// Ranking divergence between the two estimators.
    RankCompare(RankCompareArgs),
    /// Naive threshold trading backtest per estimator.
    Backtest(BacktestArgs),
}

#[derive(Args)]
struct RecordsArgs {
    /// Comma-separated returns, e.g. 1,1,-2.
    #[arg(long, conflicts_with = "input")]
    returns: Option<String>,
    /// File with one return per line (# comments allowed).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Permutations for the averaged statistic (0 skips it).
    #[arg(long)]
    permutations: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Output table path.
    #[arg(long)]
    out: PathBuf,
    /// Series lengths, comma separated.
    #[arg(long)]
    ns: Option<String>,
    /// Student tail indices, comma separated.
    #[arg(long)]
    nus: Option<String>,
    #[arg(long)]
    theta_min: Option<f64>,
    #[arg(long)]
    theta_max: Option<f64>,
    #[arg(long)]
    theta_count: Option<usize>,
    /// Drop the Gaussian-limit slice.
    #[arg(long)]
    no_gaussian: bool,
    /// Series per grid point.
    #[arg(long)]
    navg: Option<u64>,
    #[arg(long)]
    permutations: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Provenance timestamp embedded in the table; pass a fixed value for
    /// byte-reproducible output (default: current UTC time).
    #[arg(long)]
    timestamp: Option<String>,
    /// Work budget in elementary scan steps.
    #[arg(long)]
    budget: Option<u128>,
    /// Run even if the estimated work exceeds the budget.
    #[arg(long)]
    force: bool,
    /// Minimum accepted tail fits for the simplified curve.
    #[arg(long)]
    min_accepted_fits: Option<usize>,
    /// Coarse-curve coverage: require a group at or below this R0/n.
    #[arg(long)]
    curve_low_r: Option<f64>,
    /// Coarse-curve coverage: require a group at or above this R0/n.
    #[arg(long)]
    curve_high_r: Option<f64>,
    /// Shortest series length admitted into the coarse curve.
    #[arg(long)]
    collapse_min_n: Option<u32>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Market CSV: date,symbol,close,volume.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    table: PathBuf,
    /// Rolling window length in returns.
    #[arg(long)]
    window: Option<usize>,
    /// table | simplified
    #[arg(long)]
    method: Option<String>,
    /// Periods per year for the annualized columns.
    #[arg(long)]
    annualize: Option<f64>,
    #[arg(long)]
    permutations: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Liquidity filter as min_price,min_median_volume,volume_window.
    #[arg(long)]
    liquidity: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EfficiencyArgs {
    #[arg(long)]
    table: PathBuf,
    /// gaussian | student
    #[arg(long)]
    family: String,
    /// Tail index (student family only).
    #[arg(long)]
    nu: Option<f64>,
    /// Series lengths, comma separated.
    #[arg(long)]
    n: String,
    /// True Sharpe ratios, comma separated.
    #[arg(long)]
    theta: String,
    #[arg(long)]
    navg: Option<u64>,
    #[arg(long)]
    permutations: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyticsArgs {
    /// driftless-pmf | gaussian-records | student3-records | density0 |
    /// crossover | rate
    #[arg(long)]
    which: String,
    /// Series length (driftless-pmf).
    #[arg(long)]
    n: Option<usize>,
    /// Largest length for curves over n.
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// c/sigma ratios, comma separated (crossover, rate).
    #[arg(long)]
    ratios: Option<String>,
    /// gaussian | student3 (rate).
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RankCompareArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    quantile: Option<f64>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    annualize: Option<f64>,
    #[arg(long)]
    permutations: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    liquidity: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BacktestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    window: Option<usize>,
    /// Annualized Sharpe magnitude required to take a position.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    annualize: Option<f64>,
    #[arg(long)]
    permutations: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    liquidity: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// CLI failure with its exit code; printed as one machine-readable line.
struct CliError {
    code: u8,
    kind: &'static str,
    message: String,
}

impl CliError {
    fn new(code: u8, kind: &'static str, message: impl Into<String>) -> Self {
        CliError {
            code,
            kind,
            message: message.into(),
        }
    }
}

fn core_error(err: CoreError) -> CliError {
    let (code, kind) = match &err {
        CoreError::Market(_) | CoreError::InvalidInput(_) | CoreError::Io(_) => {
            (EXIT_INPUT, "input")
        }
        CoreError::Table(_) => (EXIT_TABLE, "table"),
        CoreError::Numeric(_) | CoreError::NonConvergence(_) | CoreError::BudgetExceeded { .. } => {
            (EXIT_NUMERIC, "numeric")
        }
    };
    CliError::new(code, kind, err.to_string())
}

fn table_error(err: CoreError) -> CliError {
    CliError::new(EXIT_TABLE, "table", err.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        // Errors only if a global pool already exists, which cannot happen
        // this early.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let config = match Config::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => return fail(CliError::new(EXIT_INPUT, "config", e.to_string())),
    };
    let result = match cli.command {
        Command::Records(args) => run_records(args, &config),
        Command::Calibrate(args) => run_calibrate(args, &config),
        Command::Estimate(args) => run_estimate(args, &config),
        Command::Efficiency(args) => run_efficiency(args, &config),
        Command::Analytics(args) => run_analytics(args, &config),
        Command::RankCompare(args) => run_rank_compare(args, &config),
        Command::Backtest(args) => run_backtest(args, &config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error code={} kind={}: {}", e.code, e.kind, e.message);
    ExitCode::from(e.code)
}

fn parse_f64_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|tok| {
            tok.trim().parse::<f64>().map_err(|_| {
                CliError::new(EXIT_INPUT, "input", format!("bad {what} value {tok:?}"))
            })
        })
        .collect()
}

fn parse_u32_list(text: &str, what: &str) -> Result<Vec<u32>, CliError> {
    text.split(',')
        .map(|tok| {
            tok.trim().parse::<u32>().map_err(|_| {
                CliError::new(EXIT_INPUT, "input", format!("bad {what} value {tok:?}"))
            })
        })
        .collect()
}

fn parse_method(name: &str) -> Result<Method, CliError> {
    match name {
        "table" | "table-inverse" => Ok(Method::TableInverse),
        "simplified" => Ok(Method::Simplified),
        other => Err(CliError::new(
            EXIT_INPUT,
            "input",
            format!("unknown method {other:?} (expected table or simplified)"),
        )),
    }
}

fn parse_liquidity(text: &str) -> Result<LiquidityParams, CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::new(
            EXIT_INPUT,
            "input",
            "liquidity expects min_price,min_median_volume,volume_window",
        ));
    }
    let bad = |what: &str| CliError::new(EXIT_INPUT, "input", format!("bad liquidity {what}"));
    Ok(LiquidityParams {
        min_price: parts[0].trim().parse().map_err(|_| bad("min_price"))?,
        min_median_volume: parts[1]
            .trim()
            .parse()
            .map_err(|_| bad("min_median_volume"))?,
        volume_window: parts[2].trim().parse().map_err(|_| bad("volume_window"))?,
    })
}

fn load_table(path: &PathBuf) -> Result<CalibrationTable, CliError> {
    CalibrationTable::load(path).map_err(table_error)
}

fn run_records(args: RecordsArgs, config: &Config) -> Result<(), CliError> {
    let permutations = config.resolve(args.permutations, "permutations", DEFAULT_PERMUTATIONS);
    let seed = config.resolve(args.seed, "seed", 42);

    let values: Vec<f64> = if let Some(list) = &args.returns {
        parse_f64_list(list, "return")?
    } else if let Some(path) = &args.input {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::new(EXIT_INPUT, "input", e.to_string()))?;
        let mut out = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line == "return" {
                continue;
            }
            out.push(line.parse::<f64>().map_err(|_| {
                CliError::new(EXIT_INPUT, "input", format!("bad return value {line:?}"))
            })?);
        }
        out
    } else {
        return Err(CliError::new(
            EXIT_INPUT,
            "input",
            "pass --returns or --input",
        ));
    };

    let series = record_sharpe::ReturnSeries::new(values).map_err(core_error)?;
    let path = record_sharpe::PricePath::from_returns(&series);
    let mut summary = record_sharpe::count_records(&path);
    if permutations > 0 && series.len() >= 2 {
        summary = r0_statistic(&series, permutations, seed).map_err(core_error)?;
    }

    let mut target = OutputTarget::create(args.out.as_deref())?;
    target.headers(&[
        &format!("subcommand=records permutations={permutations}"),
        &format!("seed={seed}"),
    ])?;
    target.line(&format!("n={}", summary.n))?;
    target.line(&format!("r_plus={}", summary.r_plus))?;
    target.line(&format!("r_minus={}", summary.r_minus))?;
    target.line(&format!("t_minus={}", summary.t_minus))?;
    target.line(&format!("t_plus={}", summary.t_plus))?;
    match summary.r0 {
        Some(r0) => target.line(&format!("r0={r0}"))?,
        None => target.line("r0=unset")?,
    }
    target.finish()
}

fn run_calibrate(args: CalibrateArgs, config: &Config) -> Result<(), CliError> {
    let desk = SurfaceGrid::desk_scale();
    let ns = match config.resolve_opt(args.ns.clone(), "ns") {
        Some(text) => parse_u32_list(&text, "n")?,
        None => desk.ns.clone(),
    };
    let nus = match config.resolve_opt(args.nus.clone(), "nus") {
        Some(text) => parse_f64_list(&text, "nu")?,
        None => desk.nus.clone(),
    };
    let theta_min = config.resolve(args.theta_min, "theta-min", 1e-3);
    let theta_max = config.resolve(args.theta_max, "theta-max", 1.0);
    let theta_count = config.resolve(args.theta_count, "theta-count", 15);
    if !(theta_min > 0.0 && theta_max > theta_min && theta_count >= 4) {
        return Err(CliError::new(
            EXIT_INPUT,
            "input",
            "theta grid needs 0 < theta-min < theta-max and at least 4 points",
        ));
    }
    let grid = SurfaceGrid {
        ns,
        thetas: geometric_grid(theta_min, theta_max, theta_count),
        nus,
        include_gaussian: !args.no_gaussian,
    };
    let n_avg = config.resolve(args.navg, "navg", 10_000);
    let permutations = config.resolve(args.permutations, "permutations", DEFAULT_PERMUTATIONS);
    let seed = config.resolve(args.seed, "seed", 42);
    let timestamp = config
        .resolve_opt(args.timestamp, "timestamp")
        .unwrap_or_else(|| chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string());
    let surface_options = SurfaceOptions {
        work_budget: config.resolve(args.budget, "budget", SurfaceOptions::default().work_budget),
        force: args.force,
    };
    let defaults = CurveRequirements::default();
    let curve_requirements = CurveRequirements {
        min_accepted: config.resolve(
            args.min_accepted_fits,
            "min-accepted-fits",
            defaults.min_accepted,
        ),
        min_low_r: config.resolve(args.curve_low_r, "curve-low-r", defaults.min_low_r),
        min_high_r: config.resolve(args.curve_high_r, "curve-high-r", defaults.min_high_r),
        collapse_min_n: config.resolve(
            args.collapse_min_n,
            "collapse-min-n",
            defaults.collapse_min_n,
        ),
    };

    let table = CalibrationTable::build(
        &grid,
        n_avg,
        permutations,
        seed,
        &timestamp,
        &surface_options,
        &curve_requirements,
    )
    .map_err(core_error)?;
    table.save(&args.out).map_err(core_error)?;
    println!(
        "wrote {} (checksum {})",
        args.out.display(),
        table.checksum()
    );
    Ok(())
}

fn rolling_from_args(
    input: &PathBuf,
    table: &CalibrationTable,
    window: usize,
    method: Method,
    annualize: f64,
    permutations: u64,
    seed: u64,
    liquidity: Option<&str>,
) -> Result<
    (
        record_sharpe::market::MarketPanel,
        record_sharpe::market::RollingEstimates,
    ),
    CliError,
> {
    let outcome = ingest_csv(input).map_err(core_error)?;
    for reject in &outcome.rejected {
        eprintln!("# rejected line {}: {}", reject.line, reject.reason);
    }
    let panel = outcome.panel;
    let mask = match liquidity {
        Some(text) => Some(liquidity_filter(&panel, &parse_liquidity(text)?)),
        None => None,
    };
    let mut options = RollingOptions::new(
        window,
        record_sharpe::estimator::EstimateOptions {
            method,
            permutations,
            seed,
            periods_per_year: None,
        },
    );
    options.periods_per_year = annualize;
    options.liquidity = mask;
    let estimates = rolling_estimates(&panel, table, &options).map_err(core_error)?;
    Ok((panel, estimates))
}

fn run_estimate(args: EstimateArgs, config: &Config) -> Result<(), CliError> {
    let window = config.resolve(args.window, "window", 252);
    let method = parse_method(
        &config
            .resolve_opt(args.method, "method")
            .unwrap_or_else(|| "table".into()),
    )?;
    let annualize = config.resolve(args.annualize, "annualize", 252.0);
    let permutations = config.resolve(args.permutations, "permutations", DEFAULT_PERMUTATIONS);
    let seed = config.resolve(args.seed, "seed", 42);
    let liquidity = config.resolve_opt(args.liquidity, "liquidity");

    let table = load_table(&args.table)?;
    let (panel, estimates) = rolling_from_args(
        &args.input,
        &table,
        window,
        method,
        annualize,
        permutations,
        seed,
        liquidity.as_deref(),
    )?;

    let mut target = OutputTarget::create(args.out.as_deref())?;
    target.headers(&[
        &format!(
            "subcommand=estimate window={window} method={} annualize={annualize} permutations={permutations}",
            method.label()
        ),
        &format!("seed={seed}"),
        &format!("table-checksum={}", table.checksum()),
    ])?;
    target.line("symbol,date,window,r0,nu,theta_record,theta_record_annualized,theta_vanilla,theta_vanilla_annualized,diagnostics")?;
    for row in &estimates.rows {
        let diags: Vec<String> = row.diagnostics.iter().map(|d| d.to_string()).collect();
        target.line(&format!(
            "{},{},{},{},{},{},{},{},{},{}",
            panel.symbols()[row.symbol_idx],
            row.date,
            row.n,
            row.r0,
            row.nu.map(|v| v.label()).unwrap_or_default(),
            row.theta_record,
            row.theta_record_annualized,
            row.theta_vanilla.map(|v| v.to_string()).unwrap_or_default(),
            row.theta_vanilla_annualized
                .map(|v| v.to_string())
                .unwrap_or_default(),
            diags.join(";"),
        ))?;
    }
    target.finish()
}

fn run_efficiency(args: EfficiencyArgs, config: &Config) -> Result<(), CliError> {
    let table = load_table(&args.table)?;
    let family = match args.family.as_str() {
        "gaussian" => SliceFamily::Gaussian,
        "student" => {
            let nu = args
                .nu
                .ok_or_else(|| CliError::new(EXIT_INPUT, "input", "student family needs --nu"))?;
            SliceFamily::Student(nu)
        }
        other => {
            return Err(CliError::new(
                EXIT_INPUT,
                "input",
                format!("unknown family {other:?}"),
            ))
        }
    };
    let ns = parse_u32_list(&args.n, "n")?;
    let thetas = parse_f64_list(&args.theta, "theta")?;
    let n_avg = config.resolve(args.navg, "navg", 2000);
    let permutations = config.resolve(args.permutations, "permutations", DEFAULT_PERMUTATIONS);
    let seed = config.resolve(args.seed, "seed", 42);

    let reports = efficiency_study(family, &ns, &thetas, n_avg, permutations, seed, &table)
        .map_err(core_error)?;

    let mut target = OutputTarget::create(args.out.as_deref())?;
    target.headers(&[
        &format!(
            "subcommand=efficiency family={} navg={n_avg} permutations={permutations}",
            family.label()
        ),
        &format!("seed={seed}"),
        &format!("table-checksum={}", table.checksum()),
    ])?;
    target.line("family,n,theta,sigma_s_sq,sigma_r_sq,rho,usable")?;
    for r in &reports {
        target.line(&format!(
            "{},{},{},{},{},{},{}",
            r.slice.label(),
            r.n,
            r.theta_true,
            r.sigma_s_sq,
            r.sigma_r_sq,
            r.rho,
            r.usable
        ))?;
    }
    target.finish()
}

fn run_analytics(args: AnalyticsArgs, config: &Config) -> Result<(), CliError> {
    let mut target = OutputTarget::create(args.out.as_deref())?;
    let sigma = config.resolve(args.sigma, "sigma", 1.0);
    match args.which.as_str() {
        "driftless-pmf" => {
            let n = args
                .n
                .ok_or_else(|| CliError::new(EXIT_INPUT, "input", "driftless-pmf needs --n"))?;
            let law = analytic::driftless_record_pmf(n).map_err(core_error)?;
            target.headers(&[&format!("subcommand=analytics which=driftless-pmf n={n}")])?;
            target.line("r,probability")?;
            for (i, p) in law.probabilities().iter().enumerate() {
                target.line(&format!("{},{}", i + 1, p))?;
            }
        }
        "gaussian-records" | "student3-records" => {
            let n_max = args.n_max.unwrap_or(500);
            let c = config.resolve(args.c, "c", 0.001);
            target.headers(&[&format!(
                "subcommand=analytics which={} c={c} sigma={sigma} n_max={n_max}",
                args.which
            )])?;
            target.line("n,expected_records")?;
            let start = if args.which == "student3-records" {
                2
            } else {
                1
            };
            for n in start..=n_max {
                let v = if args.which == "gaussian-records" {
                    analytic::gaussian_expected_records(c, sigma, n)
                } else {
                    analytic::student3_expected_records(c, sigma, n)
                }
                .map_err(core_error)?;
                target.line(&format!("{n},{v}"))?;
            }
        }
        "density0" => {
            let n_max = args.n_max.unwrap_or(100);
            target.headers(&[&format!(
                "subcommand=analytics which=density0 sigma={sigma} n_max={n_max}"
            )])?;
            target.line("n,density,asymptotic")?;
            for n in 1..=n_max {
                let exact =
                    analytic::student3_convolution_density_at_zero(n, sigma).map_err(core_error)?;
                let asym = analytic::student3_convolution_density_asymptotic(n, sigma)
                    .map_err(core_error)?;
                target.line(&format!("{n},{exact},{asym}"))?;
            }
        }
        "crossover" => {
            let ratios = parse_f64_list(
                &args.ratios.ok_or_else(|| {
                    CliError::new(EXIT_INPUT, "input", "crossover needs --ratios")
                })?,
                "ratio",
            )?;
            target.headers(&[&"subcommand=analytics which=crossover".to_string()])?;
            target.line("ratio,n0")?;
            for ratio in ratios {
                let n0 = analytic::crossover_n0(ratio).map_err(core_error)?;
                target.line(&format!(
                    "{ratio},{}",
                    n0.map(|v| v.to_string()).unwrap_or_default()
                ))?;
            }
        }
        "rate" => {
            let family = match args.family.as_deref() {
                Some("gaussian") => analytic::RateFamily::Gaussian,
                Some("student3") => analytic::RateFamily::Student3,
                other => {
                    return Err(CliError::new(
                        EXIT_INPUT,
                        "input",
                        format!("rate needs --family gaussian|student3, got {other:?}"),
                    ))
                }
            };
            let ratios = parse_f64_list(
                &args
                    .ratios
                    .ok_or_else(|| CliError::new(EXIT_INPUT, "input", "rate needs --ratios"))?,
                "ratio",
            )?;
            target.headers(&[&format!(
                "subcommand=analytics which=rate family={}",
                family.label()
            )])?;
            target.line("ratio,rate,in_regime")?;
            for ratio in ratios {
                let r = analytic::large_drift_record_rate(family, ratio).map_err(core_error)?;
                target.line(&format!("{ratio},{},{}", r.rate, r.in_regime))?;
            }
        }
        other => {
            return Err(CliError::new(
                EXIT_INPUT,
                "input",
                format!("unknown analytics target {other:?}"),
            ))
        }
    }
    target.finish()
}

fn run_rank_compare(args: RankCompareArgs, config: &Config) -> Result<(), CliError> {
    let window = config.resolve(args.window, "window", 100);
    let quantile = config.resolve(args.quantile, "quantile", 0.05);
    let method = parse_method(
        &config
            .resolve_opt(args.method, "method")
            .unwrap_or_else(|| "table".into()),
    )?;
    let annualize = config.resolve(args.annualize, "annualize", 252.0);
    let permutations = config.resolve(args.permutations, "permutations", DEFAULT_PERMUTATIONS);
    let seed = config.resolve(args.seed, "seed", 42);
    let liquidity = config.resolve_opt(args.liquidity, "liquidity");

    let table = load_table(&args.table)?;
    let (_, estimates) = rolling_from_args(
        &args.input,
        &table,
        window,
        method,
        annualize,
        permutations,
        seed,
        liquidity.as_deref(),
    )?;
    let reports = ranking_divergence(&estimates, quantile).map_err(core_error)?;

    let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut target = OutputTarget::create(args.out.as_deref())?;
    target.headers(&[
        &format!(
            "subcommand=rank-compare window={window} quantile={quantile} method={} permutations={permutations}",
            method.label()
        ),
        &format!("seed={seed}"),
        &format!("table-checksum={}", table.checksum()),
    ])?;
    target.line("date,num_assets,top_overlap,bottom_overlap,spearman_positive,kendall_positive,spearman_negative,kendall_negative,blest,nu_mean,nu_sd")?;
    for r in &reports {
        target.line(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.date,
            r.num_assets,
            r.top_overlap,
            r.bottom_overlap,
            fmt_opt(r.spearman_positive),
            fmt_opt(r.kendall_positive),
            fmt_opt(r.spearman_negative),
            fmt_opt(r.kendall_negative),
            fmt_opt(r.blest),
            fmt_opt(r.nu_mean),
            fmt_opt(r.nu_sd),
        ))?;
    }
    target.finish()
}

fn run_backtest(args: BacktestArgs, config: &Config) -> Result<(), CliError> {
    let window = config.resolve(args.window, "window", 100);
    let threshold = config.resolve(args.threshold, "threshold", 1.0);
    let method = parse_method(
        &config
            .resolve_opt(args.method, "method")
            .unwrap_or_else(|| "table".into()),
    )?;
    let annualize = config.resolve(args.annualize, "annualize", 252.0);
    let permutations = config.resolve(args.permutations, "permutations", DEFAULT_PERMUTATIONS);
    let seed = config.resolve(args.seed, "seed", 42);
    let liquidity = config.resolve_opt(args.liquidity, "liquidity");

    let table = load_table(&args.table)?;
    let (panel, estimates) = rolling_from_args(
        &args.input,
        &table,
        window,
        method,
        annualize,
        permutations,
        seed,
        liquidity.as_deref(),
    )?;

    let mut target = OutputTarget::create(args.out.as_deref())?;
    target.headers(&[
        &format!(
            "subcommand=backtest window={window} threshold={threshold} method={} permutations={permutations}",
            method.label()
        ),
        &format!("seed={seed}"),
        &format!("table-checksum={}", table.checksum()),
    ])?;
    target.line("method,date,aggregate_return,log_wealth,positions")?;
    for variant in [BacktestMethod::Record, BacktestMethod::Vanilla] {
        let result =
            threshold_backtest(&panel, &estimates, variant, threshold).map_err(core_error)?;
        for day in &result.days {
            target.line(&format!(
                "{},{},{},{},{}",
                variant.label(),
                day.date,
                day.aggregate_return,
                day.log_wealth,
                day.positions
            ))?;
        }
    }
    target.finish()
}
