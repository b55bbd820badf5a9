use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use rcbin::arrangement::{enumerate, enumerate_aie, enumerate_bruteforce, enumerate_ie, EnumerateOptions};
use rcbin::effects::{marginal_effect, EffectKind};
use rcbin::harness::io::{self, CsvOptions};
use rcbin::harness::{evaluate, simulate, Design, Estimator, SimConfig};
use rcbin::mixsolver::{smooth, GridSpec, SolverOptions, REPORT_THRESHOLD};
use rcbin::model::{profile_fit, Dataset, FitOptions, ModelFit, Normalization, ProfileBudget, ThetaBox};
use rcbin::univariate::fit_univariate;

#[derive(Parser)]
#[command(name = "rcbin", version, about = "NPMLE for random-coefficient binary response models")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0x5eed)]
    seed: u64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// KKT tolerance of the mixture solver.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,
    /// Iteration cap of the mixture solver.
    #[arg(long, global = true, default_value_t = 10_000)]
    max_iter: usize,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the NPMLE (and theta, when w columns are present).
    Fit(FitArgs),
    /// Intercept-only fit from columns y and v.
    Univariate(InputArgs),
    /// Dump the cells of the arrangement.
    Enumerate(EnumerateArgs),
    /// Probability and marginal-effect bounds from a saved fit.
    Effects(EffectsArgs),
    /// Draw a sample from a simulation design.
    Simulate(SimulateArgs),
    /// Prediction error of the estimators over replications.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct InputArgs {
    /// CSV with columns y, v, z1.., w1.. (or x0..xd with --normalize last).
    #[arg(long)]
    input: PathBuf,
    /// none, last, or price:SCALE.
    #[arg(long, default_value = "none")]
    normalize: String,
    /// Fit each value of this column separately.
    #[arg(long)]
    group_col: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Lower corner of the theta box, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    theta_lower: Vec<f64>,
    /// Upper corner of the theta box, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    theta_upper: Vec<f64>,
    #[arg(long, default_value_t = 11)]
    grid: usize,
    #[arg(long, default_value_t = 200)]
    refine: usize,
    /// Interior points and masses above 1e-3.
    #[arg(long)]
    masses: Option<PathBuf>,
    /// Smoothed density on a grid.
    #[arg(long)]
    contours: Option<PathBuf>,
    /// Kernel variances per coordinate.
    #[arg(long, value_delimiter = ',', default_value = "0.04,0.04")]
    bandwidth: Vec<f64>,
    #[arg(long, default_value_t = 101)]
    grid_points: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Auto,
    Ie,
    Aie,
    Brute,
}

#[derive(Args)]
struct EnumerateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "auto")]
    method: MethodArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Level,
    Fare,
    Time,
}

#[derive(Args)]
struct EffectsArgs {
    /// Fit JSON written by `fit --out`.
    #[arg(long)]
    fit: PathBuf,
    /// Data the fit came from; supplies the default query at the 75th percentiles.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = "none")]
    normalize: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    z0: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    v0: Option<f64>,
    #[arg(long, value_enum, default_value = "fare")]
    kind: KindArg,
    #[arg(long, default_value_t = 1.0)]
    max_delta: f64,
    #[arg(long, default_value_t = 21)]
    steps: usize,
    /// Label written in the subgroup column.
    #[arg(long)]
    subgroup: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "two_point")]
    design: String,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long, default_value = "two_point")]
    design: String,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 500)]
    eval_n: usize,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long, value_delimiter = ',', default_value = "npmle,npmle_smoothed,logit")]
    estimators: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    bandwidth: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_normalize(s: &str) -> Result<Option<Normalization>> {
    match s {
        "none" => Ok(None),
        "last" => Ok(Some(Normalization::LastUnit)),
        other => {
            let Some(scale) = other.strip_prefix("price:") else {
                bail!(rcbin::Error::InvalidInput(format!("unknown normalization {other:?}")));
            };
            let scale: f64 = scale
                .parse()
                .map_err(|_| rcbin::Error::InvalidInput(format!("bad price scale {scale:?}")))?;
            Ok(Some(Normalization::Price { scale }))
        }
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

/// `fit.json` becomes `fit.<group>.json` for grouped runs.
fn with_group(path: &Path, group: Option<&str>) -> PathBuf {
    let Some(g) = group else {
        return path.to_path_buf();
    };
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}.{g}.{ext}"),
        None => format!("{stem}.{g}"),
    };
    path.with_file_name(name)
}

fn read_groups(args: &InputArgs) -> Result<Vec<io::Group>> {
    let file = File::open(&args.input).with_context(|| format!("opening {}", args.input.display()))?;
    let opts = CsvOptions {
        normalize: parse_normalize(&args.normalize)?,
        group_col: args.group_col.clone(),
    };
    Ok(io::read_dataset(BufReader::new(file), &opts)?)
}

fn fit_options(g: &Global) -> FitOptions {
    FitOptions {
        enumerate: EnumerateOptions {
            seed: g.seed,
            parallel: true,
        },
        solver: SolverOptions {
            tol: g.tol,
            max_iter: g.max_iter,
            ..SolverOptions::default()
        },
        ..FitOptions::default()
    }
}

fn write_contours(path: &Path, fit: &ModelFit<f64>, bandwidth: &[f64], points: usize) -> Result<()> {
    let cells: Vec<_> = fit.significant(REPORT_THRESHOLD).collect();
    if cells.is_empty() {
        bail!(rcbin::Error::InvalidInput("no mass above the report threshold".into()));
    }
    let d = fit.dim();
    if bandwidth.len() != d {
        bail!(rcbin::Error::DimensionMismatch { expected: d, found: bandwidth.len() });
    }
    let support: Vec<Vec<f64>> = cells.iter().map(|c| c.interior.clone()).collect();
    let masses: Vec<f64> = cells.iter().map(|c| c.mass).collect();
    let pad: Vec<f64> = bandwidth.iter().map(|b| 4.0 * b.sqrt()).collect();
    let lower = (0..d).map(|k| support.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min) - pad[k]).collect();
    let upper = (0..d).map(|k| support.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max) + pad[k]).collect();
    let grid = GridSpec { lower, upper, points: vec![points; d] };
    let dens = smooth(&support, &masses, bandwidth, &grid)?;
    io::write_density(open_out(Some(path))?, &dens)?;
    Ok(())
}

fn run_fit(g: &Global, args: &FitArgs) -> Result<()> {
    let opts = fit_options(g);
    let budget = ProfileBudget { grid: args.grid, refine: args.refine };
    for group in read_groups(&args.input)? {
        let name = group.name.as_deref();
        let p = group.data.p();
        if p > 0 && (args.theta_lower.len() != p || args.theta_upper.len() != p) {
            bail!(rcbin::Error::InvalidInput(format!(
                "data have {p} w columns; give --theta-lower and --theta-upper with {p} values"
            )));
        }
        let domain = ThetaBox { lower: args.theta_lower.clone(), upper: args.theta_upper.clone() };
        let fit = profile_fit(&group.data, &domain, &budget, &opts)?;
        info!(
            "group {}: n = {}, M = {}, maximal = {}, logL = {:.6}, gap = {:e}",
            name.unwrap_or("-"),
            group.data.len(),
            fit.n_cells,
            fit.n_maximal,
            fit.loglik,
            fit.gap
        );
        if fit.budget_exhausted {
            log::warn!("profile search stopped on its evaluation budget");
        }
        let out = args.input.out.as_deref().map(|p| with_group(p, name));
        let mut w = open_out(out.as_deref())?;
        io::write_json(&mut w, &fit)?;
        writeln!(w)?;
        w.flush()?;
        if let Some(path) = &args.masses {
            io::write_masses(open_out(Some(&with_group(path, name)))?, &fit, REPORT_THRESHOLD)?;
        }
        if let Some(path) = &args.contours {
            write_contours(&with_group(path, name), &fit, &args.bandwidth, args.grid_points)?;
        }
    }
    Ok(())
}

fn run_univariate(args: &InputArgs) -> Result<()> {
    for group in read_groups(args)? {
        let data: &Dataset<f64> = &group.data;
        if data.dim() != 1 {
            bail!(rcbin::Error::InvalidInput("univariate fits take only columns y and v".into()));
        }
        let fit = fit_univariate(&data.v, &data.y)?;
        let out = args.out.as_deref().map(|p| with_group(p, group.name.as_deref()));
        let mut w = open_out(out.as_deref())?;
        io::write_json(&mut w, &fit)?;
        writeln!(w)?;
        w.flush()?;
    }
    Ok(())
}

fn run_enumerate(g: &Global, args: &EnumerateArgs) -> Result<()> {
    let opts = EnumerateOptions { seed: g.seed, parallel: true };
    for group in read_groups(&args.input)? {
        let hs = group.data.hyperplanes(&vec![0.0; group.data.p()])?;
        let arr = match args.method {
            MethodArg::Auto => enumerate(&hs, &opts)?,
            MethodArg::Ie => enumerate_ie(&hs, &opts)?,
            MethodArg::Aie => enumerate_aie(&hs, &opts)?,
            MethodArg::Brute => enumerate_bruteforce(&hs)?,
        };
        info!("{} cells, {} LPs", arr.len(), arr.stats.total_lps());
        let out = args.input.out.as_deref().map(|p| with_group(p, group.name.as_deref()));
        arr.write_csv(open_out(out.as_deref())?)?;
    }
    Ok(())
}

fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
}

fn run_effects(args: &EffectsArgs) -> Result<()> {
    let fit = io::read_fit(BufReader::new(
        File::open(&args.fit).with_context(|| format!("opening {}", args.fit.display()))?,
    ))?;
    let (z0, v0) = match (&args.z0, args.v0) {
        (Some(z), Some(v)) => (z.clone(), v),
        _ => {
            let Some(path) = &args.input else {
                bail!(rcbin::Error::InvalidInput("give --z0 and --v0, or --input for the default query".into()));
            };
            let opts = CsvOptions { normalize: parse_normalize(&args.normalize)?, group_col: None };
            let groups = io::read_dataset(BufReader::new(File::open(path)?), &opts)?;
            let data = &groups[0].data;
            let z = (0..data.dim() - 1)
                .map(|k| quantile(&data.z.iter().map(|r| r[k]).collect::<Vec<_>>(), 0.75))
                .collect();
            (args.z0.clone().unwrap_or(z), args.v0.unwrap_or_else(|| quantile(&data.v, 0.75)))
        }
    };
    let kind = match args.kind {
        KindArg::Level => EffectKind::Level,
        KindArg::Fare => EffectKind::Fare,
        KindArg::Time => EffectKind::Time,
    };
    if !(args.max_delta >= 0.0) || args.steps == 0 {
        bail!(rcbin::Error::InvalidInput("need max_delta >= 0 and at least one step".into()));
    }
    let rows = (0..args.steps)
        .map(|k| {
            let delta = if args.steps == 1 { args.max_delta } else { args.max_delta * k as f64 / (args.steps - 1) as f64 };
            marginal_effect(&fit, &z0, v0, delta, kind).map(|b| (b, args.subgroup.clone()))
        })
        .collect::<rcbin::Result<Vec<_>>>()?;
    io::write_effects(open_out(args.out.as_deref())?, &rows)?;
    Ok(())
}

fn run_simulate(g: &Global, args: &SimulateArgs) -> Result<()> {
    let design: Design = args.design.parse()?;
    let sim = simulate(&SimConfig::new(design, args.n, g.seed))?;
    io::write_dataset(open_out(args.out.as_deref())?, &sim.data)?;
    Ok(())
}

fn run_evaluate(g: &Global, args: &EvaluateArgs) -> Result<()> {
    let design: Design = args.design.parse()?;
    let estimators = args
        .estimators
        .iter()
        .map(|s| s.parse::<Estimator>())
        .collect::<rcbin::Result<Vec<_>>>()?;
    let mut config = SimConfig::new(design, args.n, g.seed);
    config.eval_n = args.eval_n;
    if let Some(b) = &args.bandwidth {
        config.bandwidth = b.clone();
    }
    let reports = evaluate(&config, &estimators, args.reps)?;
    for e in &estimators {
        let k = reports.len().max(1) as f64;
        let mae = reports.iter().filter_map(|r| r.score(*e)).map(|s| s.mae).sum::<f64>() / k;
        let rmse = reports.iter().filter_map(|r| r.score(*e)).map(|s| s.rmse).sum::<f64>() / k;
        info!("{:>15}  MAE {mae:.4}  RMSE {rmse:.4}", e.name());
    }
    io::write_reports(open_out(args.out.as_deref())?, &reports)?;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if cli.global.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.global.threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::Fit(a) => run_fit(&cli.global, a),
        Command::Univariate(a) => run_univariate(a),
        Command::Enumerate(a) => run_enumerate(&cli.global, a),
        Command::Effects(a) => run_effects(a),
        Command::Simulate(a) => run_simulate(&cli.global, a),
        Command::Evaluate(a) => run_evaluate(&cli.global, a),
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            || match c.downcast_ref::<rcbin::Error>() {
                Some(rcbin::Error::Io(io)) => io.kind() == std::io::ErrorKind::BrokenPipe,
                Some(rcbin::Error::Csv(e)) => {
                    matches!(e.kind(), csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe)
                }
                _ => false,
            }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let numerical = e.downcast_ref::<rcbin::Error>().is_some_and(rcbin::Error::is_numerical);
            ExitCode::from(if numerical { 3 } else { 2 })
        }
    }
}
