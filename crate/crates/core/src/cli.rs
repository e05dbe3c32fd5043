//! Command-line front end. Exit codes: 0 success, 1 runtime failure,
//! 2 invalid input.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domains::{check_convex_fibers, fiber_defects, minkowski_sum, IndexSet};
use crate::error::{Error, Result};
use crate::esprit::{esprit_eroded, esprit_nd, EspritOptions, ModelOrder};
use crate::grid::GridSpec;
use crate::harness::{builtin_scenario, match_frequencies, run_experiment, write_results, ExperimentSpec, RunOptions, SCENARIOS};
use crate::hankel::capacity;
use crate::signal::{add_noise, eval_model, random_model, ExponentialModel, Layout, SampleFile};

const GRID_HELP: &str = "\
GRID SPECS:
  box:N1,...,Nd[@o1,...,od]   N1 x ... x Nd box, optional offset (default 0)
  triangle:L                  {(i,j): i,j >= 1, i+j <= L+1}
  half_disc:R                 {(i,j): j >= 0, i^2+j^2 <= R^2}
  mask:FILE.json              explicit point list
A spec may also be written inline as JSON, e.g. '{\"dim\":2,\"kind\":\"box\",\"widths\":[9,9]}'.";

#[derive(Debug, Parser)]
#[command(name = "gdesprit", version, about = "Multidimensional ESPRIT on general sampling grids", after_help = GRID_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample an exponential sum on a grid, optionally with noise.
    #[command(after_help = GRID_HELP)]
    Synth(SynthArgs),
    /// Estimate frequencies and coefficients from a sample file.
    #[command(after_help = GRID_HELP)]
    Estimate(EstimateArgs),
    /// Run an experiment spec or a bundled scenario.
    Experiment(ExperimentArgs),
    /// Sizes, capacity and fiber structure of a row domain.
    #[command(after_help = GRID_HELP)]
    DomainInfo(DomainInfoArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Ground-truth model JSON; otherwise a model is drawn from the flags below.
    #[arg(long, conflicts_with_all = ["layout", "k", "dim"])]
    pub model: Option<PathBuf>,
    #[arg(long, default_value = "uniform_imag")]
    pub layout: Layout,
    #[arg(long = "k", visible_alias = "K")]
    pub k: Option<usize>,
    /// Defaults to the grid dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Largest decay rate for the random_complex layout.
    #[arg(long, default_value_t = 0.0)]
    pub damping: f64,
    #[arg(long)]
    pub grid: GridSpec,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Noise-to-signal norm ratio.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Sample file to write; the model goes next to it as *.model.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long)]
    pub xi: GridSpec,
    #[arg(long, conflicts_with = "erode", required_unless_present = "erode")]
    pub upsilon: Option<GridSpec>,
    /// Take Υ as the largest set with Ξ + Υ inside the sample grid.
    #[arg(long)]
    pub erode: bool,
    #[arg(long = "k", visible_alias = "K", conflicts_with = "auto", required_unless_present = "auto")]
    pub k: Option<usize>,
    /// Choose K as the number of singular values ≥ rel-tol·σ₁.
    #[arg(long)]
    pub auto: bool,
    #[arg(long, default_value_t = 1e-8)]
    pub rel_tol: f64,
    /// Seed of the random combination used for pairing.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Pairing residual bound; 0 disables the check (for noisy data).
    #[arg(long, default_value_t = 1e-6)]
    pub residual_tol: f64,
    /// Ground-truth model; prints the matched frequency error.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment spec JSON.
    #[arg(required_unless_present = "scenario", conflicts_with = "scenario")]
    pub spec: Option<PathBuf>,
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(SCENARIOS))]
    pub scenario: Option<String>,
    /// Result directory (default: the spec's "output", else results/<name>).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct DomainInfoArgs {
    /// Row domain Ξ.
    pub xi: GridSpec,
    /// Column domain Υ (defaults to Ξ).
    #[arg(long)]
    pub upsilon: Option<GridSpec>,
}

fn check_input(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(Error::invalid(format!("{} is not a readable file", path.display())));
    }
    Ok(())
}

fn check_output(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            Err(Error::invalid(format!("output directory {} does not exist", dir.display())))
        }
        _ => Ok(()),
    }
}

/// `samples.json` → `samples.model.json`
pub fn sidecar_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.model.json"))
}

fn read_model(path: &Path) -> Result<ExponentialModel> {
    check_input(path)?;
    let m: ExponentialModel = serde_json::from_str(&fs::read_to_string(path)?)?;
    m.validate()?;
    Ok(m)
}

fn synth(a: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    check_output(&a.out)?;
    let omega = a.grid.to_index_set()?;
    let model = match &a.model {
        Some(p) => read_model(p)?,
        None => {
            let k = a.k.ok_or_else(|| Error::invalid("either --model or --k is required"))?;
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            random_model(k, a.dim.unwrap_or(omega.dim()), &mut rng, a.layout, a.damping)?
        }
    };
    let clean = eval_model(&model, &omega)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    rng.set_stream(1);
    let noisy = add_noise(&clean, a.noise, &mut rng)?;
    let diff: f64 = noisy.values.iter().zip(&clean.values).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let achieved = if a.noise == 0.0 { 0.0 } else { diff / clean.norm() };

    fs::write(&a.out, serde_json::to_string(&SampleFile::from_sequence(a.grid.clone(), &noisy))?)?;
    let side = sidecar_path(&a.out);
    fs::write(&side, serde_json::to_string_pretty(&model)?)?;
    writeln!(out, "samples: {} ({} points)", a.out.display(), omega.len())?;
    writeln!(out, "model: {} (K = {})", side.display(), model.order())?;
    writeln!(out, "noise ratio: {achieved:e}")?;
    Ok(())
}

fn estimate(a: &EstimateArgs, out: &mut dyn Write) -> Result<()> {
    check_input(&a.samples)?;
    check_output(&a.out)?;
    let truth = a.truth.as_deref().map(read_model).transpose()?;
    let file: SampleFile = serde_json::from_str(&fs::read_to_string(&a.samples)?)?;
    let f = file.to_sequence()?;
    let xi = a.xi.to_index_set()?;
    let opts = EspritOptions {
        model_order: match a.k {
            Some(k) => ModelOrder::Fixed(k),
            None => ModelOrder::Auto { rel_tol: a.rel_tol },
        },
        combo_seed: a.seed,
        combo_retries: 8,
        diag_residual_tol: (a.residual_tol > 0.0).then_some(a.residual_tol),
    };
    let report = match &a.upsilon {
        Some(u) => esprit_nd(&f, &xi, &u.to_index_set()?, &opts)?,
        None => esprit_eroded(&f, &xi, &opts)?.1,
    };
    fs::write(&a.out, serde_json::to_string_pretty(&report)?)?;
    writeln!(out, "K: {}", report.order())?;
    writeln!(out, "max pairing residual: {:e}", report.max_pairing_residual())?;
    writeln!(out, "singular value gap: {:e}", report.singular_gap())?;
    if let Some(m) = truth {
        let matched = match_frequencies(&m.nodes(), &report.model.nodes())?;
        let worst = matched.lambda_errors.iter().cloned().fold(0.0, f64::max);
        writeln!(out, "matched error: {worst:e}")?;
    }
    for w in &report.warnings {
        writeln!(out, "warning: {w}")?;
    }
    Ok(())
}

fn experiment(a: &ExperimentArgs, out: &mut dyn Write) -> Result<()> {
    let mut spec = match (&a.spec, &a.scenario) {
        (Some(p), _) => {
            check_input(p)?;
            ExperimentSpec::from_json_file(p)?
        }
        (None, Some(name)) => builtin_scenario(name).ok_or_else(|| Error::invalid(format!("unknown scenario {name}")))?,
        (None, None) => return Err(Error::invalid("an experiment spec or --scenario is required")),
    };
    if let Some(t) = a.trials {
        spec.trials = t;
    }
    let dir = a
        .out
        .clone()
        .or_else(|| spec.output.clone())
        .unwrap_or_else(|| Path::new("results").join(&spec.name));
    let summary = run_experiment(&spec, RunOptions { jobs: a.jobs.max(1) })?;
    write_results(&summary, &dir)?;
    writeln!(
        out,
        "{}: |Xi| = {}, |Upsilon| = {}, |Omega| = {}, capacity {}, K = {}",
        spec.name, summary.xi_size, summary.upsilon_size, summary.omega_size, summary.capacity, spec.model.k
    )?;
    writeln!(out, "{:>12} {:>7} {:>9} {:>14} {:>14} {:>12}", "noise", "trials", "failures", "median err", "max err", "sigma gap")?;
    let f = |v: Option<f64>| v.map(|x| format!("{x:.3e}")).unwrap_or_else(|| "-".into());
    for r in &summary.ratios {
        writeln!(
            out,
            "{:>12.3e} {:>7} {:>9} {:>14} {:>14} {:>12}",
            r.noise_ratio,
            r.trials,
            r.failures,
            f(r.median_lambda_err),
            f(r.max_lambda_err),
            f(r.median_singular_gap)
        )?;
        if let (Some(n), Some(tol)) = (r.within_tolerance, spec.tolerance) {
            writeln!(out, "{:>12} {n}/{} trials within {tol:e}", "", r.trials)?;
        }
    }
    let wall: f64 = summary.trials.iter().map(|t| t.wall_time.as_secs_f64()).sum();
    writeln!(out, "results: {} (estimation time {wall:.2}s)", dir.display())?;
    Ok(())
}

fn domain_info(a: &DomainInfoArgs, out: &mut dyn Write) -> Result<()> {
    let xi = a.xi.to_index_set()?;
    let ups: IndexSet = match &a.upsilon {
        Some(u) => u.to_index_set()?,
        None => xi.clone(),
    };
    writeln!(out, "|Xi| = {}", xi.len())?;
    writeln!(out, "|Upsilon| = {}", ups.len())?;
    writeln!(out, "|Xi + Upsilon| = {}", minkowski_sum(&xi, &ups)?.len())?;
    match capacity(&xi) {
        Ok(c) => writeln!(out, "capacity = {c}")?,
        Err(e) => writeln!(out, "capacity = n/a ({e})")?,
    }
    writeln!(out, "convex fibers: {}", check_convex_fibers(&xi))?;
    for (axis, frozen, reason) in fiber_defects(&xi) {
        writeln!(out, "warning: fiber along axis {axis} with frozen coordinates {frozen:?} {reason}")?;
    }
    Ok(())
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => synth(a, out),
        Command::Estimate(a) => estimate(a, out),
        Command::Experiment(a) => experiment(a, out),
        Command::DomainInfo(a) => domain_info(a, out),
    }
}

pub fn exit_code(e: &Error) -> u8 {
    if e.is_usage() { 2 } else { 1 }
}

/// Parses `args`, runs the command against stdout and returns the process
/// exit code.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let stdout = std::io::stdout();
    match execute(&cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
