//! Seeded experiment runner: synthesize, estimate, match against the truth,
//! tabulate.
//!
//! Trial `t` draws its model from a ChaCha8 stream derived from
//! `(seed, t)`, so every noise ratio of a trial sees the same model and
//! differs only in the added noise. Results are written sorted by trial,
//! and wall time is kept out of the files so reruns are byte-identical.
//! The dense kernels run single-threaded during an experiment because
//! faer's blocked reductions depend on the thread count; parallelism comes
//! from running trials concurrently instead.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::{erode, minkowski_sum, IndexSet};
use crate::error::{Error, Result};
use crate::esprit::{esprit_nd, EspritOptions, EstimationReport, ModelOrder};
use crate::grid::GridSpec;
use crate::hankel::capacity;
use crate::linalg::c64;
use crate::signal::{add_noise, eval_model, node_distance, random_model, ExponentialModel, Layout};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelGen {
    pub layout: Layout,
    pub k: usize,
    pub dim: usize,
    pub seed: u64,
    #[serde(default)]
    pub damping_bound: f64,
}

/// Row domain plus either the column domain (Ω = Ξ + Υ) or the sample
/// domain (Υ by erosion).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPlan {
    pub xi: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upsilon: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<GridSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domains {
    pub xi: IndexSet,
    pub upsilon: IndexSet,
    pub omega: IndexSet,
}

impl GridPlan {
    pub fn resolve(&self) -> Result<Domains> {
        let xi = self.xi.to_index_set()?;
        match (&self.upsilon, &self.omega) {
            (Some(u), None) => {
                let upsilon = u.to_index_set()?;
                let omega = minkowski_sum(&xi, &upsilon)?;
                Ok(Domains { xi, upsilon, omega })
            }
            (None, Some(o)) => {
                let omega = o.to_index_set()?;
                let upsilon = erode(&omega, &xi)?;
                Ok(Domains { xi, upsilon, omega })
            }
            _ => Err(Error::invalid("grid plan needs exactly one of \"upsilon\" and \"omega\"")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub model: ModelGen,
    pub grid: GridPlan,
    pub noise_ratios: Vec<f64>,
    pub trials: usize,
    /// Estimate K from the spectrum instead of using the true order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auto_rel_tol: Option<f64>,
    /// Exact-recovery threshold on the max matched λ-error, applied to
    /// noise-free runs in the summary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(&fs::read_to_string(path)?)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.noise_ratios.is_empty() {
            return Err(Error::invalid("at least one noise ratio is required"));
        }
        if let Some(r) = self.noise_ratios.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return Err(Error::invalid(format!("noise ratios must be finite and nonnegative, got {r}")));
        }
        if self.model.k == 0 {
            return Err(Error::ModelOrder("model order must be at least 1".into()));
        }
        if self.xi_dim() != self.model.dim {
            return Err(Error::DimensionMismatch { expected: self.model.dim, got: self.xi_dim() });
        }
        Ok(())
    }

    fn xi_dim(&self) -> usize {
        self.grid.xi.dim
    }
}

fn box_plan(xi: &[i64], upsilon: &[i64]) -> GridPlan {
    GridPlan { xi: GridSpec::boxed(xi, None), upsilon: Some(GridSpec::boxed(upsilon, None)), omega: None }
}

fn scenario(name: &str, model: ModelGen, grid: GridPlan, ratios: Vec<f64>, trials: usize, tol: Option<f64>) -> ExperimentSpec {
    ExperimentSpec {
        name: name.into(),
        model,
        grid,
        noise_ratios: ratios,
        trials,
        auto_rel_tol: None,
        tolerance: tol,
        output: None,
    }
}

pub const SCENARIOS: [&str; 7] = ["spiral", "spiral_small", "half_disc", "half_disc_small", "cube", "cube_small", "noise_ladder"];

/// The six noise levels of the 41×41 noise study.
pub fn noise_ladder() -> Vec<f64> {
    vec![1.0, 10f64.powf(-0.5), 1e-1, 1e-2, 1e-3, 1e-4]
}

pub fn builtin_scenario(name: &str) -> Option<ExperimentSpec> {
    let gen = |layout, k, dim| ModelGen { layout, k, dim, seed: 1, damping_bound: 0.0 };
    let half_disc = |xi: i64, r: i64| GridPlan {
        xi: GridSpec::boxed(&[xi, xi], None),
        upsilon: None,
        omega: Some(GridSpec::half_disc(r)),
    };
    Some(match name {
        "spiral" => scenario(name, gen(Layout::Spiral, 300, 2), box_plan(&[31, 31], &[31, 31]), vec![0.0], 1, Some(1e-8)),
        "spiral_small" => scenario(name, gen(Layout::Spiral, 30, 2), box_plan(&[9, 9], &[9, 9]), vec![0.0], 20, Some(1e-8)),
        "half_disc" => scenario(name, gen(Layout::UniformImag, 100, 2), half_disc(11, 30), vec![0.0], 1, Some(1e-8)),
        "half_disc_small" => scenario(name, gen(Layout::UniformImag, 40, 2), half_disc(7, 20), vec![0.0], 10, Some(1e-8)),
        "cube" => scenario(
            name,
            gen(Layout::UniformImag, 900, 3),
            box_plan(&[11, 11, 11], &[11, 11, 11]),
            vec![0.0],
            1,
            Some(1e-6),
        ),
        "cube_small" => {
            scenario(name, gen(Layout::UniformImag, 50, 3), box_plan(&[5, 5, 5], &[5, 5, 5]), vec![0.0], 10, Some(1e-7))
        }
        "noise_ladder" => scenario(name, gen(Layout::UniformImag, 40, 2), box_plan(&[21, 21], &[21, 21]), noise_ladder(), 20, None),
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// `assignment[k]` is the estimate matched to true node `k`.
    pub assignment: Vec<usize>,
    pub lambda_errors: Vec<f64>,
    pub zeta_errors: Vec<f64>,
}

fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y == -PI { PI } else { y }
}

/// Max over coordinates of the ζ difference with imaginary parts taken
/// modulo 2π.
pub fn zeta_distance(a: &[c64], b: &[c64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            c64::new(d.re, wrap_phase(d.im)).norm()
        })
        .fold(0.0, f64::max)
}

/// Minimum-cost assignment of estimated to true nodes under the
/// `max_p |λ − λ̂|` metric.
pub fn match_frequencies(true_nodes: &[Vec<c64>], est_nodes: &[Vec<c64>]) -> Result<MatchResult> {
    if true_nodes.len() != est_nodes.len() {
        return Err(Error::invalid(format!(
            "cannot match {} estimated nodes against {} true nodes",
            est_nodes.len(),
            true_nodes.len()
        )));
    }
    let n = true_nodes.len();
    let cost: Vec<Vec<f64>> =
        true_nodes.iter().map(|t| est_nodes.iter().map(|e| node_distance(t, e)).collect()).collect();
    let assignment = hungarian(&cost);
    let lambda_errors = (0..n).map(|k| cost[k][assignment[k]]).collect();
    let zeta_errors = (0..n)
        .map(|k| {
            let lt: Vec<c64> = true_nodes[k].iter().map(|l| l.ln()).collect();
            let le: Vec<c64> = est_nodes[assignment[k]].iter().map(|l| l.ln()).collect();
            zeta_distance(&lt, &le)
        })
        .collect();
    Ok(MatchResult { assignment, lambda_errors, zeta_errors })
}

/// Square assignment problem by shortest augmenting paths with potentials,
/// O(n³). Returns the column assigned to each row.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-based with a virtual column 0, as in the usual formulation
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=n {
        if row_of[j] > 0 {
            out[row_of[j] - 1] = j - 1;
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub noise_ratio: f64,
    pub k: usize,
    /// Per true node, empty when estimation failed.
    pub lambda_errors: Vec<f64>,
    pub zeta_errors: Vec<f64>,
    /// `‖ĉ − c‖ / ‖c‖` after matching.
    pub coeff_err: Option<f64>,
    pub singular_values: Vec<f64>,
    pub pairing_residuals: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl TrialResult {
    pub fn max_lambda_err(&self) -> f64 {
        max_or_nan(&self.lambda_errors)
    }

    pub fn max_zeta_err(&self) -> f64 {
        max_or_nan(&self.zeta_errors)
    }

    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }

    /// `σ_K / σ_{K+1}` of the Hankel spectrum for the true K.
    pub fn singular_gap(&self, k: usize) -> f64 {
        match (self.singular_values.get(k - 1), self.singular_values.get(k)) {
            (Some(&a), Some(&b)) if b > 0.0 => a / b,
            (Some(_), _) => f64::INFINITY,
            _ => f64::NAN,
        }
    }
}

fn max_or_nan(v: &[f64]) -> f64 {
    if v.is_empty() { f64::NAN } else { v.iter().cloned().fold(0.0, f64::max) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub noise_ratio: f64,
    pub trials: usize,
    pub failures: usize,
    pub median_lambda_err: Option<f64>,
    pub max_lambda_err: Option<f64>,
    pub median_singular_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub within_tolerance: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub spec: ExperimentSpec,
    pub xi_size: usize,
    pub upsilon_size: usize,
    pub omega_size: usize,
    pub capacity: usize,
    pub ratios: Vec<RatioSummary>,
    pub trials: Vec<TrialResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads for concurrent trials; 1 runs them in order.
    pub jobs: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { jobs: 1 }
    }
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 { values[n / 2] } else { 0.5 * (values[n / 2 - 1] + values[n / 2]) })
}

struct SequentialKernels(faer::Par);

impl SequentialKernels {
    fn enter() -> Self {
        let prev = faer::get_global_parallelism();
        faer::set_global_parallelism(faer::Par::Seq);
        SequentialKernels(prev)
    }
}

impl Drop for SequentialKernels {
    fn drop(&mut self) {
        faer::set_global_parallelism(self.0);
    }
}

fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Model of trial `t`.
pub fn trial_model(gen: &ModelGen, trial: usize) -> Result<ExponentialModel> {
    let mut rng = trial_rng(gen.seed, 2 * trial as u64);
    random_model(gen.k, gen.dim, &mut rng, gen.layout, gen.damping_bound)
}

fn run_one(spec: &ExperimentSpec, dom: &Domains, model: &ExponentialModel, trial: usize, ri: usize) -> TrialResult {
    let start = Instant::now();
    let ratio = spec.noise_ratios[ri];
    let k = spec.model.k;
    let mut out = TrialResult {
        trial,
        noise_ratio: ratio,
        k,
        lambda_errors: vec![],
        zeta_errors: vec![],
        coeff_err: None,
        singular_values: vec![],
        pairing_residuals: vec![],
        failure: None,
        wall_time: Duration::ZERO,
    };
    let attempt = || -> Result<(EstimationReport, MatchResult)> {
        let clean = eval_model(model, &dom.omega)?;
        // noise streams are disjoint from the model streams
        let mut rng = trial_rng(spec.model.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(ri as u64 + 1)), 2 * trial as u64 + 1);
        let f = add_noise(&clean, ratio, &mut rng)?;
        let opts = EspritOptions {
            model_order: match spec.auto_rel_tol {
                Some(rel_tol) => ModelOrder::Auto { rel_tol },
                None => ModelOrder::Fixed(k),
            },
            combo_seed: spec.model.seed.wrapping_add(trial as u64),
            combo_retries: 8,
            diag_residual_tol: if ratio == 0.0 { Some(1e-6) } else { None },
        };
        let report = esprit_nd(&f, &dom.xi, &dom.upsilon, &opts)?;
        let matched = match_frequencies(&model.nodes(), &report.model.nodes())?;
        Ok((report, matched))
    };
    match attempt() {
        Ok((report, matched)) => {
            let est = report.model.coefficients();
            let (mut num, mut den) = (0.0, 0.0);
            for (t, &j) in model.terms.iter().zip(&matched.assignment) {
                num += (est[j] - t.coeff).norm_sqr();
                den += t.coeff.norm_sqr();
            }
            out.coeff_err = Some((num / den).sqrt());
            out.lambda_errors = matched.lambda_errors;
            out.zeta_errors = matched.zeta_errors;
            out.singular_values = report.singular_values;
            out.pairing_residuals = report.pairing_residuals;
        }
        Err(e) => out.failure = Some(e.to_string()),
    }
    out.wall_time = start.elapsed();
    out
}

/// Runs every (trial, ratio) pair. Estimation failures are recorded in the
/// trial; only invalid specs and unusable domains are errors.
pub fn run_experiment(spec: &ExperimentSpec, opts: RunOptions) -> Result<ExperimentSummary> {
    spec.validate()?;
    let _seq = SequentialKernels::enter();
    let dom = spec.grid.resolve()?;
    let cap = capacity(&dom.xi)?;
    if spec.auto_rel_tol.is_none() && spec.model.k > cap {
        return Err(Error::CapacityExceeded { k: spec.model.k, capacity: cap });
    }
    let models: Vec<ExponentialModel> =
        (0..spec.trials).map(|t| trial_model(&spec.model, t)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> =
        (0..spec.trials).flat_map(|t| (0..spec.noise_ratios.len()).map(move |r| (t, r))).collect();
    let run = |&(t, r): &(usize, usize)| run_one(spec, &dom, &models[t], t, r);
    let mut trials: Vec<TrialResult> = if opts.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| Error::Numeric(format!("could not start worker pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run).collect())
    } else {
        jobs.iter().map(run).collect()
    };
    trials.sort_by(|a, b| a.trial.cmp(&b.trial).then(a.noise_ratio.total_cmp(&b.noise_ratio)));

    let ratios = spec
        .noise_ratios
        .iter()
        .map(|&ratio| {
            let these: Vec<&TrialResult> = trials.iter().filter(|t| t.noise_ratio == ratio).collect();
            let ok: Vec<&&TrialResult> = these.iter().filter(|t| t.succeeded()).collect();
            let mut errs: Vec<f64> = ok.iter().map(|t| t.max_lambda_err()).collect();
            let mut gaps: Vec<f64> = ok.iter().map(|t| t.singular_gap(spec.model.k)).collect();
            let within = spec
                .tolerance
                .filter(|_| ratio == 0.0)
                .map(|tol| ok.iter().filter(|t| t.max_lambda_err() <= tol).count());
            RatioSummary {
                noise_ratio: ratio,
                trials: these.len(),
                failures: these.len() - ok.len(),
                max_lambda_err: errs.iter().cloned().reduce(f64::max),
                median_lambda_err: median(&mut errs),
                median_singular_gap: median(&mut gaps),
                within_tolerance: within,
            }
        })
        .collect();
    Ok(ExperimentSummary {
        spec: spec.clone(),
        xi_size: dom.xi.len(),
        upsilon_size: dom.upsilon.len(),
        omega_size: dom.omega.len(),
        capacity: cap,
        ratios,
        trials,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// `trials.csv`: one row per (trial, ratio) with the max matched errors.
/// Failed trials have empty error fields.
pub fn write_trials_csv<W: std::io::Write>(summary: &ExperimentSummary, mut out: W) -> Result<()> {
    writeln!(out, "trial,noise_ratio,k,lambda_err,zeta_err,coeff_err")?;
    for t in &summary.trials {
        let ok = t.succeeded();
        writeln!(
            out,
            "{},{:e},{},{},{},{}",
            t.trial,
            t.noise_ratio,
            t.k,
            fmt_opt(ok.then(|| t.max_lambda_err())),
            fmt_opt(ok.then(|| t.max_zeta_err())),
            fmt_opt(t.coeff_err)
        )?;
    }
    Ok(())
}

/// Writes `trials.csv` and `summary.json` into `dir`.
pub fn write_results(summary: &ExperimentSummary, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut csv = Vec::new();
    write_trials_csv(summary, &mut csv)?;
    fs::write(dir.join("trials.csv"), csv)?;
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(summary)?)?;
    Ok(())
}
