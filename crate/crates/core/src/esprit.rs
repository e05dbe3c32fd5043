//! ESPRIT estimators.
//!
//! [`esprit_1d`] is the classical square-Hankel method. [`esprit_nd`] works
//! on any row domain Ξ whose fibers are gap-free runs of length ≥ 2 and any
//! column domain Υ with `Ξ + Υ` covered by the samples; on boxes it is the
//! block-Hankel method.
//!
//! The signal subspace `U` (top-K left singular vectors of the Hankel
//! matrix) satisfies `U = Λ B` for the Vandermonde-type matrix `Λ` with
//! columns `λ_k^ξ`, ξ ∈ Ξ. Dropping the last (first) point of every fiber
//! along axis p gives `U_{p-}`, `U_{p+}`, and the least-squares solution
//! `A_p` of `U_{p-} A_p = U_{p+}` equals `B^{-1} D_p B` with
//! `D_p = diag(λ_{k,p})`. All `A_p` share the eigenvector matrix, which is
//! taken from a random unit-modulus combination `Σ α_p A_p`; the diagonals of
//! `B A_p B^{-1}` then give node coordinates that are already paired across
//! axes.

use faer::{Mat, MatRef};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domains::{deletion_masks, erode, minkowski_sum, DeletionMasks, IndexSet};
use crate::error::{Error, Result};
use crate::hankel::{build_hankel, numerical_rank};
use crate::linalg::{self, c64, CMat};
use crate::signal::{node_power, ExponentialModel, MdSequence, Term};

/// Relative eigenvalue gap of the combined matrix below which a new random
/// combination is drawn.
pub const MULTIPLICITY_GAP: f64 = 1e-8;

/// Coefficient fits whose Vandermonde condition estimate exceeds this get a
/// warning in the report.
pub const COEFF_CONDITION_WARN: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelOrder {
    Fixed(usize),
    /// Count of singular values at or above `rel_tol·σ_1`.
    Auto { rel_tol: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EspritOptions {
    pub model_order: ModelOrder,
    pub combo_seed: u64,
    pub combo_retries: usize,
    /// Bound on `‖offdiag(B A_p B^{-1})‖_F / ‖A_p‖_F`. `None` accepts any
    /// residual (noisy data), which is still reported.
    pub diag_residual_tol: Option<f64>,
}

impl EspritOptions {
    pub fn with_order(k: usize) -> Self {
        EspritOptions {
            model_order: ModelOrder::Fixed(k),
            combo_seed: 0,
            combo_retries: 8,
            diag_residual_tol: Some(1e-6),
        }
    }

    pub fn auto(rel_tol: f64) -> Self {
        EspritOptions { model_order: ModelOrder::Auto { rel_tol }, ..Self::with_order(1) }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.combo_seed = seed;
        self
    }

    pub fn residual_tol(mut self, tol: Option<f64>) -> Self {
        self.diag_residual_tol = tol;
        self
    }

    fn validate(&self) -> Result<()> {
        match self.model_order {
            ModelOrder::Fixed(0) => return Err(Error::ModelOrder("model order must be at least 1".into())),
            ModelOrder::Auto { rel_tol } if !(rel_tol > 0.0 && rel_tol < 1.0) => {
                return Err(Error::invalid(format!("rel_tol must lie in (0, 1), got {rel_tol}")))
            }
            _ => {}
        }
        if let Some(t) = self.diag_residual_tol {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::invalid(format!("diag_residual_tol must lie in (0, 1), got {t}")));
            }
        }
        Ok(())
    }

    fn joint(&self) -> JointEigOptions {
        JointEigOptions { seed: self.combo_seed, retries: self.combo_retries, residual_tol: self.diag_residual_tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub model: ExponentialModel,
    /// Full spectrum of the Hankel matrix, non-increasing.
    pub singular_values: Vec<f64>,
    /// Per-axis relative off-diagonal residual of `B A_p B^{-1}`.
    pub pairing_residuals: Vec<f64>,
    pub combo_used: Vec<c64>,
    pub capacity: usize,
    pub coefficient_condition: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl EstimationReport {
    pub fn order(&self) -> usize {
        self.model.order()
    }

    /// `σ_K / σ_{K+1}`, infinite when `σ_{K+1}` is zero or absent.
    pub fn singular_gap(&self) -> f64 {
        let k = self.order();
        match (self.singular_values.get(k - 1), self.singular_values.get(k)) {
            (Some(&a), Some(&b)) if b > 0.0 => a / b,
            _ => f64::INFINITY,
        }
    }

    pub fn max_pairing_residual(&self) -> f64 {
        self.pairing_residuals.iter().cloned().fold(0.0, f64::max)
    }
}

/// Principal-branch log, `Im ∈ (−π, π]`.
pub fn principal_log(l: c64) -> c64 {
    l.ln()
}

fn ensure_rank(s: &[f64], k: usize, rows: usize, cols: usize) -> Result<()> {
    let floor = s[0] * rows.max(cols) as f64 * f64::EPSILON;
    if s[0] == 0.0 || s[k - 1] <= floor {
        return Err(Error::ModelOrder(format!(
            "Hankel matrix has numerical rank below K={k} (sigma_K = {:e}, sigma_1 = {:e})",
            s[k - 1],
            s[0]
        )));
    }
    Ok(())
}

/// Frequencies from 1D samples `f_0, ..., f_{L-1}` through the
/// `⌈L/2⌉ × (L + 1 − ⌈L/2⌉)` Hankel matrix `H[i][j] = f_{i+j}`.
pub fn esprit_1d(samples: &[c64], k: usize) -> Result<Vec<c64>> {
    let len = samples.len();
    if len < 3 {
        return Err(Error::invalid("need at least three samples"));
    }
    if samples.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::invalid("samples must be finite"));
    }
    let rows = len.div_ceil(2);
    let cols = len + 1 - rows;
    if k == 0 || k > rows - 1 {
        return Err(Error::ModelOrder(format!("K={k} must lie in 1..={} for {len} samples", rows - 1)));
    }
    let h = Mat::from_fn(rows, cols, |i, j| samples[i + j]);
    let svd = linalg::thin_svd(h.as_ref())?;
    ensure_rank(&svd.s, k, rows, cols)?;
    let u = svd.u.subcols(0, k);
    let a = linalg::lstsq(u.subrows(0, rows - 1), u.subrows(1, rows - 1))?;
    let eig = linalg::eig_full(a.as_ref())?;
    Ok(eig.eigenvalues.into_iter().map(principal_log).collect())
}

/// Least-squares shift matrix `A_p` for axis `axis` from an orthonormal
/// basis `u` of the signal subspace on `xi`.
pub fn shift_matrix(u: MatRef<'_, c64>, xi: &IndexSet, axis: usize) -> Result<CMat> {
    if u.nrows() != xi.len() {
        return Err(Error::DimensionMismatch { expected: xi.len(), got: u.nrows() });
    }
    let masks = deletion_masks(xi, axis)?;
    shift_from_masks(u, &masks)
}

fn shift_from_masks(u: MatRef<'_, c64>, masks: &DeletionMasks) -> Result<CMat> {
    let k = u.ncols();
    if masks.keep_minus.len() < k {
        return Err(Error::CapacityExceeded { k, capacity: masks.keep_minus.len() });
    }
    let minus = linalg::select_rows(u, &masks.keep_minus);
    let plus = linalg::select_rows(u, &masks.keep_plus);
    linalg::lstsq(minus.as_ref(), plus.as_ref())
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointEigOptions {
    pub seed: u64,
    pub retries: usize,
    pub residual_tol: Option<f64>,
}

impl Default for JointEigOptions {
    fn default() -> Self {
        JointEigOptions { seed: 0, retries: 8, residual_tol: Some(1e-6) }
    }
}

#[derive(Debug, Clone)]
pub struct JointDiagonalization {
    /// `nodes[k][p] = λ_{k,p}`
    pub nodes: Vec<Vec<c64>>,
    /// `B`, with every `A_p ≈ B^{-1} D_p B`.
    pub transform: CMat,
    pub residuals: Vec<f64>,
    pub combo: Vec<c64>,
    pub attempts: usize,
}

enum Rejection {
    Multiplicity(f64),
    Pairing(Vec<f64>),
}

/// Simultaneous diagonalization of commuting shift matrices through the
/// eigenvectors of a random combination.
pub fn joint_eig(a_list: &[CMat], opts: &JointEigOptions) -> Result<JointDiagonalization> {
    let first = a_list.first().ok_or_else(|| Error::invalid("no matrices to diagonalize"))?;
    let k = first.nrows();
    if k == 0 || a_list.iter().any(|a| a.nrows() != k || a.ncols() != k) {
        return Err(Error::invalid("shift matrices must be square and of equal size"));
    }
    let norms: Vec<f64> = a_list.iter().map(|a| a.norm_l2()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut last = Rejection::Multiplicity(0.0);
    for attempt in 1..=opts.retries + 1 {
        let combo: Vec<c64> = a_list
            .iter()
            .map(|_| c64::from_polar(1.0, rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)))
            .collect();
        let mut m = CMat::zeros(k, k);
        for (a, &w) in a_list.iter().zip(&combo) {
            m += a * faer::Scale(w);
        }
        let eig = linalg::eig_full(m.as_ref())?;
        let gap = min_gap(&eig.eigenvalues);
        let radius = eig.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if gap < MULTIPLICITY_GAP * radius {
            last = Rejection::Multiplicity(gap);
            continue;
        }
        let b = &eig.inverse_vectors;
        let binv = &eig.vectors;
        let mut nodes = vec![Vec::with_capacity(a_list.len()); k];
        let mut residuals = Vec::with_capacity(a_list.len());
        for (a, &norm) in a_list.iter().zip(&norms) {
            let t = b * a * binv;
            let mut off = 0.0;
            for j in 0..k {
                for i in 0..k {
                    if i == j {
                        nodes[i].push(t[(i, i)]);
                    } else {
                        off += t[(i, j)].norm_sqr();
                    }
                }
            }
            residuals.push(if norm > 0.0 { off.sqrt() / norm } else { off.sqrt() });
        }
        if let Some(tol) = opts.residual_tol {
            if residuals.iter().any(|&r| r > tol) {
                last = Rejection::Pairing(residuals);
                continue;
            }
        }
        return Ok(JointDiagonalization { nodes, transform: b.clone(), residuals, combo, attempts: attempt });
    }
    let attempts = opts.retries + 1;
    Err(match last {
        Rejection::Multiplicity(gap) => Error::Multiplicity { gap, attempts },
        Rejection::Pairing(residuals) => Error::PairingFailure { residuals, attempts },
    })
}

fn min_gap(values: &[c64]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            gap = gap.min((values[i] - values[j]).norm());
        }
    }
    gap
}

#[derive(Debug, Clone)]
pub struct CoefficientFit {
    pub coefficients: Vec<c64>,
    pub condition: f64,
    pub warning: Option<String>,
}

/// Least-squares coefficients `argmin ‖Λ_Ω c − f‖` for known nodes.
pub fn recover_coeffs(f: &MdSequence, nodes: &[Vec<c64>]) -> Result<CoefficientFit> {
    let k = nodes.len();
    let d = f.domain.dim();
    if k == 0 {
        return Err(Error::invalid("no nodes given"));
    }
    if let Some(n) = nodes.iter().find(|n| n.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: n.len() });
    }
    if f.domain.len() < k {
        return Err(Error::invalid(format!("{} samples cannot determine {k} coefficients", f.domain.len())));
    }
    let mut lam = CMat::zeros(f.domain.len(), k);
    for (i, j) in f.domain.iter().enumerate() {
        for (c, node) in nodes.iter().enumerate() {
            lam[(i, c)] = node_power(node, j)?;
        }
    }
    let rhs = Mat::from_fn(f.values.len(), 1, |i, _| f.values[i]);
    let sol = linalg::lstsq_detailed(lam.as_ref(), rhs.as_ref())?;
    let warning = (sol.condition > COEFF_CONDITION_WARN)
        .then(|| format!("coefficient system is ill-conditioned (condition estimate {:e})", sol.condition));
    Ok(CoefficientFit { coefficients: (0..k).map(|i| sol.x[(i, 0)]).collect(), condition: sol.condition, warning })
}

/// Number of singular values at or above `rel_tol·σ_1`.
pub fn auto_order(singular_values: &[f64], rel_tol: f64) -> usize {
    numerical_rank(singular_values, rel_tol)
}

/// General-domain ESPRIT on samples `f` with row domain `xi` and column
/// domain `upsilon`.
pub fn esprit_nd(f: &MdSequence, xi: &IndexSet, upsilon: &IndexSet, opts: &EspritOptions) -> Result<EstimationReport> {
    opts.validate()?;
    let d = f.domain.dim();
    if !f.is_finite() {
        return Err(Error::invalid("samples must be finite"));
    }
    if xi.dim() != d || upsilon.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: if xi.dim() != d { xi.dim() } else { upsilon.dim() } });
    }
    let masks: Vec<DeletionMasks> = (0..d).map(|p| deletion_masks(xi, p)).collect::<Result<_>>()?;
    let capacity = masks.iter().map(|m| m.keep_minus.len()).min().unwrap_or(0);

    let h = build_hankel(f, xi, upsilon)?;
    let svd = linalg::thin_svd(h.matrix.as_ref())?;
    let k = match opts.model_order {
        ModelOrder::Fixed(k) => k,
        ModelOrder::Auto { rel_tol } => auto_order(&svd.s, rel_tol),
    };
    if k == 0 {
        return Err(Error::ModelOrder("automatic model order selected K=0".into()));
    }
    if k > capacity {
        return Err(Error::CapacityExceeded { k, capacity });
    }
    if k > svd.rank() {
        return Err(Error::ModelOrder(format!(
            "K={k} exceeds the {}x{} Hankel matrix dimensions",
            xi.len(),
            upsilon.len()
        )));
    }
    ensure_rank(&svd.s, k, xi.len(), upsilon.len())?;
    let u = svd.u.subcols(0, k);
    let shifts: Vec<CMat> = masks.iter().map(|m| shift_from_masks(u, m)).collect::<Result<_>>()?;
    let joint = joint_eig(&shifts, &opts.joint())?;

    let fit = recover_coeffs(f, &joint.nodes)?;
    let mut warnings: Vec<String> = fit.warning.into_iter().collect();
    let terms = joint
        .nodes
        .iter()
        .zip(&fit.coefficients)
        .map(|(node, &coeff)| Term { zeta: node.iter().map(|&l| principal_log(l)).collect(), coeff })
        .collect();
    if joint.attempts > 1 {
        warnings.push(format!("pairing needed {} random combinations", joint.attempts));
    }
    Ok(EstimationReport {
        model: ExponentialModel { dim: d, terms },
        singular_values: svd.s,
        pairing_residuals: joint.residuals,
        combo_used: joint.combo,
        capacity,
        coefficient_condition: fit.condition,
        warnings,
    })
}

/// Like [`esprit_nd`] with `Υ` taken as the erosion of the sample domain by
/// `xi`. Samples outside `Ξ + Υ` are only used for the coefficients; the
/// report carries a warning when there are any.
pub fn esprit_eroded(f: &MdSequence, xi: &IndexSet, opts: &EspritOptions) -> Result<(IndexSet, EstimationReport)> {
    let upsilon = erode(&f.domain, xi)?;
    let mut report = esprit_nd(f, xi, &upsilon, opts)?;
    let covered = minkowski_sum(xi, &upsilon)?.len();
    if covered < f.domain.len() {
        report.warnings.push(format!(
            "{} of {} samples lie outside Xi + Upsilon and do not enter the Hankel matrix",
            f.domain.len() - covered,
            f.domain.len()
        ));
    }
    Ok((upsilon, report))
}
