//! Dense complex kernels: SVD, general eigendecomposition and least squares.
//!
//! Everything above this module talks to `faer` only through these
//! functions and the [`CMat`] alias.

use faer::linalg::solvers::{DenseSolveCore, SolveLstsq};
use faer::{Mat, MatRef};

use crate::error::{Error, Result};

pub use faer::c64;

pub type CMat = Mat<c64>;

/// `H ≈ U diag(S) V^*` with `S` non-increasing.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// Keeps the leading `k` triplets.
    pub fn truncate(&self, k: usize) -> Result<SvdResult> {
        if k == 0 || k > self.s.len() {
            return Err(Error::invalid(format!("cannot keep {k} of {} singular triplets", self.s.len())));
        }
        Ok(SvdResult {
            u: self.u.subcols(0, k).to_owned(),
            s: self.s[..k].to_vec(),
            v: self.v.subcols(0, k).to_owned(),
        })
    }

    pub fn reconstruct(&self) -> CMat {
        let mut us = self.u.clone();
        for (j, &s) in self.s.iter().enumerate() {
            for i in 0..us.nrows() {
                us[(i, j)] *= s;
            }
        }
        &us * self.v.adjoint()
    }
}

/// Thin SVD: `min(rows, cols)` triplets.
pub fn thin_svd(h: MatRef<'_, c64>) -> Result<SvdResult> {
    if h.nrows() == 0 || h.ncols() == 0 {
        return Err(Error::invalid("SVD of an empty matrix"));
    }
    ensure_finite(h, "SVD input")?;
    let svd = h.thin_svd().map_err(|e| Error::Numeric(format!("SVD failed: {e:?}")))?;
    let s = svd.S().column_vector().iter().map(|z| z.re).collect();
    Ok(SvdResult { u: svd.U().to_owned(), s, v: svd.V().to_owned() })
}

/// Top-`k` singular triplets, selected from a full decomposition.
pub fn truncated_svd(h: MatRef<'_, c64>, k: usize) -> Result<SvdResult> {
    let m = h.nrows().min(h.ncols());
    if k == 0 || k > m {
        return Err(Error::invalid(format!("k={k} outside 1..={m}")));
    }
    thin_svd(h)?.truncate(k)
}

/// `A = B^{-1} diag(λ) B`; `vectors` holds `B^{-1}` (eigenvectors as
/// columns) and `inverse_vectors` holds `B`.
#[derive(Debug, Clone)]
pub struct EigResult {
    pub eigenvalues: Vec<c64>,
    pub vectors: CMat,
    pub inverse_vectors: CMat,
    /// `‖B‖_F ‖B^{-1}‖_F`; large values flag a nearly defective matrix.
    pub condition: f64,
}

pub fn eig_full(a: MatRef<'_, c64>) -> Result<EigResult> {
    if a.nrows() != a.ncols() {
        return Err(Error::invalid(format!("eigendecomposition of a non-square {}x{} matrix", a.nrows(), a.ncols())));
    }
    if a.nrows() == 0 {
        return Err(Error::invalid("eigendecomposition of an empty matrix"));
    }
    ensure_finite(a, "eigendecomposition input")?;
    let evd = a.eigen().map_err(|e| Error::Numeric(format!("eigendecomposition did not converge: {e:?}")))?;
    let eigenvalues: Vec<c64> = evd.S().column_vector().iter().copied().collect();
    let vectors = evd.U().to_owned();
    let inverse_vectors = vectors.partial_piv_lu().inverse();
    ensure_finite(inverse_vectors.as_ref(), "eigenvector inverse")?;
    let condition = vectors.norm_l2() * inverse_vectors.norm_l2();
    Ok(EigResult { eigenvalues, vectors, inverse_vectors, condition })
}

/// Least-squares solution with a condition estimate of `a`.
#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub x: CMat,
    pub rank: usize,
    /// Ratio of the largest to the smallest pivot of the column-pivoted QR.
    pub condition: f64,
}

/// Minimizes `‖A X − Y‖_F` through a column-pivoted QR. Fails when `A` is
/// numerically rank deficient.
pub fn lstsq(a: MatRef<'_, c64>, y: MatRef<'_, c64>) -> Result<CMat> {
    lstsq_detailed(a, y).map(|s| s.x)
}

pub fn lstsq_detailed(a: MatRef<'_, c64>, y: MatRef<'_, c64>) -> Result<LstsqSolution> {
    let (m, n) = (a.nrows(), a.ncols());
    if y.nrows() != m {
        return Err(Error::DimensionMismatch { expected: m, got: y.nrows() });
    }
    if n == 0 || m < n {
        return Err(Error::RankDeficient { rank: m.min(n), required: n });
    }
    ensure_finite(a, "least-squares matrix")?;
    ensure_finite(y, "least-squares right-hand side")?;
    let qr = a.col_piv_qr();
    let r = qr.R();
    let pivots: Vec<f64> = (0..n).map(|i| r[(i, i)].norm()).collect();
    let largest = pivots.iter().cloned().fold(0.0, f64::max);
    let tol = largest * (m.max(n) as f64) * f64::EPSILON;
    let rank = pivots.iter().filter(|&&p| p > tol).count();
    if largest == 0.0 || rank < n {
        return Err(Error::RankDeficient { rank, required: n });
    }
    let smallest = pivots.iter().cloned().fold(f64::INFINITY, f64::min);
    let x = qr.solve_lstsq(y);
    Ok(LstsqSolution { x, rank, condition: largest / smallest })
}

pub fn select_rows(m: MatRef<'_, c64>, rows: &[usize]) -> CMat {
    Mat::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

fn ensure_finite(m: MatRef<'_, c64>, what: &str) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite(format!("{what} has a non-finite entry at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(rows, cols, |_, _| c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn svd_identity_and_rank_one() {
        let id = CMat::identity(3, 3);
        let s = truncated_svd(id.as_ref(), 3).unwrap();
        for v in &s.s {
            assert!((v - 1.0).abs() < 1e-14);
        }
        let u = [c64::new(1.0, 2.0), c64::new(-0.5, 0.0), c64::new(0.0, 3.0)];
        let v = [c64::new(2.0, -1.0), c64::new(1.0, 1.0)];
        let outer = Mat::from_fn(3, 2, |i, j| u[i] * v[j]);
        let s = truncated_svd(outer.as_ref(), 1).unwrap();
        let nu: f64 = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let nv: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((s.s[0] - nu * nv).abs() < 1e-12 * nu * nv);
    }

    #[test]
    fn svd_eckart_young() {
        let h = random(20, 15, 3);
        let full = thin_svd(h.as_ref()).unwrap();
        assert!(full.s.windows(2).all(|w| w[0] >= w[1]));
        let recon = full.reconstruct();
        assert!((&recon - &h).norm_l2() <= 1e-12 * h.norm_l2());
        let t = truncated_svd(h.as_ref(), 5).unwrap();
        let resid = (&t.reconstruct() - &h).norm_l2();
        let tail: f64 = full.s[5..].iter().map(|s| s * s).sum::<f64>().sqrt();
        assert!((resid - tail).abs() < 1e-10 * h.norm_l2());
        let gram = t.u.adjoint() * &t.u;
        assert!((&gram - CMat::identity(5, 5)).norm_l2() < 1e-12);
        assert!(truncated_svd(h.as_ref(), 16).is_err());
        assert!(truncated_svd(h.as_ref(), 0).is_err());
    }

    fn sorted(mut v: Vec<c64>) -> Vec<c64> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        v
    }

    #[test]
    fn eig_small_cases() {
        let d = Mat::from_fn(2, 2, |i, j| if i == j { c64::new(2.0 + i as f64, 0.0) } else { c64::new(0.0, 0.0) });
        let e = sorted(eig_full(d.as_ref()).unwrap().eigenvalues);
        assert!((e[0] - c64::new(2.0, 0.0)).norm() < 1e-14 && (e[1] - c64::new(3.0, 0.0)).norm() < 1e-14);
        let swap = Mat::from_fn(2, 2, |i, j| c64::new(if i != j { 1.0 } else { 0.0 }, 0.0));
        let e = sorted(eig_full(swap.as_ref()).unwrap().eigenvalues);
        assert!((e[0] + c64::new(1.0, 0.0)).norm() < 1e-14 && (e[1] - c64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(eig_full(random(2, 3, 1).as_ref()).is_err());
    }

    #[test]
    fn eig_construct_then_decompose() {
        let b = &random(6, 6, 11) + CMat::identity(6, 6) * faer::Scale(c64::new(3.0, 0.0));
        let binv = b.partial_piv_lu().inverse();
        let lam: Vec<c64> = (0..6).map(|k| c64::from_polar(1.0, 0.9 * k as f64 - 2.0)).collect();
        let d = Mat::from_fn(6, 6, |i, j| if i == j { lam[i] } else { c64::new(0.0, 0.0) });
        let a = &binv * &d * &b;
        let e = eig_full(a.as_ref()).unwrap();
        let got = sorted(e.eigenvalues.clone());
        let want = sorted(lam);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-10);
        }
        let dg = Mat::from_fn(6, 6, |i, j| if i == j { e.eigenvalues[i] } else { c64::new(0.0, 0.0) });
        let resid = (&a * &e.vectors - &e.vectors * &dg).norm_l2();
        assert!(resid <= 1e-8 * a.norm_l2());
        let id = &e.inverse_vectors * &e.vectors;
        assert!((&id - CMat::identity(6, 6)).norm_l2() < 1e-10);
    }

    #[test]
    fn lstsq_cases() {
        let y = random(4, 2, 5);
        let x = lstsq(CMat::identity(4, 4).as_ref(), y.as_ref()).unwrap();
        assert!((&x - &y).norm_l2() < 1e-14);

        let a = random(10, 4, 6);
        let x0 = random(4, 3, 7);
        let x = lstsq(a.as_ref(), (&a * &x0).as_ref()).unwrap();
        assert!((&x - &x0).norm_l2() < 1e-12 * x0.norm_l2());

        let y = random(10, 3, 8);
        let x = lstsq(a.as_ref(), y.as_ref()).unwrap();
        let normal = a.adjoint() * (&a * &x - &y);
        assert!(normal.norm_l2() <= 1e-10 * a.norm_l2() * y.norm_l2());

        let sq = &random(5, 5, 9) + CMat::identity(5, 5) * faer::Scale(c64::new(2.0, 0.0));
        let y = random(5, 1, 10);
        let x = lstsq(sq.as_ref(), y.as_ref()).unwrap();
        let direct = sq.partial_piv_lu().inverse() * &y;
        assert!((&x - &direct).norm_l2() <= 1e-10 * direct.norm_l2());
    }

    #[test]
    fn lstsq_rank_deficient() {
        let a = Mat::from_fn(6, 3, |i, j| c64::new((i + 1) as f64 * if j == 2 { 2.0 } else { (j + 1) as f64 }, 0.0));
        let y = random(6, 1, 1);
        match lstsq(a.as_ref(), y.as_ref()) {
            Err(Error::RankDeficient { rank, required: 3 }) => assert_eq!(rank, 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
