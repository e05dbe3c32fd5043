//! General-domain Hankel matrices.
//!
//! For row domain Ξ and column domain Υ the matrix has entry
//! `H[n][m] = f(ξ_n + υ_m)` with both domains in canonical order. Ξ = Υ =
//! `{0..N-1}^d` gives the classical block-Hankel matrix; d = 1 gives the
//! ordinary Hankel matrix.

use std::io::Write;

use faer::Mat;

use crate::domains::{deletion_masks, fibers, IndexSet};
use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat};
use crate::signal::MdSequence;

#[derive(Debug, Clone)]
pub struct GdHankel {
    pub matrix: CMat,
    pub xi: IndexSet,
    pub upsilon: IndexSet,
}

pub fn build_hankel(f: &MdSequence, xi: &IndexSet, upsilon: &IndexSet) -> Result<GdHankel> {
    let d = f.domain.dim();
    for s in [xi, upsilon] {
        if s.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: s.dim() });
        }
        if s.is_empty() {
            return Err(Error::invalid("Hankel row and column domains must be nonempty"));
        }
    }
    let loc = f.domain.locator();
    // position in f of every (n, m) pair, column-major to match faer
    let (rows, cols) = (xi.len(), upsilon.len());
    let mut idx = vec![0usize; rows * cols];
    let mut sum = vec![0i64; d];
    for (m, y) in upsilon.iter().enumerate() {
        for (n, x) in xi.iter().enumerate() {
            for ((s, a), b) in sum.iter_mut().zip(x).zip(y) {
                *s = a + b;
            }
            idx[m * rows + n] = loc.find(&sum).ok_or_else(|| Error::Coverage { index: sum.clone() })?;
        }
    }
    let matrix = Mat::from_fn(rows, cols, |n, m| f.values[idx[m * rows + n]]);
    Ok(GdHankel { matrix, xi: xi.clone(), upsilon: upsilon.clone() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankProfile {
    pub singular_values: Vec<f64>,
    pub rank: usize,
}

/// Singular spectrum and the count of values at or above `rel_tol·σ_1`.
pub fn hankel_rank_profile(h: &GdHankel, rel_tol: f64) -> Result<RankProfile> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::invalid(format!("rel_tol must lie in (0, 1), got {rel_tol}")));
    }
    let svd = linalg::thin_svd(h.matrix.as_ref())?;
    let rank = numerical_rank(&svd.s, rel_tol);
    Ok(RankProfile { singular_values: svd.s, rank })
}

pub(crate) fn numerical_rank(s: &[f64], rel_tol: f64) -> usize {
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().take_while(|&&v| v >= rel_tol * top).count(),
        _ => 0,
    }
}

/// Largest model order the row domain can support:
/// `min_p (|Ξ| − #fibers along p)`, i.e. `N^(d-1)(N-1)` on an `N^d` box.
pub fn capacity(xi: &IndexSet) -> Result<usize> {
    let mut cap = usize::MAX;
    for axis in 0..xi.dim() {
        deletion_masks(xi, axis)?;
        let nf = fibers(xi, axis)?.fibers.len();
        cap = cap.min(xi.len() - nf);
    }
    Ok(cap)
}

/// Debug dump: one line per row, `re,im` per entry.
pub fn write_csv<W: Write>(h: &GdHankel, mut out: W) -> Result<()> {
    for i in 0..h.matrix.nrows() {
        let line: Vec<String> = (0..h.matrix.ncols())
            .map(|j| {
                let z: c64 = h.matrix[(i, j)];
                format!("{},{}", z.re, z.im)
            })
            .collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{make_box, make_shape, ShapeSpec};
    use crate::signal::{eval_model, random_model, Layout};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn real(v: &[f64]) -> Vec<c64> {
        v.iter().map(|&x| c64::new(x, 0.0)).collect()
    }

    #[test]
    fn worked_rectangular_example() {
        let omega = make_box(&[5], &[2]).unwrap();
        let f = MdSequence::new(omega, real(&[1.0, 2.0, 3.0, 4.0, 5.0])).unwrap();
        let ups = make_box(&[4], &[1]).unwrap();
        let xi = make_box(&[2], &[1]).unwrap();
        let h = build_hankel(&f, &xi, &ups).unwrap();
        let want = [[1.0, 2.0, 3.0, 4.0], [2.0, 3.0, 4.0, 5.0]];
        assert_eq!((h.matrix.nrows(), h.matrix.ncols()), (2, 4));
        for (i, row) in want.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                assert_eq!(h.matrix[(i, j)], c64::new(w, 0.0));
            }
        }
    }

    #[test]
    fn constant_signal_is_rank_one() {
        let omega = make_shape(&ShapeSpec::HalfDisc { radius: 6 }).unwrap();
        let f = MdSequence::new(omega.clone(), vec![c64::new(1.0, 0.0); omega.len()]).unwrap();
        let xi = make_box(&[3, 3], &[0, 0]).unwrap();
        let ups = crate::domains::erode(&omega, &xi).unwrap();
        let h = build_hankel(&f, &xi, &ups).unwrap();
        assert!(h.matrix.col_iter().all(|c| c.iter().all(|&z| z == c64::new(1.0, 0.0))));
        assert_eq!(hankel_rank_profile(&h, 1e-10).unwrap().rank, 1);

        let ones = MdSequence::new(make_box(&[7], &[0]).unwrap(), vec![c64::new(1.0, 0.0); 7]).unwrap();
        let b = make_box(&[4], &[0]).unwrap();
        let p = hankel_rank_profile(&build_hankel(&ones, &b, &b).unwrap(), 1e-10).unwrap();
        assert!((p.singular_values[0] - 4.0).abs() < 1e-13);
        assert!(p.singular_values[1..].iter().all(|&s| s < 1e-13));
        assert_eq!(p.rank, 1);
    }

    #[test]
    fn matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let m = random_model(3, 2, &mut rng, Layout::UniformImag, 0.0).unwrap();
        let omega = make_box(&[7, 7], &[0, 0]).unwrap();
        let f = eval_model(&m, &omega).unwrap();
        let xi = make_box(&[4, 4], &[0, 0]).unwrap();
        let h = build_hankel(&f, &xi, &xi).unwrap();
        for n in 0..xi.len() {
            for mm in 0..xi.len() {
                let (a, b) = (xi.point(n), xi.point(mm));
                let v = f.get(&[a[0] + b[0], a[1] + b[1]]).unwrap();
                assert_eq!(h.matrix[(n, mm)], v);
            }
        }
        // symmetric when the row and column domains agree
        assert!((h.matrix.transpose().to_owned() - &h.matrix).norm_l2() == 0.0);
    }

    #[test]
    fn coverage_error_names_missing_index() {
        let omega = make_box(&[4], &[0]).unwrap();
        let f = MdSequence::new(omega, real(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        let b = make_box(&[3], &[0]).unwrap();
        match build_hankel(&f, &b, &b) {
            Err(Error::Coverage { index }) => assert_eq!(index, vec![4]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn capacities() {
        assert_eq!(capacity(&make_box(&[31, 31], &[0, 0]).unwrap()).unwrap(), 930);
        assert_eq!(capacity(&make_box(&[11, 11, 11], &[0, 0, 0]).unwrap()).unwrap(), 1210);
        assert_eq!(capacity(&make_box(&[11, 11], &[0, 0]).unwrap()).unwrap(), 110);
        assert_eq!(capacity(&make_box(&[5, 3], &[0, 0]).unwrap()).unwrap(), 10);
        assert!(capacity(&make_shape(&ShapeSpec::Triangle { side: 4 }).unwrap()).is_err());
    }

    #[test]
    fn rank_profile_rejects_bad_tolerance() {
        let f = MdSequence::new(make_box(&[3], &[0]).unwrap(), real(&[1.0, 1.0, 1.0])).unwrap();
        let b = make_box(&[2], &[0]).unwrap();
        let h = build_hankel(&f, &b, &b).unwrap();
        assert!(hankel_rank_profile(&h, 0.0).is_err());
        assert!(hankel_rank_profile(&h, 1.0).is_err());
    }

    #[test]
    fn csv_dump() {
        let f = MdSequence::new(make_box(&[3], &[0]).unwrap(), real(&[1.0, 2.0, 3.0])).unwrap();
        let b = make_box(&[2], &[0]).unwrap();
        let h = build_hankel(&f, &b, &b).unwrap();
        let mut buf = Vec::new();
        write_csv(&h, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1,0,2,0\n2,0,3,0\n");
    }
}
