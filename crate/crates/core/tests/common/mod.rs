//! Independent oracles shared by the integration tests and the acceptance
//! suite. Nothing here goes through the crate's Hankel or ESPRIT code.
#![allow(dead_code)]

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::Mat;
use gdesprit::c64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cz(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

/// Square Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<c64>>, mut b: Vec<c64>) -> Vec<c64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let m = a[r][col] / a[col][col];
            for c in col..n {
                let v = a[col][c];
                a[r][c] -= m * v;
            }
            let v = b[col];
            b[r] -= m * v;
        }
    }
    let mut x = vec![cz(0.0, 0.0); n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    x
}

/// Roots of the monic polynomial `z^n + a[n-1] z^{n-1} + ... + a[0]` by
/// Aberth–Ehrlich iteration.
pub fn poly_roots(a: &[c64]) -> Vec<c64> {
    let n = a.len();
    let eval = |z: c64| {
        let (mut p, mut dp) = (cz(1.0, 0.0), cz(0.0, 0.0));
        for &c in a.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    };
    let bound = 1.0 + a.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<c64> = (0..n).map(|k| c64::from_polar(0.5 * bound, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64)).collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let (p, dp) = eval(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulse: c64 = (0..n).filter(|&j| j != i).map(|j| cz(1.0, 0.0) / (z[i] - z[j])).sum();
            let step = ratio / (cz(1.0, 0.0) - ratio * repulse);
            z[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Prony's method: linear prediction on the first `2K` samples, nodes as
/// the roots of the prediction polynomial.
pub fn prony_nodes(samples: &[c64], k: usize) -> Vec<c64> {
    let a: Vec<Vec<c64>> = (0..k).map(|n| (0..k).map(|i| samples[n + i]).collect()).collect();
    let b: Vec<c64> = (0..k).map(|n| -samples[n + k]).collect();
    poly_roots(&gauss_solve(a, b))
}

/// 1D instance: `k` nodes near the unit circle with angular separation at
/// least `sep`, `2n - 1` samples.
pub struct Instance1d {
    pub nodes: Vec<c64>,
    pub coeffs: Vec<c64>,
    pub samples: Vec<c64>,
}

pub fn random_instance_1d(rng: &mut ChaCha8Rng, k: usize, n: usize, sep: f64) -> Instance1d {
    let mut angles: Vec<f64> = Vec::new();
    while angles.len() < k {
        let t = rng.random_range(-3.0..3.0);
        if angles.iter().all(|a: &f64| (a - t).abs() >= sep) {
            angles.push(t);
        }
    }
    let nodes: Vec<c64> = angles.iter().map(|&t| c64::from_polar(rng.random_range(0.95..1.02), t)).collect();
    let coeffs: Vec<c64> = (0..k).map(|_| c64::from_polar(rng.random_range(0.5..1.5), rng.random_range(-3.0..3.0))).collect();
    let samples = (0..2 * n - 1)
        .map(|j| nodes.iter().zip(&coeffs).map(|(l, c)| c * l.powi(j as i32)).sum())
        .collect();
    Instance1d { nodes, coeffs, samples }
}

/// Largest distance from a node in `a` to its nearest node in `b` and vice
/// versa; equals the matched error when both are well separated.
pub fn set_distance(a: &[Vec<c64>], b: &[Vec<c64>]) -> f64 {
    let d = |x: &Vec<c64>, y: &Vec<c64>| x.iter().zip(y).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
    let one = |a: &[Vec<c64>], b: &[Vec<c64>]| {
        a.iter().map(|x| b.iter().map(|y| d(x, y)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

/// Multi-index of position `r` in the vectorization `m_1 + m_2 n + m_3 n^2 + ...`.
pub fn unvec(mut r: usize, n: usize, d: usize) -> Vec<usize> {
    (0..d)
        .map(|_| {
            let m = r % n;
            r /= n;
            m
        })
        .collect()
}

/// Samples of `Σ c_k λ_k^j` on `{0..w-1}^d`, vectorized with the first
/// index fastest.
pub fn box_samples(nodes: &[Vec<c64>], coeffs: &[c64], w: usize, d: usize) -> Vec<c64> {
    (0..w.pow(d as u32))
        .map(|r| {
            let j = unvec(r, w, d);
            nodes
                .iter()
                .zip(coeffs)
                .map(|(l, c)| {
                    let mut v = *c;
                    for (lp, &jp) in l.iter().zip(&j) {
                        v *= lp.powi(jp as i32);
                    }
                    v
                })
                .sum()
        })
        .collect()
}

/// Block-Hankel matrix of `f` on `{0..2n-2}^d` with `H[m][m'] = f(m + m')`.
pub fn block_hankel(f: &[c64], n: usize, d: usize) -> Mat<c64> {
    let w = 2 * n - 1;
    let size = n.pow(d as u32);
    Mat::from_fn(size, size, |r, c| {
        let (a, b) = (unvec(r, n, d), unvec(c, n, d));
        let idx: usize = (0..d).map(|p| (a[p] + b[p]) * w.pow(p as u32)).sum();
        f[idx]
    })
}

/// Direct block-Hankel ESPRIT: SVD, shift matrices from the normal
/// equations, eigenvectors of `A_1`, paired diagonals.
pub fn block_esprit_reference(f: &[c64], n: usize, d: usize, k: usize) -> Vec<Vec<c64>> {
    let h = block_hankel(f, n, d);
    let svd = h.thin_svd().unwrap();
    let u = svd.U().subcols(0, k).to_owned();
    let size = n.pow(d as u32);
    let a: Vec<Mat<c64>> = (0..d)
        .map(|p| {
            let stride = n.pow(p as u32);
            let minus: Vec<usize> = (0..size).filter(|&r| unvec(r, n, d)[p] + 1 < n).collect();
            let um = Mat::from_fn(minus.len(), k, |i, j| u[(minus[i], j)]);
            let up = Mat::from_fn(minus.len(), k, |i, j| u[(minus[i] + stride, j)]);
            let gram = um.adjoint() * &um;
            gram.partial_piv_lu().solve(um.adjoint() * &up)
        })
        .collect();
    let eig = a[0].eigen().unwrap();
    let v = eig.U().to_owned();
    let vinv = v.partial_piv_lu().inverse();
    let diags: Vec<Mat<c64>> = a.iter().map(|ap| &vinv * ap * &v).collect();
    (0..k).map(|i| diags.iter().map(|t| t[(i, i)]).collect()).collect()
}

/// Nodes `e^{iθ}` with all coordinates of distinct nodes at least `sep`
/// apart in max-norm.
pub fn random_nodes(rng: &mut ChaCha8Rng, k: usize, d: usize, sep: f64) -> Vec<Vec<c64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    while out.len() < k {
        let t: Vec<f64> = (0..d).map(|_| rng.random_range(-3.1..3.1)).collect();
        if out.iter().all(|o| o.iter().zip(&t).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) >= sep) {
            out.push(t);
        }
    }
    out.into_iter().map(|t| t.into_iter().map(|x| c64::from_polar(1.0, x)).collect()).collect()
}

pub fn random_coeffs(rng: &mut ChaCha8Rng, k: usize) -> Vec<c64> {
    (0..k).map(|_| c64::from_polar(rng.random_range(0.5..1.5), rng.random_range(-3.0..3.0))).collect()
}

/// `B^{-1} D_p B` for a random well-conditioned `B`.
pub fn conjugate_diagonals(rng: &mut ChaCha8Rng, diags: &[Vec<c64>]) -> Vec<Mat<c64>> {
    let k = diags[0].len();
    let b = Mat::from_fn(k, k, |i, j| {
        cz(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) + if i == j { cz(3.0, 0.0) } else { cz(0.0, 0.0) }
    });
    let binv = b.partial_piv_lu().inverse();
    diags
        .iter()
        .map(|dp| {
            let dm = Mat::from_fn(k, k, |i, j| if i == j { dp[i] } else { cz(0.0, 0.0) });
            &binv * dm * &b
        })
        .collect()
}
