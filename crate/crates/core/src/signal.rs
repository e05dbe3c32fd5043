//! Exponential-sum models `f(j) = Σ_k c_k e^{ζ_k·j}` and sampled data.

use std::f64::consts::PI;

use rand::{Rng, RngExt};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domains::IndexSet;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::linalg::c64;

/// Two nodes collide when every coordinate of `λ = e^ζ` is closer than this.
pub const NODE_COLLISION_TOL: f64 = 1e-6;

const MAX_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub zeta: Vec<c64>,
    #[serde(rename = "c")]
    pub coeff: c64,
}

impl Term {
    /// `λ = (e^{ζ_1}, ..., e^{ζ_d})`
    pub fn node(&self) -> Vec<c64> {
        self.zeta.iter().map(|z| z.exp()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentialModel {
    pub dim: usize,
    pub terms: Vec<Term>,
}

impl ExponentialModel {
    pub fn new(dim: usize, terms: Vec<Term>) -> Result<Self> {
        let m = ExponentialModel { dim, terms };
        m.validate()?;
        Ok(m)
    }

    /// Checks nonzero coefficients and pairwise distinct nodes.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("model dimension must be positive"));
        }
        for (k, t) in self.terms.iter().enumerate() {
            if t.zeta.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: t.zeta.len() });
            }
            if t.coeff == c64::new(0.0, 0.0) {
                return Err(Error::invalid(format!("term {k} has a zero coefficient")));
            }
            if !t.zeta.iter().chain([&t.coeff]).all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite(format!("term {k} has a non-finite parameter")));
            }
        }
        let nodes = self.nodes();
        for a in 0..nodes.len() {
            for b in a + 1..nodes.len() {
                if node_distance(&nodes[a], &nodes[b]) < NODE_COLLISION_TOL {
                    return Err(Error::invalid(format!("terms {a} and {b} have coinciding nodes")));
                }
            }
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.terms.len()
    }

    pub fn nodes(&self) -> Vec<Vec<c64>> {
        self.terms.iter().map(Term::node).collect()
    }

    pub fn coefficients(&self) -> Vec<c64> {
        self.terms.iter().map(|t| t.coeff).collect()
    }

    pub fn scaled(&self, s: c64) -> ExponentialModel {
        let terms = self.terms.iter().map(|t| Term { zeta: t.zeta.clone(), coeff: t.coeff * s }).collect();
        ExponentialModel { dim: self.dim, terms }
    }
}

/// `max_p |a_p − b_p|`
pub fn node_distance(a: &[c64], b: &[c64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `λ^j = Π_p λ_p^{j_p}`
pub fn node_power(node: &[c64], j: &[i64]) -> Result<c64> {
    let mut acc = c64::new(1.0, 0.0);
    for (l, &e) in node.iter().zip(j) {
        let e = i32::try_from(e).map_err(|_| Error::invalid(format!("exponent {e} out of range")))?;
        acc *= l.powi(e);
    }
    Ok(acc)
}

/// Complex samples aligned with the canonical order of their domain.
#[derive(Debug, Clone, PartialEq)]
pub struct MdSequence {
    pub domain: IndexSet,
    pub values: Vec<c64>,
}

impl MdSequence {
    pub fn new(domain: IndexSet, values: Vec<c64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::invalid(format!(
                "{} values for a domain of {} points",
                values.len(),
                domain.len()
            )));
        }
        Ok(MdSequence { domain, values })
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn get(&self, p: &[i64]) -> Option<c64> {
        self.domain.position(p).map(|i| self.values[i])
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// The samples on a subdomain.
    pub fn restrict(&self, sub: &IndexSet) -> Result<MdSequence> {
        let loc = self.domain.locator();
        let mut values = Vec::with_capacity(sub.len());
        for p in sub.iter() {
            let i = loc.find(p).ok_or_else(|| Error::Coverage { index: p.to_vec() })?;
            values.push(self.values[i]);
        }
        MdSequence::new(sub.clone(), values)
    }
}

/// On-disk sample file: `{"grid": <grid spec>, "values": [[re,im], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFile {
    pub grid: GridSpec,
    pub values: Vec<c64>,
}

impl SampleFile {
    pub fn from_sequence(grid: GridSpec, f: &MdSequence) -> Self {
        SampleFile { grid, values: f.values.clone() }
    }

    pub fn to_sequence(&self) -> Result<MdSequence> {
        MdSequence::new(self.grid.to_index_set()?, self.values.clone())
    }
}

/// Samples the model on `omega`.
pub fn eval_model(model: &ExponentialModel, omega: &IndexSet) -> Result<MdSequence> {
    if model.dim != omega.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim, got: omega.dim() });
    }
    let nodes = model.nodes();
    let mut values = Vec::with_capacity(omega.len());
    for j in omega.iter() {
        let mut v = c64::new(0.0, 0.0);
        for (node, t) in nodes.iter().zip(&model.terms) {
            v += t.coeff * node_power(node, j)?;
        }
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite(format!("model overflows at {j:?}")));
        }
        values.push(v);
    }
    MdSequence::new(omega.clone(), values)
}

/// Complex Gaussian noise scaled so that `‖e‖ / ‖f‖ = ratio`.
pub fn draw_noise<R: Rng + ?Sized>(f: &MdSequence, ratio: f64, rng: &mut R) -> Result<Vec<c64>> {
    if !(ratio >= 0.0 && ratio.is_finite()) {
        return Err(Error::invalid(format!("noise ratio must be a finite nonnegative number, got {ratio}")));
    }
    if ratio == 0.0 {
        return Ok(vec![c64::new(0.0, 0.0); f.values.len()]);
    }
    let fnorm = f.norm();
    if fnorm == 0.0 {
        return Err(Error::invalid("cannot scale noise relative to an all-zero signal"));
    }
    let raw: Vec<c64> = (0..f.values.len())
        .map(|_| c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let rnorm = raw.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let scale = ratio * fnorm / rnorm;
    Ok(raw.into_iter().map(|v| v * scale).collect())
}

pub fn add_noise<R: Rng + ?Sized>(f: &MdSequence, ratio: f64, rng: &mut R) -> Result<MdSequence> {
    if ratio == 0.0 {
        return Ok(f.clone());
    }
    let e = draw_noise(f, ratio, rng)?;
    let values = f.values.iter().zip(e).map(|(a, b)| a + b).collect();
    MdSequence::new(f.domain.clone(), values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// `ζ_{k,p} = iθ`, θ uniform in (−π, π).
    UniformImag,
    /// Planar spiral `ζ_k = i r_k (cos φ_k, sin φ_k)` with `φ_k = 4πk/K`,
    /// `r_k = πk/K`.
    Spiral,
    /// `ζ_{k,p} = −δ + iθ`, δ uniform in `[0, damping_bound]`.
    RandomComplex,
}

impl std::str::FromStr for Layout {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform_imag" => Ok(Layout::UniformImag),
            "spiral" => Ok(Layout::Spiral),
            "random_complex" => Ok(Layout::RandomComplex),
            _ => Err(Error::Parse(format!("unknown layout {s:?}"))),
        }
    }
}

/// Coefficient with modulus uniform in [0.5, 1.5] and uniform phase.
pub fn random_coefficient<R: Rng + ?Sized>(rng: &mut R) -> c64 {
    let r = rng.random_range(0.5..=1.5);
    let phi = rng.random_range(-PI..PI);
    c64::from_polar(r, phi)
}

pub fn random_model<R: Rng + ?Sized>(
    k: usize,
    dim: usize,
    rng: &mut R,
    layout: Layout,
    damping_bound: f64,
) -> Result<ExponentialModel> {
    if k == 0 || dim == 0 {
        return Err(Error::invalid("model order and dimension must be positive"));
    }
    if !(damping_bound >= 0.0 && damping_bound.is_finite()) {
        return Err(Error::invalid(format!("damping bound must be nonnegative, got {damping_bound}")));
    }
    if layout == Layout::Spiral && dim != 2 {
        return Err(Error::invalid("the spiral layout is two-dimensional"));
    }
    let mut terms: Vec<Term> = Vec::with_capacity(k);
    let mut nodes: Vec<Vec<c64>> = Vec::with_capacity(k);
    for idx in 1..=k {
        let mut placed = false;
        for _ in 0..MAX_RESAMPLES {
            let zeta: Vec<c64> = match layout {
                Layout::Spiral => {
                    let t = idx as f64 / k as f64;
                    let (r, phi) = (PI * t, 4.0 * PI * t);
                    vec![c64::new(0.0, r * phi.cos()), c64::new(0.0, r * phi.sin())]
                }
                Layout::UniformImag => (0..dim).map(|_| c64::new(0.0, rng.random_range(-PI..PI))).collect(),
                Layout::RandomComplex => (0..dim)
                    .map(|_| {
                        let d = if damping_bound > 0.0 { rng.random_range(0.0..=damping_bound) } else { 0.0 };
                        c64::new(-d, rng.random_range(-PI..PI))
                    })
                    .collect(),
            };
            let node: Vec<c64> = zeta.iter().map(|z| z.exp()).collect();
            if nodes.iter().all(|n| node_distance(n, &node) >= NODE_COLLISION_TOL) {
                nodes.push(node);
                terms.push(Term { zeta, coeff: random_coefficient(rng) });
                placed = true;
                break;
            }
            if layout == Layout::Spiral {
                break;
            }
        }
        if !placed {
            return Err(Error::Generation(format!("could not place node {idx} of {k} without collision")));
        }
    }
    ExponentialModel::new(dim, terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::make_box;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn term(zeta: &[c64], c: c64) -> Term {
        Term { zeta: zeta.to_vec(), coeff: c }
    }

    #[test]
    fn constant_and_alternating() {
        let one = c64::new(1.0, 0.0);
        let m = ExponentialModel::new(2, vec![term(&[c64::new(0.0, 0.0); 2], one)]).unwrap();
        let f = eval_model(&m, &make_box(&[3, 3], &[0, 0]).unwrap()).unwrap();
        assert!(f.values.iter().all(|v| (v - one).norm() < 1e-15));

        let m = ExponentialModel::new(2, vec![term(&[c64::new(0.0, PI), c64::new(0.0, 0.0)], one)]).unwrap();
        let f = eval_model(&m, &make_box(&[3, 1], &[0, 0]).unwrap()).unwrap();
        let want = [1.0, -1.0, 1.0];
        for (v, w) in f.values.iter().zip(want) {
            assert!((v - c64::new(w, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn eval_matches_direct_exponentials() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random_model(2, 2, &mut rng, Layout::RandomComplex, 0.2).unwrap();
        let omega = make_box(&[4, 4], &[0, 0]).unwrap();
        let f = eval_model(&m, &omega).unwrap();
        for (j, v) in omega.iter().zip(&f.values) {
            let direct: c64 = m
                .terms
                .iter()
                .map(|t| t.coeff * (t.zeta[0] * j[0] as f64 + t.zeta[1] * j[1] as f64).exp())
                .sum();
            assert!((v - direct).norm() < 1e-13);
        }
    }

    #[test]
    fn overflow_is_reported() {
        let m = ExponentialModel::new(1, vec![term(&[c64::new(400.0, 0.0)], c64::new(1.0, 0.0))]).unwrap();
        let omega = make_box(&[10], &[0]).unwrap();
        assert!(matches!(eval_model(&m, &omega), Err(Error::NonFinite(_))));
    }

    #[test]
    fn model_invariants() {
        let z = [c64::new(0.0, 0.3)];
        assert!(ExponentialModel::new(1, vec![term(&z, c64::new(0.0, 0.0))]).is_err());
        let dup = vec![term(&z, c64::new(1.0, 0.0)), term(&z, c64::new(2.0, 0.0))];
        assert!(ExponentialModel::new(1, dup).is_err());
        // aliased frequencies share a node
        let alias = vec![
            term(&z, c64::new(1.0, 0.0)),
            term(&[c64::new(0.0, 0.3 + 2.0 * PI)], c64::new(2.0, 0.0)),
        ];
        assert!(ExponentialModel::new(1, alias).is_err());
    }

    #[test]
    fn noise_ratio_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random_model(5, 2, &mut rng, Layout::UniformImag, 0.0).unwrap();
        let f = eval_model(&m, &make_box(&[8, 8], &[0, 0]).unwrap()).unwrap();
        for ratio in [1.0, 10f64.powf(-0.5), 1e-1, 1e-2, 1e-3, 1e-4] {
            let e = draw_noise(&f, ratio, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
            let en = e.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            assert!((en / f.norm() - ratio).abs() <= 8.0 * f64::EPSILON * ratio);
            let g = add_noise(&f, ratio, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
            let diff: f64 = g.values.iter().zip(&f.values).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            assert!((diff / f.norm() - ratio).abs() <= 1e-12 * ratio.max(1e-2));
        }
        let same = add_noise(&f, 0.0, &mut rng).unwrap();
        assert_eq!(same, f);
        let a = add_noise(&f, 0.1, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = add_noise(&f, 0.1, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        let zero = MdSequence::new(f.domain.clone(), vec![c64::new(0.0, 0.0); f.values.len()]).unwrap();
        assert!(add_noise(&zero, 0.1, &mut rng).is_err());
        assert!(add_noise(&f, -1.0, &mut rng).is_err());
    }

    #[test]
    fn spiral_nodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = random_model(4, 2, &mut rng, Layout::Spiral, 0.0).unwrap();
        for (k, t) in m.terms.iter().enumerate() {
            let kk = (k + 1) as f64;
            let (r, phi) = (PI * kk / 4.0, PI * kk);
            assert!((t.zeta[0] - c64::new(0.0, r * phi.cos())).norm() < 1e-15);
            assert!((t.zeta[1] - c64::new(0.0, r * phi.sin())).norm() < 1e-15);
            assert!(t.zeta.iter().all(|z| z.im.abs() <= PI && z.re == 0.0));
        }
        assert!(random_model(4, 3, &mut rng, Layout::Spiral, 0.0).is_err());
    }

    #[test]
    fn uniform_model_is_deterministic_and_distinct() {
        let a = random_model(100, 2, &mut ChaCha8Rng::seed_from_u64(12), Layout::UniformImag, 0.0).unwrap();
        let b = random_model(100, 2, &mut ChaCha8Rng::seed_from_u64(12), Layout::UniformImag, 0.0).unwrap();
        assert_eq!(a, b);
        assert!(a.validate().is_ok());
        let one = random_model(1, 3, &mut ChaCha8Rng::seed_from_u64(1), Layout::RandomComplex, 0.5).unwrap();
        assert_eq!(one.order(), 1);
        assert!(one.terms[0].zeta.iter().all(|z| z.re <= 0.0 && z.re >= -0.5));
    }

    #[test]
    fn linear_in_coefficients_and_restriction() {
        let m = random_model(3, 2, &mut ChaCha8Rng::seed_from_u64(2), Layout::UniformImag, 0.0).unwrap();
        let omega = make_box(&[6, 5], &[-1, 0]).unwrap();
        let s = c64::new(0.5, -2.0);
        let f = eval_model(&m, &omega).unwrap();
        let g = eval_model(&m.scaled(s), &omega).unwrap();
        for (a, b) in f.values.iter().zip(&g.values) {
            assert!((a * s - b).norm() <= 1e-14 * b.norm().max(1.0));
        }
        let xi = make_box(&[3, 2], &[0, 1]).unwrap();
        assert_eq!(f.restrict(&xi).unwrap(), eval_model(&m, &xi).unwrap());
        let outside = make_box(&[2], &[0]).unwrap();
        assert!(matches!(f.restrict(&outside), Err(Error::Coverage { .. })));
    }
}
