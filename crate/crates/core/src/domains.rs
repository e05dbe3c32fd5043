//! Integer-lattice domains.
//!
//! An [`IndexSet`] is a finite subset of ℤ^d kept in the canonical
//! reverse-lexicographic order: the last coordinate is the most significant,
//! so on an `N^d` box the position of `m` is `m_1 + m_2 N + ... + m_d N^(d-1)`.
//! Every matrix built from a domain (Hankel rows/columns, Vandermonde rows)
//! uses this order.
//!
//! Axes are 0-based throughout the crate API.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};

/// Compare two points in canonical order (last coordinate most significant).
pub fn cmp_canonical(a: &[i64], b: &[i64]) -> Ordering {
    for (x, y) in a.iter().rev().zip(b.iter().rev()) {
        match x.cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    dim: usize,
    coords: Vec<i64>,
}

impl IndexSet {
    /// Builds a set from arbitrary points; duplicates are dropped and the
    /// result is put in canonical order.
    pub fn from_points<P: AsRef<[i64]>>(dim: usize, points: impl IntoIterator<Item = P>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        let mut pts: Vec<Vec<i64>> = Vec::new();
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            pts.push(p.to_vec());
        }
        pts.sort_by(|a, b| cmp_canonical(a, b));
        pts.dedup();
        Ok(IndexSet { dim, coords: pts.into_iter().flatten().collect() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[i64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, i64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn to_vecs(&self) -> Vec<Vec<i64>> {
        self.iter().map(<[i64]>::to_vec).collect()
    }

    /// Position of `p` in canonical order, by binary search.
    pub fn position(&self, p: &[i64]) -> Option<usize> {
        if p.len() != self.dim {
            return None;
        }
        let n = self.len();
        let (mut lo, mut hi) = (0, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match cmp_canonical(self.point(mid), p) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn contains(&self, p: &[i64]) -> bool {
        self.position(p).is_some()
    }

    /// Per-axis (min, max) over the points; `None` for an empty set.
    pub fn bounding_box(&self) -> Option<Vec<(i64, i64)>> {
        let mut it = self.iter();
        let first = it.next()?;
        let mut bb: Vec<(i64, i64)> = first.iter().map(|&c| (c, c)).collect();
        for p in it {
            for (b, &c) in bb.iter_mut().zip(p) {
                b.0 = b.0.min(c);
                b.1 = b.1.max(c);
            }
        }
        Some(bb)
    }

    /// Constant-time point lookup table for repeated queries.
    pub fn locator(&self) -> Locator {
        Locator::new(self)
    }

    /// The same set translated by `shift`.
    pub fn translate(&self, shift: &[i64]) -> Result<IndexSet> {
        if shift.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: shift.len() });
        }
        let coords = self
            .iter()
            .flat_map(|p| p.iter().zip(shift).map(|(a, b)| a + b))
            .collect();
        // translation preserves canonical order
        Ok(IndexSet { dim: self.dim, coords })
    }

    pub fn is_subset_of(&self, other: &IndexSet) -> bool {
        if self.dim != other.dim {
            return false;
        }
        let loc = other.locator();
        self.iter().all(|p| loc.find(p).is_some())
    }
}

/// Point-to-position lookup. Dense over the bounding box when that is
/// reasonably compact, hashed otherwise.
#[derive(Debug, Clone)]
pub struct Locator {
    inner: LocatorKind,
}

#[derive(Debug, Clone)]
enum LocatorKind {
    Dense { lo: Vec<i64>, extent: Vec<i64>, table: Vec<u32> },
    Hashed { dim: usize, map: HashMap<Vec<i64>, usize> },
}

impl Locator {
    fn new(set: &IndexSet) -> Self {
        let dim = set.dim();
        if let Some(bb) = set.bounding_box() {
            let extent: Vec<i64> = bb.iter().map(|(a, b)| b - a + 1).collect();
            let volume = extent.iter().try_fold(1usize, |acc, &e| acc.checked_mul(e as usize));
            if let Some(volume) = volume.filter(|&v| v <= (64 * set.len()).max(4096)) {
                let lo: Vec<i64> = bb.iter().map(|b| b.0).collect();
                let mut table = vec![u32::MAX; volume];
                for (i, p) in set.iter().enumerate() {
                    table[dense_offset(p, &lo, &extent).unwrap()] = i as u32;
                }
                return Locator { inner: LocatorKind::Dense { lo, extent, table } };
            }
        }
        let map = set.iter().enumerate().map(|(i, p)| (p.to_vec(), i)).collect();
        Locator { inner: LocatorKind::Hashed { dim, map } }
    }

    pub fn find(&self, p: &[i64]) -> Option<usize> {
        match &self.inner {
            LocatorKind::Dense { lo, extent, table } => {
                if p.len() != lo.len() {
                    return None;
                }
                let off = dense_offset(p, lo, extent)?;
                match table[off] {
                    u32::MAX => None,
                    i => Some(i as usize),
                }
            }
            LocatorKind::Hashed { dim, map } => {
                if p.len() != *dim {
                    return None;
                }
                map.get(p).copied()
            }
        }
    }
}

fn dense_offset(p: &[i64], lo: &[i64], extent: &[i64]) -> Option<usize> {
    let mut off = 0usize;
    let mut stride = 1usize;
    for ((&c, &l), &e) in p.iter().zip(lo).zip(extent) {
        let r = c - l;
        if r < 0 || r >= e {
            return None;
        }
        off += r as usize * stride;
        stride *= e as usize;
    }
    Some(off)
}

/// The full box `offset + {0..w_1-1} × ... × {0..w_d-1}`.
pub fn make_box(widths: &[i64], offset: &[i64]) -> Result<IndexSet> {
    if widths.is_empty() {
        return Err(Error::invalid("box needs at least one width"));
    }
    if widths.len() != offset.len() {
        return Err(Error::DimensionMismatch { expected: widths.len(), got: offset.len() });
    }
    if let Some(w) = widths.iter().find(|&&w| w < 1) {
        return Err(Error::invalid(format!("box width must be >= 1, got {w}")));
    }
    let dim = widths.len();
    let total: usize = widths.iter().map(|&w| w as usize).product();
    let mut coords = Vec::with_capacity(total * dim);
    let mut cur = vec![0i64; dim];
    for _ in 0..total {
        coords.extend(cur.iter().zip(offset).map(|(c, o)| c + o));
        // first coordinate runs fastest
        for (c, &w) in cur.iter_mut().zip(widths) {
            *c += 1;
            if *c < w {
                break;
            }
            *c = 0;
        }
    }
    Ok(IndexSet { dim, coords })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShapeSpec {
    /// `{(i,j): i >= 1, j >= 1, i + j <= side + 1}`
    Triangle { side: i64 },
    /// `{(i,j): i² + j² <= r², j >= 0}`
    HalfDisc { radius: i64 },
    Mask { dim: usize, points: Vec<Vec<i64>> },
}

pub fn make_shape(spec: &ShapeSpec) -> Result<IndexSet> {
    let set = match spec {
        ShapeSpec::Triangle { side } => {
            let l = *side;
            let mut pts = Vec::new();
            for j in 1..=l {
                for i in 1..=(l + 1 - j) {
                    pts.push([i, j]);
                }
            }
            IndexSet::from_points(2, pts)?
        }
        ShapeSpec::HalfDisc { radius } => {
            let r = *radius;
            let mut pts = Vec::new();
            for j in 0..=r {
                for i in -r..=r {
                    if i * i + j * j <= r * r {
                        pts.push([i, j]);
                    }
                }
            }
            IndexSet::from_points(2, pts)?
        }
        ShapeSpec::Mask { dim, points } => IndexSet::from_points(*dim, points)?,
    };
    if set.is_empty() {
        return Err(Error::invalid(format!("shape {spec:?} contains no lattice points")));
    }
    Ok(set)
}

/// `{x + y : x ∈ a, y ∈ b}`.
pub fn minkowski_sum(a: &IndexSet, b: &IndexSet) -> Result<IndexSet> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    let mut pts = Vec::with_capacity(a.len() * b.len());
    for x in a.iter() {
        for y in b.iter() {
            pts.push(x.iter().zip(y).map(|(p, q)| p + q).collect::<Vec<_>>());
        }
    }
    IndexSet::from_points(a.dim(), pts)
}

/// Minkowski erosion `{y : y + x ∈ omega for all x ∈ xi}`, the largest
/// `Υ` with `Ξ + Υ ⊆ Ω`.
pub fn erode(omega: &IndexSet, xi: &IndexSet) -> Result<IndexSet> {
    if omega.dim() != xi.dim() {
        return Err(Error::DimensionMismatch { expected: omega.dim(), got: xi.dim() });
    }
    if xi.is_empty() {
        return Err(Error::invalid("cannot erode by an empty set"));
    }
    let loc = omega.locator();
    let x0 = xi.point(0);
    let mut out = Vec::new();
    let mut buf = vec![0i64; omega.dim()];
    for w in omega.iter() {
        let y: Vec<i64> = w.iter().zip(x0).map(|(a, b)| a - b).collect();
        let fits = xi.iter().all(|x| {
            for ((b, yi), xi) in buf.iter_mut().zip(&y).zip(x) {
                *b = yi + xi;
            }
            loc.find(&buf).is_some()
        });
        if fits {
            out.push(y);
        }
    }
    if out.is_empty() {
        return Err(Error::NoValidDecomposition(format!(
            "no translate of the {}-point row domain fits inside the {}-point sample domain",
            xi.len(),
            omega.len()
        )));
    }
    IndexSet::from_points(omega.dim(), out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fiber {
    /// The coordinates other than the fiber axis, in axis order.
    pub frozen: Vec<i64>,
    /// Positions into the parent set, increasing along the fiber axis.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiberDecomposition {
    pub axis: usize,
    pub fibers: Vec<Fiber>,
}

/// Groups the points of `xi` into lines parallel to `axis`. Fibers appear in
/// the order of their first point.
pub fn fibers(xi: &IndexSet, axis: usize) -> Result<FiberDecomposition> {
    if axis >= xi.dim() {
        return Err(Error::invalid(format!("axis {axis} out of range for dimension {}", xi.dim())));
    }
    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut out: Vec<Fiber> = Vec::new();
    for (i, p) in xi.iter().enumerate() {
        let frozen: Vec<i64> = p
            .iter()
            .enumerate()
            .filter(|&(q, _)| q != axis)
            .map(|(_, &c)| c)
            .collect();
        let slot = *index.entry(frozen.clone()).or_insert_with(|| {
            out.push(Fiber { frozen, members: Vec::new() });
            out.len() - 1
        });
        out[slot].members.push(i);
    }
    Ok(FiberDecomposition { axis, fibers: out })
}

fn fiber_defect(xi: &IndexSet, axis: usize, fiber: &Fiber) -> Option<&'static str> {
    if fiber.members.len() < 2 {
        return Some("is a singleton");
    }
    let gap = fiber
        .members
        .windows(2)
        .any(|w| xi.point(w[1])[axis] != xi.point(w[0])[axis] + 1);
    gap.then_some("has a gap")
}

/// True when every fiber in every axis is a gap-free run of at least two
/// points.
pub fn check_convex_fibers(xi: &IndexSet) -> bool {
    !xi.is_empty()
        && (0..xi.dim()).all(|axis| {
            fibers(xi, axis)
                .map(|fd| fd.fibers.iter().all(|f| fiber_defect(xi, axis, f).is_none()))
                .unwrap_or(false)
        })
}

/// Every fiber that is a singleton or has a gap, as `(axis, frozen, reason)`.
pub fn fiber_defects(xi: &IndexSet) -> Vec<(usize, Vec<i64>, &'static str)> {
    let mut out = Vec::new();
    for axis in 0..xi.dim() {
        if let Ok(fd) = fibers(xi, axis) {
            for f in &fd.fibers {
                if let Some(reason) = fiber_defect(xi, axis, f) {
                    out.push((axis, f.frozen.clone(), reason));
                }
            }
        }
    }
    out
}

/// Row selections that drop the last (`keep_minus`) or the first
/// (`keep_plus`) point of every fiber along one axis. Both lists are in
/// canonical order, so `keep_plus[j]` is `keep_minus[j]` shifted by +1 along
/// the axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeletionMasks {
    pub axis: usize,
    pub keep_minus: Vec<usize>,
    pub keep_plus: Vec<usize>,
}

/// Only the fibers along `axis` are validated.
pub fn deletion_masks(xi: &IndexSet, axis: usize) -> Result<DeletionMasks> {
    let fd = fibers(xi, axis)?;
    let mut first = vec![false; xi.len()];
    let mut last = vec![false; xi.len()];
    for f in &fd.fibers {
        if let Some(reason) = fiber_defect(xi, axis, f) {
            return Err(Error::DegenerateFiber { dim: axis, frozen: f.frozen.clone(), reason: reason.into() });
        }
        first[f.members[0]] = true;
        last[*f.members.last().unwrap()] = true;
    }
    let keep_minus = (0..xi.len()).filter(|&i| !last[i]).collect();
    let keep_plus = (0..xi.len()).filter(|&i| !first[i]).collect();
    Ok(DeletionMasks { axis, keep_minus, keep_plus })
}
