//! Grid descriptors as they appear in files and on the command line.
//!
//! JSON form: `{"dim": d, "kind": "box"|"triangle"|"half_disc"|"mask", ...}`.
//! Compact form: `box:N1,...,Nd[@o1,...,od]`, `triangle:L`, `half_disc:R`,
//! `mask:FILE.json`. A compact string starting with `{` is read as JSON.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domains::{make_box, make_shape, IndexSet, ShapeSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    #[serde(flatten)]
    pub shape: GridShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridShape {
    Box {
        widths: Vec<i64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<Vec<i64>>,
    },
    Triangle {
        side: i64,
    },
    HalfDisc {
        radius: i64,
    },
    Mask {
        points: Vec<Vec<i64>>,
    },
}

impl GridSpec {
    pub fn boxed(widths: &[i64], offset: Option<&[i64]>) -> Self {
        GridSpec {
            dim: widths.len(),
            shape: GridShape::Box { widths: widths.to_vec(), offset: offset.map(<[i64]>::to_vec) },
        }
    }

    pub fn triangle(side: i64) -> Self {
        GridSpec { dim: 2, shape: GridShape::Triangle { side } }
    }

    pub fn half_disc(radius: i64) -> Self {
        GridSpec { dim: 2, shape: GridShape::HalfDisc { radius } }
    }

    pub fn mask(set: &IndexSet) -> Self {
        GridSpec { dim: set.dim(), shape: GridShape::Mask { points: set.to_vecs() } }
    }

    pub fn to_index_set(&self) -> Result<IndexSet> {
        match &self.shape {
            GridShape::Box { widths, offset } => {
                if widths.len() != self.dim {
                    return Err(Error::DimensionMismatch { expected: self.dim, got: widths.len() });
                }
                let zero = vec![0; self.dim];
                make_box(widths, offset.as_deref().unwrap_or(&zero))
            }
            GridShape::Triangle { side } => {
                self.require_planar()?;
                make_shape(&ShapeSpec::Triangle { side: *side })
            }
            GridShape::HalfDisc { radius } => {
                self.require_planar()?;
                make_shape(&ShapeSpec::HalfDisc { radius: *radius })
            }
            GridShape::Mask { points } => make_shape(&ShapeSpec::Mask { dim: self.dim, points: points.clone() }),
        }
    }

    fn require_planar(&self) -> Result<()> {
        if self.dim != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: self.dim });
        }
        Ok(())
    }

    /// Reads either a grid JSON object or a bare array of points.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        if value.is_array() {
            let points: Vec<Vec<i64>> = serde_json::from_value(value)?;
            let dim = points.first().map(Vec::len).ok_or_else(|| Error::invalid("empty mask"))?;
            return Ok(GridSpec { dim, shape: GridShape::Mask { points } });
        }
        Ok(serde_json::from_value(value)?)
    }
}

fn parse_ints(s: &str) -> Result<Vec<i64>> {
    s.split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|e| Error::Parse(format!("bad integer {t:?}: {e}"))))
        .collect()
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') || s.starts_with('[') {
            return Self::from_json_str(s);
        }
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("grid spec {s:?} is missing ':' (try box:9,9)")))?;
        match kind {
            "box" => {
                let (w, o) = match args.split_once('@') {
                    Some((w, o)) => (w, Some(o)),
                    None => (args, None),
                };
                let widths = parse_ints(w)?;
                let offset = o.map(parse_ints).transpose()?;
                if let Some(o) = &offset {
                    if o.len() != widths.len() {
                        return Err(Error::Parse(format!("box offset {o:?} does not match widths {widths:?}")));
                    }
                }
                Ok(GridSpec { dim: widths.len(), shape: GridShape::Box { widths, offset } })
            }
            "triangle" => Ok(GridSpec::triangle(one_int(args)?)),
            "half_disc" => Ok(GridSpec::half_disc(one_int(args)?)),
            "mask" => Self::from_json_file(Path::new(args)),
            other => Err(Error::Parse(format!("unknown grid kind {other:?}"))),
        }
    }
}

fn one_int(s: &str) -> Result<i64> {
    s.trim().parse().map_err(|e| Error::Parse(format!("bad integer {s:?}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compact_grammar() {
        let g: GridSpec = "box:9,9".parse().unwrap();
        assert_eq!(g, GridSpec::boxed(&[9, 9], None));
        assert_eq!(g.to_index_set().unwrap().len(), 81);
        let g: GridSpec = "box:2,3@1,-1".parse().unwrap();
        let s = g.to_index_set().unwrap();
        assert_eq!(s.point(0), &[1, -1]);
        assert_eq!(s.len(), 6);
        assert_eq!("triangle:2".parse::<GridSpec>().unwrap().to_index_set().unwrap().len(), 3);
        assert_eq!("half_disc:1".parse::<GridSpec>().unwrap().to_index_set().unwrap().len(), 4);
        assert!("box:9,x".parse::<GridSpec>().is_err());
        assert!("blob:3".parse::<GridSpec>().is_err());
        assert!("box:2,2@1".parse::<GridSpec>().is_err());
    }

    #[test]
    fn json_forms() {
        let g: GridSpec = serde_json::from_str(r#"{"dim":2,"kind":"box","widths":[3,4],"offset":[1,1]}"#).unwrap();
        assert_eq!(g.to_index_set().unwrap().point(0), &[1, 1]);
        let g: GridSpec = serde_json::from_str(r#"{"dim":2,"kind":"half_disc","radius":3}"#).unwrap();
        assert_eq!(g.shape, GridShape::HalfDisc { radius: 3 });
        let g = GridSpec::from_json_str("[[0,0],[1,0]]").unwrap();
        assert_eq!(g.dim, 2);
        let g: GridSpec = r#"{"dim":3,"kind":"triangle","side":3}"#.parse().unwrap();
        assert!(g.to_index_set().is_err());
    }

    #[test]
    fn mask_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        std::fs::write(&path, r#"{"dim":1,"kind":"mask","points":[[3],[1],[2],[1]]}"#).unwrap();
        let g: GridSpec = format!("mask:{}", path.display()).parse().unwrap();
        assert_eq!(g.to_index_set().unwrap().to_vecs(), vec![vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn serialized_order_roundtrips() {
        let s = make_shape(&ShapeSpec::HalfDisc { radius: 4 }).unwrap();
        let text = serde_json::to_string(&GridSpec::mask(&s)).unwrap();
        let back: GridSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_index_set().unwrap(), s);
    }
}
