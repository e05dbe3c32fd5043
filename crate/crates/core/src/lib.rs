//! Frequency estimation for multidimensional exponential sums sampled on
//! general (non-box) grids.

pub mod cli;
pub mod domains;
pub mod error;
pub mod esprit;
pub mod grid;
pub mod harness;
pub mod hankel;
pub mod linalg;
pub mod signal;

pub use domains::IndexSet;
pub use error::{Error, Result};
pub use esprit::{esprit_1d, esprit_eroded, esprit_nd, EspritOptions, EstimationReport, ModelOrder};
pub use linalg::c64;
pub use signal::{ExponentialModel, MdSequence, Term};
