//! Numerical function theory on the unit ball of `C^n`.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod carleson;
pub mod error;
pub mod experiment;
pub mod geom;
pub mod holofun;
pub mod lattice;
pub mod norms;
pub mod operators;
pub mod quad;
pub mod special;

pub use error::{Error, Result};
pub use geom::{CVec, TubeSpec};
pub use holofun::{HoloFun, MultiIndex};
pub use num_complex::Complex64;
