// Guards like `!(x > 0.0)` reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diophantine;
pub mod error;
pub mod group;
pub mod phase;
pub mod shale_weil;
pub mod stats;
pub mod theta;
pub mod weyl;

pub use error::{Result, ThetaError};
