#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod beta;
pub mod error;
pub mod flow;
pub mod graph;
pub mod inv_gauss;
pub mod jump;
pub mod linalg;
pub mod quad;
pub mod reinforced;
pub mod report;
pub mod rng;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
