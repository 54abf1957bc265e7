// `!(x < y)` is used on purpose so that NaN takes the failure branch.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod banded;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod grid;
pub mod physics;
pub mod snapshot;
pub mod stepper;
pub mod config;
pub mod orbit;
