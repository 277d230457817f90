// Guards written as `!(x > 0.0)` are deliberate: unlike `x <= 0.0` they
// also catch NaN, which must fail validation rather than slip through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod error;
pub mod grid;
pub mod lfun;
pub mod planar;
pub mod polyfree;
pub mod reduction;
pub mod universality;

pub use error::{Error, Result};
pub use num_complex::Complex64;
