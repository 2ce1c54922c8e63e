//! Shared numerical kernels: complex matrices, small dense SVD, the special
//! functions used by the rate solution, and deterministic random streams.

mod matrix;
mod rng;
pub mod special;
mod svd;

pub use matrix::{all_finite, Cx, CMatrix, CVector};
pub use rng::{gaussian_complex, RngStream};
pub use svd::{svd, SvdResult};
