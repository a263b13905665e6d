//! Matrix-valued symbols on compact Lie groups.
//!
//! `lienuc` realizes the global (Peter-Weyl) quantization on the torus `T^n`,
//! on `SU(2)` and on `SO(3)`, and uses it to evaluate symbolic r-nuclearity
//! criteria, compute operator traces three independent ways (symbol, kernel
//! diagonal, eigenvalue sum) and check eigenvalue summability bounds on
//! finite sections of the dual.
//!
//! The crate is organized bottom-up:
//!
//! - [`group`]: dual enumeration, representation matrices, Haar quadrature.
//! - [`fourier`]: group Fourier transform, inversion and Parseval.
//! - [`quantize`]: symbols, `Op(σ)`, kernels, symbol extraction, Galerkin matrices.
//! - [`norms`]: Schatten, `op(ℓ∞,ℓ∞)` and `L^p` norms.
//! - [`nuclearity`]: criterion series with convergence verdicts, n_r bounds.
//! - [`spectral`]: finite-section spectra, traces, Lidskii checks, heat traces.
//! - [`catalog`]: ready-made operators (heat, Bessel potentials, sub-Laplacian
//!   powers, Carleman-type multipliers, separable demos).
//! - [`cli`]: configuration, batch runs and JSON/CSV reports.
//!
//! Runnable walkthroughs live in `examples/`; `cargo run --example` lists them.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod cli;
mod error;
pub mod fourier;
pub mod group;
mod matrix_json;
pub mod norms;
pub mod nuclearity;
pub mod quantize;
pub mod spectral;
mod sum;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Library version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
