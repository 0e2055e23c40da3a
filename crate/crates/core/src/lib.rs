//! Exact moments, densities and random-matrix realizations of the
//! (α,q)-deformed Gaussian variables of type B.
//!
//! The crate is `no_std` (it needs `alloc`). Enable the `std` feature for
//! `std::error::Error` impls, or `parallel` to run Monte Carlo trials on a
//! rayon pool.
//!
//! Modules:
//!
//! * [`partitions`]: pair partitions, colored (type-B) pair partitions, the
//!   crossing / nesting / negative-block statistics and multi-index kernels.
//! * [`moments`]: vacuum moments of the type-B Gaussian operator as sums over
//!   colored pair partitions.
//! * [`density`]: the `MP_{α,q}` density through truncated q-products, and
//!   its moments by quadrature.
//! * [`matrix_model`]: the tensor-product random matrices, evaluated as a
//!   bitstring automaton.
//! * [`clt`]: the Ξ coefficient, the word-reduction check, the `Y` statistic
//!   and the convergence experiments.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod clt;
pub mod density;
mod error;
pub mod matrix_model;
pub mod moments;
pub mod partitions;
pub mod quadrature;
pub mod stats;

pub use error::{Error, Result};
