//! Numerical spectral theory for finite truncations: spectral shift
//! functions by counting, perturbation-determinant phases and symmetrized
//! modified Fredholm determinants; the `χ_n` cutoff scheme; discretized
//! `d/dt + A(t)` model operators; the Abel-type transform relating the
//! spectral shift functions of `(A₊, A₋)` and `(H₂, H₁)`; and the
//! resolvent-regularized Witten index, including the `−i d/dx + θ(t)φ(x)`
//! example where the index is `(2π)⁻¹∫φ`.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, orchestration and
//! the command line live in the companion `witten-lab` crate.

#![no_std]
#![allow(clippy::needless_range_loop)]
#![allow(clippy::too_many_arguments)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cutoff;
pub mod determinants;
pub mod dirac;
mod error;
pub mod fixtures;
pub mod linalg;
pub mod model;
pub mod operator;
pub mod pushnitski;
pub mod quad;
pub mod ssf;

pub use error::{Error, ErrorClass, Result};
pub use linalg::{CMat, C64};
