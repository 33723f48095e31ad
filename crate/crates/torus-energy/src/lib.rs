//! Low-frequency exponential-sum energies of point configurations on the
//! d-torus, together with the Riesz-type, Fejér and heat-kernel pairwise
//! quantities that bound them from both sides.
//!
//! The crate is organized around a single universal input, a
//! [`geometry::TorusPointSet`], and three families of quantities:
//!
//! * spectral energies `sum_k w(k) |S(k)|^2` over finite frequency regions
//!   ([`spectra`]),
//! * pairwise kernel energies `sum_{i,j} K(x_i - x_j)` ([`kernels`],
//!   [`energies`]),
//! * the verification harness tying the two together through exact
//!   Fejér-product and heat-kernel identities ([`bounds`], [`heat`]),
//!
//! plus the constructive pair-merging reduction ([`reduce`]) and geometric
//! discrepancy / pair-correlation statistics ([`stats`]).

pub mod bounds;
pub mod energies;
pub mod error;
pub mod geometry;
pub mod heat;
pub mod kernels;
pub mod reduce;
pub mod spectra;
pub mod stats;
pub mod summation;

pub use error::{Error, Result};
