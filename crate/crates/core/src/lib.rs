//! Density-operator MCTDH (ρ-MCTDH) for identical particles in Fock space.
//!
//! The crate propagates a block-diagonal density operator
//! `ρ = Σ |Φ_J⟩ B_JK ⟨Φ_K|` built from a time-dependent set of orthonormal
//! single-particle functions, under the Lindblad master equation generated by
//! a local complex absorbing potential. A fixed-basis (full-CI) Lindblad
//! integrator is included as a reference.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, logging and the
//! command-line driver live in the companion `rhomctdh` crate.
//!
//! Mode indices are zero-based throughout: mode `j` is the SPF `φ_{j+1}`.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod experiment;
pub mod fft;
pub mod fock;
pub mod grid;
pub mod linalg;
pub mod liouville;
pub mod mctdh;
pub mod propagate;
pub mod pure;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
