//! Tautological systems of differential equations from finite combinatorial
//! data.
//!
//! The crate builds GKZ-type systems for toric Fano manifolds and
//! Casimir/Veronese-Segre systems for type-A flag varieties, expands period
//! integrals of Calabi-Yau hypersurfaces as exact constant-term series and
//! certifies that the constructed operators annihilate them.
//!
//! All arithmetic is exact (`BigInt` / `BigRational`); the only floating
//! point code is the torus quadrature in [`period::numeric_period`].

pub mod error;
pub mod exact;
pub mod flag;
pub mod io;
pub mod period;
pub mod taut;
pub mod toric;
pub mod weyl;

pub use error::{Error, Result};
pub use exact::{BigInt, BigRational, IntegerMatrix, LatticeBasis, QMatrix};
pub use weyl::{annihilates, op_apply, AnnihilationReport, DiffOp, FormalSeries};


/// Version tag carried by every file written by this crate.
pub const FORMAT_VERSION: &str = "tautgen/1";
