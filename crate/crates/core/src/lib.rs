//! Exact computations for Belavin-Drinfeld cluster structures on `GL_n`.
//!
//! The crate builds the initial seed of the generalized cluster structure
//! attached to an aperiodic Belavin-Drinfeld pair, computes the Poisson
//! brackets of the seed functions under the associated Poisson-Lie bracket,
//! assembles the quiver and checks the structural properties of the seed:
//! log-canonicity, compatibility, regularity, toric invariance and the
//! Laurent reduction maps between pairs that differ by one root.
//!
//! All arithmetic is exact over the rationals.

pub mod bd_core;
pub mod exactlin;
pub mod laurent_maps;
pub mod poisson;
pub mod quiver;
pub mod sample;
pub mod seed_builder;
pub mod verify;

pub use bd_core::{BdError, BdPair, BdTriple, PairGraph, PathDecomposition, RunDecomposition};
pub use exactlin::{LinalgError, Rational, RationalMatrix};
pub use laurent_maps::{Removal, RunReduction, Side};
pub use poisson::{OmegaMatrix, PoissonStructure};
pub use quiver::{ExchangeMatrix, Quiver};
pub use sample::Sampler;
pub use seed_builder::{ClusterSeed, DiagChoice, LMatrix, Vertex};
pub use verify::{ReportConfig, VerificationReport};
