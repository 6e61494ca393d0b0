//! Computational engine for simply-laced isomonodromy systems.
//!
//! The crate is organised around the objects the equations live on:
//!
//! - [`graph`]: complete k-partite cores, supernova graphs and the canonical
//!   node order used by every dense vector in the crate.
//! - [`root`]: the symmetric Kac–Moody bilinear form, simple reflections,
//!   root classification and the existence test for stable connections
//!   with prescribed local data.
//! - [`orbits`]: adjoint-orbit combinatorics — Jordan data, markings,
//!   leg realizations and the rank-shift duality between QP and PQ.
//! - [`phase`]: the symplectic vector space of off-diagonal block matrices,
//!   its nonstandard symplectic form, the Möbius/SL₂ action, residues and
//!   stability testing.
//! - [`spectral`]: bivariate spectral polynomials and their behaviour under
//!   coordinate changes of the Fourier sphere.
//! - [`flow`]: the Hamiltonian one-form, isomonodromy vector fields, the full
//!   linear connection, a fixed-step integrator with conservation monitors,
//!   and formal normal forms at infinity.
//! - [`readings`]: the different linear-system shapes one graph encodes.
//! - [`sampling`]: seeded random problem generators for verification sweeps.
//! - [`verify`]: the seeded self-check suites behind `isoflow verify`.

pub mod flow;
pub mod graph;
pub mod linalg;
pub mod orbits;
pub mod phase;
pub mod readings;
pub mod root;
pub mod sampling;
pub mod spectral;
pub mod verify;

pub use graph::{Graph, GraphError, SupernovaGraph};
pub use linalg::{CMat, C};
pub use orbits::{JordanData, Marking};
pub use phase::{FourierConfig, FourierPoint, GradedSpace, Mobius, PhasePoint, TimeConfig};
pub use root::{ParamVector, RootVector};
