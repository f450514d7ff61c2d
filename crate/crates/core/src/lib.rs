//! Combinatorial Dyson–Schwinger equations in the Connes–Kreimer Hopf
//! algebra of decorated rooted trees, their BPHZ renormalization, and a
//! set of analysis tools for the solutions: step graphons, graph
//! polynomials and a Haar-measure model of solution space.
//!
//! The algebraic core ([`trees`], [`hopf`], [`dse`], [`renorm`]) works
//! with exact rationals throughout. The analysis modules ([`graphon`],
//! [`graphpoly`], [`haar`]) are exact where the quantity is a finite sum
//! and fall back to seeded floating-point searches only for cut distances
//! and Monte-Carlo estimates.

pub mod cli;
pub mod dse;
pub mod error;
pub mod graphon;
pub mod graphpoly;
pub mod haar;
pub mod hopf;
pub mod linalg;
pub mod rational;
pub mod renorm;
pub mod trees;

pub use error::{Error, Result};
pub use rational::Q;
