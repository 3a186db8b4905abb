//! Numerical toolkit for the negative-power integral equation
//!
//! ```text
//! f(x)^(q-1) = ∫_Ω f(y) |x-y|^(α-n) dy + λ ∫_Ω f(y) |x-y|^(α-n+1) dy,   α > n,
//! ```
//!
//! on bounded domains of dimension one to three, together with the reversed
//! Hardy-Littlewood-Sobolev inequality that governs it.
//!
//! The crate is organized bottom-up: [`geometry`] builds quadrature meshes,
//! [`kernel`] assembles the dense integral operator, [`sharp`] and
//! [`energy`] evaluate the sharp constant and energy quotients, [`solver`]
//! computes solutions and minimizers, and [`diagnostics`] checks
//! solution-level identities (Pohozaev, symmetry, moving planes, blow-up).

pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod kernel;
pub mod sharp;
pub mod solver;

pub use energy::{energy_quotient, quasi_norm, DensityField, EnergyReport};
pub use error::{Error, Result};
pub use geometry::{build_ball_mesh, build_box_mesh, build_interval_mesh, Mesh, Point, StarCenter};
pub use kernel::{KernelOperator, KernelParams, SelfCellRule};
pub use sharp::{p_alpha, q_alpha, sharp_constant, SharpConstant};
pub use solver::{SolveStatus, SolveTrace, SolverConfig};
