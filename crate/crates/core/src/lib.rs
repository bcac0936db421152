//! Geometric charge pumping through a Cooper-pair sluice coupled to an Ohmic
//! bath.
//!
//! The sluice is a driven two-level system `H(B) = -B·S`. Pumped charge per
//! cycle is the line integral of the pumping field `F(B)` along the closed
//! driving path, or equivalently the flux of its curl `G = ∇×F`. This crate
//! computes `F` in two regimes:
//!
//! * coherent: eigenstate sums ([`coherent`]), with the closed-form ground
//!   state curl as a benchmark;
//! * dissipative: equilibrium correlation functions of the system-bath
//!   complex, obtained by propagating the auxiliary response operator `Y`
//!   with a non-Markovian weak-coupling equation of motion ([`eom`],
//!   [`response`]).
//!
//! [`geometry`] sweeps fields over parameter planes and integrates them along
//! paths. [`oracle`] is a brute-force exact-diagonalization backend used to
//! validate the equation of motion.
//!
//! Units: `ħ = E_C = |e| = 1`. Energies are in `E_C`, times in `ħ/E_C`,
//! temperatures are `k_B T` in `E_C`, and charge is in units of `e`.

pub mod bath;
pub mod coherent;
pub mod eom;
mod error;
pub mod geometry;
pub mod linalg;
pub mod mean_force;
pub mod oracle;
pub mod response;
pub mod scan;
pub mod sluice;

#[cfg(test)]
pub(crate) mod quadrature;

pub use bath::{BathSpec, CorrelatorSeries};
pub use coherent::CoherentField;
pub use eom::{Component, EomSystem, EomTensors, YState};
pub use error::{Error, Result};
pub use geometry::{FieldGrid, GridGeometry, PumpPath};
pub use mean_force::MeanForce;
pub use oracle::DiscreteBath;
pub use response::{DissipativeSolver, InitialCondition, ResponsePoint, ResponseSettings};
pub use sluice::{DriveParams, SystemOperators, ThermalState};

/// Gap below which a parameter point is treated as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;
