//! Pseudo-spectral toolkit for the Schrödinger–Newton (Choquard) equation
//! `i∂ₜu = −½Δu + Vu − (|x|⁻¹*|u|²)u` on a periodic box.

pub mod dynamics;
pub mod error;
pub mod field;
pub mod grid;
pub mod ground_state;
pub mod io;
pub mod linearized;
pub mod modulation;
pub mod observables;
pub mod potential;
pub mod random;
pub mod spectral;

#[cfg(test)]
mod testing;

pub use error::{Error, Result};
pub use field::Field3;
pub use grid::Grid3;
pub use ground_state::GroundState;
pub use spectral::Spectral;
