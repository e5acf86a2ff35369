//! Driven-dissipative cavity QED with one or two two-level atoms.
//!
//! The crate models collective light scattering from an atom pair coupled to
//! a single cavity mode: steady states of the Lindblad master equation,
//! photon emission rates and their dependence on the interatomic phase,
//! second-order correlation functions g²(τ) via the quantum regression
//! theorem, thermal-detuning and optical-pumping imperfection models, and
//! the optical-lattice imaging pipeline that maps atom positions to the
//! interatomic phase.

pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod models;
pub mod operators;
pub mod units;

pub use error::{Error, Result};
