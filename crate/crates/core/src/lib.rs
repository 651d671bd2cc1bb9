//! Quantum kinetic equations on finite lattices: cumulant expansions of evolution
//! groups, the generalized kinetic equation for the one-particle state, and its
//! mean-field (Vlasov/Hartree) limit.

pub mod combinatorics;
pub mod cumulant;
pub mod error;
pub mod exec;
pub mod gqke;
pub mod lab;
pub mod lattice;
pub mod quadrature;
pub mod states;
pub mod tensor;
pub mod vlasov;

pub use error::{KineticError, Result};
pub use exec::Exec;
