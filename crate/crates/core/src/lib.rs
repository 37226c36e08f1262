//! Formulation layer: the typed LP/MILP model, the MiniAPL modeling
//! language, and the embedded solver.

pub mod ir;
pub mod lang;
pub mod rational;
pub mod solver;

#[cfg(feature = "testgen")]
pub mod testgen;
