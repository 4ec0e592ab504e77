//! Common certainty, agreement and its breakdown for measurements on a
//! shared quantum state.

pub mod classical;
pub mod epistemics;
pub mod error;
pub mod limits;
pub mod linalg;
pub mod quantum_model;
pub mod register;
pub mod scenarios;

pub use epistemics::{
    classify, classify_with, run_recursion, run_recursion_with, Classification,
    ClassificationKind, ConditionalProbability, RecursionOptions, RecursionTrace,
};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, TOL};
pub use quantum_model::{Agent, HilbertFactorization, Measurement, Role, Scenario};
