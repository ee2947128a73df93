//! Noncommutative probability over finite-dimensional tracial algebras:
//! singular value functions, symmetric norms, submajorization, independent
//! families, and empirical checks of Rosenthal, Johnson-Schechtman,
//! Khinchine and Phi-moment inequalities.

pub mod algebra;
pub mod cli;
pub mod error;
pub mod exec;
pub mod harness;
pub mod independence;
pub mod linalg;
pub mod majorization;
pub mod operators;
pub mod oracle;
pub mod rearrangement;
pub mod rng;
pub mod spaces;

pub use algebra::{AlgElement, Block, TracialAlgebra};
pub use error::{Error, Result};
pub use exec::Execution;
pub use harness::{run_cell, Experiment, RatioReport};
pub use independence::{DirectSumElement, Ensemble, EnsembleKind, EnsembleSpec, Law, TensorFamily};
pub use rearrangement::{mu_of_direct_sum, singular_value_function, StepFunction};
pub use spaces::{luxemburg_norm, phi_moment, NormSpec, OrliczFunction};
