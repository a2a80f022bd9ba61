//! Baseline attackers: random sampling, gradient argmax, a genetic
//! algorithm, and exhaustive enumeration.

pub mod exhaustive;
pub mod genetic;
pub mod grad_argmax;
pub mod random;

pub use exhaustive::Exhaustive;
pub use genetic::{Genetic, GeneticConfig, Selection};
pub use grad_argmax::GradArgmax;
pub use random::RandSampling;
