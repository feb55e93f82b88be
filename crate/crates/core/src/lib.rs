//! Weighted counting of square-free words that respect list assignments.
//!
//! The pipeline builds the set Λ of normalized proper prefixes of minimal
//! squares of period at most `p` ([`lambda`]), the letter-transition
//! multigraph over it ([`graph`]), and iterates integer weights on that
//! graph until they certify a growth constant α ([`weights`]). [`bounds`]
//! turns a certificate into exponential lower bounds, and [`oracle`] holds
//! independent brute-force checks.

pub mod bounds;
pub mod digest;
pub mod error;
pub mod graph;
pub mod lambda;
pub mod oracle;
pub mod rational;
pub mod weights;
pub mod words;

pub use error::{Error, Result};
pub use graph::{build_graph, TransitionGraph};
pub use lambda::{build_lambda, LambdaSet, LambdaState};
pub use rational::Rational;
pub use weights::{
    compute_alpha, iterate, renormalize, run_fixed_point, verify_certificate, Certificate,
    FixedPointConfig, StartVector, WeightVector,
};
pub use words::{find_square, is_minimal_square, normalize, Letter, Word};
