//! Fourier analysis of decision trees and the rorrelation problem.
//!
//! The crate has five layers:
//!
//! * [`fourier`] — exact Walsh–Hadamard transforms, coefficient norms and
//!   level-weight extraction for real functions on the Boolean hypercube;
//! * [`tree`] — generalized decision trees (perfect binary trees with sparse
//!   multilinear polynomials at the leaves), evaluation, density, spectrum
//!   slicing and generators;
//! * [`families`] — elementary set families, the `*` product, and the
//!   recursive partition of the complete k-subset family with cost accounting;
//! * [`lambda`] — the piecewise entropy-like bound function and evaluators for
//!   the Fourier-weight bounds stated in terms of it;
//! * [`rorrelation`] / [`harness`] — the k-fold rorrelation problem (Haar
//!   orthogonal matrices, the phi evaluator, uniform and hard input
//!   distributions) and the distinguishing-advantage experiment harness.

pub mod error;
pub mod families;
pub mod fourier;
pub mod harness;
pub mod lambda;
pub mod poly;
pub mod rng;
pub mod rorrelation;
pub mod tree;

pub use error::Error;
pub use families::{ElementaryFamily, ExplicitFamily, IntegerInterval};
pub use fourier::{BooleanFunction, FourierSpectrum};
pub use poly::MultilinearPolynomial;
pub use rorrelation::{HardDistribution, InputMatrix, OrthogonalMatrix, RorrelationInstance};
pub use tree::{DecisionTree, SetFamilySpec};
