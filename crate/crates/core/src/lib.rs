//! Linear SVM trainers that detect and correct label noise while they fit.
//!
//! The crate is organised bottom-up:
//!
//! * [`data`] loads, normalizes and corrupts datasets and builds
//!   cross-validation plans.
//! * [`convex`] holds the continuous solvers every model relies on: the
//!   soft-margin SVM dual solver, a general fixed-binaries subproblem solver and
//!   the cluster reference-point routines (coordinate and geometric medians).
//! * [`resvm`] trains the relabeling SVM and its ramp-loss variant, either
//!   exactly (branch-and-bound over the flip indicators) or with a monotone
//!   alternating heuristic.
//! * [`cluster`] trains the two-cluster SVMs under the l1 (2-median) and l2
//!   (geometric-median) distances.
//! * [`fit`] is the family-agnostic front door (model specs, fit results and
//!   the self-describing model file).
//! * [`harness`] runs the noise-injection / cross-validation protocol and
//!   emits reports.

pub mod cluster;
pub mod convex;
pub mod data;
pub mod deadline;
pub mod fit;
pub mod harness;
pub mod resvm;
pub mod rng;

pub use convex::{Hyperplane, SolveStatus, SvmSolution};
pub use data::{DataError, Dataset, Label};
pub use deadline::Deadline;
pub use fit::{FitError, FitResult, ModelFamily, ModelSpec};
