//! Maximal correlation and maximal entanglement of bipartite quantum states.
//!
//! * [`linalg`]: dense complex kernels (eigen/SVD wrappers, partial trace and
//!   transpose, realignment).
//! * [`states`]: density matrices, classical joints, local channels and
//!   seeded random ensembles.
//! * [`maxcorr`]: maximal correlation `μ` via the operator-Schmidt spectrum,
//!   the classical path and an independent variational oracle.
//! * [`maxent`]: certified upper and lower bounds on maximal entanglement.
//! * [`cli`]: file formats, reports and property suites behind the binary.

pub mod cli;
pub mod linalg;
pub mod maxcorr;
pub mod maxent;
pub mod states;

pub use linalg::{ComplexMatrix, Side, C64};
pub use maxcorr::{mu_classical, mu_schmidt, mu_variational, CorrelationReport, ObservablePair};
pub use states::{BipartiteState, ClassicalJoint, LocalChannel, RngSeed};
