//! Analysis of linear systems `dy/dz = B(z) y` with rational coefficients:
//! singular point classification, exponents and the conditions on them,
//! simultaneous triangularization, numerical monodromy, formal solutions at
//! irregular points, explicit solutions of triangular systems, and the
//! solvability decision tying these together.

pub mod decide;
pub mod error;
pub mod exponents;
pub mod formal;
pub mod monodromy;
pub mod numkernel;
pub mod quadrature;
pub mod report;
pub mod system;
pub mod triangular;
pub mod verdict;

pub use decide::{decide, DecisionOutcome, Route, Tolerances};
pub use error::{Error, Result};
pub use numkernel::{CMat, Complex64, MatrixC, Scalar};
pub use system::{parse_system, print_system, PointKind, PointRef, SystemSpec};
pub use triangular::FlagResult;
pub use verdict::{ConditionId, ConditionVerdict, Decision, Status, Witness};
