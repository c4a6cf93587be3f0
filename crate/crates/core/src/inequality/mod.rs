//! Numerical checks of the functional inequalities behind the estimates:
//! elementary power inequalities by random sampling, and the composite
//! weighted Sobolev, trace and parabolic Sobolev inequalities on a
//! reproducible corpus of test functions with empirically estimated constants.

pub mod composites;
pub mod constants;
pub mod corpus;
pub mod elementary;

pub use composites::{verify_composites, AssemblyConstants, CompositeReport, LemmaReport};
pub use constants::{estimate_constants, CalibrationError, EmpiricalConstants};
pub use corpus::FunctionCorpus;
pub use elementary::{fuzz_elementary, ElementaryReport};
