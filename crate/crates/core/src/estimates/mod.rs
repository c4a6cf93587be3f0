//! Exponents, Moser iteration constants, the L^α envelope and the L^∞
//! certification shape.

pub mod envelope;
pub mod exponents;
pub mod fit;
pub mod moser;
pub mod sequence;
pub mod theorem55;

pub use envelope::{Envelope, EnvelopeError, EnvelopeParams};
pub use exponents::{ExponentBundle, ExponentError, ExponentParams};
pub use fit::{fit_cbar, CbarFit, FitError};
pub use moser::MoserSchedule;
pub use sequence::{sequence_bound, SequenceBound, SequenceError, Step};
pub use theorem55::{fit_sweep, RunCertificate, ShapeInputs, SweepFit};
