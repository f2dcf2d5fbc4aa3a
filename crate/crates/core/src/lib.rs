//! Simulator and analysis toolkit for sequential two-photon excitation of a
//! biexciton–exciton cascade.
//!
//! - [`fock`]: truncated Fock-space algebra (ladder operators, correlations,
//!   partial trace, entropy, beamsplitters).
//! - [`protocol`]: closed-form predictions and the photon-number-entangled
//!   state built from cascade parameters.
//! - [`montecarlo`]: stochastic emission and detection producing time-tag
//!   streams, plus the tag file format.
//! - [`correlate`]: histograms, two-time maps, quadrant g², mean photon
//!   numbers and windowed HOM correlations from tag streams.

pub mod fock;
pub mod protocol;
pub mod montecarlo;
pub mod correlate;

pub use fock::{Energy, ModeLabel, ModeRegister, PureState, Spatial, TimeBin};
pub use num_complex::Complex64;
