//! Simulation and verification toolkit for state-programmable quantum multimeters.
//!
//! A multimeter is a measurement setup `⟨K, Z, V⟩` (apparatus space, pointer
//! observable, interaction channel) whose probe state is left free; choosing
//! the probe "programs" the device to measure an observable or to implement a
//! channel on the system. The crate builds these devices, induces the programmed
//! observables and channels, and checks the structural results about them
//! numerically.

pub mod channels;
pub mod error;
pub mod multimeter;
pub mod observables;
pub mod operators;
pub mod random;
pub mod verify;

pub use channels::{Channel, Picture, StinespringDilation};
pub use error::{Error, Result};
pub use multimeter::{MeasurementModel, Multimeter, Probe};
pub use observables::{Observable, StochasticKernel};
pub use operators::{DensityOperator, Operator, StateVector, C64, DEFAULT_TOL};
pub use verify::{Verdict, VerificationReport};
