//! Simulator for a linear-optical Bell-state analyzer that uses orbital
//! angular momentum (OAM) and path modes to identify all four polarization
//! Bell states deterministically.
//!
//! * [`state`]: truncated polarization ⊗ OAM ⊗ path mode spaces and sparse states.
//! * [`elements`]: wave plates, q-plates, spiral phase plates, Dove prisms and beam splitters.
//! * [`gates`]: P-COS, O-CPS, OH and the DP stage, with element-level decompositions.
//! * [`circuit`]: text format, sparse propagation, dense oracle and validation.
//! * [`measurement`]: SPPM detector blocks and coincidence distributions.
//! * [`bsa`]: the full analyzer, its classification table and verification.
//! * [`cli`]: the `hyperbsa` command.

pub mod bsa;
pub mod circuit;
pub mod cli;
pub mod elements;
pub mod error;
pub mod gates;
pub mod measurement;
pub mod state;

pub use bsa::{Analyzer, BellLabel, ClassificationTable, VerificationReport};
pub use circuit::{Circuit, ParseError};
pub use elements::{Angle, Element, HalfInt, Photon, PlacedElement, Site};
pub use error::{Error, Result};
pub use gates::{CanonicalGate, Gate, Implementation};
pub use measurement::{CoincidencePattern, DetectorId, OutcomeDistribution};
pub use state::{BasisMode, ModeSpace, PathLabel, PhotonState, Polarization, TwoPhotonState, C64};
