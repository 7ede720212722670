//! Serial-monopoly pricing on exact piecewise-linear demand curves.

pub mod analytics;
pub mod cli;
pub mod config;
pub mod curve;
pub mod dynamics;
pub mod error;
pub mod generate;
pub mod ingest;
pub mod number;
pub mod repro;
pub mod strategic;
pub mod verify;

pub use curve::{Curve, DemandCurve, Point, RevenuePoint};
pub use error::{Error, Result};
pub use number::{ExactNumber, Mode, Scalar};
