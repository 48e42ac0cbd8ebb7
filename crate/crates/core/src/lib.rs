//! Three-pose planar pose-graph SLAM: geodesic and chordal rotation costs,
//! their closed-form reductions to two headings, minima enumeration and
//! basin-of-attraction sweeps.

pub mod angle;
pub mod chordal;
pub mod error;
pub mod export;
pub mod geodesic;
pub mod optimizer;
pub mod problem;
pub mod reduction;
pub mod sweep;
pub mod verify;

pub use angle::{wrap, Angle, AnglePair, Rot2};
pub use error::{Error, Result};
pub use problem::{default_benchmark, BenchmarkProblem, GroundTruth, MeasurementSet};
pub use reduction::ReducedModel;
