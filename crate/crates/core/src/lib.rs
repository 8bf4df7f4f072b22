//! Pose-invariant object recognition for event-camera streams.
//!
//! The pipeline: a raw spike-event stream is cut into constant-event-count
//! windows ([`event`]), each window is cropped to a tracked region of
//! interest and rendered as a fixed-size binary image ([`roi`]), the image
//! is pushed through a random sigmoid hidden layer whose projections are
//! then filtered by temporal slowness ([`model`]), and a ridge-regularized
//! linear readout scores pose-specific classes that are folded into object
//! decisions, optionally vote-aggregated over successive views ([`pose`]).
//! A parametric rotating-rig simulator ([`synth`]) provides labelled data
//! with ground-truth pose angles.
//!
//! All numerics are generic over the scalar type via [`Scalar`]; `f64` is
//! the default lane used by the CLI (see the aliases at the crate root).

pub mod commands;
pub mod config;
pub mod error;
pub mod event;
pub mod model;
pub mod pose;
pub mod roi;
pub mod scalar;
pub mod synth;

pub use error::Error;
pub use scalar::Scalar;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Default scalar lane for the CLI and file formats.
pub type Real = f64;

pub type HiddenLayer = model::HiddenLayer<Real>;
pub type SlowProjection = model::SlowProjection<Real>;
pub type OutputLayer = model::OutputLayer<Real>;
pub type SlowElmModel = model::SlowElmModel<Real>;
pub type InputVector = roi::InputVector<Real>;
