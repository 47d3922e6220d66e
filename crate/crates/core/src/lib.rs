//! Person-following pipeline for a mobile robot.
//!
//! The crate is organized as the stages of the loop that runs every camera
//! frame:
//!
//! - [`reid`]: calibrate a target from its appearance embeddings and pick it
//!   out of a frame by weighted feature distance.
//! - [`gesture`]: one-vs-one RBF SVM over hand landmarks plus the command
//!   debouncer.
//! - [`tracking`]: point-cluster centroid, constant-velocity Kalman filter
//!   with expiration, camera-to-map transform and goal construction.
//! - [`decision`]: the Steady / Follow / Search / Wait state machine.
//! - [`navsim`]: occupancy grid, A* planner, safety circle, robot executor
//!   and the simulated camera.
//! - [`harness`]: scenarios, synthetic embedding and landmark generators,
//!   the closed simulation loop and the evaluation protocols.

pub mod decision;
pub mod error;
pub mod gesture;
pub mod harness;
pub mod navsim;
pub mod reid;
pub mod rng;
pub mod tracking;

pub use decision::{Command, Directive, EventFrame, RobotMode, SearchProgress};
pub use error::{Error, Result};
pub use gesture::{Debouncer, GestureClass, GestureModel, LandmarkSet};
pub use navsim::{OccupancyGrid, RobotModel, SensorModel};
pub use reid::{CalibrationProfile, FeatureVector, IdentificationResult};
pub use tracking::{GoalPose, MapPose, TrackState, Transform3};

/// Version stamped into every file format this crate writes.
pub const SCHEMA_VERSION: u32 = 1;
