//! Target localization: cluster centroid, Kalman filtering of the target
//! position, and projection to a map-frame navigation goal.
//!
//! Camera frame convention: x forward, y left, z up.

mod geometry;
mod kalman;

pub use geometry::{
    centroid, make_goal, to_map, wrap_angle, GoalPose, MapPoint3, MapPose, PointCloud3, Transform3,
};
pub use kalman::{kf_predict, kf_update, KfParams, TrackState, Tracker, DEFAULT_T_EXP};
