use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::grid::OccupancyGrid;
use crate::gesture::{GestureClass, LandmarkSet};
use crate::harness::{gen_landmarks_with, EmbeddingGenerator, LandmarkJitter};
use crate::reid::FeatureVector;
use crate::rng;
use crate::tracking::{MapPose, PointCloud3};

const STREAM_CLUSTER: u64 = 0xC1;
const STREAM_FEATURE: u64 = 0xFE;
const STREAM_LANDMARK: u64 = 0x1A;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorModel {
    /// Horizontal field of view, radians.
    pub fov: f64,
    pub max_range: f64,
    pub frame_rate: f64,
    /// Drop persons whose line of sight crosses an occupied cell.
    pub occlusion: bool,
    /// Std of the per-point position noise, m.
    pub point_noise: f64,
    pub cluster_points: usize,
    pub person_height: f64,
    pub person_radius: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            fov: 1.2,
            max_range: 8.0,
            frame_rate: 10.0,
            occlusion: true,
            point_noise: 0.02,
            cluster_points: 120,
            person_height: 1.7,
            person_radius: 0.2,
        }
    }
}

impl SensorModel {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.fov > 0.0 && self.fov <= TAU) {
            return Err(crate::Error::invalid(format!("sensor fov must lie in (0, 2pi], got {}", self.fov)));
        }
        if !(self.max_range > 0.0) {
            return Err(crate::Error::invalid("sensor max_range must be positive"));
        }
        if !(self.frame_rate > 0.0) {
            return Err(crate::Error::invalid("sensor frame_rate must be positive"));
        }
        if self.cluster_points == 0 {
            return Err(crate::Error::invalid("sensor cluster_points must be positive"));
        }
        Ok(())
    }

    /// Camera-frame position of a map point seen from `pose`, and whether it
    /// is inside the field of view and range.
    pub fn in_view(&self, pose: &MapPose, p: [f64; 2]) -> bool {
        let rel = to_camera(pose, [p[0], p[1], 0.0]);
        let range = rel[0].hypot(rel[1]);
        let bearing = rel[1].atan2(rel[0]);
        range <= self.max_range && range > 1e-9 && bearing.abs() <= self.fov / 2.0
    }
}

fn to_camera(pose: &MapPose, p: [f64; 3]) -> [f64; 3] {
    let (dx, dy) = (p[0] - pose.x, p[1] - pose.y);
    let (s, c) = pose.yaw.sin_cos();
    [c * dx + s * dy, -s * dx + c * dy, p[2]]
}

/// Ground-truth state of one person at the sensing instant.
#[derive(Debug, Clone, Copy)]
pub struct PersonView<'a> {
    pub tag: &'a str,
    pub position: [f64; 2],
    pub embedding: &'a EmbeddingGenerator,
    /// Hand gesture shown at this instant, if any.
    pub gesture: Option<GestureClass>,
}

/// One detected person: the masked point cluster plus appearance and hand data.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub person_tag: String,
    pub point_cluster: PointCloud3,
    pub feature: FeatureVector,
    pub landmarks: Option<LandmarkSet>,
}

/// Simulated camera frame.
///
/// Every stochastic draw is keyed by `(seed, frame, person index)`, so the
/// output depends only on those and on the geometry.
pub fn sense(
    persons: &[PersonView<'_>],
    world: &OccupancyGrid,
    pose: &MapPose,
    sensor: &SensorModel,
    seed: u64,
    frame: u64,
    t: f64,
) -> Vec<Observation> {
    let mut out = Vec::new();
    for (idx, person) in persons.iter().enumerate() {
        if !sensor.in_view(pose, person.position) {
            continue;
        }
        if sensor.occlusion && world.segment_hits_occupied(pose.position(), person.position) {
            continue;
        }
        let key = [frame, idx as u64];
        let mut cluster_rng = rng::stream(seed, &[STREAM_CLUSTER, key[0], key[1]]);
        let point_cluster = sample_capsule(person.position, sensor, &mut cluster_rng)
            .into_iter()
            .map(|p| to_camera(pose, p))
            .collect();
        let mut feature_rng = rng::stream(seed, &[STREAM_FEATURE, key[0], key[1]]);
        let feature = person.embedding.sample(t, &mut feature_rng);
        let landmarks = person.gesture.map(|class| {
            let lm_seed = rng::derive_seed(seed, &[STREAM_LANDMARK, key[0], key[1]]);
            gen_landmarks_with(class, lm_seed, &LandmarkJitter::default())
        });
        out.push(Observation {
            person_tag: person.tag.to_string(),
            point_cluster,
            feature,
            landmarks,
        });
    }
    out
}

/// Points on a vertical capsule standing at `base`, in map coordinates.
fn sample_capsule(base: [f64; 2], sensor: &SensorModel, rng: &mut impl Rng) -> Vec<[f64; 3]> {
    let h = sensor.person_height;
    let r = sensor.person_radius.min(h / 2.0);
    let noise = Normal::new(0.0, sensor.point_noise.max(0.0)).expect("finite std");
    (0..sensor.cluster_points)
        .map(|_| {
            let z: f64 = rng.random_range(0.0..h);
            let phi: f64 = rng.random_range(0.0..TAU);
            // Hemispherical caps shrink the radius near both ends.
            let rz = if z < r {
                (r * r - (r - z) * (r - z)).max(0.0).sqrt()
            } else if z > h - r {
                (r * r - (z - (h - r)) * (z - (h - r))).max(0.0).sqrt()
            } else {
                r
            };
            [
                base[0] + rz * phi.cos() + noise.sample(rng),
                base[1] + rz * phi.sin() + noise.sample(rng),
                z + noise.sample(rng),
            ]
        })
        .collect()
}
