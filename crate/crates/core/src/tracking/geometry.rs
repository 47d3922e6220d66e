use std::f64::consts::PI;

use nalgebra::{Isometry3, Matrix4, Point3, Rotation3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points in the camera frame, meters.
pub type PointCloud3 = Vec<[f64; 3]>;
/// A 3D point in the map frame, meters.
pub type MapPoint3 = [f64; 3];

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Planar robot pose in the map frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapPose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl MapPose {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self { x, y, yaw: wrap_angle(yaw) }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        (p[0] - self.x).hypot(p[1] - self.y)
    }
}

/// Navigation goal: map-plane position plus the camera-to-target heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalPose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// Rigid camera-to-map transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform3(Isometry3<f64>);

impl Transform3 {
    pub fn identity() -> Self {
        Self(Isometry3::identity())
    }

    pub fn from_translation_yaw(t: [f64; 3], yaw: f64) -> Self {
        Self(Isometry3::from_parts(
            Translation3::new(t[0], t[1], t[2]),
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw),
        ))
    }

    /// Camera pose of a robot whose camera frame coincides with its base frame.
    pub fn from_pose(pose: &MapPose) -> Self {
        Self::from_translation_yaw([pose.x, pose.y, 0.0], pose.yaw)
    }

    /// Validates a homogeneous 4x4 matrix: orthonormal rotation with det +1 and
    /// last row `(0, 0, 0, 1)`, all within 1e-9.
    pub fn from_matrix(m: &Matrix4<f64>) -> Result<Self> {
        const TOL: f64 = 1e-9;
        let last = m.row(3);
        if (last[0].abs() > TOL) || last[1].abs() > TOL || last[2].abs() > TOL || (last[3] - 1.0).abs() > TOL {
            return Err(Error::invalid("transform last row must be (0, 0, 0, 1)"));
        }
        let r = m.fixed_view::<3, 3>(0, 0).into_owned();
        if (r.transpose() * r - nalgebra::Matrix3::identity()).abs().max() > TOL {
            return Err(Error::invalid("transform rotation is not orthonormal"));
        }
        if (r.determinant() - 1.0).abs() > TOL {
            return Err(Error::invalid("transform rotation determinant must be +1"));
        }
        let rot = Rotation3::from_matrix_unchecked(r);
        let t = m.fixed_view::<3, 1>(0, 3);
        Ok(Self(Isometry3::from_parts(
            Translation3::new(t[0], t[1], t[2]),
            UnitQuaternion::from_rotation_matrix(&rot),
        )))
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        self.0.to_homogeneous()
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.inverse())
    }

    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let q = self.0 * Point3::new(p[0], p[1], p[2]);
        [q.x, q.y, q.z]
    }
}

/// Arithmetic mean of a cluster; `None` for an empty cluster.
pub fn centroid(cloud: &[[f64; 3]]) -> Option<[f64; 3]> {
    if cloud.is_empty() {
        return None;
    }
    let n = cloud.len() as f64;
    let sum = cloud.iter().fold([0.0; 3], |acc, p| [acc[0] + p[0], acc[1] + p[1], acc[2] + p[2]]);
    Some([sum[0] / n, sum[1] / n, sum[2] / n])
}

/// Map-frame position of a camera-frame point.
pub fn to_map(p_cam: [f64; 3], camera_to_map: &Transform3) -> MapPoint3 {
    camera_to_map.apply(p_cam)
}

/// Projects the map point on the ground plane and attaches the heading of the
/// target as seen from the camera. `None` when the target sits on the camera
/// axis origin and the heading is undefined.
pub fn make_goal(p_map: MapPoint3, p_cam: [f64; 3]) -> Option<GoalPose> {
    if p_map.iter().chain(&p_cam).any(|v| !v.is_finite()) {
        return None;
    }
    if p_cam[0].hypot(p_cam[1]) < 1e-9 {
        return None;
    }
    Some(GoalPose {
        x: p_map[0],
        y: p_map[1],
        theta: wrap_angle(p_cam[1].atan2(p_cam[0])),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn centroid_cases() {
        assert_eq!(centroid(&[[0.0, 0.0, 0.0]]), Some([0.0, 0.0, 0.0]));
        let c = centroid(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        for v in c {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(centroid(&[]), None);
    }

    #[test]
    fn transform_cases() {
        assert_eq!(to_map([0.3, -0.2, 1.0], &Transform3::identity()), [0.3, -0.2, 1.0]);
        let t = Transform3::from_translation_yaw([1.0, 2.0, 0.0], 0.0);
        assert_eq!(to_map([0.0, 0.0, 0.0], &t), [1.0, 2.0, 0.0]);
        let r = Transform3::from_translation_yaw([0.0, 0.0, 0.0], FRAC_PI_2);
        let p = to_map([1.0, 0.0, 0.0], &r);
        assert!(p[0].abs() < 1e-12 && (p[1] - 1.0).abs() < 1e-12 && p[2].abs() < 1e-12);
    }

    #[test]
    fn matrix_validation() {
        let t = Transform3::from_translation_yaw([1.0, -2.0, 0.5], 0.7);
        let back = Transform3::from_matrix(&t.to_matrix()).unwrap();
        let p = [0.2, 0.4, -0.1];
        let (a, b) = (t.apply(p), back.apply(p));
        assert!((0..3).all(|i| (a[i] - b[i]).abs() < 1e-12));

        let mut m = t.to_matrix();
        m[(0, 0)] *= 1.01;
        assert!(Transform3::from_matrix(&m).is_err());
        let mut m = t.to_matrix();
        m[(3, 0)] = 0.1;
        assert!(Transform3::from_matrix(&m).is_err());
        let mut reflect = Matrix4::identity();
        reflect[(2, 2)] = -1.0;
        assert!(Transform3::from_matrix(&reflect).is_err());
    }

    #[test]
    fn goal_cases() {
        assert_eq!(make_goal([1.0, 2.0, 0.0], [2.0, 0.0, 0.8]).unwrap().theta, 0.0);
        let left = make_goal([0.0, 0.0, 0.0], [0.0, 1.5, 0.8]).unwrap();
        assert!((left.theta - FRAC_PI_2).abs() < 1e-15);
        let g = make_goal([3.0, -1.2, 0.4], [1.0, 0.0, 0.0]).unwrap();
        assert_eq!((g.x, g.y), (3.0, -1.2));
        assert!(make_goal([1.0, 1.0, 0.0], [0.0, 0.0, 0.9]).is_none());
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + FRAC_PI_2).abs() < 1e-12);
        assert!((wrap_angle(0.25)) == 0.25);
    }
}
