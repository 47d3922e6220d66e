//! 2D world used in place of the real robot: occupancy grid, A* planner,
//! safety circle, holonomic base executor and a simulated camera.

mod grid;
pub mod mapfile;
mod planner;
mod robot;
mod sensor;

pub use grid::OccupancyGrid;
pub use planner::{path_length, plan, segment_free, shortcut, DynamicObstacle, Path};
pub use robot::{step_robot, RobotModel};
pub use sensor::{sense, Observation, PersonView, SensorModel};

use crate::error::{Error, Result};
use crate::tracking::MapPose;

/// Radius of the stopping circle: the distance covered at `v_max` during one
/// expiration interval, plus 40%.
pub fn safety_distance(v_max: f64, t_exp: f64) -> Result<f64> {
    if !(v_max > 0.0 && t_exp > 0.0) || !v_max.is_finite() || !t_exp.is_finite() {
        return Err(Error::invalid(format!(
            "safety distance needs positive v_max and t_exp, got {v_max} and {t_exp}"
        )));
    }
    Ok(1.4 * v_max * t_exp)
}

/// Strictly inside the circle; a target exactly on the boundary is safe.
pub fn inside_safety_circle(robot: &MapPose, target: [f64; 2], d_safe: f64) -> bool {
    robot.distance_to(target) < d_safe
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn safety_distance_values() {
        assert_eq!(safety_distance(0.3, 3.0).unwrap(), 1.26);
        assert_eq!(safety_distance(1.0, 1.0).unwrap(), 1.4);
        assert!((safety_distance(0.5, 2.0).unwrap() - 1.4).abs() < 1e-15);
        assert!(safety_distance(0.0, 3.0).is_err());
        assert!(safety_distance(0.3, -1.0).is_err());
    }

    #[test]
    fn safety_circle_boundary() {
        let robot = MapPose::new(0.0, 0.0, 0.0);
        assert!(inside_safety_circle(&robot, [0.0, 0.0], 1.26));
        assert!(!inside_safety_circle(&robot, [1.26, 0.0], 1.26));
        assert!(inside_safety_circle(&robot, [1.0, 0.5], 1.26));
    }
}
