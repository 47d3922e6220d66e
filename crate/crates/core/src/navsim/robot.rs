use serde::{Deserialize, Serialize};

use crate::decision::Directive;
use crate::tracking::{wrap_angle, MapPose};

/// Holonomic base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    pub pose: MapPose,
    /// Translational speed limit, m/s.
    pub v_max: f64,
    /// Rotation rate while searching, rad/s.
    pub omega_search: f64,
    /// Yaw rate limit while driving, rad/s.
    pub omega_max: f64,
    /// Safety circle radius, m.
    pub d_safe: f64,
    /// Footprint radius used for clearance, m.
    pub radius: f64,
    /// Extra distance beyond `d_safe` at which the base stops short of a goal, m.
    pub stop_margin: f64,
}

impl RobotModel {
    pub fn new(pose: MapPose, v_max: f64, d_safe: f64) -> Self {
        Self {
            pose,
            v_max,
            omega_search: 0.5,
            omega_max: 1.0,
            d_safe,
            radius: 0.3,
            stop_margin: 0.1,
        }
    }

    /// Distance from a goal at which the base stops advancing.
    pub fn standoff(&self) -> f64 {
        self.d_safe + self.stop_margin
    }
}

/// Point at arc length `s` along the polyline, clamped to its end.
fn advance_along(path: &[[f64; 2]], s: f64) -> [f64; 2] {
    let mut left = s;
    for w in path.windows(2) {
        let seg = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
        if seg >= left && seg > 0.0 {
            let f = left / seg;
            return [w[0][0] + f * (w[1][0] - w[0][0]), w[0][1] + f * (w[1][1] - w[0][1])];
        }
        left -= seg;
    }
    *path.last().expect("non-empty path")
}

/// Largest arc length along `path` whose point stays at least `standoff`
/// away from `goal`, searched up to `budget`.
fn allowed_travel(path: &[[f64; 2]], goal: [f64; 2], standoff: f64, budget: f64) -> f64 {
    let dist = |p: [f64; 2]| (p[0] - goal[0]).hypot(p[1] - goal[1]);
    if dist(path[0]) <= standoff {
        return 0.0;
    }
    let mut travelled = 0.0;
    for w in path.windows(2) {
        let seg = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
        if seg <= 0.0 {
            continue;
        }
        if dist(w[1]) <= standoff {
            // Bisection for the boundary crossing on this segment.
            let (mut lo, mut hi) = (0.0, seg);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let p = [w[0][0] + mid / seg * (w[1][0] - w[0][0]), w[0][1] + mid / seg * (w[1][1] - w[0][1])];
                if dist(p) > standoff {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return (travelled + lo).min(budget);
        }
        travelled += seg;
        if travelled >= budget {
            return budget;
        }
    }
    travelled.min(budget)
}

fn turn_toward(yaw: f64, target: f64, max_step: f64) -> f64 {
    let diff = wrap_angle(target - yaw);
    wrap_angle(yaw + diff.clamp(-max_step, max_step))
}

/// Advances the base by one tick under a directive.
///
/// `SendGoal` moves along `path` at most `v_max * dt`, never ending closer to
/// the goal than [`RobotModel::standoff`], and turns toward the goal at up to
/// `omega_max`. `RotateToward` spins in place at `omega_search` in the
/// direction of the bearing. Hold and idle leave the pose untouched.
pub fn step_robot(robot: &RobotModel, directive: &Directive, path: Option<&[[f64; 2]]>, dt: f64) -> RobotModel {
    if !(dt > 0.0) {
        return *robot;
    }
    let mut next = *robot;
    match directive {
        Directive::SendGoal(goal) => {
            let target = [goal.x, goal.y];
            if let Some(path) = path.filter(|p| !p.is_empty()) {
                let s = allowed_travel(path, target, robot.standoff(), robot.v_max * dt);
                if s > 0.0 {
                    let p = advance_along(path, s);
                    next.pose.x = p[0];
                    next.pose.y = p[1];
                }
            }
            let (dx, dy) = (goal.x - next.pose.x, goal.y - next.pose.y);
            if dx.hypot(dy) > 1e-6 {
                next.pose.yaw = turn_toward(robot.pose.yaw, dy.atan2(dx), robot.omega_max * dt);
            }
        }
        Directive::RotateToward(bearing) => {
            let sign = if wrap_angle(*bearing) < 0.0 { -1.0 } else { 1.0 };
            next.pose.yaw = wrap_angle(robot.pose.yaw + sign * robot.omega_search * dt);
        }
        Directive::CancelGoalAndHold | Directive::Idle => {}
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracking::GoalPose;

    fn robot() -> RobotModel {
        RobotModel {
            omega_search: 1.0,
            ..RobotModel::new(MapPose::new(0.0, 0.0, 0.0), 0.3, 1.26)
        }
    }

    #[test]
    fn idle_and_hold_do_not_move() {
        let r = robot();
        assert_eq!(step_robot(&r, &Directive::Idle, None, 5.0), r);
        assert_eq!(step_robot(&r, &Directive::CancelGoalAndHold, None, 0.3), r);
    }

    #[test]
    fn drives_v_max_dt_along_path() {
        let r = robot();
        let goal = GoalPose { x: 10.0, y: 0.0, theta: 0.0 };
        let path = [[0.0, 0.0], [5.0, 0.0], [10.0, 0.0]];
        let n = step_robot(&r, &Directive::SendGoal(goal), Some(&path), 1.0);
        assert!((n.pose.x - 0.3).abs() < 1e-12 && n.pose.y == 0.0);
    }

    #[test]
    fn rotate_in_place() {
        let r = robot();
        let n = step_robot(&r, &Directive::RotateToward(std::f64::consts::PI), None, 0.5);
        assert!((n.pose.yaw - 0.5).abs() < 1e-12);
        assert_eq!((n.pose.x, n.pose.y), (0.0, 0.0));
        let n = step_robot(&r, &Directive::RotateToward(-0.2), None, 0.5);
        assert!((n.pose.yaw + 0.5).abs() < 1e-12);
    }

    #[test]
    fn stops_at_standoff() {
        let r = robot();
        let goal = GoalPose { x: 1.5, y: 0.0, theta: 0.0 };
        let path = [[0.0, 0.0], [1.5, 0.0]];
        let n = step_robot(&r, &Directive::SendGoal(goal), Some(&path), 1.0);
        assert!((n.pose.x - (1.5 - r.standoff())).abs() < 1e-9);
        let again = step_robot(&n, &Directive::SendGoal(goal), Some(&[[n.pose.x, 0.0], [1.5, 0.0]]), 1.0);
        assert_eq!(again.pose.x, n.pose.x);
    }

    #[test]
    fn turns_toward_goal_at_bounded_rate() {
        let r = robot();
        let goal = GoalPose { x: 0.0, y: 5.0, theta: 0.0 };
        let n = step_robot(&r, &Directive::SendGoal(goal), None, 0.1);
        assert!((n.pose.yaw - 0.1).abs() < 1e-12);
    }
}
