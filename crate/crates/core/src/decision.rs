//! Steady / Follow / Search / Wait state machine.
//!
//! Each step consumes an [`EventFrame`]:
//!
//! - `alpha`: the target is re-identified and its track is valid,
//! - `beta`: the last target position lies inside the safety circle,
//! - `gamma`: a debounced gesture command, if one fired this step,
//!
//! and produces exactly one [`Directive`].
//!
//! | mode   | event (first match wins)        | next   | directive            |
//! |--------|---------------------------------|--------|----------------------|
//! | any    | gamma = Wait, mode != Steady    | Wait   | CancelGoalAndHold    |
//! | Steady | gamma = Follow, alpha           | Follow | SendGoal (or hold if beta) |
//! | Steady | gamma = Follow, !alpha          | Search | RotateToward         |
//! | Steady | otherwise                       | Steady | Idle                 |
//! | Follow | !alpha                          | Search | RotateToward         |
//! | Follow | beta                            | Follow | CancelGoalAndHold    |
//! | Follow | otherwise                       | Follow | SendGoal             |
//! | Search | alpha                           | Follow | SendGoal (or hold if beta) |
//! | Search | turn budget spent               | Steady | Idle                 |
//! | Search | otherwise                       | Search | RotateToward         |
//! | Wait   | gamma = Follow, alpha           | Follow | SendGoal (or hold if beta) |
//! | Wait   | gamma = Follow, !alpha          | Search | RotateToward         |
//! | Wait   | otherwise                       | Wait   | Idle                 |
//!
//! In Steady a Wait command changes nothing: the robot is already stopped and
//! waiting for Follow.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::tracking::GoalPose;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum RobotMode {
    #[default]
    Steady,
    Follow,
    Search,
    Wait,
}

impl RobotMode {
    pub const ALL: [RobotMode; 4] = [RobotMode::Steady, RobotMode::Follow, RobotMode::Search, RobotMode::Wait];

    pub fn as_str(self) -> &'static str {
        match self {
            RobotMode::Steady => "steady",
            RobotMode::Follow => "follow",
            RobotMode::Search => "search",
            RobotMode::Wait => "wait",
        }
    }
}

impl fmt::Display for RobotMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Debounced gesture command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Command {
    Wait,
    Follow,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Wait => "wait",
            Command::Follow => "follow",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EventFrame {
    pub alpha: bool,
    pub beta: bool,
    pub gamma: Option<Command>,
    /// Camera-frame heading of the last target position, radians.
    pub last_seen_bearing: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Directive {
    SendGoal(GoalPose),
    CancelGoalAndHold,
    /// Rotate in place, turning in the direction of the given robot-relative
    /// bearing (counter-clockwise for a zero bearing).
    RotateToward(f64),
    Idle,
}

impl Directive {
    pub fn name(&self) -> &'static str {
        match self {
            Directive::SendGoal(_) => "send_goal",
            Directive::CancelGoalAndHold => "cancel_and_hold",
            Directive::RotateToward(_) => "rotate_toward",
            Directive::Idle => "idle",
        }
    }
}

/// Rotation accumulated during the current search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchProgress {
    pub accumulated: f64,
    pub limit: f64,
    /// Rotation performed by one search step (`omega * dt`).
    pub increment: f64,
}

impl SearchProgress {
    pub fn new(omega: f64, dt: f64) -> Self {
        Self {
            accumulated: 0.0,
            limit: TAU,
            increment: (omega * dt).abs(),
        }
    }

    pub fn exhausted(&self) -> bool {
        self.accumulated >= self.limit
    }

    fn reset(self) -> Self {
        Self { accumulated: 0.0, ..self }
    }

    fn advance(self) -> Self {
        Self {
            accumulated: self.accumulated + self.increment,
            ..self
        }
    }
}

fn engage(ev: &EventFrame, goal: Option<GoalPose>) -> Directive {
    match goal {
        _ if ev.beta => Directive::CancelGoalAndHold,
        Some(g) => Directive::SendGoal(g),
        None => Directive::Idle,
    }
}

fn rotate(ev: &EventFrame) -> Directive {
    Directive::RotateToward(ev.last_seen_bearing.unwrap_or(0.0))
}

/// One transition. Total over every `(mode, event)` pair.
pub fn step(
    mode: RobotMode,
    ev: &EventFrame,
    sp: SearchProgress,
    goal: Option<GoalPose>,
) -> (RobotMode, Directive, SearchProgress) {
    use RobotMode::*;

    let (next, directive) = match (mode, ev.gamma) {
        (Follow | Search | Wait, Some(Command::Wait)) => (Wait, Directive::CancelGoalAndHold),
        (Steady | Wait, Some(Command::Follow)) if ev.alpha => (Follow, engage(ev, goal)),
        (Steady | Wait, Some(Command::Follow)) => (Search, rotate(ev)),
        (Steady, _) => (Steady, Directive::Idle),
        (Wait, _) => (Wait, Directive::Idle),
        (Follow, _) if !ev.alpha => (Search, rotate(ev)),
        (Follow, _) => (Follow, engage(ev, goal)),
        (Search, _) if ev.alpha => (Follow, engage(ev, goal)),
        (Search, _) if sp.exhausted() => (Steady, Directive::Idle),
        (Search, _) => (Search, rotate(ev)),
    };

    let sp = match (mode, next) {
        (_, Search) if matches!(directive, Directive::RotateToward(_)) => {
            if mode == Search { sp.advance() } else { sp.reset().advance() }
        }
        (_, Search) => sp,
        _ => sp.reset(),
    };
    (next, directive, sp)
}

/// Owns the current mode and search progress.
#[derive(Debug, Clone)]
pub struct DecisionMachine {
    mode: RobotMode,
    progress: SearchProgress,
}

impl DecisionMachine {
    pub fn new(omega_search: f64, dt: f64) -> Self {
        Self {
            mode: RobotMode::Steady,
            progress: SearchProgress::new(omega_search, dt),
        }
    }

    pub fn mode(&self) -> RobotMode {
        self.mode
    }

    pub fn progress(&self) -> SearchProgress {
        self.progress
    }

    pub fn step(&mut self, ev: &EventFrame, goal: Option<GoalPose>) -> Directive {
        let (mode, directive, progress) = step(self.mode, ev, self.progress, goal);
        self.mode = mode;
        self.progress = progress;
        directive
    }
}
