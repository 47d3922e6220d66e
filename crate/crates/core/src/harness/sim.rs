//! Closed simulation loop.
//!
//! Each tick runs sense, identify, track, gesture, decide, plan and step in
//! that order. The loop is single-threaded and every random draw is keyed by
//! the scenario seed and the tick index, so a scenario always produces the
//! same trace bytes.
//!
//! The target is filtered in the map frame: the cluster centroid is mapped
//! through the current camera pose before the Kalman update, and the
//! filtered point is brought back into the current camera frame to compute
//! the goal heading.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::generators::{gen_corpus, EmbeddingGenerator, LandmarkJitter};
use super::metrics::{ConfusionMatrix, MetricsReport};
use super::reid_eval::{LABELS as REID_LABELS, NO_TARGET, TARGET};
use super::scenario::Scenario;
use crate::decision::{Command, DecisionMachine, Directive, EventFrame, RobotMode};
use crate::error::{Error, Result};
use crate::gesture::{classify, train, Debouncer, GestureModel, TrainConfig};
use crate::navsim::{
    inside_safety_circle, plan, safety_distance, sense, shortcut, DynamicObstacle, OccupancyGrid, PersonView, RobotModel,
};
use crate::reid::{calibrate, identify, CalibrationProfile, FeatureVector};
use crate::rng;
use crate::tracking::{centroid, make_goal, to_map, GoalPose, MapPose, Tracker, Transform3};
use crate::SCHEMA_VERSION;

/// Radius given to non-target persons when they are planned around, m.
pub const PERSON_OBSTACLE_RADIUS: f64 = 0.3;
/// Search radius for the clearance query, m.
const CLEARANCE_SEARCH: f64 = 5.0;

/// One tick of the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    /// Pose at the start of the tick.
    pub robot: MapPose,
    /// Mode after the decision step.
    pub mode: RobotMode,
    pub alpha: bool,
    pub beta: bool,
    pub gamma: Option<Command>,
    pub goal: Option<GoalPose>,
    /// Ground-truth target position.
    pub target: Option<[f64; 2]>,
    /// Smallest gap between the robot footprint and any wall or person.
    pub min_clearance: f64,
    pub directive: &'static str,
    /// Persons detected this tick.
    pub observed: usize,
    /// A goal was sent but no path was available this tick.
    pub no_path: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

pub const TRACE_HEADER: &str =
    "t,robot_x,robot_y,robot_yaw,mode,directive,alpha,beta,gamma,goal_x,goal_y,theta,target_x,target_y,min_clearance,observed,no_path";

fn num(out: &mut String, v: f64) {
    if v.is_finite() {
        let _ = write!(out, "{v:.6}");
    } else {
        out.push_str(if v > 0.0 { "inf" } else { "-inf" });
    }
}

impl Trace {
    /// Fixed-precision CSV; empty cells mark absent values.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 128);
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{:.3},", r.t);
            for v in [r.robot.x, r.robot.y, r.robot.yaw] {
                num(&mut out, v);
                out.push(',');
            }
            let _ = write!(
                out,
                "{},{},{},{},{},",
                r.mode.as_str(),
                r.directive,
                u8::from(r.alpha),
                u8::from(r.beta),
                r.gamma.map_or("", Command::as_str)
            );
            match r.goal {
                Some(g) => {
                    for v in [g.x, g.y, g.theta] {
                        num(&mut out, v);
                        out.push(',');
                    }
                }
                None => out.push_str(",,,"),
            }
            match r.target {
                Some(p) => {
                    num(&mut out, p[0]);
                    out.push(',');
                    num(&mut out, p[1]);
                    out.push(',');
                }
                None => out.push_str(",,"),
            }
            num(&mut out, r.min_clearance);
            let _ = writeln!(out, ",{},{}", r.observed, u8::from(r.no_path));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommandEvent {
    pub t: f64,
    pub command: Command,
}

/// Summary of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub ticks: usize,
    pub d_safe: f64,
    /// Ticks with a non-positive clearance.
    pub collisions: usize,
    /// `None` when nothing was ever within the clearance search radius.
    pub min_clearance: Option<f64>,
    /// Ticks whose robot position falls in an inflated cell of the robot's map.
    pub inflated_ticks: usize,
    pub mode_ticks: BTreeMap<String, usize>,
    pub directive_ticks: BTreeMap<String, usize>,
    pub commands: Vec<CommandEvent>,
    pub no_path_ticks: usize,
    pub discovered_obstacles: usize,
    pub distance_travelled: f64,
    pub final_pose: MapPose,
    pub final_target_distance: Option<f64>,
    /// Per-tick re-identification of the target, scored with the
    /// evaluation rules over ticks in which someone was visible.
    pub reid: Option<MetricsReport>,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub trace: Trace,
    pub report: ScenarioReport,
}

struct Person {
    generator: EmbeddingGenerator,
}

/// Simulation state; [`Simulation::step`] advances one tick.
pub struct Simulation {
    scenario: Scenario,
    world: OccupancyGrid,
    known: OccupancyGrid,
    discovered: Vec<bool>,
    persons: Vec<Person>,
    target: Option<usize>,
    profile: Option<CalibrationProfile>,
    model: Option<GestureModel>,
    tracker: Tracker,
    debouncer: Debouncer,
    machine: DecisionMachine,
    robot: RobotModel,
    tick: usize,
    trace: Trace,
    commands: Vec<CommandEvent>,
    reid_confusion: ConfusionMatrix,
    distance: f64,
}

impl Simulation {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let s = scenario.clone();
        let mut known = s.known_map()?;
        let mut world = known.clone();
        for o in &s.unknown_obstacles {
            o.stamp(&mut world);
        }
        known.set_inflation(s.robot.inflation_radius);

        let start = s.robot.start;
        if known.blocked_at(start.x, start.y) {
            return Err(Error::Scenario {
                path: "robot.start".into(),
                message: format!("start ({:.3}, {:.3}) is outside the map or inside an inflated obstacle", start.x, start.y),
            });
        }

        let persons: Vec<Person> = s
            .persons
            .iter()
            .map(|p| Person {
                generator: EmbeddingGenerator::from_seed(s.reid.dim, p.embedding.seed, s.noise_std(p), p.embedding.drift),
            })
            .collect();
        let target = s.persons.iter().position(|p| p.target);

        let (profile, model) = match target {
            Some(i) => {
                let mut r = rng::stream(s.seed, &[0xCA11]);
                let samples: Vec<FeatureVector> = (0..s.reid.calibration_samples)
                    .map(|k| persons[i].generator.sample(k as f64 * s.tick, &mut r))
                    .collect();
                let profile = calibrate(&samples, s.reid.split)?;
                let corpus = gen_corpus(
                    s.gesture.corpus_per_class,
                    rng::derive_seed(s.seed, &[0x6E5]),
                    &LandmarkJitter::default(),
                );
                let config = TrainConfig {
                    c: s.gesture.c,
                    gamma: s.gesture.gamma,
                    ..TrainConfig::default()
                };
                (Some(profile), Some(train(&corpus, &config)?))
            }
            None => (None, None),
        };

        let d_safe = safety_distance(s.robot.v_max, s.robot.t_exp)?;
        let robot = RobotModel {
            pose: start,
            v_max: s.robot.v_max,
            omega_search: s.robot.omega_search,
            omega_max: s.robot.omega_max,
            d_safe,
            radius: s.robot.radius,
            stop_margin: s.robot.stop_margin,
        };

        Ok(Self {
            discovered: vec![false; s.unknown_obstacles.len()],
            tracker: Tracker::new(s.kf_params()),
            debouncer: Debouncer::new(s.gesture.xi),
            machine: DecisionMachine::new(s.robot.omega_search, s.tick),
            trace: Trace::default(),
            commands: Vec::new(),
            reid_confusion: ConfusionMatrix::new(&REID_LABELS),
            distance: 0.0,
            tick: 0,
            world,
            known,
            persons,
            target,
            profile,
            model,
            robot,
            scenario: s,
        })
    }

    pub fn robot(&self) -> &RobotModel {
        &self.robot
    }

    pub fn mode(&self) -> RobotMode {
        self.machine.mode()
    }

    pub fn profile(&self) -> Option<&CalibrationProfile> {
        self.profile.as_ref()
    }

    /// True once every tick in `[0, duration]` has run.
    pub fn finished(&self) -> bool {
        self.tick > self.scenario.ticks()
    }

    fn discover_obstacles(&mut self) {
        let pos = self.robot.pose.position();
        for (o, seen) in self.scenario.unknown_obstacles.iter().zip(self.discovered.iter_mut()) {
            if !*seen && o.distance(pos) <= self.scenario.sensor.max_range {
                o.stamp(&mut self.known);
                *seen = true;
            }
        }
    }

    fn clearance(&self, positions: &[[f64; 2]]) -> f64 {
        let p = self.robot.pose;
        let wall = self.world.distance_to_occupied(p.x, p.y, CLEARANCE_SEARCH);
        let person = positions
            .iter()
            .map(|q| p.distance_to(*q) - self.scenario.sensor.person_radius)
            .fold(f64::INFINITY, f64::min);
        wall.min(person) - self.robot.radius
    }

    /// Runs one tick and returns its trace row.
    pub fn step(&mut self) -> &TraceRow {
        let s = &self.scenario;
        let k = self.tick;
        let t = k as f64 * s.tick;
        self.discover_obstacles();
        let s = &self.scenario;

        let positions: Vec<[f64; 2]> = s.persons.iter().map(|p| p.position(t)).collect();
        let views: Vec<PersonView<'_>> = s
            .persons
            .iter()
            .zip(&self.persons)
            .zip(&positions)
            .map(|((spec, person), &position)| PersonView {
                tag: &spec.tag,
                position,
                embedding: &person.generator,
                gesture: spec.gesture(t),
            })
            .collect();
        let pose = self.robot.pose;
        let obs = sense(&views, &self.world, &pose, &s.sensor, s.seed, k as u64, t);

        // Re-identification.
        let target_tag = self.target.map(|i| s.persons[i].tag.as_str());
        let picked = match &self.profile {
            Some(profile) if !obs.is_empty() => {
                let features: Vec<FeatureVector> = obs.iter().map(|o| o.feature.clone()).collect();
                identify(&features, profile).ok().and_then(|r| r.target_index)
            }
            _ => None,
        };
        if let (Some(tag), false) = (target_tag, obs.is_empty()) {
            let present = obs.iter().any(|o| o.person_tag == tag);
            let hit = picked.is_some_and(|i| obs[i].person_tag == tag);
            match (present, hit, picked.is_some()) {
                (true, true, _) => self.reid_confusion.add(TARGET, TARGET),
                (true, false, _) => self.reid_confusion.add(TARGET, NO_TARGET),
                (false, _, true) => self.reid_confusion.add(NO_TARGET, TARGET),
                (false, _, false) => self.reid_confusion.add(NO_TARGET, NO_TARGET),
            }
        }

        // Tracking in the map frame.
        let camera_to_map = Transform3::from_pose(&pose);
        let map_to_camera = camera_to_map.inverse();
        let measurement = picked
            .and_then(|i| centroid(&obs[i].point_cluster))
            .map(|c| to_map(c, &camera_to_map));
        self.tracker.observe(t, measurement);
        let alpha = self.tracker.valid(t);
        let filtered = self.tracker.state().map(|st| st.position());
        let filtered_cam = filtered.map(|p| map_to_camera.apply(p));
        let goal = match (alpha, filtered, filtered_cam) {
            (true, Some(p), Some(pc)) => make_goal(p, pc),
            _ => None,
        };
        let beta = goal.is_some_and(|g| inside_safety_circle(&pose, [g.x, g.y], self.robot.d_safe));
        let last_seen_bearing = filtered_cam.map(|pc| pc[1].atan2(pc[0]));

        // Gestures: only the re-identified person's hand counts.
        let landmarks = picked.and_then(|i| obs[i].landmarks.as_ref());
        let gamma = match (landmarks, &self.model) {
            (Some(lm), Some(model)) => self.debouncer.step(classify(model, lm)),
            _ => {
                self.debouncer.reset();
                None
            }
        };
        if let Some(command) = gamma {
            self.commands.push(CommandEvent { t, command });
        }

        let ev = EventFrame { alpha, beta, gamma, last_seen_bearing };
        let directive = self.machine.step(&ev, goal);

        // Planning around the other visible persons.
        let mut no_path = false;
        let path = match directive {
            Directive::SendGoal(g) => {
                let obstacles: Vec<DynamicObstacle> = obs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| Some(*i) != picked)
                    .filter_map(|(_, o)| centroid(&o.point_cluster))
                    .map(|c| {
                        let m = to_map(c, &camera_to_map);
                        (m[0], m[1], PERSON_OBSTACLE_RADIUS)
                    })
                    .collect();
                let grid = self.known.with_dynamic_obstacles(&obstacles);
                match plan(&grid, pose.position(), [g.x, g.y], &[]) {
                    Ok(Some(p)) => Some(shortcut(&grid, &p)),
                    Ok(None) | Err(_) => {
                        no_path = true;
                        log::debug!("t={t:.1}: no path from ({:.2}, {:.2}) to goal ({:.2}, {:.2})", pose.x, pose.y, g.x, g.y);
                        None
                    }
                }
            }
            _ => None,
        };

        let row = TraceRow {
            t,
            robot: pose,
            mode: self.machine.mode(),
            alpha,
            beta,
            gamma,
            goal,
            target: self.target.map(|i| positions[i]),
            min_clearance: self.clearance(&positions),
            directive: directive.name(),
            observed: obs.len(),
            no_path,
        };

        let next = crate::navsim::step_robot(&self.robot, &directive, path.as_deref(), s.tick);
        self.distance += pose.distance_to(next.pose.position());
        self.robot = next;
        self.tick += 1;
        self.trace.rows.push(row);
        self.trace.rows.last().expect("row just pushed")
    }

    pub fn finish(mut self) -> SimOutput {
        while !self.finished() {
            self.step();
        }
        let rows = &self.trace.rows;
        let mut mode_ticks: BTreeMap<String, usize> = RobotMode::ALL.iter().map(|m| (m.as_str().to_string(), 0)).collect();
        let mut directive_ticks = BTreeMap::new();
        for r in rows {
            *mode_ticks.entry(r.mode.as_str().to_string()).or_default() += 1;
            *directive_ticks.entry(r.directive.to_string()).or_insert(0usize) += 1;
        }
        let min_clearance = rows.iter().map(|r| r.min_clearance).fold(f64::INFINITY, f64::min);
        let last_target = self.target.map(|i| self.scenario.persons[i].position(rows.last().map_or(0.0, |r| r.t)));
        let report = ScenarioReport {
            schema_version: SCHEMA_VERSION,
            scenario: self.scenario.name.clone(),
            seed: self.scenario.seed,
            ticks: rows.len(),
            d_safe: self.robot.d_safe,
            collisions: rows.iter().filter(|r| r.min_clearance <= 0.0).count(),
            min_clearance: min_clearance.is_finite().then_some(min_clearance),
            inflated_ticks: rows
                .iter()
                .filter(|r| self.known.blocked_at(r.robot.x, r.robot.y))
                .count(),
            mode_ticks,
            directive_ticks,
            commands: self.commands.clone(),
            no_path_ticks: rows.iter().filter(|r| r.no_path).count(),
            discovered_obstacles: self.discovered.iter().filter(|d| **d).count(),
            distance_travelled: self.distance,
            final_pose: self.robot.pose,
            final_target_distance: last_target.map(|p| self.robot.pose.distance_to(p)),
            reid: (self.reid_confusion.total() > 0)
                .then(|| MetricsReport::from_confusion("reid", self.reid_confusion.clone())),
        };
        SimOutput { trace: self.trace, report }
    }
}

/// Runs a scenario to completion.
pub fn run_scenario(scenario: &Scenario) -> Result<SimOutput> {
    Ok(Simulation::new(scenario)?.finish())
}

impl ScenarioReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::format("scenario report", e))
    }
}
