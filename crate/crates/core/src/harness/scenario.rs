//! Scenario files: world map, scripted persons, robot and sensor settings.
//!
//! Scenarios are JSON objects; unknown fields are rejected and every parse or
//! validation error names the offending field path. See `docs/scenario.md`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::generators::noise_for_separation;
use crate::error::{Error, Result};
use crate::gesture::{GestureClass, DEFAULT_REQUIRED_COUNT};
use crate::navsim::{mapfile, OccupancyGrid, SensorModel};
use crate::reid;
use crate::tracking::{KfParams, MapPose};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum Obstacle {
    Rect { min: [f64; 2], max: [f64; 2] },
    Circle { center: [f64; 2], radius: f64 },
}

impl Obstacle {
    pub fn stamp(&self, grid: &mut OccupancyGrid) {
        match *self {
            Obstacle::Rect { min, max } => grid.fill_rect(min[0], min[1], max[0], max[1]),
            Obstacle::Circle { center, radius } => grid.fill_circle(center[0], center[1], radius),
        }
    }

    /// Distance from a point to the obstacle boundary (0 inside).
    pub fn distance(&self, p: [f64; 2]) -> f64 {
        match *self {
            Obstacle::Rect { min, max } => {
                let dx = (min[0] - p[0]).max(0.0).max(p[0] - max[0]);
                let dy = (min[1] - p[1]).max(0.0).max(p[1] - max[1]);
                dx.hypot(dy)
            }
            Obstacle::Circle { center, radius } => ((p[0] - center[0]).hypot(p[1] - center[1]) - radius).max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MapSpec {
    Inline {
        width: usize,
        height: usize,
        resolution: f64,
        origin: [f64; 2],
        #[serde(default)]
        obstacles: Vec<Obstacle>,
    },
    /// Sidecar of a PGM map, relative to the scenario file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSpec {
    pub seed: u64,
    /// Per-component noise std; defaults to separation ratio 8 at the
    /// scenario dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_std: Option<f64>,
    #[serde(default)]
    pub drift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GestureSpan {
    pub t_start: f64,
    pub t_end: f64,
    pub class: GestureClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersonSpec {
    pub tag: String,
    #[serde(default)]
    pub target: bool,
    pub waypoints: Vec<Waypoint>,
    pub embedding: EmbeddingSpec,
    #[serde(default)]
    pub gestures: Vec<GestureSpan>,
}

impl PersonSpec {
    /// Piecewise-linear position; clamped to the first / last waypoint.
    pub fn position(&self, t: f64) -> [f64; 2] {
        let w = &self.waypoints;
        let first = w[0];
        if t <= first.t {
            return [first.x, first.y];
        }
        for pair in w.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if t <= b.t {
                let f = (t - a.t) / (b.t - a.t);
                return [a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)];
            }
        }
        let last = w[w.len() - 1];
        [last.x, last.y]
    }

    /// Gesture shown at `t` (spans are half-open `[t_start, t_end)`).
    pub fn gesture(&self, t: f64) -> Option<GestureClass> {
        self.gestures
            .iter()
            .find(|g| g.t_start <= t && t < g.t_end)
            .map(|g| g.class)
    }

    /// Ground-truth path as a polyline.
    pub fn polyline(&self) -> Vec<[f64; 2]> {
        self.waypoints.iter().map(|w| [w.x, w.y]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobotSpec {
    pub start: MapPose,
    pub v_max: f64,
    pub omega_search: f64,
    pub omega_max: f64,
    pub t_exp: f64,
    /// Footprint radius used for clearance, m.
    pub radius: f64,
    /// Obstacle inflation for planning, m.
    pub inflation_radius: f64,
    pub stop_margin: f64,
}

impl Default for RobotSpec {
    fn default() -> Self {
        Self {
            start: MapPose::new(0.0, 0.0, 0.0),
            v_max: 0.3,
            omega_search: 0.5,
            omega_max: 1.0,
            t_exp: 3.0,
            radius: 0.3,
            inflation_radius: 0.45,
            stop_margin: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReidSpec {
    pub dim: usize,
    pub calibration_samples: usize,
    pub split: f64,
}

impl Default for ReidSpec {
    fn default() -> Self {
        Self {
            dim: reid::DEFAULT_DIM,
            calibration_samples: 300,
            split: reid::DEFAULT_SPLIT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GestureSpec {
    pub xi: usize,
    /// Synthetic training samples per class for the on-board classifier.
    pub corpus_per_class: usize,
    pub c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl Default for GestureSpec {
    fn default() -> Self {
        Self {
            xi: DEFAULT_REQUIRED_COUNT,
            corpus_per_class: 100,
            c: 1.0,
            gamma: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackingSpec {
    pub q: f64,
    pub r: f64,
    pub init_velocity_std: f64,
}

impl Default for TrackingSpec {
    fn default() -> Self {
        let p = KfParams::default();
        Self {
            q: p.q,
            r: p.r,
            init_velocity_std: p.init_velocity_std,
        }
    }
}

fn schema_version_default() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "schema_version_default")]
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub seed: u64,
    /// Simulated time, s.
    pub duration: f64,
    /// Loop period, s.
    pub tick: f64,
    pub map: MapSpec,
    /// Obstacles present in the world but absent from the robot's map until
    /// they come within sensor range.
    #[serde(default)]
    pub unknown_obstacles: Vec<Obstacle>,
    #[serde(default)]
    pub persons: Vec<PersonSpec>,
    #[serde(default)]
    pub robot: RobotSpec,
    #[serde(default)]
    pub sensor: SensorModel,
    #[serde(default)]
    pub reid: ReidSpec,
    #[serde(default)]
    pub gesture: GestureSpec,
    #[serde(default)]
    pub tracking: TrackingSpec,
    /// Directory that relative map paths resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn field_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Scenario {
        path: path.into(),
        message: message.into(),
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field_err(path, format!("must be positive and finite, got {v}")))
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let s: Scenario = serde_path_to_error::deserialize(de).map_err(|e| field_err(e.path().to_string(), e.inner().to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut s = Self::from_json(&text)?;
        s.base_dir = path.parent().map(Path::to_path_buf);
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::format("scenario", e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(field_err(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        positive("tick", self.tick)?;
        positive("duration", self.duration)?;
        if let MapSpec::Inline { width, height, resolution, .. } = &self.map {
            positive("map.resolution", *resolution)?;
            if *width == 0 || *height == 0 {
                return Err(field_err("map", "width and height must be positive"));
            }
        }
        let r = &self.robot;
        positive("robot.v_max", r.v_max)?;
        positive("robot.omega_search", r.omega_search)?;
        positive("robot.omega_max", r.omega_max)?;
        positive("robot.t_exp", r.t_exp)?;
        positive("robot.radius", r.radius)?;
        if !(r.inflation_radius >= 0.0) {
            return Err(field_err("robot.inflation_radius", "must be non-negative"));
        }
        if !(r.stop_margin >= 0.0) {
            return Err(field_err("robot.stop_margin", "must be non-negative"));
        }
        self.sensor
            .validate()
            .map_err(|e| field_err("sensor", e.to_string()))?;
        if self.reid.dim == 0 {
            return Err(field_err("reid.dim", "must be positive"));
        }
        if !(self.reid.split > 0.0 && self.reid.split < 1.0) {
            return Err(field_err("reid.split", "must lie in (0, 1)"));
        }
        if self.gesture.xi == 0 {
            return Err(field_err("gesture.xi", "must be at least 1"));
        }
        positive("tracking.q", self.tracking.q)?;
        positive("tracking.r", self.tracking.r)?;

        let targets = self.persons.iter().filter(|p| p.target).count();
        if !self.persons.is_empty() && targets != 1 {
            return Err(field_err("persons", format!("exactly one person must be the target, found {targets}")));
        }
        for (i, p) in self.persons.iter().enumerate() {
            let at = |f: &str| format!("persons[{i}].{f}");
            if p.waypoints.is_empty() {
                return Err(field_err(at("waypoints"), "at least one waypoint is required"));
            }
            for (k, w) in p.waypoints.iter().enumerate() {
                if ![w.t, w.x, w.y].iter().all(|v| v.is_finite()) {
                    return Err(field_err(at(&format!("waypoints[{k}]")), "values must be finite"));
                }
                if k > 0 && w.t <= p.waypoints[k - 1].t {
                    return Err(field_err(at(&format!("waypoints[{k}].t")), "timestamps must be strictly increasing"));
                }
            }
            if let Some(n) = p.embedding.noise_std {
                if !(n >= 0.0) || !n.is_finite() {
                    return Err(field_err(at("embedding.noise_std"), "must be non-negative"));
                }
            }
            for (k, g) in p.gestures.iter().enumerate() {
                if !(g.t_end > g.t_start) {
                    return Err(field_err(at(&format!("gestures[{k}]")), "t_end must exceed t_start"));
                }
            }
        }
        if self.persons.iter().enumerate().any(|(i, p)| self.persons[..i].iter().any(|q| q.tag == p.tag)) {
            return Err(field_err("persons", "person tags must be unique"));
        }
        Ok(())
    }

    pub fn target(&self) -> Option<&PersonSpec> {
        self.persons.iter().find(|p| p.target)
    }

    pub fn noise_std(&self, person: &PersonSpec) -> f64 {
        person
            .embedding
            .noise_std
            .unwrap_or_else(|| noise_for_separation(self.reid.dim, 8.0))
    }

    /// Known map (without unknown obstacles), not yet inflated.
    pub fn known_map(&self) -> Result<OccupancyGrid> {
        match &self.map {
            MapSpec::Inline { width, height, resolution, origin, obstacles } => {
                let mut g = OccupancyGrid::new(*width, *height, *resolution, *origin)?;
                for o in obstacles {
                    o.stamp(&mut g);
                }
                Ok(g)
            }
            MapSpec::File { path } => {
                let full = match &self.base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                mapfile::load_map(&full)
            }
        }
    }

    pub fn kf_params(&self) -> KfParams {
        KfParams {
            q: self.tracking.q,
            r: self.tracking.r,
            t_exp: self.robot.t_exp,
            init_velocity_std: self.tracking.init_velocity_std,
        }
    }

    pub fn ticks(&self) -> usize {
        (self.duration / self.tick + 1e-9).floor() as usize
    }
}

/// The scenarios used by the acceptance suite.
pub mod presets {
    use super::*;

    pub const NAMES: [&str; 3] = ["straight-line", "l-path", "gesture-stop"];

    pub fn by_name(name: &str, seed: u64) -> Option<Scenario> {
        match name {
            "straight-line" => Some(straight_line(seed)),
            "l-path" => Some(l_path(seed)),
            "gesture-stop" => Some(gesture_stop(seed)),
            _ => None,
        }
    }

    fn room(width_m: f64, height_m: f64, mut obstacles: Vec<Obstacle>) -> MapSpec {
        let res = 0.1;
        // Boundary walls, 0.2 m thick.
        obstacles.extend([
            Obstacle::Rect { min: [0.0, 0.0], max: [width_m, 0.2] },
            Obstacle::Rect { min: [0.0, height_m - 0.2], max: [width_m, height_m] },
            Obstacle::Rect { min: [0.0, 0.0], max: [0.2, height_m] },
            Obstacle::Rect { min: [width_m - 0.2, 0.0], max: [width_m, height_m] },
        ]);
        MapSpec::Inline {
            width: (width_m / res).round() as usize,
            height: (height_m / res).round() as usize,
            resolution: res,
            origin: [0.0, 0.0],
            obstacles,
        }
    }

    fn wp(t: f64, x: f64, y: f64) -> Waypoint {
        Waypoint { t, x, y }
    }

    fn span(t_start: f64, t_end: f64, class: GestureClass) -> GestureSpan {
        GestureSpan { t_start, t_end, class }
    }

    fn person(tag: &str, target: bool, seed: u64, waypoints: Vec<Waypoint>, gestures: Vec<GestureSpan>) -> PersonSpec {
        PersonSpec {
            tag: tag.into(),
            target,
            waypoints,
            embedding: EmbeddingSpec { seed, noise_std: None, drift: 0.0 },
            gestures,
        }
    }

    fn base(name: &str, seed: u64, duration: f64, map: MapSpec, start: MapPose) -> Scenario {
        Scenario {
            schema_version: SCHEMA_VERSION,
            name: name.into(),
            seed,
            duration,
            tick: 0.1,
            map,
            unknown_obstacles: Vec::new(),
            persons: Vec::new(),
            robot: RobotSpec { start, ..RobotSpec::default() },
            sensor: SensorModel::default(),
            reid: ReidSpec::default(),
            gesture: GestureSpec::default(),
            tracking: TrackingSpec::default(),
            base_dir: None,
        }
    }

    /// Target walks 10 m along a line after a Follow gesture at t = 1 s.
    pub fn straight_line(seed: u64) -> Scenario {
        let mut s = base("straight-line", seed, 60.0, room(16.0, 6.0, vec![]), MapPose::new(1.0, 3.0, 0.0));
        s.persons.push(person(
            "target",
            true,
            1,
            vec![wp(0.0, 3.0, 3.0), wp(4.0, 3.0, 3.0), wp(44.0, 13.0, 3.0)],
            vec![span(1.0, 3.0, GestureClass::Follow)],
        ));
        s
    }

    /// L-shaped walk with two distractors and two obstacles missing from the
    /// robot's map; the target raises an open hand at the end.
    pub fn l_path(seed: u64) -> Scenario {
        let inner_block = Obstacle::Rect { min: [4.0, 6.0], max: [13.5, 15.0] };
        let mut s = base("l-path", seed, 120.0, room(20.0, 18.0, vec![inner_block]), MapPose::new(1.2, 3.0, 0.0));
        s.unknown_obstacles = vec![
            Obstacle::Circle { center: [9.0, 2.2], radius: 0.3 },
            Obstacle::Circle { center: [16.9, 9.0], radius: 0.3 },
        ];
        s.persons.push(person(
            "target",
            true,
            1,
            vec![wp(0.0, 3.2, 3.0), wp(4.0, 3.2, 3.0), wp(56.0, 16.2, 3.0), wp(100.0, 16.2, 14.0)],
            vec![
                span(1.0, 3.0, GestureClass::Follow),
                span(40.0, 41.0, GestureClass::Other),
                span(108.0, 110.0, GestureClass::Wait),
            ],
        ));
        s.persons.push(person(
            "distractor-a",
            false,
            2,
            vec![wp(0.0, 8.0, 5.2), wp(30.0, 14.0, 5.2), wp(60.0, 8.0, 5.2), wp(90.0, 14.0, 5.2), wp(120.0, 8.0, 5.2)],
            vec![span(20.0, 24.0, GestureClass::Wait)],
        ));
        s.persons.push(person(
            "distractor-b",
            false,
            3,
            vec![wp(0.0, 19.0, 16.5), wp(40.0, 19.0, 11.0), wp(80.0, 19.0, 16.5), wp(120.0, 19.0, 11.0)],
            vec![span(70.0, 74.0, GestureClass::Wait)],
        ));
        s
    }

    /// Target plus `distractors` persons walking in formation ahead of it,
    /// all inside the camera view for the whole run. Used for throughput
    /// measurements.
    pub fn crowd(seed: u64, distractors: usize) -> Scenario {
        let mut s = base("crowd", seed, 120.0, room(24.0, 10.0, vec![]), MapPose::new(1.0, 5.0, 0.0));
        let route = [(0.0, 3.5), (4.0, 3.5), (100.0, 20.0)];
        s.persons.push(person(
            "target",
            true,
            1,
            route.iter().map(|&(t, x)| wp(t, x, 5.0)).collect(),
            vec![span(1.0, 3.0, GestureClass::Follow)],
        ));
        for i in 0..distractors {
            let side = if i % 2 == 0 { 1.0 } else { -1.0 };
            let dx = 1.0 + 0.5 * (i / 2) as f64;
            let dy = side * (0.9 + 0.1 * (i / 2) as f64);
            s.persons.push(person(
                &format!("bystander-{i}"),
                false,
                10 + i as u64,
                route.iter().map(|&(t, x)| wp(t, x + dx, 5.0 + dy)).collect(),
                vec![],
            ));
        }
        s
    }

    /// Target walks away, then shows an open hand while still walking.
    pub fn gesture_stop(seed: u64) -> Scenario {
        let mut s = base("gesture-stop", seed, 40.0, room(16.0, 6.0, vec![]), MapPose::new(1.0, 3.0, 0.0));
        s.persons.push(person(
            "target",
            true,
            1,
            vec![wp(0.0, 3.0, 3.0), wp(4.0, 3.0, 3.0), wp(34.0, 10.5, 3.0)],
            vec![span(1.0, 3.0, GestureClass::Follow), span(20.0, 22.0, GestureClass::Wait)],
        ));
        s
    }
}
