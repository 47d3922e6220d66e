//! Synthetic stand-ins for the appearance network and the hand key-point
//! extractor.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::gesture::{GestureClass, LabeledLandmarks, LandmarkSet, NUM_LANDMARKS};
use crate::reid::FeatureVector;
use crate::rng;

/// Identity-conditioned embedding source: a centroid on the unit sphere plus
/// isotropic Gaussian noise and an optional slow sinusoidal drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingGenerator {
    pub centroid: Vec<f64>,
    pub noise_std: f64,
    pub drift: f64,
    pub drift_direction: Vec<f64>,
    pub drift_period: f64,
}

fn unit_gaussian(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    v.into_iter().map(|x| x / norm).collect()
}

impl EmbeddingGenerator {
    pub fn from_seed(dim: usize, seed: u64, noise_std: f64, drift: f64) -> Self {
        let mut rng = rng::stream(seed, &[0xE3B]);
        let centroid = unit_gaussian(dim, &mut rng);
        let drift_direction = unit_gaussian(dim, &mut rng);
        Self {
            centroid,
            noise_std: noise_std.max(0.0),
            drift,
            drift_direction,
            drift_period: 20.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.centroid.len()
    }

    pub fn sample(&self, t: f64, rng: &mut impl Rng) -> FeatureVector {
        let noise = Normal::new(0.0, self.noise_std).expect("finite std");
        let phase = self.drift * (TAU * t / self.drift_period).sin();
        let values = self
            .centroid
            .iter()
            .zip(&self.drift_direction)
            .map(|(c, d)| c + phase * d + noise.sample(rng))
            .collect();
        FeatureVector::new(values).expect("finite embedding")
    }
}

/// Per-component noise std giving a separation ratio `ratio` between two
/// random unit-sphere centroids: the RMS per-component centroid difference,
/// `sqrt(2 / dim)`, divided by the noise std.
pub fn noise_for_separation(dim: usize, ratio: f64) -> f64 {
    (2.0 / dim as f64).sqrt() / ratio
}

/// Jitter applied to generated hands, in normalized units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandmarkJitter {
    pub std: f64,
}

impl Default for LandmarkJitter {
    fn default() -> Self {
        Self { std: 0.02 }
    }
}

/// Key-point layout: 0 wrist, 1..=4 thumb, then four points per finger for
/// index, middle, ring and pinky, base to tip.
pub const FINGERTIPS: [usize; 5] = [4, 8, 12, 16, 20];

const WRIST: [f64; 3] = [0.0, -0.5, 0.0];
const THUMB_BASE: [[f64; 3]; 2] = [[-0.20, -0.35, 0.0], [-0.35, -0.20, 0.0]];
const THUMB_OPEN: [[f64; 3]; 2] = [[-0.60, 0.02, 0.0], [-0.85, 0.25, 0.0]];
const THUMB_CLOSED: [[f64; 3]; 2] = [[-0.25, -0.02, -0.15], [-0.06, 0.06, -0.10]];
const FINGER_BASE: [[f64; 3]; 4] = [
    [-0.20, 0.30, 0.0],
    [-0.06, 0.33, 0.0],
    [0.08, 0.31, 0.0],
    [0.21, 0.26, 0.0],
];
const FINGER_TIP_OPEN: [[f64; 3]; 4] = [
    [-0.42, 0.90, 0.0],
    [-0.10, 1.00, 0.0],
    [0.20, 0.96, 0.0],
    [0.45, 0.85, 0.0],
];

fn lerp(a: [f64; 3], b: [f64; 3], f: f64) -> [f64; 3] {
    [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]), a[2] + f * (b[2] - a[2])]
}

fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Hand with each digit (thumb first) either extended or curled into the palm.
pub fn hand_template(extended: [bool; 5]) -> LandmarkSet {
    let mut points = [[0.0; 3]; NUM_LANDMARKS];
    points[0] = WRIST;
    points[1] = THUMB_BASE[0];
    points[2] = THUMB_BASE[1];
    let thumb = if extended[0] { THUMB_OPEN } else { THUMB_CLOSED };
    points[3] = thumb[0];
    points[4] = thumb[1];
    for f in 0..4 {
        let base = FINGER_BASE[f];
        let k = 5 + 4 * f;
        points[k] = base;
        if extended[f + 1] {
            let tip = FINGER_TIP_OPEN[f];
            points[k + 1] = lerp(base, tip, 0.4);
            points[k + 2] = lerp(base, tip, 0.7);
            points[k + 3] = tip;
        } else {
            points[k + 1] = add(base, [0.0, 0.12, -0.15]);
            points[k + 2] = add(base, [0.0, 0.02, -0.25]);
            points[k + 3] = [0.4 * base[0], 0.04, -0.12];
        }
    }
    LandmarkSet::new(points).expect("finite template")
}

/// Fingertip distances from the palm centre divided by the largest key-point
/// distance from the palm centre.
pub fn fingertip_extension(lm: &LandmarkSet) -> [f64; 5] {
    let norm = |p: &[f64; 3]| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    let max = lm.points().iter().map(norm).fold(0.0, f64::max);
    FINGERTIPS.map(|i| norm(&lm.points()[i]) / max)
}

/// Canonical template for a class; `Other` uses `pattern` to choose one of
/// the 30 mixed extended/curled configurations.
pub fn class_template(class: GestureClass, pattern: u32) -> LandmarkSet {
    match class {
        GestureClass::Wait => hand_template([true; 5]),
        GestureClass::Follow => hand_template([false; 5]),
        GestureClass::Other => {
            // Masks 1..=30 skip all-curled (0) and all-extended (31).
            let mask = 1 + pattern % 30;
            hand_template([0, 1, 2, 3, 4].map(|b| mask & (1 << b) != 0))
        }
    }
}

/// Synthetic hand for a class: scale-normalized template plus jitter.
pub fn gen_landmarks_with(class: GestureClass, seed: u64, jitter: &LandmarkJitter) -> LandmarkSet {
    let mut rng = rng::stream(seed, &[0x1A2D]);
    let pattern: u32 = rng.random();
    let template = class_template(class, pattern).normalized();
    if jitter.std <= 0.0 {
        return template;
    }
    let noise = Normal::new(0.0, jitter.std).expect("finite std");
    let mut points = *template.points();
    points.iter_mut().flatten().for_each(|v| *v += noise.sample(&mut rng));
    LandmarkSet::new(points).expect("finite landmarks").normalized()
}

pub fn gen_landmarks(class: GestureClass, seed: u64) -> LandmarkSet {
    gen_landmarks_with(class, seed, &LandmarkJitter::default())
}

/// Balanced labeled corpus, classes interleaved in `GestureClass::ALL` order.
pub fn gen_corpus(per_class: usize, seed: u64, jitter: &LandmarkJitter) -> Vec<LabeledLandmarks> {
    (0..per_class)
        .flat_map(|i| {
            GestureClass::ALL.map(|class| LabeledLandmarks {
                landmarks: gen_landmarks_with(class, rng::derive_seed(seed, &[i as u64, class.index() as u64]), jitter),
                class,
            })
        })
        .collect()
}
