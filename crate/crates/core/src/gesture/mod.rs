//! Hand-gesture commands: landmark vectors, a one-vs-one RBF SVM and the
//! debouncer that turns the per-frame class stream into robot commands.

mod debounce;
mod model;
pub mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use debounce::{Debouncer, DEFAULT_REQUIRED_COUNT};
pub use model::{
    classify, load_corpus, read_corpus, train, write_corpus, GestureModel, LabeledLandmarks,
    PairClassifier, TrainConfig, TrainingMetadata,
};
pub use svm::{rbf_kernel, BinarySvm, SmoParams};

pub const NUM_LANDMARKS: usize = 21;
pub const FLAT_LEN: usize = NUM_LANDMARKS * 3;

/// Gesture classes, in the order used for tie-breaking and matrix axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GestureClass {
    /// Open hand.
    Wait,
    /// Closed hand.
    Follow,
    Other,
}

impl GestureClass {
    pub const ALL: [GestureClass; 3] = [GestureClass::Wait, GestureClass::Follow, GestureClass::Other];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GestureClass::Wait => "wait",
            GestureClass::Follow => "follow",
            GestureClass::Other => "other",
        }
    }
}

impl fmt::Display for GestureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GestureClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wait" => Ok(GestureClass::Wait),
            "follow" => Ok(GestureClass::Follow),
            "other" => Ok(GestureClass::Other),
            other => Err(Error::invalid(format!(
                "unknown gesture label `{other}` (expected wait, follow or other)"
            ))),
        }
    }
}

/// 21 hand key points relative to the palm centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSet {
    points: [[f64; 3]; NUM_LANDMARKS],
}

impl LandmarkSet {
    pub fn new(points: [[f64; 3]; NUM_LANDMARKS]) -> Result<Self> {
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("landmark coordinates must be finite"));
        }
        Ok(Self { points })
    }

    pub fn from_flat(values: &[f64]) -> Result<Self> {
        if values.len() != FLAT_LEN {
            return Err(Error::dim("landmark vector", FLAT_LEN, values.len()));
        }
        let mut points = [[0.0; 3]; NUM_LANDMARKS];
        for (p, chunk) in points.iter_mut().zip(values.chunks_exact(3)) {
            p.copy_from_slice(chunk);
        }
        Self::new(points)
    }

    pub fn points(&self) -> &[[f64; 3]; NUM_LANDMARKS] {
        &self.points
    }

    /// Row-major `x0, y0, z0, x1, ...` vector of length 63.
    pub fn flatten(&self) -> Vec<f64> {
        self.points.iter().flatten().copied().collect()
    }

    /// Largest distance between any two key points.
    pub fn extent(&self) -> f64 {
        let mut max = 0.0f64;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                max = max.max(dist3(a, b));
            }
        }
        max
    }

    /// Divides every coordinate by the hand extent so the result is scale free.
    pub fn normalized(&self) -> Self {
        let extent = self.extent();
        if extent <= f64::EPSILON {
            return self.clone();
        }
        let mut points = self.points;
        points.iter_mut().flatten().for_each(|v| *v /= extent);
        Self { points }
    }
}

pub(crate) fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_layout_and_round_trip() {
        let mut points = [[0.0; 3]; NUM_LANDMARKS];
        for (i, p) in points.iter_mut().enumerate() {
            *p = [i as f64, i as f64 + 0.25, -(i as f64)];
        }
        let lm = LandmarkSet::new(points).unwrap();
        let flat = lm.flatten();
        assert_eq!(flat.len(), 63);
        assert_eq!(&flat[3..6], &[1.0, 1.25, -1.0]);
        assert_eq!(LandmarkSet::from_flat(&flat).unwrap(), lm);
        assert!(LandmarkSet::from_flat(&flat[..62]).is_err());
    }

    #[test]
    fn normalization_is_scale_free() {
        let mut points = [[0.0; 3]; NUM_LANDMARKS];
        for (i, p) in points.iter_mut().enumerate() {
            *p = [(i as f64).cos(), (i as f64).sin(), 0.1 * i as f64];
        }
        let a = LandmarkSet::new(points).unwrap().normalized();
        points.iter_mut().flatten().for_each(|v| *v *= 3.7);
        let b = LandmarkSet::new(points).unwrap().normalized();
        assert!((a.extent() - 1.0).abs() < 1e-12);
        for (x, y) in a.flatten().iter().zip(b.flatten()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn class_labels_parse() {
        assert_eq!("Wait".parse::<GestureClass>().unwrap(), GestureClass::Wait);
        assert_eq!(" follow ".parse::<GestureClass>().unwrap(), GestureClass::Follow);
        assert!("stop".parse::<GestureClass>().is_err());
    }
}
