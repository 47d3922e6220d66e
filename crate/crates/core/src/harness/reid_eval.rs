//! Re-identification evaluation.
//!
//! For every calibrated subject a frame is scored as follows:
//!
//! - subject present: correct iff the subject itself is re-identified
//!   (re-identifying another person, or no one, is a miss);
//! - subject absent: correct iff no one is re-identified.
//!
//! Frames contribute to a 2x2 `Target` / `No Target` matrix per subject.
//! The pooled report sums the subject matrices; `subject_mean` averages the
//! per-subject metrics.

use serde::{Deserialize, Serialize};

use super::generators::{noise_for_separation, EmbeddingGenerator};
use super::metrics::{ConfusionMatrix, MetricsReport, SubjectReport};
use crate::error::{Error, Result};
use crate::reid::{self, calibrate, identify, CalibrationProfile, FeatureRecord, FeatureVector};
use crate::rng;

pub const TARGET: usize = 0;
pub const NO_TARGET: usize = 1;
pub const LABELS: [&str; 2] = ["Target", "No Target"];

/// Detected persons of one test image.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFrame {
    pub t: f64,
    pub persons: Vec<(Option<String>, FeatureVector)>,
    /// When set, the frame belongs only to this subject's test set.
    pub subject: Option<String>,
}

impl TestFrame {
    fn contains(&self, tag: &str) -> bool {
        self.persons.iter().any(|(p, _)| p.as_deref() == Some(tag))
    }

    fn applies_to(&self, tag: &str) -> bool {
        self.subject.as_deref().is_none_or(|s| s == tag)
    }
}

/// Groups consecutive records sharing `t` and `subject` into frames.
pub fn frames_from_records(records: Vec<FeatureRecord>) -> Vec<TestFrame> {
    let mut frames: Vec<TestFrame> = Vec::new();
    for rec in records {
        match frames.last_mut() {
            Some(f) if f.t == rec.t && f.subject == rec.subject => f.persons.push((rec.person_id, rec.feature)),
            _ => frames.push(TestFrame {
                t: rec.t,
                persons: vec![(rec.person_id, rec.feature)],
                subject: rec.subject,
            }),
        }
    }
    frames
}

pub fn frames_to_records(frames: &[TestFrame]) -> Vec<FeatureRecord> {
    frames
        .iter()
        .flat_map(|f| {
            f.persons.iter().map(|(tag, feature)| FeatureRecord {
                t: f.t,
                person_id: tag.clone(),
                subject: f.subject.clone(),
                feature: feature.clone(),
            })
        })
        .collect()
}

/// Scores one subject's profile over its test frames.
pub fn eval_subject(tag: &str, profile: &CalibrationProfile, frames: &[TestFrame]) -> Result<MetricsReport> {
    let mut confusion = ConfusionMatrix::new(&LABELS);
    for frame in frames.iter().filter(|f| f.applies_to(tag)) {
        let features: Vec<FeatureVector> = frame.persons.iter().map(|(_, f)| f.clone()).collect();
        let result = identify(&features, profile)?;
        let picked = result.target_index.map(|i| frame.persons[i].0.as_deref());
        if frame.contains(tag) {
            let hit = picked == Some(Some(tag));
            confusion.add(TARGET, if hit { TARGET } else { NO_TARGET });
        } else {
            confusion.add(NO_TARGET, if picked.is_some() { TARGET } else { NO_TARGET });
        }
    }
    if confusion.total() == 0 {
        return Err(Error::invalid(format!("subject `{tag}` has no test frames")));
    }
    Ok(MetricsReport::from_confusion("reid", confusion))
}

/// Evaluates every subject (in parallel, reported in input order).
pub fn eval_reid(profiles: &[(String, CalibrationProfile)], frames: &[TestFrame]) -> Result<MetricsReport> {
    if frames.is_empty() {
        return Err(Error::invalid("re-identification test set is empty"));
    }
    if profiles.is_empty() {
        return Err(Error::invalid("no calibrated subjects to evaluate"));
    }
    let reports: Vec<Result<SubjectReport>> = std::thread::scope(|scope| {
        let handles: Vec<_> = profiles
            .iter()
            .map(|(tag, profile)| {
                scope.spawn(move || {
                    Ok(SubjectReport {
                        subject: tag.clone(),
                        report: eval_subject(tag, profile, frames)?,
                    })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("subject evaluation panicked")).collect()
    });
    MetricsReport::from_subjects("reid", reports.into_iter().collect::<Result<_>>()?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReidBenchmarkConfig {
    pub identities: usize,
    pub dim: usize,
    /// RMS per-component centroid separation over per-component noise std.
    pub separation: f64,
    pub calibration_frames: usize,
    /// Frames showing every identity, shared by all subjects.
    pub present_frames: usize,
    /// Frames per subject showing everyone but that subject.
    pub absent_frames: usize,
    pub split: f64,
    pub drift: f64,
    pub seed: u64,
}

impl Default for ReidBenchmarkConfig {
    fn default() -> Self {
        Self {
            identities: 8,
            dim: reid::DEFAULT_DIM,
            separation: 8.0,
            calibration_frames: 500,
            present_frames: 500,
            absent_frames: 500,
            split: reid::DEFAULT_SPLIT,
            drift: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchSubject {
    pub tag: String,
    pub generator: EmbeddingGenerator,
    pub calibration: Vec<FeatureVector>,
}

#[derive(Debug, Clone)]
pub struct ReidBenchmark {
    pub subjects: Vec<BenchSubject>,
    pub frames: Vec<TestFrame>,
}

const FRAME_DT: f64 = 0.1;

/// Synthetic dataset: per-identity calibration walks, shared all-present
/// frames and one absent-subject set per identity.
pub fn build_reid_benchmark(config: &ReidBenchmarkConfig) -> ReidBenchmark {
    let noise = noise_for_separation(config.dim, config.separation);
    let subjects: Vec<BenchSubject> = (0..config.identities)
        .map(|i| {
            let generator = EmbeddingGenerator::from_seed(
                config.dim,
                rng::derive_seed(config.seed, &[0x1D, i as u64]),
                noise,
                config.drift,
            );
            let mut r = rng::stream(config.seed, &[0xCA1, i as u64]);
            let calibration = (0..config.calibration_frames)
                .map(|k| generator.sample(k as f64 * FRAME_DT, &mut r))
                .collect();
            BenchSubject {
                tag: format!("person{i}"),
                generator,
                calibration,
            }
        })
        .collect();

    let draw_frame = |t: f64, key: &[u64], skip: Option<usize>, subject: Option<String>| {
        let mut r = rng::stream(config.seed, key);
        TestFrame {
            t,
            persons: subjects
                .iter()
                .enumerate()
                .filter(|(i, _)| Some(*i) != skip)
                .map(|(_, s)| (Some(s.tag.clone()), s.generator.sample(t, &mut r)))
                .collect(),
            subject,
        }
    };

    let mut frames = Vec::with_capacity(config.present_frames + config.identities * config.absent_frames);
    for k in 0..config.present_frames {
        frames.push(draw_frame(k as f64 * FRAME_DT, &[0x7E57, k as u64], None, None));
    }
    for (i, s) in subjects.iter().enumerate() {
        for k in 0..config.absent_frames {
            let t = (config.present_frames + i * config.absent_frames + k) as f64 * FRAME_DT;
            frames.push(draw_frame(t, &[0xAB5, i as u64, k as u64], Some(i), Some(s.tag.clone())));
        }
    }
    ReidBenchmark { subjects, frames }
}

impl ReidBenchmark {
    pub fn calibrate(&self, split: f64) -> Result<Vec<(String, CalibrationProfile)>> {
        self.subjects
            .iter()
            .map(|s| Ok((s.tag.clone(), calibrate(&s.calibration, split)?)))
            .collect()
    }

    pub fn evaluate(&self, split: f64) -> Result<MetricsReport> {
        eval_reid(&self.calibrate(split)?, &self.frames)
    }

    /// Calibration walk of one subject as feature-log records.
    pub fn calibration_records(&self, subject: usize) -> Vec<FeatureRecord> {
        let s = &self.subjects[subject];
        s.calibration
            .iter()
            .enumerate()
            .map(|(k, f)| FeatureRecord {
                t: k as f64 * FRAME_DT,
                person_id: Some(s.tag.clone()),
                subject: None,
                feature: f.clone(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(v: f64) -> FeatureVector {
        FeatureVector::new(vec![v]).unwrap()
    }

    fn unit_profile(lambda: f64) -> CalibrationProfile {
        CalibrationProfile::from_parts(vec![0.0], vec![1.0], 0.5, 0.1, 3, 3)
            .unwrap()
            .with_threshold(lambda)
    }

    fn frame(persons: &[(&str, f64)]) -> TestFrame {
        TestFrame {
            t: 0.0,
            persons: persons.iter().map(|(t, v)| (Some(t.to_string()), fv(*v))).collect(),
            subject: None,
        }
    }

    #[test]
    fn absent_frames_with_zero_threshold_are_all_correct() {
        let frames = vec![frame(&[("b", 5.0), ("c", -4.0)]); 10];
        let r = eval_reid(&[("a".into(), unit_profile(0.0))], &frames).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.class("No Target").unwrap().recall, 1.0);
    }

    #[test]
    fn single_correct_frame() {
        let frames = vec![frame(&[("a", 0.1), ("b", 3.0)])];
        let r = eval_reid(&[("a".into(), unit_profile(1.0))], &frames).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.confusion.get(TARGET, TARGET), 1);
    }

    #[test]
    fn wrong_person_counts_as_miss() {
        let frames = vec![frame(&[("a", 0.6), ("b", 0.2)])];
        let r = eval_reid(&[("a".into(), unit_profile(1.0))], &frames).unwrap();
        assert_eq!(r.confusion.get(TARGET, NO_TARGET), 1);
    }

    #[test]
    fn empty_test_set_is_an_error() {
        assert!(eval_reid(&[("a".into(), unit_profile(1.0))], &[]).is_err());
    }

    #[test]
    fn subject_scoped_frames() {
        let mut f = frame(&[("b", 0.0)]);
        f.subject = Some("b".into());
        let frames = vec![frame(&[("a", 0.0)]), f];
        let r = eval_subject("a", &unit_profile(1.0), &frames).unwrap();
        assert_eq!(r.total, 1);
    }

    #[test]
    fn records_group_into_frames() {
        let frames = vec![frame(&[("a", 0.1), ("b", 0.2)]), TestFrame { t: 0.1, ..frame(&[("c", 1.0)]) }];
        let back = frames_from_records(frames_to_records(&frames));
        assert_eq!(back, frames);
    }
}
