//! Scenarios, synthetic data generators, the closed simulation loop and the
//! evaluation protocols.

mod generators;
mod metrics;
pub mod reid_eval;
pub mod scenario;
pub mod sim;

pub use generators::{
    class_template, fingertip_extension, gen_corpus, gen_landmarks, gen_landmarks_with, hand_template,
    noise_for_separation, EmbeddingGenerator, LandmarkJitter, FINGERTIPS,
};
pub use metrics::{f1, ClassMetrics, ConfusionMatrix, MetricsReport, SubjectMean, SubjectReport};
pub use reid_eval::{build_reid_benchmark, eval_reid, ReidBenchmark, ReidBenchmarkConfig, TestFrame};
pub use scenario::{presets, Scenario};
pub use sim::{run_scenario, ScenarioReport, SimOutput, Simulation, Trace, TraceRow};

use crate::error::Result;
use crate::gesture::{classify, GestureClass, GestureModel, LabeledLandmarks};

/// Scores a gesture model on a labeled corpus.
pub fn eval_gesture(model: &GestureModel, data: &[LabeledLandmarks]) -> Result<MetricsReport> {
    if data.is_empty() {
        return Err(crate::Error::invalid("gesture test set is empty"));
    }
    let labels = GestureClass::ALL.map(GestureClass::as_str);
    let mut confusion = ConfusionMatrix::new(&labels);
    for sample in data {
        confusion.add(sample.class.index(), classify(model, &sample.landmarks).index());
    }
    Ok(MetricsReport::from_confusion("gesture", confusion))
}
