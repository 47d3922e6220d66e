use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::svm::{BinarySvm, SmoParams};
use super::{GestureClass, LandmarkSet, FLAT_LEN};
use crate::error::{Error, Result};
use crate::reid::check_schema_version;
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledLandmarks {
    pub landmarks: LandmarkSet,
    pub class: GestureClass,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub c: f64,
    /// `None` selects `1 / (63 * variance)` over all training components.
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            max_iter: 1_000_000,
        }
    }
}

/// Binary classifier for one class pair; a positive decision votes `positive`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairClassifier {
    pub positive: GestureClass,
    pub negative: GestureClass,
    #[serde(flatten)]
    pub svm: BinarySvm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    /// Samples per class in `GestureClass::ALL` order.
    pub class_counts: [usize; 3],
    pub tol: f64,
    pub gamma_auto: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GestureModel {
    pub schema_version: u32,
    pub gamma: f64,
    pub c: f64,
    pub pairs: Vec<PairClassifier>,
    pub metadata: TrainingMetadata,
}

impl GestureModel {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::format("gesture model", e))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let model: GestureModel = serde_path_to_error::deserialize(de).map_err(|e| Error::Format {
            context: format!("gesture model field `{}`", e.path()),
            message: e.inner().to_string(),
        })?;
        check_schema_version("gesture model", model.schema_version)?;
        if model.pairs.is_empty() {
            return Err(Error::format("gesture model", "model has no pairwise classifiers"));
        }
        for pair in &model.pairs {
            if pair.svm.support_vectors.len() != pair.svm.coefficients.len() {
                return Err(Error::format("gesture model", "support vector / coefficient count mismatch"));
            }
            if let Some(sv) = pair.svm.support_vectors.iter().find(|sv| sv.len() != FLAT_LEN) {
                return Err(Error::dim("gesture model support vector", FLAT_LEN, sv.len()));
            }
        }
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Pairwise decision values, one per trained pair.
    pub fn decision_values(&self, lm: &LandmarkSet) -> Vec<f64> {
        let x = lm.flatten();
        self.pairs.iter().map(|p| p.svm.decision_value(&x)).collect()
    }
}

/// `1 / (63 * var)` where `var` is the variance of all training components.
pub fn auto_gamma(data: &[LabeledLandmarks]) -> f64 {
    let values: Vec<f64> = data.iter().flat_map(|d| d.landmarks.flatten()).collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (FLAT_LEN as f64 * var)
    } else {
        1.0
    }
}

/// Trains one binary classifier per pair of present classes.
pub fn train(data: &[LabeledLandmarks], config: &TrainConfig) -> Result<GestureModel> {
    let mut class_counts = [0usize; 3];
    for d in data {
        class_counts[d.class.index()] += 1;
    }
    let present: Vec<GestureClass> = GestureClass::ALL
        .into_iter()
        .filter(|c| class_counts[c.index()] > 0)
        .collect();
    if present.len() < 2 {
        return Err(Error::TrainingDegenerate(format!(
            "need at least two gesture classes, found {}",
            present.len()
        )));
    }
    let gamma = match config.gamma {
        Some(g) => g,
        None => auto_gamma(data),
    };
    let params = SmoParams {
        c: config.c,
        gamma,
        tol: config.tol,
        max_iter: config.max_iter,
    };

    let mut pairs_todo = Vec::new();
    for (a, &pos) in present.iter().enumerate() {
        for &neg in &present[a + 1..] {
            pairs_todo.push((pos, neg));
        }
    }

    // The pairwise problems are independent; results are collected in pair order.
    let results: Vec<Result<PairClassifier>> = std::thread::scope(|scope| {
        let handles: Vec<_> = pairs_todo
            .iter()
            .map(|&(pos, neg)| {
                scope.spawn(move || {
                    let (x, y): (Vec<Vec<f64>>, Vec<f64>) = data
                        .iter()
                        .filter(|d| d.class == pos || d.class == neg)
                        .map(|d| (d.landmarks.flatten(), if d.class == pos { 1.0 } else { -1.0 }))
                        .unzip();
                    let svm = BinarySvm::train(&x, &y, &params)?;
                    log::debug!(
                        "pair {pos}/{neg}: {} SVs, {} iterations, violation {:.2e}",
                        svm.support_vectors.len(),
                        svm.iterations,
                        svm.violation
                    );
                    Ok(PairClassifier { positive: pos, negative: neg, svm })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("pair training panicked")).collect()
    });

    Ok(GestureModel {
        schema_version: SCHEMA_VERSION,
        gamma,
        c: config.c,
        pairs: results.into_iter().collect::<Result<_>>()?,
        metadata: TrainingMetadata {
            class_counts,
            tol: config.tol,
            gamma_auto: config.gamma.is_none(),
        },
    })
}

/// One-vs-one majority vote. Vote ties go to the class with the larger summed
/// decision magnitude over the pairs it won, then to the earlier class.
pub fn classify(model: &GestureModel, lm: &LandmarkSet) -> GestureClass {
    let mut votes = [0usize; 3];
    let mut magnitude = [0.0f64; 3];
    for (pair, f) in model.pairs.iter().zip(model.decision_values(lm)) {
        let winner = if f > 0.0 { pair.positive } else { pair.negative };
        votes[winner.index()] += 1;
        magnitude[winner.index()] += f.abs();
    }
    let mut best = GestureClass::ALL[0];
    for class in GestureClass::ALL.into_iter().skip(1) {
        let (i, b) = (class.index(), best.index());
        if votes[i] > votes[b] || (votes[i] == votes[b] && magnitude[i] > magnitude[b]) {
            best = class;
        }
    }
    best
}

/// Reads a landmark corpus: header row, 63 coordinate columns, then `label`.
pub fn read_corpus(reader: impl Read) -> Result<Vec<LabeledLandmarks>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::format("landmark corpus header", e))?.clone();
    if headers.len() != FLAT_LEN + 1 {
        return Err(Error::format(
            "landmark corpus header",
            format!("expected {} columns, found {}", FLAT_LEN + 1, headers.len()),
        ));
    }
    if headers.get(FLAT_LEN).map(str::trim) != Some("label") {
        return Err(Error::format("landmark corpus header", "last column must be `label`"));
    }
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| Error::format(format!("landmark corpus line {line}"), e))?;
        let mut values = Vec::with_capacity(FLAT_LEN);
        for (col, field) in rec.iter().take(FLAT_LEN).enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::format(
                    format!("landmark corpus line {line} column `{}`", &headers[col]),
                    format!("`{field}` is not a number"),
                )
            })?;
            values.push(v);
        }
        let class: GestureClass = rec[FLAT_LEN]
            .parse()
            .map_err(|e: Error| Error::format(format!("landmark corpus line {line} column `label`"), e))?;
        let landmarks = LandmarkSet::from_flat(&values)
            .map_err(|e| Error::format(format!("landmark corpus line {line}"), e))?;
        out.push(LabeledLandmarks { landmarks, class });
    }
    Ok(out)
}

pub fn load_corpus(path: &Path) -> Result<Vec<LabeledLandmarks>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(std::io::BufReader::new(file))
}

pub fn write_corpus(writer: impl Write, data: &[LabeledLandmarks]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..FLAT_LEN / 3)
        .flat_map(|i| ["x", "y", "z"].map(|a| format!("{a}{i}")))
        .collect();
    header.push("label".into());
    w.write_record(&header).map_err(|e| Error::format("landmark corpus", e))?;
    for d in data {
        let mut row: Vec<String> = d.landmarks.flatten().iter().map(|v| v.to_string()).collect();
        row.push(d.class.as_str().into());
        w.write_record(&row).map_err(|e| Error::format("landmark corpus", e))?;
    }
    w.flush().map_err(|e| Error::format("landmark corpus", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(class: GestureClass, shift: f64) -> LabeledLandmarks {
        let base = match class {
            GestureClass::Wait => 1.0,
            GestureClass::Follow => -1.0,
            GestureClass::Other => 0.0,
        };
        let flat: Vec<f64> = (0..FLAT_LEN).map(|i| base * ((i % 5) as f64 * 0.1) + shift).collect();
        LabeledLandmarks {
            landmarks: LandmarkSet::from_flat(&flat).unwrap(),
            class,
        }
    }

    fn toy_corpus() -> Vec<LabeledLandmarks> {
        let mut data = Vec::new();
        for k in 0..8 {
            for class in GestureClass::ALL {
                data.push(sample(class, k as f64 * 0.01));
            }
        }
        data
    }

    #[test]
    fn three_class_toy_problem() {
        let data = toy_corpus();
        let model = train(&data, &TrainConfig::default()).unwrap();
        assert_eq!(model.pairs.len(), 3);
        for d in &data {
            assert_eq!(classify(&model, &d.landmarks), d.class);
        }
        for pair in &model.pairs {
            let sum: f64 = pair.svm.coefficients.iter().sum();
            assert!(sum.abs() < 1e-9);
            assert!(pair.svm.coefficients.iter().all(|c| c.abs() <= model.c + 1e-12));
        }
    }

    #[test]
    fn two_present_classes_train_one_pair() {
        let data: Vec<_> = toy_corpus()
            .into_iter()
            .filter(|d| d.class != GestureClass::Other)
            .collect();
        let model = train(&data, &TrainConfig::default()).unwrap();
        assert_eq!(model.pairs.len(), 1);
        assert_eq!(model.metadata.class_counts, [8, 8, 0]);
    }

    #[test]
    fn single_class_is_degenerate() {
        let data = vec![sample(GestureClass::Wait, 0.0), sample(GestureClass::Wait, 0.1)];
        assert!(matches!(
            train(&data, &TrainConfig::default()),
            Err(Error::TrainingDegenerate(_))
        ));
    }

    #[test]
    fn corpus_csv_round_trip() {
        let data = toy_corpus();
        let mut buf = Vec::new();
        write_corpus(&mut buf, &data).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x0,y0,z0,x1"));
        assert_eq!(read_corpus(buf.as_slice()).unwrap(), data);
    }

    #[test]
    fn corpus_rejects_bad_rows() {
        let mut buf = Vec::new();
        write_corpus(&mut buf, &toy_corpus()[..1]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let bad_label = text.replace(",wait", ",stop");
        let err = read_corpus(bad_label.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("label"), "{err}");
        let no_header = text.lines().skip(1).collect::<Vec<_>>().join("\n");
        assert!(read_corpus(no_header.as_bytes()).is_err());
    }

    #[test]
    fn model_json_round_trip() {
        let model = train(&toy_corpus(), &TrainConfig::default()).unwrap();
        let back = GestureModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
    }
}
