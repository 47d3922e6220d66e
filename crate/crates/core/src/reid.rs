//! Target calibration and per-frame re-identification.
//!
//! A target is described by the per-component mean and standard deviation of
//! its appearance embeddings. A new embedding is scored by the RMS of its
//! standardized residuals; the target is accepted when that score is within
//! the calibrated threshold `lambda_d = mu_d + 2 sigma_d`.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::SCHEMA_VERSION;

/// Lower bound applied to every per-component standard deviation.
pub const SIGMA_FLOOR: f64 = 1e-6;
/// Fraction of calibration samples used for the mean/std fit.
pub const DEFAULT_SPLIT: f64 = 2.0 / 3.0;
/// Embedding dimension of the appearance network.
pub const DEFAULT_DIM: usize = 256;
/// Minimum number of samples in each calibration split.
pub const MIN_SPLIT_SAMPLES: usize = 3;

/// One appearance embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("feature vector must have at least one component"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("feature component {i} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<FeatureVector> for Vec<f64> {
    fn from(v: FeatureVector) -> Self {
        v.0
    }
}

/// Calibrated appearance model of one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationProfile {
    pub dim: usize,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub lambda_d: f64,
    pub mu_d: f64,
    pub sigma_d: f64,
    pub n_calibration: usize,
    pub n_threshold: usize,
}

impl CalibrationProfile {
    /// Builds a profile from its parts, flooring `sigma` and deriving `lambda_d`.
    pub fn from_parts(
        mu: Vec<f64>,
        sigma: Vec<f64>,
        mu_d: f64,
        sigma_d: f64,
        n_calibration: usize,
        n_threshold: usize,
    ) -> Result<Self> {
        let profile = Self {
            dim: mu.len(),
            sigma: sigma.into_iter().map(|s| s.max(SIGMA_FLOOR)).collect(),
            mu,
            lambda_d: mu_d + 2.0 * sigma_d,
            mu_d,
            sigma_d,
            n_calibration,
            n_threshold,
        };
        profile.validate()?;
        Ok(profile)
    }

    /// Returns a copy with a different acceptance threshold. `mu_d` is shifted so
    /// that `lambda_d = mu_d + 2 sigma_d` keeps holding.
    pub fn with_threshold(&self, lambda_d: f64) -> Self {
        Self {
            lambda_d,
            mu_d: lambda_d - 2.0 * self.sigma_d,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("profile dim must be positive"));
        }
        if self.mu.len() != self.dim {
            return Err(Error::dim("profile mu", self.dim, self.mu.len()));
        }
        if self.sigma.len() != self.dim {
            return Err(Error::dim("profile sigma", self.dim, self.sigma.len()));
        }
        if self.mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("profile mu has non-finite components"));
        }
        if let Some(i) = self
            .sigma
            .iter()
            .position(|s| !s.is_finite() || *s < SIGMA_FLOOR)
        {
            return Err(Error::invalid(format!(
                "profile sigma[{i}] is below the floor {SIGMA_FLOOR:e}"
            )));
        }
        if !(self.sigma_d >= 0.0) || self.lambda_d.is_nan() {
            return Err(Error::invalid("profile sigma_d must be nonnegative"));
        }
        let expected = self.mu_d + 2.0 * self.sigma_d;
        if (self.lambda_d - expected).abs() > 1e-12 * expected.abs().max(1.0) {
            return Err(Error::invalid("profile lambda_d must equal mu_d + 2 sigma_d"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ProfileFile {
            schema_version: SCHEMA_VERSION,
            profile: self.clone(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::format("profile", e))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ProfileFile = serde_path_to_error::deserialize(de).map_err(|e| Error::Format {
            context: format!("profile field `{}`", e.path()),
            message: e.inner().to_string(),
        })?;
        check_schema_version("profile", file.schema_version)?;
        file.profile.validate()?;
        Ok(file.profile)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Format { context, message } => Error::Format {
                context: format!("{} ({context})", path.display()),
                message,
            },
            other => other,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    #[serde(default = "default_schema")]
    schema_version: u32,
    #[serde(flatten)]
    profile: CalibrationProfile,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

pub(crate) fn check_schema_version(context: &str, version: u32) -> Result<()> {
    if version != SCHEMA_VERSION {
        return Err(Error::format(
            context,
            format!("unsupported schema_version {version} (expected {SCHEMA_VERSION})"),
        ));
    }
    Ok(())
}

/// Outcome of matching one frame against a profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentificationResult {
    pub target_index: Option<usize>,
    pub distance: Option<f64>,
    pub all_distances: Vec<f64>,
}

/// RMS of the standardized residuals of `x` under `profile`.
pub fn feature_distance(x: &FeatureVector, profile: &CalibrationProfile) -> Result<f64> {
    if x.dim() != profile.dim {
        return Err(Error::dim("feature_distance", profile.dim, x.dim()));
    }
    Ok(weighted_distance(x.as_slice(), &profile.mu, &profile.sigma))
}

fn weighted_distance(x: &[f64], mu: &[f64], sigma: &[f64]) -> f64 {
    let sum: f64 = x
        .iter()
        .zip(mu)
        .zip(sigma)
        .map(|((x, m), s)| {
            let z = (x - m) / s.max(SIGMA_FLOOR);
            z * z
        })
        .sum();
    (sum / x.len() as f64).sqrt()
}

/// Population mean and std. The sum is shifted by the first value so that
/// constant inputs give their value back exactly.
fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let shift = values.clone().next().unwrap_or(0.0);
    let mean = shift + values.clone().map(|v| v - shift).sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Number of samples that go into the mean/std fit for a split fraction.
pub fn calibration_split(n: usize, split_fraction: f64) -> usize {
    // The epsilon keeps 2/3 * 300 at 200 rather than 201 after rounding.
    ((split_fraction * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Fits a profile from time-ordered target samples.
///
/// The first `ceil(split_fraction * N)` samples give the per-component mean
/// and std; the rest give the distance statistics for the threshold.
pub fn calibrate(samples: &[FeatureVector], split_fraction: f64) -> Result<CalibrationProfile> {
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "split fraction must lie in (0, 1), got {split_fraction}"
        )));
    }
    let n_cal = calibration_split(samples.len(), split_fraction);
    let n_thr = samples.len().saturating_sub(n_cal);
    if n_cal < MIN_SPLIT_SAMPLES || n_thr < MIN_SPLIT_SAMPLES {
        return Err(Error::CalibrationInsufficient(format!(
            "{} samples split into {n_cal} calibration / {n_thr} threshold; each needs at least {MIN_SPLIT_SAMPLES}",
            samples.len()
        )));
    }
    let dim = samples[0].dim();
    if let Some(bad) = samples.iter().find(|s| s.dim() != dim) {
        return Err(Error::dim("calibration sample", dim, bad.dim()));
    }

    let (cal, thr) = samples.split_at(n_cal);
    let mut mu = vec![0.0; dim];
    let mut sigma = vec![0.0; dim];
    for i in 0..dim {
        let (m, s) = mean_std(cal.iter().map(|x| x.as_slice()[i]));
        mu[i] = m;
        sigma[i] = s.max(SIGMA_FLOOR);
    }
    let distances: Vec<f64> = thr
        .iter()
        .map(|x| weighted_distance(x.as_slice(), &mu, &sigma))
        .collect();
    let (mu_d, sigma_d) = mean_std(distances.iter().copied());
    CalibrationProfile::from_parts(mu, sigma, mu_d, sigma_d, n_cal, n_thr)
}

/// Distances of `samples` to the profile (e.g. the threshold set).
pub fn distances(samples: &[FeatureVector], profile: &CalibrationProfile) -> Result<Vec<f64>> {
    samples.iter().map(|x| feature_distance(x, profile)).collect()
}

/// Selects the person closest to the profile, if within `lambda_d`.
/// Ties at the minimum go to the lowest index.
pub fn identify(
    frame_features: &[FeatureVector],
    profile: &CalibrationProfile,
) -> Result<IdentificationResult> {
    let all_distances = distances(frame_features, profile)?;
    let best = all_distances
        .iter()
        .enumerate()
        .fold(None::<(usize, f64)>, |best, (i, &d)| match best {
            Some((_, bd)) if bd <= d => best,
            _ => Some((i, d)),
        });
    let (target_index, distance) = match best {
        Some((i, d)) if d <= profile.lambda_d => (Some(i), Some(d)),
        _ => (None, None),
    };
    Ok(IdentificationResult {
        target_index,
        distance,
        all_distances,
    })
}

/// One line of a feature log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureRecord {
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub person_id: Option<String>,
    /// Restricts the record's frame to the test set of one calibrated subject.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
    pub feature: FeatureVector,
}

pub fn read_feature_log(reader: impl BufRead) -> Result<Vec<FeatureRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::format("feature log", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let de = &mut serde_json::Deserializer::from_str(&line);
        let rec: FeatureRecord = serde_path_to_error::deserialize(de).map_err(|e| Error::Format {
            context: format!("feature log line {} field `{}`", lineno + 1, e.path()),
            message: e.inner().to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn load_feature_log(path: &Path) -> Result<Vec<FeatureRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_feature_log(std::io::BufReader::new(file))
}

pub fn write_feature_log(mut w: impl Write, records: &[FeatureRecord]) -> Result<()> {
    for rec in records {
        let line = serde_json::to_string(rec).map_err(|e| Error::format("feature log", e))?;
        writeln!(w, "{line}").map_err(|e| Error::format("feature log", e))?;
    }
    Ok(())
}
