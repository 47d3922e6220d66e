//! `followme` command-line tool.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use followme::gesture::{load_corpus, train, write_corpus, TrainConfig};
use followme::harness::reid_eval::{frames_from_records, frames_to_records};
use followme::harness::{
    build_reid_benchmark, eval_gesture, eval_reid, gen_corpus, presets, run_scenario, LandmarkJitter,
    ReidBenchmarkConfig, Scenario,
};
use followme::reid::{calibrate, identify, load_feature_log, write_feature_log};
use followme::{CalibrationProfile, FeatureVector, GestureModel};

const FORMATS: &str = "\
File formats (all JSON files carry \"schema_version\": 1):
  feature log     JSON lines {\"t\", \"person_id\"?, \"subject\"?, \"feature\": [f64]}
  profile         JSON calibration profile (mu, sigma, mu_d, sigma_d, lambda_d)
  corpus          CSV with 63 landmark columns and a trailing `label` (wait|follow|other)
  gesture model   JSON one-vs-one RBF SVM
  scenario        JSON scenario description (see docs/scenario.md)
  trace           CSV, one row per simulation tick
  report          JSON metrics or simulation summary

Exit status: 0 success, 1 runtime error, 2 usage error.";

#[derive(Parser, Debug)]
#[command(name = "followme", version, about = "Person-following pipeline tools", after_help = FORMATS)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Build a calibration profile from a feature log.
    Calibrate {
        /// Feature log (JSON lines).
        #[arg(long)]
        features: PathBuf,
        /// Fraction of samples used for mu / sigma; the rest set the threshold.
        #[arg(long, default_value_t = 0.6667)]
        split: f64,
        /// Expected embedding dimension.
        #[arg(long, default_value_t = 256)]
        dim: usize,
        /// Only use records with this `person_id`.
        #[arg(long)]
        person: Option<String>,
        /// Output profile (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Pick the calibrated target in every frame of a feature log.
    Identify {
        /// Calibration profile (JSON).
        #[arg(long)]
        profile: PathBuf,
        /// Feature log; consecutive records with equal `t` form one frame.
        #[arg(long)]
        frames: PathBuf,
        /// Override the acceptance threshold lambda_d.
        #[arg(long)]
        threshold: Option<f64>,
        /// Output (JSON lines, one result per frame).
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the gesture classifier on a landmark corpus.
    TrainGesture {
        /// Landmark corpus (CSV).
        #[arg(long)]
        data: PathBuf,
        /// Soft-margin penalty.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// RBF width, or `auto` for 1 / (63 * variance).
        #[arg(long, default_value = "auto")]
        gamma: String,
        /// KKT tolerance.
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// SMO iteration cap per binary problem.
        #[arg(long, default_value_t = 1_000_000)]
        max_iter: usize,
        /// Output model (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a gesture model on a labelled corpus.
    EvalGesture {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Output metrics report (JSON).
        #[arg(long)]
        report: PathBuf,
    },
    /// Score calibrated subjects on a re-identification test set.
    EvalReid {
        /// Directory of profiles; each `<subject>.json` is one subject.
        #[arg(long)]
        profiles: PathBuf,
        /// Test feature log with `person_id` and optional `subject` fields.
        #[arg(long)]
        frames: PathBuf,
        /// Output metrics report (JSON).
        #[arg(long)]
        report: PathBuf,
    },
    /// Run a scenario in the closed-loop simulator.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Consecutive identical gesture frames required for a command [default: 5].
        #[arg(long)]
        xi: Option<usize>,
        /// Track expiration, seconds [default: 3].
        #[arg(long)]
        t_exp: Option<f64>,
        /// Maximum robot speed, m/s [default: 0.3].
        #[arg(long)]
        v_max: Option<f64>,
        /// Output trace (CSV).
        #[arg(long)]
        out: PathBuf,
        /// Output summary (JSON).
        #[arg(long)]
        report: PathBuf,
    },
    /// Write a built-in scenario.
    GenScenario {
        #[arg(long, value_enum)]
        name: PresetName,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Bystanders in the crowd scenario.
        #[arg(long, default_value_t = 9)]
        distractors: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic re-identification benchmark: one calibration log
    /// per subject under `calibration/` plus `test.jsonl`.
    GenReidBenchmark {
        #[arg(long, default_value_t = 8)]
        identities: usize,
        #[arg(long, default_value_t = 256)]
        dim: usize,
        /// Centroid separation over per-component noise.
        #[arg(long, default_value_t = 8.0)]
        separation: f64,
        #[arg(long, default_value_t = 500)]
        calibration_frames: usize,
        /// Frames showing every subject.
        #[arg(long, default_value_t = 500)]
        present_frames: usize,
        /// Frames per subject with that subject missing.
        #[arg(long, default_value_t = 500)]
        absent_frames: usize,
        /// Appearance drift rate.
        #[arg(long, default_value_t = 0.0)]
        drift: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Write a synthetic hand-landmark corpus.
    GenGestures {
        #[arg(long, default_value_t = 500)]
        per_class: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PresetName {
    StraightLine,
    LPath,
    GestureStop,
    Crowd,
}

/// Flag combination rejected before any file is touched.
#[derive(Debug)]
struct Usage(String);

fn usage(msg: impl Into<String>) -> std::result::Result<(), Usage> {
    Err(Usage(msg.into()))
}

fn check_fraction(name: &str, v: f64) -> std::result::Result<(), Usage> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        usage(format!("--{name} must lie in (0, 1), got {v}"))
    }
}

fn check_positive(name: &str, v: f64) -> std::result::Result<(), Usage> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        usage(format!("--{name} must be positive and finite, got {v}"))
    }
}

fn parse_gamma(s: &str) -> std::result::Result<Option<f64>, Usage> {
    if s == "auto" {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(g) if g > 0.0 && g.is_finite() => Ok(Some(g)),
        _ => Err(Usage(format!("--gamma must be `auto` or a positive number, got `{s}`"))),
    }
}

impl Cmd {
    fn validate(&self) -> std::result::Result<(), Usage> {
        match self {
            Cmd::Calibrate { split, dim, .. } => {
                check_fraction("split", *split)?;
                if *dim == 0 {
                    return usage("--dim must be at least 1");
                }
            }
            Cmd::Identify { threshold: Some(t), .. } if t.is_nan() || *t < 0.0 => {
                return usage(format!("--threshold must be nonnegative, got {t}"));
            }
            Cmd::TrainGesture { c, gamma, tol, max_iter, .. } => {
                check_positive("c", *c)?;
                parse_gamma(gamma)?;
                check_positive("tol", *tol)?;
                if *max_iter == 0 {
                    return usage("--max-iter must be at least 1");
                }
            }
            Cmd::Simulate { xi, t_exp, v_max, .. } => {
                if *xi == Some(0) {
                    return usage("--xi must be at least 1");
                }
                if let Some(t) = t_exp {
                    check_positive("t-exp", *t)?;
                }
                if let Some(v) = v_max {
                    check_positive("v-max", *v)?;
                }
            }
            Cmd::GenReidBenchmark { identities, dim, separation, calibration_frames, drift, .. } => {
                if *identities == 0 || *dim == 0 {
                    return usage("--identities and --dim must be at least 1");
                }
                check_positive("separation", *separation)?;
                if *calibration_frames < 4 {
                    return usage("--calibration-frames must be at least 4");
                }
                if !(drift.is_finite() && *drift >= 0.0) {
                    return usage(format!("--drift must be nonnegative, got {drift}"));
                }
            }
            Cmd::GenGestures { per_class: 0, .. } => return usage("--per-class must be at least 1"),
            _ => {}
        }
        Ok(())
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn json_line(value: &serde_json::Value) -> String {
    let mut s = value.to_string();
    s.push('\n');
    s
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Calibrate { features, split, dim, person, out } => {
            let records = load_feature_log(&features)?;
            let samples: Vec<FeatureVector> = records
                .into_iter()
                .filter(|r| person.is_none() || r.person_id == person)
                .map(|r| r.feature)
                .collect();
            if let Some((i, f)) = samples.iter().enumerate().find(|(_, f)| f.dim() != dim) {
                bail!(
                    "dimension mismatch in feature log sample {}: expected {dim} (--dim), got {}",
                    i + 1,
                    f.dim()
                );
            }
            let profile = calibrate(&samples, split)?;
            info!("calibrated from {} samples, lambda_d = {}", samples.len(), profile.lambda_d);
            write(&out, profile.to_json()?)
        }
        Cmd::Identify { profile, frames, threshold, out } => {
            let mut profile = CalibrationProfile::load(&profile)?;
            if let Some(t) = threshold {
                profile = profile.with_threshold(t);
            }
            let frames = frames_from_records(load_feature_log(&frames)?);
            let mut text = String::new();
            for frame in &frames {
                let features: Vec<FeatureVector> = frame.persons.iter().map(|(_, f)| f.clone()).collect();
                let r = identify(&features, &profile).with_context(|| format!("frame at t = {}", frame.t))?;
                text += &json_line(&serde_json::json!({
                    "t": frame.t,
                    "target_index": r.target_index,
                    "person_id": r.target_index.and_then(|i| frame.persons[i].0.clone()),
                    "distance": r.distance,
                    "distances": r.all_distances,
                }));
            }
            write(&out, text)
        }
        Cmd::TrainGesture { data, c, gamma, tol, max_iter, out } => {
            let gamma = parse_gamma(&gamma).map_err(|u| anyhow::anyhow!(u.0))?;
            let corpus = load_corpus(&data)?;
            let model = train(&corpus, &TrainConfig { c, gamma, tol, max_iter })?;
            info!("trained on {} samples", corpus.len());
            write(&out, model.to_json()?)
        }
        Cmd::EvalGesture { model, data, report } => {
            let model = GestureModel::load(&model)?;
            let corpus = load_corpus(&data)?;
            let metrics = eval_gesture(&model, &corpus)?;
            info!("gesture accuracy {:.4}", metrics.accuracy);
            write(&report, metrics.to_json()?)
        }
        Cmd::EvalReid { profiles, frames, report } => {
            let mut paths: Vec<PathBuf> = fs::read_dir(&profiles)
                .with_context(|| format!("reading profile directory {}", profiles.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            paths.sort();
            if paths.is_empty() {
                bail!("no *.json profiles in {}", profiles.display());
            }
            let loaded = paths
                .iter()
                .map(|p| {
                    let tag = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                    Ok((tag, CalibrationProfile::load(p)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let frames = frames_from_records(load_feature_log(&frames)?);
            let metrics = eval_reid(&loaded, &frames)?;
            info!("re-identification accuracy {:.4}", metrics.accuracy);
            write(&report, metrics.to_json()?)
        }
        Cmd::Simulate { scenario, seed, xi, t_exp, v_max, out, report } => {
            let mut s = Scenario::load(&scenario)?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            if let Some(xi) = xi {
                s.gesture.xi = xi;
            }
            if let Some(t) = t_exp {
                s.robot.t_exp = t;
            }
            if let Some(v) = v_max {
                s.robot.v_max = v;
            }
            let output = run_scenario(&s)?;
            info!("simulated {} ticks", output.report.ticks);
            let summary = output.report.to_json()?;
            write(&out, output.trace.to_csv())?;
            write(&report, summary)
        }
        Cmd::GenScenario { name, seed, distractors, out } => {
            let s = match name {
                PresetName::StraightLine => presets::straight_line(seed),
                PresetName::LPath => presets::l_path(seed),
                PresetName::GestureStop => presets::gesture_stop(seed),
                PresetName::Crowd => presets::crowd(seed, distractors),
            };
            write(&out, s.to_json()?)
        }
        Cmd::GenReidBenchmark {
            identities,
            dim,
            separation,
            calibration_frames,
            present_frames,
            absent_frames,
            drift,
            seed,
            out_dir,
        } => {
            let cfg = ReidBenchmarkConfig {
                identities,
                dim,
                separation,
                calibration_frames,
                present_frames,
                absent_frames,
                drift,
                seed,
                ..ReidBenchmarkConfig::default()
            };
            let bench = build_reid_benchmark(&cfg);
            let calib_dir = out_dir.join("calibration");
            fs::create_dir_all(&calib_dir).with_context(|| format!("creating {}", calib_dir.display()))?;
            for (i, s) in bench.subjects.iter().enumerate() {
                let mut buf = Vec::new();
                write_feature_log(&mut buf, &bench.calibration_records(i))?;
                write(&calib_dir.join(format!("{}.jsonl", s.tag)), buf)?;
            }
            let mut buf = Vec::new();
            write_feature_log(&mut buf, &frames_to_records(&bench.frames))?;
            write(&out_dir.join("test.jsonl"), buf)
        }
        Cmd::GenGestures { per_class, seed, out } => {
            let mut buf = Vec::new();
            write_corpus(&mut buf, &gen_corpus(per_class, seed, &LandmarkJitter::default()))?;
            write(&out, buf)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(Usage(msg)) = cli.command.validate() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
