mod common;

use common::{ref_distance, ref_mean_std};
use followme::reid::{
    calibrate, calibration_split, distances, feature_distance, identify, read_feature_log, write_feature_log,
    FeatureRecord, SIGMA_FLOOR,
};
use followme::{CalibrationProfile, Error, FeatureVector};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};

fn fv(v: Vec<f64>) -> FeatureVector {
    FeatureVector::new(v).unwrap()
}

fn profile(mu: Vec<f64>, sigma: Vec<f64>, mu_d: f64, sigma_d: f64) -> CalibrationProfile {
    CalibrationProfile::from_parts(mu, sigma, mu_d, sigma_d, 3, 3).unwrap()
}

#[test]
fn distance_matches_worked_examples() {
    let p = profile(vec![0.0, 0.0], vec![1.0, 2.0], 0.5, 0.1);
    assert_eq!(feature_distance(&fv(vec![0.0, 0.0]), &p).unwrap(), 0.0);
    // ((1/1)^2 + (2/2)^2) / 2 = 1
    assert_eq!(feature_distance(&fv(vec![1.0, 2.0]), &p).unwrap(), 1.0);
    // (9 + 4) / 2 = 6.5
    let d = feature_distance(&fv(vec![3.0, -4.0]), &p).unwrap();
    assert!((d - 6.5f64.sqrt()).abs() < 1e-15);
    assert!(matches!(
        feature_distance(&fv(vec![1.0]), &p),
        Err(Error::DimensionMismatch { expected: 2, actual: 1, .. })
    ));
}

#[test]
fn calibration_agrees_with_reference() {
    let mut rng = followme::rng::stream(17, &[]);
    let noise = Normal::new(0.0, 0.3).unwrap();
    let samples: Vec<FeatureVector> = (0..30)
        .map(|_| fv((0..8).map(|k| k as f64 + noise.sample(&mut rng)).collect()))
        .collect();
    let p = calibrate(&samples, 2.0 / 3.0).unwrap();
    assert_eq!(p.n_calibration, 20);
    assert_eq!(p.n_threshold, 10);
    for i in 0..8 {
        let col: Vec<f64> = samples[..20].iter().map(|s| s.as_slice()[i]).collect();
        let (m, s) = ref_mean_std(&col);
        assert!((p.mu[i] - m).abs() < 1e-12);
        assert!((p.sigma[i] - s).abs() < 1e-12);
    }
    let d: Vec<f64> = samples[20..].iter().map(|x| ref_distance(x.as_slice(), &p.mu, &p.sigma)).collect();
    let (mu_d, sigma_d) = ref_mean_std(&d);
    assert!((p.mu_d - mu_d).abs() < 1e-12);
    assert!((p.sigma_d - sigma_d).abs() < 1e-12);
    assert_eq!(p.lambda_d, p.mu_d + 2.0 * p.sigma_d);
}

#[test]
fn split_sizes() {
    assert_eq!(calibration_split(300, 2.0 / 3.0), 200);
    assert_eq!(calibration_split(9, 2.0 / 3.0), 6);
    assert_eq!(calibration_split(10, 2.0 / 3.0), 7);
}

#[test]
fn zero_variance_component_uses_floor() {
    let samples: Vec<FeatureVector> = (0..9).map(|k| fv(vec![2.0, k as f64])).collect();
    let p = calibrate(&samples, 2.0 / 3.0).unwrap();
    assert_eq!(p.sigma[0], SIGMA_FLOOR);
    assert!(p.sigma[1] > 1.0);
}

#[test]
fn identify_agrees_with_reference_argmin() {
    let mut rng = followme::rng::stream(3, &[]);
    for _ in 0..200 {
        let dim = rng.random_range(1..6);
        let mu: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sigma: Vec<f64> = (0..dim).map(|_| rng.random_range(0.1..2.0)).collect();
        let p = profile(mu.clone(), sigma.clone(), rng.random_range(0.0..2.0), rng.random_range(0.0..0.5));
        let people: Vec<FeatureVector> = (0..rng.random_range(0..6))
            .map(|_| fv((0..dim).map(|_| rng.random_range(-3.0..3.0)).collect()))
            .collect();
        let r = identify(&people, &p).unwrap();
        let d: Vec<f64> = people.iter().map(|x| ref_distance(x.as_slice(), &mu, &sigma)).collect();
        let mut best: Option<usize> = None;
        for (i, v) in d.iter().enumerate() {
            if best.is_none_or(|b| *v < d[b]) {
                best = Some(i);
            }
        }
        let expected = best.filter(|&b| d[b] <= p.lambda_d);
        assert_eq!(r.target_index, expected);
        for (a, b) in r.all_distances.iter().zip(&d) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn infinite_threshold_is_plain_argmin_and_zero_rejects() {
    let p = profile(vec![0.0], vec![1.0], 0.2, 0.1);
    let people = vec![fv(vec![5.0]), fv(vec![-2.0]), fv(vec![9.0])];
    assert_eq!(identify(&people, &p.with_threshold(f64::INFINITY)).unwrap().target_index, Some(1));
    assert_eq!(identify(&people, &p.with_threshold(0.0)).unwrap().target_index, None);
}

#[test]
fn profile_json_round_trip_and_rejections() {
    let p = profile(vec![0.5, -1.0], vec![0.2, 0.3], 1.1, 0.2);
    let text = p.to_json().unwrap();
    assert!(text.contains("\"schema_version\": 1"));
    assert_eq!(CalibrationProfile::from_json(&text).unwrap(), p);

    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["extra"] = serde_json::json!(1);
    assert!(CalibrationProfile::from_json(&v.to_string()).is_err());

    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["schema_version"] = serde_json::json!(99);
    assert!(CalibrationProfile::from_json(&v.to_string()).is_err());

    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["lambda_d"] = serde_json::json!(7.0);
    assert!(CalibrationProfile::from_json(&v.to_string()).is_err());
}

#[test]
fn feature_log_round_trip() {
    let records = vec![
        FeatureRecord { t: 0.0, person_id: Some("a".into()), subject: None, feature: fv(vec![0.1, 0.2]) },
        FeatureRecord { t: 0.1, person_id: None, subject: Some("a".into()), feature: fv(vec![0.3, -0.25]) },
    ];
    let mut buf = Vec::new();
    write_feature_log(&mut buf, &records).unwrap();
    let back = read_feature_log(buf.as_slice()).unwrap();
    assert_eq!(back, records);
    let bad = "{\"t\": 0.0, \"feature\": [1.0]}\n{\"t\": 1.0, \"feature\": \"x\"}\n";
    let err = read_feature_log(bad.as_bytes()).unwrap_err().to_string();
    assert!(err.contains("line 2") && err.contains("feature"), "{err}");
}

#[test]
fn threshold_distances_mostly_accepted() {
    let g = followme::harness::EmbeddingGenerator::from_seed(64, 4, 0.05, 0.0);
    let mut rng = followme::rng::stream(4, &[1]);
    let samples: Vec<FeatureVector> = (0..300).map(|k| g.sample(k as f64 * 0.1, &mut rng)).collect();
    let p = calibrate(&samples, 2.0 / 3.0).unwrap();
    let d = distances(&samples[200..], &p).unwrap();
    let inside = d.iter().filter(|v| **v <= p.lambda_d).count() as f64 / d.len() as f64;
    assert!(inside >= 0.9, "{inside}");
}

fn profile_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..12).prop_flat_map(|d| {
        (
            prop::collection::vec(-5.0f64..5.0, d),
            prop::collection::vec(0.01f64..3.0, d),
            prop::collection::vec(-5.0f64..5.0, d),
        )
    })
}

proptest! {
    #[test]
    fn distance_is_permutation_invariant((mu, sigma, x) in profile_strategy(), seed in any::<u64>()) {
        let p = profile(mu.clone(), sigma.clone(), 1.0, 0.1);
        let d = feature_distance(&fv(x.clone()), &p).unwrap();
        let mut idx: Vec<usize> = (0..mu.len()).collect();
        let mut rng = followme::rng::stream(seed, &[]);
        for i in (1..idx.len()).rev() {
            idx.swap(i, rng.random_range(0..=i));
        }
        let perm = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let q = profile(perm(&mu), perm(&sigma), 1.0, 0.1);
        let dp = feature_distance(&fv(perm(&x)), &q).unwrap();
        prop_assert!((d - dp).abs() <= 1e-12 * d.max(1.0));
    }

    #[test]
    fn distance_is_residual_scale_invariant((mu, sigma, x) in profile_strategy(), k in 0.1f64..10.0) {
        let p = profile(mu.clone(), sigma.clone(), 1.0, 0.1);
        let d = feature_distance(&fv(x.clone()), &p).unwrap();
        let xs: Vec<f64> = x.iter().zip(&mu).map(|(xi, m)| m + k * (xi - m)).collect();
        let ss: Vec<f64> = sigma.iter().map(|s| k * s).collect();
        let q = profile(mu.clone(), ss, 1.0, 0.1);
        let ds = feature_distance(&fv(xs), &q).unwrap();
        prop_assert!((d - ds).abs() <= 1e-9 * d.max(1.0));
    }

    #[test]
    fn distance_at_mean_plus_sigma_is_one((mu, sigma, _x) in profile_strategy()) {
        let p = profile(mu.clone(), sigma.clone(), 1.0, 0.1);
        prop_assert_eq!(feature_distance(&fv(mu.clone()), &p).unwrap(), 0.0);
        let x: Vec<f64> = mu.iter().zip(&sigma).map(|(m, s)| m + s).collect();
        prop_assert!((feature_distance(&fv(x), &p).unwrap() - 1.0).abs() <= 1e-12);
    }
}
