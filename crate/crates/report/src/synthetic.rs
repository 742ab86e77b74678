//! Synthetic checkup cohort with the source file's schema, for demos,
//! tests and timing runs when the public file is not at hand.
//!
//! Marginals loosely follow a middle-aged screening population. Risk is a
//! logistic function of age, blood pressure, cholesterol, weight and
//! activity. A small share of rows carries the entry errors seen in real
//! checkup data (swapped or mistyped pressures, implausible heights).

use cardio_core::ingest::RawRecord;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn normal<R: Rng>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    Normal::new(mean, sd).expect("positive sd").sample(rng)
}

fn pick<R: Rng>(rng: &mut R, weights: &[f64]) -> i64 {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i as i64 + 1;
        }
    }
    weights.len() as i64
}

fn record<R: Rng>(rng: &mut R, id: i64) -> RawRecord {
    let age = rng.gen_range(39.0..65.0);
    let male = rng.gen_bool(0.35);
    let height = normal(rng, if male { 170.0 } else { 161.0 }, 7.0).round();
    let weight =
        (normal(rng, 74.0 + 0.4 * (height - 164.0), 13.0).clamp(40.0, 180.0) * 10.0).round() / 10.0;
    let bmi = weight / (height / 100.0).powi(2);
    let cholesterol = pick(rng, &[0.75, 0.13, 0.12]);
    let gluc = pick(rng, &[0.85, 0.07, 0.08]);
    let smoke = rng.gen_bool(if male { 0.22 } else { 0.02 }) as i64;
    let alco = rng.gen_bool(if male { 0.11 } else { 0.03 }) as i64;
    let active = rng.gen_bool(0.8) as i64;

    let mut ap_hi = 104.0
        + 0.45 * (age - 40.0)
        + 0.6 * (bmi - 25.0)
        + 4.0 * (cholesterol - 1) as f64
        + normal(rng, 0.0, 13.0);
    // readings cluster on multiples of ten
    ap_hi = if rng.gen_bool(0.6) {
        (ap_hi / 10.0).round() * 10.0
    } else {
        ap_hi.round()
    };
    let mut ap_lo = (0.5 * ap_hi + 20.0 + normal(rng, 0.0, 6.0)).round();
    if rng.gen_bool(0.6) {
        ap_lo = (ap_lo / 10.0).round() * 10.0;
    }
    ap_lo = ap_lo.min(ap_hi - 10.0);

    let z = -0.25
        + 0.055 * (age - 53.0)
        + 0.05 * (ap_hi - 127.0)
        + 0.45 * (cholesterol - 1) as f64
        + 0.15 * (gluc - 1) as f64
        + 0.012 * (weight - 74.0)
        - 0.2 * active as f64
        - 0.1 * smoke as f64
        - 0.1 * alco as f64;
    let cardio = rng.gen_bool(1.0 / (1.0 + (-z).exp())) as i64;

    RawRecord {
        id,
        age_days: Some((age * 365.25).round() as i64),
        gender: Some(if male { 2 } else { 1 }),
        height_cm: Some(height),
        weight_kg: Some(weight),
        ap_hi: Some(ap_hi),
        ap_lo: Some(ap_lo),
        cholesterol: Some(cholesterol),
        gluc: Some(gluc),
        smoke: Some(smoke),
        alco: Some(alco),
        active: Some(active),
        cardio,
    }
}

fn corrupt<R: Rng>(rng: &mut R, r: &mut RawRecord) {
    match rng.gen_range(0..6) {
        0 => r.ap_hi = r.ap_hi.map(|v| v * 10.0),
        1 => r.ap_lo = r.ap_lo.map(|v| v * 10.0),
        2 => std::mem::swap(&mut r.ap_hi, &mut r.ap_lo),
        3 => r.ap_hi = r.ap_hi.map(|v| -v),
        4 => r.height_cm = Some(rng.gen_range(55.0..99.0f64).round()),
        _ => r.weight_kg = Some(rng.gen_range(10.0..29.0f64).round()),
    }
}

/// `n` records with ids `0..n`. About 2.7% are corrupted so that cleaning
/// keeps roughly 97% of rows; a few cells are blank to exercise imputation.
pub fn synthetic_cohort(n: usize, seed: u64) -> Vec<RawRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n as i64)
        .map(|id| {
            let mut r = record(&mut rng, id);
            if rng.gen_bool(0.027) {
                corrupt(&mut rng, &mut r);
            } else if rng.gen_bool(0.002) {
                r.weight_kg = None;
            } else if rng.gen_bool(0.002) {
                r.cholesterol = None;
            }
            r
        })
        .collect()
}
