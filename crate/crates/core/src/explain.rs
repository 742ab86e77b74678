//! Permutation importance and Monte-Carlo Shapley values.
//!
//! Both work on feature units: a plain column, or a one-hot group treated
//! as one feature.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{FeatureFrame, Matrix};
use crate::learners::ModelHandle;
use crate::tuning::{mean_sd, Metric};

/// Feature unit: display name and the matrix columns it covers.
pub type Unit = (String, Vec<usize>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub name: String,
    pub mean_drop: f64,
    pub sd: f64,
    /// Repeats whose permuted score was undefined.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub metric: Metric,
    pub baseline: f64,
    pub repeats: usize,
    pub seed: u64,
    pub features: Vec<FeatureImportance>,
}

impl ImportanceReport {
    /// Features sorted by decreasing mean drop.
    pub fn ranked(&self) -> Vec<&FeatureImportance> {
        let mut v: Vec<&FeatureImportance> = self.features.iter().collect();
        v.sort_by(|a, b| b.mean_drop.total_cmp(&a.mean_drop));
        v
    }
}

fn name_hash(name: &str) -> u64 {
    // FNV-1a
    name.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Permutation importance for any batch predictor. The permutation stream
/// of a unit depends only on its name and the seed.
pub fn permutation_importance_with<P>(
    predict: P,
    x: &Matrix,
    labels: &[u8],
    units: &[Unit],
    metric: Metric,
    repeats: usize,
    seed: u64,
) -> Result<ImportanceReport>
where
    P: Fn(&Matrix) -> Vec<f64> + Sync,
{
    if repeats == 0 {
        return Err(Error::config("permutation importance needs at least one repeat"));
    }
    let baseline = metric.score(&predict(x), labels)?;
    let n = x.rows();
    let features = units
        .par_iter()
        .map(|(name, cols)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ name_hash(name));
            let mut work = x.clone();
            let mut drops = Vec::with_capacity(repeats);
            let mut skipped = 0;
            let mut perm: Vec<usize> = (0..n).collect();
            for _ in 0..repeats {
                perm.shuffle(&mut rng);
                for (i, &src) in perm.iter().enumerate() {
                    for &c in cols {
                        work.set(i, c, x.get(src, c));
                    }
                }
                match metric.score(&predict(&work), labels) {
                    Ok(s) if s.is_finite() => drops.push(baseline - s),
                    _ => skipped += 1,
                }
            }
            let (mean_drop, sd) = if drops.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                mean_sd(&drops)
            };
            FeatureImportance {
                name: name.clone(),
                mean_drop,
                sd,
                skipped,
            }
        })
        .collect();
    Ok(ImportanceReport {
        metric,
        baseline,
        repeats,
        seed,
        features,
    })
}

pub fn permutation_importance(
    model: &ModelHandle,
    frame: &FeatureFrame,
    metric: Metric,
    repeats: usize,
    seed: u64,
) -> Result<ImportanceReport> {
    // layout check up front
    model.predict_proba(&frame.subset(&[0]))?;
    permutation_importance_with(
        |m| model.predict_matrix(m),
        &frame.matrix,
        &frame.target,
        &frame.feature_units(),
        metric,
        repeats,
        seed,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitAttribution {
    pub name: String,
    pub phi: f64,
    pub standard_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyAttribution {
    pub instance: usize,
    pub features: Vec<UnitAttribution>,
    /// Mean model output over the whole background.
    pub base_value: f64,
    pub output: f64,
    pub n_samples: usize,
    /// Standard error of `Σφ − (output − base_value)`.
    pub efficiency_se: f64,
}

impl ShapleyAttribution {
    pub fn phi_sum(&self) -> f64 {
        self.features.iter().map(|f| f.phi).sum()
    }
}

pub const MIN_BACKGROUND: usize = 32;
const CHUNK: usize = 64;

/// Permutation-sampling Shapley estimate for one instance. Each sample
/// draws a unit order and a background row, then switches units from the
/// background row to the instance one at a time.
pub fn shapley_mc_with<P>(
    predict: P,
    instance: &[f64],
    instance_index: usize,
    background: &Matrix,
    units: &[Unit],
    n_samples: usize,
    seed: u64,
) -> Result<ShapleyAttribution>
where
    P: Fn(&Matrix) -> Vec<f64> + Sync,
{
    if background.rows() < MIN_BACKGROUND {
        return Err(Error::domain(format!(
            "background has {} rows; need at least {MIN_BACKGROUND}",
            background.rows()
        )));
    }
    if instance.len() != background.cols() {
        return Err(Error::domain("instance and background widths differ"));
    }
    if n_samples == 0 {
        return Err(Error::config("Shapley estimation needs at least one sample"));
    }
    let m = units.len();
    let d = instance.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plans: Vec<(Vec<usize>, usize)> = (0..n_samples)
        .map(|_| {
            let mut order: Vec<usize> = (0..m).collect();
            order.shuffle(&mut rng);
            (order, rng.gen_range(0..background.rows()))
        })
        .collect();

    // per sample: marginal of each unit and f(background row)
    let per_sample: Vec<(Vec<f64>, f64)> = plans
        .par_chunks(CHUNK)
        .flat_map_iter(|chunk| {
            let mut data = Vec::with_capacity(chunk.len() * (m + 1) * d);
            for (order, b) in chunk {
                let mut z = background.row(*b).to_vec();
                data.extend_from_slice(&z);
                for &u in order {
                    for &c in &units[u].1 {
                        z[c] = instance[c];
                    }
                    data.extend_from_slice(&z);
                }
            }
            let batch = Matrix::from_vec(chunk.len() * (m + 1), d, data).expect("batch shape");
            let out = predict(&batch);
            chunk
                .iter()
                .enumerate()
                .map(|(s, (order, _))| {
                    let f = &out[s * (m + 1)..(s + 1) * (m + 1)];
                    let mut marg = vec![0.0; m];
                    for (step, &u) in order.iter().enumerate() {
                        marg[u] = f[step + 1] - f[step];
                    }
                    (marg, f[0])
                })
                .collect::<Vec<_>>()
        })
        .collect();

    let features = units
        .iter()
        .enumerate()
        .map(|(u, (name, _))| {
            let vals: Vec<f64> = per_sample.iter().map(|s| s.0[u]).collect();
            let (phi, sd) = mean_sd(&vals);
            UnitAttribution {
                name: name.clone(),
                phi,
                standard_error: sd / (n_samples as f64).sqrt(),
            }
        })
        .collect();
    let bg_out = predict(background);
    let base_value = bg_out.iter().sum::<f64>() / bg_out.len() as f64;
    let output = predict(&Matrix::from_vec(1, d, instance.to_vec())?)[0];
    let sampled: Vec<f64> = per_sample.iter().map(|s| s.1).collect();
    let (_, sd_sampled) = mean_sd(&sampled);
    Ok(ShapleyAttribution {
        instance: instance_index,
        features,
        base_value,
        output,
        n_samples,
        efficiency_se: sd_sampled / (n_samples as f64).sqrt(),
    })
}

pub fn shapley_mc(
    model: &ModelHandle,
    frame: &FeatureFrame,
    instance: usize,
    background: &FeatureFrame,
    n_samples: usize,
    seed: u64,
) -> Result<ShapleyAttribution> {
    model.predict_proba(&background.subset(&[0]))?;
    if background.column_names != frame.column_names {
        return Err(Error::ColumnMismatch("background and frame layouts differ".into()));
    }
    shapley_mc_with(
        |m| model.predict_matrix(m),
        frame.matrix.row(instance),
        instance,
        &background.matrix,
        &frame.feature_units(),
        n_samples,
        seed,
    )
}
