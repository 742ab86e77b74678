use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::space::{Config, SearchSpace};
use super::TrialLog;
use crate::error::{Error, Result};
use crate::special::{normal_cdf, normal_pdf};

pub const LENGTHSCALES: [f64; 5] = [0.05, 0.1, 0.2, 0.4, 0.8];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BayesSettings {
    pub budget: usize,
    pub initial_points: usize,
    pub candidates: usize,
    pub jitter: f64,
}

impl Default for BayesSettings {
    fn default() -> Self {
        BayesSettings {
            budget: 30,
            initial_points: 5,
            candidates: 1000,
            jitter: 1e-6,
        }
    }
}

fn sq_exp(a: &[f64], b: &[f64], lengthscale: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-0.5 * d2 / (lengthscale * lengthscale)).exp()
}

/// Zero-mean GP with unit signal variance on standardized targets.
pub struct GaussianProcess {
    xs: Vec<Vec<f64>>,
    lengthscale: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    y_mean: f64,
    y_scale: f64,
    pub log_marginal_likelihood: f64,
}

impl GaussianProcess {
    pub fn fit(xs: &[Vec<f64>], ys: &[f64], lengthscale: f64, jitter: f64) -> Result<Self> {
        let n = xs.len();
        if n == 0 || n != ys.len() {
            return Err(Error::domain("GP needs matching, non-empty inputs"));
        }
        let y_mean = ys.iter().sum::<f64>() / n as f64;
        let var = ys.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / n as f64;
        let y_scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        let y = DVector::from_iterator(n, ys.iter().map(|v| (v - y_mean) / y_scale));
        let k = DMatrix::from_fn(n, n, |i, j| sq_exp(&xs[i], &xs[j], lengthscale) + if i == j { jitter } else { 0.0 });
        let chol = Cholesky::new(k).ok_or_else(|| Error::domain("GP kernel matrix not positive definite"))?;
        let alpha = chol.solve(&y);
        let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
        let lml = -0.5 * y.dot(&alpha) - log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
        Ok(GaussianProcess {
            xs: xs.to_vec(),
            lengthscale,
            chol,
            alpha,
            y_mean,
            y_scale,
            log_marginal_likelihood: lml,
        })
    }

    /// Fits at every lengthscale on the grid and keeps the highest marginal likelihood.
    pub fn fit_best(xs: &[Vec<f64>], ys: &[f64], jitter: f64) -> Result<Self> {
        let mut best: Option<GaussianProcess> = None;
        for &l in &LENGTHSCALES {
            if let Ok(gp) = GaussianProcess::fit(xs, ys, l, jitter) {
                if best
                    .as_ref()
                    .is_none_or(|b| gp.log_marginal_likelihood > b.log_marginal_likelihood)
                {
                    best = Some(gp);
                }
            }
        }
        best.ok_or_else(|| Error::domain("GP fit failed at every lengthscale"))
    }

    pub fn lengthscale(&self) -> f64 {
        self.lengthscale
    }

    /// Posterior mean and standard deviation in the original target units.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let kx = DVector::from_iterator(self.xs.len(), self.xs.iter().map(|xi| sq_exp(xi, x, self.lengthscale)));
        let mean = kx.dot(&self.alpha);
        let v = self.chol.l().solve_lower_triangular(&kx).expect("triangular factor is invertible");
        let var = (1.0 - v.dot(&v)).max(0.0);
        (self.y_mean + self.y_scale * mean, self.y_scale * var.sqrt())
    }
}

/// EI for maximization over the incumbent `best`.
pub fn expected_improvement(mean: f64, sd: f64, best: f64) -> f64 {
    let imp = mean - best;
    if sd <= 1e-12 {
        return imp.max(0.0);
    }
    let z = imp / sd;
    (imp * normal_cdf(z) + sd * normal_pdf(z)).max(0.0)
}

/// GP-EI search in the unit cube of a numeric search space.
pub fn bayes_opt<F>(space: &SearchSpace, settings: &BayesSettings, seed: u64, mut objective: F) -> Result<TrialLog>
where
    F: FnMut(&Config) -> Result<(f64, f64)>,
{
    space.validate()?;
    space.require_numeric("Bayesian optimization")?;
    if settings.budget < settings.initial_points + 1 {
        return Err(Error::config(format!(
            "Bayesian optimization budget {} must exceed the {} initial points",
            settings.budget, settings.initial_points
        )));
    }
    let d = space.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = TrialLog::new("bayes", settings.budget, seed);
    let mut xs: Vec<Vec<f64>> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut observe = |u: Vec<f64>, log: &mut TrialLog, xs: &mut Vec<Vec<f64>>, ys: &mut Vec<f64>| {
        let config = space.from_unit(&u);
        // integer axes are observed where they were evaluated
        let snapped = space.to_unit(&config);
        if let Some(v) = log.record(config, &mut objective) {
            xs.push(snapped);
            ys.push(v);
        }
    };
    for _ in 0..settings.initial_points {
        let u: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        observe(u, &mut log, &mut xs, &mut ys);
    }
    while log.trials.len() < settings.budget {
        let candidates: Vec<Vec<f64>> = (0..settings.candidates)
            .map(|_| (0..d).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let next = if xs.is_empty() {
            candidates[0].clone()
        } else {
            let gp = GaussianProcess::fit_best(&xs, &ys, settings.jitter)?;
            let best = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut pick = 0;
            let mut pick_ei = f64::NEG_INFINITY;
            for (i, c) in candidates.iter().enumerate() {
                let (m, s) = gp.predict(c);
                let ei = expected_improvement(m, s, best);
                if ei > pick_ei {
                    pick_ei = ei;
                    pick = i;
                }
            }
            candidates[pick].clone()
        };
        observe(next, &mut log, &mut xs, &mut ys);
    }
    Ok(log)
}
