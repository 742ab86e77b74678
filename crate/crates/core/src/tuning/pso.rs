use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::space::{Config, SearchSpace};
use super::TrialLog;
use crate::error::{Error, Result};

/// Particle swarm with linearly time-varying inertia and acceleration
/// coefficients. Positions live in the unit cube of the search space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsoSettings {
    pub swarm_size: usize,
    pub iterations: usize,
    /// (start, end) of the inertia schedule.
    pub inertia: (f64, f64),
    pub cognitive: (f64, f64),
    pub social: (f64, f64),
    /// Velocity bound as a fraction of each axis range.
    pub max_velocity: f64,
}

impl Default for PsoSettings {
    fn default() -> Self {
        PsoSettings {
            swarm_size: 20,
            iterations: 10,
            inertia: (0.9, 0.4),
            cognitive: (2.5, 0.5),
            social: (0.5, 2.5),
            max_velocity: 0.2,
        }
    }
}

fn lerp((a, b): (f64, f64), t: f64) -> f64 {
    a + (b - a) * t
}

#[derive(Debug, Clone, PartialEq)]
pub struct Swarm {
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub personal_best: Vec<(Vec<f64>, f64)>,
    pub global_best: Option<(Vec<f64>, f64)>,
    pub iteration: usize,
    pub settings: PsoSettings,
    rng: ChaCha8Rng,
}

impl Swarm {
    pub fn new(dim: usize, settings: PsoSettings, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vmax = settings.max_velocity;
        let positions: Vec<Vec<f64>> = (0..settings.swarm_size)
            .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let velocities = (0..settings.swarm_size)
            .map(|_| (0..dim).map(|_| rng.gen_range(-vmax..=vmax)).collect())
            .collect();
        let personal_best = positions.iter().map(|p| (p.clone(), f64::NEG_INFINITY)).collect();
        Swarm {
            positions,
            velocities,
            personal_best,
            global_best: None,
            iteration: 0,
            settings,
            rng,
        }
    }

    /// Coefficients `(w, c1, c2)` at the current iteration.
    pub fn coefficients(&self) -> (f64, f64, f64) {
        let t = if self.settings.iterations > 1 {
            (self.iteration as f64 / (self.settings.iterations - 1) as f64).min(1.0)
        } else {
            0.0
        };
        (
            lerp(self.settings.inertia, t),
            lerp(self.settings.cognitive, t),
            lerp(self.settings.social, t),
        )
    }

    /// Records scores for the current positions; `None` marks a failed evaluation.
    pub fn observe(&mut self, scores: &[Option<f64>]) {
        for (i, s) in scores.iter().enumerate() {
            if let Some(s) = *s {
                if s > self.personal_best[i].1 {
                    self.personal_best[i] = (self.positions[i].clone(), s);
                }
                if self.global_best.as_ref().is_none_or(|g| s > g.1) {
                    self.global_best = Some((self.positions[i].clone(), s));
                }
            }
        }
    }

    /// Velocity and position update with clamping and reflection at the walls.
    pub fn step(&mut self) {
        self.iteration += 1;
        let (w, c1, c2) = self.coefficients();
        let vmax = self.settings.max_velocity;
        let gbest = self.global_best.as_ref().map(|g| g.0.clone());
        for i in 0..self.positions.len() {
            for j in 0..self.positions[i].len() {
                let x = self.positions[i][j];
                let pb = self.personal_best[i].0[j];
                let gb = gbest.as_ref().map_or(x, |g| g[j]);
                let r1: f64 = self.rng.gen();
                let r2: f64 = self.rng.gen();
                let mut v = w * self.velocities[i][j] + c1 * r1 * (pb - x) + c2 * r2 * (gb - x);
                v = v.clamp(-vmax, vmax);
                let mut nx = x + v;
                if nx < 0.0 {
                    nx = -nx;
                    v = -v;
                } else if nx > 1.0 {
                    nx = 2.0 - nx;
                    v = -v;
                }
                self.positions[i][j] = nx.clamp(0.0, 1.0);
                self.velocities[i][j] = v;
            }
        }
    }
}

/// Evaluates `swarm_size × iterations` configurations; the initial swarm is iteration 1.
pub fn pso_search<F>(space: &SearchSpace, settings: &PsoSettings, seed: u64, mut objective: F) -> Result<TrialLog>
where
    F: FnMut(&Config) -> Result<(f64, f64)>,
{
    space.validate()?;
    space.require_numeric("particle swarm search")?;
    if settings.iterations == 0 || settings.swarm_size == 0 {
        return Err(Error::config("particle swarm needs at least one particle and one iteration"));
    }
    let mut swarm = Swarm::new(space.dim(), *settings, seed);
    let mut log = TrialLog::new("pso", settings.swarm_size * settings.iterations, seed);
    for it in 0..settings.iterations {
        if it > 0 {
            swarm.step();
        }
        let scores: Vec<Option<f64>> = swarm
            .positions
            .clone()
            .iter()
            .map(|p| log.record(space.from_unit(p), &mut objective))
            .collect();
        swarm.observe(&scores);
    }
    Ok(log)
}
