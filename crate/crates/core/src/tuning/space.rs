use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One hyperparameter assignment, keyed by name.
pub type Config = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Continuous {
        min: f64,
        max: f64,
        #[serde(default)]
        scale: Scale,
        /// Explicit points used by grid search.
        #[serde(default)]
        grid: Option<Vec<f64>>,
    },
    Integer {
        min: i64,
        max: i64,
        #[serde(default)]
        scale: Scale,
    },
    Categorical {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    #[serde(flatten)]
    pub domain: Domain,
}

impl Axis {
    pub fn continuous(name: &str, min: f64, max: f64, scale: Scale) -> Self {
        Axis {
            name: name.to_string(),
            domain: Domain::Continuous {
                min,
                max,
                scale,
                grid: None,
            },
        }
    }

    pub fn integer(name: &str, min: i64, max: i64) -> Self {
        Axis {
            name: name.to_string(),
            domain: Domain::Integer {
                min,
                max,
                scale: Scale::Linear,
            },
        }
    }

    pub fn log_integer(name: &str, min: i64, max: i64) -> Self {
        Axis {
            name: name.to_string(),
            domain: Domain::Integer {
                min,
                max,
                scale: Scale::Log,
            },
        }
    }

    pub fn categorical(name: &str, values: &[f64]) -> Self {
        Axis {
            name: name.to_string(),
            domain: Domain::Categorical {
                values: values.to_vec(),
            },
        }
    }

    pub fn with_grid(mut self, points: &[f64]) -> Self {
        if let Domain::Continuous { grid, .. } = &mut self.domain {
            *grid = Some(points.to_vec());
        }
        self
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::config(format!("search axis {}: {msg}", self.name)));
        match &self.domain {
            Domain::Continuous { min, max, scale, grid } => {
                if !min.is_finite() || !max.is_finite() || min >= max {
                    return bad(format!("bounds [{min}, {max}] must be finite with min < max"));
                }
                if *scale == Scale::Log && *min <= 0.0 {
                    return bad("log scale needs a positive lower bound".into());
                }
                if let Some(g) = grid {
                    if g.is_empty() {
                        return bad("explicit grid is empty".into());
                    }
                    if let Some(v) = g.iter().find(|v| !(**v >= *min && **v <= *max)) {
                        return bad(format!("grid point {v} outside [{min}, {max}]"));
                    }
                }
            }
            Domain::Integer { min, max, scale } => {
                if min >= max {
                    return bad(format!("bounds [{min}, {max}] need min < max"));
                }
                if *scale == Scale::Log && *min <= 0 {
                    return bad("log scale needs a positive lower bound".into());
                }
            }
            Domain::Categorical { values } => {
                if values.is_empty() {
                    return bad("no categorical values".into());
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return bad("categorical values must be finite".into());
                }
            }
        }
        Ok(())
    }

    /// Uniform draw; log-uniform on log axes.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match &self.domain {
            Domain::Continuous { min, max, scale, .. } => match scale {
                Scale::Linear => rng.gen_range(*min..=*max),
                Scale::Log => rng.gen_range(min.ln()..=max.ln()).exp().clamp(*min, *max),
            },
            Domain::Integer { min, max, scale } => match scale {
                Scale::Linear => rng.gen_range(*min..=*max) as f64,
                Scale::Log => {
                    let lo = (*min as f64 - 0.5).max(0.5).ln();
                    let hi = (*max as f64 + 0.5).ln();
                    rng.gen_range(lo..hi).exp().round().clamp(*min as f64, *max as f64)
                }
            },
            Domain::Categorical { values } => *values.choose(rng).expect("validated non-empty"),
        }
    }

    fn is_numeric(&self) -> bool {
        !matches!(self.domain, Domain::Categorical { .. })
    }

    /// Maps a value into `[0, 1]` (log axes in log space).
    pub fn to_unit(&self, v: f64) -> f64 {
        let (lo, hi, scale) = self.numeric_bounds();
        let (v, lo, hi) = match scale {
            Scale::Linear => (v, lo, hi),
            Scale::Log => (v.ln(), lo.ln(), hi.ln()),
        };
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    }

    /// Inverse of [`Axis::to_unit`]; integer axes are rounded.
    pub fn from_unit(&self, u: f64) -> f64 {
        let (lo, hi, scale) = self.numeric_bounds();
        let u = u.clamp(0.0, 1.0);
        let v = match scale {
            Scale::Linear => lo + u * (hi - lo),
            Scale::Log => (lo.ln() + u * (hi.ln() - lo.ln())).exp(),
        };
        let v = v.clamp(lo, hi);
        match self.domain {
            Domain::Integer { .. } => v.round(),
            _ => v,
        }
    }

    fn numeric_bounds(&self) -> (f64, f64, Scale) {
        match &self.domain {
            Domain::Continuous { min, max, scale, .. } => (*min, *max, *scale),
            Domain::Integer { min, max, scale } => (*min as f64, *max as f64, *scale),
            Domain::Categorical { .. } => panic!("axis {} is categorical", self.name),
        }
    }

    fn points(&self) -> Result<Vec<f64>> {
        match &self.domain {
            Domain::Continuous { grid: Some(g), .. } => Ok(g.clone()),
            Domain::Continuous { grid: None, .. } => Err(Error::config(format!(
                "grid search needs explicit grid points for continuous axis {}",
                self.name
            ))),
            Domain::Integer { min, max, .. } => Ok((*min..=*max).map(|v| v as f64).collect()),
            Domain::Categorical { values } => Ok(values.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub axes: Vec<Axis>,
}

impl SearchSpace {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        let space = SearchSpace { axes };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::config("search space has no axes"));
        }
        for (i, a) in self.axes.iter().enumerate() {
            a.validate()?;
            if self.axes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::config(format!("search axis {} declared twice", a.name)));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Config {
        self.axes.iter().map(|a| (a.name.clone(), a.sample(rng))).collect()
    }

    /// Errors if any axis is categorical.
    pub fn require_numeric(&self, strategy: &str) -> Result<()> {
        match self.axes.iter().find(|a| !a.is_numeric()) {
            Some(a) => Err(Error::config(format!(
                "{strategy} needs continuous or integer axes; {} is categorical",
                a.name
            ))),
            None => Ok(()),
        }
    }

    pub fn from_unit(&self, u: &[f64]) -> Config {
        self.axes
            .iter()
            .zip(u)
            .map(|(a, &v)| (a.name.clone(), a.from_unit(v)))
            .collect()
    }

    pub fn to_unit(&self, config: &Config) -> Vec<f64> {
        self.axes.iter().map(|a| a.to_unit(config[&a.name])).collect()
    }

    /// Number of grid points, saturating.
    pub fn grid_size(&self) -> Result<usize> {
        let mut n = 1usize;
        for a in &self.axes {
            n = n.saturating_mul(a.points()?.len());
        }
        Ok(n)
    }

    /// Cartesian product with the first axis varying slowest.
    pub fn grid(&self) -> Result<Vec<Config>> {
        let points: Vec<Vec<f64>> = self.axes.iter().map(|a| a.points()).collect::<Result<_>>()?;
        let mut out: Vec<Config> = vec![Config::new()];
        for (axis, pts) in self.axes.iter().zip(&points) {
            let mut next = Vec::with_capacity(out.len() * pts.len());
            for c in &out {
                for &p in pts {
                    let mut c = c.clone();
                    c.insert(axis.name.clone(), p);
                    next.push(c);
                }
            }
            out = next;
        }
        Ok(out)
    }
}

/// `key=value` pairs joined by `;`.
pub fn format_config(config: &Config) -> String {
    config
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_bad_axes() {
        assert!(SearchSpace::new(vec![Axis::continuous("a", 1.0, 1.0, Scale::Linear)]).is_err());
        assert!(SearchSpace::new(vec![Axis::continuous("a", 0.0, 1.0, Scale::Log)]).is_err());
        assert!(SearchSpace::new(vec![Axis::categorical("a", &[])]).is_err());
        assert!(SearchSpace::new(vec![Axis::integer("a", 1, 3), Axis::integer("a", 1, 3)]).is_err());
    }

    #[test]
    fn grid_order_is_lexicographic() {
        let s = SearchSpace::new(vec![Axis::integer("a", 1, 3), Axis::categorical("b", &[0.5, 0.7])]).unwrap();
        let g = s.grid().unwrap();
        assert_eq!(g.len(), 6);
        let pairs: Vec<(f64, f64)> = g.iter().map(|c| (c["a"], c["b"])).collect();
        assert_eq!(pairs[0], (1.0, 0.5));
        assert_eq!(pairs[1], (1.0, 0.7));
        assert_eq!(pairs[5], (3.0, 0.7));
    }

    #[test]
    fn continuous_grid_needs_points() {
        let s = SearchSpace::new(vec![Axis::continuous("a", 0.0, 1.0, Scale::Linear)]).unwrap();
        assert!(s.grid().is_err());
    }

    #[test]
    fn unit_round_trip() {
        let a = Axis::continuous("lr", 0.01, 0.3, Scale::Log);
        for v in [0.01, 0.05, 0.3] {
            assert!((a.from_unit(a.to_unit(v)) - v).abs() < 1e-12);
        }
        let i = Axis::integer("depth", 3, 10);
        assert_eq!(i.from_unit(0.0), 3.0);
        assert_eq!(i.from_unit(1.0), 10.0);
        assert_eq!(i.from_unit(i.to_unit(7.0)), 7.0);
    }

    #[test]
    fn samples_respect_bounds() {
        let s = SearchSpace::new(vec![
            Axis::continuous("c", -2.0, 3.0, Scale::Linear),
            Axis::continuous("l", 1e-3, 10.0, Scale::Log),
            Axis::integer("i", 2, 9),
            Axis::log_integer("li", 50, 1000),
            Axis::categorical("k", &[1.0, 4.0]),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let c = s.sample(&mut rng);
            assert!((-2.0..=3.0).contains(&c["c"]));
            assert!((1e-3..=10.0).contains(&c["l"]));
            assert!((2.0..=9.0).contains(&c["i"]) && c["i"].fract() == 0.0);
            assert!((50.0..=1000.0).contains(&c["li"]) && c["li"].fract() == 0.0);
            assert!(c["k"] == 1.0 || c["k"] == 4.0);
        }
    }
}
