//! Synthetic streams.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeneratorError {
    #[error("universe must be at least 1")]
    EmptyUniverse,
    #[error("planted mass {0} must lie in [0, 1]")]
    Mass(f64),
    #[error("planted item {item} outside 1..={universe}")]
    Item { item: u32, universe: u32 },
    #[error("zipf exponent {0} must be positive and finite")]
    Exponent(f64),
    #[error("cannot parse generator {0:?} (uniform, zipf:S, planted:ITEM:MASS, distinct)")]
    Syntax(String),
}

/// Shape of a synthetic stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorKind {
    /// Independent uniform ids.
    Uniform,
    /// Id `k` with probability proportional to `k^-s`.
    Zipf { s: f64 },
    /// `ceil(mass * m)` copies of `item` at uniformly random positions; the
    /// other positions uniform.
    Planted { item: u32, mass: f64 },
    /// Ids `1, 2, ..., n, 1, 2, ...`: every window of at most `n` updates
    /// is all distinct.
    Distinct,
}

impl std::str::FromStr for GeneratorKind {
    type Err = GeneratorError;
    fn from_str(s: &str) -> Result<Self, GeneratorError> {
        let bad = || GeneratorError::Syntax(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["uniform"] => Ok(GeneratorKind::Uniform),
            ["distinct"] | ["all-distinct"] => Ok(GeneratorKind::Distinct),
            ["zipf", e] => Ok(GeneratorKind::Zipf { s: e.parse().map_err(|_| bad())? }),
            ["planted", i, m] => Ok(GeneratorKind::Planted {
                item: i.parse().map_err(|_| bad())?,
                mass: m.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

impl std::fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GeneratorKind::Uniform => write!(f, "uniform"),
            GeneratorKind::Zipf { s } => write!(f, "zipf:{s}"),
            GeneratorKind::Planted { item, mass } => write!(f, "planted:{item}:{mass}"),
            GeneratorKind::Distinct => write!(f, "distinct"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub length: usize,
    pub universe: u32,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, length: usize, universe: u32, seed: u64) -> Self {
        Self { kind, length, universe, seed }
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        if self.universe == 0 {
            return Err(GeneratorError::EmptyUniverse);
        }
        match self.kind {
            GeneratorKind::Zipf { s } if !(s.is_finite() && s > 0.0) => Err(GeneratorError::Exponent(s)),
            GeneratorKind::Planted { mass, .. } if !(0.0..=1.0).contains(&mass) => {
                Err(GeneratorError::Mass(mass))
            }
            GeneratorKind::Planted { item, .. } if item == 0 || item > self.universe => {
                Err(GeneratorError::Item { item, universe: self.universe })
            }
            _ => Ok(()),
        }
    }

    pub fn generate(&self) -> Result<Vec<u32>, GeneratorError> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (m, n) = (self.length, self.universe);
        Ok(match self.kind {
            GeneratorKind::Uniform => (0..m).map(|_| rng.random_range(1..=n)).collect(),
            GeneratorKind::Zipf { s } => {
                let z = Zipf::new(n as f64, s).map_err(|_| GeneratorError::Exponent(s))?;
                (0..m).map(|_| z.sample(&mut rng) as u32).collect()
            }
            GeneratorKind::Planted { item, mass } => {
                let copies = ((mass * m as f64).ceil() as usize).min(m);
                let mut out: Vec<u32> = (0..m).map(|_| rng.random_range(1..=n)).collect();
                for p in sample(&mut rng, m, copies) {
                    out[p] = item;
                }
                out
            }
            GeneratorKind::Distinct => (0..m).map(|t| (t % n as usize) as u32 + 1).collect(),
        })
    }
}
