//! Honest and poisoning sources used to probe the detector.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::seed::{self, StreamRng};
use crate::stats::{mann_whitney_u, SampleSet};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SourceKind {
    Gaussian {
        mu: f64,
        sigma: f64,
    },
    /// Each draw is -q or +q with probability 1/2.
    TwoPoint {
        q: f64,
    },
    /// Exactly floor(n/2) copies of -q and ceil(n/2) of +q, shuffled: the
    /// construction an attacker who controls the batch would submit.
    BalancedTwoPoint {
        q: f64,
    },
    /// Uniform resampling (with replacement) of an empirical table.
    Table {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub n: usize,
    pub seed: u64,
}

impl SourceKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            SourceKind::Gaussian { mu, sigma } => {
                if !mu.is_finite() || !sigma.is_finite() || *sigma <= 0.0 {
                    return Err(Error::invalid(format!(
                        "gaussian source needs finite mu and sigma > 0 (mu={mu}, sigma={sigma})"
                    )));
                }
            }
            SourceKind::TwoPoint { q } | SourceKind::BalancedTwoPoint { q } => {
                if !q.is_finite() || *q <= 0.0 {
                    return Err(Error::invalid(format!(
                        "two-point source needs q > 0, got {q}"
                    )));
                }
            }
            SourceKind::Table { values } => {
                if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid(
                        "table source needs at least one finite value",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Draws `n` values from `rng`.
    pub fn draw(&self, n: usize, rng: &mut StreamRng) -> Result<SampleSet> {
        self.validate()?;
        if n == 0 {
            return Err(Error::invalid("sample count must be >= 1"));
        }
        let values = match self {
            SourceKind::Gaussian { mu, sigma } => {
                let normal = Normal::new(*mu, *sigma)
                    .map_err(|e| Error::invalid(format!("gaussian source: {e}")))?;
                normal.sample_iter(rng).take(n).collect()
            }
            SourceKind::TwoPoint { q } => (0..n)
                .map(|_| if rng.random::<bool>() { *q } else { -*q })
                .collect(),
            SourceKind::BalancedTwoPoint { q } => {
                let mut v: Vec<f64> = (0..n).map(|i| if i < n / 2 { -*q } else { *q }).collect();
                v.shuffle(rng);
                v
            }
            SourceKind::Table { values } => (0..n)
                .map(|_| values[rng.random_range(0..values.len())])
                .collect(),
        };
        SampleSet::new(values)
    }
}

/// Draws `spec.n` values from the stream seeded by `spec.seed`.
pub fn sample(spec: &SourceSpec) -> Result<SampleSet> {
    let mut rng = seed::stream(spec.seed);
    spec.kind.draw(spec.n, &mut rng)
}

/// Unkeyed Mann-Whitney of N(0, 3)^n against two-point(15)^n.
///
/// Both sources are symmetric about 0: every -15 ranks below and every +15
/// above almost all Gaussian draws, so U stays near its null mean and the
/// test does not separate the two very different distributions.
pub fn trivial_poisoning_demo(n: usize, seed: u64) -> Result<f64> {
    poisoning_demo_with(n, seed, &SourceKind::TwoPoint { q: 15.0 })
}

/// [`trivial_poisoning_demo`] with a caller-chosen poisoning source.
pub fn poisoning_demo_with(n: usize, seed: u64, poison: &SourceKind) -> Result<f64> {
    if n < 10_000 {
        return Err(Error::invalid(format!(
            "the poisoning demo needs n >= 10000, got {n}"
        )));
    }
    let honest = SourceKind::Gaussian {
        mu: 0.0,
        sigma: 3.0,
    };
    let a = honest.draw(n, &mut seed::derived_stream(seed, &[0]))?;
    let b = poison.draw(n, &mut seed::derived_stream(seed, &[1]))?;
    Ok(mann_whitney_u(&a, &b)?.p)
}
