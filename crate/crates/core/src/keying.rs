//! Secret polynomial keys.
//!
//! A key bundle κ is ℓ random polynomials R_1..R_ℓ. The detector maps both
//! the trusted and the unknown batch through every R_i before ranking, so an
//! adversary who does not know κ cannot shape a batch that the rank test
//! will accept.
//!
//! Keys are secret. Nothing in this crate logs coefficients; the key file is
//! the only place they are persisted and [`KeyBundle::fingerprint`] is the
//! only identifier that should appear in reports.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::seed;
use crate::stats::SampleSet;

pub const KEY_FILE_VERSION: u32 = 1;

/// Default coefficient alphabet.
pub const DEFAULT_COEFF_SET: [f64; 3] = [-1.0, 0.0, 1.0];
pub const DEFAULT_DEGREE: usize = 4;
pub const DEFAULT_KEY_COUNT: usize = 9;

/// Polynomial with coefficients in ascending degree order (c_0 first).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PolynomialKey {
    coefficients: Vec<f64>,
}

fn effective_degree(coefficients: &[f64]) -> Option<usize> {
    coefficients.iter().rposition(|&c| c != 0.0)
}

impl PolynomialKey {
    /// Builds a key, requiring effective degree >= 2.
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if let Some(i) = coefficients.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("coefficient {i} is not finite")));
        }
        match effective_degree(&coefficients) {
            Some(d) if d >= 2 => Ok(PolynomialKey { coefficients }),
            _ if is_identity(&coefficients) => Ok(PolynomialKey { coefficients }),
            _ => Err(Error::invalid(
                "polynomial key must have effective degree >= 2",
            )),
        }
    }

    /// R(x) = x, the unprotected witness.
    pub fn identity() -> Self {
        PolynomialKey {
            coefficients: vec![0.0, 1.0],
        }
    }

    pub fn is_identity(&self) -> bool {
        is_identity(&self.coefficients)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Index of the highest non-zero coefficient.
    pub fn degree(&self) -> usize {
        effective_degree(&self.coefficients).unwrap_or(0)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * x + c)
    }

    /// Derivative polynomial coefficients (ascending order).
    pub fn derivative(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| i as f64 * c)
            .collect()
    }

    /// Applies the key elementwise, preserving order.
    pub fn apply(&self, s: &SampleSet) -> Result<SampleSet> {
        let mut out = Vec::with_capacity(s.len());
        for (index, &x) in s.values().iter().enumerate() {
            let y = self.eval(x);
            if !y.is_finite() {
                return Err(Error::TransformOverflow { index, input: x });
            }
            out.push(y);
        }
        SampleSet::new(out)
    }
}

fn is_identity(c: &[f64]) -> bool {
    c.len() >= 2 && c[0] == 0.0 && c[1] == 1.0 && c[2..].iter().all(|&v| v == 0.0)
}

/// Free-function form of [`PolynomialKey::apply`].
pub fn apply_key(key: &PolynomialKey, s: &SampleSet) -> Result<SampleSet> {
    key.apply(s)
}

/// ℓ secret polynomials plus the parameters that generated them.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyBundle {
    keys: Vec<PolynomialKey>,
    seed: u64,
    degree: usize,
    coeff_set: Vec<f64>,
}

fn canonical_coeff_set(set: &[f64]) -> Result<Vec<f64>> {
    if set.is_empty() {
        return Err(Error::invalid("coefficient set is empty"));
    }
    if set.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid(
            "coefficient set contains a non-finite value",
        ));
    }
    let mut v: Vec<f64> = set
        .iter()
        .map(|&c| if c == 0.0 { 0.0 } else { c })
        .collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    if v.iter().all(|&c| c == 0.0) {
        return Err(Error::invalid(
            "coefficient set has no non-zero value; no polynomial of degree >= 2 exists",
        ));
    }
    Ok(v)
}

/// Draws `count` polynomials of degree at most `degree` with coefficients
/// uniform over `coeff_set`. Candidates whose effective degree is below 2
/// are rejected and redrawn, which keeps the draw uniform over the
/// admissible polynomials.
pub fn generate_keys(
    degree: usize,
    count: usize,
    coeff_set: &[f64],
    seed: u64,
) -> Result<KeyBundle> {
    if degree < 2 {
        return Err(Error::invalid(format!(
            "key degree must be >= 2, got {degree}"
        )));
    }
    if count == 0 {
        return Err(Error::invalid("key count must be >= 1"));
    }
    let set = canonical_coeff_set(coeff_set)?;
    let mut rng = seed::stream(seed);
    let mut keys = Vec::with_capacity(count);
    while keys.len() < count {
        let coefficients: Vec<f64> = (0..=degree)
            .map(|_| set[rng.random_range(0..set.len())])
            .collect();
        if matches!(effective_degree(&coefficients), Some(d) if d >= 2) {
            keys.push(PolynomialKey { coefficients });
        }
    }
    Ok(KeyBundle {
        keys,
        seed,
        degree,
        coeff_set: set,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KeyFile {
    version: u32,
    seed: u64,
    degree: usize,
    coeff_set: Vec<f64>,
    keys: Vec<Vec<f64>>,
}

fn parse_error(e: &serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

impl KeyBundle {
    pub fn keys(&self) -> &[PolynomialKey] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeff_set(&self) -> &[f64] {
        &self.coeff_set
    }

    /// A new bundle with the same shape drawn from `seed`.
    pub fn refreshed(&self, seed: u64) -> Result<KeyBundle> {
        generate_keys(self.degree, self.keys.len(), &self.coeff_set, seed)
    }

    /// True when regenerating from the stored parameters gives these keys.
    pub fn matches_generation(&self) -> bool {
        self.refreshed(self.seed)
            .map(|b| b.keys == self.keys)
            .unwrap_or(false)
    }

    /// Canonical JSON text of the key file.
    pub fn to_json(&self) -> String {
        let file = KeyFile {
            version: KEY_FILE_VERSION,
            seed: self.seed,
            degree: self.degree,
            coeff_set: self.coeff_set.clone(),
            keys: self.keys.iter().map(|k| k.coefficients.clone()).collect(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("key file serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<KeyBundle> {
        let file: KeyFile = serde_json::from_str(text).map_err(|e| parse_error(&e))?;
        if file.version != KEY_FILE_VERSION {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: format!("unsupported key file version {}", file.version),
            });
        }
        if file.keys.is_empty() {
            return Err(Error::invalid("key file contains no keys"));
        }
        let keys = file
            .keys
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                PolynomialKey::new(c).map_err(|e| Error::invalid(format!("key {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(KeyBundle {
            keys,
            seed: file.seed,
            degree: file.degree,
            coeff_set: file.coeff_set,
        })
    }

    /// Non-secret digest: first 16 hex digits of SHA-256 over the key file.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        hex::encode(&digest[..8])
    }
}

pub fn serialize_keys(k: &KeyBundle) -> String {
    k.to_json()
}

pub fn deserialize_keys(text: &str) -> Result<KeyBundle> {
    KeyBundle::from_json(text)
}
