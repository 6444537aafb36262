//! Poison detection plugin: keyed Mann-Whitney tests of an unknown batch
//! against a trusted batch, aggregated into one p-value Δ.
//!
//! Every key is applied to the *same* two batches, so the ℓ per-key
//! p-values are dependent and the aggregate is not exactly calibrated: with
//! nine random degree-4 keys on N(0,1) data the honest reject rate at
//! τ = 0.01 is around 10%, not 1%. The experiment harness, which draws
//! fresh batches per key, is where calibration is measured.
//!
//! Polynomial keys are not monotone, so unlike a plain rank test the verdict
//! is not invariant under rescaling the data.

use rayon::prelude::*;
use serde::Serialize;

use crate::aggregate::{aggregate, Method, PValueVector};
use crate::error::{Error, Result};
use crate::keying::{generate_keys, KeyBundle};
use crate::stats::{mann_whitney_u, SampleSet};

pub const DEFAULT_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KeySource {
    Bundle(KeyBundle),
    Generate {
        degree: usize,
        count: usize,
        coeff_set: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub threshold: f64,
    pub method: Method,
    pub keys: KeySource,
    /// Draw a fresh bundle of the same shape before every call.
    pub refresh_keys: bool,
}

impl DetectorConfig {
    pub fn new(keys: KeyBundle) -> Self {
        DetectorConfig {
            threshold: DEFAULT_THRESHOLD,
            method: Method::Stouffer,
            keys: KeySource::Bundle(keys),
            refresh_keys: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::invalid(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if !self.refresh_keys && matches!(self.keys, KeySource::Generate { .. }) {
            return Err(Error::invalid(
                "generation parameters without a bundle require refresh_keys",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub per_key_p: Vec<f64>,
    pub delta: f64,
    pub decision: Decision,
    pub key_fingerprint: String,
    pub method: Method,
    pub threshold: f64,
    /// Why a key forced rejection (constant transformed data), if any.
    pub reasons: Vec<String>,
}

/// Keyed test with a fixed bundle. Deterministic in all inputs.
///
/// A key that maps both batches onto one constant value has no null
/// variance; that key contributes p = 0 and a reason, which drives the
/// verdict towards rejection.
pub fn detect_with(
    safe: &SampleSet,
    unknown: &SampleSet,
    keys: &KeyBundle,
    threshold: f64,
    method: Method,
) -> Result<Verdict> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let outcomes: Vec<Result<(f64, Option<String>)>> = keys
        .keys()
        .par_iter()
        .enumerate()
        .map(|(i, key)| {
            let a = key.apply(safe)?;
            let b = key.apply(unknown)?;
            match mann_whitney_u(&a, &b) {
                Ok(r) => Ok((r.p, None)),
                Err(Error::DegenerateVariance { n }) => Ok((
                    0.0,
                    Some(format!("key {i}: all {n} transformed values are identical")),
                )),
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut per_key_p = Vec::with_capacity(outcomes.len());
    let mut reasons = Vec::new();
    for o in outcomes {
        let (p, reason) = o?;
        per_key_p.push(p);
        reasons.extend(reason);
    }
    let agg = aggregate(method, &PValueVector::new(per_key_p.clone())?)?;
    let decision = if agg.delta < threshold {
        Decision::Reject
    } else {
        Decision::Accept
    };
    Ok(Verdict {
        per_key_p,
        delta: agg.delta,
        decision,
        key_fingerprint: keys.fingerprint(),
        method,
        threshold,
        reasons,
    })
}

/// Detector holding its configuration and, when keys are refreshed, the
/// seed sequence for the next bundle.
#[derive(Debug, Clone)]
pub struct Detector {
    cfg: DetectorConfig,
    next_seed: u64,
}

impl Detector {
    /// `refresh_seed` seeds the sequence of refreshed bundles; it is unused
    /// when `cfg.refresh_keys` is off.
    pub fn new(cfg: DetectorConfig, refresh_seed: u64) -> Result<Self> {
        cfg.validate()?;
        Ok(Detector {
            cfg,
            next_seed: refresh_seed,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    fn bundle_for_call(&mut self) -> Result<KeyBundle> {
        if !self.cfg.refresh_keys {
            return match &self.cfg.keys {
                KeySource::Bundle(b) => Ok(b.clone()),
                KeySource::Generate { .. } => unreachable!("validated in Detector::new"),
            };
        }
        let seed = self.next_seed;
        self.next_seed = crate::seed::splitmix64(self.next_seed);
        match &self.cfg.keys {
            KeySource::Bundle(b) => b.refreshed(seed),
            KeySource::Generate {
                degree,
                count,
                coeff_set,
            } => generate_keys(*degree, *count, coeff_set, seed),
        }
    }

    pub fn detect(&mut self, safe: &SampleSet, unknown: &SampleSet) -> Result<Verdict> {
        let bundle = self.bundle_for_call()?;
        detect_with(safe, unknown, &bundle, self.cfg.threshold, self.cfg.method)
    }
}

/// One-shot detection with `cfg`; `refresh_seed` is only used when the
/// configuration asks for fresh keys.
pub fn detect(
    safe: &SampleSet,
    unknown: &SampleSet,
    cfg: &DetectorConfig,
    refresh_seed: u64,
) -> Result<Verdict> {
    Detector::new(cfg.clone(), refresh_seed)?.detect(safe, unknown)
}
