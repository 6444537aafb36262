//! Attack/defense simulation: many trials of honest and poisoned batches
//! pushed through the identity witness and ℓ secret polynomial keys.
//!
//! Seeds. The key bundle is drawn from `derive_seed(seed, [KEYS])`. In
//! trial `t`, arm `a` (0 honest, 1 attack) and key slot `k` (0 is the
//! identity witness, 1..=ℓ the secret keys) the two batches come from the
//! stream `derive_seed(seed, [TRIALS, t, a, k])`: first the trusted batch,
//! then the unknown batch. With `shared_samples` every slot of a trial arm
//! reuses the batches of slot `SHARED_SLOT`, which reproduces what the
//! detector sees in deployment but makes the per-key tests dependent.

mod csv;
mod plot;

pub use self::csv::{emit_csv, write_aggregate_csv, write_pvalue_csv, AGGREGATE_CSV, PVALUE_CSV};
pub use self::plot::{emit_plots, render_svg, PLOT_SVG};

use rayon::prelude::*;
use serde::Serialize;

use crate::adversary::SourceKind;
use crate::aggregate::{aggregate, Method, PValueVector};
use crate::error::{Error, Result};
use crate::goodness::ks_uniform;
use crate::keying::{generate_keys, KeyBundle, PolynomialKey, DEFAULT_COEFF_SET};
use crate::seed::{derive_seed, derived_stream};
use crate::stats::{mann_whitney_u, SampleSet};

pub const DEFAULT_SEED: u64 = 20_190_901;
pub const DEFAULT_N: usize = 50;
pub const DEFAULT_TRIALS: usize = 1000;

const TAG_KEYS: u64 = 0x4b45_5953;
const TAG_TRIALS: u64 = 0x5452_4941;
pub const SHARED_SLOT: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Honest,
    Attack,
}

impl Arm {
    pub fn as_str(self) -> &'static str {
        match self {
            Arm::Honest => "honest",
            Arm::Attack => "attack",
        }
    }

    fn index(self) -> u64 {
        match self {
            Arm::Honest => 0,
            Arm::Attack => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    /// Attack magnitude; also where the key panel draws its bars.
    pub q: f64,
    pub n: usize,
    pub trials: usize,
    pub degree: usize,
    pub keys: usize,
    pub coeff_set: Vec<f64>,
    pub include_identity: bool,
    pub method: Method,
    pub seed: u64,
    /// Detector threshold τ used for the rejection-rate summary.
    pub threshold: f64,
    pub honest: SourceKind,
    pub attack: SourceKind,
    pub shared_samples: bool,
}

impl ExperimentSpec {
    /// N(0,1) against two-point(q), n = 50, 1000 trials, nine degree-4 keys
    /// over {-1, 0, 1}, identity witness on, Stouffer.
    pub fn with_q(q: f64) -> Self {
        ExperimentSpec {
            q,
            n: DEFAULT_N,
            trials: DEFAULT_TRIALS,
            degree: crate::keying::DEFAULT_DEGREE,
            keys: crate::keying::DEFAULT_KEY_COUNT,
            coeff_set: DEFAULT_COEFF_SET.to_vec(),
            include_identity: true,
            method: Method::Stouffer,
            seed: DEFAULT_SEED,
            threshold: crate::detector::DEFAULT_THRESHOLD,
            honest: SourceKind::Gaussian {
                mu: 0.0,
                sigma: 1.0,
            },
            attack: SourceKind::TwoPoint { q },
            shared_samples: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be >= 1"));
        }
        if self.n < 2 {
            return Err(Error::invalid("per-set sample size n must be >= 2"));
        }
        if !(self.q.is_finite() && self.q > 0.0) {
            return Err(Error::invalid(format!(
                "q must be positive, got {}",
                self.q
            )));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::invalid("threshold must lie in (0, 1)"));
        }
        self.honest.validate()?;
        self.attack.validate()
    }

    pub fn key_seed(&self) -> u64 {
        derive_seed(self.seed, &[TAG_KEYS])
    }

    pub fn bundle(&self) -> Result<KeyBundle> {
        generate_keys(self.degree, self.keys, &self.coeff_set, self.key_seed())
    }

    /// One-line parameter echo used in every output file.
    pub fn describe(&self) -> String {
        let coeffs: Vec<String> = self.coeff_set.iter().map(|c| c.to_string()).collect();
        format!(
            "q={} n={} trials={} degree={} keys={} coeff_set={} identity={} agg={} seed={} threshold={} honest={} attack={} shared_samples={}",
            self.q,
            self.n,
            self.trials,
            self.degree,
            self.keys,
            coeffs.join(";"),
            self.include_identity,
            self.method,
            self.seed,
            self.threshold,
            describe_source(&self.honest),
            describe_source(&self.attack),
            self.shared_samples
        )
    }
}

fn describe_source(s: &SourceKind) -> String {
    match s {
        SourceKind::Gaussian { mu, sigma } => format!("gaussian({mu};{sigma})"),
        SourceKind::TwoPoint { q } => format!("two-point({q})"),
        SourceKind::BalancedTwoPoint { q } => format!("two-point-balanced({q})"),
        SourceKind::Table { values } => format!("table({} values)", values.len()),
    }
}

/// Per-trial p-values and aggregates. Probabilities all lie in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    /// One p-value per secret key, key order.
    pub honest_p: Vec<f64>,
    pub attack_p: Vec<f64>,
    /// Identity witness p-values, when enabled.
    pub witness_honest_p: Option<f64>,
    pub witness_attack_p: Option<f64>,
    pub honest_delta: f64,
    pub attack_delta: f64,
    /// Tests whose transformed data was constant (recorded as p = 0).
    pub degenerate: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSummary {
    /// 0 for the identity witness, 1..=ℓ for secret keys.
    pub key_index: usize,
    pub mean_honest: f64,
    pub mean_attack: f64,
    pub ks_honest_uniform: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub per_key: Vec<CurveSummary>,
    pub mean_honest_delta: f64,
    pub mean_attack_delta: f64,
    /// Standard error of (mean honest Δ - mean attack Δ).
    pub gap_standard_error: f64,
    pub honest_reject_rate: f64,
    pub attack_reject_rate: f64,
    pub ks_honest_delta_uniform: f64,
    /// Mean attack Δ below mean honest Δ: the attack did not succeed.
    pub defense_holds: bool,
    pub degenerate_tests: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub bundle: KeyBundle,
    pub records: Vec<TrialRecord>,
    pub summary: ExperimentSummary,
}

fn draw_pair(
    spec: &ExperimentSpec,
    trial: usize,
    arm: Arm,
    slot: u64,
) -> Result<(SampleSet, SampleSet)> {
    let mut rng = derived_stream(spec.seed, &[TAG_TRIALS, trial as u64, arm.index(), slot]);
    let safe = spec.honest.draw(spec.n, &mut rng)?;
    let unknown = match arm {
        Arm::Honest => spec.honest.draw(spec.n, &mut rng)?,
        Arm::Attack => spec.attack.draw(spec.n, &mut rng)?,
    };
    Ok((safe, unknown))
}

/// p-value of one keyed test; constant transformed data counts as p = 0.
fn keyed_p(key: &PolynomialKey, safe: &SampleSet, unknown: &SampleSet) -> Result<(f64, bool)> {
    match mann_whitney_u(&key.apply(safe)?, &key.apply(unknown)?) {
        Ok(r) => Ok((r.p, false)),
        Err(Error::DegenerateVariance { .. }) => Ok((0.0, true)),
        Err(e) => Err(e),
    }
}

fn run_arm(
    spec: &ExperimentSpec,
    bundle: &KeyBundle,
    trial: usize,
    arm: Arm,
) -> Result<(Vec<f64>, Option<f64>, f64, u32)> {
    let shared = if spec.shared_samples {
        Some(draw_pair(spec, trial, arm, SHARED_SLOT)?)
    } else {
        None
    };
    let mut degenerate = 0;
    let mut test = |key: &PolynomialKey, slot: u64| -> Result<f64> {
        let (p, flat) = match &shared {
            Some((a, b)) => keyed_p(key, a, b)?,
            None => {
                let (a, b) = draw_pair(spec, trial, arm, slot)?;
                keyed_p(key, &a, &b)?
            }
        };
        degenerate += flat as u32;
        Ok(p)
    };
    let witness = if spec.include_identity {
        Some(test(&PolynomialKey::identity(), 0)?)
    } else {
        None
    };
    let per_key = bundle
        .keys()
        .iter()
        .enumerate()
        .map(|(i, k)| test(k, i as u64 + 1))
        .collect::<Result<Vec<f64>>>()?;
    let delta = aggregate(spec.method, &PValueVector::new(per_key.clone())?)?.delta;
    Ok((per_key, witness, delta, degenerate))
}

pub fn run_trial(spec: &ExperimentSpec, bundle: &KeyBundle, trial: usize) -> Result<TrialRecord> {
    let (honest_p, witness_honest_p, honest_delta, dh) = run_arm(spec, bundle, trial, Arm::Honest)?;
    let (attack_p, witness_attack_p, attack_delta, da) = run_arm(spec, bundle, trial, Arm::Attack)?;
    Ok(TrialRecord {
        trial,
        honest_p,
        attack_p,
        witness_honest_p,
        witness_attack_p,
        honest_delta,
        attack_delta,
        degenerate: dh + da,
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_var(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

pub fn summarize(spec: &ExperimentSpec, records: &[TrialRecord]) -> ExperimentSummary {
    let column = |f: &dyn Fn(&TrialRecord) -> f64| records.iter().map(f).collect::<Vec<f64>>();
    let mut per_key = Vec::new();
    if spec.include_identity {
        let h = column(&|r| r.witness_honest_p.unwrap_or(f64::NAN));
        let a = column(&|r| r.witness_attack_p.unwrap_or(f64::NAN));
        per_key.push(CurveSummary {
            key_index: 0,
            mean_honest: mean(&h),
            mean_attack: mean(&a),
            ks_honest_uniform: ks_uniform(&h),
        });
    }
    for k in 0..spec.keys {
        let h = column(&|r| r.honest_p[k]);
        let a = column(&|r| r.attack_p[k]);
        per_key.push(CurveSummary {
            key_index: k + 1,
            mean_honest: mean(&h),
            mean_attack: mean(&a),
            ks_honest_uniform: ks_uniform(&h),
        });
    }
    let hd = column(&|r| r.honest_delta);
    let ad = column(&|r| r.attack_delta);
    let n = records.len() as f64;
    let rate = |v: &[f64]| v.iter().filter(|&&d| d < spec.threshold).count() as f64 / n;
    let mean_h = mean(&hd);
    let mean_a = mean(&ad);
    ExperimentSummary {
        per_key,
        mean_honest_delta: mean_h,
        mean_attack_delta: mean_a,
        gap_standard_error: ((sample_var(&hd) + sample_var(&ad)) / n).sqrt(),
        honest_reject_rate: rate(&hd),
        attack_reject_rate: rate(&ad),
        ks_honest_delta_uniform: ks_uniform(&hd),
        defense_holds: mean_a < mean_h,
        degenerate_tests: records.iter().map(|r| r.degenerate as u64).sum(),
    }
}

/// Runs every trial on the current rayon pool; records come back in trial
/// order whatever the scheduling.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let bundle = spec.bundle()?;
    let records = (0..spec.trials)
        .into_par_iter()
        .map(|t| run_trial(spec, &bundle, t))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(spec, &records);
    Ok(ExperimentResult {
        spec: spec.clone(),
        bundle,
        records,
        summary,
    })
}

/// [`run_experiment`] on a dedicated pool of `workers` threads.
pub fn run_experiment_with_workers(
    spec: &ExperimentSpec,
    workers: usize,
) -> Result<ExperimentResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
    pool.install(|| run_experiment(spec))
}
