//! Keyed non-parametric hypothesis tests.
//!
//! A Mann-Whitney U test compares a trusted batch against an unknown one.
//! A plain rank test is easy to fool with a batch built to match the
//! trusted ranks, so the detector first passes both batches through secret
//! random polynomials and combines the per-key p-values. The same idea is
//! applied to a two-dimensional minimum-distance randomness test via a
//! secret permutation of the plane.

pub mod adversary;
pub mod aggregate;
pub mod dataset;
pub mod detector;
pub mod error;
pub mod goodness;
pub mod harness;
pub mod keying;
pub mod randomness;
pub mod report;
pub mod seed;
pub mod special;
pub mod stats;

pub use adversary::{sample, trivial_poisoning_demo, SourceKind, SourceSpec};
pub use aggregate::{
    aggregate, combine, fisher, pearson, stouffer, AggregateResult, Method, PValueVector,
};
pub use detector::{detect, detect_with, Decision, Detector, DetectorConfig, KeySource, Verdict};
pub use error::{Error, Result};
pub use harness::{run_experiment, ExperimentResult, ExperimentSpec, TrialRecord};
pub use keying::{
    apply_key, deserialize_keys, generate_keys, serialize_keys, KeyBundle, PolynomialKey,
};
pub use randomness::{
    apply_plane_key, min_distance_test, min_pair_distance, MinDistConfig, MinDistReport,
    PlanePermutationKey, PointSet,
};
pub use stats::{mann_whitney_u, MwuResult, SampleSet};
