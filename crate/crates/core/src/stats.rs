//! Ranking and the Mann-Whitney U test (normal approximation, tie-corrected).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::normal_cdf;

/// Non-empty collection of finite real samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SampleSet(Vec<f64>);

impl SampleSet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("sample set must contain at least one value"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "sample set value at index {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(SampleSet(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Appends `other`, keeping order.
    pub fn concat(&self, other: &SampleSet) -> SampleSet {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        SampleSet(v)
    }
}

impl TryFrom<Vec<f64>> for SampleSet {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        SampleSet::new(values)
    }
}

impl<'de> Deserialize<'de> for SampleSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        SampleSet::new(v).map_err(serde::de::Error::custom)
    }
}

/// A run of equal values in the merged sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TieGroup {
    pub value: f64,
    pub size: usize,
}

/// Midpoint ranks of the concatenation `a ∥ b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankSummary {
    /// One rank per merged element, in input order (all of `a`, then `b`).
    pub ranks: Vec<f64>,
    /// Groups of size >= 2, in ascending value order.
    pub tie_groups: Vec<TieGroup>,
    pub n0: usize,
    pub n1: usize,
    /// Rank sum of `a`.
    pub r0: f64,
    /// Rank sum of `b`.
    pub r1: f64,
}

impl RankSummary {
    /// Number of tie groups (k).
    pub fn k(&self) -> usize {
        self.tie_groups.len()
    }

    /// Total merged size (n).
    pub fn n(&self) -> usize {
        self.n0 + self.n1
    }

    /// Sum over tie groups of t^3 - t.
    pub fn tie_term(&self) -> f64 {
        self.tie_groups
            .iter()
            .map(|g| {
                let t = g.size as f64;
                t * t * t - t
            })
            .sum()
    }
}

/// Assigns ascending ranks 1..n to the merged samples; equal values share the
/// midpoint of the positions they occupy.
pub fn rank_merged(a: &SampleSet, b: &SampleSet) -> RankSummary {
    let n0 = a.len();
    let n1 = b.len();
    let merged: Vec<f64> = a.values().iter().chain(b.values()).copied().collect();
    let n = merged.len();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&i, &j| merged[i].total_cmp(&merged[j]));

    let mut ranks = vec![0.0; n];
    let mut tie_groups = Vec::new();
    // doubled rank sums keep the half-integer midranks exact
    let mut twice_r0: u128 = 0;
    let mut start = 0;
    while start < n {
        let value = merged[order[start]];
        let mut end = start + 1;
        // -0.0 and 0.0 compare equal here, unlike under total_cmp
        while end < n && merged[order[end]] == value {
            end += 1;
        }
        // positions start+1 ..= end, midpoint doubled
        let twice_rank = (start + 1 + end) as u128;
        let rank = twice_rank as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
            if idx < n0 {
                twice_r0 += twice_rank;
            }
        }
        if end - start > 1 {
            tie_groups.push(TieGroup {
                value,
                size: end - start,
            });
        }
        start = end;
    }

    let twice_total = (n as u128) * (n as u128 + 1);
    let r0 = twice_r0 as f64 / 2.0;
    let r1 = (twice_total - twice_r0) as f64 / 2.0;
    RankSummary {
        ranks,
        tie_groups,
        n0,
        n1,
        r0,
        r1,
    }
}

/// Outcome of one two-sided Mann-Whitney U test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MwuResult {
    pub n0: usize,
    pub n1: usize,
    pub r0: f64,
    pub r1: f64,
    pub u0: f64,
    pub u1: f64,
    /// min(u0, u1)
    pub u: f64,
    pub lambda_u: f64,
    pub sigma_u: f64,
    pub z: f64,
    /// Two-sided p-value 2(1 - Φ(|z|)), clamped to [0, 1].
    pub p: f64,
    pub tie_corrected: bool,
    /// Number of tie groups.
    pub ties: usize,
}

/// Null standard deviation of U.
///
/// Without ties this is sqrt(n0 n1 (n+1) / 12). With k >= 1 tie groups of
/// sizes t_i it is sqrt(n0 n1 / 12 * ((n+1) - Σ(t_i³ - t_i) / (n(n-1)))),
/// which is the usual textbook tie correction written with the (n+1) factor
/// pulled out.
pub fn sigma_u(n0: usize, n1: usize, tie_term: f64) -> f64 {
    let n = (n0 + n1) as f64;
    let base = n0 as f64 * n1 as f64 / 12.0;
    if tie_term == 0.0 {
        (base * (n + 1.0)).sqrt()
    } else {
        let var = base * ((n + 1.0) - tie_term / (n * (n - 1.0)));
        var.max(0.0).sqrt()
    }
}

/// Two-sided Mann-Whitney U test of `a` against `b`.
///
/// Uses the normal approximation for every sample size (no exact tables)
/// and no continuity correction. Fails with
/// [`Error::DegenerateVariance`] when every merged value is identical.
pub fn mann_whitney_u(a: &SampleSet, b: &SampleSet) -> Result<MwuResult> {
    let summary = rank_merged(a, b);
    let n0 = summary.n0;
    let n1 = summary.n1;
    if summary.tie_groups.len() == 1 && summary.tie_groups[0].size == summary.n() {
        return Err(Error::DegenerateVariance { n: summary.n() });
    }

    let u0 = summary.r0 - (n0 * (n0 + 1)) as f64 / 2.0;
    let u1 = summary.r1 - (n1 * (n1 + 1)) as f64 / 2.0;
    let u = u0.min(u1);
    let lambda_u = n0 as f64 * n1 as f64 / 2.0;
    let tie_term = summary.tie_term();
    let sigma = sigma_u(n0, n1, tie_term);
    if sigma <= 0.0 {
        return Err(Error::DegenerateVariance { n: summary.n() });
    }
    let z = (u - lambda_u) / sigma;
    let p = (2.0 * normal_cdf(-z.abs())).clamp(0.0, 1.0);

    Ok(MwuResult {
        n0,
        n1,
        r0: summary.r0,
        r1: summary.r1,
        u0,
        u1,
        u,
        lambda_u,
        sigma_u: sigma,
        z,
        p,
        tie_corrected: tie_term > 0.0,
        ties: summary.k(),
    })
}
