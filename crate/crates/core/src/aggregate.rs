//! Combining per-key p-values into one aggregate Δ.
//!
//! Stouffer is the primary combiner. Its statistic is normalized by
//! 1/sqrt(ℓ), which is what makes Z standard normal under H0 when the ℓ
//! p-values are independent and uniform (a 1/ℓ factor would give variance
//! 1/ℓ). Fisher and Pearson are chi-square based alternatives: Fisher
//! penalizes a single tiny p-value hardest, Pearson degrades slowest.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{chi_square_cdf, chi_square_sf, normal_cdf, normal_quantile};

/// Lower clamp applied to p-values before taking quantiles or logs.
pub const P_MIN: f64 = 1e-300;
/// Upper clamp applied to p-values before taking quantiles or logs.
pub const P_MAX: f64 = 1.0 - 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Stouffer,
    Fisher,
    Pearson,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Stouffer => "stouffer",
            Method::Fisher => "fisher",
            Method::Pearson => "pearson",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stouffer" => Ok(Method::Stouffer),
            "fisher" => Ok(Method::Fisher),
            "pearson" => Ok(Method::Pearson),
            other => Err(Error::invalid(format!(
                "unknown aggregation method '{other}' (expected stouffer|fisher|pearson)"
            ))),
        }
    }
}

/// ℓ >= 1 p-values, each clamped into [P_MIN, P_MAX].
#[derive(Debug, Clone, PartialEq)]
pub struct PValueVector(Vec<f64>);

impl PValueVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("at least one p-value is required"));
        }
        let mut clamped = values;
        for (i, p) in clamped.iter_mut().enumerate() {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::invalid(format!(
                    "p-value at index {i} is outside [0, 1]: {p}"
                )));
            }
            *p = p.clamp(P_MIN, P_MAX);
        }
        Ok(PValueVector(clamped))
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
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AggregateResult {
    pub method: Method,
    /// Z for Stouffer, the chi-square value for Fisher and Pearson.
    pub statistic: f64,
    /// Combined p-value.
    pub delta: f64,
}

/// Z = Σ Φ⁻¹(p_i) / sqrt(ℓ), Δ = Φ(Z).
pub fn stouffer(p: &PValueVector) -> Result<AggregateResult> {
    let mut sum = 0.0;
    for &v in p.values() {
        sum += normal_quantile(v)?;
    }
    let z = sum / (p.len() as f64).sqrt();
    Ok(AggregateResult {
        method: Method::Stouffer,
        statistic: z,
        delta: normal_cdf(z).clamp(0.0, 1.0),
    })
}

/// X = -2 Σ ln p_i, Δ = P(χ²_{2ℓ} > X).
pub fn fisher(p: &PValueVector) -> Result<AggregateResult> {
    let x = -2.0 * p.values().iter().map(|v| v.ln()).sum::<f64>();
    Ok(AggregateResult {
        method: Method::Fisher,
        statistic: x,
        delta: chi_square_sf(x, 2 * p.len() as u32)?,
    })
}

/// X = -2 Σ ln(1 - p_i), Δ = P(χ²_{2ℓ} <= X).
pub fn pearson(p: &PValueVector) -> Result<AggregateResult> {
    let x = -2.0 * p.values().iter().map(|v| (-v).ln_1p()).sum::<f64>();
    Ok(AggregateResult {
        method: Method::Pearson,
        statistic: x,
        delta: chi_square_cdf(x, 2 * p.len() as u32)?,
    })
}

pub fn aggregate(method: Method, p: &PValueVector) -> Result<AggregateResult> {
    match method {
        Method::Stouffer => stouffer(p),
        Method::Fisher => fisher(p),
        Method::Pearson => pearson(p),
    }
}

/// Convenience wrapper taking raw p-values.
pub fn combine(method: Method, p: &[f64]) -> Result<AggregateResult> {
    aggregate(method, &PValueVector::new(p.to_vec())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_vector_is_rejected() {
        assert!(PValueVector::new(vec![]).is_err());
        assert!(combine(Method::Fisher, &[]).is_err());
        assert!(PValueVector::new(vec![1.5]).is_err());
    }

    #[test]
    fn clamping_keeps_extremes_finite() {
        for m in [Method::Stouffer, Method::Fisher, Method::Pearson] {
            let r = combine(m, &[0.0, 1.0, 0.5]).unwrap();
            assert!(r.statistic.is_finite(), "{m}");
            assert!((0.0..=1.0).contains(&r.delta));
        }
    }

    #[test]
    fn stouffer_at_one_half() {
        let r = combine(Method::Stouffer, &[0.5; 9]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.delta, 0.5);
    }

    #[test]
    fn stouffer_single_value_is_identity() {
        for &p in &[1e-8, 0.01, 0.3, 0.77, 0.999] {
            let r = combine(Method::Stouffer, &[p]).unwrap();
            assert!((r.delta - p).abs() < 1e-12 * p.max(1e-3), "p={p}");
        }
    }

    #[test]
    fn fisher_near_one_goes_to_one() {
        let r = combine(Method::Fisher, &[1.0 - 1e-12; 4]).unwrap();
        assert!(r.delta > 1.0 - 1e-9);
    }

    #[test]
    fn pearson_near_zero_goes_to_zero() {
        let r = combine(Method::Pearson, &[1e-12; 4]).unwrap();
        assert!(r.statistic < 1e-10);
        assert!(r.delta < 1e-30);
    }

    #[test]
    fn method_parsing() {
        assert_eq!("Fisher".parse::<Method>().unwrap(), Method::Fisher);
        assert!("median".parse::<Method>().is_err());
        assert_eq!(Method::Pearson.to_string(), "pearson");
    }
}
