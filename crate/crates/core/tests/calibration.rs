//! Statistical behaviour under the null: p-values and aggregates are close
//! to uniform, sources and streams reproduce.

use keyed_npht::adversary::SourceKind;
use keyed_npht::aggregate::{combine, Method};
use keyed_npht::detector::{Decision, Detector, DetectorConfig, KeySource};
use keyed_npht::goodness::ks_uniform;
use keyed_npht::keying::DEFAULT_COEFF_SET;
use keyed_npht::seed::{derived_stream, stream};
use keyed_npht::stats::mann_whitney_u;
use rand::Rng;

const GAUSS: SourceKind = SourceKind::Gaussian {
    mu: 0.0,
    sigma: 1.0,
};

#[test]
fn honest_mwu_p_values_are_uniform() {
    let ps: Vec<f64> = (0..1000u64)
        .map(|t| {
            let mut rng = derived_stream(3, &[t]);
            let a = GAUSS.draw(50, &mut rng).unwrap();
            let b = GAUSS.draw(50, &mut rng).unwrap();
            mann_whitney_u(&a, &b).unwrap().p
        })
        .collect();
    let d = ks_uniform(&ps);
    assert!(d < 0.06, "KS {d}");
}

#[test]
fn combiners_are_uniform_under_the_null() {
    for m in [Method::Stouffer, Method::Fisher, Method::Pearson] {
        let mut rng = stream(9);
        let deltas: Vec<f64> = (0..1000)
            .map(|_| {
                let p: Vec<f64> = (0..9).map(|_| rng.random::<f64>()).collect();
                combine(m, &p).unwrap().delta
            })
            .collect();
        let d = ks_uniform(&deltas);
        assert!(d < 0.06, "{m}: KS {d}");
    }
}

#[test]
fn refreshed_keys_change_per_key_p_and_keep_honest_rate_bounded() {
    let cfg = DetectorConfig {
        threshold: 0.01,
        method: Method::Stouffer,
        keys: KeySource::Generate {
            degree: 4,
            count: 9,
            coeff_set: DEFAULT_COEFF_SET.to_vec(),
        },
        refresh_keys: true,
    };
    let mut det = Detector::new(cfg, 4).unwrap();
    let mut rng = stream(5);
    let a = GAUSS.draw(50, &mut rng).unwrap();
    let b = GAUSS.draw(50, &mut rng).unwrap();
    let first = det.detect(&a, &b).unwrap();
    let second = det.detect(&a, &b).unwrap();
    assert_ne!(first.per_key_p, second.per_key_p);

    let mut rejects = 0;
    let trials = 400;
    for t in 0..trials {
        let mut rng = derived_stream(6, &[t]);
        let a = GAUSS.draw(50, &mut rng).unwrap();
        let b = GAUSS.draw(50, &mut rng).unwrap();
        rejects += (det.detect(&a, &b).unwrap().decision == Decision::Reject) as u32;
    }
    let rate = rejects as f64 / trials as f64;
    assert!(rate < 0.2, "honest reject rate {rate}");
}

#[test]
fn distinct_streams_are_uncorrelated() {
    let x = GAUSS.draw(20_000, &mut stream(100)).unwrap();
    let y = GAUSS.draw(20_000, &mut stream(101)).unwrap();
    let r: f64 = x
        .values()
        .iter()
        .zip(y.values())
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / 20_000.0;
    // |corr| under independence is about 1/sqrt(n) = 0.007
    assert!(r.abs() < 0.03, "correlation {r}");
}
