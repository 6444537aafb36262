//! Keyed minimum-distance randomness test.
//!
//! The classical test drops `N = 8000` points from the source into a
//! `10000 × 10000` square and records δ², the squared smallest pairwise
//! distance. For a good source δ² is close to exponential with mean 0.995.
//! A source that knows the test can plant a single close pair on top of an
//! otherwise rigid pattern and reproduce that law exactly. The keyed variant
//! first pushes the points through a secret measure-preserving bijection of
//! the square, which leaves the null law untouched but moves planted pairs
//! apart and breaks rigid patterns.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::goodness::{ks_exponential, ks_pvalue};
use crate::seed::{self, derive_seed};

pub const DEFAULT_POINTS: usize = 8000;
pub const DEFAULT_SIDE: f64 = 10_000.0;
pub const DEFAULT_ITERATIONS: usize = 1000;
/// Mean of δ² under the null at the default point count and side.
pub const NULL_MEAN: f64 = 0.995;
pub const DEFAULT_ALPHA: f64 = 0.01;

/// Points in the half-open square [0, side)².
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSet {
    points: Vec<[f64; 2]>,
    side: f64,
}

impl PointSet {
    pub fn new(points: Vec<[f64; 2]>, side: f64) -> Result<Self> {
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::invalid(format!(
                "square side must be positive, got {side}"
            )));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite() && (0.0..side).contains(c)) {
                return Err(Error::invalid(format!(
                    "point {i} ({}, {}) lies outside [0, {side})²",
                    p[0], p[1]
                )));
            }
        }
        Ok(PointSet { points, side })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `count` independent uniform points.
    pub fn uniform<R: Rng>(count: usize, side: f64, rng: &mut R) -> Result<Self> {
        let points = (0..count)
            .map(|_| [rng.random::<f64>() * side, rng.random::<f64>() * side])
            .map(|[x, y]| [wrap(x, side), wrap(y, side)])
            .collect();
        PointSet::new(points, side)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinDistResult {
    pub delta: f64,
    pub delta_sq: f64,
    /// Indices of one closest pair, smaller index first.
    pub pair: (usize, usize),
}

#[inline]
fn dist_sq(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Closest pair by uniform-grid bucketing.
///
/// With cell size h, every pair closer than h sits in the same or in
/// adjacent cells, so once the best candidate is below h the answer is
/// exact. Otherwise h doubles and the search repeats; a single cell
/// degenerates to the all-pairs scan.
pub fn min_pair_distance(s: &PointSet) -> Result<MinDistResult> {
    closest_pair(s.points())
}

/// [`min_pair_distance`] on raw coordinates (no square constraint).
pub fn closest_pair(points: &[[f64; 2]]) -> Result<MinDistResult> {
    let n = points.len();
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 points, got {n}")));
    }
    if points.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::invalid("point coordinates must be finite"));
    }
    let (mut min_x, mut max_x, mut min_y, mut max_y) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for p in points {
        min_x = min_x.min(p[0]);
        max_x = max_x.max(p[0]);
        min_y = min_y.min(p[1]);
        max_y = max_y.max(p[1]);
    }
    let extent = (max_x - min_x).max(max_y - min_y);
    if extent == 0.0 {
        return Ok(MinDistResult {
            delta: 0.0,
            delta_sq: 0.0,
            pair: (0, 1),
        });
    }

    // about two points per cell on evenly spread input
    let per_side = ((n as f64 / 2.0).sqrt().ceil()).max(1.0);
    let mut h = extent / per_side;
    let mut cell_of = vec![0usize; n];
    let mut order = vec![0usize; n];
    loop {
        let nx = ((max_x - min_x) / h) as usize + 1;
        let ny = ((max_y - min_y) / h) as usize + 1;
        let cells = nx * ny;
        let mut start = vec![0usize; cells + 1];
        for (i, p) in points.iter().enumerate() {
            let cx = (((p[0] - min_x) / h) as usize).min(nx - 1);
            let cy = (((p[1] - min_y) / h) as usize).min(ny - 1);
            cell_of[i] = cy * nx + cx;
            start[cell_of[i] + 1] += 1;
        }
        for c in 0..cells {
            start[c + 1] += start[c];
        }
        let mut fill = start.clone();
        for i in 0..n {
            order[fill[cell_of[i]]] = i;
            fill[cell_of[i]] += 1;
        }

        let mut best = f64::INFINITY;
        let mut pair = (0, 1);
        for cy in 0..ny {
            for cx in 0..nx {
                let c = cy * nx + cx;
                let members = &order[start[c]..start[c + 1]];
                for (k, &i) in members.iter().enumerate() {
                    for &j in &members[k + 1..] {
                        let d = dist_sq(points[i], points[j]);
                        if d < best {
                            best = d;
                            pair = (i.min(j), i.max(j));
                        }
                    }
                    // forward half of the 8-neighbourhood
                    for (dx, dy) in [(1isize, 0isize), (-1, 1), (0, 1), (1, 1)] {
                        let ox = cx as isize + dx;
                        let oy = cy as isize + dy;
                        if ox < 0 || oy < 0 || ox >= nx as isize || oy >= ny as isize {
                            continue;
                        }
                        let o = oy as usize * nx + ox as usize;
                        for &j in &order[start[o]..start[o + 1]] {
                            let d = dist_sq(points[i], points[j]);
                            if d < best {
                                best = d;
                                pair = (i.min(j), i.max(j));
                            }
                        }
                    }
                }
            }
        }

        let safe = h * (1.0 - 1e-9);
        if best < safe * safe || cells == 1 {
            return Ok(MinDistResult {
                delta: best.sqrt(),
                delta_sq: best,
                pair,
            });
        }
        h *= 2.0;
    }
}

#[inline]
fn wrap(v: f64, side: f64) -> f64 {
    let r = v.rem_euclid(side);
    if r >= side {
        0.0
    } else {
        r
    }
}

pub const DEFAULT_BANDS: usize = 16;
pub const DEFAULT_MAX_SLOPE: f64 = 64.0;
pub const DEFAULT_ROUNDS: usize = 1;

/// Shear applied to one horizontal band: x += slope * (y - band_start) + offset (mod side).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandShear {
    pub slope: f64,
    pub offset: f64,
}

/// One round: modular translation, optional axis swap, banded modular shear.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaneRound {
    pub translate: [f64; 2],
    pub swap_axes: bool,
    pub shears: Vec<BandShear>,
}

/// Secret bijection of [0, side)² built from measure-preserving pieces.
///
/// Each piece maps the uniform distribution on the square to itself, so the
/// image of an i.i.d. uniform sample is again i.i.d. uniform.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanePermutationKey {
    pub seed: u64,
    pub side: f64,
    pub rounds: Vec<PlaneRound>,
}

impl PlanePermutationKey {
    pub fn identity(side: f64) -> Self {
        PlanePermutationKey {
            seed: 0,
            side,
            rounds: Vec::new(),
        }
    }

    pub fn translation(tx: f64, ty: f64, side: f64) -> Self {
        PlanePermutationKey {
            seed: 0,
            side,
            rounds: vec![PlaneRound {
                translate: [tx, ty],
                swap_axes: false,
                shears: Vec::new(),
            }],
        }
    }

    /// Random key with `rounds` rounds, [`DEFAULT_BANDS`] bands and slopes
    /// uniform in ±[`DEFAULT_MAX_SLOPE`].
    pub fn generate(seed: u64, side: f64, rounds: usize) -> Self {
        Self::generate_with(seed, side, rounds, DEFAULT_BANDS, DEFAULT_MAX_SLOPE)
    }

    pub fn generate_with(
        seed: u64,
        side: f64,
        rounds: usize,
        bands: usize,
        max_slope: f64,
    ) -> Self {
        let mut rng = seed::stream(seed);
        let rounds = (0..rounds)
            .map(|_| PlaneRound {
                translate: [rng.random::<f64>() * side, rng.random::<f64>() * side],
                swap_axes: rng.random::<bool>(),
                shears: (0..bands)
                    .map(|_| BandShear {
                        slope: rng.random_range(-max_slope..=max_slope),
                        offset: rng.random::<f64>() * side,
                    })
                    .collect(),
            })
            .collect();
        PlanePermutationKey { seed, side, rounds }
    }

    fn band(&self, round: &PlaneRound, y: f64) -> (usize, f64) {
        let height = self.side / round.shears.len() as f64;
        let b = ((y / height) as usize).min(round.shears.len() - 1);
        (b, y - b as f64 * height)
    }

    pub fn map_point(&self, p: [f64; 2]) -> [f64; 2] {
        let side = self.side;
        let [mut x, mut y] = p;
        for round in &self.rounds {
            x = wrap(x + round.translate[0], side);
            y = wrap(y + round.translate[1], side);
            if round.swap_axes {
                std::mem::swap(&mut x, &mut y);
            }
            if !round.shears.is_empty() {
                let (b, dy) = self.band(round, y);
                let s = round.shears[b];
                x = wrap(x + s.slope * dy + s.offset, side);
            }
        }
        [x, y]
    }

    pub fn unmap_point(&self, p: [f64; 2]) -> [f64; 2] {
        let side = self.side;
        let [mut x, mut y] = p;
        for round in self.rounds.iter().rev() {
            if !round.shears.is_empty() {
                let (b, dy) = self.band(round, y);
                let s = round.shears[b];
                x = wrap(x - s.slope * dy - s.offset, side);
            }
            if round.swap_axes {
                std::mem::swap(&mut x, &mut y);
            }
            x = wrap(x - round.translate[0], side);
            y = wrap(y - round.translate[1], side);
        }
        [x, y]
    }

    pub fn apply(&self, s: &PointSet) -> Result<PointSet> {
        self.check_side(s)?;
        PointSet::new(
            s.points().iter().map(|&p| self.map_point(p)).collect(),
            self.side,
        )
    }

    pub fn invert(&self, s: &PointSet) -> Result<PointSet> {
        self.check_side(s)?;
        PointSet::new(
            s.points().iter().map(|&p| self.unmap_point(p)).collect(),
            self.side,
        )
    }

    fn check_side(&self, s: &PointSet) -> Result<()> {
        if s.side() != self.side {
            return Err(Error::invalid(format!(
                "plane key is for side {} but the point set has side {}",
                self.side,
                s.side()
            )));
        }
        Ok(())
    }
}

pub fn apply_plane_key(key: &PlanePermutationKey, s: &PointSet) -> Result<PointSet> {
    key.apply(s)
}

/// Stateless point source: iteration `i` always yields the same set.
pub trait PointSource: Sync {
    fn generate(&self, iteration: u64, count: usize, side: f64) -> Result<PointSet>;
}

/// I.i.d. uniform points from a ChaCha stream per iteration.
#[derive(Debug, Clone, Copy)]
pub struct UniformSource {
    pub seed: u64,
}

impl PointSource for UniformSource {
    fn generate(&self, iteration: u64, count: usize, side: f64) -> Result<PointSet> {
        PointSet::uniform(
            count,
            side,
            &mut seed::derived_stream(self.seed, &[iteration]),
        )
    }
}

/// Jittered torus lattice with one planted close pair whose squared
/// distance is drawn from the null exponential law. Its unkeyed δ² is exactly
/// the planted value, so it passes the classical test.
#[derive(Debug, Clone, Copy)]
pub struct LatticeAdversary {
    pub seed: u64,
    pub jitter: f64,
    pub null_mean: f64,
}

impl LatticeAdversary {
    pub fn new(seed: u64) -> Self {
        LatticeAdversary {
            seed,
            jitter: 5.0,
            null_mean: NULL_MEAN,
        }
    }

    /// rows × cols = count with rows the largest divisor <= sqrt(count).
    fn shape(count: usize) -> (usize, usize) {
        let mut rows = (count as f64).sqrt() as usize;
        while rows > 1 && !count.is_multiple_of(rows) {
            rows -= 1;
        }
        let rows = rows.max(1);
        (rows, count / rows)
    }
}

impl PointSource for LatticeAdversary {
    fn generate(&self, iteration: u64, count: usize, side: f64) -> Result<PointSet> {
        if count < 3 {
            return Err(Error::invalid(
                "the lattice adversary needs at least 3 points",
            ));
        }
        let mut rng = seed::derived_stream(self.seed, &[iteration]);
        let (rows, cols) = Self::shape(count);
        let (sx, sy) = (side / cols as f64, side / rows as f64);
        let j = self.jitter.min(0.25 * sx.min(sy));
        let mut points = Vec::with_capacity(count);
        for r in 0..rows {
            for c in 0..cols {
                let x = (c as f64 + 0.5) * sx + rng.random_range(-j..=j);
                let y = (r as f64 + 0.5) * sy + rng.random_range(-j..=j);
                points.push([x, y]);
            }
        }
        // drop one lattice point, plant a partner next to another
        let anchor = rng.random_range(0..count);
        let mut hole = rng.random_range(0..count - 1);
        if hole >= anchor {
            hole += 1;
        }
        let d2 = Exp::new(1.0 / self.null_mean)
            .map_err(|e| Error::invalid(format!("null mean: {e}")))?
            .sample(&mut rng);
        let theta = rng.random::<f64>() * std::f64::consts::TAU;
        let [ax, ay] = points[anchor];
        let d = d2.sqrt();
        points[hole] = [
            wrap(ax + d * theta.cos(), side),
            wrap(ay + d * theta.sin(), side),
        ];
        PointSet::new(points, side)
    }
}

/// Points read from a file, consumed in consecutive blocks per iteration.
#[derive(Debug, Clone)]
pub struct FixedSource {
    pub points: Vec<[f64; 2]>,
}

impl PointSource for FixedSource {
    fn generate(&self, iteration: u64, count: usize, side: f64) -> Result<PointSet> {
        let start = iteration as usize * count;
        let end = start + count;
        if end > self.points.len() {
            return Err(Error::invalid(format!(
                "point file has {} points, iteration {iteration} needs {end}",
                self.points.len()
            )));
        }
        PointSet::new(self.points[start..end].to_vec(), side)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinDistConfig {
    pub points: usize,
    pub side: f64,
    pub iterations: usize,
    pub null_mean: f64,
    pub alpha: f64,
}

impl Default for MinDistConfig {
    fn default() -> Self {
        MinDistConfig {
            points: DEFAULT_POINTS,
            side: DEFAULT_SIDE,
            iterations: DEFAULT_ITERATIONS,
            null_mean: NULL_MEAN,
            alpha: DEFAULT_ALPHA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinDistReport {
    pub keyed: bool,
    pub iterations: usize,
    pub delta_sq: Vec<f64>,
    pub mean_delta_sq: f64,
    /// KS distance to the null exponential; absent for a single iteration.
    pub ks_distance: Option<f64>,
    pub ks_pvalue: Option<f64>,
    /// `Some(true)` when the KS p-value is at least alpha.
    pub passed: Option<bool>,
}

/// Runs the (optionally keyed) minimum-distance test.
///
/// Iterations are independent and run in parallel; iteration `i` draws
/// `source.generate(i, ..)`, so the report does not depend on scheduling.
pub fn min_distance_test(
    source: &dyn PointSource,
    cfg: &MinDistConfig,
    key: Option<&PlanePermutationKey>,
) -> Result<MinDistReport> {
    if cfg.iterations == 0 {
        return Err(Error::invalid("iterations must be >= 1"));
    }
    if cfg.points < 2 {
        return Err(Error::invalid("need at least 2 points per iteration"));
    }
    if let Some(k) = key {
        if k.side != cfg.side {
            return Err(Error::invalid(
                "plane key side differs from the test square",
            ));
        }
    }
    let delta_sq = (0..cfg.iterations as u64)
        .into_par_iter()
        .map(|i| {
            let pts = source.generate(i, cfg.points, cfg.side)?;
            let pts = match key {
                Some(k) => k.apply(&pts)?,
                None => pts,
            };
            Ok(min_pair_distance(&pts)?.delta_sq)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mean = delta_sq.iter().sum::<f64>() / delta_sq.len() as f64;
    let (ks_distance, ks_p, passed) = if delta_sq.len() > 1 {
        let d = ks_exponential(&delta_sq, cfg.null_mean);
        let p = ks_pvalue(d, delta_sq.len());
        (Some(d), Some(p), Some(p >= cfg.alpha))
    } else {
        (None, None, None)
    };
    Ok(MinDistReport {
        keyed: key.is_some(),
        iterations: cfg.iterations,
        delta_sq,
        mean_delta_sq: mean,
        ks_distance,
        ks_pvalue: ks_p,
        passed,
    })
}

/// Seed of the plane key used by the CLI for a given master seed.
pub fn plane_key_seed(master: u64) -> u64 {
    derive_seed(master, &[0x0050_4c41_4e45])
}
