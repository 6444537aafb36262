//! Independent numerical oracles shared by the integration tests. Nothing
//! here calls into the library's special functions.

#![allow(dead_code, clippy::excessive_precision)]

use std::f64::consts::PI;

const GL5_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
    0.236_926_885_056_189_08,
];

/// Composite 5-point Gauss-Legendre over [a, b] with `panels` panels.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * h;
        let mut s = 0.0;
        for (x, w) in GL5_NODES.iter().zip(GL5_WEIGHTS) {
            s += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * s;
    }
    total
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Φ(x) by quadrature of the density.
pub fn normal_cdf_quad(x: f64) -> f64 {
    if x < -1.0 {
        integrate(std_normal_pdf, x - 40.0, x, 4000)
    } else {
        0.5 + integrate(std_normal_pdf, 0.0, x, 4000)
    }
}

/// Γ(k/2) for a positive integer k, exactly via the half-integer recursion.
pub fn gamma_half(k: u32) -> f64 {
    let (mut g, mut s) = if k.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    while s + 1e-9 < k as f64 / 2.0 {
        g *= s;
        s += 1.0;
    }
    g
}

pub fn chi_square_pdf(x: f64, k: u32) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let h = k as f64 / 2.0;
    ((h - 1.0) * x.ln() - x / 2.0 - h * 2f64.ln()).exp() / gamma_half(k)
}

/// Upper tail of χ²_k at x > 0 by quadrature.
pub fn chi_square_sf_quad(x: f64, k: u32) -> f64 {
    let upper = x + 60.0 * (k as f64).sqrt() + 400.0;
    integrate(|t| chi_square_pdf(t, k), x, upper, 20_000)
}

/// Lower tail of χ²_k at x by quadrature; the substitution t = s² removes
/// the k = 1 singularity at the origin.
pub fn chi_square_cdf_quad(x: f64, k: u32) -> f64 {
    integrate(
        |s| 2.0 * s * chi_square_pdf(s * s, k),
        0.0,
        x.sqrt(),
        20_000,
    )
}

/// U_0 = #{(a, b): a < b} + ½ #{(a, b): a = b}; pair counts are exact.
pub fn pair_count_u(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut less = 0u64;
    let mut equal = 0u64;
    let mut greater = 0u64;
    for &x in a {
        for &y in b {
            if x < y {
                less += 1;
            } else if x == y {
                equal += 1;
            } else {
                greater += 1;
            }
        }
    }
    // U_i counts pairs where the other sample wins, ties split evenly
    let u0 = greater as f64 + equal as f64 / 2.0;
    let u1 = less as f64 + equal as f64 / 2.0;
    (u0, u1)
}

pub fn brute_closest_sq(points: &[[f64; 2]]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let dx = points[i][0] - points[j][0];
            let dy = points[i][1] - points[j][1];
            best = best.min(dx * dx + dy * dy);
        }
    }
    best
}

/// High-precision reference values of Φ (40 significant digits, rounded).
pub const NORMAL_CDF_TABLE: [(f64, f64); 20] = [
    (-8.0, 6.2209605742717841235e-16),
    (-6.0, 9.865876450376981407e-10),
    (-5.0, 2.8665157187919391167e-7),
    (-4.0, 3.1671241833119921254e-5),
    (-3.0, 1.3498980316300945267e-3),
    (-2.5, 6.209665325776135167e-3),
    (-2.0, 2.27501319481792072e-2),
    (-1.5, 6.6807201268858066004e-2),
    (-1.0, 0.15865525393145705141),
    (-0.5, 0.30853753872598689636),
    (0.0, 0.5),
    (0.25, 0.59870632568292372424),
    (0.5, 0.69146246127401310364),
    (1.0, 0.84134474606854294859),
    (1.5, 0.933192798731141934),
    (1.959963985, 0.97500000002688155696),
    (2.5, 0.99379033467422386483),
    (3.0, 0.99865010196836990547),
    (4.0, 0.99996832875816688008),
    (6.0, 0.99999999901341235496),
];

/// High-precision reference values of the χ² upper tail: (x, dof, Q).
pub const CHI_SQUARE_SF_TABLE: [(f64, u32, f64); 20] = [
    (0.5, 1, 0.47950012218695346232),
    (1.0, 1, 0.31731050786291410283),
    (2.772588722239781, 4, 0.59657359027997267078),
    (10.0, 18, 0.93190636527815144123),
    (3.0, 2, 0.22313016014842982893),
    (0.1, 3, 0.99183742373187647779),
    (5.0, 5, 0.41588018699550792028),
    (20.0, 10, 0.029252688076961072673),
    (1.0, 9, 0.99943750269783249845),
    (15.0, 9, 0.09093597657980521961),
    (30.0, 18, 0.037446493479672887385),
    (7.5, 6, 0.27706844336610730641),
    (0.01, 2, 0.99501247919268231325),
    (50.0, 20, 0.00022147663824878358122),
    (2.0, 4, 0.73575888234288464319),
    (4.0, 1, 0.045500263896358414401),
    (12.0, 12, 0.44567964136461124446),
    (25.0, 30, 0.72503188418060003772),
    (60.0, 40, 0.021873468441390853316),
    (100.0, 50, 0.000034549313829848639421),
];
