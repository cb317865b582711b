//! Independent reference computations used by the integration tests.
#![allow(dead_code)]

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use snhmm::{HmmModel, MixtureEmission, ObservedSeries, SkewNormalParams};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `(2/w) phi(u) Phi(l u)` written out directly.
pub fn sn_pdf_direct(y: f64, xi: f64, omega: f64, lambda: f64) -> f64 {
    let u = (y - xi) / omega;
    let phi = (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let cdf = 0.5 * libm::erfc(-lambda * u / std::f64::consts::SQRT_2);
    2.0 / omega * phi * cdf
}

pub fn normal_pdf(y: f64, mean: f64, sd: f64) -> f64 {
    let z = (y - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = K_WEIGHTS[7] * fc;
    let mut gauss = G_WEIGHTS[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        kron += K_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += G_WEIGHTS[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) quadrature on `[a, b]`, started from 256
/// equal panels so narrow peaks are not missed.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth > 40 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth + 1) + rec(f, m, b, 0.5 * tol, depth + 1)
    }
    let panels = 256;
    let w = (b - a) / panels as f64;
    compensated_sum((0..panels).map(|i| {
        let lo = a + w * i as f64;
        rec(f, lo, lo + w, tol / panels as f64, 0)
    }))
}

pub fn lse(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn random_simplex<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| 0.05 + rng.random::<f64>()).collect();
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

pub fn random_model<R: Rng>(z: usize, k: usize, rng: &mut R) -> HmmModel {
    let transition = {
        let rows: Vec<Vec<f64>> = (0..z).map(|_| random_simplex(z, rng)).collect();
        Array2::from_shape_fn((z, z), |(i, j)| rows[i][j])
    };
    let initial = random_simplex(z, rng);
    let emissions = (0..z)
        .map(|_| {
            let comps = (0..k)
                .map(|_| {
                    SkewNormalParams::new(
                        rng.random_range(-3.0..3.0),
                        rng.random_range(0.3..2.0),
                        rng.random_range(-4.0..4.0),
                    )
                    .unwrap()
                })
                .collect();
            MixtureEmission::new(random_simplex(k, rng), comps).unwrap()
        })
        .collect();
    HmmModel::new(transition, initial, emissions).unwrap()
}

pub fn random_series<R: Rng>(t: usize, rng: &mut R) -> ObservedSeries {
    ObservedSeries::new((0..t).map(|_| rng.random_range(-4.0..4.0)).collect()).unwrap()
}

/// `ln p(y_t | state)` from the direct density transcription.
pub fn emission_direct(m: &HmmModel, state: usize, y: f64) -> f64 {
    let e = &m.emissions()[state];
    e.weights
        .iter()
        .zip(&e.components)
        .map(|(w, c)| w * sn_pdf_direct(y, c.xi, c.omega, c.lambda))
        .sum::<f64>()
        .ln()
}

/// Every path in lexicographic order with its complete-data log-likelihood.
pub fn enumerate_paths(m: &HmmModel, y: &ObservedSeries) -> Vec<(Vec<usize>, f64)> {
    let z = m.n_states();
    let t = y.len();
    let emit: Vec<Vec<f64>> = y
        .values
        .iter()
        .map(|&v| (0..z).map(|s| emission_direct(m, s, v)).collect())
        .collect();
    let a = m.transition();
    let total = z.pow(t as u32);
    let mut out = Vec::with_capacity(total);
    for code in 0..total {
        let mut path = vec![0; t];
        let mut c = code;
        for i in (0..t).rev() {
            path[i] = c % z;
            c /= z;
        }
        let mut ll = m.initial()[path[0]].ln() + emit[0][path[0]];
        for i in 1..t {
            ll += a[[path[i - 1], path[i]]].ln() + emit[i][path[i]];
        }
        out.push((path, ll));
    }
    out
}

/// Central differences with one Richardson extrapolation step.
pub fn richardson_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = Vec::with_capacity(x.len());
    let mut p = x.to_vec();
    for i in 0..x.len() {
        let step = h * x[i].abs().max(1.0);
        let mut diff = |s: f64| {
            p[i] = x[i] + s;
            let up = f(&p);
            p[i] = x[i] - s;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * s)
        };
        let d1 = diff(step);
        let d2 = diff(step / 2.0);
        g.push((4.0 * d2 - d1) / 3.0);
    }
    g
}

/// Neumaier-compensated sum.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}
