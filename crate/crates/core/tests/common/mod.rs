//! Helpers shared by the integration tests: an independent O(N^2) evaluation
//! of the nonlocal source terms and seeded random states.
#![allow(dead_code)]

use std::f64::consts::PI;

use charflow::scenarios::{datum_points, make_scenario, ScenarioSpec};
use charflow::transform::uniform_grid;
use charflow::{to_characteristic, CharState, FluxModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform runs of the grid as `(start, end, h)`, split at repeated labels
/// and wherever the spacing changes.
fn runs(z: &[f64]) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..z.len() {
        let w = z[k] - z[k - 1];
        if w == 0.0 {
            if k - 1 > start {
                out.push((start, k - 1));
            }
            start = k;
            continue;
        }
        if k - 1 > start {
            let prev = z[k - 1] - z[k - 2];
            if (w - prev).abs() > 1e-6 * w.max(prev) {
                out.push((start, k - 1));
                start = k - 1;
            }
        }
    }
    if z.len() - 1 > start {
        out.push((start, z.len() - 1));
    }
    out.into_iter()
        .map(|(a, b)| (a, b, (z[b] - z[a]) / (b - a) as f64))
        .collect()
}

/// Centred differences inside every run, second-order one-sided at its ends.
fn diff(z: &[f64], f: &[f64]) -> Vec<f64> {
    let mut d = vec![0.0; f.len()];
    for (a, b, h) in runs(z) {
        if b - a == 1 {
            d[a] = (f[b] - f[a]) / h;
            d[b] = d[a];
            continue;
        }
        for i in a + 1..b {
            d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
        }
        d[a] = (4.0 * f[a + 1] - 3.0 * f[a] - f[a + 2]) / (2.0 * h);
        d[b] = (3.0 * f[b] - 4.0 * f[b - 1] + f[b - 2]) / (2.0 * h);
    }
    d
}

/// Corrected trapezoid `int_{z[lo]}^{z[hi]} F` over part of one run.
fn trapezoid(z: &[f64], h: f64, lo: usize, hi: usize, f: impl Fn(usize) -> f64, df: impl Fn(usize) -> f64) -> f64 {
    let mut sum = 0.0;
    for j in lo..hi {
        sum += 0.5 * (z[j + 1] - z[j]) * (f(j) + f(j + 1));
    }
    sum - h * h / 12.0 * (df(hi) - df(lo))
}

/// `P` and `P_x` by direct double loop: for every target node the integrals
/// of `e^{-|s_i - s|} q` to its left and right, each run handled separately
/// with its own end corrections.
pub fn oracle_kernel(z: &[f64], s: &[f64], s_z: &[f64], q: &[f64], q_z: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = z.len();
    let runs = runs(z);
    let mut p = vec![0.0; n];
    let mut px = vec![0.0; n];
    for i in 0..n {
        let (mut left, mut right) = (0.0, 0.0);
        for &(a, b, h) in &runs {
            if a < i {
                let hi = b.min(i);
                let e = |j: usize| (-(s[i] - s[j])).exp();
                left += trapezoid(z, h, a, hi, |j| e(j) * q[j], |j| e(j) * (s_z[j] * q[j] + q_z[j]));
            }
            if b > i {
                let lo = a.max(i);
                let e = |j: usize| (-(s[j] - s[i])).exp();
                right += trapezoid(z, h, lo, b, |j| e(j) * q[j], |j| e(j) * (q_z[j] - s_z[j] * q[j]));
            }
        }
        p[i] = 0.5 * (left + right);
        px[i] = 0.5 * (right - left);
    }
    (p, px)
}

/// Oracle `P`, `P_x` of a characteristic state.
pub fn oracle_source_terms(state: &CharState, model: &FluxModel) -> (Vec<f64>, Vec<f64>) {
    let z = &state.z;
    let c2: Vec<f64> = state.w.iter().map(|w| (0.5 * w).cos().powi(2)).collect();
    let s_z: Vec<f64> = state.v.iter().zip(&c2).map(|(v, c)| v * c).collect();
    let q: Vec<f64> = (0..state.len())
        .map(|i| {
            let u = state.u[i];
            (model.g(u) * c2[i] + 0.5 * model.f2(u) * (1.0 - c2[i])) * state.v[i]
        })
        .collect();
    let ds = diff(z, &s_z);
    let mut s = vec![0.0; z.len()];
    for (a, b, h) in runs(z) {
        for j in a + 1..=b {
            s[j] = s[a] + trapezoid(z, h, a, j, |k| s_z[k], |k| ds[k]);
        }
        // Repeated labels carry the metric across unchanged.
        let mut k = b + 1;
        while k < z.len() && z[k] == z[b] {
            s[k] = s[b];
            k += 1;
        }
    }
    let q_z = diff(z, &q);
    oracle_kernel(z, &s, &s_z, &q, &q_z)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random smooth field on `z`: a few low Fourier modes with random phases.
fn random_modes(rng: &mut ChaCha8Rng, z: &[f64], amplitude: f64) -> Vec<f64> {
    let (lo, hi) = (z[0], z[z.len() - 1]);
    let modes: Vec<(f64, f64, f64)> = (1..=3)
        .map(|k| {
            (
                rng.random_range(-1.0..1.0) * amplitude / k as f64,
                k as f64,
                rng.random_range(0.0..2.0 * PI),
            )
        })
        .collect();
    z.iter()
        .map(|&x| {
            let y = PI * (x - lo) / (hi - lo);
            modes.iter().map(|(a, k, ph)| a * (k * y + ph).sin()).sum()
        })
        .collect()
}

/// Bounded random state on `n` labels of `[-10, 10]`: `|u| <= 2`,
/// `|w| < pi`, `v` in `[0.5, 1.5]`. With `breakpoint` the middle label is
/// repeated and every field jumps there.
pub fn random_state(rng: &mut ChaCha8Rng, n: usize, breakpoint: bool) -> CharState {
    let z = if breakpoint {
        let half = n / 2;
        let mut z = uniform_grid(-10.0, 0.0, half);
        z.extend(uniform_grid(0.0, 10.0, n - half));
        z
    } else {
        uniform_grid(-10.0, 10.0, n)
    };
    let mut u = random_modes(rng, &z, 1.2);
    let mut w: Vec<f64> = random_modes(rng, &z, 2.0).iter().map(|a| 2.5 * a.tanh()).collect();
    let mut v: Vec<f64> = random_modes(rng, &z, 0.4)
        .iter()
        .map(|a| 1.0 + 0.5 * a.tanh())
        .collect();
    if breakpoint {
        let k = n / 2;
        let (du, dw, dv) = (
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.2..0.2),
        );
        for j in k..n {
            u[j] += du;
            w[j] = (w[j] + dw).clamp(-3.0, 3.0);
            v[j] = (v[j] + dv).max(0.3);
        }
    }
    let x = z.clone();
    CharState { t: 0.0, z, u, w, v, x }
}

pub fn scenario_state(spec: &str, n_z: usize) -> (charflow::InitialDatum, CharState) {
    let spec: ScenarioSpec = spec.parse().unwrap();
    let datum = make_scenario(&spec, 30.0, datum_points(n_z)).unwrap();
    let state = to_characteristic(&datum, n_z).unwrap();
    (datum, state)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Observed order of a quantity that drops from `coarse` to `fine` when the
/// resolution doubles.
pub fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}
