//! Initial data and the change to characteristic coordinates.
//!
//! The label of a characteristic is the cumulative initial energy density
//! `Z(x) = int_0^x (1 + u_x^2)`. On a uniform grid in `Z` the initial state is
//! `u = u0(x(Z))`, `w = 2 atan u0_x(x(Z))`, `v = 1`, and `x = x(Z)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Closed-form initial profile. At a kink `slope` returns the average of the
/// one-sided limits.
pub trait Profile: Send + Sync + fmt::Debug {
    fn value(&self, x: f64) -> f64;
    fn slope(&self, x: f64) -> f64;
    /// Points where the slope jumps.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
    /// One-sided limit of the slope at `x`.
    fn slope_limit(&self, x: f64, from_right: bool) -> f64 {
        let _ = from_right;
        self.slope(x)
    }
}

const GAUSS_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// `int_a^b (1 + u_x^2)` for a closed-form profile, split at its kinks so
/// every piece is smooth (`a <= b`).
fn profile_density_integral(p: &dyn Profile, kinks: &[f64], a: f64, b: f64) -> f64 {
    let piece = |lo: f64, hi: f64| {
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        half * GAUSS_NODES
            .iter()
            .zip(&GAUSS_WEIGHTS)
            .map(|(t, wt)| {
                let d = p.slope(mid + half * t);
                wt * (1.0 + d * d)
            })
            .sum::<f64>()
    };
    let mut lo = a;
    let mut acc = 0.0;
    for &k in kinks.iter().filter(|&&k| a < k && k < b) {
        acc += piece(lo, k);
        lo = k;
    }
    acc + piece(lo, b)
}

/// Sampled initial datum on a truncated interval, optionally backed by a
/// closed form used for exact evaluation at the characteristic feet.
#[derive(Clone)]
pub struct InitialDatum {
    x: Vec<f64>,
    u: Vec<f64>,
    ux: Vec<f64>,
    profile: Option<Arc<dyn Profile>>,
}

impl fmt::Debug for InitialDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InitialDatum")
            .field("len", &self.x.len())
            .field("x_lo", &self.x.first())
            .field("x_hi", &self.x.last())
            .field("profile", &self.profile)
            .finish()
    }
}

impl InitialDatum {
    pub fn new(x: Vec<f64>, u: Vec<f64>, ux: Vec<f64>) -> Result<Self> {
        if x.len() < 3 {
            return Err(Error::InvalidDatum(format!("need at least 3 samples, got {}", x.len())));
        }
        if u.len() != x.len() || ux.len() != x.len() {
            return Err(Error::InvalidDatum(format!(
                "length mismatch: x={}, u={}, ux={}",
                x.len(),
                u.len(),
                ux.len()
            )));
        }
        if let Some(k) = x.windows(2).position(|p| p[1] <= p[0]) {
            return Err(Error::InvalidDatum(format!(
                "x samples must be strictly increasing (index {})",
                k + 1
            )));
        }
        if x.iter().chain(&u).chain(&ux).any(|a| !a.is_finite()) {
            return Err(Error::InvalidDatum("non-finite sample".into()));
        }
        Ok(Self {
            x,
            u,
            ux,
            profile: None,
        })
    }

    /// Samples a closed-form profile on `x`.
    pub fn from_profile(profile: Arc<dyn Profile>, x: Vec<f64>) -> Result<Self> {
        let u = x.iter().map(|&s| profile.value(s)).collect();
        let ux = x.iter().map(|&s| profile.slope(s)).collect();
        let mut datum = Self::new(x, u, ux)?;
        datum.profile = Some(profile);
        Ok(datum)
    }

    /// Datum from `(x, u)` samples only; the slope is taken from five-point
    /// finite differences (fourth order on uniform grids).
    pub fn from_values(x: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        if x.len() < 5 {
            return Err(Error::InvalidDatum(format!(
                "need at least 5 samples to differentiate, got {}",
                x.len()
            )));
        }
        if u.len() != x.len() {
            return Err(Error::InvalidDatum("length mismatch between x and u".into()));
        }
        let ux = five_point_derivative(&x, &u);
        Self::new(x, u, ux)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }
    pub fn u(&self) -> &[f64] {
        &self.u
    }
    pub fn ux(&self) -> &[f64] {
        &self.ux
    }
    pub fn profile(&self) -> Option<&Arc<dyn Profile>> {
        self.profile.as_ref()
    }
    pub fn x_lo(&self) -> f64 {
        self.x[0]
    }
    pub fn x_hi(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    /// Checks that `u` and `u_x` have decayed at both ends.
    pub fn check_decay(&self, decay_tol: f64) -> Result<()> {
        let n = self.x.len() - 1;
        for (k, side) in [(0, "left"), (n, "right")] {
            let worst = self.u[k].abs().max(self.ux[k].abs());
            if worst > decay_tol {
                return Err(Error::InvalidDatum(format!(
                    "datum has not decayed at the {side} end: |u|,|u_x| up to {worst:.3e} > {decay_tol:.3e}"
                )));
            }
        }
        Ok(())
    }

    /// `int (u^2 + u_x^2) dx` by the trapezoid rule on the samples.
    pub fn energy(&self) -> f64 {
        trapezoid_nonuniform(&self.x, |k| self.u[k].powi(2) + self.ux[k].powi(2))
    }

    fn eval_u(&self, xq: f64, cell: usize) -> f64 {
        match &self.profile {
            Some(p) => p.value(xq),
            None => {
                let (x0, x1) = (self.x[cell], self.x[cell + 1]);
                hermite(
                    x0,
                    x1,
                    self.u[cell],
                    self.u[cell + 1],
                    self.ux[cell],
                    self.ux[cell + 1],
                    xq,
                )
            }
        }
    }

    fn eval_ux(&self, xq: f64, cell: usize) -> f64 {
        match &self.profile {
            Some(p) => p.slope(xq),
            None => {
                let (x0, x1) = (self.x[cell], self.x[cell + 1]);
                let th = ((xq - x0) / (x1 - x0)).clamp(0.0, 1.0);
                self.ux[cell] + th * (self.ux[cell + 1] - self.ux[cell])
            }
        }
    }
}

/// State of the semi-linear system at one time.
///
/// The `Z` grid is uniform, or uniform by pieces with each breakpoint label
/// repeated (see [`crate::quadrature`]). `w` is kept unwrapped; only `cos`
/// and `sin` of it are physical.
#[derive(Debug, Clone, PartialEq)]
pub struct CharState {
    pub t: f64,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
    pub x: Vec<f64>,
}

impl CharState {
    /// All fields zero except `v = 1` and `x = Z`.
    pub fn zero(z_lo: f64, z_hi: f64, n: usize) -> Self {
        let z = uniform_grid(z_lo, z_hi, n);
        Self {
            t: 0.0,
            x: z.clone(),
            u: vec![0.0; n],
            w: vec![0.0; n],
            v: vec![1.0; n],
            z,
        }
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Largest label spacing.
    pub fn dz(&self) -> f64 {
        crate::quadrature::max_spacing(&self.z)
    }

    /// Structural checks: equal lengths, finite values, `v > 0`.
    pub fn validate(&self) -> Result<()> {
        let n = self.z.len();
        if n < 3 {
            return Err(Error::InvalidState(format!("grid too small: {n}")));
        }
        for (name, a) in [("u", &self.u), ("w", &self.w), ("v", &self.v), ("x", &self.x)] {
            if a.len() != n {
                return Err(Error::InvalidState(format!(
                    "`{name}` has length {} but grid has {n}",
                    a.len()
                )));
            }
        }
        self.check_finite()?;
        if let Some(k) = self.z.windows(2).position(|p| p[1] < p[0]) {
            return Err(Error::InvalidState(format!("Z decreases at index {}", k + 1)));
        }
        if let Some(k) = self.z.windows(3).position(|p| p[0] == p[1] && p[1] == p[2]) {
            return Err(Error::InvalidState(format!("empty grid piece at index {k}")));
        }
        if let Some(k) = self.v.iter().position(|&v| v <= 0.0) {
            return Err(Error::InvalidState(format!("v <= 0 at index {k}")));
        }
        Ok(())
    }

    pub fn check_finite(&self) -> Result<()> {
        for (field, a) in [("u", &self.u), ("w", &self.w), ("v", &self.v), ("x", &self.x)] {
            if a.iter().any(|s| !s.is_finite()) {
                return Err(Error::StepBlowUp { field, t: self.t });
            }
        }
        Ok(())
    }

    pub fn min_v(&self) -> f64 {
        self.v.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_v(&self) -> f64 {
        self.v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `min_Z cos^2(w/2)`.
    pub fn min_cos2(&self) -> f64 {
        self.w.iter().map(|&w| cos2_half(w)).fold(f64::INFINITY, f64::min)
    }
}

#[inline]
pub fn cos2_half(w: f64) -> f64 {
    let c = (0.5 * w).cos();
    c * c
}

#[inline]
pub fn sin2_half(w: f64) -> f64 {
    let s = (0.5 * w).sin();
    s * s
}

/// `n` evenly spaced points from `lo` to `hi`, both included exactly. The
/// weighted form makes `[-a, a]` grids exactly symmetric.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let m = (n - 1) as f64;
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => ((n - 1 - i) as f64 * lo + i as f64 * hi) / m,
        })
        .collect()
}

/// Cumulative energy coordinate `Z(x) = int_0^x (1 + u_x^2)` at the datum
/// samples (trapezoid rule). The origin is pinned at `x = 0` when it lies in
/// the sampled interval, otherwise at the left end.
pub fn coordinate_of(datum: &InitialDatum) -> Vec<f64> {
    if let Some(p) = datum.profile() {
        return profile_coordinate(p.as_ref(), datum.x());
    }
    let x = datum.x();
    let density: Vec<f64> = datum.ux().iter().map(|p| 1.0 + p * p).collect();
    let mut z = Vec::with_capacity(x.len());
    z.push(0.0);
    for k in 1..x.len() {
        let prev = z[k - 1];
        z.push(prev + 0.5 * (x[k] - x[k - 1]) * (density[k - 1] + density[k]));
    }
    if datum.x_lo() < 0.0 && 0.0 <= datum.x_hi() {
        // Integrate the trapezoid interpolant up to the origin.
        let k = x.partition_point(|&s| s <= 0.0) - 1;
        let offset = if x[k] == 0.0 {
            z[k]
        } else {
            let th = (0.0 - x[k]) / (x[k + 1] - x[k]);
            let d0 = density[k] + th * (density[k + 1] - density[k]);
            z[k] + 0.5 * (0.0 - x[k]) * (density[k] + d0)
        };
        if offset != 0.0 {
            z.iter_mut().for_each(|s| *s -= offset);
        }
    }
    z
}

fn profile_coordinate(p: &dyn Profile, x: &[f64]) -> Vec<f64> {
    let kinks = p.kinks();
    let mut z = Vec::with_capacity(x.len());
    z.push(0.0);
    for k in 1..x.len() {
        let prev = z[k - 1];
        z.push(prev + profile_density_integral(p, &kinks, x[k - 1], x[k]));
    }
    if x[0] < 0.0 && 0.0 <= x[x.len() - 1] {
        let k = x.partition_point(|&s| s <= 0.0) - 1;
        let offset = z[k] + profile_density_integral(p, &kinks, x[k], 0.0);
        z.iter_mut().for_each(|s| *s -= offset);
    }
    z
}

/// Solves `Z(x) = zq` inside `[x0, x1]` where `Z(x0) = z0`, by Newton steps
/// safeguarded with bisection.
fn invert_profile_coordinate(p: &dyn Profile, kinks: &[f64], x0: f64, x1: f64, z0: f64, zq: f64, guess: f64) -> f64 {
    let (mut lo, mut hi) = (x0, x1);
    let mut x = guess.clamp(x0, x1);
    let tol = 4.0 * f64::EPSILON * (1.0 + zq.abs());
    for _ in 0..60 {
        let f = z0 + profile_density_integral(p, kinks, x0, x) - zq;
        if f.abs() <= tol {
            break;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = p.slope(x);
        let next = x - f / (1.0 + d * d);
        x = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if hi - lo <= f64::EPSILON * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Layout of the label grid around kinks of the datum.
///
/// Behind a moving crest the characteristics separate exponentially fast, so
/// the labels next to a kink carry the trailing flank in an interval that
/// shrinks like `e^{-t}`. Each side of every kink label therefore gets
/// `levels` geometrically graded pieces, the finest with spacing
/// `h / 2^levels`. Together the graded pieces hold `layer_fraction` of the
/// labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    pub levels: u32,
    pub layer_fraction: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            levels: 12,
            layer_fraction: 0.5,
        }
    }
}

impl GridOptions {
    pub fn uniform() -> Self {
        Self {
            levels: 0,
            layer_fraction: 0.0,
        }
    }
}

/// Initial characteristic state on `n_z` labels spanning
/// `[Z(x_lo), Z(x_hi)]`, with the default [`GridOptions`].
pub fn to_characteristic(datum: &InitialDatum, n_z: usize) -> Result<CharState> {
    to_characteristic_with(datum, n_z, GridOptions::default())
}

/// Initial characteristic state. Labels of the profile's kinks appear twice,
/// carrying the left and right limits of `w`; between them the grid is
/// uniform apart from the graded layers described by `grid`.
pub fn to_characteristic_with(datum: &InitialDatum, n_z: usize, grid: GridOptions) -> Result<CharState> {
    if n_z < 16 {
        return Err(Error::InvalidDatum(format!("n_Z must be at least 16, got {n_z}")));
    }
    let zmap = coordinate_of(datum);
    if let Some(k) = zmap.windows(2).position(|p| p[1] <= p[0]) {
        return Err(Error::DegenerateCoordinate { x: datum.x()[k] });
    }
    let xs = datum.x();
    // dx/dZ = 1 / (1 + u_x^2) at the samples, limited for monotonicity.
    let slopes = monotone_slopes(&zmap, xs, datum.ux().iter().map(|p| 1.0 / (1.0 + p * p)).collect());
    let kinks = datum.profile().map(|p| p.kinks()).unwrap_or_default();

    // Breakpoints (Z, x), outermost first and last.
    let (z_lo, z_hi) = (zmap[0], zmap[zmap.len() - 1]);
    let mut breaks = vec![(z_lo, datum.x_lo())];
    if let Some(p) = datum.profile() {
        let min_gap = 16.0 * (z_hi - z_lo) / n_z as f64;
        for &k in &kinks {
            if k <= datum.x_lo() || k >= datum.x_hi() {
                continue;
            }
            let cell = locate(xs, k);
            let zk = zmap[cell] + profile_density_integral(p.as_ref(), &kinks, xs[cell], k);
            if zk - breaks[breaks.len() - 1].0 >= min_gap && z_hi - zk >= min_gap {
                breaks.push((zk, k));
            }
        }
    }
    breaks.push((z_hi, datum.x_hi()));
    let layout = label_layout(&breaks, n_z, grid);

    let mut z = Vec::with_capacity(n_z);
    let mut u = Vec::with_capacity(n_z);
    let mut w = Vec::with_capacity(n_z);
    let mut x = Vec::with_capacity(n_z);
    for (piece, labels) in layout.iter().enumerate() {
        let (xa, xb_end) = (breaks[piece].1, breaks[piece + 1].1);
        let last = labels.len() - 1;
        for (j, &zq) in labels.iter().enumerate() {
            let (xb, side) = if j == 0 {
                (xa, Some(true))
            } else if j == last {
                (xb_end, Some(false))
            } else {
                let cell = locate(&zmap, zq);
                let guess = hermite(
                    zmap[cell],
                    zmap[cell + 1],
                    xs[cell],
                    xs[cell + 1],
                    slopes[cell],
                    slopes[cell + 1],
                    zq,
                );
                let xb = match datum.profile() {
                    Some(p) => {
                        invert_profile_coordinate(p.as_ref(), &kinks, xs[cell], xs[cell + 1], zmap[cell], zq, guess)
                    }
                    None => guess,
                };
                (xb, None)
            };
            let xcell = locate(xs, xb);
            let slope = match (datum.profile(), side) {
                (Some(p), Some(from_right)) => p.slope_limit(xb, from_right),
                _ => datum.eval_ux(xb, xcell),
            };
            z.push(zq);
            u.push(datum.eval_u(xb, xcell));
            w.push(2.0 * slope.atan());
            x.push(xb);
        }
    }
    debug_assert!(w.iter().all(|w| w.abs() < PI));
    Ok(CharState {
        t: 0.0,
        v: vec![1.0; z.len()],
        z,
        u,
        w,
        x,
    })
}

/// Label positions for every piece between consecutive breakpoints, `n_z`
/// labels in total. Interior breakpoints get graded layers on both sides;
/// the number of levels is reduced when the pieces are too short for them.
fn label_layout(breaks: &[(f64, f64)], n_z: usize, grid: GridOptions) -> Vec<Vec<f64>> {
    let pieces = breaks.len() - 1;
    let cells = n_z - pieces;
    let span = breaks[pieces].0 - breaks[0].0;
    let layers = 2 * (pieces - 1);
    let mut levels = if layers == 0 { 0 } else { grid.levels };
    let m = if levels == 0 {
        0
    } else {
        ((grid.layer_fraction * n_z as f64) / (layers * levels as usize) as f64).floor() as usize
    };
    if m < 4 {
        levels = 0;
    }
    loop {
        let scale = 2f64.powi(-(levels as i32));
        let extra = (layers * m) as f64 * (levels as f64 - 1.0 + scale);
        let usable = cells as f64 - if levels == 0 { 0.0 } else { extra };
        let h = span / usable;
        let reach = m as f64 * h * (1.0 - scale);
        let fits = usable >= 0.5 * cells as f64
            && (0..pieces).all(|p| {
                let sides = (p > 0) as usize + (p + 1 < pieces) as usize;
                breaks[p + 1].0 - breaks[p].0 >= (sides as f64 * reach) + 4.0 * h
            });
        if levels == 0 || fits {
            return build_layout(breaks, cells, h, if levels == 0 { 0 } else { m }, levels);
        }
        levels -= 1;
    }
}

fn build_layout(breaks: &[(f64, f64)], cells: usize, h: f64, m: usize, levels: u32) -> Vec<Vec<f64>> {
    let pieces = breaks.len() - 1;
    let scale = 2f64.powi(-(levels as i32));
    let reach = m as f64 * h * (1.0 - scale);
    let graded = |p: usize| ((p > 0) as usize, (p + 1 < pieces) as usize);
    // Uniform middle sections, sized by largest remainder to hit `cells`.
    let mids: Vec<(f64, f64)> = (0..pieces)
        .map(|p| {
            let (l, r) = graded(p);
            (breaks[p].0 + l as f64 * reach, breaks[p + 1].0 - r as f64 * reach)
        })
        .collect();
    let layer_cells: usize = (0..pieces)
        .map(|p| {
            let (l, r) = graded(p);
            (l + r) * m * levels as usize
        })
        .sum();
    let mid_cells = split_cells_weighted(
        &mids.iter().map(|(a, b)| b - a).collect::<Vec<_>>(),
        cells - layer_cells,
    );

    (0..pieces)
        .map(|p| {
            let (l, r) = graded(p);
            let mut labels = vec![breaks[p].0];
            let push_range = |lo: f64, hi: f64, n: usize, labels: &mut Vec<f64>| {
                labels.extend(uniform_grid(lo, hi, n + 1).into_iter().skip(1));
            };
            if l == 1 {
                let mut at = breaks[p].0;
                for k in 0..levels {
                    let next = if k + 1 == levels {
                        mids[p].0
                    } else {
                        at + m as f64 * h * 2f64.powi(k as i32 - levels as i32)
                    };
                    push_range(at, next, m, &mut labels);
                    at = next;
                }
            }
            push_range(mids[p].0, mids[p].1, mid_cells[p], &mut labels);
            if r == 1 {
                let mut at = mids[p].1;
                for k in (0..levels).rev() {
                    let next = if k == 0 {
                        breaks[p + 1].0
                    } else {
                        at + m as f64 * h * 2f64.powi(k as i32 - levels as i32)
                    };
                    push_range(at, next, m, &mut labels);
                    at = next;
                }
            }
            labels
        })
        .collect()
}

/// Distributes `total` cells over sections in proportion to their lengths
/// (largest remainder), at least two each.
fn split_cells_weighted(lengths: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = lengths.iter().sum();
    let exact: Vec<f64> = lengths.iter().map(|l| total as f64 * l / sum).collect();
    let mut cells: Vec<usize> = exact.iter().map(|e| (e.floor() as usize).max(2)).collect();
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    let mut k = 0;
    while cells.iter().sum::<usize>() < total {
        cells[order[k % order.len()]] += 1;
        k += 1;
    }
    while cells.iter().sum::<usize>() > total {
        let big = (0..cells.len()).max_by_key(|&i| cells[i]).unwrap();
        cells[big] -= 1;
    }
    cells
}

/// Index `k` with `a[k] <= q <= a[k+1]`, clamped to valid cells.
pub(crate) fn locate(a: &[f64], q: f64) -> usize {
    a.partition_point(|&s| s <= q).saturating_sub(1).min(a.len() - 2)
}

#[inline]
pub(crate) fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, xq: f64) -> f64 {
    let h = x1 - x0;
    let t = (xq - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1
}

/// Fritsch-Carlson limiting of nodal slopes for monotone increasing data.
fn monotone_slopes(xs: &[f64], ys: &[f64], mut d: Vec<f64>) -> Vec<f64> {
    for k in 0..xs.len() - 1 {
        let secant = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
        if secant <= 0.0 {
            d[k] = 0.0;
            d[k + 1] = 0.0;
            continue;
        }
        let a = d[k] / secant;
        let b = d[k + 1] / secant;
        let r2 = a * a + b * b;
        if r2 > 9.0 {
            let tau = 3.0 / r2.sqrt();
            d[k] = tau * a * secant;
            d[k + 1] = tau * b * secant;
        }
    }
    d
}

/// Derivative from the Lagrange polynomial through the five nearest samples.
pub fn five_point_derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(2).min(n - 5);
            let idx = start..start + 5;
            let xi = x[i];
            let mut acc = 0.0;
            for j in idx.clone() {
                // d/dx of the j-th Lagrange basis polynomial at xi.
                let mut denom = 1.0;
                for m in idx.clone() {
                    if m != j {
                        denom *= x[j] - x[m];
                    }
                }
                let mut num = 0.0;
                for k in idx.clone() {
                    if k == j {
                        continue;
                    }
                    let mut prod = 1.0;
                    for m in idx.clone() {
                        if m != j && m != k {
                            prod *= xi - x[m];
                        }
                    }
                    num += prod;
                }
                acc += y[j] * num / denom;
            }
            acc
        })
        .collect()
}

pub(crate) fn trapezoid_nonuniform(x: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    (1..x.len()).map(|k| 0.5 * (x[k] - x[k - 1]) * (f(k - 1) + f(k))).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug)]
    struct Peak;
    impl Profile for Peak {
        fn value(&self, x: f64) -> f64 {
            (-x.abs()).exp()
        }
        fn slope(&self, x: f64) -> f64 {
            -x.signum() * (-x.abs()).exp() * if x == 0.0 { 0.0 } else { 1.0 }
        }
        fn kinks(&self) -> Vec<f64> {
            vec![0.0]
        }
    }

    fn grid(l: f64, n: usize) -> Vec<f64> {
        uniform_grid(-l, l, n)
    }

    #[test]
    fn rejects_malformed_datum() {
        assert!(InitialDatum::new(vec![0.0, 1.0], vec![0.0; 2], vec![0.0; 2]).is_err());
        assert!(InitialDatum::new(vec![0.0, 1.0, 1.0], vec![0.0; 3], vec![0.0; 3]).is_err());
        assert!(InitialDatum::new(vec![0.0, 1.0, 2.0], vec![0.0; 3], vec![0.0; 2]).is_err());
        assert!(InitialDatum::new(vec![0.0, 1.0, 2.0], vec![0.0, f64::NAN, 0.0], vec![0.0; 3]).is_err());
    }

    #[test]
    fn decay_is_checked_at_both_ends() {
        let x = grid(5.0, 101);
        let d = InitialDatum::from_profile(Arc::new(Peak), x).unwrap();
        assert!(d.check_decay(1e-10).is_err());
        assert!(d.check_decay(1e-2).is_ok());
    }

    #[test]
    fn zero_datum_maps_identically() {
        let x = grid(10.0, 201);
        let n = x.len();
        let d = InitialDatum::new(x.clone(), vec![0.0; n], vec![0.0; n]).unwrap();
        let z = coordinate_of(&d);
        for (a, b) in z.iter().zip(&x) {
            assert!((a - b).abs() < 1e-13);
        }
        let s = to_characteristic(&d, 64).unwrap();
        assert!(s.u.iter().all(|&u| u == 0.0));
        assert!(s.w.iter().all(|&w| w == 0.0));
        assert!(s.v.iter().all(|&v| v == 1.0));
        for (x, z) in s.x.iter().zip(&s.z) {
            assert!((x - z).abs() < 1e-12);
        }
    }

    #[test]
    fn peakon_coordinate_matches_closed_form() {
        // Z(x) = x + (1 - e^{-2x}) / 2 for x > 0 and Z(L) - Z(-L) = 2L + 1 - e^{-2L}.
        // An even sample count keeps the crest off the grid.
        let l = 10.0;
        let x = grid(l, 20_000);
        let d = InitialDatum::from_profile(Arc::new(Peak), x.clone()).unwrap();
        let z = coordinate_of(&d);
        let k = x.partition_point(|&s| s < 1.0);
        let exact = x[k] + 0.5 * (1.0 - (-2.0 * x[k]).exp());
        assert!((z[k] - exact).abs() < 1e-6, "{} vs {exact}", z[k]);
        let span = z[z.len() - 1] - z[0];
        assert!((span - (2.0 * l + 1.0 - (-2.0 * l).exp())).abs() < 1e-6);
    }

    #[test]
    fn initial_angle_at_unit_distance() {
        let x = grid(30.0, 16_000);
        let d = InitialDatum::from_profile(Arc::new(Peak), x).unwrap();
        let zmap = coordinate_of(&d);
        // Label of x = -1: Z(-1) = -(1 + (1 - e^{-2}) / 2).
        let z_target = -(1.0 + 0.5 * (1.0 - (-2.0f64).exp()));
        let s = to_characteristic(&d, 4096).unwrap();
        let i =
            s.z.iter()
                .enumerate()
                .min_by(|a, b| (a.1 - z_target).abs().total_cmp(&(b.1 - z_target).abs()))
                .unwrap()
                .0;
        // Evaluate at the node's own foot point to stay independent of grid alignment.
        let expected = 2.0 * (s.x[i]).exp().atan();
        assert!((s.w[i] - expected).abs() < 1e-12);
        assert!((s.x[i] + 1.0).abs() < s.dz());
        assert!((2.0 * (-1.0f64).exp().atan() - 0.705_026_843_555).abs() < 1e-12);
        assert!(zmap.windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn five_point_derivative_is_fourth_order() {
        let err = |n: usize| {
            let x = uniform_grid(-2.0, 2.0, n);
            let y: Vec<f64> = x.iter().map(|s| s.sin()).collect();
            let d = five_point_derivative(&x, &y);
            x.iter()
                .zip(&d)
                .skip(2)
                .take(n - 4)
                .map(|(s, d)| (d - s.cos()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(101) / err(201);
        assert!(ratio > 14.0, "ratio {ratio}");
    }

    #[test]
    fn monotone_limiter_keeps_interpolant_increasing() {
        let xs = [0.0, 1.0, 1.1, 3.0];
        let ys = [0.0, 0.1, 2.0, 2.1];
        let d = monotone_slopes(&xs, &ys, vec![5.0, 5.0, 5.0, 5.0]);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..3 {
            for j in 0..=50 {
                let q = xs[k] + (xs[k + 1] - xs[k]) * j as f64 / 50.0;
                let y = hermite(xs[k], xs[k + 1], ys[k], ys[k + 1], d[k], d[k + 1], q);
                assert!(y >= prev - 1e-12);
                prev = y;
            }
        }
    }
}
