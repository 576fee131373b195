//! Back to physical space: `u(t, x) = u(T, Z)` where `x = x(T, Z)`.
//!
//! `x(T, .)` is non-decreasing in `Z` and may be constant on intervals where
//! several characteristics sit at one point. `u` is constant across such an
//! interval, so the left value is used.

use crate::error::{Error, Result};
use crate::quadrature;
use crate::transform::{cos2_half, CharState};

/// Relative width under which a cell of `x(T, .)` counts as flat.
pub const FLAT_TOL: f64 = 1e-14;

/// Negative steps of `x(T, .)` up to this fraction of its range are taken
/// as integration error on a flat segment and treated as flat.
pub const MONOTONE_SLACK: f64 = 1e-6;

/// A field sampled on a physical grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    pub t: f64,
    pub x_grid: Vec<f64>,
    pub u: Vec<f64>,
    /// `tan(w/2)`; `sign(sin w) * inf` where `mask` is false.
    pub ux: Vec<f64>,
    pub mask: Vec<bool>,
    /// Largest `|u(Z_right) - u(Z_left)|` over flat segments that were hit.
    pub flat_mismatch: f64,
}

impl PhysicalField {
    pub fn masked_fraction(&self) -> f64 {
        if self.mask.is_empty() {
            return 0.0;
        }
        self.mask.iter().filter(|&&m| !m).count() as f64 / self.mask.len() as f64
    }

    pub fn energy(&self) -> EnergyEstimate {
        energy_physical(self)
    }
}

/// Samples `state` on `x_grid` (which need not lie inside `x(T, .)`; values
/// beyond the ends are taken from the end labels).
pub fn to_physical(state: &CharState, x_grid: &[f64], eps_cos: f64) -> Result<PhysicalField> {
    let n = state.x.len();
    let range = (state.x[n - 1] - state.x[0]).abs().max(f64::MIN_POSITIVE);
    for i in 0..n - 1 {
        let dx = state.x[i + 1] - state.x[i];
        if dx < -MONOTONE_SLACK * range || dx.is_nan() {
            return Err(Error::NonMonotoneX { index: i, dx });
        }
    }
    // Running maximum, so tolerated backward steps become flat cells.
    let xs: Vec<f64> = state
        .x
        .iter()
        .scan(f64::NEG_INFINITY, |m, &a| {
            *m = m.max(a);
            Some(*m)
        })
        .collect();
    let flat = FLAT_TOL * range;

    let mut field = PhysicalField {
        t: state.t,
        x_grid: x_grid.to_vec(),
        u: Vec::with_capacity(x_grid.len()),
        ux: Vec::with_capacity(x_grid.len()),
        mask: Vec::with_capacity(x_grid.len()),
        flat_mismatch: 0.0,
    };
    for &xg in x_grid {
        // Last label at or left of xg.
        let j = xs.partition_point(|&a| a <= xg).saturating_sub(1).min(n - 2);
        let dx = xs[j + 1] - xs[j];
        let (u, w) = if xg <= xs[0] {
            (state.u[0], state.w[0])
        } else if xg >= xs[n - 1] {
            (state.u[n - 1], state.w[n - 1])
        } else if dx <= flat {
            field.flat_mismatch = field.flat_mismatch.max((state.u[j + 1] - state.u[j]).abs());
            (state.u[j], state.w[j])
        } else {
            let theta = ((xg - xs[j]) / dx).clamp(0.0, 1.0);
            let u = state.u[j] + theta * (state.u[j + 1] - state.u[j]);
            (u, state.w[j] + theta * (state.w[j + 1] - state.w[j]))
        };
        let valid = cos2_half(w).sqrt() > eps_cos;
        field.u.push(u);
        field.ux.push(if valid {
            (0.5 * w).tan()
        } else {
            w.sin().signum() * f64::INFINITY
        });
        field.mask.push(valid);
    }
    Ok(field)
}

/// Physical energy with a flag for heavily masked fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyEstimate {
    pub value: f64,
    pub masked_fraction: f64,
    /// More than 1% of the grid is masked; `value` only bounds the energy
    /// from below.
    pub lower_bound: bool,
}

/// `int (u^2 + u_x^2) dx` by the trapezoid rule, with masked `u_x` left out.
pub fn energy_physical(field: &PhysicalField) -> EnergyEstimate {
    let x = &field.x_grid;
    let density: Vec<f64> = (0..x.len())
        .map(|i| {
            let ux2 = if field.mask[i] { field.ux[i] * field.ux[i] } else { 0.0 };
            field.u[i] * field.u[i] + ux2
        })
        .collect();
    let value = x
        .windows(2)
        .zip(density.windows(2))
        .map(|(xs, d)| 0.5 * (xs[1] - xs[0]) * (d[0] + d[1]))
        .sum();
    let masked_fraction = field.masked_fraction();
    EnergyEstimate {
        value,
        masked_fraction,
        lower_bound: masked_fraction >= 0.01,
    }
}

/// `E(T) = int (u^2 cos^2(w/2) + sin^2(w/2)) v dZ`.
pub fn energy_char(state: &CharState) -> f64 {
    let e = energy_density(state);
    quadrature::integrate(&state.z, &e, &quadrature::derivative(&state.z, &e))
}

/// `(u^2 cos^2(w/2) + sin^2(w/2)) v` at every label.
pub fn energy_density(state: &CharState) -> Vec<f64> {
    (0..state.len())
        .map(|i| {
            let c = cos2_half(state.w[i]);
            (state.u[i] * state.u[i] * c + (1.0 - c)) * state.v[i]
        })
        .collect()
}

/// Worst ratio `|u(x) - u(y)| / (sqrt(E0) |x - y|^{1/2})` over all pairs at
/// dyadic index separations.
pub fn holder_check(field: &PhysicalField, e0: f64) -> f64 {
    let n = field.u.len();
    if e0 <= 0.0 {
        return if field.u.iter().all(|&u| u == 0.0) {
            0.0
        } else {
            f64::INFINITY
        };
    }
    let root = e0.sqrt();
    let mut worst: f64 = 0.0;
    let mut sep = 1;
    while sep < n {
        for i in 0..n - sep {
            let dx = (field.x_grid[i + sep] - field.x_grid[i]).abs();
            if dx > 0.0 {
                let r = (field.u[i + sep] - field.u[i]).abs() / (root * dx.sqrt());
                worst = worst.max(r);
            }
        }
        sep *= 2;
    }
    worst
}
