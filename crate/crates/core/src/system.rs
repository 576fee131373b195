//! Right-hand side of the semi-linear characteristic system
//!
//! ```text
//! u_T = -P_x
//! w_T = 2 (g(u) - P) cos^2(w/2) - f''(u) sin^2(w/2)
//! v_T = (g(u) - P + f''(u)/2) v sin w
//! x_T = f'(u)
//! ```

use crate::error::Result;
use crate::flux::FluxModel;
use crate::kernel::{source_terms, KernelResult};
use crate::quadrature;
use crate::transform::{cos2_half, sin2_half, CharState};

/// Time derivatives of the four state fields.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub du: Vec<f64>,
    pub dw: Vec<f64>,
    pub dv: Vec<f64>,
    pub dx: Vec<f64>,
}

pub fn rhs(state: &CharState, model: &FluxModel) -> Result<StateDerivative> {
    let kernel = source_terms(state, model)?;
    Ok(rhs_with_kernel(state, model, &kernel))
}

/// Pointwise part of the right-hand side, given precomputed `P`, `P_x`.
pub fn rhs_with_kernel(state: &CharState, model: &FluxModel, kernel: &KernelResult) -> StateDerivative {
    let n = state.len();
    let mut d = StateDerivative {
        du: Vec::with_capacity(n),
        dw: Vec::with_capacity(n),
        dv: Vec::with_capacity(n),
        dx: Vec::with_capacity(n),
    };
    for i in 0..n {
        let (u, w, v) = (state.u[i], state.w[i], state.v[i]);
        let g = model.g(u);
        let f2 = model.f2(u);
        let p = kernel.p[i];
        d.du.push(-kernel.px[i]);
        d.dw.push(2.0 * (g - p) * cos2_half(w) - f2 * sin2_half(w));
        d.dv.push((g - p + 0.5 * f2) * v * w.sin());
        d.dx.push(model.f1(u));
    }
    d
}

/// Components of the norm of `X = H^1 x (L^2 cap L^inf) x L^inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormX {
    /// `||u||_{H^1}` of `u(T, .)` as a function of `x`.
    pub u_h1: f64,
    pub w_l2: f64,
    pub w_linf: f64,
    pub v_linf: f64,
}

impl NormX {
    pub fn total(&self) -> f64 {
        self.u_h1 + self.w_l2 + self.w_linf + self.v_linf
    }
}

/// Norm of the state in `X`.
///
/// The `H^1` part is `int (u^2 + u_x^2) dx` written on the label grid with
/// `u_x = u_Z / x_Z` and `dx = x_Z dZ`; labels with `x_Z <= eps` (breaking)
/// are left out. Derivatives are taken within each piece of the grid.
pub fn norm_x(state: &CharState, eps: f64) -> NormX {
    let wts = quadrature::node_weights(&state.z);
    let u_z = quadrature::derivative(&state.z, &state.u);
    let x_z = quadrature::derivative(&state.z, &state.x);
    let h1_sq: f64 = (0..state.len())
        .filter(|&i| x_z[i] > eps)
        .map(|i| wts[i] * (state.u[i] * state.u[i] * x_z[i] + u_z[i] * u_z[i] / x_z[i]))
        .sum();
    let w_l2_sq: f64 = wts.iter().zip(&state.w).map(|(a, w)| a * w * w).sum();
    NormX {
        u_h1: h1_sq.max(0.0).sqrt(),
        w_l2: w_l2_sq.sqrt(),
        w_linf: state.w.iter().fold(0.0, |m: f64, w| m.max(w.abs())),
        v_linf: state.v.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
    }
}
