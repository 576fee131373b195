//! Nonlocal source terms `P = p * (g(u) + f''(u) u_x^2 / 2)` and `P_x`, with
//! `p = e^{-|x|} / 2`.
//!
//! In characteristic variables the kernel distance between two labels is the
//! metric `s(Z') - s(Z) = int_Z^Z' v cos^2(w/2)`, and the density becomes
//! `q = (g(u) cos^2(w/2) + f''(u)/2 sin^2(w/2)) v`. Both forms reduce to one
//! primitive: an exponentially damped two-sided scan over a non-decreasing
//! position array, O(N) per evaluation.

use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::quadrature;
use crate::transform::{cos2_half, sin2_half, CharState};

/// `P` and `P_x` sampled on the characteristic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelResult {
    pub p: Vec<f64>,
    pub px: Vec<f64>,
}

/// Cumulative metric along the label grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricAccumulator {
    pub s: Vec<f64>,
}

/// Cumulative metric `s(Z) = int_{Z_0}^Z v cos^2(w/2)`.
pub fn cumulative_metric(state: &CharState) -> MetricAccumulator {
    let m = metric_density(state);
    let m_z = quadrature::derivative(&state.z, &m);
    let mut s = quadrature::cumulative(&state.z, &m, &m_z);
    // The end corrections can undo monotonicity by rounding-sized amounts
    // where m vanishes.
    for i in 1..s.len() {
        if s[i] < s[i - 1] {
            s[i] = s[i - 1];
        }
    }
    MetricAccumulator { s }
}

/// `s_Z = v cos^2(w/2)`.
pub fn metric_density(state: &CharState) -> Vec<f64> {
    state.w.iter().zip(&state.v).map(|(&w, &v)| v * cos2_half(w)).collect()
}

/// Characteristic-space density `(g(u) cos^2(w/2) + f''(u)/2 sin^2(w/2)) v`.
pub fn char_density(state: &CharState, model: &FluxModel) -> Vec<f64> {
    state
        .u
        .iter()
        .zip(&state.w)
        .zip(&state.v)
        .map(|((&u, &w), &v)| (model.g(u) * cos2_half(w) + 0.5 * model.f2(u) * sin2_half(w)) * v)
        .collect()
}

/// `P` and `P_x` at every label of `state`.
pub fn source_terms(state: &CharState, model: &FluxModel) -> Result<KernelResult> {
    let metric = cumulative_metric(state);
    let q = char_density(state, model);
    let q_z = quadrature::derivative(&state.z, &q);
    let out = kernel_quadrature(&state.z, &metric.s, &metric_density(state), &q, &q_z);
    check_finite(&out, state.t)?;
    Ok(out)
}

/// Physical-space `P`, `P_x` on a uniform `x` grid from samples of `u`, `u_x`.
pub fn source_terms_physical(x: &[f64], u: &[f64], ux: &[f64], model: &FluxModel) -> Result<KernelResult> {
    let q: Vec<f64> = u
        .iter()
        .zip(ux)
        .map(|(&u, &p)| model.g(u) + 0.5 * model.f2(u) * p * p)
        .collect();
    let q_x = quadrature::derivative(x, &q);
    let out = kernel_quadrature(x, x, &vec![1.0; x.len()], &q, &q_x);
    check_finite(&out, f64::NAN)?;
    Ok(out)
}

fn check_finite(k: &KernelResult, t: f64) -> Result<()> {
    if k.p.iter().any(|a| !a.is_finite()) {
        return Err(Error::StepBlowUp { field: "P", t });
    }
    if k.px.iter().any(|a| !a.is_finite()) {
        return Err(Error::StepBlowUp { field: "P_x", t });
    }
    Ok(())
}

/// Two-sided exponential scan with trapezoid cells:
///
/// `left[i]  = int_{Z_0}^{Z_i} e^{-(s_i - s')} q`,
/// `right[i] = int_{Z_i}^{Z_end} e^{-(s' - s_i)} q`,
///
/// returning `P = (left + right) / 2` and `P_x = (right - left) / 2`. The node
/// at `Z_i` enters both half-integrals with the same weight, so it cancels from
/// `P_x`. `pos` must be non-decreasing; cell widths come from `z`.
pub fn exp_kernel_scan(z: &[f64], pos: &[f64], q: &[f64]) -> KernelResult {
    let n = pos.len();
    debug_assert_eq!(q.len(), n);
    debug_assert_eq!(z.len(), n);
    // Per-cell damping factors, shared by both sweeps.
    let damp: Vec<f64> = pos.windows(2).map(|p| (-(p[1] - p[0])).exp()).collect();

    let mut left = vec![0.0; n];
    for i in 1..n {
        let d = damp[i - 1];
        let half = 0.5 * (z[i] - z[i - 1]);
        left[i] = left[i - 1] * d + half * (d * q[i - 1] + q[i]);
    }
    let mut right = vec![0.0; n];
    for i in (0..n - 1).rev() {
        let d = damp[i];
        let half = 0.5 * (z[i + 1] - z[i]);
        right[i] = right[i + 1] * d + half * (d * q[i + 1] + q[i]);
    }
    let p = left.iter().zip(&right).map(|(l, r)| 0.5 * (l + r)).collect();
    let px = left.iter().zip(&right).map(|(l, r)| 0.5 * (r - l)).collect();
    KernelResult { p, px }
}

/// [`exp_kernel_scan`] plus the Euler-Maclaurin end terms of every piece of
/// the grid and of the kink of `e^{-|s_i - s'|}` at the node itself.
///
/// With `F(Z') = e^{-|s_i - s(Z')|} q(Z')`, a piece `[a, b]` of spacing `h`
/// contributes `-h^2/12 (F'(b) - F'(a))`; here
/// `F' = e^{-|s_i - s'|} (+- s_Z q + q_Z)` (plus on the left of `Z_i`), so the
/// piece ends act as point sources carried by the same damped sweeps.
pub fn kernel_quadrature(z: &[f64], pos: &[f64], pos_z: &[f64], q: &[f64], q_z: &[f64]) -> KernelResult {
    let n = pos.len();
    let mut out = exp_kernel_scan(z, pos, q);
    let mut src_l = vec![0.0; n];
    let mut src_r = vec![0.0; n];
    let mut self_l = vec![0.0; n];
    let mut self_r = vec![0.0; n];
    for p in quadrature::pieces(z) {
        let c = p.h * p.h / 12.0;
        for i in p.start..=p.end {
            let dl = pos_z[i] * q[i] + q_z[i];
            let dr = -pos_z[i] * q[i] + q_z[i];
            if i == p.start {
                src_l[i] += c * dl;
                src_r[i] += c * dr;
            } else {
                self_l[i] = -c * dl;
            }
            if i == p.end {
                src_l[i] -= c * dl;
                src_r[i] -= c * dr;
            } else {
                self_r[i] = c * dr;
            }
        }
    }
    let mut acc = 0.0;
    let mut left = vec![0.0; n];
    for i in 0..n {
        if i > 0 {
            acc = (acc + src_l[i - 1]) * (-(pos[i] - pos[i - 1])).exp();
        }
        left[i] = acc + self_l[i];
    }
    acc = 0.0;
    for i in (0..n).rev() {
        if i + 1 < n {
            acc = (acc + src_r[i + 1]) * (-(pos[i + 1] - pos[i])).exp();
        }
        let right = acc + self_r[i];
        out.p[i] += 0.5 * (left[i] + right);
        out.px[i] += 0.5 * (right - left[i]);
    }
    out
}

/// Closed-form `L^1` norms of the kernel-decay envelopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelBounds {
    /// `||Lambda||_{L^1} = 2 mu^2 + 4 / v_minus`.
    pub lambda_l1: f64,
    /// `||Gamma||_{L^1} = 4 (E + 1) / v_minus`.
    pub gamma_l1: f64,
    /// Observed `min v` and `||w||_{L^2}` of the supplied state, for comparison
    /// with the parameters the envelopes were built from.
    pub state_min_v: f64,
    pub state_w_l2: f64,
}

pub fn kernel_bound_report(state: &CharState, mu: f64, v_minus: f64, v_plus: f64, e_bar: f64) -> Result<KernelBounds> {
    if !(v_minus > 0.0) {
        return Err(Error::InvalidState(format!("v_minus must be positive, got {v_minus}")));
    }
    if v_plus < v_minus {
        return Err(Error::InvalidState(format!(
            "v_plus ({v_plus}) must not be below v_minus ({v_minus})"
        )));
    }
    let w2: Vec<f64> = state.w.iter().map(|w| w * w).collect();
    let w_l2 = quadrature::integrate(&state.z, &w2, &quadrature::derivative(&state.z, &w2)).sqrt();
    Ok(KernelBounds {
        lambda_l1: 2.0 * mu * mu + 4.0 / v_minus,
        gamma_l1: 4.0 * (e_bar + 1.0) / v_minus,
        state_min_v: state.min_v(),
        state_w_l2: w_l2,
    })
}
