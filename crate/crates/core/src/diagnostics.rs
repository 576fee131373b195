//! Checks attached to runs: energy bookkeeping, pointwise identities of the
//! characteristic system, breaking-time statistics, symmetry, the weak form
//! and time regularity of the reconstructed solution.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::integrator::{relative_drift, RunTrace};
use crate::kernel::source_terms;
use crate::quadrature;
use crate::reconstruct::{energy_char, energy_physical, to_physical, PhysicalField};
use crate::transform::{cos2_half, sin2_half, CharState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySample {
    pub t: f64,
    pub e_char: f64,
    /// Physical-space energy, at snapshot times only.
    pub e_phys: Option<f64>,
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub e0: f64,
    pub series: Vec<EnergySample>,
    pub max_drift: f64,
    pub theta_fraction: f64,
}

/// Energy series of `trace`, with the physical energy of every snapshot
/// sampled on `x_grid`.
pub fn energy_report(trace: &RunTrace, x_grid: &[f64]) -> Result<EnergyReport> {
    let mut series: Vec<EnergySample> = trace
        .records
        .iter()
        .map(|r| EnergySample {
            t: r.t,
            e_char: r.energy,
            e_phys: None,
            drift: relative_drift(r.energy, trace.e0),
        })
        .collect();
    for snap in &trace.snapshots {
        let e_phys = energy_physical(&to_physical(snap, x_grid, trace.eps_cos)?).value;
        match series.iter_mut().find(|s| s.t == snap.t) {
            Some(s) => s.e_phys = Some(e_phys),
            None => {
                let e_char = energy_char(snap);
                series.push(EnergySample {
                    t: snap.t,
                    e_char,
                    e_phys: Some(e_phys),
                    drift: relative_drift(e_char, trace.e0),
                });
            }
        }
    }
    series.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(EnergyReport {
        e0: trace.e0,
        max_drift: series.iter().map(|s| s.drift).fold(0.0, f64::max),
        series,
        theta_fraction: theta_sampler(trace),
    })
}

/// Max-norm residuals of `u_Z = v sin(w)/2`, `P_Z = v P_x cos^2(w/2)` and
/// `x_Z = v cos^2(w/2)`, with derivatives taken by second-order differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResiduals {
    pub u_z: f64,
    pub p_z: f64,
    pub x_z: f64,
    /// Labels left out because they or a neighbour are in the breaking set.
    pub masked: usize,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.u_z.max(self.p_z).max(self.x_z)
    }
}

pub fn identity_suite(state: &CharState, model: &FluxModel, eps_cos: f64) -> Result<IdentityResiduals> {
    let n = state.len();
    let z = &state.z;
    let kernel = source_terms(state, model)?;
    let du = quadrature::derivative(z, &state.u);
    let dp = quadrature::derivative(z, &kernel.p);
    let dx = quadrature::derivative(z, &state.x);
    let breaking: Vec<bool> = state.w.iter().map(|&w| cos2_half(w) < eps_cos).collect();
    let skip = |i: usize| breaking[i.saturating_sub(2)..(i + 3).min(n)].iter().any(|&b| b);

    let mut out = IdentityResiduals {
        u_z: 0.0,
        p_z: 0.0,
        x_z: 0.0,
        masked: 0,
    };
    for i in 0..n {
        if skip(i) {
            out.masked += 1;
            continue;
        }
        let (v, w) = (state.v[i], state.w[i]);
        let c2 = cos2_half(w);
        out.u_z = out.u_z.max((du[i] - 0.5 * v * w.sin()).abs());
        out.p_z = out.p_z.max((dp[i] - v * kernel.px[i] * c2).abs());
        out.x_z = out.x_z.max((dx[i] - v * c2).abs());
    }
    Ok(out)
}

/// Fraction of sampled times whose breaking set has measure above ten label
/// spacings. The samples are the recorded steps plus the located breaking
/// instants.
pub fn theta_sampler(trace: &RunTrace) -> f64 {
    let threshold = 10.0 * trace.dz;
    let located: Vec<_> = trace.breaking_events.iter().filter(|e| e.located).collect();
    let total = trace.records.len() + located.len();
    if total == 0 {
        return 0.0;
    }
    let hits = trace.records.iter().filter(|r| r.breaking_measure > threshold).count()
        + located.iter().filter(|e| e.measure > threshold).count();
    hits as f64 / total as f64
}

/// Time intervals during which recorded steps had a non-empty breaking set;
/// a located breaking instant between steps gives a zero-length interval.
pub fn breaking_intervals(trace: &RunTrace) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut open: Option<(f64, f64)> = None;
    for r in &trace.records {
        if r.breaking_cells > 0 {
            open = Some(open.map_or((r.t, r.t), |(a, _)| (a, r.t)));
        } else if let Some(iv) = open.take() {
            out.push(iv);
        }
    }
    out.extend(open);
    for e in trace.breaking_events.iter().filter(|e| e.located) {
        if !out.iter().any(|&(a, b)| a <= e.t && e.t <= b) {
            out.push((e.t, e.t));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// `max |u(x) + u(-x)|` on a grid symmetric about zero.
pub fn antisymmetry_defect(field: &PhysicalField) -> Result<f64> {
    let x = &field.x_grid;
    let n = x.len();
    let scale = x.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    if (0..n).any(|i| (x[i] + x[n - 1 - i]).abs() > 1e-12 * scale) {
        return Err(Error::InvalidState(
            "antisymmetry check needs a grid symmetric about 0".into(),
        ));
    }
    Ok((0..n)
        .map(|i| (field.u[i] + field.u[n - 1 - i]).abs())
        .fold(0.0, f64::max))
}

/// `psi(t, x) = (1 - t/t_end)^2 cos^2(pi (x - center) / (2 radius))` on its
/// support: continuously differentiable with compact support in
/// `[0, t_end) x (center - radius, center + radius)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub t_end: f64,
    pub center: f64,
    pub radius: f64,
}

impl TestFunction {
    fn time(&self, t: f64) -> (f64, f64) {
        let s = (1.0 - t / self.t_end).max(0.0);
        (s * s, -2.0 * s / self.t_end)
    }

    fn space(&self, x: f64) -> (f64, f64) {
        let y = (x - self.center) / self.radius;
        if y.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let a = 0.5 * PI * y;
        (a.cos().powi(2), -(PI / (2.0 * self.radius)) * (2.0 * a).sin())
    }

    /// `(psi, psi_t, psi_x)`.
    pub fn eval(&self, t: f64, x: f64) -> (f64, f64, f64) {
        let (a, at) = self.time(t);
        let (b, bx) = self.space(x);
        (a * b, at * b, a * bx)
    }
}

/// Accumulates the weak form
///
/// ```text
/// int int ( -u_x (psi_t + f'(u) psi_x) + psi (P - g(u) - f''(u) u_x^2 / 2) ) dx dt
///   - int u_x(0, x) psi(0, x) dx
/// ```
///
/// in characteristic variables, where `u_x dx = v sin(w)/2 dZ` and the
/// bracket times `dx` is `((P - g) cos^2(w/2) - f'' sin^2(w/2) / 2) v dZ`.
/// Feed it every accepted state in time order; the time integral is the
/// trapezoid rule over those states.
pub struct WeakForm<'a> {
    psi: TestFunction,
    model: &'a FluxModel,
    last: Option<(f64, (f64, f64))>,
    integral: f64,
    magnitude: f64,
    initial: f64,
}

impl<'a> WeakForm<'a> {
    pub fn new(psi: TestFunction, model: &'a FluxModel) -> Self {
        Self {
            psi,
            model,
            last: None,
            integral: 0.0,
            magnitude: 0.0,
            initial: 0.0,
        }
    }

    pub fn observe(&mut self, state: &CharState) -> Result<()> {
        let kernel = source_terms(state, self.model)?;
        let n = state.len();
        let mut dens = vec![0.0; n];
        let mut abs_dens = vec![0.0; n];
        let mut init = vec![0.0; n];
        for i in 0..n {
            let (u, w, v) = (state.u[i], state.w[i], state.v[i]);
            let (psi, psi_t, psi_x) = self.psi.eval(state.t, state.x[i]);
            let ux_dx = 0.5 * v * w.sin();
            let a = -ux_dx * (psi_t + self.model.f1(u) * psi_x);
            let b = psi * ((kernel.p[i] - self.model.g(u)) * cos2_half(w) - 0.5 * self.model.f2(u) * sin2_half(w)) * v;
            dens[i] = a + b;
            abs_dens[i] = a.abs() + b.abs();
            init[i] = ux_dx * psi;
        }
        // The test function is only C^1, so plain trapezoid sums in Z.
        let wts = quadrature::node_weights(&state.z);
        let dot = |f: &[f64]| wts.iter().zip(f).map(|(w, a)| w * a).sum::<f64>();
        let (value, size) = (dot(&dens), dot(&abs_dens));
        match self.last {
            None => self.initial = dot(&init),
            Some((t0, _)) if state.t <= t0 => {
                return Err(Error::InvalidState("weak form fed out of time order".into()));
            }
            Some((t0, (v0, s0))) => {
                let dt = state.t - t0;
                self.integral += 0.5 * dt * (v0 + value);
                self.magnitude += 0.5 * dt * (s0 + size);
            }
        }
        self.last = Some((state.t, (value, size)));
        Ok(())
    }

    /// Absolute residual.
    pub fn residual(&self) -> f64 {
        (self.integral - self.initial).abs()
    }

    /// Residual relative to the size of the terms it balances.
    pub fn relative_residual(&self) -> f64 {
        self.residual() / (self.magnitude + self.initial.abs()).max(f64::MIN_POSITIVE)
    }
}

/// `||u(t + eps) - u(t)||_{L^2} / eps` for each `eps`, from snapshots of
/// `trace` sampled on `x_grid`.
pub fn lipschitz_constants(trace: &RunTrace, t: f64, eps: &[f64], x_grid: &[f64]) -> Result<Vec<f64>> {
    let field = |s: f64| -> Result<PhysicalField> {
        let snap = trace
            .snapshot_at(s)
            .ok_or_else(|| Error::InvalidState(format!("no snapshot at t = {s}")))?;
        to_physical(snap, x_grid, trace.eps_cos)
    };
    let base = field(t)?;
    eps.iter()
        .map(|&e| {
            let later = field(t + e)?;
            let diff: Vec<f64> = base.u.iter().zip(&later.u).map(|(a, b)| (a - b).powi(2)).collect();
            let l2 = x_grid
                .windows(2)
                .zip(diff.windows(2))
                .map(|(x, d)| 0.5 * (x[1] - x[0]) * (d[0] + d[1]))
                .sum::<f64>()
                .sqrt();
            Ok(l2 / e)
        })
        .collect()
}
