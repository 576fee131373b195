//! Classical method-of-lines solver for `u_t + f'(u) u_x + P_x = 0` on a
//! uniform grid. Only meaningful before wave breaking; it exists to check the
//! characteristic pipeline on smooth data.

use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::kernel::{source_terms_physical, KernelResult};
use crate::stepper::{rk4_step, OdeSystem};
use crate::transform::InitialDatum;

/// Runs stop once `sup |u_x|` exceeds this.
pub const DEFAULT_BREAK_THRESHOLD: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalState {
    pub t: f64,
    pub x_grid: Vec<f64>,
    pub u: Vec<f64>,
}

impl ClassicalState {
    /// Takes the samples of `datum`, which must lie on a uniform grid.
    pub fn from_datum(datum: &InitialDatum) -> Result<Self> {
        let x = datum.x();
        let h = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
        if let Some(k) = x.windows(2).position(|p| ((p[1] - p[0]) - h).abs() > 1e-9 * h) {
            return Err(Error::InvalidDatum(format!(
                "classical solver needs a uniform grid (spacing changes at index {k})"
            )));
        }
        Ok(Self {
            t: 0.0,
            x_grid: x.to_vec(),
            u: datum.u().to_vec(),
        })
    }

    pub fn dx(&self) -> f64 {
        (self.x_grid[self.x_grid.len() - 1] - self.x_grid[0]) / (self.x_grid.len() - 1) as f64
    }

    pub fn ux(&self) -> Vec<f64> {
        central_derivative(&self.u, self.dx())
    }

    /// `int (u^2 + u_x^2) dx`, trapezoid rule.
    pub fn energy(&self) -> f64 {
        let ux = self.ux();
        let h = self.dx();
        let d: Vec<f64> = self.u.iter().zip(&ux).map(|(u, p)| u * u + p * p).collect();
        h * (d.iter().sum::<f64>() - 0.5 * (d[0] + d[d.len() - 1]))
    }
}

/// Fourth-order central differences; values beyond the ends are zero.
pub fn central_derivative(u: &[f64], h: f64) -> Vec<f64> {
    let n = u.len();
    let at = |i: isize| if i < 0 || i >= n as isize { 0.0 } else { u[i as usize] };
    (0..n as isize)
        .map(|i| (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / (12.0 * h))
        .collect()
}

/// `du/dt = -f'(u) u_x - P_x`, together with the kernel used.
pub fn classical_rhs_with_kernel(state: &ClassicalState, model: &FluxModel) -> Result<(Vec<f64>, KernelResult)> {
    let ux = state.ux();
    let kernel = source_terms_physical(&state.x_grid, &state.u, &ux, model)?;
    let du: Vec<f64> = (0..state.u.len())
        .map(|i| -model.f1(state.u[i]) * ux[i] - kernel.px[i])
        .collect();
    if du.iter().any(|a| !a.is_finite()) {
        return Err(Error::StepBlowUp { field: "u", t: state.t });
    }
    Ok((du, kernel))
}

pub fn classical_rhs(state: &ClassicalState, model: &FluxModel) -> Result<Vec<f64>> {
    classical_rhs_with_kernel(state, model).map(|(du, _)| du)
}

struct Classical<'a> {
    model: &'a FluxModel,
    x: &'a [f64],
}

impl OdeSystem for Classical<'_> {
    fn dim(&self) -> usize {
        self.x.len()
    }

    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let state = ClassicalState {
            t,
            x_grid: self.x.to_vec(),
            u: y.to_vec(),
        };
        dy.copy_from_slice(&classical_rhs(&state, self.model)?);
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ClassicalOptions {
    pub t_end: f64,
    pub dt: f64,
    pub snapshot_times: Vec<f64>,
    pub break_threshold: f64,
}

impl ClassicalOptions {
    pub fn new(t_end: f64, dt: f64) -> Self {
        Self {
            t_end,
            dt,
            snapshot_times: Vec::new(),
            break_threshold: DEFAULT_BREAK_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassicalRun {
    pub state: ClassicalState,
    pub snapshots: Vec<ClassicalState>,
    pub e0: f64,
    pub max_drift: f64,
    /// Largest `|P|` and `|P_x|` seen over the run.
    pub max_p: f64,
    pub max_px: f64,
}

pub fn classical_run(datum: &InitialDatum, model: &FluxModel, t_end: f64, dt: f64) -> Result<ClassicalRun> {
    classical_run_with(datum, model, &ClassicalOptions::new(t_end, dt))
}

/// RK4 over [`classical_rhs`], stepping exactly onto the snapshot times.
pub fn classical_run_with(datum: &InitialDatum, model: &FluxModel, opts: &ClassicalOptions) -> Result<ClassicalRun> {
    if !(opts.dt > 0.0 && opts.dt.is_finite() && opts.t_end >= 0.0) {
        return Err(Error::Config(format!(
            "classical run needs dt > 0 and t_end >= 0 (dt={}, t_end={})",
            opts.dt, opts.t_end
        )));
    }
    let mut state = ClassicalState::from_datum(datum)?;
    let x = state.x_grid.clone();
    let sys = Classical { model, x: &x };
    let e0 = state.energy();
    let mut run = ClassicalRun {
        state: state.clone(),
        snapshots: Vec::new(),
        e0,
        max_drift: 0.0,
        max_p: 0.0,
        max_px: 0.0,
    };
    let mut targets: Vec<f64> = opts
        .snapshot_times
        .iter()
        .copied()
        .filter(|&t| t <= opts.t_end)
        .chain([opts.t_end])
        .collect();
    targets.sort_by(f64::total_cmp);
    targets.dedup();

    for &target in &targets {
        while state.t < target {
            let step = opts.dt.min(target - state.t);
            let t_next = if target - state.t - step <= 1e-12 * target.max(1.0) {
                target
            } else {
                state.t + step
            };
            observe(&state, model, opts, &mut run)?;
            state.u = rk4_step(&sys, state.t, &state.u, t_next - state.t)?;
            state.t = t_next;
        }
        if opts.snapshot_times.contains(&target) {
            run.snapshots.push(state.clone());
        }
    }
    observe(&state, model, opts, &mut run)?;
    run.state = state;
    Ok(run)
}

fn observe(state: &ClassicalState, model: &FluxModel, opts: &ClassicalOptions, run: &mut ClassicalRun) -> Result<()> {
    let ux = state.ux();
    let sup = ux.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    if sup > opts.break_threshold {
        return Err(Error::BreakingApproached {
            t: state.t,
            sup_ux: sup,
        });
    }
    let kernel = source_terms_physical(&state.x_grid, &state.u, &ux, model)?;
    run.max_p = kernel.p.iter().fold(run.max_p, |m, p| m.max(p.abs()));
    run.max_px = kernel.px.iter().fold(run.max_px, |m, p| m.max(p.abs()));
    let e = state.energy();
    if run.e0 > 0.0 {
        run.max_drift = run.max_drift.max((e - run.e0).abs() / run.e0);
    }
    Ok(())
}

/// Crest position by a parabola through the largest sample and its
/// neighbours.
pub fn crest_position(x: &[f64], u: &[f64]) -> f64 {
    let k = (0..u.len()).max_by(|&a, &b| u[a].total_cmp(&u[b])).unwrap_or(0);
    if k == 0 || k + 1 == u.len() {
        return x[k];
    }
    let (a, b, c) = (u[k - 1], u[k], u[k + 1]);
    let denom = a - 2.0 * b + c;
    if denom == 0.0 {
        return x[k];
    }
    x[k] + 0.5 * (a - c) / denom * (x[k + 1] - x[k])
}
