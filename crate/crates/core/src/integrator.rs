//! Time integration of the characteristic system with fixed-step RK4,
//! energy monitoring, and breaking detection.

use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::kernel::source_terms;
use crate::quadrature;
use crate::reconstruct::energy_char;
use crate::stepper::{rk4_step_from, OdeSystem};
use crate::system::rhs_with_kernel;
use crate::transform::{cos2_half, CharState};

/// Time step selection.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum TimeStep {
    /// `min(dZ / 2, 1e-2) / (1 + max |f'(u_0)|)`.
    #[default]
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Abort when `|E(T) - E(0)| / E(0)` exceeds this.
    pub energy_drift_tol: f64,
    /// Allowed `|u|`, `|u_x|` at the ends of the initial datum.
    pub decay_tol: f64,
    /// Breaking threshold: a label is breaking when `cos^2(w/2) < eps_cos`.
    pub eps_cos: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            energy_drift_tol: 1e-6,
            decay_tol: 1e-10,
            eps_cos: 1e-6,
        }
    }
}

/// Options for one run from a given initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub t_end: f64,
    pub dt: TimeStep,
    pub snapshot_times: Vec<f64>,
    pub tolerances: Tolerances,
    /// Refine a bracketed minimum of `min cos^2(w/2)` below this value by a
    /// golden-section search over the bracketing steps. `0` disables it.
    pub locate_below: f64,
    /// Once the first breaking instant `T*` is located, stop at
    /// `factor * T*` instead of `t_end` (when that is earlier).
    pub end_after_breaking: Option<f64>,
    /// Add the state at every located breaking instant to the snapshots.
    pub snapshot_breaking: bool,
}

impl RunOptions {
    pub fn new(t_end: f64) -> Self {
        Self {
            t_end,
            dt: TimeStep::Auto,
            snapshot_times: Vec::new(),
            tolerances: Tolerances::default(),
            locate_below: 1e-2,
            end_after_breaking: None,
            snapshot_breaking: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::Config(format!("dt must be positive, got {dt}")));
            }
        }
        if let Some(t) = self.snapshot_times.iter().find(|&&t| !(0.0..=self.t_end).contains(&t)) {
            return Err(Error::Config(format!("snapshot time {t} outside [0, {}]", self.t_end)));
        }
        Ok(())
    }
}

/// Diagnostics recorded after every accepted step (and at `T = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub energy: f64,
    pub min_v: f64,
    pub max_v: f64,
    pub min_cos2: f64,
    /// `max_Z u^2`.
    pub max_u2: f64,
    /// `max_Z |w_T|` at this state.
    pub max_dw: f64,
    /// `max_Z |v_T / v| = max |g(u) - P + f''(u)/2| |sin w|`.
    pub v_rate: f64,
    /// `max_Z |P_x|`.
    pub max_px: f64,
    /// Number of labels with `cos^2(w/2) < eps_cos`.
    pub breaking_cells: usize,
    /// Sum of their quadrature weights.
    pub breaking_measure: f64,
}

/// A time at which some labels are at (or within `eps_cos` of) `w = -pi mod 2 pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreakingEvent {
    pub t: f64,
    pub z_lo: f64,
    pub z_hi: f64,
    pub cells: usize,
    /// Sum of the quadrature weights of the cells (`cells * dZ` on a
    /// uniform grid).
    pub measure: f64,
    pub min_cos2: f64,
    /// Found by refining between steps rather than on a step.
    pub located: bool,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub snapshots: Vec<CharState>,
    pub records: Vec<StepRecord>,
    pub breaking_events: Vec<BreakingEvent>,
    pub final_state: CharState,
    pub dt: f64,
    pub dz: f64,
    pub t_end: f64,
    pub e0: f64,
    pub eps_cos: f64,
}

impl RunTrace {
    pub fn energy_series(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.t, r.energy)).collect()
    }

    pub fn min_v_series(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.t, r.min_v)).collect()
    }

    pub fn min_cos_series(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.t, r.min_cos2)).collect()
    }

    /// Largest `|E(T) - E(0)| / max(E(0), tiny)` over the run.
    pub fn max_drift(&self) -> f64 {
        self.records
            .iter()
            .map(|r| relative_drift(r.energy, self.e0))
            .fold(0.0, f64::max)
    }

    /// Earliest breaking time, if any.
    pub fn first_breaking(&self) -> Option<f64> {
        self.breaking_events.iter().map(|e| e.t).min_by(f64::total_cmp)
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&CharState> {
        self.snapshots
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-12 * (1.0 + t.abs()))
    }
}

pub fn relative_drift(e: f64, e0: f64) -> f64 {
    (e - e0).abs() / e0.max(f64::MIN_POSITIVE)
}

/// The characteristic system as a flat ODE: `y = [u | w | v | x]`.
pub struct CharSystem<'a> {
    pub model: &'a FluxModel,
    pub z: &'a [f64],
}

impl CharSystem<'_> {
    pub fn pack(state: &CharState) -> Vec<f64> {
        let mut y = Vec::with_capacity(4 * state.len());
        y.extend_from_slice(&state.u);
        y.extend_from_slice(&state.w);
        y.extend_from_slice(&state.v);
        y.extend_from_slice(&state.x);
        y
    }

    pub fn unpack(&self, t: f64, y: &[f64]) -> CharState {
        let n = self.z.len();
        CharState {
            t,
            z: self.z.to_vec(),
            u: y[..n].to_vec(),
            w: y[n..2 * n].to_vec(),
            v: y[2 * n..3 * n].to_vec(),
            x: y[3 * n..].to_vec(),
        }
    }
}

impl OdeSystem for CharSystem<'_> {
    fn dim(&self) -> usize {
        4 * self.z.len()
    }

    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let n = self.z.len();
        let state = self.unpack(t, y);
        let kernel = source_terms(&state, self.model)?;
        let d = rhs_with_kernel(&state, self.model, &kernel);
        dy[..n].copy_from_slice(&d.du);
        dy[n..2 * n].copy_from_slice(&d.dw);
        dy[2 * n..3 * n].copy_from_slice(&d.dv);
        dy[3 * n..].copy_from_slice(&d.dx);
        Ok(())
    }
}

/// One RK4 step of the characteristic system.
pub fn step_rk4(state: &CharState, dt: f64, model: &FluxModel) -> Result<CharState> {
    if dt == 0.0 || !dt.is_finite() {
        return Err(Error::Config(format!("dt must be nonzero and finite, got {dt}")));
    }
    let sys = CharSystem { model, z: &state.z };
    let y = CharSystem::pack(state);
    let mut k1 = vec![0.0; y.len()];
    sys.eval(state.t, &y, &mut k1)?;
    let next = sys.unpack(state.t + dt, &rk4_step_from(&sys, state.t, &y, dt, &k1)?);
    next.check_finite()?;
    Ok(next)
}

pub fn auto_dt(state: &CharState, model: &FluxModel) -> f64 {
    let speed = state.u.iter().map(|&u| model.f1(u).abs()).fold(0.0, f64::max);
    (0.5 * state.dz()).min(1e-2) / (1.0 + speed)
}

/// Integrates `initial` to `opts.t_end`.
pub fn run_from(initial: CharState, model: &FluxModel, opts: &RunOptions) -> Result<RunTrace> {
    run_observed(initial, model, opts, |_| Ok(()))
}

/// As [`run_from`], calling `observe` on every accepted state (including the
/// initial one).
pub fn run_observed(
    initial: CharState,
    model: &FluxModel,
    opts: &RunOptions,
    mut observe: impl FnMut(&CharState) -> Result<()>,
) -> Result<RunTrace> {
    opts.validate()?;
    initial.validate()?;
    let dt = match opts.dt {
        TimeStep::Auto => auto_dt(&initial, model),
        TimeStep::Fixed(dt) => dt,
    };
    let tol = opts.tolerances;
    let z = initial.z.clone();
    let dz = initial.dz();
    let sys = CharSystem { model, z: &z };

    let mut targets: Vec<f64> = opts
        .snapshot_times
        .iter()
        .copied()
        .filter(|&t| t > initial.t)
        .chain(std::iter::once(opts.t_end))
        .collect();
    targets.sort_by(f64::total_cmp);
    targets.dedup();
    let snapshot_wanted = |t: f64| opts.snapshot_times.contains(&t);

    let e0 = energy_char(&initial);
    let mut snapshots = Vec::new();
    if snapshot_wanted(initial.t) {
        snapshots.push(initial.clone());
    }
    let mut records = Vec::new();
    let mut events = Vec::new();

    let mut y = CharSystem::pack(&initial);
    let mut t = initial.t;
    let mut k1 = vec![0.0; y.len()];
    sys.eval(t, &y, &mut k1)?;
    let mut state = initial;
    let first = record(&state, &k1, tol.eps_cos);
    if let Some(ev) = event_of(&state, &first, tol.eps_cos) {
        events.push(ev);
    }
    records.push(first);
    observe(&state)?;

    // (state, its first stage) one step back, for breaking localisation.
    let mut previous: Option<(CharState, Vec<f64>)> = None;
    let mut step = 0usize;
    let mut t_final = opts.t_end;
    while let Some(target) = targets.iter().copied().find(|&s| s > t) {
        while t < target.min(t_final) {
            let goal = target.min(t_final);
            let remaining = goal - t;
            let h = if remaining <= dt * (1.0 + 1e-9) { remaining } else { dt };
            let y_next = rk4_step_from(&sys, t, &y, h, &k1)?;
            let t_next = if h == remaining { goal } else { t + h };
            let next = sys.unpack(t_next, &y_next);
            next.check_finite()?;
            let mut k1_next = vec![0.0; y.len()];
            sys.eval(t_next, &y_next, &mut k1_next)?;
            step += 1;

            let rec = record(&next, &k1_next, tol.eps_cos);
            let drift = relative_drift(rec.energy, e0);
            if drift > tol.energy_drift_tol {
                return Err(Error::EnergyDriftExceeded {
                    drift,
                    tol: tol.energy_drift_tol,
                    step,
                    t: t_next,
                });
            }
            if rec.min_v <= 0.0 {
                return Err(Error::InvalidState(format!("v lost positivity at T = {t_next}")));
            }

            // A local minimum of min cos^2 at the current state, bracketed by
            // the previous and the next step.
            if opts.locate_below > 0.0 {
                if let Some((prev_state, prev_k1)) = &previous {
                    let m_prev = records[records.len() - 2].min_cos2;
                    let m_cur = records[records.len() - 1].min_cos2;
                    if m_cur < m_prev && m_cur <= rec.min_cos2 && m_cur < opts.locate_below {
                        let span = t_next - prev_state.t;
                        if let Some((ev, at)) = locate_breaking(&sys, prev_state, prev_k1, span, tol.eps_cos)? {
                            if !events.iter().any(|e: &BreakingEvent| e.t == ev.t) {
                                let first = !events.iter().any(|e| e.located);
                                events.push(ev);
                                if opts.snapshot_breaking {
                                    snapshots.push(at);
                                }
                                if let (true, Some(factor)) = (first, opts.end_after_breaking) {
                                    let end = factor * ev.t;
                                    if end < t_final {
                                        t_final = end.max(t_next);
                                        targets.retain(|&s| s < t_final);
                                        targets.push(t_final);
                                    }
                                }
                            }
                        }
                    }
                }
            }

            if let Some(ev) = event_of(&next, &rec, tol.eps_cos) {
                events.push(ev);
            }
            records.push(rec);
            previous = Some((std::mem::replace(&mut state, next), std::mem::replace(&mut k1, k1_next)));
            y = y_next;
            t = t_next;
            observe(&state)?;
        }
        if t == target && snapshot_wanted(target) {
            snapshots.push(state.clone());
        }
    }
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    snapshots.sort_by(|a, b| a.t.total_cmp(&b.t));

    Ok(RunTrace {
        snapshots,
        records,
        breaking_events: events,
        final_state: state,
        dt,
        dz,
        t_end: t_final,
        e0,
        eps_cos: tol.eps_cos,
    })
}

fn record(state: &CharState, k1: &[f64], eps_cos: f64) -> StepRecord {
    let n = state.len();
    let dw = &k1[n..2 * n];
    let dv = &k1[2 * n..3 * n];
    let du = &k1[..n];
    StepRecord {
        t: state.t,
        energy: energy_char(state),
        min_v: state.min_v(),
        max_v: state.max_v(),
        min_cos2: state.min_cos2(),
        max_u2: state.u.iter().map(|u| u * u).fold(0.0, f64::max),
        max_dw: dw.iter().map(|a| a.abs()).fold(0.0, f64::max),
        v_rate: dv.iter().zip(&state.v).map(|(d, v)| (d / v).abs()).fold(0.0, f64::max),
        max_px: du.iter().map(|a| a.abs()).fold(0.0, f64::max),
        breaking_cells: state.w.iter().filter(|&&w| cos2_half(w) < eps_cos).count(),
        breaking_measure: breaking_set(state, eps_cos, false).map_or(0.0, |e| e.measure),
    }
}

fn event_of(state: &CharState, rec: &StepRecord, eps_cos: f64) -> Option<BreakingEvent> {
    if rec.breaking_cells == 0 {
        return None;
    }
    breaking_set(state, eps_cos, false)
}

/// Labels with `cos^2(w/2) < eps_cos` and their measure (sum of quadrature
/// weights, i.e. cell count times `dZ` on a uniform grid).
pub fn breaking_set(state: &CharState, eps_cos: f64, located: bool) -> Option<BreakingEvent> {
    let wts = quadrature::node_weights(&state.z);
    let hit: Vec<usize> = (0..state.len()).filter(|&i| cos2_half(state.w[i]) < eps_cos).collect();
    let (&lo, &hi) = (hit.first()?, hit.last()?);
    Some(BreakingEvent {
        t: state.t,
        z_lo: state.z[lo],
        z_hi: state.z[hi],
        cells: hit.len(),
        measure: hit.iter().map(|&i| wts[i]).sum(),
        min_cos2: state.min_cos2(),
        located,
    })
}

/// Golden-section search for the minimum of `min cos^2(w/2)` over single RK4
/// sub-steps of length `tau in [0, span]` from `start`.
fn locate_breaking(
    sys: &CharSystem<'_>,
    start: &CharState,
    k1: &[f64],
    span: f64,
    eps_cos: f64,
) -> Result<Option<(BreakingEvent, CharState)>> {
    let y0 = CharSystem::pack(start);
    let probe = |tau: f64| -> Result<CharState> {
        let y = rk4_step_from(sys, start.t, &y0, tau, k1)?;
        Ok(sys.unpack(start.t + tau, &y))
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, span);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = probe(c)?.min_cos2();
    let mut fd = probe(d)?.min_cos2();
    while (b - a) > 1e-13 * (1.0 + start.t.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = probe(c)?.min_cos2();
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = probe(d)?.min_cos2();
        }
    }
    let at = probe(0.5 * (a + b))?;
    Ok(breaking_set(&at, eps_cos, true).map(|ev| (ev, at)))
}
