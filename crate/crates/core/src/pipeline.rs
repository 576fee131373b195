//! The commands behind the `charflow` binary: build the datum from a
//! config, run, check the invariant gates and write the run directory.

use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::diagnostics::{breaking_intervals, identity_suite, theta_sampler};
use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::integrator::{auto_dt, run_from, RunTrace, TimeStep};
use crate::io::{self, Report};
use crate::reconstruct::{energy_physical, holder_check, to_physical};
use crate::reference::{classical_run_with, ClassicalOptions};
use crate::scenarios::{datum_points, make_scenario};
use crate::transform::{to_characteristic, CharState, InitialDatum};

/// Process exit status of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Pass = 0,
    GateFailure = 1,
    ConfigError = 2,
    PreBreakingViolation = 3,
}

impl ExitStatus {
    pub fn of_error(e: &Error) -> Self {
        match e {
            Error::Config(_)
            | Error::UnknownScenario(_)
            | Error::Parse { .. }
            | Error::InvalidDatum(_)
            | Error::InvalidModel(_)
            | Error::DegenerateCoordinate { .. } => ExitStatus::ConfigError,
            Error::BreakingApproached { .. } => ExitStatus::PreBreakingViolation,
            _ => ExitStatus::GateFailure,
        }
    }
}

/// A named pass/fail check.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Gate {
    fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub gates: Vec<Gate>,
    pub report: Report,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }

    pub fn failing(&self) -> Vec<&Gate> {
        self.gates.iter().filter(|g| !g.passed).collect()
    }

    pub fn status(&self) -> ExitStatus {
        if self.passed() {
            ExitStatus::Pass
        } else {
            ExitStatus::GateFailure
        }
    }
}

/// Initial datum of `cfg`, checked for decay at the ends.
pub fn datum_of(cfg: &RunConfig) -> Result<InitialDatum> {
    let datum = make_scenario(&cfg.scenario, cfg.run.half_length, datum_points(cfg.run.n_z))?;
    datum.check_decay(cfg.tolerances.decay_tol)?;
    Ok(datum)
}

pub fn initial_state(cfg: &RunConfig) -> Result<(FluxModel, CharState)> {
    let model = cfg.model()?;
    let state = to_characteristic(&datum_of(cfg)?, cfg.run.n_z)?;
    Ok((model, state))
}

/// Checks the config and the datum without integrating.
pub fn validate(cfg: &RunConfig) -> Result<Report> {
    let (model, state) = initial_state(cfg)?;
    state.validate()?;
    let dt = match cfg.run.dt.0 {
        TimeStep::Auto => auto_dt(&state, &model),
        TimeStep::Fixed(dt) => dt,
    };
    let mut r = Report::new();
    r.push("scenario", &cfg.scenario);
    r.push("model", model.name());
    r.push("n_z", state.len());
    r.push("dz", state.dz());
    r.push("dt", dt);
    r.push("e0", crate::reconstruct::energy_char(&state));
    r.push("status", "valid");
    Ok(r)
}

/// Runs `cfg` and writes `energy.csv`, `char_NNNN.csv`, `field_NNNN.csv` and
/// `report.txt` into `out`.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (model, state) = initial_state(cfg)?;
    let mut report = Report::new();
    report.push("command", "simulate");
    report.push("scenario", &cfg.scenario);
    report.push("model", model.name());
    report.push("n_z", cfg.run.n_z);

    let trace = match run_from(state, &model, &cfg.run_options()) {
        Ok(trace) => trace,
        Err(e) if ExitStatus::of_error(&e) == ExitStatus::GateFailure => {
            let gate = Gate::new("run_completes", false, e.to_string());
            report.push("gate.run_completes", format!("fail ({e})"));
            report.push("status", "fail");
            let path = out.join(io::REPORT_FILE);
            io::write_file(&path, &report.render())?;
            return Ok(Outcome {
                gates: vec![gate],
                report,
                files: vec![path],
            });
        }
        Err(e) => return Err(e),
    };
    let mut files = Vec::new();
    let mut gates = vec![Gate::new("run_completes", true, format!("reached T = {}", trace.t_end))];
    gates.extend(trace_gates(&trace, cfg));
    summarize_trace(&mut report, &trace);
    // |u| <= sqrt(E0) bounds the range f'' is evaluated on.
    report.push("f2_sup", model.f2_sup_on(trace.e0.sqrt()));

    let path = out.join(io::ENERGY_FILE);
    io::write_file(&path, &io::energy_csv(&trace))?;
    files.push(path);

    let x_grid = cfg.x_grid();
    let mut monotone = Gate::new("x_monotone", true, "all snapshots");
    for (k, snap) in trace.snapshots.iter().enumerate() {
        let path = out.join(io::numbered_name("char", k));
        io::write_file(&path, &io::snapshot_csv(snap))?;
        files.push(path);
        let field = match to_physical(snap, &x_grid, cfg.tolerances.eps_cos) {
            Ok(f) => f,
            Err(e) => {
                monotone = Gate::new("x_monotone", false, format!("T = {}: {e}", snap.t));
                continue;
            }
        };
        let path = out.join(io::numbered_name("field", k));
        io::write_file(&path, &io::field_csv(&field))?;
        files.push(path);

        let e = energy_physical(&field);
        let key = format!("snapshot.{k:04}");
        report.push(format!("{key}.t"), snap.t);
        report.push(format!("{key}.e_char"), crate::reconstruct::energy_char(snap));
        report.push(format!("{key}.e_phys"), e.value);
        report.push(format!("{key}.e_phys_lower_bound"), e.lower_bound);
        report.push(format!("{key}.masked_fraction"), e.masked_fraction);
        report.push(format!("{key}.holder_ratio"), holder_check(&field, trace.e0));
        report.push(format!("{key}.flat_mismatch"), field.flat_mismatch);
        let id = identity_suite(snap, &model, cfg.tolerances.eps_cos)?;
        report.push(format!("{key}.identity_u_z"), id.u_z);
        report.push(format!("{key}.identity_p_z"), id.p_z);
        report.push(format!("{key}.identity_x_z"), id.x_z);
    }
    gates.push(monotone);

    for g in &gates {
        let value = if g.passed {
            "pass".to_string()
        } else {
            format!("fail ({})", g.detail)
        };
        report.push(format!("gate.{}", g.name), value);
    }
    report.push("status", if gates.iter().all(|g| g.passed) { "pass" } else { "fail" });
    let path = out.join(io::REPORT_FILE);
    io::write_file(&path, &report.render())?;
    files.push(path);
    Ok(Outcome { gates, report, files })
}

fn trace_gates(trace: &RunTrace, cfg: &RunConfig) -> Vec<Gate> {
    let tol = cfg.tolerances.energy_drift_tol;
    let drift = trace.max_drift();
    let min_v = trace.records.iter().map(|r| r.min_v).fold(f64::INFINITY, f64::min);
    let max_v = trace.records.iter().map(|r| r.max_v).fold(0.0, f64::max);
    let max_u2 = trace.records.iter().map(|r| r.max_u2).fold(0.0, f64::max);
    vec![
        Gate::new("energy_drift", drift <= tol, format!("max drift {drift:e} > {tol:e}")),
        Gate::new(
            "v_bounds",
            min_v > 0.0 && max_v.is_finite(),
            format!("v in [{min_v:e}, {max_v:e}]"),
        ),
        Gate::new(
            "sup_bound",
            max_u2 <= trace.e0 * (1.0 + tol),
            format!("max u^2 = {max_u2:e} > E0 = {:e}", trace.e0),
        ),
    ]
}

fn summarize_trace(r: &mut Report, trace: &RunTrace) {
    let fold_max = |f: fn(&crate::integrator::StepRecord) -> f64| trace.records.iter().map(f).fold(0.0, f64::max);
    r.push("t_end", trace.t_end);
    r.push("dt", trace.dt);
    r.push("dz", trace.dz);
    r.push("steps", trace.records.len() - 1);
    r.push("e0", trace.e0);
    r.push("max_drift", trace.max_drift());
    r.push(
        "min_v",
        trace.records.iter().map(|r| r.min_v).fold(f64::INFINITY, f64::min),
    );
    r.push("max_v", fold_max(|r| r.max_v));
    r.push("max_v_rate", fold_max(|r| r.v_rate));
    r.push("max_dw", fold_max(|r| r.max_dw));
    r.push("max_px", fold_max(|r| r.max_px));
    r.push("max_u2", fold_max(|r| r.max_u2));
    r.push(
        "min_cos2",
        trace.records.iter().map(|r| r.min_cos2).fold(f64::INFINITY, f64::min),
    );
    r.push("breaking_events", trace.breaking_events.len());
    r.push(
        "first_breaking",
        trace.first_breaking().map_or("none".to_string(), |t| t.to_string()),
    );
    for (k, e) in trace.breaking_events.iter().enumerate() {
        r.push(
            format!("breaking.{k:04}"),
            format!(
                "t={} z=[{}, {}] measure={} located={}",
                e.t, e.z_lo, e.z_hi, e.measure, e.located
            ),
        );
    }
    let intervals = breaking_intervals(trace);
    let length: f64 = intervals.iter().map(|(a, b)| b - a).sum();
    r.push("breaking_time_fraction", length / trace.t_end);
    r.push("theta_fraction", theta_sampler(trace));
}

/// Differences between the characteristic pipeline and the classical solver.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// `(t, max_x |u_char - u_classical|)` at every compared time.
    pub rows: Vec<(f64, f64)>,
    pub classical_drift: f64,
    pub char_drift: f64,
}

impl Comparison {
    pub fn max_diff(&self) -> f64 {
        self.rows.iter().map(|r| r.1).fold(0.0, f64::max)
    }
}

/// Runs both solvers on the datum of `cfg` (the classical one on `n_z`
/// uniform points) and compares them at the snapshot times and `t_end`.
pub fn compare_solvers(cfg: &RunConfig) -> Result<Comparison> {
    if !cfg.scenario.is_smooth() {
        return Err(Error::Config(format!(
            "compare needs a smooth scenario, got {}",
            cfg.scenario
        )));
    }
    let model = cfg.model()?;
    let mut opts = cfg.run_options();
    opts.end_after_breaking = None;
    opts.snapshot_breaking = false;
    let mut times: Vec<f64> = cfg.run.snapshot_times.iter().copied().filter(|&t| t > 0.0).collect();
    times.push(cfg.run.t_end);
    times.sort_by(f64::total_cmp);
    times.dedup();
    opts.snapshot_times = times.clone();

    let classical_datum = make_scenario(&cfg.scenario, cfg.run.half_length, cfg.run.n_z)?;
    classical_datum.check_decay(cfg.tolerances.decay_tol)?;
    let mut copts = ClassicalOptions::new(cfg.run.t_end, cfg.compare.dt);
    copts.snapshot_times = times.clone();
    copts.break_threshold = cfg.compare.break_threshold;
    let classical = classical_run_with(&classical_datum, &model, &copts)?;

    let trace = run_from(to_characteristic(&datum_of(cfg)?, cfg.run.n_z)?, &model, &opts)?;
    let mut rows = Vec::new();
    for snap in &classical.snapshots {
        let char_state = trace
            .snapshot_at(snap.t)
            .ok_or_else(|| Error::InvalidState(format!("missing snapshot at t = {}", snap.t)))?;
        let field = to_physical(char_state, &snap.x_grid, cfg.tolerances.eps_cos)?;
        let diff = field
            .u
            .iter()
            .zip(&snap.u)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        rows.push((snap.t, diff));
    }
    Ok(Comparison {
        rows,
        classical_drift: classical.max_drift,
        char_drift: trace.max_drift(),
    })
}

/// `compare` command: writes `compare.csv` and `report.txt`.
pub fn compare(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let cmp = compare_solvers(cfg)?;
    let mut csv = String::from("t,max_diff\n");
    for (t, d) in &cmp.rows {
        csv.push_str(&format!("{t},{d}\n"));
    }
    let csv_path = out.join("compare.csv");
    io::write_file(&csv_path, &csv)?;

    let tol = cfg.compare.tolerance;
    let worst = cmp.max_diff();
    let gate = Gate::new("max_diff", worst <= tol, format!("{worst:e} > {tol:e}"));
    let mut report = Report::new();
    report.push("command", "compare");
    report.push("scenario", &cfg.scenario);
    report.push("model", cfg.model()?.name());
    report.push("n_z", cfg.run.n_z);
    report.push("classical_dt", cfg.compare.dt);
    report.push("max_diff", worst);
    report.push("classical_drift", cmp.classical_drift);
    report.push("char_drift", cmp.char_drift);
    report.push(
        "gate.max_diff",
        if gate.passed {
            "pass".to_string()
        } else {
            format!("fail ({})", gate.detail)
        },
    );
    report.push("status", if gate.passed { "pass" } else { "fail" });
    let report_path = out.join(io::REPORT_FILE);
    io::write_file(&report_path, &report.render())?;
    Ok(Outcome {
        gates: vec![gate],
        report,
        files: vec![csv_path, report_path],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> RunConfig {
        RunConfig::from_toml(text).unwrap()
    }

    #[test]
    fn zero_scenario_passes_with_zero_energy() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg("scenario = \"zero\"\n[run]\nt_end = 0.5\nn_z = 64\nsnapshot_times = [0.25]\n");
        let out = simulate(&c, dir.path()).unwrap();
        assert!(out.passed(), "{:?}", out.failing());
        let energy = io::read_energy_csv(&dir.path().join(io::ENERGY_FILE)).unwrap();
        assert!(energy.iter().all(|r| r.e == 0.0));
        assert_eq!(out.report.get("status"), Some("pass"));
        assert_eq!(out.report.get("f2_sup"), Some("1"));
        assert!(dir.path().join("field_0000.csv").exists());
    }

    #[test]
    fn drift_failure_is_a_gate() {
        let dir = tempfile::tempdir().unwrap();
        let c =
            cfg("scenario = \"peakon(1, 0)\"\n[run]\nt_end = 1\nn_z = 64\n[tolerances]\nenergy_drift_tol = 1e-14\n");
        let out = simulate(&c, dir.path()).unwrap();
        assert_eq!(out.status(), ExitStatus::GateFailure);
        assert!(Report::read(&dir.path().join(io::REPORT_FILE))
            .unwrap()
            .get("gate.run_completes")
            .unwrap()
            .starts_with("fail"));
    }

    #[test]
    fn compare_zero_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg("scenario = \"zero\"\n[run]\nt_end = 0.1\nn_z = 64\n[compare]\ndt = 0.01\n");
        let out = compare(&c, dir.path()).unwrap();
        assert!(out.passed());
        assert_eq!(out.report.get("max_diff"), Some("0"));
    }

    #[test]
    fn compare_rejects_peaked_data() {
        let c = cfg("scenario = \"peakon(1, 0)\"\n[run]\nt_end = 0.1\nn_z = 64\n");
        let e = compare_solvers(&c).unwrap_err();
        assert_eq!(ExitStatus::of_error(&e), ExitStatus::ConfigError);
    }

    #[test]
    fn undecayed_datum_is_rejected() {
        let c = cfg("scenario = \"gaussian(1, 10)\"\n[run]\nt_end = 0.1\nn_z = 64\n");
        assert_eq!(
            ExitStatus::of_error(&validate(&c).unwrap_err()),
            ExitStatus::ConfigError
        );
    }
}
