//! Run configuration files (TOML).
//!
//! ```toml
//! scenario = "antipeakon_pair(1, 5)"
//!
//! [model]
//! type = "camassa_holm"
//!
//! [run]
//! t_end = 12.0
//! end_after_breaking = 1.5
//! dt = "auto"
//! n_z = 4096
//! snapshot_times = [0.0, 2.0, 4.0]
//!
//! [tolerances]
//! energy_drift_tol = 1e-6
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::flux::{FluxModel, ModelSpec};
use crate::integrator::{RunOptions, TimeStep, Tolerances};
use crate::scenarios::{ScenarioSpec, DEFAULT_HALF_LENGTH};
use crate::transform::uniform_grid;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    #[serde(default = "default_model")]
    pub model: ModelSpec,
    pub run: RunSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub compare: CompareSection,
}

fn default_model() -> ModelSpec {
    ModelSpec::CamassaHolm
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub t_end: f64,
    /// Stop at this multiple of the first breaking time, when earlier than
    /// `t_end`.
    #[serde(default)]
    pub end_after_breaking: Option<f64>,
    #[serde(default, deserialize_with = "time_step")]
    pub dt: TimeStepSetting,
    pub n_z: usize,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default = "default_half_length")]
    pub half_length: f64,
}

fn default_half_length() -> f64 {
    DEFAULT_HALF_LENGTH
}

/// `dt = "auto"` or a positive number.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TimeStepSetting(pub TimeStep);

fn time_step<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<TimeStepSetting, D::Error> {
    struct V;
    impl Visitor<'_> for V {
        type Value = TimeStepSetting;
        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("\"auto\" or a positive number")
        }
        fn visit_str<E: de::Error>(self, s: &str) -> std::result::Result<Self::Value, E> {
            match s {
                "auto" => Ok(TimeStepSetting(TimeStep::Auto)),
                other => Err(E::custom(format!("expected \"auto\", got \"{other}\""))),
            }
        }
        fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Self::Value, E> {
            Ok(TimeStepSetting(TimeStep::Fixed(v)))
        }
        fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
            Ok(TimeStepSetting(TimeStep::Fixed(v as f64)))
        }
    }
    de.deserialize_any(V)
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSection {
    pub energy_drift_tol: f64,
    pub decay_tol: f64,
    pub eps_cos: f64,
}

impl Default for ToleranceSection {
    fn default() -> Self {
        let t = Tolerances::default();
        Self {
            energy_drift_tol: t.energy_drift_tol,
            decay_tol: t.decay_tol,
            eps_cos: t.eps_cos,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Points of the uniform physical grid for field output; `0` picks
    /// `2 n_z + 1`.
    pub x_points: usize,
    /// Add the state at each located breaking instant to the snapshots.
    pub snapshot_breaking: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            x_points: 0,
            snapshot_breaking: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSection {
    /// Time step of the classical solver.
    pub dt: f64,
    /// Pass when the largest difference stays below this.
    pub tolerance: f64,
    /// Classical runs stop once `sup |u_x|` exceeds this.
    pub break_threshold: f64,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            dt: 2.5e-4,
            tolerance: 5e-3,
            break_threshold: crate::reference::DEFAULT_BREAK_THRESHOLD,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates `path`; a relative `custom_file` path is taken
    /// relative to the directory of the config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if let ScenarioSpec::CustomFile(file) = &cfg.scenario {
            if file.is_relative() {
                let base = path.parent().map(PathBuf::from).unwrap_or_default();
                cfg.scenario = ScenarioSpec::CustomFile(base.join(file));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.run;
        if r.n_z < 16 {
            return Err(Error::Config(format!("run.n_z must be at least 16, got {}", r.n_z)));
        }
        if !(r.half_length > 0.0 && r.half_length.is_finite()) {
            return Err(Error::Config(format!(
                "run.half_length must be positive, got {}",
                r.half_length
            )));
        }
        if let Some(f) = r.end_after_breaking {
            if !(f >= 1.0 && f.is_finite()) {
                return Err(Error::Config(format!(
                    "run.end_after_breaking must be at least 1, got {f}"
                )));
            }
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("energy_drift_tol", t.energy_drift_tol),
            ("decay_tol", t.decay_tol),
            ("eps_cos", t.eps_cos),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("tolerances.{name} must be positive, got {v}")));
            }
        }
        let c = &self.compare;
        if !(c.dt > 0.0 && c.tolerance > 0.0 && c.break_threshold > 0.0) {
            return Err(Error::Config(
                "compare.dt, compare.tolerance and compare.break_threshold must be positive".into(),
            ));
        }
        FluxModel::from_spec(&self.model).map_err(|e| Error::Config(e.to_string()))?;
        self.run_options().validate()
    }

    pub fn model(&self) -> Result<FluxModel> {
        FluxModel::from_spec(&self.model)
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            energy_drift_tol: self.tolerances.energy_drift_tol,
            decay_tol: self.tolerances.decay_tol,
            eps_cos: self.tolerances.eps_cos,
        }
    }

    pub fn run_options(&self) -> RunOptions {
        let mut o = RunOptions::new(self.run.t_end);
        o.dt = self.run.dt.0;
        o.snapshot_times = self.run.snapshot_times.clone();
        o.tolerances = self.tolerances();
        o.end_after_breaking = self.run.end_after_breaking;
        o.snapshot_breaking = self.output.snapshot_breaking;
        o
    }

    /// Uniform physical grid for field output.
    pub fn x_grid(&self) -> Vec<f64> {
        let n = match self.output.x_points {
            0 => 2 * self.run.n_z + 1,
            n => n.max(2),
        };
        uniform_grid(-self.run.half_length, self.run.half_length, n)
    }
}
