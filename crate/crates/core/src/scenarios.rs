//! Named initial data.
//!
//! Spec strings look like `zero`, `peakon(1, 0)`, `antipeakon_pair(1, 5)`,
//! `gaussian(1, 1)` or `custom_file(path/to/data.txt)`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer};

use crate::error::{Error, Result};
use crate::transform::{uniform_grid, InitialDatum, Profile};

pub const DEFAULT_HALF_LENGTH: f64 = 30.0;

/// First line of an initial-data file.
pub const INITIAL_HEADER: &str = "# charflow-initial v1";

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSpec {
    Zero,
    Peakon { c: f64, x0: f64 },
    AntipeakonPair { c: f64, a: f64 },
    Gaussian { amplitude: f64, width: f64 },
    CustomFile(PathBuf),
}

impl ScenarioSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::Peakon { .. } => "peakon",
            Self::AntipeakonPair { .. } => "antipeakon_pair",
            Self::Gaussian { .. } => "gaussian",
            Self::CustomFile(_) => "custom_file",
        }
    }

    pub fn profile(&self) -> Option<Arc<dyn Profile>> {
        Some(match *self {
            Self::Zero => Arc::new(Zero),
            Self::Peakon { c, x0 } => Arc::new(Peakon { c, x0 }),
            Self::AntipeakonPair { c, a } => Arc::new(AntipeakonPair { c, a }),
            Self::Gaussian { amplitude, width } => Arc::new(Gaussian { amplitude, width }),
            Self::CustomFile(_) => return None,
        })
    }

    /// Whether the datum is smooth (no slope discontinuities).
    pub fn is_smooth(&self) -> bool {
        matches!(self, Self::Zero | Self::Gaussian { .. })
    }
}

impl fmt::Display for ScenarioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "zero"),
            Self::Peakon { c, x0 } => write!(f, "peakon({c}, {x0})"),
            Self::AntipeakonPair { c, a } => write!(f, "antipeakon_pair({c}, {a})"),
            Self::Gaussian { amplitude, width } => write!(f, "gaussian({amplitude}, {width})"),
            Self::CustomFile(p) => write!(f, "custom_file({})", p.display()),
        }
    }
}

impl FromStr for ScenarioSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(open) => {
                let close = s
                    .strip_suffix(')')
                    .ok_or_else(|| Error::Config(format!("missing ')' in scenario `{s}`")))?;
                (s[..open].trim(), Some(&close[open + 1..]))
            }
            None => (s, None),
        };
        let numbers = |want: usize| -> Result<Vec<f64>> {
            let args = args.unwrap_or("");
            let parsed: Vec<f64> = args
                .split(',')
                .map(str::trim)
                .filter(|a| !a.is_empty())
                .map(|a| {
                    a.parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad number `{a}` in scenario `{s}`")))
                })
                .collect::<Result<_>>()?;
            if parsed.len() != want {
                return Err(Error::Config(format!(
                    "scenario `{name}` takes {want} arguments, got {}",
                    parsed.len()
                )));
            }
            if parsed.iter().any(|a| !a.is_finite()) {
                return Err(Error::Config(format!("non-finite argument in `{s}`")));
            }
            Ok(parsed)
        };
        let spec = match name {
            "zero" => {
                numbers(0)?;
                Self::Zero
            }
            "peakon" => {
                let a = numbers(2)?;
                Self::Peakon { c: a[0], x0: a[1] }
            }
            "antipeakon_pair" => {
                let a = numbers(2)?;
                Self::AntipeakonPair { c: a[0], a: a[1] }
            }
            "gaussian" => {
                let a = numbers(2)?;
                if !(a[1] > 0.0) {
                    return Err(Error::Config(format!("gaussian width must be positive, got {}", a[1])));
                }
                Self::Gaussian {
                    amplitude: a[0],
                    width: a[1],
                }
            }
            "custom_file" => {
                let path = args
                    .map(str::trim)
                    .filter(|p| !p.is_empty())
                    .ok_or_else(|| Error::Config("custom_file needs a path".into()))?;
                Self::CustomFile(PathBuf::from(path))
            }
            other => return Err(Error::UnknownScenario(other.to_string())),
        };
        Ok(spec)
    }
}

impl<'de> Deserialize<'de> for ScenarioSpec {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Datum sample count used for a characteristic grid of `n_z` labels: about
/// four samples per label, even so that symmetric data keep `x = 0` off the
/// grid.
pub fn datum_points(n_z: usize) -> usize {
    let m = 4 * n_z.max(16);
    m + (m % 2)
}

/// Samples the scenario on `points` uniform points of `[-L, L]`.
pub fn make_scenario(spec: &ScenarioSpec, half_length: f64, points: usize) -> Result<InitialDatum> {
    if !(half_length > 0.0) || !half_length.is_finite() {
        return Err(Error::Config(format!(
            "half-length must be positive, got {half_length}"
        )));
    }
    match spec {
        ScenarioSpec::CustomFile(path) => read_initial_file(path),
        _ => {
            let profile = spec.profile().expect("closed-form scenario");
            InitialDatum::from_profile(profile, uniform_grid(-half_length, half_length, points))
        }
    }
}

/// Reads `x u` pairs from a file starting with [`INITIAL_HEADER`]. Further
/// `#` lines and blank lines are ignored; slopes are computed numerically.
pub fn read_initial_file(path: &Path) -> Result<InitialDatum> {
    let text = std::fs::read_to_string(path)?;
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim() == INITIAL_HEADER => {}
        _ => return Err(parse_err(1, format!("expected header `{INITIAL_HEADER}`"))),
    }
    let (mut x, mut u) = (Vec::new(), Vec::new());
    for (k, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|c| !c.is_empty())
            .collect();
        if cols.len() != 2 {
            return Err(parse_err(k + 1, format!("expected 2 columns, got {}", cols.len())));
        }
        let num = |c: &str| {
            c.parse::<f64>()
                .map_err(|_| parse_err(k + 1, format!("bad number `{c}`")))
        };
        x.push(num(cols[0])?);
        u.push(num(cols[1])?);
    }
    if x.len() < 5 {
        return Err(parse_err(0, format!("need at least 5 samples, got {}", x.len())));
    }
    InitialDatum::from_values(x, u)
}

#[derive(Debug, Clone, Copy)]
pub struct Zero;

impl Profile for Zero {
    fn value(&self, _x: f64) -> f64 {
        0.0
    }
    fn slope(&self, _x: f64) -> f64 {
        0.0
    }
}

/// `c e^{-|x - x0|}`.
#[derive(Debug, Clone, Copy)]
pub struct Peakon {
    pub c: f64,
    pub x0: f64,
}

// Slope of e^{-|y|}, averaged at the kink.
fn kink_slope(y: f64) -> f64 {
    if y == 0.0 {
        0.0
    } else {
        -y.signum() * (-y.abs()).exp()
    }
}

fn kink_slope_limit(y: f64, from_right: bool) -> f64 {
    if y == 0.0 {
        if from_right {
            -1.0
        } else {
            1.0
        }
    } else {
        kink_slope(y)
    }
}

impl Profile for Peakon {
    fn value(&self, x: f64) -> f64 {
        self.c * (-(x - self.x0).abs()).exp()
    }
    fn slope(&self, x: f64) -> f64 {
        self.c * kink_slope(x - self.x0)
    }
    fn kinks(&self) -> Vec<f64> {
        if self.c == 0.0 {
            Vec::new()
        } else {
            vec![self.x0]
        }
    }
    fn slope_limit(&self, x: f64, from_right: bool) -> f64 {
        self.c * kink_slope_limit(x - self.x0, from_right)
    }
}

/// `c (e^{-|x + a|} - e^{-|x - a|})`: a peakon at `-a` and an antipeakon at `a`.
#[derive(Debug, Clone, Copy)]
pub struct AntipeakonPair {
    pub c: f64,
    pub a: f64,
}

impl Profile for AntipeakonPair {
    fn value(&self, x: f64) -> f64 {
        self.c * ((-(x + self.a).abs()).exp() - (-(x - self.a).abs()).exp())
    }
    fn slope(&self, x: f64) -> f64 {
        self.c * (kink_slope(x + self.a) - kink_slope(x - self.a))
    }
    fn kinks(&self) -> Vec<f64> {
        if self.c == 0.0 {
            Vec::new()
        } else {
            let mut k = vec![-self.a, self.a];
            k.sort_by(f64::total_cmp);
            k.dedup();
            k
        }
    }
    fn slope_limit(&self, x: f64, from_right: bool) -> f64 {
        self.c * (kink_slope_limit(x + self.a, from_right) - kink_slope_limit(x - self.a, from_right))
    }
}

/// `A e^{-(x/s)^2}`.
#[derive(Debug, Clone, Copy)]
pub struct Gaussian {
    pub amplitude: f64,
    pub width: f64,
}

impl Profile for Gaussian {
    fn value(&self, x: f64) -> f64 {
        let y = x / self.width;
        self.amplitude * (-y * y).exp()
    }
    fn slope(&self, x: f64) -> f64 {
        let y = x / self.width;
        -2.0 * y / self.width * self.amplitude * (-y * y).exp()
    }
}
