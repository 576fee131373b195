//! Text output of runs: energy series, characteristic snapshots, physical
//! fields and `key=value` reports. Numbers are written in Rust's shortest
//! round-trip form, so identical runs give identical files.

use std::fmt::{Display, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::integrator::RunTrace;
use crate::reconstruct::PhysicalField;
use crate::transform::CharState;

pub const ENERGY_FILE: &str = "energy.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const FIELD_HEADER: &str = "# charflow-field v1";

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn read_file(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

/// `T,E,min_v,min_cos2`, one row per recorded step.
pub fn energy_csv(trace: &RunTrace) -> String {
    let mut out = String::from("T,E,min_v,min_cos2\n");
    for r in &trace.records {
        let _ = writeln!(out, "{},{},{},{}", r.t, r.energy, r.min_v, r.min_cos2);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRow {
    pub t: f64,
    pub e: f64,
    pub min_v: f64,
    pub min_cos2: f64,
}

pub fn read_energy_csv(path: &Path) -> Result<Vec<EnergyRow>> {
    let text = read_file(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "T,E,min_v,min_cos2")) => {}
        _ => return Err(parse_err(path, 1, "expected header T,E,min_v,min_cos2")),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, line)| {
            let v = parse_row(path, k + 1, line, 4)?;
            Ok(EnergyRow {
                t: v[0],
                e: v[1],
                min_v: v[2],
                min_cos2: v[3],
            })
        })
        .collect()
}

fn parse_row(path: &Path, line_no: usize, line: &str, width: usize) -> Result<Vec<f64>> {
    let cols: Vec<&str> = line.split(',').collect();
    if cols.len() != width {
        return Err(parse_err(
            path,
            line_no,
            format!("expected {width} columns, got {}", cols.len()),
        ));
    }
    cols.iter()
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .map_err(|_| parse_err(path, line_no, format!("not a number: {c:?}")))
        })
        .collect()
}

/// `Z,u,w,v,x` columns of a characteristic state, preceded by its time.
pub fn snapshot_csv(state: &CharState) -> String {
    let mut out = format!("# t={}\nZ,u,w,v,x\n", state.t);
    for i in 0..state.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            state.z[i], state.u[i], state.w[i], state.v[i], state.x[i]
        );
    }
    out
}

/// Physical field as `x,u,ux` with an empty `ux` where masked.
pub fn field_csv(field: &PhysicalField) -> String {
    let mut out = format!("{FIELD_HEADER} t={}\nx,u,ux\n", field.t);
    for i in 0..field.x_grid.len() {
        if field.mask[i] {
            let _ = writeln!(out, "{},{},{}", field.x_grid[i], field.u[i], field.ux[i]);
        } else {
            let _ = writeln!(out, "{},{},", field.x_grid[i], field.u[i]);
        }
    }
    out
}

/// Field read back from [`field_csv`] output (or the classical solver's).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTable {
    pub t: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub ux: Vec<Option<f64>>,
}

pub fn read_field_csv(path: &Path) -> Result<FieldTable> {
    let text = read_file(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let t = header
        .strip_prefix(FIELD_HEADER)
        .and_then(|rest| rest.trim().strip_prefix("t="))
        .and_then(|t| t.parse::<f64>().ok())
        .ok_or_else(|| parse_err(path, 1, format!("expected \"{FIELD_HEADER} t=<value>\"")))?;
    if lines.next() != Some("x,u,ux") {
        return Err(parse_err(path, 2, "expected column header x,u,ux"));
    }
    let mut table = FieldTable {
        t,
        x: Vec::new(),
        u: Vec::new(),
        ux: Vec::new(),
    };
    for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let line_no = k + 3;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(parse_err(path, line_no, "expected 3 columns"));
        }
        let num = |c: &str| {
            c.parse::<f64>()
                .map_err(|_| parse_err(path, line_no, format!("not a number: {c:?}")))
        };
        table.x.push(num(cols[0])?);
        table.u.push(num(cols[1])?);
        table
            .ux
            .push(if cols[2].is_empty() { None } else { Some(num(cols[2])?) });
    }
    Ok(table)
}

/// Ordered `key=value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn parse(text: &str) -> Self {
        Self {
            entries: text
                .lines()
                .filter_map(|l| l.split_once('='))
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(Self::parse(&read_file(path)?))
    }
}

/// Files named `<prefix>_NNNN.csv` in `dir`, sorted by name.
pub fn numbered_files(dir: &Path, prefix: &str) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with(&format!("{prefix}_")) && n.ends_with(".csv"))
        })
        .collect();
    out.sort();
    Ok(out)
}

pub fn numbered_name(prefix: &str, k: usize) -> String {
    format!("{prefix}_{k:04}.csv")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_round_trip_with_mask() {
        let field = PhysicalField {
            t: 0.25,
            x_grid: vec![-1.0, 0.0, 1.0],
            u: vec![0.1, 0.2, 0.3],
            ux: vec![0.5, f64::NEG_INFINITY, -0.5],
            mask: vec![true, false, true],
            flat_mismatch: 0.0,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let text = field_csv(&field);
        assert!(text.starts_with("# charflow-field v1 t=0.25\nx,u,ux\n"));
        assert!(text.contains("0,0.2,\n"));
        write_file(&path, &text).unwrap();
        let back = read_field_csv(&path).unwrap();
        assert_eq!(back.t, 0.25);
        assert_eq!(back.u, field.u);
        assert_eq!(back.ux, vec![Some(0.5), None, Some(-0.5)]);
    }

    #[test]
    fn report_keeps_order() {
        let mut r = Report::new();
        r.push("b", 2);
        r.push("a", "x=y");
        assert_eq!(r.render(), "b=2\na=x=y\n");
        let back = Report::parse(&r.render());
        assert_eq!(back, r);
        assert_eq!(back.get("a"), Some("x=y"));
    }

    #[test]
    fn malformed_energy_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        write_file(&path, "T,E,min_v,min_cos2\n0,1,1\n").unwrap();
        assert!(matches!(read_energy_csv(&path), Err(Error::Parse { line: 2, .. })));
    }
}
