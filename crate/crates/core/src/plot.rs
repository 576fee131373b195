//! SVG line plots of written runs: the energy series and the `u` profiles of
//! every field file.

use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::error::{Error, Result};
use crate::io::{numbered_files, read_energy_csv, read_field_csv, FieldTable, ENERGY_FILE};

pub const ENERGY_PLOT: &str = "energy.svg";
pub const PROFILE_PLOT: &str = "profiles.svg";

fn plot_err(e: impl std::fmt::Display) -> Error {
    Error::InvalidState(format!("plotting failed: {e}"))
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo {
        0.05 * (hi - lo)
    } else {
        0.5 * lo.abs().max(1e-12)
    };
    (lo - pad, hi + pad)
}

/// Relative energy drift and `min cos^2(w/2)` against `T`.
pub fn plot_energy(energy_csv: &Path, out: &Path) -> Result<()> {
    let rows = read_energy_csv(energy_csv)?;
    let e0 = rows.first().map_or(0.0, |r| r.e);
    let scale = if e0 > 0.0 { e0 } else { 1.0 };
    let drift: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, (r.e - e0) / scale)).collect();
    let cos: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.min_cos2)).collect();
    let (t0, t1) = bounds(rows.iter().map(|r| r.t));

    let root = SVGBackend::new(out, (900, 700)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let (top, bottom) = root.split_vertically(350);
    for (area, series, caption, label) in [
        (&top, &drift, "relative energy drift", "(E - E0) / E0"),
        (&bottom, &cos, "min cos^2(w/2)", "min cos^2"),
    ] {
        let (y0, y1) = bounds(series.iter().map(|p| p.1));
        let mut chart = ChartBuilder::on(area)
            .caption(caption, ("sans-serif", 18))
            .margin(10)
            .x_label_area_size(35)
            .y_label_area_size(70)
            .build_cartesian_2d(t0..t1, y0..y1)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc("T")
            .y_desc(label)
            .draw()
            .map_err(plot_err)?;
        chart
            .draw_series(LineSeries::new(series.iter().copied(), &BLUE))
            .map_err(plot_err)?;
    }
    root.present().map_err(plot_err)?;
    Ok(())
}

/// All `u` profiles in one chart, coloured by time.
pub fn plot_profiles(fields: &[FieldTable], out: &Path) -> Result<()> {
    let (x0, x1) = bounds(fields.iter().flat_map(|f| f.x.iter().copied()));
    let (u0, u1) = bounds(fields.iter().flat_map(|f| f.u.iter().copied()));
    let root = SVGBackend::new(out, (900, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("u(t, x)", ("sans-serif", 18))
        .margin(10)
        .x_label_area_size(35)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, u0..u1)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("x")
        .y_desc("u")
        .draw()
        .map_err(plot_err)?;
    let count = fields.len().max(1);
    for (k, f) in fields.iter().enumerate() {
        let colour = HSLColor(0.7 * k as f64 / count as f64, 0.8, 0.45);
        chart
            .draw_series(LineSeries::new(f.x.iter().copied().zip(f.u.iter().copied()), &colour))
            .map_err(plot_err)?
            .label(format!("t = {}", f.t))
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], colour));
    }
    if !fields.is_empty() {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err)?;
    }
    root.present().map_err(plot_err)?;
    Ok(())
}

/// Plots of a run directory written by `simulate`; returns the files made.
pub fn emit_plots(run_dir: &Path) -> Result<Vec<PathBuf>> {
    let energy = run_dir.join(ENERGY_FILE);
    if !energy.exists() {
        return Err(Error::Config(format!("{} has no {ENERGY_FILE}", run_dir.display())));
    }
    let mut made = Vec::new();
    let out = run_dir.join(ENERGY_PLOT);
    plot_energy(&energy, &out)?;
    made.push(out);
    let fields = numbered_files(run_dir, "field")?
        .iter()
        .map(|p| read_field_csv(p))
        .collect::<Result<Vec<_>>>()?;
    if !fields.is_empty() {
        let out = run_dir.join(PROFILE_PLOT);
        plot_profiles(&fields, &out)?;
        made.push(out);
    }
    Ok(made)
}
