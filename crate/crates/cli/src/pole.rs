//! Stereographic projection of {111} poles.

use std::path::Path;

use crystal_core::lattice::Orientation;
use nalgebra::Vector3;

use crate::config::RunConfig;
use crate::output::{num, CsvOut};
use crate::CliError;

/// The four {111} plane normals, crystal frame.
pub fn poles_111() -> [Vector3<f64>; 4] {
    let s = 1.0 / 3f64.sqrt();
    [
        Vector3::new(s, s, s),
        Vector3::new(s, s, -s),
        Vector3::new(s, -s, s),
        Vector3::new(-s, s, s),
    ]
}

/// Maps `pole` through `Tᵀ` and projects it from the south pole onto the
/// plane `z = 0`. Lower-hemisphere poles are replaced by their antipode, so
/// the image lies in the closed unit disc. `None` for a degenerate pole.
pub fn project_pole(orientation: &Orientation, pole: &Vector3<f64>) -> Option<(f64, f64)> {
    let norm = pole.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return None;
    }
    let mut p = orientation.pole_transform() * (pole / norm);
    if p.z < 0.0 {
        p = -p;
    }
    let denom = 1.0 + p.z;
    if denom <= 1e-12 {
        return None;
    }
    Some((p.x / denom, p.y / denom))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolePoint {
    pub orientation: usize,
    pub pole: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PoleFigure {
    pub points: Vec<PolePoint>,
    pub skipped: usize,
}

pub fn project_pole_figure(orientations: &[Orientation]) -> PoleFigure {
    let mut fig = PoleFigure::default();
    for (i, o) in orientations.iter().enumerate() {
        for (k, pole) in poles_111().iter().enumerate() {
            match project_pole(o, pole) {
                Some((x, y)) => fig.points.push(PolePoint {
                    orientation: i,
                    pole: k,
                    x,
                    y,
                }),
                None => fig.skipped += 1,
            }
        }
    }
    fig
}

pub fn run_pole_figure(cfg: &RunConfig, out_dir: &Path) -> Result<PoleFigure, CliError> {
    let fig = project_pole_figure(&cfg.orientations);
    let path = out_dir.join(&cfg.output);
    let mut csv = CsvOut::create(&path, &["orientation", "pole", "x", "y"].map(String::from))?;
    for p in &fig.points {
        csv.row(&[p.orientation.to_string(), p.pole.to_string(), num(p.x), num(p.y)])?;
    }
    csv.flush()?;
    Ok(fig)
}
