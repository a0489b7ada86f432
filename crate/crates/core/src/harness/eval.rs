use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{csv_error, to_shifted, Domain, Point};
use crate::loss::Field;
use crate::net::Order;
use crate::problems::ProblemSpec;

/// Test points per axis.
pub const GRID_SIDE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub x: f64,
    pub y: f64,
    pub u_pred: f64,
    pub u_exact: f64,
    pub abs_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Row-major from the lower-left cell, `x` fastest.
    pub grid: Vec<GridRow>,
    pub rel_l2: f64,
    /// Matching points the field was queried at, one per grid row.
    pub queried: Vec<Point>,
}

impl Evaluation {
    pub fn abs_err_range(&self) -> (f64, f64) {
        self.grid
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r.abs_err), hi.max(r.abs_err))
            })
    }
}

/// `‖pred - exact‖₂ / ‖exact‖₂`.
pub fn relative_l2(pred: &[f64], exact: &[f64]) -> Result<f64> {
    if pred.len() != exact.len() {
        return Err(Error::Usage(format!(
            "prediction has {} values, exact solution {}",
            pred.len(),
            exact.len()
        )));
    }
    let num: f64 = pred.iter().zip(exact).map(|(p, e)| (p - e).powi(2)).sum();
    let den: f64 = exact.iter().map(|e| e * e).sum();
    if den == 0.0 {
        return Err(Error::Usage(
            "relative error undefined for an all-zero exact solution".into(),
        ));
    }
    Ok((num / den).sqrt())
}

/// Cell centres of a `GRID_SIDE²` lattice over the domain's extent.
pub fn test_grid(domain: &Domain) -> Vec<Point> {
    let (lo, hi) = (domain.extent.lo, domain.extent.hi);
    let hx = (hi[0] - lo[0]) / GRID_SIDE as f64;
    let hy = (hi[1] - lo[1]) / GRID_SIDE as f64;
    let mut pts = Vec::with_capacity(GRID_SIDE * GRID_SIDE);
    for j in 0..GRID_SIDE {
        for i in 0..GRID_SIDE {
            pts.push([lo[0] + (i as f64 + 0.5) * hx, lo[1] + (j as f64 + 0.5) * hy]);
        }
    }
    pts
}

/// Evaluates `field` on the test grid. Each grid point `X` is read at its
/// matching point in `domain` and compared with the exact solution at `X`.
pub fn evaluate(field: &dyn Field, problem: &ProblemSpec, domain: &Domain) -> Result<Evaluation> {
    let pts = test_grid(domain);
    let mut queried = Vec::with_capacity(pts.len());
    let mut exact = Vec::with_capacity(pts.len());
    for &x in &pts {
        let (id, xs) = to_shifted(x, domain)?;
        queried.push(xs);
        exact.push(problem.exact_jet(id, x).value);
    }
    let flat: Vec<f64> = queried.iter().flat_map(|p| p.iter().copied()).collect();
    let pred = field.jets(&flat, Order::Value)?.values;
    let rel_l2 = relative_l2(&pred, &exact)?;
    let grid = pts
        .iter()
        .zip(pred.iter().zip(&exact))
        .map(|(x, (&p, &e))| GridRow {
            x: x[0],
            y: x[1],
            u_pred: p,
            u_exact: e,
            abs_err: (p - e).abs(),
        })
        .collect();
    Ok(Evaluation {
        grid,
        rel_l2,
        queried,
    })
}

pub fn write_prediction_csv(grid: &[GridRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for row in grid {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Binary PPM of `|error|` on the grid, top row = largest `y`, colours
/// interpolated linearly between dark blue (min) and yellow (max).
pub fn write_error_heatmap(
    grid: &[GridRow],
    side: usize,
    range: (f64, f64),
    path: &Path,
) -> Result<()> {
    if grid.len() != side * side {
        return Err(Error::Usage(format!(
            "grid of {} rows is not {side}²",
            grid.len()
        )));
    }
    const LOW: [f64; 3] = [30.0, 20.0, 90.0];
    const HIGH: [f64; 3] = [250.0, 230.0, 40.0];
    let (lo, hi) = range;
    let span = hi - lo;
    let mut bytes = format!("P6\n{side} {side}\n255\n").into_bytes();
    for j in (0..side).rev() {
        for i in 0..side {
            let e = grid[j * side + i].abs_err;
            let t = if span > 0.0 {
                ((e - lo) / span).clamp(0.0, 1.0)
            } else {
                0.0
            };
            for c in 0..3 {
                bytes.push((LOW[c] + t * (HIGH[c] - LOW[c])).round() as u8);
            }
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}
