//! CSV point sets and curve tables. Values are written with 17 significant
//! digits so they read back bit-exact.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geodesic::GeodesicCurve;
use crate::manifold::{clamp_normalize, SimplexPoint, SIMPLEX_SUM_TOL};

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn header(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("mu_{i}")).collect()
}

/// Writes one row per point under a `mu_1,…,mu_n` header.
pub fn write_points_csv(path: &Path, points: &[SimplexPoint]) -> Result<()> {
    let n = points.first().map_or(0, SimplexPoint::dim);
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header(n))?;
    for p in points {
        p.check_dim(n)?;
        w.write_record(p.probs().iter().map(|v| fmt(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows of nonnegative weights, with or without a header line.
/// Every row is divided by its sum and clamped below at `eps`.
pub fn read_points_csv(path: &Path, eps: f64) -> Result<Vec<SimplexPoint>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut points = Vec::new();
    let mut width = None;
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if line == 0 => continue,
            Err(e) => return Err(Error::Format(format!("{}: line {}: {e}", path.display(), line + 1))),
        };
        if *width.get_or_insert(row.len()) != row.len() {
            return Err(Error::Format(format!(
                "{}: line {} has {} columns, expected {}",
                path.display(),
                line + 1,
                row.len(),
                width.unwrap_or(0)
            )));
        }
        if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Format(format!(
                "{}: line {} has a negative or nonfinite entry",
                path.display(),
                line + 1
            )));
        }
        let sum: f64 = row.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::Format(format!("{}: line {} sums to zero", path.display(), line + 1)));
        }
        let row: Vec<f64> = if (sum - 1.0).abs() <= SIMPLEX_SUM_TOL {
            row
        } else {
            row.iter().map(|v| v / sum).collect()
        };
        points.push(clamp_normalize(&row, eps)?);
    }
    if points.is_empty() {
        return Err(Error::Format(format!("{}: no data rows", path.display())));
    }
    Ok(points)
}

/// Samples `γ` at `points` uniform times into a `t,mu_1,…,mu_n` table.
pub fn write_curve_table(curve: &GeodesicCurve, points: usize, path: &Path) -> Result<()> {
    if points < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 curve points, got {points}")));
    }
    let n = curve.x0().dim();
    let mut w = csv::Writer::from_path(path)?;
    let mut head = vec!["t".to_string()];
    head.extend(header(n));
    w.write_record(head)?;
    for k in 0..points {
        let t = k as f64 / (points - 1) as f64;
        let mu = curve.point_simplex(t)?;
        let mut row = vec![fmt(t)];
        row.extend(mu.probs().iter().map(|v| fmt(*v)));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}
