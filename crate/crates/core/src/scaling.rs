//! Power-law tails of `zeta0(lambda)` and the spread between curves computed
//! at different Reynolds numbers.

use serde::{Deserialize, Serialize};

use crate::criticality::BoundaryCurve;
use crate::error::{invalid, Result};

pub const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub prefactor: f64,
    pub exponent: f64,
    #[serde(rename = "lambda_min")]
    pub lambda_min_used: f64,
    pub rms_log_residual: f64,
    #[serde(rename = "n_points")]
    pub point_count: usize,
}

impl PowerLawFit {
    pub fn eval(&self, lambda: f64) -> f64 {
        self.prefactor * lambda.powf(self.exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    #[default]
    Unweighted,
    /// Weights `1 / w^2` with `w = ln(zeta0_hi / zeta0_lo)` the log bracket width.
    Bracket,
}

/// Least squares on `(ln lambda, ln zeta0)` for points with `lambda >= lambda_min`.
pub fn fit_power_law(curve: &BoundaryCurve, lambda_min: f64) -> Result<PowerLawFit> {
    fit_power_law_weighted(curve, lambda_min, Weighting::Unweighted)
}

pub fn fit_power_law_weighted(curve: &BoundaryCurve, lambda_min: f64, weighting: Weighting) -> Result<PowerLawFit> {
    let points: Vec<(f64, f64, f64)> = curve
        .points
        .iter()
        .map(|p| {
            let w = match weighting {
                Weighting::Unweighted => 1.0,
                Weighting::Bracket => {
                    let width = (p.zeta0_hi / p.zeta0_lo).ln().max(f64::EPSILON);
                    1.0 / (width * width)
                }
            };
            (p.lambda, p.zeta0, w)
        })
        .collect();
    fit_weighted(&points, lambda_min)
}

/// Unweighted fit on raw `(lambda, zeta0)` pairs.
pub fn fit_points(points: &[(f64, f64)], lambda_min: f64) -> Result<PowerLawFit> {
    let p: Vec<(f64, f64, f64)> = points.iter().map(|&(l, z)| (l, z, 1.0)).collect();
    fit_weighted(&p, lambda_min)
}

fn fit_weighted(points: &[(f64, f64, f64)], lambda_min: f64) -> Result<PowerLawFit> {
    let used: Vec<(f64, f64, f64)> = points
        .iter()
        .filter(|(l, _, _)| *l >= lambda_min)
        .map(|&(l, z, w)| (l.ln(), z.ln(), w))
        .collect();
    if used.len() < MIN_FIT_POINTS {
        return invalid(format!(
            "power-law fit needs at least {MIN_FIT_POINTS} points with lambda >= {lambda_min}, got {}",
            used.len()
        ));
    }
    if used.iter().any(|(x, y, w)| !(x.is_finite() && y.is_finite() && *w > 0.0)) {
        return invalid("power-law fit needs positive, finite lambda and zeta0");
    }
    let sw: f64 = used.iter().map(|p| p.2).sum();
    let mx = used.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = used.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = used.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = used.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return invalid("power-law fit needs at least two distinct lambda values");
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = used.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(PowerLawFit {
        prefactor: intercept.exp(),
        exponent: slope,
        lambda_min_used: lambda_min,
        rms_log_residual: (ss / used.len() as f64).sqrt(),
        point_count: used.len(),
    })
}

/// Log-log linear interpolation of a curve at `lambda`.
pub fn interpolate(curve: &BoundaryCurve, lambda: f64) -> Option<f64> {
    let pts = &curve.points;
    let first = pts.first()?;
    let last = pts.last()?;
    if lambda < first.lambda || lambda > last.lambda {
        return None;
    }
    let k = pts.partition_point(|p| p.lambda <= lambda).clamp(1, pts.len().max(2) - 1);
    if pts.len() == 1 {
        return Some(first.zeta0);
    }
    let (a, b) = (&pts[k - 1], &pts[k]);
    let t = (lambda.ln() - a.lambda.ln()) / (b.lambda.ln() - a.lambda.ln());
    Some((a.zeta0.ln() + t * (b.zeta0.ln() - a.zeta0.ln())).exp())
}

/// Largest relative spread `(max - min) / median` of the interpolated
/// curves over `lambda_grid`.
pub fn collapse_spread(curves: &[BoundaryCurve], lambda_grid: &[f64]) -> Result<f64> {
    if curves.len() < 2 {
        return invalid("collapse needs at least two curves");
    }
    let mut worst: f64 = 0.0;
    for &lambda in lambda_grid {
        let mut values = Vec::with_capacity(curves.len());
        for c in curves {
            match interpolate(c, lambda) {
                Some(v) => values.push(v),
                None => {
                    return invalid(format!("lambda = {lambda} lies outside the curve for {}", c.regime.label()));
                }
            }
        }
        values.sort_by(f64::total_cmp);
        let m = values.len();
        let median = if m % 2 == 1 { values[m / 2] } else { 0.5 * (values[m / 2 - 1] + values[m / 2]) };
        worst = worst.max((values[m - 1] - values[0]) / median);
    }
    Ok(worst)
}
