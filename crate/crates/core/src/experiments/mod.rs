//! Configuration-driven experiment runner: scenarios, regression fits,
//! tables and plot-ready data.

pub mod config;
pub mod report;
pub mod scenario;

pub use config::{ConfigDoc, ExperimentConfig, Scenario, Tolerances};
pub use report::{emit_plotdata, Assertion, Report};
pub use scenario::{run_scenario, test_family};

use crate::error::{Error, Result};

/// Ordinary least squares on (log x, log y).
#[derive(Clone, Debug, serde::Serialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
}

pub fn fit_loglog(points: &[(f64, f64)]) -> Result<RegressionFit> {
    if points.len() < 3 {
        return Err(Error::Domain(format!(
            "log-log fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(x, y)) = points.iter().find(|&&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(Error::Domain(format!("log-log fit needs positive points, got ({x}, {y})")));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 * (n * sxx).abs().max(1.0) {
        return Err(Error::Degenerate("log-log fit: all x values coincide".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let ss_tot: f64 = logs.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    Ok(RegressionFit { slope, intercept, r_squared, points: points.to_vec() })
}
