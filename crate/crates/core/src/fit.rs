//! Least-squares fits of decay rates and power laws.

use crate::error::{Error, Result};

/// What the abscissa is before fitting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitMode {
    /// log y against t: slope is the exponential rate.
    Exponential,
    /// log y against log t: slope is the power-law exponent.
    PowerLaw,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub samples: usize,
}

pub const MIN_SAMPLES: usize = 10;

/// Fits the samples whose abscissa lies in `window` (inclusive).
pub fn fit_rate(series: &[(f64, f64)], window: (f64, f64), mode: FitMode) -> Result<RateFit> {
    let picked: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= window.0 && t <= window.1)
        .collect();
    if picked.len() < MIN_SAMPLES {
        return Err(Error::Fit(format!(
            "{} samples in window [{}, {}], need at least {MIN_SAMPLES}",
            picked.len(),
            window.0,
            window.1
        )));
    }
    if let Some(&(t, v)) = picked.iter().find(|&&(_, v)| !(v > 0.0)) {
        return Err(Error::Fit(format!("non-positive value {v} at t = {t}")));
    }
    if mode == FitMode::PowerLaw {
        if let Some(&(t, _)) = picked.iter().find(|&&(t, _)| !(t > 0.0)) {
            return Err(Error::Fit(format!("non-positive abscissa {t} in log-log fit")));
        }
    }
    let pts: Vec<(f64, f64)> = picked
        .iter()
        .map(|&(t, v)| match mode {
            FitMode::Exponential => (t, v.ln()),
            FitMode::PowerLaw => (t.ln(), v.ln()),
        })
        .collect();
    Ok(least_squares(&pts))
}

/// Exponent of y ∝ x^p through a handful of points (at least two), e.g.
/// a rate measured at a few viscosities.
pub fn power_law_exponent(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 2 {
        return Err(Error::Fit(format!("{} points, need at least 2", points.len())));
    }
    if let Some(&(x, y)) = points.iter().find(|&&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::Fit(format!("non-positive point ({x}, {y}) in log-log fit")));
    }
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    Ok(least_squares(&pts))
}

/// Ordinary least squares y = slope·x + intercept.
pub fn least_squares(pts: &[(f64, f64)]) -> RateFit {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = if pts.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    RateFit { slope, intercept, stderr, samples: pts.len() }
}
