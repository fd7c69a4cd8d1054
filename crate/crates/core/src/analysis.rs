//! Decay-law descriptors of a [`DecayCurve`]: least-squares exponential and
//! power-law fits in log space, a plateau test for `t^alpha P(t)`, and the
//! envelope of local maxima used to fit oscillating tails.

use serde::{Deserialize, Serialize};

use crate::curve::DecayCurve;
use crate::error::{invalid, Error, Result};
use crate::Real;

/// Plateau declared when `t^alpha P(t)` stays within this relative band.
pub const DEFAULT_PLATEAU_THRESHOLD: f64 = 0.1;

/// Minimum number of points in a fit window.
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitKind {
    Exponential,
    PowerLaw,
    Plateau,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FitReport<T> {
    pub kind: FitKind,
    pub window: [T; 2],
    /// Decay rate, power-law exponent or plateau level.
    pub value: T,
    /// Amplitude of the fitted law; the plateau level for plateau checks.
    pub prefactor: T,
    /// Root-mean-square residual: in `ln P` for fits, in relative deviation
    /// from the mean for plateau checks.
    pub rms_residual: T,
    pub points: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_deviation: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub plateau: Option<bool>,
}

fn window_points<T: Real>(curve: &DecayCurve<T>, lo: T, hi: T) -> Result<Vec<(T, T)>> {
    if !(lo <= hi) {
        return Err(invalid("window", format!("lower bound {lo} exceeds upper bound {hi}")));
    }
    let pts: Vec<_> = curve.window(lo, hi).collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientPoints {
            lo: lo.to_f64_lossy(),
            hi: hi.to_f64_lossy(),
            needed: MIN_FIT_POINTS,
            found: pts.len(),
        });
    }
    Ok(pts)
}

fn log_values<T: Real>(pts: &[(T, T)]) -> Result<Vec<T>> {
    pts.iter()
        .map(|&(t, p)| {
            if p > T::zero() {
                Ok(p.ln())
            } else {
                Err(Error::NonPositive { t: t.to_f64_lossy(), value: p.to_f64_lossy() })
            }
        })
        .collect()
}

/// Ordinary least squares `y = a + b x`; returns `(a, b, rms residual)`.
fn line_fit<T: Real>(x: &[T], y: &[T]) -> (T, T, T) {
    let n = T::from_usize(x.len()).unwrap();
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxx, mut sxy) = (T::zero(), T::zero());
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let b = if sxx > T::zero() { sxy / sxx } else { T::zero() };
    let a = my - b * mx;
    let ss: T = x.iter().zip(y).map(|(&xi, &yi)| (yi - a - b * xi).powi(2)).sum();
    (a, b, (ss / n).sqrt())
}

/// `ln P = ln A - Gamma t` on `lo <= t <= hi`; `value` is `Gamma`.
pub fn fit_exponential<T: Real>(curve: &DecayCurve<T>, window: (T, T)) -> Result<FitReport<T>> {
    let pts = window_points(curve, window.0, window.1)?;
    let y = log_values(&pts)?;
    let x: Vec<T> = pts.iter().map(|&(t, _)| t).collect();
    let (a, b, rms) = line_fit(&x, &y);
    Ok(FitReport {
        kind: FitKind::Exponential,
        window: [window.0, window.1],
        value: -b,
        prefactor: a.exp(),
        rms_residual: rms,
        points: pts.len(),
        max_deviation: None,
        plateau: None,
    })
}

/// `ln P = ln A + k ln t` on `lo <= t <= hi`; `value` is the exponent `k`.
pub fn fit_power_law<T: Real>(curve: &DecayCurve<T>, window: (T, T)) -> Result<FitReport<T>> {
    let pts = window_points(curve, window.0, window.1)?;
    if let Some(&(t, _)) = pts.iter().find(|&&(t, _)| !(t > T::zero())) {
        return Err(invalid("window", format!("power-law fits need t > 0, window contains t = {t}")));
    }
    let y = log_values(&pts)?;
    let x: Vec<T> = pts.iter().map(|&(t, _)| t.ln()).collect();
    let (a, b, rms) = line_fit(&x, &y);
    Ok(FitReport {
        kind: FitKind::PowerLaw,
        window: [window.0, window.1],
        value: b,
        prefactor: a.exp(),
        rms_residual: rms,
        points: pts.len(),
        max_deviation: None,
        plateau: None,
    })
}

/// Tests whether `y = t^alpha P(t)` is flat on the window: `value` is the
/// mean of `y`, and a plateau is declared when the largest relative
/// deviation from it is below `threshold`.
pub fn plateau_check<T: Real>(curve: &DecayCurve<T>, alpha: T, window: (T, T), threshold: T) -> Result<FitReport<T>> {
    let (lo, hi) = window;
    if !(lo <= hi) {
        return Err(invalid("window", format!("lower bound {lo} exceeds upper bound {hi}")));
    }
    let y: Vec<T> = curve.window(lo, hi).map(|(t, p)| t.powf(alpha) * p).collect();
    if y.is_empty() {
        return Err(Error::InsufficientPoints { lo: lo.to_f64_lossy(), hi: hi.to_f64_lossy(), needed: 1, found: 0 });
    }
    let n = T::from_usize(y.len()).unwrap();
    let mean = y.iter().copied().sum::<T>() / n;
    if mean == T::zero() {
        return Err(Error::Undefined("relative deviation from a zero mean"));
    }
    let rel: Vec<T> = y.iter().map(|&v| (v - mean) / mean.abs()).collect();
    let max_dev = rel.iter().map(|r| r.abs()).fold(T::zero(), T::max);
    let rms = (rel.iter().map(|&r| r * r).sum::<T>() / n).sqrt();
    Ok(FitReport {
        kind: FitKind::Plateau,
        window: [lo, hi],
        value: mean,
        prefactor: mean,
        rms_residual: rms,
        points: y.len(),
        max_deviation: Some(max_dev),
        plateau: Some(max_dev < threshold),
    })
}

/// Least-squares coefficient `a` of `1 - P(t) = a t^2` on the window, the
/// short-time (Zeno) law; equals `g0^2` for a resonant emitter.
pub fn short_time_coefficient<T: Real>(curve: &DecayCurve<T>, window: (T, T)) -> Result<T> {
    let pts = window_points(curve, window.0, window.1)?;
    let (mut num, mut den) = (T::zero(), T::zero());
    for &(t, p) in &pts {
        let t2 = t * t;
        num += t2 * (T::one() - p);
        den += t2 * t2;
    }
    if !(den > T::zero()) {
        return Err(Error::Undefined("quadratic fit on a window at t = 0 only"));
    }
    Ok(num / den)
}

/// Strict interior local maxima of `P(t)`. A curve without any (monotone or
/// flat) is returned without its two endpoints.
pub fn envelope<T: Real>(curve: &DecayCurve<T>) -> DecayCurve<T> {
    let p = curve.ps();
    if p.len() < 3 {
        return curve.select(&[]);
    }
    let peaks: Vec<usize> = (1..p.len() - 1).filter(|&i| p[i] > p[i - 1] && p[i] > p[i + 1]).collect();
    if peaks.is_empty() {
        let interior: Vec<usize> = (1..p.len() - 1).collect();
        return curve.select(&interior);
    }
    curve.select(&peaks)
}
