//! Position and heading error aggregation over a set of vehicle beliefs.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::gaussian::Gaussian;
use crate::geometry::{wrap_angle, VehicleState};
use crate::real::{cvt, Real};

/// Per-vehicle position error norms, skipping `exclude` (typically the
/// anchors).
pub fn position_errors<T: Real>(
    beliefs: &[Gaussian<T>],
    truth: &[VehicleState<T>],
    exclude: &BTreeSet<usize>,
) -> Result<Vec<T>> {
    check_aligned(beliefs, truth)?;
    let mut out = Vec::new();
    for (v, (b, t)) in beliefs.iter().zip(truth).enumerate() {
        if exclude.contains(&v) {
            continue;
        }
        let dx = b.mean()[0] - t.x;
        let dy = b.mean()[1] - t.y;
        let e = (dx * dx + dy * dy).sqrt();
        if !e.is_finite() {
            return Err(Error::NonFinite {
                context: "position error",
            });
        }
        out.push(e);
    }
    if out.is_empty() {
        return Err(Error::EmptySelection);
    }
    Ok(out)
}

/// Per-vehicle heading error magnitudes (residuals wrapped to `(-pi, pi]`
/// before taking the absolute value).
pub fn heading_errors<T: Real>(
    beliefs: &[Gaussian<T>],
    truth: &[VehicleState<T>],
    exclude: &BTreeSet<usize>,
) -> Result<Vec<T>> {
    check_aligned(beliefs, truth)?;
    let mut out = Vec::new();
    for (v, (b, t)) in beliefs.iter().zip(truth).enumerate() {
        if exclude.contains(&v) {
            continue;
        }
        let e = wrap_angle(b.mean()[2] - t.theta).abs();
        if !e.is_finite() {
            return Err(Error::NonFinite {
                context: "heading error",
            });
        }
        out.push(e);
    }
    if out.is_empty() {
        return Err(Error::EmptySelection);
    }
    Ok(out)
}

/// Root-mean-square position error in meters over the included vehicles.
pub fn position_rmse<T: Real>(
    beliefs: &[Gaussian<T>],
    truth: &[VehicleState<T>],
    exclude: &BTreeSet<usize>,
) -> Result<T> {
    Ok(rms(&position_errors(beliefs, truth, exclude)?))
}

/// Root-mean-square wrapped heading error in radians.
pub fn direction_rmse<T: Real>(
    beliefs: &[Gaussian<T>],
    truth: &[VehicleState<T>],
    exclude: &BTreeSet<usize>,
) -> Result<T> {
    Ok(rms(&heading_errors(beliefs, truth, exclude)?))
}

/// Empirical CDF of a sample: `(value, fraction <= value)` at each distinct
/// sorted sample point.
pub fn error_cdf<T: Real>(errors: &[T]) -> Result<Vec<(T, T)>> {
    if errors.is_empty() {
        return Err(Error::EmptySelection);
    }
    if errors.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFinite {
            context: "error sample",
        });
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = cvt::<T>(sorted.len() as f64);
    let mut out: Vec<(T, T)> = Vec::new();
    for (idx, &v) in sorted.iter().enumerate() {
        let frac = cvt::<T>((idx + 1) as f64) / n;
        match out.last_mut() {
            // Equal values collapse to one step at the highest fraction.
            Some(last) if last.0 == v => last.1 = frac,
            _ => out.push((v, frac)),
        }
    }
    Ok(out)
}

/// Fraction of samples at or below `threshold`.
pub fn fraction_below<T: Real>(errors: &[T], threshold: T) -> T {
    let count = errors.iter().filter(|&&e| e <= threshold).count();
    cvt::<T>(count as f64) / cvt::<T>(errors.len() as f64)
}

fn rms<T: Real>(values: &[T]) -> T {
    let mut sum = T::zero();
    for &v in values {
        sum += v * v;
    }
    (sum / cvt::<T>(values.len() as f64)).sqrt()
}

fn check_aligned<T: Real>(beliefs: &[Gaussian<T>], truth: &[VehicleState<T>]) -> Result<()> {
    if beliefs.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            context: "beliefs vs truth",
            expected: truth.len(),
            actual: beliefs.len(),
        });
    }
    Ok(())
}
