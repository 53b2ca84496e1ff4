//! Vehicle states, angle arithmetic, and the pairwise bearing measurement
//! model.
//!
//! A vehicle state is `(x, y, theta)` with positions in meters and the
//! heading in radians on `(-pi, pi]`. Each link between two vehicles carries
//! a two-component angle-of-arrival measurement: component 1 is the bearing
//! of vehicle `j` as seen from vehicle `i` relative to `i`'s heading,
//! component 2 the reverse bearing measured at `j`.

use nalgebra::{Matrix2, Vector2, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::real::{cvt, Real};

/// Ground-truth pose of one vehicle: 2D position (m) and heading (rad).
///
/// The heading is kept wrapped to `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState<T: Real> {
    pub x: T,
    pub y: T,
    pub theta: T,
}

impl<T: Real> VehicleState<T> {
    /// Builds a state; the heading is wrapped to `(-pi, pi]`.
    pub fn new(x: T, y: T, theta: T) -> Self {
        assert!(
            x.is_finite() && y.is_finite() && theta.is_finite(),
            "vehicle state must be finite"
        );
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn position(&self) -> Vector2<T> {
        Vector2::new(self.x, self.y)
    }

    /// The state as the 3-vector `[x, y, theta]`.
    pub fn as_vector(&self) -> Vector3<T> {
        Vector3::new(self.x, self.y, self.theta)
    }

    pub fn distance_to(&self, other: &Self) -> T {
        (self.position() - other.position()).norm()
    }
}

/// A pairwise angle-of-arrival measurement `z` with its noise covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct AoAPair<T: Real> {
    /// Measured angles (rad), both wrapped to `(-pi, pi]`.
    pub z: Vector2<T>,
    /// Measurement noise covariance (rad^2), symmetric positive definite.
    pub noise_cov: Matrix2<T>,
}

impl<T: Real> AoAPair<T> {
    /// Builds a measurement; components are wrapped, the covariance is
    /// checked for symmetry and positive definiteness.
    pub fn new(z: Vector2<T>, noise_cov: Matrix2<T>) -> Result<Self> {
        if !(z.x.is_finite() && z.y.is_finite()) {
            return Err(Error::NonFinite {
                context: "AoA measurement",
            });
        }
        let asym = (noise_cov.m12 - noise_cov.m21).abs();
        let scale = noise_cov.abs().max().max(T::one());
        if asym > cvt::<T>(1e-9) * scale {
            return Err(Error::NotPositiveDefinite {
                context: "AoA noise covariance",
            });
        }
        // 2x2 SPD test via leading minors.
        let det = noise_cov.m11 * noise_cov.m22 - noise_cov.m12 * noise_cov.m21;
        if noise_cov.m11 <= T::zero() || det <= T::zero() {
            return Err(Error::NotPositiveDefinite {
                context: "AoA noise covariance",
            });
        }
        Ok(Self {
            z: Vector2::new(wrap_angle(z.x), wrap_angle(z.y)),
            noise_cov,
        })
    }
}

/// Distance below which two vehicles count as co-located and bearings are
/// undefined.
pub const COLOCATION_EPS: f64 = 1e-9;

/// Wraps an angle to the half-open interval `(-pi, pi]`.
pub fn wrap_angle<T: Real>(a: T) -> T {
    assert!(a.is_finite(), "wrap_angle: non-finite input");
    let pi = T::pi();
    let two_pi = T::two_pi();
    let mut r = a - two_pi * ((a - pi) / two_pi).ceil();
    // Guard the interval boundaries against rounding in the ceil path.
    if r > pi {
        r -= two_pi;
    }
    if r <= -pi {
        r += two_pi;
    }
    r
}

/// Reduces an angle modulo 2*pi into `[0, 2*pi)`.
pub fn mod_two_pi<T: Real>(a: T) -> T {
    let two_pi = T::two_pi();
    let mut r = a - two_pi * (a / two_pi).floor();
    if r < T::zero() {
        r += two_pi;
    }
    if r >= two_pi {
        r -= two_pi;
    }
    r
}

/// Noise-free bearing pair between two vehicles.
///
/// Component 1 is measured at `xi` (bearing of `xj` relative to `xi`'s
/// heading), component 2 at `xj`. Errors if the positions coincide.
pub fn measure_pair<T: Real>(xi: &VehicleState<T>, xj: &VehicleState<T>) -> Result<Vector2<T>> {
    if xi.distance_to(xj) < cvt::<T>(COLOCATION_EPS) {
        return Err(Error::CoincidentVehicles);
    }
    Ok(measure_pair_unchecked(xi, xj))
}

/// As [`measure_pair`] but without the co-location check; used on sigma
/// points where `atan2(0, 0) = 0` is an acceptable degenerate value.
pub fn measure_pair_unchecked<T: Real>(xi: &VehicleState<T>, xj: &VehicleState<T>) -> Vector2<T> {
    let dx = xj.x - xi.x;
    let dy = xj.y - xi.y;
    Vector2::new(
        wrap_angle(dy.atan2(dx) - xi.theta),
        wrap_angle((-dy).atan2(-dx) - xj.theta),
    )
}

/// Whether `target` falls inside `observer`'s measurable angular region.
///
/// The vehicle carries one linear array on each side; with the arrays
/// modeled as coincident at the vehicle center, their boresights point at
/// +pi/2 and -pi/2 from the heading and each covers `fov` radians. A full
/// `fov = pi` therefore covers the whole circle.
///
/// Panics unless `0 < fov <= pi`.
pub fn in_fov<T: Real>(observer: &VehicleState<T>, target: &VehicleState<T>, fov: T) -> bool {
    assert!(
        fov > T::zero() && fov <= T::pi(),
        "in_fov: fov must be in (0, pi]"
    );
    let dx = target.x - observer.x;
    let dy = target.y - observer.y;
    let bearing = wrap_angle(dy.atan2(dx) - observer.theta);
    let half = fov / cvt::<T>(2.0);
    let left = wrap_angle(bearing - T::frac_pi_2()).abs();
    let right = wrap_angle(bearing + T::frac_pi_2()).abs();
    left <= half || right <= half
}

/// Draws a noisy measurement of the pair: truth plus correlated Gaussian
/// noise, components wrapped back to `(-pi, pi]`.
pub fn simulate_measurement<T, R>(
    xi: &VehicleState<T>,
    xj: &VehicleState<T>,
    noise_cov: &Matrix2<T>,
    rng: &mut R,
) -> Result<AoAPair<T>>
where
    T: Real,
    R: Rng + ?Sized,
    StandardNormal: Distribution<T>,
{
    let truth = measure_pair(xi, xj)?;
    let chol = noise_cov.cholesky().ok_or(Error::NotPositiveDefinite {
        context: "measurement noise covariance",
    })?;
    let n = Vector2::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    let noisy = truth + chol.l() * n;
    AoAPair::new(noisy, *noise_cov)
}
