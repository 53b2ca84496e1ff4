//! Statistical linear regression of a nonlinear measurement function
//! against a Gaussian belief.
//!
//! The fit propagates sigma points of the belief through the function and
//! solves the MMSE affine approximation in closed form: `A = C_xz^T P^-1`,
//! `b = zbar - A mu`, with regression-error covariance
//! `Omega = C_zz - A P A^T`. For angular measurements the sigma images are
//! first folded to within half a turn of a reference angle so the fit never
//! straddles the `atan2` branch cut.

use nalgebra::{DMatrix, DVector, Vector2};

use crate::error::{Error, Result};
use crate::gaussian::{clip_psd, sigma_points, Gaussian};
use crate::geometry::{measure_pair_unchecked, mod_two_pi, AoAPair, VehicleState};
use crate::real::{cvt, Real};

/// Affine surrogate `z ~ A x + b + e`, `e ~ N(0, omega)`, fitted over a
/// joint pair belief. For the bearing model `A` is 2 x 6, partitioned as
/// `[A_i | A_j]` over the two vehicle sub-states.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel<T: Real> {
    pub a: DMatrix<T>,
    pub b: DVector<T>,
    pub omega: DMatrix<T>,
}

impl<T: Real> LinearModel<T> {
    pub fn new(a: DMatrix<T>, b: DVector<T>, omega: DMatrix<T>) -> Result<Self> {
        let m = a.nrows();
        if b.len() != m || omega.nrows() != m || omega.ncols() != m {
            return Err(Error::DimensionMismatch {
                context: "linear model",
                expected: m,
                actual: b.len(),
            });
        }
        if a.iter().any(|v| !v.is_finite())
            || b.iter().any(|v| !v.is_finite())
            || omega.iter().any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite {
                context: "linear model",
            });
        }
        Ok(Self { a, b, omega })
    }

    /// Number of measurement rows.
    pub fn obs_dim(&self) -> usize {
        self.a.nrows()
    }

    /// The columns acting on one vehicle's sub-state: block 0 for the first
    /// vehicle of the pair, block 1 for the second.
    pub fn block(&self, which: usize, state_dim: usize) -> DMatrix<T> {
        self.a.columns(which * state_dim, state_dim).into_owned()
    }

    /// Predicted measurement at a joint state.
    pub fn predict(&self, x: &DVector<T>) -> DVector<T> {
        &self.a * x + &self.b
    }
}

/// Folds `raw` to the representative of its 2*pi-class nearest `reference`:
/// the result is congruent to `raw` and within `[-pi, pi]` of `reference`.
pub fn correct_sigma_angles<T: Real>(raw: T, reference: T) -> T {
    assert!(
        raw.is_finite() && reference.is_finite(),
        "correct_sigma_angles: non-finite input"
    );
    reference + T::pi() - mod_two_pi(reference - raw + T::pi())
}

/// Statistical linear regression of a plain vector-valued function; no
/// angle handling.
pub fn slr_fit<T, F>(belief: &Gaussian<T>, f: F) -> Result<LinearModel<T>>
where
    T: Real,
    F: Fn(&DVector<T>) -> DVector<T>,
{
    fit_impl(belief, f, AngleHandling::None)
}

/// SLR of an angular function: each sigma image component is folded against
/// `reference` when given, otherwise against the weighted circular mean of
/// the raw images.
pub fn slr_fit_angular<T, F>(
    belief: &Gaussian<T>,
    f: F,
    reference: Option<&DVector<T>>,
) -> Result<LinearModel<T>>
where
    T: Real,
    F: Fn(&DVector<T>) -> DVector<T>,
{
    match reference {
        Some(r) => fit_impl(belief, f, AngleHandling::Reference(r.clone())),
        None => fit_impl(belief, f, AngleHandling::CircularMean),
    }
}

/// Fits the bearing-pair measurement model over a 6-dim joint belief,
/// folding the sigma images against the actual measurement.
pub fn slr_linearize<T: Real>(
    belief: &Gaussian<T>,
    measurement: &AoAPair<T>,
) -> Result<LinearModel<T>> {
    if belief.dim() != 6 {
        return Err(Error::DimensionMismatch {
            context: "slr_linearize joint belief",
            expected: 6,
            actual: belief.dim(),
        });
    }
    let zref = DVector::from_vec(vec![measurement.z.x, measurement.z.y]);
    fit_impl(belief, pair_measurement, AngleHandling::Reference(zref))
}

/// Bearing pair as a function of the stacked 6-dim joint state.
pub fn pair_measurement<T: Real>(x: &DVector<T>) -> DVector<T> {
    let vi = VehicleState::new(x[0], x[1], x[2]);
    let vj = VehicleState::new(x[3], x[4], x[5]);
    let z: Vector2<T> = measure_pair_unchecked(&vi, &vj);
    DVector::from_vec(vec![z.x, z.y])
}

enum AngleHandling<T: Real> {
    None,
    Reference(DVector<T>),
    CircularMean,
}

fn fit_impl<T, F>(belief: &Gaussian<T>, f: F, angles: AngleHandling<T>) -> Result<LinearModel<T>>
where
    T: Real,
    F: Fn(&DVector<T>) -> DVector<T>,
{
    let sigma = sigma_points(belief)?;
    let mut images: Vec<DVector<T>> = sigma.points.iter().map(&f).collect();
    let m = images[0].len();

    match angles {
        AngleHandling::None => {}
        AngleHandling::Reference(zref) => {
            if zref.len() != m {
                return Err(Error::DimensionMismatch {
                    context: "angle-correction reference",
                    expected: m,
                    actual: zref.len(),
                });
            }
            for img in &mut images {
                for c in 0..m {
                    img[c] = correct_sigma_angles(img[c], zref[c]);
                }
            }
        }
        AngleHandling::CircularMean => {
            let mut reference = DVector::zeros(m);
            for c in 0..m {
                let mut sin_sum = T::zero();
                let mut cos_sum = T::zero();
                for (img, &w) in images.iter().zip(&sigma.weights) {
                    sin_sum += img[c].sin() * w;
                    cos_sum += img[c].cos() * w;
                }
                reference[c] = sin_sum.atan2(cos_sum);
            }
            for img in &mut images {
                for c in 0..m {
                    img[c] = correct_sigma_angles(img[c], reference[c]);
                }
            }
        }
    }

    let d = belief.dim();
    let mut zbar = DVector::zeros(m);
    for (img, &w) in images.iter().zip(&sigma.weights) {
        zbar += img * w;
    }
    let mut c_xz = DMatrix::zeros(d, m);
    let mut c_zz = DMatrix::zeros(m, m);
    for ((point, img), &w) in sigma.points.iter().zip(&images).zip(&sigma.weights) {
        let dx = point - belief.mean();
        let dz = img - &zbar;
        c_xz += &dx * dz.transpose() * w;
        c_zz += &dz * dz.transpose() * w;
    }

    // A^T = P^-1 C_xz, solved through a (jittered if needed) Cholesky of P.
    let mut p = belief.cov().clone();
    let a_t = loop {
        match p.clone().cholesky() {
            Some(chol) => break chol.solve(&c_xz),
            None => {
                let jitter = cvt::<T>(1e-9) * p.trace().max(T::one()) / cvt::<T>(d as f64);
                for i in 0..d {
                    p[(i, i)] += jitter;
                }
                if p[(0, 0)] > cvt::<T>(1e30) {
                    return Err(Error::Singular {
                        context: "SLR belief covariance",
                    });
                }
            }
        }
    };
    let a = a_t.transpose();
    let b = &zbar - &a * belief.mean();
    let omega_raw = &c_zz - &a * belief.cov() * a.transpose();
    let omega = clip_psd(&omega_raw, T::zero())?;
    LinearModel::new(a, b, omega)
}
