//! Gaussian density algebra: validated moment-form Gaussians, unscented
//! sigma points, and the Kalman measurement update that implements every
//! Gaussian product in the message-passing equations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::real::{cvt, Real};

fn validation_tol<T: Real>() -> T {
    // 1e-9 for f64; widened for f32 where that is below the roundoff.
    let floor = T::eps() * cvt::<T>(1e3);
    if floor > cvt::<T>(1e-9) {
        floor
    } else {
        cvt::<T>(1e-9)
    }
}

fn symmetrize<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * cvt::<T>(0.5)
}

/// A factor `B` with `B B^T = m` for a symmetric PSD matrix.
///
/// Cholesky when the matrix is numerically positive definite (exact to
/// machine precision; the iterative eigensolver can lose several digits),
/// otherwise the eigendecomposition root with negative eigenvalues
/// clipped to zero, which tolerates exactly singular covariances.
fn sqrt_psd<T: Real>(m: &DMatrix<T>) -> Result<DMatrix<T>> {
    let sym = symmetrize(m);
    if let Some(chol) = sym.clone().cholesky() {
        return Ok(chol.unpack());
    }
    let eig = sym
        .symmetric_eigen_try(T::eps(), 500)
        .ok_or(Error::Singular {
            context: "symmetric eigendecomposition",
        })?;
    let (vecs, vals) = (eig.0, eig.1);
    let d = vals.len();
    let mut scaled = vecs.clone();
    for i in 0..d {
        let s = if vals[i] > T::zero() {
            vals[i].sqrt()
        } else {
            T::zero()
        };
        scaled.column_mut(i).scale_mut(s);
    }
    Ok(&scaled * vecs.transpose())
}

/// Eigenvalues and eigenvectors of a symmetric matrix; thin wrapper so the
/// rest of the module shares one failure path.
trait SymEig<T: Real> {
    fn symmetric_eigen_try(self, eps: T, max_iter: usize) -> Option<(DMatrix<T>, DVector<T>)>;
}

impl<T: Real> SymEig<T> for DMatrix<T> {
    fn symmetric_eigen_try(self, eps: T, max_iter: usize) -> Option<(DMatrix<T>, DVector<T>)> {
        nalgebra::linalg::SymmetricEigen::try_new(self, eps, max_iter)
            .map(|e| (e.eigenvectors, e.eigenvalues))
    }
}

/// Gershgorin bounds `(lower, upper)` on the eigenvalues of a symmetric
/// matrix. Cheap and conservative; used to skip exact decompositions on
/// the hot paths.
fn eigen_bounds<T: Real>(m: &DMatrix<T>) -> (T, T) {
    let d = m.nrows();
    let mut lo = T::max_value().unwrap_or_else(T::one);
    let mut hi = -lo;
    for i in 0..d {
        let mut radius = T::zero();
        for j in 0..d {
            if i != j {
                radius += m[(i, j)].abs();
            }
        }
        lo = lo.min(m[(i, i)] - radius);
        hi = hi.max(m[(i, i)] + radius);
    }
    (lo, hi)
}

/// Clips a symmetric matrix to the cone of matrices with eigenvalues at
/// least `floor`.
pub fn clip_psd<T: Real>(m: &DMatrix<T>, floor: T) -> Result<DMatrix<T>> {
    let sym = symmetrize(m);
    // Fast path: already provably above the floor.
    if eigen_bounds(&sym).0 >= floor {
        return Ok(sym);
    }
    let eig = sym
        .symmetric_eigen_try(T::eps(), 500)
        .ok_or(Error::Singular {
            context: "PSD projection",
        })?;
    let (vecs, vals) = (eig.0, eig.1);
    let mut scaled = vecs.clone();
    for i in 0..vals.len() {
        let v = if vals[i] > floor { vals[i] } else { floor };
        scaled.column_mut(i).scale_mut(v);
    }
    Ok(symmetrize(&(&scaled * vecs.transpose())))
}

/// A multivariate Gaussian in moment form.
///
/// Construction validates the invariants (finite mean, symmetric PSD
/// covariance within a small tolerance) and stores the symmetrized
/// covariance, so a `Gaussian` in hand is always well formed.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian<T: Real> {
    mean: DVector<T>,
    cov: DMatrix<T>,
}

impl<T: Real> Gaussian<T> {
    pub fn new(mean: DVector<T>, cov: DMatrix<T>) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "Gaussian covariance",
                expected: d,
                actual: cov.nrows(),
            });
        }
        if mean.iter().any(|v| !v.is_finite()) || cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "Gaussian moments",
            });
        }
        let tol = validation_tol::<T>();
        let scale = cov.amax().max(T::one());
        let asym = (&cov - cov.transpose()).amax();
        if asym > tol * scale {
            return Err(Error::NotPositiveDefinite {
                context: "Gaussian covariance (asymmetric)",
            });
        }
        let sym = symmetrize(&cov);
        let trace = sym.trace();
        let min_allowed = -tol * trace.max(T::one());
        // The Gershgorin bound settles most cases without a decomposition.
        if eigen_bounds(&sym).0 < min_allowed {
            let eig = sym
                .clone()
                .symmetric_eigen_try(T::eps(), 500)
                .ok_or(Error::Singular {
                    context: "Gaussian covariance eigendecomposition",
                })?;
            if eig.1.iter().any(|&v| v < min_allowed) {
                return Err(Error::NotPositiveDefinite {
                    context: "Gaussian covariance (negative eigenvalue)",
                });
            }
        }
        Ok(Self { mean, cov: sym })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<T> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<T> {
        &self.cov
    }

    /// Re-runs the construction checks; the numerical-hygiene sweeps call
    /// this on every stored belief.
    pub fn validate(&self) -> Result<()> {
        Self::new(self.mean.clone(), self.cov.clone()).map(|_| ())
    }

    /// Stacks two independent Gaussians into one block-diagonal joint.
    pub fn block_diag(a: &Self, b: &Self) -> Self {
        let (da, db) = (a.dim(), b.dim());
        let mut mean = DVector::zeros(da + db);
        mean.rows_mut(0, da).copy_from(&a.mean);
        mean.rows_mut(da, db).copy_from(&b.mean);
        let mut cov = DMatrix::zeros(da + db, da + db);
        cov.view_mut((0, 0), (da, da)).copy_from(&a.cov);
        cov.view_mut((da, da), (db, db)).copy_from(&b.cov);
        Self { mean, cov }
    }

    /// Marginal over the coordinate block `[start, start + len)`.
    pub fn marginal(&self, start: usize, len: usize) -> Self {
        Self {
            mean: self.mean.rows(start, len).into_owned(),
            cov: self.cov.view((start, start), (len, len)).into_owned(),
        }
    }
}

/// Deterministic sigma-point representation of a Gaussian: `2d + 1` points
/// whose weighted first two moments reproduce the source density.
#[derive(Debug, Clone)]
pub struct SigmaSet<T: Real> {
    pub points: Vec<DVector<T>>,
    pub weights: Vec<T>,
}

impl<T: Real> SigmaSet<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Weighted mean of the points.
    pub fn mean(&self) -> DVector<T> {
        let mut m = DVector::zeros(self.points[0].len());
        for (p, &w) in self.points.iter().zip(&self.weights) {
            m += p * w;
        }
        m
    }

    /// Weighted scatter about the weighted mean.
    pub fn scatter(&self) -> DMatrix<T> {
        let m = self.mean();
        let d = m.len();
        let mut s = DMatrix::zeros(d, d);
        for (p, &w) in self.points.iter().zip(&self.weights) {
            let dvec = p - &m;
            s += &dvec * dvec.transpose() * w;
        }
        s
    }
}

/// Unscented-transform scaling offset for a given state dimension.
///
/// The classical `3 - d` is kept for `d <= 2`; for larger states it turns
/// the center weight negative, which can push the regression covariance
/// indefinite, so the equal-weight variant (`kappa = 0`) is used instead.
pub fn ut_kappa<T: Real>(dim: usize) -> T {
    if dim <= 2 {
        cvt::<T>(3.0 - dim as f64)
    } else {
        T::zero()
    }
}

/// Generates `2d + 1` unscented sigma points for `g`.
pub fn sigma_points<T: Real>(g: &Gaussian<T>) -> Result<SigmaSet<T>> {
    let d = g.dim();
    assert!(d >= 1, "sigma_points: empty state");
    let kappa = ut_kappa::<T>(d);
    let scale = cvt::<T>(d as f64) + kappa;
    let root = sqrt_psd(&(g.cov() * scale))?;

    let mut points = Vec::with_capacity(2 * d + 1);
    let mut weights = Vec::with_capacity(2 * d + 1);
    points.push(g.mean().clone());
    weights.push(kappa / scale);
    let half = (cvt::<T>(2.0) * scale).recip();
    for i in 0..d {
        let col = root.column(i).into_owned();
        points.push(g.mean() + &col);
        weights.push(half);
        points.push(g.mean() - &col);
        weights.push(half);
    }
    Ok(SigmaSet { points, weights })
}

const CONDITION_LIMIT: f64 = 1e12;

/// Kalman measurement update of `prior` with the linear observation
/// `z_eff = H x + v`, `v ~ N(0, noise_cov)`.
///
/// The innovation covariance is jittered when near-singular; the posterior
/// covariance is symmetrized before validation.
pub fn kalman_update<T: Real>(
    prior: &Gaussian<T>,
    h: &DMatrix<T>,
    z_eff: &DVector<T>,
    noise_cov: &DMatrix<T>,
) -> Result<Gaussian<T>> {
    let d = prior.dim();
    let m = z_eff.len();
    if h.nrows() != m || h.ncols() != d {
        return Err(Error::DimensionMismatch {
            context: "kalman_update observation matrix",
            expected: m * d,
            actual: h.nrows() * h.ncols(),
        });
    }
    if noise_cov.nrows() != m || noise_cov.ncols() != m {
        return Err(Error::DimensionMismatch {
            context: "kalman_update noise covariance",
            expected: m,
            actual: noise_cov.nrows(),
        });
    }

    let p_ht = prior.cov() * h.transpose();
    let mut s = symmetrize(&(h * &p_ht + noise_cov));

    // Jitter when the innovation covariance may be ill conditioned; the
    // Gershgorin bounds are conservative, and the 1e-9-relative jitter is
    // harmless when triggered spuriously.
    let (lmin, lmax) = eigen_bounds(&s);
    if lmin <= T::zero() || lmax / lmin > cvt::<T>(CONDITION_LIMIT) {
        let jitter = cvt::<T>(1e-9) * s.trace().max(T::eps()) / cvt::<T>(m as f64);
        for i in 0..m {
            s[(i, i)] += jitter;
        }
    }

    let chol = match s.clone().cholesky() {
        Some(c) => c,
        None => {
            // One more, larger jitter before giving up.
            let jitter = cvt::<T>(1e-6) * s.trace().max(T::eps()) / cvt::<T>(m as f64);
            for i in 0..m {
                s[(i, i)] += jitter;
            }
            s.clone().cholesky().ok_or(Error::Singular {
                context: "innovation covariance",
            })?
        }
    };

    // K = P H^T S^-1, via X = S^-1 (P H^T)^T.
    let x = chol.solve(&p_ht.transpose());
    let gain = x.transpose();
    let innovation = z_eff - h * prior.mean();
    let mean = prior.mean() + &gain * innovation;
    // P' = P - K S K^T = P - (P H^T) X.
    let cov = symmetrize(&(prior.cov() - &p_ht * &x));
    Gaussian::new(mean, cov)
}
