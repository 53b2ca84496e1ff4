//! Independent posterior references for small problems.
//!
//! `dense_linear_solve` conditions the stacked joint Gaussian on every
//! linearized edge at once and is exact for affine models; it is the
//! reference that loopy BP is checked against on trees. `importance_posterior`
//! weights prior samples by the exact nonlinear bearing likelihood and is
//! the reference for the full algorithm on two- and three-vehicle scenarios.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::bp::FactorGraph;
use crate::error::{Error, Result};
use crate::gaussian::{clip_psd, kalman_update, Gaussian};
use crate::geometry::{measure_pair_unchecked, wrap_angle, VehicleState};
use crate::real::Real;
use crate::scenario::Scenario;
use crate::slr::LinearModel;

/// Exact joint posterior of a graph whose edges all carry affine models:
/// the block-diagonal prior stack conditioned on every edge likelihood
/// (`z - b` observed through `A` with noise `Omega + R`).
pub fn dense_linear_solve<T: Real>(
    graph: &FactorGraph<T>,
    models: &[LinearModel<T>],
) -> Result<Gaussian<T>> {
    if models.len() != graph.edges().len() {
        return Err(Error::DimensionMismatch {
            context: "one model per edge",
            expected: graph.edges().len(),
            actual: models.len(),
        });
    }
    let s = graph.state_dim();
    let n = graph.num_vehicles();

    let mut mean = DVector::zeros(n * s);
    let mut cov = DMatrix::zeros(n * s, n * s);
    for (v, prior) in graph.priors().iter().enumerate() {
        mean.rows_mut(v * s, s).copy_from(prior.mean());
        cov.view_mut((v * s, v * s), (s, s)).copy_from(prior.cov());
    }
    let mut joint = Gaussian::new(mean, cov)?;

    for (edge, model) in graph.edges().iter().zip(models) {
        let m = model.obs_dim();
        let mut h = DMatrix::zeros(m, n * s);
        h.view_mut((0, edge.i * s), (m, s))
            .copy_from(&model.block(0, s));
        h.view_mut((0, edge.j * s), (m, s))
            .copy_from(&model.block(1, s));
        let z_eff = &edge.z - &model.b;
        let noise = &model.omega + &edge.noise_cov;
        joint = kalman_update(&joint, &h, &z_eff, &noise)?;
    }
    Ok(joint)
}

/// Self-normalized importance-sampling estimate of the exact posterior.
#[derive(Debug, Clone)]
pub struct OracleEstimate {
    /// Weighted posterior moments per vehicle.
    pub marginals: Vec<Gaussian<f64>>,
    /// Effective sample size of the weight distribution.
    pub ess: f64,
}

/// Minimum effective sample size below which the estimate is rejected.
pub const MIN_ESS: f64 = 100.0;

/// Maximum scenario size the sampler accepts.
pub const MAX_ORACLE_VEHICLES: usize = 3;

/// Brute-force posterior for a scenario of at most three vehicles: joint
/// samples drawn from the product of priors, weighted by the exact
/// likelihood of all bearing measurements (residuals wrapped per
/// component).
pub fn importance_posterior<R: Rng + ?Sized>(
    scenario: &Scenario,
    sample_count: usize,
    rng: &mut R,
) -> Result<OracleEstimate> {
    let n = scenario.num_vehicles();
    if n > MAX_ORACLE_VEHICLES {
        return Err(Error::OracleTooLarge {
            max: MAX_ORACLE_VEHICLES,
            actual: n,
        });
    }
    assert!(sample_count >= 1, "importance_posterior: need samples");

    // Per-vehicle prior factors (PSD square roots handle exact zeros).
    let roots: Vec<DMatrix<f64>> = scenario
        .priors
        .iter()
        .map(|p| {
            p.cov()
                .clone()
                .cholesky()
                .map(|c| c.l())
                .map_or_else(|| psd_root(p.cov()), Ok)
        })
        .collect::<Result<Vec<_>>>()?;

    // Precision of each edge's measurement noise.
    let edge_info: Vec<(usize, usize, DVector<f64>, DMatrix<f64>)> = scenario
        .edges
        .iter()
        .map(|(i, j, pair)| {
            let z = DVector::from_vec(vec![pair.z.x, pair.z.y]);
            let r = DMatrix::from_fn(2, 2, |a, b| pair.noise_cov[(a, b)]);
            let inv = r.clone().try_inverse().ok_or(Error::Singular {
                context: "edge noise covariance",
            })?;
            Ok((*i, *j, z, inv))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut w_sum = 0.0;
    let mut w_sq_sum = 0.0;
    let mut mean_acc = vec![DVector::<f64>::zeros(3); n];
    let mut sq_acc = vec![DMatrix::<f64>::zeros(3, 3); n];

    let mut states: Vec<VehicleState<f64>> = Vec::with_capacity(n);
    let mut raw = vec![DVector::<f64>::zeros(3); n];
    for _ in 0..sample_count {
        states.clear();
        for (v, prior) in scenario.priors.iter().enumerate() {
            let noise = DVector::from_fn(3, |_, _| rng.sample(StandardNormal));
            let x = prior.mean() + &roots[v] * noise;
            states.push(VehicleState {
                x: x[0],
                y: x[1],
                theta: x[2],
            });
            raw[v] = x;
        }
        // Log-likelihood is non-positive, so plain exp never overflows.
        let mut log_w = 0.0;
        for (i, j, z, r_inv) in &edge_info {
            let h = measure_pair_unchecked(&states[*i], &states[*j]);
            let resid = DVector::from_vec(vec![wrap_angle(z[0] - h.x), wrap_angle(z[1] - h.y)]);
            log_w -= 0.5 * (r_inv * &resid).dot(&resid);
        }
        let w = log_w.exp();
        w_sum += w;
        w_sq_sum += w * w;
        for v in 0..n {
            mean_acc[v] += &raw[v] * w;
            sq_acc[v] += &raw[v] * raw[v].transpose() * w;
        }
    }

    if w_sum <= 0.0 || !w_sum.is_finite() {
        return Err(Error::UnreliableOracle {
            ess: 0.0,
            min: MIN_ESS,
        });
    }
    let ess = w_sum * w_sum / w_sq_sum;
    if ess < MIN_ESS {
        return Err(Error::UnreliableOracle { ess, min: MIN_ESS });
    }

    let mut marginals = Vec::with_capacity(n);
    for v in 0..n {
        let mean = &mean_acc[v] / w_sum;
        let second = &sq_acc[v] / w_sum;
        let cov_raw = second - &mean * mean.transpose();
        let cov = clip_psd(&cov_raw, 0.0)?;
        marginals.push(Gaussian::new(mean, cov)?);
    }
    Ok(OracleEstimate { marginals, ess })
}

fn psd_root(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = m.clone().symmetric_eigen();
    let mut scaled = eig.eigenvectors.clone();
    for i in 0..eig.eigenvalues.len() {
        let s = eig.eigenvalues[i].max(0.0).sqrt();
        scaled.column_mut(i).scale_mut(s);
    }
    Ok(&scaled * eig.eigenvectors.transpose())
}
