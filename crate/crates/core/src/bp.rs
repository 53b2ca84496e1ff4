//! Gaussian belief propagation on the vehicle factor graph.
//!
//! Each directed message is carried in observation form: the message
//! `m_{i->j}` is the pseudo-measurement `alpha ~ N(H x_j, Gamma)` of the
//! receiver's state. Messages are produced from the sender's extrinsic
//! belief (prior times all incoming messages except the receiver's own),
//! so the belief-propagation division never happens explicitly. A sweep
//! runs the synchronous flooding schedule: every directed message of
//! iteration `k` is computed from the inbox of iteration `k - 1`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::{clip_psd, kalman_update, Gaussian};
use crate::geometry::{wrap_angle, AoAPair};
use crate::real::{cvt, Real};
use crate::slr::LinearModel;

/// Which part of the pair measurement a directed message carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MessageForm {
    /// Both bearing components in every message (the default).
    #[default]
    Vector,
    /// Only the sender's own bearing component, as the message equations
    /// are printed; kept for fidelity experiments.
    Scalar,
}

/// Knobs for one BP run.
#[derive(Debug, Clone, Copy, Default)]
pub struct BpOptions {
    pub form: MessageForm,
    /// Additionally fold innovation components to `(-pi, pi]` whenever a
    /// message or edge likelihood is applied.
    ///
    /// Off by default: the sigma-image correction inside the regression
    /// already pins the fitted model to the measurement's branch (the
    /// predicted measurement at the linearization point lies within half a
    /// turn of `z`), and folding linear extrapolations can alias a large
    /// transient innovation onto the wrong branch.
    pub wrap_innovations: bool,
}

/// Directed BP message in Gaussian observation form.
#[derive(Debug, Clone)]
pub struct Message<T: Real> {
    pub alpha: DVector<T>,
    pub h: DMatrix<T>,
    pub gamma: DMatrix<T>,
    pub from: usize,
    pub to: usize,
    pub iteration: usize,
}

impl<T: Real> Message<T> {
    pub fn validate(&self) -> Result<()> {
        if self.alpha.iter().any(|v| !v.is_finite())
            || self.h.iter().any(|v| !v.is_finite())
            || self.gamma.iter().any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite { context: "message" });
        }
        let m = self.alpha.len();
        if self.h.nrows() != m || self.gamma.nrows() != m || self.gamma.ncols() != m {
            return Err(Error::DimensionMismatch {
                context: "message",
                expected: m,
                actual: self.h.nrows(),
            });
        }
        if self.gamma.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite {
                context: "message gamma",
            });
        }
        Ok(())
    }
}

/// An undirected measurement edge between vehicles `i < j`.
#[derive(Debug, Clone)]
pub struct Edge<T: Real> {
    pub i: usize,
    pub j: usize,
    pub z: DVector<T>,
    pub noise_cov: DMatrix<T>,
}

impl<T: Real> Edge<T> {
    pub fn new(i: usize, j: usize, z: DVector<T>, noise_cov: DMatrix<T>) -> Result<Self> {
        if i >= j {
            return Err(Error::InvalidScenario(format!(
                "edge ({i}, {j}) not in canonical i < j order"
            )));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "edge measurement",
            });
        }
        if noise_cov.nrows() != z.len()
            || noise_cov.ncols() != z.len()
            || noise_cov.clone().cholesky().is_none()
        {
            return Err(Error::NotPositiveDefinite {
                context: "edge noise covariance",
            });
        }
        Ok(Self { i, j, z, noise_cov })
    }

    pub fn from_pair(i: usize, j: usize, pair: &AoAPair<T>) -> Result<Self> {
        let z = DVector::from_vec(vec![pair.z.x, pair.z.y]);
        let r = DMatrix::from_fn(2, 2, |r, c| pair.noise_cov[(r, c)]);
        Self::new(i, j, z, r)
    }

    /// The measurement as a bearing pair; errors if the edge does not carry
    /// two components.
    pub fn as_pair(&self) -> Result<AoAPair<T>> {
        if self.z.len() != 2 {
            return Err(Error::DimensionMismatch {
                context: "bearing-pair edge",
                expected: 2,
                actual: self.z.len(),
            });
        }
        AoAPair::new(
            nalgebra::Vector2::new(self.z[0], self.z[1]),
            nalgebra::Matrix2::new(
                self.noise_cov[(0, 0)],
                self.noise_cov[(0, 1)],
                self.noise_cov[(1, 0)],
                self.noise_cov[(1, 1)],
            ),
        )
    }
}

/// The static estimation problem: one prior per vehicle plus measurement
/// edges. Linearized models are supplied separately since they change
/// every outer iteration.
#[derive(Debug, Clone)]
pub struct FactorGraph<T: Real> {
    priors: Vec<Gaussian<T>>,
    edges: Vec<Edge<T>>,
    state_dim: usize,
}

impl<T: Real> FactorGraph<T> {
    pub fn new(priors: Vec<Gaussian<T>>, edges: Vec<Edge<T>>) -> Result<Self> {
        if priors.is_empty() {
            return Err(Error::InvalidScenario("graph has no vehicles".into()));
        }
        let state_dim = priors[0].dim();
        if priors.iter().any(|p| p.dim() != state_dim) {
            return Err(Error::InvalidScenario(
                "vehicle priors have mixed dimensions".into(),
            ));
        }
        let n = priors.len();
        let mut seen = std::collections::BTreeSet::new();
        for e in &edges {
            if e.j >= n {
                return Err(Error::InvalidScenario(format!(
                    "edge ({}, {}) references missing vehicle",
                    e.i, e.j
                )));
            }
            if !seen.insert((e.i, e.j)) {
                return Err(Error::InvalidScenario(format!(
                    "duplicate edge ({}, {})",
                    e.i, e.j
                )));
            }
        }
        Ok(Self {
            priors,
            edges,
            state_dim,
        })
    }

    pub fn num_vehicles(&self) -> usize {
        self.priors.len()
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn priors(&self) -> &[Gaussian<T>] {
        &self.priors
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Result<usize> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.edges
            .iter()
            .position(|e| e.i == a && e.j == b)
            .ok_or(Error::MissingEdge { i, j })
    }

    /// Mean number of neighbors per vehicle.
    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edges.len() as f64 / self.priors.len() as f64
    }

    fn check_models(&self, models: &[LinearModel<T>]) -> Result<()> {
        if models.len() != self.edges.len() {
            return Err(Error::DimensionMismatch {
                context: "one linear model per edge",
                expected: self.edges.len(),
                actual: models.len(),
            });
        }
        for (e, m) in self.edges.iter().zip(models) {
            if m.a.ncols() != 2 * self.state_dim || m.obs_dim() != e.z.len() {
                return Err(Error::DimensionMismatch {
                    context: "linear model dimensions",
                    expected: 2 * self.state_dim,
                    actual: m.a.ncols(),
                });
            }
        }
        Ok(())
    }
}

/// Previous-iteration message store, one slot per directed edge:
/// slot `2e` holds `i -> j` of edge `e`, slot `2e + 1` holds `j -> i`.
pub type Inbox<T> = Vec<Option<Message<T>>>;

/// An all-empty inbox for `graph` (the `k = 0` initialization, where every
/// message is the constant 1).
pub fn empty_inbox<T: Real>(graph: &FactorGraph<T>) -> Inbox<T> {
    vec![None; 2 * graph.edges().len()]
}

/// Applies an observation to a belief as a Kalman update; innovation
/// components are optionally folded to `(-pi, pi]` first.
fn apply_observation<T: Real>(
    belief: &Gaussian<T>,
    h: &DMatrix<T>,
    z: &DVector<T>,
    noise: &DMatrix<T>,
    wrap: bool,
) -> Result<Gaussian<T>> {
    if wrap {
        let predicted = h * belief.mean();
        let mut z_eff = predicted.clone();
        for c in 0..z.len() {
            z_eff[c] += wrap_angle(z[c] - predicted[c]);
        }
        kalman_update(belief, h, &z_eff, noise)
    } else {
        kalman_update(belief, h, z, noise)
    }
}

/// Extrinsic belief of `vehicle`: its prior updated with every inbox
/// message addressed to it except the one sent by `exclude`.
pub fn extrinsic_belief<T: Real>(
    graph: &FactorGraph<T>,
    vehicle: usize,
    exclude: Option<usize>,
    inbox: &Inbox<T>,
    opts: &BpOptions,
) -> Result<Gaussian<T>> {
    let mut belief = graph.priors()[vehicle].clone();
    for msg in inbox.iter().flatten() {
        if msg.to != vehicle || Some(msg.from) == exclude {
            continue;
        }
        belief = apply_observation(
            &belief,
            &msg.h,
            &msg.alpha,
            &msg.gamma,
            opts.wrap_innovations,
        )?;
    }
    Ok(belief)
}

/// Belief of a vehicle at the current iteration: prior times all incoming
/// messages.
pub fn compute_belief<T: Real>(
    graph: &FactorGraph<T>,
    vehicle: usize,
    inbox: &Inbox<T>,
    opts: &BpOptions,
) -> Result<Gaussian<T>> {
    extrinsic_belief(graph, vehicle, None, inbox, opts)
}

const GAMMA_FLOOR: f64 = 1e-12;

/// Builds the directed message for one edge from the sender's extrinsic
/// belief: `alpha = z - A_s mu_ext - b`, `H = A_r`,
/// `Gamma = R + Omega + A_s P_ext A_s^T`.
pub fn compute_message<T: Real>(
    model: &LinearModel<T>,
    edge: &Edge<T>,
    sender_extrinsic: &Gaussian<T>,
    sender_is_i: bool,
    form: MessageForm,
) -> Result<Message<T>> {
    let s = sender_extrinsic.dim();
    let (a_send_full, a_recv_full) = if sender_is_i {
        (model.block(0, s), model.block(1, s))
    } else {
        (model.block(1, s), model.block(0, s))
    };
    let m = model.obs_dim();

    let (z, b, a_send, a_recv, r, omega) = match form {
        MessageForm::Vector => (
            edge.z.clone(),
            model.b.clone(),
            a_send_full,
            a_recv_full,
            edge.noise_cov.clone(),
            model.omega.clone(),
        ),
        MessageForm::Scalar => {
            if m != 2 {
                return Err(Error::InvalidParameter(
                    "scalar message form requires 2-component measurements".into(),
                ));
            }
            // The sender keeps the component it measured itself.
            let row = if sender_is_i { 0 } else { 1 };
            (
                DVector::from_vec(vec![edge.z[row]]),
                DVector::from_vec(vec![model.b[row]]),
                a_send_full.rows(row, 1).into_owned(),
                a_recv_full.rows(row, 1).into_owned(),
                edge.noise_cov.view((row, row), (1, 1)).into_owned(),
                model.omega.view((row, row), (1, 1)).into_owned(),
            )
        }
    };

    let alpha = &z - &a_send * sender_extrinsic.mean() - b;
    let gamma_raw = &r + &omega + &a_send * sender_extrinsic.cov() * a_send.transpose();
    let gamma = clip_psd(&gamma_raw, cvt::<T>(GAMMA_FLOOR))?;
    let (from, to) = if sender_is_i {
        (edge.i, edge.j)
    } else {
        (edge.j, edge.i)
    };
    let msg = Message {
        alpha,
        h: a_recv,
        gamma,
        from,
        to,
        iteration: 0,
    };
    msg.validate()?;
    Ok(msg)
}

/// Joint belief of an edge's two vehicles: the block-diagonal product of
/// their extrinsic beliefs, conditioned once on the edge's linearized
/// likelihood (observation `z - b` of `A x_ij` with noise `Omega + R`).
pub fn joint_belief<T: Real>(
    graph: &FactorGraph<T>,
    models: &[LinearModel<T>],
    edge_idx: usize,
    inbox: &Inbox<T>,
    opts: &BpOptions,
) -> Result<Gaussian<T>> {
    graph.check_models(models)?;
    let edge = &graph.edges()[edge_idx];
    let model = &models[edge_idx];
    let ext_i = extrinsic_belief(graph, edge.i, Some(edge.j), inbox, opts)?;
    let ext_j = extrinsic_belief(graph, edge.j, Some(edge.i), inbox, opts)?;
    let joint = Gaussian::block_diag(&ext_i, &ext_j);
    let z_eff = &edge.z - &model.b;
    let noise = &model.omega + &edge.noise_cov;
    apply_observation(&joint, &model.a, &z_eff, &noise, opts.wrap_innovations)
}

/// Output of one multi-iteration BP pass.
#[derive(Debug, Clone)]
pub struct SweepOutput<T: Real> {
    /// Marginal belief per vehicle.
    pub beliefs: Vec<Gaussian<T>>,
    /// Joint pair belief per edge.
    pub joints: Vec<Gaussian<T>>,
    /// Final directed-message store.
    pub inbox: Inbox<T>,
}

/// Runs `iterations` synchronous BP sweeps from `inbox`, then reads out
/// marginal and joint beliefs.
pub fn bp_sweep<T: Real>(
    graph: &FactorGraph<T>,
    models: &[LinearModel<T>],
    mut inbox: Inbox<T>,
    iterations: usize,
    opts: &BpOptions,
) -> Result<SweepOutput<T>> {
    assert!(iterations >= 1, "bp_sweep: at least one iteration");
    graph.check_models(models)?;
    if inbox.len() != 2 * graph.edges().len() {
        return Err(Error::DimensionMismatch {
            context: "inbox slots",
            expected: 2 * graph.edges().len(),
            actual: inbox.len(),
        });
    }

    for it in 1..=iterations {
        let mut next: Inbox<T> = Vec::with_capacity(inbox.len());
        for (e_idx, edge) in graph.edges().iter().enumerate() {
            let model = &models[e_idx];
            for sender_is_i in [true, false] {
                let (sender, receiver) = if sender_is_i {
                    (edge.i, edge.j)
                } else {
                    (edge.j, edge.i)
                };
                let ext = extrinsic_belief(graph, sender, Some(receiver), &inbox, opts)?;
                let mut msg = compute_message(model, edge, &ext, sender_is_i, opts.form)?;
                msg.iteration = it;
                next.push(Some(msg));
            }
        }
        inbox = next;
    }

    let beliefs = (0..graph.num_vehicles())
        .map(|v| compute_belief(graph, v, &inbox, opts))
        .collect::<Result<Vec<_>>>()?;
    let joints = (0..graph.edges().len())
        .map(|e| joint_belief(graph, models, e, &inbox, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepOutput {
        beliefs,
        joints,
        inbox,
    })
}
