//! The outer loop: alternate sigma-point re-linearization of every edge
//! with a fixed number of BP sweeps.
//!
//! In posterior mode each edge is re-linearized against the joint pair
//! belief produced by the previous outer iteration (the block-diagonal
//! prior product on the first pass). In prior mode the linearization point
//! stays at the prior product forever and only the BP re-runs; this is the
//! baseline the posterior variant is measured against.

use crate::bp::{bp_sweep, empty_inbox, BpOptions, FactorGraph};
use crate::error::Result;
use crate::gaussian::Gaussian;
use crate::real::Real;
use crate::slr::{slr_linearize, LinearModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinearizationMode {
    #[default]
    Posterior,
    Prior,
}

/// Configuration of one solver run.
#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    /// Outer linearization iterations (K >= 1).
    pub outer_iterations: usize,
    /// BP sweeps per outer iteration (M >= 1).
    pub bp_iterations: usize,
    pub mode: LinearizationMode,
    pub bp: BpOptions,
    /// Keep per-iteration beliefs for metrics and diagnostics.
    pub record_history: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            outer_iterations: 10,
            bp_iterations: 3,
            mode: LinearizationMode::Posterior,
            bp: BpOptions::default(),
            record_history: false,
        }
    }
}

/// Solver output: final marginals plus optional per-iteration history.
#[derive(Debug, Clone)]
pub struct RunResult<T: Real> {
    pub beliefs: Vec<Gaussian<T>>,
    pub joints: Vec<Gaussian<T>>,
    /// Marginal beliefs after each outer iteration, length K when recorded.
    pub history: Option<Vec<Vec<Gaussian<T>>>>,
}

/// Runs the iterative localization loop on a measured factor graph.
pub fn run_plbp<T: Real>(graph: &FactorGraph<T>, config: &RunConfig) -> Result<RunResult<T>> {
    assert!(config.outer_iterations >= 1, "run_plbp: K >= 1");
    assert!(config.bp_iterations >= 1, "run_plbp: M >= 1");

    let prior_joints: Vec<Gaussian<T>> = graph
        .edges()
        .iter()
        .map(|e| Gaussian::block_diag(&graph.priors()[e.i], &graph.priors()[e.j]))
        .collect();

    let mut lin_points = prior_joints.clone();
    let mut history = config.record_history.then(Vec::new);
    let mut beliefs: Vec<Gaussian<T>> = graph.priors().to_vec();
    let mut joints: Vec<Gaussian<T>> = prior_joints.clone();
    let mut inbox = empty_inbox(graph);

    for _k in 1..=config.outer_iterations {
        let models: Vec<LinearModel<T>> = graph
            .edges()
            .iter()
            .enumerate()
            .map(|(e_idx, e)| slr_linearize(&lin_points[e_idx], &e.as_pair()?))
            .collect::<Result<_>>()?;

        let out = bp_sweep(graph, &models, inbox, config.bp_iterations, &config.bp)?;
        beliefs = out.beliefs;
        joints = out.joints;

        inbox = match config.mode {
            // A fresh linearization point invalidates old messages, so
            // posterior mode restarts every outer iteration from empty
            // inboxes and beliefs are rebuilt from the priors.
            LinearizationMode::Posterior => {
                lin_points = joints.clone();
                empty_inbox(graph)
            }
            // The model never changes in prior mode; message passing just
            // keeps converging on it, M more sweeps per outer iteration.
            LinearizationMode::Prior => out.inbox,
        };
        if let Some(h) = history.as_mut() {
            h.push(beliefs.clone());
        }
    }

    Ok(RunResult {
        beliefs,
        joints,
        history,
    })
}

/// Rough per-vehicle operation count `K * M * mean_degree * D^3`, used for
/// runtime sanity reporting only.
pub fn complexity_estimate<T: Real>(graph: &FactorGraph<T>, config: &RunConfig) -> f64 {
    let d = graph.state_dim() as f64;
    config.outer_iterations as f64 * config.bp_iterations as f64 * graph.mean_degree() * d * d * d
}
