//! Synthetic vehicular scenarios: vehicle placement on a street grid,
//! Gaussian priors around the truth, anchor designation, the radius/FOV
//! communication graph, and one noisy bearing measurement per link.
//!
//! The grid-streets layout drops vehicles into stopped queues at a handful
//! of intersections of a 4x4-block street grid (80 m pitch, two lanes per
//! approach), which reproduces the connectivity of a dense urban snapshot.
//! The whole generation is a pure function of the parameter set and the
//! seeded random source.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bp::{Edge, FactorGraph};
use crate::error::{Error, Result};
use crate::gaussian::Gaussian;
use crate::geometry::{in_fov, simulate_measurement, wrap_angle, AoAPair, VehicleState};

/// Street-grid extent: 4 x 4 blocks at 80 m pitch.
const GRID_BLOCKS: usize = 4;
const BLOCK_PITCH: f64 = 80.0;

/// Queue geometry at an intersection approach.
const QUEUE_GAP: f64 = 5.0;
const QUEUE_SPACING: f64 = 5.5;
const LANE_OFFSET: f64 = 1.75;
const LANE_WIDTH: f64 = 3.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Layout {
    #[default]
    #[serde(rename = "grid-streets")]
    GridStreets,
    #[serde(rename = "uniform")]
    Uniform,
    #[serde(rename = "from-file")]
    FromFile,
}

/// Scenario parameter set; the defaults are the benchmark values
/// (r = 30 m, full FOV, 5 m / 0.35 rad prior sigmas, R = 0.10 rad^2,
/// 51 vehicles with 6 anchors at variance 0.01).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioParams {
    pub r: f64,
    pub fov: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub sigma_theta: f64,
    /// Measurement noise variance, applied as `R * I_2` (rad^2).
    #[serde(rename = "R")]
    pub meas_var: f64,
    pub n_vehicles: usize,
    pub n_anchors: usize,
    /// Prior variances of anchor vehicles: (m^2, m^2, rad^2).
    pub anchor_var: [f64; 3],
    pub layout: Layout,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            r: 30.0,
            fov: PI,
            sigma_x: 5.0,
            sigma_y: 5.0,
            sigma_theta: 0.35,
            meas_var: 0.10,
            n_vehicles: 51,
            n_anchors: 6,
            anchor_var: [0.01, 0.01, 0.01],
            layout: Layout::GridStreets,
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter(what.to_string()))
            }
        };
        check(self.r > 0.0 && self.r.is_finite(), "r must be positive")?;
        check(self.fov > 0.0 && self.fov <= PI, "fov must be in (0, pi]")?;
        check(
            self.sigma_x >= 0.0 && self.sigma_y >= 0.0 && self.sigma_theta >= 0.0,
            "prior sigmas must be non-negative",
        )?;
        check(self.meas_var > 0.0, "R must be positive")?;
        check(self.n_vehicles >= 1, "need at least one vehicle")?;
        check(
            self.n_anchors <= self.n_vehicles,
            "more anchors than vehicles",
        )?;
        check(
            self.anchor_var.iter().all(|&v| v > 0.0),
            "anchor variances must be positive",
        )?;
        Ok(())
    }

    /// Prior standard deviation of the planar position error,
    /// `sqrt(sigma_x^2 + sigma_y^2)`.
    pub fn sigma_p(&self) -> f64 {
        (self.sigma_x * self.sigma_x + self.sigma_y * self.sigma_y).sqrt()
    }
}

/// A complete static snapshot: truth, priors, anchors, and measured links.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub truth: Vec<VehicleState<f64>>,
    pub priors: Vec<Gaussian<f64>>,
    pub anchor_ids: BTreeSet<usize>,
    pub edges: Vec<(usize, usize, AoAPair<f64>)>,
    pub params: ScenarioParams,
}

impl Scenario {
    /// Validates the cross-field invariants and builds the scenario.
    pub fn new(
        truth: Vec<VehicleState<f64>>,
        priors: Vec<Gaussian<f64>>,
        anchor_ids: BTreeSet<usize>,
        edges: Vec<(usize, usize, AoAPair<f64>)>,
        params: ScenarioParams,
    ) -> Result<Self> {
        let n = truth.len();
        if priors.len() != n {
            return Err(Error::InvalidScenario(format!(
                "{} priors for {} vehicles",
                priors.len(),
                n
            )));
        }
        if priors.iter().any(|p| p.dim() != 3) {
            return Err(Error::InvalidScenario(
                "priors must be 3-dimensional".into(),
            ));
        }
        if let Some(&id) = anchor_ids.iter().find(|&&id| id >= n) {
            return Err(Error::InvalidScenario(format!(
                "anchor id {id} out of range"
            )));
        }
        let mut seen = BTreeSet::new();
        for &(i, j, _) in &edges {
            if i >= j || j >= n {
                return Err(Error::InvalidScenario(format!(
                    "edge ({i}, {j}) malformed or out of range"
                )));
            }
            if !seen.insert((i, j)) {
                return Err(Error::InvalidScenario(format!("duplicate edge ({i}, {j})")));
            }
            let dist = truth[i].distance_to(&truth[j]);
            if dist > params.r * (1.0 + 1e-9) {
                return Err(Error::InvalidScenario(format!(
                    "edge ({i}, {j}) violates communication radius: {dist:.3} m > {} m",
                    params.r
                )));
            }
            if !in_fov(&truth[i], &truth[j], params.fov)
                || !in_fov(&truth[j], &truth[i], params.fov)
            {
                return Err(Error::InvalidScenario(format!(
                    "edge ({i}, {j}) violates mutual field of view"
                )));
            }
        }
        Ok(Self {
            truth,
            priors,
            anchor_ids,
            edges,
            params,
        })
    }

    pub fn num_vehicles(&self) -> usize {
        self.truth.len()
    }

    /// The estimation problem for the solver.
    pub fn factor_graph(&self) -> Result<FactorGraph<f64>> {
        let edges = self
            .edges
            .iter()
            .map(|(i, j, pair)| Edge::from_pair(*i, *j, pair))
            .collect::<Result<Vec<_>>>()?;
        FactorGraph::new(self.priors.clone(), edges)
    }
}

/// Pairs within communication radius and mutual field of view, in
/// canonical `i < j` order.
pub fn build_graph(truth: &[VehicleState<f64>], r: f64, fov: f64) -> Vec<(usize, usize)> {
    assert!(r > 0.0, "build_graph: radius must be positive");
    let mut edges = Vec::new();
    for i in 0..truth.len() {
        for j in (i + 1)..truth.len() {
            if truth[i].distance_to(&truth[j]) <= r
                && in_fov(&truth[i], &truth[j], fov)
                && in_fov(&truth[j], &truth[i], fov)
            {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Generates a full scenario from parameters and a seeded random source.
pub fn generate_scenario<R: Rng + ?Sized>(
    params: &ScenarioParams,
    rng: &mut R,
) -> Result<Scenario> {
    params.validate()?;
    let truth = match params.layout {
        Layout::GridStreets => place_grid_streets(params.n_vehicles, rng),
        Layout::Uniform => place_uniform(params.n_vehicles, rng),
        Layout::FromFile => {
            return Err(Error::InvalidParameter(
                "from-file layout cannot be generated; load the scenario instead".into(),
            ))
        }
    };

    // One triple of standard normals per vehicle, drawn unconditionally so
    // the stream position does not depend on the anchor choice.
    let offsets: Vec<[f64; 3]> = (0..params.n_vehicles)
        .map(|_| {
            [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ]
        })
        .collect();

    let anchor_ids = select_anchors(&truth, params.n_anchors);

    let mut priors = Vec::with_capacity(params.n_vehicles);
    for v in 0..params.n_vehicles {
        let t = &truth[v];
        let (mean, var) = if anchor_ids.contains(&v) {
            (
                DVector::from_vec(vec![t.x, t.y, t.theta]),
                params.anchor_var,
            )
        } else {
            let o = offsets[v];
            (
                DVector::from_vec(vec![
                    t.x + params.sigma_x * o[0],
                    t.y + params.sigma_y * o[1],
                    wrap_angle(t.theta + params.sigma_theta * o[2]),
                ]),
                [
                    params.sigma_x * params.sigma_x,
                    params.sigma_y * params.sigma_y,
                    params.sigma_theta * params.sigma_theta,
                ],
            )
        };
        let cov = DMatrix::from_diagonal(&DVector::from_row_slice(&var));
        priors.push(Gaussian::new(mean, cov)?);
    }

    let noise = Matrix2::identity() * params.meas_var;
    let mut edges = Vec::new();
    for (i, j) in build_graph(&truth, params.r, params.fov) {
        let pair = simulate_measurement(&truth[i], &truth[j], &noise, rng)?;
        edges.push((i, j, pair));
    }

    Scenario::new(truth, priors, anchor_ids, edges, params.clone())
}

fn place_uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<VehicleState<f64>> {
    let extent = GRID_BLOCKS as f64 * BLOCK_PITCH;
    (0..n)
        .map(|_| {
            VehicleState::new(
                rng.gen_range(0.0..extent),
                rng.gen_range(0.0..extent),
                rng.gen_range(-PI..PI),
            )
        })
        .collect()
}

/// Queued-traffic placement: vehicles pile up in two-lane queues on the
/// approaches of a few randomly chosen intersections.
fn place_grid_streets<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<VehicleState<f64>> {
    let lines = GRID_BLOCKS + 1;
    let mut intersections = Vec::with_capacity(lines * lines);
    for gx in 0..lines {
        for gy in 0..lines {
            intersections.push((gx as f64 * BLOCK_PITCH, gy as f64 * BLOCK_PITCH));
        }
    }
    let n_hotspots = (n / 13).clamp(1, intersections.len());
    let picks = sample(rng, intersections.len(), n_hotspots);
    let hotspots: Vec<(f64, f64)> = picks.iter().map(|k| intersections[k]).collect();

    // Approach directions: heading of a vehicle driving toward the
    // intersection from each of the four sides.
    const APPROACH: [f64; 4] = [0.0, PI, PI / 2.0, -PI / 2.0];

    let mut out = Vec::with_capacity(n);
    for v in 0..n {
        let (cx, cy) = hotspots[v % n_hotspots];
        let q = v / n_hotspots;
        let arm = q % 4;
        let lane = (q / 4) % 2;
        let slot = q / 8;

        let heading = APPROACH[arm] + rng.gen_range(-0.05..0.05);
        let dist = QUEUE_GAP + QUEUE_SPACING * slot as f64 + rng.gen_range(-1.2..1.2);
        let lateral = LANE_OFFSET + LANE_WIDTH * lane as f64 + rng.gen_range(-0.4..0.4);

        let (dir_x, dir_y) = (APPROACH[arm].cos(), APPROACH[arm].sin());
        // Right-hand normal of the travel direction.
        let (right_x, right_y) = (dir_y, -dir_x);
        let x = cx - dist * dir_x + lateral * right_x;
        let y = cy - dist * dir_y + lateral * right_y;
        out.push(VehicleState::new(x, y, heading));
    }
    out
}

/// Farthest-point anchor selection: the first anchor is the vehicle
/// farthest from the fleet centroid, each further anchor maximizes the
/// minimum distance to those already chosen.
fn select_anchors(truth: &[VehicleState<f64>], n_anchors: usize) -> BTreeSet<usize> {
    let mut selected = BTreeSet::new();
    if n_anchors == 0 || truth.is_empty() {
        return selected;
    }
    let n = truth.len();
    let cx = truth.iter().map(|t| t.x).sum::<f64>() / n as f64;
    let cy = truth.iter().map(|t| t.y).sum::<f64>() / n as f64;
    let centroid = Vector2::new(cx, cy);
    let first = (0..n)
        .max_by(|&a, &b| {
            let da = (truth[a].position() - centroid).norm();
            let db = (truth[b].position() - centroid).norm();
            da.partial_cmp(&db).unwrap().then(b.cmp(&a))
        })
        .unwrap();
    selected.insert(first);
    while selected.len() < n_anchors {
        let next = (0..n)
            .filter(|v| !selected.contains(v))
            .max_by(|&a, &b| {
                let da = min_dist(truth, &selected, a);
                let db = min_dist(truth, &selected, b);
                da.partial_cmp(&db).unwrap().then(b.cmp(&a))
            })
            .unwrap();
        selected.insert(next);
    }
    selected
}

fn min_dist(truth: &[VehicleState<f64>], selected: &BTreeSet<usize>, v: usize) -> f64 {
    selected
        .iter()
        .map(|&s| truth[v].distance_to(&truth[s]))
        .fold(f64::INFINITY, f64::min)
}

// --- Scenario file format -------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    params: ScenarioParams,
    vehicles: Vec<VehicleRow>,
    priors: Vec<PriorRow>,
    anchors: Vec<usize>,
    edges: Vec<EdgeRow>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VehicleRow {
    id: usize,
    x: f64,
    y: f64,
    theta: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PriorRow {
    id: usize,
    mean: [f64; 3],
    cov: [[f64; 3]; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRow {
    i: usize,
    j: usize,
    z: [f64; 2],
    #[serde(rename = "R")]
    r: [[f64; 2]; 2],
}

/// Writes a scenario as a JSON document (angles in radians, lengths in
/// meters).
pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<()> {
    let file = ScenarioFile {
        params: scenario.params.clone(),
        vehicles: scenario
            .truth
            .iter()
            .enumerate()
            .map(|(id, t)| VehicleRow {
                id,
                x: t.x,
                y: t.y,
                theta: t.theta,
            })
            .collect(),
        priors: scenario
            .priors
            .iter()
            .enumerate()
            .map(|(id, p)| {
                let m = p.mean();
                let c = p.cov();
                PriorRow {
                    id,
                    mean: [m[0], m[1], m[2]],
                    cov: std::array::from_fn(|r| std::array::from_fn(|col| c[(r, col)])),
                }
            })
            .collect(),
        anchors: scenario.anchor_ids.iter().copied().collect(),
        edges: scenario
            .edges
            .iter()
            .map(|(i, j, pair)| EdgeRow {
                i: *i,
                j: *j,
                z: [pair.z.x, pair.z.y],
                r: std::array::from_fn(|r| std::array::from_fn(|c| pair.noise_cov[(r, c)])),
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&file)?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Reads and fully validates a scenario file; the edge invariants (radius,
/// mutual FOV) are re-checked against the stored truth states.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    let file: ScenarioFile = serde_json::from_str(&text)?;
    file.params.validate()?;
    let n = file.vehicles.len();
    if file.params.n_vehicles != n {
        return Err(Error::InvalidScenario(format!(
            "params.n_vehicles = {} but {} vehicles listed",
            file.params.n_vehicles, n
        )));
    }

    let mut truth = vec![None; n];
    for row in &file.vehicles {
        if row.id >= n || truth[row.id].is_some() {
            return Err(Error::InvalidScenario(format!(
                "vehicle id {} duplicate or out of range (ids must be 0..{})",
                row.id,
                n - 1
            )));
        }
        truth[row.id] = Some(VehicleState::new(row.x, row.y, row.theta));
    }
    let truth: Vec<VehicleState<f64>> = truth.into_iter().map(Option::unwrap).collect();

    if file.priors.len() != n {
        return Err(Error::InvalidScenario(format!(
            "{} priors for {} vehicles",
            file.priors.len(),
            n
        )));
    }
    let mut priors = vec![None; n];
    for row in &file.priors {
        if row.id >= n || priors[row.id].is_some() {
            return Err(Error::InvalidScenario(format!(
                "prior id {} duplicate or out of range",
                row.id
            )));
        }
        let mean = DVector::from_row_slice(&row.mean);
        let cov = DMatrix::from_fn(3, 3, |r, c| row.cov[r][c]);
        priors[row.id] = Some(Gaussian::new(mean, cov)?);
    }
    let priors: Vec<Gaussian<f64>> = priors.into_iter().map(Option::unwrap).collect();

    let anchor_ids: BTreeSet<usize> = file.anchors.iter().copied().collect();
    let mut edges = Vec::with_capacity(file.edges.len());
    for row in &file.edges {
        let z = Vector2::new(row.z[0], row.z[1]);
        let cov = Matrix2::new(row.r[0][0], row.r[0][1], row.r[1][0], row.r[1][1]);
        edges.push((row.i, row.j, AoAPair::new(z, cov)?));
    }

    Scenario::new(truth, priors, anchor_ids, edges, file.params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{direction_rmse, position_rmse};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_sigma_priors_sit_on_truth() {
        let params = ScenarioParams {
            sigma_x: 0.0,
            sigma_y: 0.0,
            sigma_theta: 0.0,
            n_vehicles: 12,
            n_anchors: 2,
            ..Default::default()
        };
        let sc = generate_scenario(&params, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        for (t, p) in sc.truth.iter().zip(&sc.priors) {
            assert!((p.mean()[0] - t.x).abs() < 1e-12);
            assert!((p.mean()[1] - t.y).abs() < 1e-12);
            assert!(wrap_angle(p.mean()[2] - t.theta).abs() < 1e-12);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let params = ScenarioParams::default();
        let a = generate_scenario(&params, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = generate_scenario(&params, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a, b);
        let c = generate_scenario(&params, &mut ChaCha8Rng::seed_from_u64(43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn benchmark_initial_errors_match_prior_scale() {
        // Pooled over seeds the initial position RMSE sits near
        // sqrt(sigma_x^2 + sigma_y^2) = 7.07 m and the direction RMSE near
        // 0.35 rad.
        let params = ScenarioParams::default();
        let mut pos = 0.0;
        let mut dir = 0.0;
        let seeds = 10u64;
        for seed in 0..seeds {
            let sc = generate_scenario(&params, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            pos += position_rmse(&sc.priors, &sc.truth, &sc.anchor_ids).unwrap();
            dir += direction_rmse(&sc.priors, &sc.truth, &sc.anchor_ids).unwrap();
        }
        pos /= seeds as f64;
        dir /= seeds as f64;
        assert!((6.0..8.2).contains(&pos), "initial position RMSE {pos}");
        assert!((0.30..0.46).contains(&dir), "initial direction RMSE {dir}");
    }

    #[test]
    fn benchmark_graph_is_well_connected() {
        let params = ScenarioParams::default();
        for seed in 0..5 {
            let sc = generate_scenario(&params, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let graph = sc.factor_graph().unwrap();
            let deg = graph.mean_degree();
            assert!(deg > 6.0, "mean degree {deg} too sparse for seed {seed}");
            // No isolated vehicles in the benchmark snapshot.
            let mut degree = vec![0usize; sc.num_vehicles()];
            for (i, j, _) in &sc.edges {
                degree[*i] += 1;
                degree[*j] += 1;
            }
            let isolated = degree.iter().filter(|&&d| d == 0).count();
            assert_eq!(isolated, 0, "seed {seed} has isolated vehicles");
        }
    }

    #[test]
    fn graph_rules() {
        let a = VehicleState::new(0.0, 0.0, 0.0);
        let b = VehicleState::new(20.0, 0.0, 0.0);
        let c = VehicleState::new(55.0, 0.0, 0.0);
        // Within radius, full FOV.
        assert_eq!(build_graph(&[a, b], 30.0, PI), vec![(0, 1)]);
        // 35 m apart exceeds r = 30.
        assert!(build_graph(&[a, VehicleState::new(35.0, 0.0, 0.0)], 30.0, PI).is_empty());
        // Narrow FOV: target dead ahead falls in the broadside gap.
        assert!(build_graph(&[a, b], 30.0, PI / 2.0).is_empty());
        // fov = pi equals the pure radius graph.
        let trio = [a, b, c];
        let radius_graph: Vec<(usize, usize)> = vec![(0, 1), (1, 2)];
        assert_eq!(build_graph(&trio, 35.0, PI), radius_graph);
    }

    #[test]
    fn anchors_are_spread_out() {
        let params = ScenarioParams::default();
        let sc = generate_scenario(&params, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(sc.anchor_ids.len(), 6);
        // Spread anchors should be pairwise farther apart than a queue.
        let ids: Vec<usize> = sc.anchor_ids.iter().copied().collect();
        let mut min_pair = f64::INFINITY;
        for a in 0..ids.len() {
            for b in (a + 1)..ids.len() {
                min_pair = min_pair.min(sc.truth[ids[a]].distance_to(&sc.truth[ids[b]]));
            }
        }
        assert!(min_pair > 10.0, "closest anchor pair {min_pair} m");
    }

    #[test]
    fn measurement_noise_matches_configured_variance() {
        // Re-generating with the same seed but a tiny R leaves the same
        // truth, so the stored measurements must equal the noiseless
        // bearings in the R -> 0 limit.
        let params = ScenarioParams {
            meas_var: 1e-18,
            ..Default::default()
        };
        let sc = generate_scenario(&params, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        for (i, j, pair) in &sc.edges {
            let z = crate::geometry::measure_pair(&sc.truth[*i], &sc.truth[*j]).unwrap();
            assert!((pair.z - z).abs().max() < 1e-6);
        }
    }

    #[test]
    fn save_load_roundtrip() {
        let params = ScenarioParams {
            n_vehicles: 14,
            n_anchors: 3,
            ..Default::default()
        };
        let sc = generate_scenario(&params, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let dir = std::env::temp_dir().join(format!("plbp-scenario-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.json");
        save_scenario(&sc, &path).unwrap();
        let loaded = load_scenario(&path).unwrap();
        assert_eq!(sc.params, loaded.params);
        assert_eq!(sc.truth, loaded.truth);
        assert_eq!(sc.anchor_ids, loaded.anchor_ids);
        for (a, b) in sc.priors.iter().zip(&loaded.priors) {
            assert_eq!(a.mean(), b.mean());
            assert_eq!(a.cov(), b.cov());
        }
        assert_eq!(sc.edges.len(), loaded.edges.len());
        for ((i1, j1, p1), (i2, j2, p2)) in sc.edges.iter().zip(&loaded.edges) {
            assert_eq!((i1, j1), (i2, j2));
            assert_eq!(p1.z, p2.z, "edge ({i1}, {j1}) measurement");
            assert_eq!(p1.noise_cov, p2.noise_cov);
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn malformed_files_are_rejected() {
        let dir = std::env::temp_dir().join(format!("plbp-badfile-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();

        // Missing required field (no priors).
        let path = dir.join("missing.json");
        std::fs::write(
            &path,
            r#"{"params": {"r": 30.0, "fov": 3.14, "sigma_x": 5.0, "sigma_y": 5.0,
                "sigma_theta": 0.35, "R": 0.1, "n_vehicles": 1, "n_anchors": 0,
                "anchor_var": [0.01, 0.01, 0.01], "layout": "grid-streets"},
               "vehicles": [{"id": 0, "x": 0.0, "y": 0.0, "theta": 0.0}],
               "anchors": [], "edges": []}"#,
        )
        .unwrap();
        let err = load_scenario(&path).unwrap_err();
        assert!(err.to_string().contains("priors"), "{err}");

        // Edge violating the communication radius is reported by name.
        let path2 = dir.join("badedge.json");
        std::fs::write(
            &path2,
            r#"{"params": {"r": 30.0, "fov": 3.141592653589793, "sigma_x": 5.0, "sigma_y": 5.0,
                "sigma_theta": 0.35, "R": 0.1, "n_vehicles": 2, "n_anchors": 0,
                "anchor_var": [0.01, 0.01, 0.01], "layout": "grid-streets"},
               "vehicles": [{"id": 0, "x": 0.0, "y": 0.0, "theta": 0.0},
                            {"id": 1, "x": 99.0, "y": 0.0, "theta": 0.0}],
               "priors": [{"id": 0, "mean": [0.0, 0.0, 0.0],
                           "cov": [[1.0,0.0,0.0],[0.0,1.0,0.0],[0.0,0.0,0.1]]},
                          {"id": 1, "mean": [99.0, 0.0, 0.0],
                           "cov": [[1.0,0.0,0.0],[0.0,1.0,0.0],[0.0,0.0,0.1]]}],
               "anchors": [], "edges": [{"i": 0, "j": 1, "z": [0.0, 3.14],
                           "R": [[0.1, 0.0], [0.0, 0.1]]}]}"#,
        )
        .unwrap();
        let err2 = load_scenario(&path2).unwrap_err();
        assert!(
            err2.to_string().contains("(0, 1)") && err2.to_string().contains("radius"),
            "{err2}"
        );
        std::fs::remove_dir_all(&dir).ok();
    }
}
