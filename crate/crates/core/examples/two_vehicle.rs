//! Minimal library walkthrough: an anchor and one uncertain vehicle share
//! a bearing pair; iterating linearization and message passing pulls the
//! vehicle estimate onto the truth.

use nalgebra::{DMatrix, DVector, Matrix2};
use plbp_core::bp::{Edge, FactorGraph};
use plbp_core::gaussian::Gaussian;
use plbp_core::geometry::{simulate_measurement, VehicleState};
use plbp_core::plbp::{run_plbp, RunConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    // Ground truth: an anchor at the origin, a vehicle 10 m away.
    let anchor = VehicleState::new(0.0, 0.0, 0.2);
    let vehicle = VehicleState::new(9.0, 5.0, -0.4);

    // One noisy bearing pair between them (0.01 rad^2 per component).
    let noise = Matrix2::identity() * 0.01;
    let pair = simulate_measurement(&anchor, &vehicle, &noise, &mut rng).unwrap();

    // The anchor knows its pose almost exactly, the vehicle only roughly.
    let anchor_prior = Gaussian::new(
        DVector::from_vec(vec![0.0, 0.0, 0.2]),
        DMatrix::from_diagonal(&DVector::from_vec(vec![0.01, 0.01, 0.01])),
    )
    .unwrap();
    let vehicle_prior = Gaussian::new(
        DVector::from_vec(vec![10.5, 3.2, -0.1]),
        DMatrix::from_diagonal(&DVector::from_vec(vec![9.0, 9.0, 0.09])),
    )
    .unwrap();

    let graph = FactorGraph::new(
        vec![anchor_prior, vehicle_prior],
        vec![Edge::from_pair(0, 1, &pair).unwrap()],
    )
    .unwrap();

    let result = run_plbp(&graph, &RunConfig::default()).unwrap();
    let est = result.beliefs[1].mean();
    let (ex, ey): (f64, f64) = (est[0] - vehicle.x, est[1] - vehicle.y);
    println!(
        "truth  ({:.2}, {:.2}, {:.2})",
        vehicle.x, vehicle.y, vehicle.theta
    );
    println!("prior  (10.50, 3.20, -0.10)");
    println!("belief ({:.2}, {:.2}, {:.2})", est[0], est[1], est[2]);
    println!("position error {:.2} m", ex.hypot(ey));
}
