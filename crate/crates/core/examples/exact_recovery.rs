//! TE on the exact population covariance recovers the reliabilities, then on
//! sampled answers it approaches them as the number of tasks grows.
//!
//! cargo run --example exact_recovery

use crowd_te::model::{a_functional, b_functional, ModelParams, ReliabilityVector};
use crowd_te::sim::{sample_task, RngSeed};
use crowd_te::te::{estimate, inject_population};
use crowd_te::TeState;

fn main() -> crowd_te::Result<()> {
    let theta = ReliabilityVector::new(vec![0.8, -0.5, 0.6, 0.1, 0.0, 0.7])?;
    println!(
        "theta = {:?}  A = {:.3}  B = {:.3}",
        theta.values(),
        a_functional(&theta)?,
        b_functional(&theta)
    );

    let exact = estimate(&inject_population(&theta))?;
    println!(
        "population covariance: k* = {}, error {:.1e}",
        exact.k_star,
        exact.theta_hat.sup_distance(&theta)?
    );

    let params = ModelParams::new(theta.clone(), 0.5)?;
    let mut rng = RngSeed(42).rng();
    let mut state = TeState::new(theta.n());
    for checkpoint in [100, 1_000, 10_000, 100_000] {
        while state.t() < checkpoint {
            state.update(&sample_task(&params, &mut rng).answers)?;
        }
        let est = state.estimate()?;
        println!(
            "t = {checkpoint:>6}: error {:.4}  theta_hat = {:.3?}",
            est.theta_hat.sup_distance(&theta)?,
            est.theta_hat.values()
        );
    }
    Ok(())
}
