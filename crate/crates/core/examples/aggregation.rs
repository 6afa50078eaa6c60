//! Weighted majority with log-odds weights against plain majority: exact
//! error rates by enumeration, and the online TE plug-in on a stream.
//!
//! cargo run --example aggregation

use crowd_te::aggregation::{exact_error_rate, weights_from_theta, OnlinePlugIn, WeightVector};
use crowd_te::model::{ModelParams, ReliabilityVector};
use crowd_te::sim::{sample_task, RngSeed};

fn main() -> crowd_te::Result<()> {
    let theta = ReliabilityVector::new(vec![0.95, 0.3, 0.3, 0.2, -0.6])?;
    let params = ModelParams::new(theta.clone(), 0.6)?;
    let oracle = exact_error_rate(&params, &weights_from_theta(&theta))?;
    let majority = exact_error_rate(&params, &WeightVector::uniform(theta.n()))?;
    println!("exact error: oracle weights {oracle:.4}, majority {majority:.4}");

    let mut plug_in = OnlinePlugIn::new(theta.n())?;
    let mut sample_rng = RngSeed(11).rng();
    let mut tie_rng = RngSeed(11).stream(1);
    let mut wrong = 0;
    for t in 1..=20_000u32 {
        let task = sample_task(&params, &mut sample_rng);
        let p = plug_in.predict_then_update(&task.answers, &mut tie_rng)?;
        wrong += u32::from(p.value != task.ground_truth);
        if t % 5_000 == 0 {
            println!(
                "after {t:>5} tasks: online plug-in error {:.4}",
                f64::from(wrong) / f64::from(t)
            );
        }
    }
    Ok(())
}
