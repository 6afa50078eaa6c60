//! Sharded ingestion, merging and snapshots of the TE sufficient statistics.
//!
//! cargo run --example streaming_state

use std::io::BufReader;

use crowd_te::sim::{generate_run, InstanceSpec, RngSeed};
use crowd_te::TeState;

fn main() -> crowd_te::Result<()> {
    let spec = InstanceSpec {
        n: 12,
        t: 5_000,
        ..InstanceSpec::half_informative(0.8)
    };
    let run = generate_run(&spec, RngSeed(1))?;
    let answers: Vec<&[i8]> = run.samples.iter().map(|s| s.answers.as_slice()).collect();

    let sequential = TeState::from_answers(spec.n, answers.iter().copied())?;

    // Four shards ingested independently, then merged in reverse order.
    let shards = answers
        .chunks(1_250)
        .map(|chunk| TeState::from_answers(spec.n, chunk.iter().copied()))
        .collect::<crowd_te::Result<Vec<_>>>()?;
    let mut merged = TeState::new(spec.n);
    for shard in shards.iter().rev() {
        merged.merge_from(shard)?;
    }
    println!("merged == sequential: {}", merged == sequential);

    let mut snapshot = Vec::new();
    sequential.save(&mut snapshot).expect("writing to memory");
    let restored = TeState::load(BufReader::new(snapshot.as_slice()))?;
    println!(
        "snapshot: {} bytes, restored == sequential: {}",
        snapshot.len(),
        restored == sequential
    );

    let est = restored.estimate()?;
    println!(
        "after {} tasks: error {:.4}",
        restored.t(),
        est.theta_hat.sup_distance(&run.theta)?
    );
    Ok(())
}
