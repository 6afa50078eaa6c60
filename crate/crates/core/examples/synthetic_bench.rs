//! Monte Carlo comparison of TE, majority vote and the oracle weighted vote on
//! the published synthetic instances.
//!
//! cargo run --release --example synthetic_bench [runs]

use crowd_te::bench::{cmd_bench, published_instances, BenchConfig, OutputFormat};
use crowd_te::sim::RngSeed;

fn main() -> crowd_te::Result<()> {
    let runs = std::env::args()
        .nth(1)
        .map_or(50, |s| s.parse().expect("runs must be an integer"));
    let configs: Vec<BenchConfig> = published_instances()
        .into_iter()
        .map(|(spec, _)| BenchConfig {
            runs,
            seed: RngSeed(7),
            ..BenchConfig::new(spec)
        })
        .collect();
    cmd_bench(&configs, OutputFormat::Markdown, std::io::stdout().lock())?;
    Ok(())
}
