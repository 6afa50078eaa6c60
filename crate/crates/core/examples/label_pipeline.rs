//! The label file pipeline end to end: simulate a run, write it as
//! `task,worker,label` and `task,label` files, then estimate and predict from
//! the files alone.
//!
//! cargo run --example label_pipeline

use std::fs::File;

use crowd_te::bench::{cmd_estimate, cmd_predict, load_dataset};
use crowd_te::data::{summarize, write_run, PipelineConfig};
use crowd_te::sim::{generate_run, InstanceSpec, RngSeed};

fn main() -> crowd_te::Result<()> {
    let dir = std::env::temp_dir().join("crowd-te-label-pipeline");
    std::fs::create_dir_all(&dir).map_err(|e| crowd_te::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let labels = dir.join("labels.csv");
    let gold = dir.join("gold.csv");

    let run = generate_run(&InstanceSpec::half_informative(0.9), RngSeed(5))?;
    let create = |p: &std::path::Path| {
        File::create(p).map_err(|e| crowd_te::Error::Io {
            path: p.to_path_buf(),
            source: e,
        })
    };
    write_run(&run, create(&labels)?, Some(create(&gold)?))?;

    let config = PipelineConfig::default();
    let stats = summarize(&load_dataset(&labels, Some(&gold), &config)?.dataset);
    println!(
        "{} tasks, {} workers, {} labels, density {:.3}",
        stats.num_tasks, stats.num_workers, stats.num_labels, stats.density
    );

    let estimates = dir.join("estimates.csv");
    let est = cmd_estimate(&labels, &config, create(&estimates)?)?;
    println!(
        "wrote {} reliabilities to {}",
        est.workers.len(),
        estimates.display()
    );

    let predictions = dir.join("predictions.csv");
    let out = cmd_predict(
        &labels,
        Some(&gold),
        &config,
        RngSeed(5),
        create(&predictions)?,
    )?;
    println!(
        "TE error {:.4} ({} ties), majority error {:.4} ({} ties) on {} gold tasks",
        out.te_error.unwrap_or(f64::NAN),
        out.te_ties,
        out.majority_error.unwrap_or(f64::NAN),
        out.majority_ties,
        out.gold_tasks
    );
    Ok(())
}
