use std::path::PathBuf;

use anyhow::Result;
use edgeward_core::dataset::{assign_zones, corner_specs, generate_synthetic, synthetic_schema, write_csv};
use serde::Serialize;

use crate::config::write_resolved;
use crate::io::Artifacts;

/// Gaussian blobs centred on distinct hypercube corners.
#[derive(Debug, clap::Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Args {
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, default_value_t = 6)]
    pub dim: usize,
    #[arg(long, default_value_t = 500)]
    pub per_class: usize,
    #[arg(long, default_value_t = 0.05)]
    pub stddev: f64,
    /// Tag rows with `zone-1..zone-N` for zone partitioning (0 = untagged).
    #[arg(long, default_value_t = 4)]
    pub zones: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    let mut data = generate_synthetic(
        &corner_specs(args.classes, args.dim, args.per_class, args.stddev)?,
        args.seed,
    )?;
    if args.zones > 0 {
        data = assign_zones(data, args.zones, args.seed)?;
    }
    let schema = synthetic_schema(&data)?;
    let out = Artifacts::create(&args.out)?;
    out.write_with("synthetic.csv", |b| write_csv(&data, &schema, b))?;
    out.write("schema.json", serde_json::to_string_pretty(&schema)?.as_bytes())?;
    println!(
        "rows: {}  dim: {}  classes: {}",
        data.len(),
        data.dim(),
        data.num_classes
    );
    write_resolved(out.dir(), "synth", &args)
}
