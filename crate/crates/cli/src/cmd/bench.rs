use std::hint::black_box;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use anyhow::Result;
use edgeward_core::mlp::predict;
use edgeward_core::{Matrix, MlpModel, PcaModel};
use serde::Serialize;

use crate::io::{load_lke, load_model, load_pca, Artifacts, Usage};

const BENCH_VERSION: u32 = 1;

/// Repeated projection + forward pass over a sample set for a fixed time.
#[derive(Debug, clap::Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Args {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub pca: PathBuf,
    /// Encoded samples (LKE1), cycled through in batches.
    #[arg(long)]
    pub samples: PathBuf,
    /// Seconds per run.
    #[arg(long, default_value_t = 2.0)]
    pub duration: f64,
    /// Rows per predict call.
    #[arg(long, default_value_t = 256)]
    pub batch: usize,
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    /// Also write `bench.json` here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct BenchReport {
    version: u32,
    seed: u64,
    d: usize,
    k: usize,
    h: usize,
    c: usize,
    batch: usize,
    /// Projection (`k·d`) plus forward pass (`kh + hc`).
    macs_per_sample: u64,
    forward_macs_per_sample: u64,
    samples_per_second: Vec<f64>,
}

fn one_run(model: &MlpModel, pca: &PcaModel, batches: &[Matrix], duration: Duration) -> Result<f64> {
    let start = Instant::now();
    let mut done = 0usize;
    let mut i = 0;
    loop {
        let b = &batches[i % batches.len()];
        black_box(predict(model, pca, black_box(b))?);
        done += b.rows();
        i += 1;
        let elapsed = start.elapsed();
        if elapsed >= duration {
            return Ok(done as f64 / elapsed.as_secs_f64());
        }
    }
}

pub fn run(args: Args) -> Result<()> {
    if !(args.duration > 0.0 && args.duration.is_finite()) {
        return Err(Usage(format!(
            "--duration must be a positive number of seconds, got {}",
            args.duration
        ))
        .into());
    }
    if args.batch == 0 || args.runs == 0 {
        return Err(Usage("--batch and --runs must be >= 1".into()).into());
    }
    let model = load_model(&args.model)?;
    let pca = load_pca(&args.pca)?;
    let samples = load_lke(&args.samples)?;
    if samples.is_empty() {
        return Err(Usage("sample file has no rows".into()).into());
    }
    let idx: Vec<usize> = (0..samples.len()).collect();
    let batches: Vec<Matrix> = idx
        .chunks(args.batch)
        .map(|c| samples.features.select_rows(c))
        .collect();
    let duration = Duration::from_secs_f64(args.duration);

    let forward = (model.k * model.h + model.h * model.c) as u64;
    let mut rates = Vec::with_capacity(args.runs);
    for r in 1..=args.runs {
        let rate = one_run(&model, &pca, &batches, duration)?;
        println!("run {r}: {rate:.0} samples/s");
        rates.push(rate);
    }
    let report = BenchReport {
        version: BENCH_VERSION,
        seed: model.seed,
        d: pca.dim(),
        k: model.k,
        h: model.h,
        c: model.c,
        batch: args.batch,
        macs_per_sample: (pca.k * pca.dim()) as u64 + forward,
        forward_macs_per_sample: forward,
        samples_per_second: rates,
    };
    println!(
        "MACs/sample: {} (forward {})",
        report.macs_per_sample, report.forward_macs_per_sample
    );
    if let Some(dir) = &args.out {
        Artifacts::create(dir)?.write("bench.json", serde_json::to_string_pretty(&report)?.as_bytes())?;
    }
    Ok(())
}
