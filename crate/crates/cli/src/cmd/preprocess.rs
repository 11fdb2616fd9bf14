use std::path::PathBuf;

use anyhow::Result;
use edgeward_core::dataset::{apply_encoding, fit_encoding, parse_csv, split_indices, write_lke, EncodingParams};
use serde::Serialize;

use crate::config::write_resolved;
use crate::io::{load_schema, read_input, Artifacts};

#[derive(Debug, clap::Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Args {
    /// Headed CSV of flow records.
    #[arg(long)]
    pub data: PathBuf,
    /// JSON schema naming feature, label and zone columns.
    #[arg(long)]
    pub schema: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Stratified test share; 0 writes a single `data.lke`.
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Apply these encoding parameters instead of fitting new ones (no split).
    #[arg(long)]
    pub encoding: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<()> {
    let schema = load_schema(&args.schema)?;
    let csv = read_input(&args.data, "data file")?;
    let raw = parse_csv(csv.as_slice(), &schema)?;
    let out = Artifacts::create(&args.out)?;
    println!("rows: {}", raw.len());

    if let Some(path) = &args.encoding {
        let text = String::from_utf8_lossy(&read_input(path, "encoding file")?).into_owned();
        let params = EncodingParams::from_json(&text)?;
        let data = apply_encoding(&raw, &params)?;
        out.write_with("data.lke", |b| write_lke(&data, b))?;
    } else if args.test_fraction == 0.0 {
        let mut params = fit_encoding(&raw)?;
        params.seed = args.seed;
        let data = apply_encoding(&raw, &params)?;
        out.write("encoding.json", params.to_json()?.as_bytes())?;
        out.write_with("data.lke", |b| write_lke(&data, b))?;
    } else {
        let (train_idx, test_idx) = split_indices(&raw.labels, schema.num_classes(), args.test_fraction, args.seed)?;
        let train_raw = raw.select(&train_idx);
        let mut params = fit_encoding(&train_raw)?;
        params.seed = args.seed;
        let train = apply_encoding(&train_raw, &params)?;
        let test = apply_encoding(&raw.select(&test_idx), &params)?;
        out.write("encoding.json", params.to_json()?.as_bytes())?;
        out.write_with("train.lke", |b| write_lke(&train, b))?;
        out.write_with("test.lke", |b| write_lke(&test, b))?;
        println!("train: {}  test: {}", train.len(), test.len());
    }
    write_resolved(out.dir(), "preprocess", &args)
}
