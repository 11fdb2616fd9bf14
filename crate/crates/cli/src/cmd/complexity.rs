use std::path::PathBuf;

use anyhow::Result;
use edgeward_core::complexity::{cost_table, k_bound, verify_counts, write_cost_table_csv};
use edgeward_core::TrainHistory;
use serde::Serialize;

use crate::io::{read_input, Artifacts, Usage};

/// Training cost with and without the reducer, one row per hidden width.
#[derive(Debug, clap::Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Args {
    /// Training samples N.
    #[arg(long, default_value_t = 1_000_000)]
    pub n: u64,
    /// Input features d.
    #[arg(long, default_value_t = 40)]
    pub d: u64,
    /// Retained components k.
    #[arg(long, default_value_t = 9)]
    pub k: u64,
    /// Classes c.
    #[arg(long, default_value_t = 11)]
    pub c: u64,
    #[arg(long, default_value_t = 50)]
    pub epochs: u64,
    /// Inclusive hidden-width range `lo:hi`.
    #[arg(long, default_value = "6:46")]
    pub h_range: String,
    /// Write the table here (with a hash file) instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Check a history recorded with `--count-macs` against the cost model.
    #[arg(long)]
    pub verify: Option<PathBuf>,
}

fn parse_range(text: &str) -> Result<(u64, u64)> {
    let bad = || Usage(format!("--h-range must be lo:hi with 1 <= lo <= hi, got {text:?}"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
    if lo == 0 || lo > hi {
        return Err(bad().into());
    }
    Ok((lo, hi))
}

pub fn run(args: Args) -> Result<()> {
    if let Some(path) = &args.verify {
        let history: TrainHistory = serde_json::from_slice(&read_input(path, "history file")?)?;
        let report = verify_counts(&history);
        print!("{report}");
        return match report.passed() {
            Some(true) => Ok(()),
            Some(false) => anyhow::bail!("instrumented counts disagree with the cost model"),
            None => Err(Usage("history has no MAC counts; rerun with --count-macs".into()).into()),
        };
    }
    let (lo, hi) = parse_range(&args.h_range)?;
    let rows = cost_table(args.n, args.d, args.k, args.c, args.epochs, lo..=hi)?;
    let mut csv = Vec::new();
    write_cost_table_csv(&rows, &mut csv)?;
    match &args.out {
        Some(path) => {
            let dir = path
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .unwrap_or(std::path::Path::new("."));
            let name = path
                .file_name()
                .and_then(|n| n.to_str())
                .ok_or_else(|| Usage(format!("bad output path {}", path.display())))?;
            Artifacts::create(dir)?.write(name, &csv)?;
            let min = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
            println!("rows: {}  min ratio: {min:.4}", rows.len());
        }
        None => print!("{}", String::from_utf8(csv)?),
    }
    let bound = k_bound(args.n, args.d, args.epochs, lo);
    eprintln!("reducer pays off at h={lo} while k < {bound:.3}");
    Ok(())
}
