use std::path::PathBuf;

use anyhow::Result;
use clap::ValueEnum;
use edgeward_core::complexity::{verify_counts, VerificationReport};
use edgeward_core::mlp::AdamConfig;
use edgeward_core::pca::{fit_pca, DEFAULT_VARIANCE_TARGET};
use edgeward_core::training::{train_centralized, Optimizer, TrainConfig, TrainHistory};
use serde::Serialize;

use crate::config::write_resolved;
use crate::io::{load_lke, Artifacts};

#[derive(Debug, clap::Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct PcaFitArgs {
    /// Encoded training set (LKE1).
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Keep the fewest components whose eigenvalues reach this share.
    #[arg(long, default_value_t = DEFAULT_VARIANCE_TARGET)]
    pub variance_target: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run_pca_fit(args: PcaFitArgs) -> Result<()> {
    let train = load_lke(&args.train)?;
    let mut pca = fit_pca(&train, args.variance_target)?;
    pca.seed = args.seed;
    let out = Artifacts::create(&args.out)?;
    out.write("pca.json", pca.to_json()?.as_bytes())?;
    println!("d: {}  k: {}  captured: {:.6}", pca.dim(), pca.k, pca.captured_ratio);
    write_resolved(out.dir(), "pca-fit", &args)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Debug, clap::Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrainArgs {
    /// Encoded training set (LKE1).
    #[arg(long)]
    pub train: PathBuf,
    /// Encoded test set (LKE1), evaluated every `eval-every` epochs.
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 22)]
    pub hidden: usize,
    #[arg(long, value_enum, default_value_t = OptimizerKind::Adam)]
    pub optimizer: OptimizerKind,
    /// Step size; defaults to 0.001 for Adam and 0.01 for SGD.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, default_value_t = 0.9)]
    pub beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    pub beta2: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,
    #[arg(long, default_value_t = DEFAULT_VARIANCE_TARGET)]
    pub variance_target: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Drop the output-layer bias.
    #[arg(long)]
    pub no_output_bias: bool,
    #[arg(long, default_value_t = 1)]
    pub eval_every: usize,
    /// Count multiply-accumulates per phase and check them against the cost model.
    #[arg(long)]
    pub count_macs: bool,
    /// Write 0 in the history's millis column so reruns are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
}

impl TrainArgs {
    fn config(&self) -> TrainConfig {
        let optimizer = match self.optimizer {
            OptimizerKind::Adam => Optimizer::Adam(AdamConfig {
                lr: self.lr.unwrap_or(AdamConfig::default().lr),
                beta1: self.beta1,
                beta2: self.beta2,
                eps: self.eps,
            }),
            OptimizerKind::Sgd => Optimizer::Sgd {
                lr: self.lr.unwrap_or(0.01),
            },
        };
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            optimizer,
            hidden: self.hidden,
            variance_target: self.variance_target,
            seed: self.seed,
            output_bias: !self.no_output_bias,
            eval_every: self.eval_every,
            count_macs: self.count_macs,
            record_timing: !self.no_timing,
        }
    }
}

/// History JSON/CSV plus the MAC verification when counting was on.
pub fn write_history(out: &Artifacts, history: &TrainHistory) -> Result<()> {
    out.write("history.json", history.to_json()?.as_bytes())?;
    out.write_with("history.csv", |b| history.write_csv(b))?;
    let report = verify_counts(history);
    if let VerificationReport::Checked { passed, checks } = &report {
        let verdict = if *passed { "passed" } else { "FAILED" };
        println!(
            "MAC counts vs cost model: {verdict} ({} checks, see macs.txt)",
            checks.len()
        );
        out.write("macs.txt", report.to_string().as_bytes())?;
    }
    Ok(())
}

pub fn run_train(args: TrainArgs) -> Result<()> {
    let cfg = args.config();
    let train = load_lke(&args.train)?;
    let test = load_lke(&args.test)?;
    let (pca, model, history) = train_centralized(&train, &test, &cfg)?;
    let out = Artifacts::create(&args.out)?;
    let model_hash = out.write("model.json", model.to_json()?.as_bytes())?;
    out.write("pca.json", pca.to_json()?.as_bytes())?;
    write_history(&out, &history)?;
    if let Some(eval) = history.last().and_then(|r| r.evals.first()) {
        println!(
            "k: {}  test loss: {:.6}  test accuracy: {:.6}",
            pca.k, eval.loss, eval.accuracy
        );
    }
    println!("model sha256: {model_hash}");
    write_resolved(out.dir(), "train", &args)
}
