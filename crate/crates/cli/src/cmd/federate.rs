use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Result;
use edgeward_core::dataset::{
    apply_encoding, fit_encoding, parse_csv, split_indices, zone_groups, ZonePredicate, ZoneRule,
};
use edgeward_core::pca::DEFAULT_VARIANCE_TARGET;
use edgeward_core::seed::{self, Stream};
use edgeward_core::training::{train_federated, train_federated_with_pca, FederatedConfig, TrainHistory};
use edgeward_core::{ClientShard, Dataset};
use serde::Serialize;

use crate::cmd::train::write_history;
use crate::config::write_resolved;
use crate::io::{load_lke, load_pca, load_schema, read_input, Artifacts, Usage};

/// Shards come either from a raw CSV split by its zone column
/// (`--data/--schema[/--zones]`) or from encoded matrices dealt round-robin
/// to `--clients` clients (`--train/--test`).
#[derive(Debug, clap::Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Args {
    /// Raw CSV with a zone column.
    #[arg(long, requires = "schema", conflicts_with_all = ["train", "test"])]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Zone rules `id:v1|v2,...,id:*`, last one a catch-all. Default: one
    /// client per distinct zone value, in sorted order.
    #[arg(long)]
    pub zones: Option<String>,
    /// Per-client stratified test share (CSV input only).
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    /// Encoded training set (LKE1).
    #[arg(long, requires = "test")]
    pub train: Option<PathBuf>,
    /// Encoded test set (LKE1).
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Client count for round-robin sharding of LKE1 input.
    #[arg(long, default_value_t = 4)]
    pub clients: usize,
    /// Use this fitted reducer instead of fitting one on the union of shards.
    #[arg(long)]
    pub pca: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Communication rounds.
    #[arg(long, default_value_t = 1000)]
    pub rounds: usize,
    #[arg(long, default_value_t = 1)]
    pub local_epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 22)]
    pub hidden: usize,
    #[arg(long, default_value_t = DEFAULT_VARIANCE_TARGET)]
    pub variance_target: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub no_output_bias: bool,
    #[arg(long, default_value_t = 1)]
    pub eval_every: usize,
    #[arg(long)]
    pub count_macs: bool,
    #[arg(long)]
    pub no_timing: bool,
    /// Run clients one after another instead of on the thread pool.
    #[arg(long)]
    pub sequential: bool,
}

impl Args {
    fn config(&self) -> FederatedConfig {
        FederatedConfig {
            rounds: self.rounds,
            local_epochs: self.local_epochs,
            lr: self.lr,
            batch_size: self.batch_size,
            hidden: self.hidden,
            variance_target: self.variance_target,
            seed: self.seed,
            output_bias: !self.no_output_bias,
            eval_every: self.eval_every,
            count_macs: self.count_macs,
            record_timing: !self.no_timing,
            parallel: !self.sequential,
        }
    }
}

fn default_rules(zones: &[String]) -> Vec<ZoneRule> {
    let distinct: BTreeSet<&String> = zones.iter().collect();
    let n = distinct.len();
    distinct
        .into_iter()
        .enumerate()
        .map(|(i, z)| ZoneRule {
            client_id: i,
            predicate: if i + 1 == n {
                ZonePredicate::Any
            } else {
                ZonePredicate::OneOf(vec![z.clone()])
            },
        })
        .collect()
}

/// Zone shards of a raw CSV, each split into train/test, all encoded with
/// parameters fitted on the union of the training parts.
fn shards_from_csv(args: &Args, out: &Artifacts) -> Result<(Vec<ClientShard>, Vec<Dataset>)> {
    let schema_path = args
        .schema
        .as_ref()
        .ok_or_else(|| Usage("--data needs --schema".into()))?;
    let data_path = args.data.as_ref().expect("caller checked --data");
    let schema = load_schema(schema_path)?;
    let raw = parse_csv(read_input(data_path, "data file")?.as_slice(), &schema)?;
    let zones = raw
        .zones
        .as_ref()
        .ok_or_else(|| Usage("the schema names no zone column to partition by".into()))?;
    let rules = match &args.zones {
        Some(text) => ZoneRule::parse_list(text)?,
        None => default_rules(zones),
    };
    let groups = zone_groups(zones, &rules)?;

    let mut parts = Vec::with_capacity(groups.len());
    let mut union = Vec::new();
    for (id, rows) in groups {
        let labels: Vec<usize> = rows.iter().map(|&r| raw.labels[r]).collect();
        let split_seed = seed::derive(args.seed, Stream::Split, &[id as u64]);
        let (tr, te) = split_indices(&labels, schema.num_classes(), args.test_fraction, split_seed)?;
        if te.is_empty() {
            anyhow::bail!("client {id} has too few rows for a test split");
        }
        let tr: Vec<usize> = tr.iter().map(|&i| rows[i]).collect();
        let te: Vec<usize> = te.iter().map(|&i| rows[i]).collect();
        union.extend_from_slice(&tr);
        parts.push((id, tr, te));
    }
    union.sort_unstable();
    let mut params = fit_encoding(&raw.select(&union))?;
    params.seed = args.seed;
    out.write("encoding.json", params.to_json()?.as_bytes())?;

    let mut shards = Vec::with_capacity(parts.len());
    let mut tests = Vec::with_capacity(parts.len());
    for (id, tr, te) in parts {
        shards.push(ClientShard::new(id, apply_encoding(&raw.select(&tr), &params)?));
        tests.push(apply_encoding(&raw.select(&te), &params)?);
    }
    Ok((shards, tests))
}

fn round_robin(data: &Dataset, k: usize) -> Result<Vec<Dataset>> {
    if k == 0 || k > data.len() {
        return Err(Usage(format!("--clients must be in 1..={}, got {k}", data.len())).into());
    }
    (0..k)
        .map(|c| {
            let idx: Vec<usize> = (c..data.len()).step_by(k).collect();
            Ok(data.select(&idx)?)
        })
        .collect()
}

fn shards_from_lke(args: &Args) -> Result<(Vec<ClientShard>, Vec<Dataset>)> {
    let (Some(train), Some(test)) = (&args.train, &args.test) else {
        return Err(Usage("give either --data/--schema or --train/--test".into()).into());
    };
    let train = load_lke(train)?;
    let test = load_lke(test)?;
    let shards = round_robin(&train, args.clients)?
        .into_iter()
        .enumerate()
        .map(|(i, d)| ClientShard::new(i, d))
        .collect();
    Ok((shards, round_robin(&test, args.clients)?))
}

/// `round,client_<id>...` test accuracy of the global model, one row per
/// evaluated round.
fn accuracy_table(history: &TrainHistory) -> String {
    let mut s = String::from("round");
    let ids: Vec<usize> = history
        .records
        .iter()
        .find(|r| !r.evals.is_empty())
        .map(|r| r.evals.iter().map(|e| e.client).collect())
        .unwrap_or_default();
    for id in &ids {
        let _ = write!(s, ",client_{id}");
    }
    s.push('\n');
    for r in history.records.iter().filter(|r| !r.evals.is_empty()) {
        let _ = write!(s, "{}", r.round);
        for e in &r.evals {
            let _ = write!(s, ",{}", e.accuracy);
        }
        s.push('\n');
    }
    s
}

pub fn run(args: Args) -> Result<()> {
    let cfg = args.config();
    cfg.validate()?;
    let out = Artifacts::create(&args.out)?;
    let (shards, tests) = if args.data.is_some() {
        shards_from_csv(&args, &out)?
    } else {
        shards_from_lke(&args)?
    };
    for s in &shards {
        println!("client {}: {} train rows", s.client_id, s.n());
    }
    let (model, history) = match &args.pca {
        Some(path) => {
            let pca = load_pca(path)?;
            train_federated_with_pca(&shards, &tests, &cfg, &pca)?
        }
        None => {
            let (pca, model, history) = train_federated(&shards, &tests, &cfg)?;
            out.write("pca.json", pca.to_json()?.as_bytes())?;
            (model, history)
        }
    };
    let model_hash = out.write("model.json", model.to_json()?.as_bytes())?;
    write_history(&out, &history)?;
    out.write("accuracy.csv", accuracy_table(&history).as_bytes())?;
    if let Some(last) = history.last() {
        for e in &last.evals {
            println!(
                "client {}: test loss {:.6}  test accuracy {:.6}",
                e.client, e.loss, e.accuracy
            );
        }
    }
    println!("model sha256: {model_hash}");
    write_resolved(out.dir(), "federate", &args)
}
