//! Centralized and simulated federated training.
//!
//! Centralized: the server fits PCA on all training data, then trains the
//! network for `e` epochs of shuffled mini-batches (Adam by default).
//!
//! Federated: the server fits PCA once on the union of the clients' training
//! shards and broadcasts an initial model. Each round every client runs `E`
//! local epochs of mini-batch SGD from the round-start weights, and the server
//! replaces the global model with the sample-weighted average of the results.

use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complexity::{MacCounter, MacSnapshot};
use crate::dataset::{ClientShard, Dataset};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::mlp::{self, AdamConfig, AdamState, Gradients, MlpModel};
use crate::pca::{self, PcaModel, DEFAULT_VARIANCE_TARGET};
use crate::seed::{self, Stream};

pub const HISTORY_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Adam(AdamConfig),
    Sgd { lr: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    pub hidden: usize,
    pub variance_target: f64,
    pub seed: u64,
    pub output_bias: bool,
    /// Evaluate the test set every this many epochs (and after the last).
    pub eval_every: usize,
    pub count_macs: bool,
    /// When false, history timestamps are all zero.
    pub record_timing: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 256,
            optimizer: Optimizer::Adam(AdamConfig::default()),
            hidden: 22,
            variance_target: DEFAULT_VARIANCE_TARGET,
            seed: 0,
            output_bias: true,
            eval_every: 1,
            count_macs: false,
            record_timing: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.hidden == 0 || self.eval_every == 0 {
            return Err(Error::Config(
                "epochs, batch size, hidden width and eval stride must all be >= 1".into(),
            ));
        }
        match self.optimizer {
            Optimizer::Sgd { lr } if !(lr > 0.0 && lr.is_finite()) => {
                Err(Error::Config(format!("learning rate must be > 0, got {lr}")))
            }
            Optimizer::Adam(a) if !(a.lr > 0.0 && a.lr.is_finite()) => {
                Err(Error::Config(format!("learning rate must be > 0, got {}", a.lr)))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FederatedConfig {
    pub rounds: usize,
    pub local_epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub hidden: usize,
    pub variance_target: f64,
    pub seed: u64,
    pub output_bias: bool,
    pub eval_every: usize,
    pub count_macs: bool,
    pub record_timing: bool,
    /// Run the clients of a round on the rayon pool.
    pub parallel: bool,
}

impl Default for FederatedConfig {
    fn default() -> Self {
        Self {
            rounds: 1000,
            local_epochs: 1,
            lr: 0.01,
            batch_size: 64,
            hidden: 22,
            variance_target: DEFAULT_VARIANCE_TARGET,
            seed: 0,
            output_bias: true,
            eval_every: 1,
            count_macs: false,
            record_timing: true,
            parallel: true,
        }
    }
}

impl FederatedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0
            || self.local_epochs == 0
            || self.batch_size == 0
            || self.hidden == 0
            || self.eval_every == 0
        {
            return Err(Error::Config(
                "rounds, local epochs, batch size, hidden width and eval stride must all be >= 1".into(),
            ));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be > 0, got {}", self.lr)));
        }
        Ok(())
    }

    pub fn local(&self) -> LocalTraining {
        LocalTraining {
            epochs: self.local_epochs,
            lr: self.lr,
            batch_size: self.batch_size,
        }
    }
}

/// What a client does with the round-start weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalTraining {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingMode {
    Centralized,
    Federated,
}

/// Sizes needed to check a run against the cost model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunShape {
    pub n_train: usize,
    pub d: usize,
    pub k: usize,
    pub h: usize,
    pub c: usize,
    /// Passes over the training data per record (1, or `E` when federated).
    pub passes_per_record: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    /// Client id of the test set (0 for centralized runs).
    pub client: usize,
    pub loss: f64,
    pub accuracy: f64,
}

/// One epoch (centralized) or one round (federated).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub train_loss: f64,
    pub evals: Vec<EvalRecord>,
    pub macs: Option<MacSnapshot>,
    pub millis: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub version: u32,
    pub seed: u64,
    pub mode: TrainingMode,
    pub shape: RunShape,
    /// Covariance MACs of the PCA fit, when counting was on.
    pub pca_macs: Option<u64>,
    pub records: Vec<RoundRecord>,
}

impl TrainHistory {
    pub fn last(&self) -> Option<&RoundRecord> {
        self.records.last()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `round,client,loss,accuracy,macs,millis`; one `train` row per record
    /// followed by one row per evaluated test set.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["round", "client", "loss", "accuracy", "macs", "millis"])?;
        for r in &self.records {
            let macs = r.macs.map(|m| (m.forward + m.backward).to_string()).unwrap_or_default();
            let round = r.round.to_string();
            let millis = r.millis.to_string();
            w.write_record([&round, "train", &format!("{}", r.train_loss), "", &macs, &millis])?;
            for e in &r.evals {
                w.write_record([
                    &round,
                    &e.client.to_string(),
                    &format!("{}", e.loss),
                    &format!("{}", e.accuracy),
                    &macs,
                    &millis,
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Mean loss and accuracy of `model` on projected inputs.
pub fn evaluate(model: &MlpModel, projected: &Matrix, labels: &[usize]) -> Result<(f64, f64)> {
    let pass = mlp::forward(model, projected)?;
    let loss = mlp::loss(&pass.probs, labels)?;
    let correct = pass
        .probs
        .iter_rows()
        .zip(labels)
        .filter(|(row, &l)| mlp::argmax(row) == l)
        .count();
    Ok((loss, correct as f64 / labels.len() as f64))
}

/// Mini-batch row order for one pass. A single batch covering everything is
/// kept in natural order; otherwise rows are shuffled by `shuffle_seed`.
fn batches(n: usize, batch_size: usize, shuffle_seed: u64, epoch: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    if batch_size < n {
        order.shuffle(&mut seed::rng(shuffle_seed, Stream::Shuffle, &[epoch as u64]));
    }
    order.chunks(batch_size).map(<[usize]>::to_vec).collect()
}

/// One pass over `(x, labels)`; returns the sample-weighted mean batch loss.
fn run_epoch(
    model: &mut MlpModel,
    x: &Matrix,
    labels: &[usize],
    batch_order: &[Vec<usize>],
    counter: Option<&MacCounter>,
    mut update: impl FnMut(&mut MlpModel, &Gradients) -> Result<()>,
) -> Result<f64> {
    let mut total = 0.0;
    for idx in batch_order {
        let xb = x.select_rows(idx);
        let yb: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
        let pass = mlp::forward_counted(model, &xb, counter)?;
        total += mlp::loss(&pass.probs, &yb)? * idx.len() as f64;
        let grads = mlp::backward_from(model, &xb, &yb, &pass, counter)?;
        update(model, &grads)?;
    }
    let loss = total / labels.len() as f64;
    if !loss.is_finite() {
        return Err(Error::Degenerate("training loss became non-finite".into()));
    }
    Ok(loss)
}

fn fit_server_pca(features: &Matrix, target: f64, counter: Option<&MacCounter>) -> Result<PcaModel> {
    let pca = pca::fit_pca_counted(features, target, counter)?;
    if pca.total_variance() <= 0.0 {
        return Err(Error::Degenerate(
            "training data has zero variance; PCA is undefined".into(),
        ));
    }
    Ok(pca)
}

struct Clock {
    start: Instant,
    enabled: bool,
}

impl Clock {
    fn new(enabled: bool) -> Self {
        Self {
            start: Instant::now(),
            enabled,
        }
    }

    fn millis(&self) -> u64 {
        if self.enabled {
            self.start.elapsed().as_millis() as u64
        } else {
            0
        }
    }
}

pub fn train_centralized(
    train: &Dataset,
    test: &Dataset,
    cfg: &TrainConfig,
) -> Result<(PcaModel, MlpModel, TrainHistory)> {
    cfg.validate()?;
    if test.dim() != train.dim() {
        return Err(Error::Dimension {
            expected: train.dim(),
            actual: test.dim(),
        });
    }
    let counter = cfg.count_macs.then(MacCounter::new);
    let counter = counter.as_ref();
    let clock = Clock::new(cfg.record_timing);

    let mut pca = fit_server_pca(&train.features, cfg.variance_target, counter)?;
    pca.seed = cfg.seed;
    let pca_macs = counter.map(|c| c.snapshot().pca);
    let x = pca.project_matrix(&train.features)?;
    let x_test = pca.project_matrix(&test.features)?;

    let mut model = mlp::init_model(pca.k, cfg.hidden, train.num_classes, cfg.seed)?.with_output_bias(cfg.output_bias);
    let mut adam = match cfg.optimizer {
        Optimizer::Adam(a) => Some(AdamState::new(&model, a)),
        Optimizer::Sgd { .. } => None,
    };
    let shuffle_seed = seed::derive(cfg.seed, Stream::Shuffle, &[]);

    let mut records = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let before = counter.map(MacCounter::snapshot);
        let order = batches(train.len(), cfg.batch_size, shuffle_seed, epoch);
        let train_loss = run_epoch(&mut model, &x, &train.labels, &order, counter, |m, g| {
            match (&mut adam, cfg.optimizer) {
                (Some(state), _) => state.step(m, g),
                (None, Optimizer::Sgd { lr }) => m.apply_sgd(g, lr),
                (None, Optimizer::Adam(_)) => unreachable!("Adam state is created above"),
            }
        })?;
        let macs = counter.zip(before).map(|(c, b)| c.snapshot().since(&b));
        let evals = if epoch % cfg.eval_every == 0 || epoch == cfg.epochs {
            let (loss, accuracy) = evaluate(&model, &x_test, &test.labels)?;
            vec![EvalRecord {
                client: 0,
                loss,
                accuracy,
            }]
        } else {
            Vec::new()
        };
        records.push(RoundRecord {
            round: epoch,
            train_loss,
            evals,
            macs,
            millis: clock.millis(),
        });
    }
    let history = TrainHistory {
        version: HISTORY_VERSION,
        seed: cfg.seed,
        mode: TrainingMode::Centralized,
        shape: RunShape {
            n_train: train.len(),
            d: train.dim(),
            k: pca.k,
            h: cfg.hidden,
            c: train.num_classes,
            passes_per_record: 1,
        },
        pca_macs,
        records,
    };
    Ok((pca, model, history))
}

/// `ClientUpdate`: `E` epochs of mini-batch SGD on a projected shard,
/// starting from (and never modifying) `start`.
pub fn client_update(
    shard: &ClientShard,
    start: &MlpModel,
    local: &LocalTraining,
    round_seed: u64,
) -> Result<MlpModel> {
    client_update_counted(shard, start, local, round_seed, None).map(|(m, _)| m)
}

fn client_update_counted(
    shard: &ClientShard,
    start: &MlpModel,
    local: &LocalTraining,
    round_seed: u64,
    counter: Option<&MacCounter>,
) -> Result<(MlpModel, f64)> {
    if shard.data.is_empty() {
        return Err(Error::NoRows);
    }
    if local.epochs == 0 || local.batch_size == 0 {
        return Err(Error::Config("local epochs and batch size must be >= 1".into()));
    }
    if !(local.lr > 0.0 && local.lr.is_finite()) {
        return Err(Error::Config(format!("learning rate must be > 0, got {}", local.lr)));
    }
    if shard.data.dim() != start.k {
        return Err(Error::Dimension {
            expected: start.k,
            actual: shard.data.dim(),
        });
    }
    let mut model = start.clone();
    let mut loss = 0.0;
    for epoch in 1..=local.epochs {
        let order = batches(shard.n(), local.batch_size, round_seed, epoch);
        loss = run_epoch(
            &mut model,
            &shard.data.features,
            &shard.data.labels,
            &order,
            counter,
            |m, g| m.apply_sgd(g, local.lr),
        )?;
    }
    Ok((model, loss))
}

/// `n_k / Σ n`.
pub fn aggregation_weights(counts: &[usize]) -> Result<Vec<f64>> {
    if counts.is_empty() || counts.contains(&0) {
        return Err(Error::Config("sample counts must be non-empty and positive".into()));
    }
    let n: usize = counts.iter().sum();
    Ok(counts.iter().map(|&c| c as f64 / n as f64).collect())
}

/// Sample-weighted average of client models, `Σ (n_k/n)·w_k`.
///
/// Evaluated as `w_1 + Σ_{k≥2} (n_k/n)·(w_k − w_1)` in ascending client
/// order, which is the same convex combination but returns `w_1` bit-exactly
/// when every client agrees (or there is only one).
pub fn aggregate(models: &[MlpModel], counts: &[usize]) -> Result<MlpModel> {
    if models.len() != counts.len() {
        return Err(Error::Shape(format!(
            "{} models but {} sample counts",
            models.len(),
            counts.len()
        )));
    }
    let weights = aggregation_weights(counts)?;
    let first = &models[0];
    if let Some(bad) = models.iter().position(|m| !m.same_shape(first)) {
        return Err(Error::Shape(format!("client {bad} model shape differs")));
    }
    let mut out = first.clone();
    for (m, &w) in models.iter().zip(&weights).skip(1) {
        for ((o, p), p0) in out.tensors_mut().into_iter().zip(m.tensors()).zip(first.tensors()) {
            for ((o, &p), &p0) in o.iter_mut().zip(p).zip(p0) {
                *o += w * (p - p0);
            }
        }
    }
    Ok(out)
}

/// Seed of client `client_id` in round `round`.
pub fn client_round_seed(global_seed: u64, round: usize, client_id: usize) -> u64 {
    seed::derive(global_seed, Stream::Client, &[round as u64, client_id as u64])
}

/// Federated training with server-side PCA fitted on the union of the shards.
pub fn train_federated(
    shards: &[ClientShard],
    test_sets: &[Dataset],
    cfg: &FederatedConfig,
) -> Result<(PcaModel, MlpModel, TrainHistory)> {
    cfg.validate()?;
    if shards.is_empty() {
        return Err(Error::Config("need at least one client shard".into()));
    }
    let parts: Vec<&Dataset> = shards.iter().map(|s| &s.data).collect();
    let union = Dataset::concat(&parts)?;
    let counter = cfg.count_macs.then(MacCounter::new);
    let mut pca = fit_server_pca(&union.features, cfg.variance_target, counter.as_ref())?;
    pca.seed = cfg.seed;
    let pca_macs = counter.as_ref().map(|c| c.snapshot().pca);
    let (model, mut history) = train_federated_with_pca(shards, test_sets, cfg, &pca)?;
    history.pca_macs = pca_macs;
    Ok((pca, model, history))
}

/// Federated training with a reducer fitted elsewhere (e.g. on a server-side
/// archive). The returned history carries no PCA MAC count.
pub fn train_federated_with_pca(
    shards: &[ClientShard],
    test_sets: &[Dataset],
    cfg: &FederatedConfig,
    pca: &PcaModel,
) -> Result<(MlpModel, TrainHistory)> {
    cfg.validate()?;
    if shards.is_empty() {
        return Err(Error::Config("need at least one client shard".into()));
    }
    let num_classes = shards[0].data.num_classes;
    let projected: Vec<ClientShard> = shards
        .iter()
        .map(|s| Ok(ClientShard::new(s.client_id, pca::project(pca, &s.data)?)))
        .collect::<Result<_>>()?;
    let tests: Vec<(usize, Dataset)> = test_sets
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let id = if test_sets.len() == shards.len() {
                shards[i].client_id
            } else {
                i
            };
            Ok((id, pca::project(pca, t)?))
        })
        .collect::<Result<_>>()?;
    let counts: Vec<usize> = projected.iter().map(ClientShard::n).collect();
    let n_total: usize = counts.iter().sum();
    let weights = aggregation_weights(&counts)?;

    let counter = cfg.count_macs.then(MacCounter::new);
    let counter = counter.as_ref();
    let clock = Clock::new(cfg.record_timing);
    let local = cfg.local();
    let mut global = mlp::init_model(pca.k, cfg.hidden, num_classes, cfg.seed)?.with_output_bias(cfg.output_bias);

    let mut records = Vec::with_capacity(cfg.rounds);
    for round in 1..=cfg.rounds {
        let before = counter.map(MacCounter::snapshot);
        let start = &global;
        let run = |s: &ClientShard| {
            client_update_counted(
                s,
                start,
                &local,
                client_round_seed(cfg.seed, round, s.client_id),
                counter,
            )
        };
        let updates: Vec<(MlpModel, f64)> = if cfg.parallel {
            projected.par_iter().map(run).collect::<Result<_>>()?
        } else {
            projected.iter().map(run).collect::<Result<_>>()?
        };
        let train_loss = updates.iter().zip(&weights).map(|((_, l), w)| l * w).sum();
        let models: Vec<MlpModel> = updates.into_iter().map(|(m, _)| m).collect();
        global = aggregate(&models, &counts)?;

        let macs = counter.zip(before).map(|(c, b)| c.snapshot().since(&b));
        let evals = if round % cfg.eval_every == 0 || round == cfg.rounds {
            tests
                .iter()
                .map(|(id, t)| {
                    let (loss, accuracy) = evaluate(&global, &t.features, &t.labels)?;
                    Ok(EvalRecord {
                        client: *id,
                        loss,
                        accuracy,
                    })
                })
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        records.push(RoundRecord {
            round,
            train_loss,
            evals,
            macs,
            millis: clock.millis(),
        });
    }
    let history = TrainHistory {
        version: HISTORY_VERSION,
        seed: cfg.seed,
        mode: TrainingMode::Federated,
        shape: RunShape {
            n_train: n_total,
            d: pca.dim(),
            k: pca.k,
            h: cfg.hidden,
            c: num_classes,
            passes_per_record: cfg.local_epochs,
        },
        pca_macs: None,
        records,
    };
    Ok((global, history))
}
