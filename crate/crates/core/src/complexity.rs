//! Closed-form cost model for the pipeline and the instrumentation that
//! checks it against live runs.
//!
//! All costs are evaluated with unit constants: a cost of `x` means "x scalar
//! multiply-accumulates, up to the implementation constant". For integer
//! inputs every function here returns an exactly integer-valued `f64`.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::training::TrainHistory;

/// PCA cost: `N·d·min(N, d) + d³`.
pub fn pca_cost(n: u64, d: u64) -> f64 {
    let (n, d) = (n as f64, d as f64);
    n * d * n.min(d) + d * d * d
}

/// Cost of `e` epochs over `N` samples of a one-hidden-layer net with input
/// width `k`, `h` hidden units and `c` outputs: `e·N·(k·h + h·c)`.
pub fn nn_train_cost(e: u64, n: u64, k: u64, h: u64, c: u64) -> f64 {
    (e as f64) * (n as f64) * ((k * h) as f64 + (h * c) as f64)
}

/// Multi-hidden-layer generalisation:
/// `e·N·(input·h₁ + Σ hᵢ·hᵢ₊₁ + h_l·c)`.
///
/// `input_width` is the raw dimension `d` for a plain network or the reduced
/// dimension `k` when the network sits behind PCA.
pub fn nn_train_cost_layers(e: u64, n: u64, input_width: u64, hidden: &[u64], c: u64) -> Result<f64> {
    let (first, last) = match (hidden.first(), hidden.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(Error::Config("at least one hidden layer is required".into())),
    };
    let inner: u64 = hidden.windows(2).map(|w| w[0] * w[1]).sum();
    let per_sample = (input_width * first) as f64 + inner as f64 + (last * c) as f64;
    Ok(e as f64 * n as f64 * per_sample)
}

/// Componentised total training cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub n: u64,
    pub d: u64,
    pub k: u64,
    pub h: u64,
    pub c: u64,
    pub e: u64,
    pub pca_cost: f64,
    pub per_epoch_nn_cost: f64,
    pub total_train_cost: f64,
}

impl CostEstimate {
    pub fn nn_train_cost(&self) -> f64 {
        self.total_train_cost - self.pca_cost
    }

    pub fn pca_share(&self) -> f64 {
        self.pca_cost / self.total_train_cost
    }
}

/// `N·d·min(N,d) + d³ + e·N·(k·h + h·c)`.
pub fn total_cost(n: u64, d: u64, k: u64, h: u64, c: u64, e: u64) -> Result<CostEstimate> {
    if k > d {
        return Err(Error::Config(format!(
            "reduced dimension k={k} exceeds input dimension d={d}"
        )));
    }
    let pca = pca_cost(n, d);
    let per_epoch = nn_train_cost(1, n, k, h, c);
    let nn = nn_train_cost(e, n, k, h, c);
    Ok(CostEstimate {
        n,
        d,
        k,
        h,
        c,
        e,
        pca_cost: pca,
        per_epoch_nn_cost: per_epoch,
        total_train_cost: pca + nn,
    })
}

/// Largest admissible reduced dimension (exclusive) for which PCA + the
/// reduced network is cheaper than the plain network on raw inputs:
/// `d·(1 − min(N,d)/(e·h) − d²/(e·N·h))`.
///
/// A non-positive value means no `k` pays for the PCA step.
pub fn k_bound(n: u64, d: u64, e: u64, h: u64) -> f64 {
    let (n, d, e, h) = (n as f64, d as f64, e as f64, h as f64);
    d * (1.0 - n.min(d) / (e * h) - d * d / (e * n * h))
}

/// One row of the plain-vs-reduced cost table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostRow {
    pub h: u64,
    pub cost_nn: f64,
    pub cost_pca_nn: f64,
    pub ratio: f64,
}

/// Plain network on `d` inputs vs PCA + network on `k` inputs for each hidden
/// width in `h_range` (inclusive).
pub fn cost_table(
    n: u64,
    d: u64,
    k: u64,
    c: u64,
    e: u64,
    h_range: std::ops::RangeInclusive<u64>,
) -> Result<Vec<CostRow>> {
    if h_range.is_empty() || *h_range.start() == 0 {
        return Err(Error::Config(format!(
            "invalid hidden-width range {}:{}",
            h_range.start(),
            h_range.end()
        )));
    }
    h_range
        .map(|h| {
            let cost_nn = nn_train_cost(e, n, d, h, c);
            let cost_pca_nn = total_cost(n, d, k, h, c, e)?.total_train_cost;
            Ok(CostRow {
                h,
                cost_nn,
                cost_pca_nn,
                ratio: cost_nn / cost_pca_nn,
            })
        })
        .collect()
}

pub fn write_cost_table_csv<W: std::io::Write>(rows: &[CostRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["h", "cost_nn", "cost_pca_nn", "ratio"])?;
    for r in rows {
        w.write_record([
            r.h.to_string(),
            format!("{}", r.cost_nn),
            format!("{}", r.cost_pca_nn),
            format!("{}", r.ratio),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Which part of the pipeline a multiply-accumulate belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Pca,
    Forward,
    Backward,
}

/// Per-phase totals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacSnapshot {
    pub pca: u64,
    pub forward: u64,
    pub backward: u64,
}

impl MacSnapshot {
    pub fn total(&self) -> u64 {
        self.pca + self.forward + self.backward
    }

    pub fn since(&self, earlier: &MacSnapshot) -> MacSnapshot {
        MacSnapshot {
            pca: self.pca - earlier.pca,
            forward: self.forward - earlier.forward,
            backward: self.backward - earlier.backward,
        }
    }
}

/// Monotone multiply-accumulate counter, shared across threads.
#[derive(Debug, Default)]
pub struct MacCounter {
    pca: AtomicU64,
    forward: AtomicU64,
    backward: AtomicU64,
}

impl MacCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&self, phase: Phase, macs: u64) {
        let slot = match phase {
            Phase::Pca => &self.pca,
            Phase::Forward => &self.forward,
            Phase::Backward => &self.backward,
        };
        slot.fetch_add(macs, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> MacSnapshot {
        MacSnapshot {
            pca: self.pca.load(Ordering::Relaxed),
            forward: self.forward.load(Ordering::Relaxed),
            backward: self.backward.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        self.pca.store(0, Ordering::Relaxed);
        self.forward.store(0, Ordering::Relaxed);
        self.backward.store(0, Ordering::Relaxed);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub measured: f64,
    pub predicted: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum VerificationReport {
    NoData,
    Checked { passed: bool, checks: Vec<CheckLine> },
}

impl VerificationReport {
    pub fn passed(&self) -> Option<bool> {
        match self {
            VerificationReport::NoData => None,
            VerificationReport::Checked { passed, .. } => Some(*passed),
        }
    }
}

impl std::fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VerificationReport::NoData => writeln!(f, "no data (MAC counting was disabled)"),
            VerificationReport::Checked { passed, checks } => {
                for c in checks {
                    writeln!(
                        f,
                        "{:<44} measured {:>16} predicted {:>16}  {}",
                        c.name,
                        c.measured,
                        c.predicted,
                        if c.passed { "ok" } else { "MISMATCH" }
                    )?;
                }
                writeln!(f, "verification {}", if *passed { "passed" } else { "FAILED" })
            }
        }
    }
}

/// Backward products relative to one forward pass, for a single hidden layer:
/// gradient of the output weights (`c·h`), delta propagated to the hidden
/// layer (`c·h`) and gradient of the hidden weights (`h·k`).
const TRAIN_STEP_RATIO: std::ops::RangeInclusive<f64> = 2.0..=3.0;

/// Checks the MAC snapshots recorded in a history against the cost model.
///
/// Forward MACs per record must equal `passes·N·(k·h + h·c)` exactly and the
/// covariance MACs must equal `N·d²` exactly. The backward products are
/// checked exactly against `passes·N·(h·k + 2·h·c)`, and a full training
/// step (forward + backward) must land within 2×–3× of the forward count.
/// The hidden-layer widths here are the reduced input `k`, not the raw `d`.
pub fn verify_counts(history: &TrainHistory) -> VerificationReport {
    let Some(pca_macs) = history.pca_macs else {
        return VerificationReport::NoData;
    };
    let s = &history.shape;
    let (n, d, k, h, c) = (s.n_train as u64, s.d as u64, s.k as u64, s.h as u64, s.c as u64);
    let passes = s.passes_per_record as u64;
    let mut checks = vec![CheckLine {
        name: "pca covariance MACs = N·d²".into(),
        measured: pca_macs as f64,
        predicted: (n * d * d) as f64,
        passed: pca_macs == n * d * d,
    }];
    let forward_pred = passes * n * (k * h + h * c);
    let backward_pred = passes * n * (h * k + 2 * h * c);
    let mut any_record = false;
    for rec in &history.records {
        let Some(m) = rec.macs else { continue };
        any_record = true;
        checks.push(CheckLine {
            name: format!("round {} forward MACs = E·N·(kh+hc)", rec.round),
            measured: m.forward as f64,
            predicted: forward_pred as f64,
            passed: m.forward == forward_pred,
        });
        checks.push(CheckLine {
            name: format!("round {} backward MACs = E·N·(hk+2hc)", rec.round),
            measured: m.backward as f64,
            predicted: backward_pred as f64,
            passed: m.backward == backward_pred,
        });
        let ratio = if m.forward == 0 {
            f64::NAN
        } else {
            (m.forward + m.backward) as f64 / m.forward as f64
        };
        checks.push(CheckLine {
            name: format!("round {} (fwd+bwd)/fwd in [2,3]", rec.round),
            measured: ratio,
            predicted: (forward_pred + backward_pred) as f64 / forward_pred as f64,
            passed: TRAIN_STEP_RATIO.contains(&ratio),
        });
    }
    if !any_record {
        return VerificationReport::NoData;
    }
    let passed = checks.iter().all(|c| c.passed);
    VerificationReport::Checked { passed, checks }
}
