//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Criterion 9 needs a user-supplied BoT-IoT CSV and schema
//! (`EDGEWARD_BOTIOT_CSV`, `EDGEWARD_BOTIOT_SCHEMA`) and prints SKIP without
//! them.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use edgeward_core::complexity::{cost_table, verify_counts};
use edgeward_core::dataset::{corner_specs, generate_synthetic, split_train_test};
use edgeward_core::metrics::{auc_from_points, binary_roc, class_report, confusion};
use edgeward_core::mlp::{backward, forward, forward_counted, init_model, loss};
use edgeward_core::pca::{covariance_counted, eigen_sym, fit_pca, project};
use edgeward_core::training::{
    aggregate, aggregation_weights, train_centralized, train_federated, FederatedConfig, Optimizer, TrainConfig,
};
use edgeward_core::{ClientShard, Dataset, MacCounter, Matrix, MlpModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Verdict::{Fail, Pass, Skip};

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

// ---------------------------------------------------------------- oracles

fn objective(m: &MlpModel, x: &Matrix, y: &[usize]) -> f64 {
    loss(&forward(m, x).unwrap().probs, y).unwrap()
}

fn max_rel_grad_error(m: &MlpModel, x: &Matrix, y: &[usize]) -> f64 {
    const STEP: f64 = 1e-6;
    let g = backward(m, x, y).unwrap();
    let mut worst: f64 = 0.0;
    for (t, grads) in g.tensors().iter().enumerate() {
        for (i, &a) in grads.iter().enumerate() {
            let mut plus = m.clone();
            plus.tensors_mut()[t][i] += STEP;
            let mut minus = m.clone();
            minus.tensors_mut()[t][i] -= STEP;
            let n = (objective(&plus, x, y) - objective(&minus, x, y)) / (2.0 * STEP);
            worst = worst.max((a - n).abs() / a.abs().max(n.abs()).max(1e-6));
        }
    }
    worst
}

fn mann_whitney(scores: &[f64], positive: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    let side = |want: bool| {
        scores
            .iter()
            .zip(positive)
            .filter(move |(_, &p)| p == want)
            .map(|(&s, _)| s)
    };
    for si in side(true) {
        for sj in side(false) {
            pairs += 1.0;
            wins += if si > sj {
                1.0
            } else if si == sj {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / pairs
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

// ------------------------------------------------------------- criteria

fn gradient_fidelity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let nets = 120;
    let mut worst: f64 = 0.0;
    for net in 0..nets {
        let (k, h, c, b) = (
            rng.random_range(1..=12),
            rng.random_range(1..=24),
            rng.random_range(2..=11),
            rng.random_range(1..=16),
        );
        let mut m = init_model(k, h, c, net).unwrap();
        for v in m.b1.iter_mut().chain(m.b_out.iter_mut()) {
            *v = rng.random_range(-0.5..0.5);
        }
        let x = random_matrix(&mut rng, b, k);
        let y: Vec<usize> = (0..b).map(|_| rng.random_range(0..c)).collect();
        worst = worst.max(max_rel_grad_error(&m, &x, &y));
    }
    // the largest allowed shape, explicitly
    let m = init_model(12, 24, 11, 99).unwrap();
    let x = random_matrix(&mut rng, 16, 12);
    let y: Vec<usize> = (0..16).map(|i| i % 11).collect();
    worst = worst.max(max_rel_grad_error(&m, &x, &y));
    check(
        worst < 1e-4,
        format!("max relative error {worst:.2e} over {} nets", nets + 1),
    )
}

fn pca_correctness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut ortho, mut var_err, mut rec_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let sets = 60;
    for s in 0..sets {
        let n = if s == 0 { 500 } else { rng.random_range(10..=500) };
        let d = if s == 0 { 32 } else { rng.random_range(1..=32) };
        let latent = rng.random_range(1..=d);
        let mix = random_matrix(&mut rng, latent, d);
        let z = random_matrix(&mut rng, n, latent);
        let mut x = z.matmul(&mix, None, edgeward_core::Phase::Pca).unwrap();
        for v in x.as_mut_slice() {
            *v += 0.01 * rng.random_range(-1.0..1.0);
        }
        let data = Dataset::new(x, (0..n).map(|i| i % 2).collect(), 2).unwrap();
        let full = fit_pca(&data, 1.0).unwrap();
        let total: f64 = full.eigenvalues.iter().sum();
        let sub = &full.subspace;
        for i in 0..full.k {
            for j in 0..full.k {
                let dot: f64 = sub.row(i).iter().zip(sub.row(j)).map(|(a, b)| a * b).sum();
                ortho = ortho.max((dot - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        let p = project(&full, &data).unwrap();
        for c in 0..full.k {
            let lambda = full.eigenvalues[c];
            if lambda > 1e-8 * full.eigenvalues[0] {
                let var = p.features.iter_rows().map(|r| r[c] * r[c]).sum::<f64>() / n as f64;
                var_err = var_err.max((var - lambda).abs() / lambda);
            }
        }
        let reduced = fit_pca(&data, 0.9).unwrap();
        let tail: f64 = reduced.eigenvalues[reduced.k..].iter().sum();
        if tail > 1e-8 * total {
            let pr = project(&reduced, &data).unwrap();
            let mut err = 0.0;
            for (o, q) in data.features.iter_rows().zip(pr.features.iter_rows()) {
                for (j, (&oj, &mj)) in o.iter().zip(&reduced.mean).enumerate() {
                    let r: f64 = (0..reduced.k).map(|c| q[c] * reduced.subspace[(c, j)]).sum();
                    err += (oj - mj - r).powi(2);
                }
            }
            rec_err = rec_err.max((err / n as f64 - tail).abs() / tail);
        }
    }
    let mut quad: f64 = 0.0;
    for _ in 0..1000 {
        let (a, b, c) = (
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
        );
        let r = eigen_sym(&Matrix::from_rows(&[vec![a, b], vec![b, c]]).unwrap()).unwrap();
        let disc = ((a - c) * (a - c) + 4.0 * b * b).sqrt();
        quad = quad
            .max((r.values[0] - 0.5 * (a + c + disc)).abs())
            .max((r.values[1] - 0.5 * (a + c - disc)).abs());
    }
    check(
        ortho < 1e-8 && var_err < 1e-6 && rec_err < 1e-6 && quad < 1e-10,
        format!(
            "orthonormality {ortho:.1e}, variance rel {var_err:.1e}, reconstruction rel {rec_err:.1e} over {sets} sets; 2x2 {quad:.1e}"
        ),
    )
}

fn federated_collapse() -> Verdict {
    let data = generate_synthetic(&corner_specs(4, 6, 100, 0.1).unwrap(), 3).unwrap();
    let (train, test) = split_train_test(&data, 0.2, 3).unwrap();
    let rounds = 25;
    let fed = FederatedConfig {
        rounds,
        local_epochs: 1,
        lr: 0.01,
        batch_size: train.len(),
        seed: 5,
        record_timing: false,
        ..FederatedConfig::default()
    };
    let (_, fm, _) = train_federated(&[ClientShard::new(0, train.clone())], std::slice::from_ref(&test), &fed).unwrap();
    let cen = TrainConfig {
        epochs: rounds,
        batch_size: train.len(),
        optimizer: Optimizer::Sgd { lr: 0.01 },
        seed: 5,
        record_timing: false,
        ..TrainConfig::default()
    };
    let (_, cm, _) = train_centralized(&train, &test, &cen).unwrap();
    let diff = fm
        .tensors()
        .iter()
        .zip(cm.tensors())
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    check(
        diff <= 1e-12,
        format!("max parameter difference {diff:.1e} after {rounds} rounds"),
    )
}

fn aggregation_oracle() -> Verdict {
    let mut zero = init_model(1, 1, 2, 0).unwrap();
    let mut four = zero.clone();
    for t in zero.tensors_mut() {
        t.fill(0.0);
    }
    for t in four.tensors_mut() {
        t.fill(4.0);
    }
    let agg = aggregate(&[zero, four], &[1, 3]).unwrap();
    let exact = agg.tensors().iter().all(|t| t.iter().all(|&v| v == 3.0));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let k = rng.random_range(1..=64);
        let counts: Vec<usize> = (0..k).map(|_| rng.random_range(1..1_000_000)).collect();
        let s: f64 = aggregation_weights(&counts).unwrap().iter().sum();
        worst = worst.max((s - 1.0).abs());
    }
    check(
        exact && worst <= 1e-15,
        format!("w=(0,4), n=(1,3) -> 3 exactly: {exact}; weight-sum error {worst:.1e}"),
    )
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_edgeward")
}

fn run_cli(args: &[&str]) -> Result<String, String> {
    let out = Command::new(bin()).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn json(path: &Path) -> Result<serde_json::Value, String> {
    serde_json::from_str(&fs::read_to_string(path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

fn end_to_end(dir: &Path) -> Result<Verdict, String> {
    let s = |rel: &str| dir.join(rel).to_str().unwrap().to_string();
    run_cli(&[
        "synth",
        "--classes",
        "4",
        "--dim",
        "6",
        "--per-class",
        "500",
        "--zones",
        "4",
        "--seed",
        "7",
        "--out",
        &s("syn"),
    ])?;
    run_cli(&[
        "preprocess",
        "--data",
        &s("syn/synthetic.csv"),
        "--schema",
        &s("syn/schema.json"),
        "--test-fraction",
        "0.2",
        "--seed",
        "7",
        "--out",
        &s("enc"),
    ])?;
    run_cli(&[
        "train",
        "--train",
        &s("enc/train.lke"),
        "--test",
        &s("enc/test.lke"),
        "--hidden",
        "22",
        "--epochs",
        "50",
        "--batch-size",
        "32",
        "--out",
        &s("cen"),
    ])?;
    run_cli(&[
        "evaluate",
        "--model",
        &s("cen/model.json"),
        "--pca",
        &s("cen/pca.json"),
        "--test",
        &s("enc/test.lke"),
        "--out",
        &s("eval"),
    ])?;
    let report = json(&dir.join("eval/report.json"))?;
    let acc = report["report"]["accuracy"].as_f64().ok_or("no accuracy")?;
    let auc = report["micro_auc"].as_f64().ok_or("no micro AUC")?;

    run_cli(&[
        "federate",
        "--data",
        &s("syn/synthetic.csv"),
        "--schema",
        &s("syn/schema.json"),
        "--test-fraction",
        "0.2",
        "--rounds",
        "350",
        "--local-epochs",
        "1",
        "--lr",
        "0.01",
        "--hidden",
        "22",
        "--seed",
        "7",
        "--eval-every",
        "350",
        "--out",
        &s("fed"),
    ])?;
    let table = fs::read_to_string(dir.join("fed/accuracy.csv")).map_err(|e| e.to_string())?;
    let last = table.lines().last().ok_or("empty accuracy table")?;
    let clients: Vec<f64> = last.split(',').skip(1).map(|v| v.parse().unwrap_or(f64::NAN)).collect();
    let fed_ok = clients.len() == 4 && clients.iter().all(|&a| a >= 0.95);
    Ok(check(
        acc >= 0.99 && auc >= 0.999 && fed_ok,
        format!(
            "centralized accuracy {acc:.4}, micro-AUC {auc:.6}; federated per-client accuracy {}",
            clients.iter().map(|a| format!("{a:.4}")).collect::<Vec<_>>().join(" ")
        ),
    ))
}

fn complexity_verification() -> Verdict {
    let data = generate_synthetic(&corner_specs(3, 8, 80, 0.1).unwrap(), 9).unwrap();
    let (train, test) = split_train_test(&data, 0.25, 9).unwrap();
    let (n, d) = (train.len() as u64, train.dim() as u64);

    let counter = MacCounter::new();
    covariance_counted(&train.features, Some(&counter));
    let cov = counter.snapshot().pca;

    let m = init_model(5, 13, 3, 1).unwrap();
    let counter = MacCounter::new();
    let x = Matrix::from_vec(train.len(), 5, train.features.as_slice()[..train.len() * 5].to_vec()).unwrap();
    forward_counted(&m, &x, Some(&counter)).unwrap();
    let fwd = counter.snapshot().forward;
    let fwd_expected = n * (5 * 13 + 13 * 3);

    let cfg = TrainConfig {
        epochs: 3,
        batch_size: 16,
        count_macs: true,
        record_timing: false,
        ..TrainConfig::default()
    };
    let (_, _, history) = train_centralized(&train, &test, &cfg).unwrap();
    let run_ok = verify_counts(&history).passed() == Some(true);

    let rows = cost_table(1_000_000, 40, 9, 11, 50, 6..=46).unwrap();
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    check(
        cov == n * d * d && fwd == fwd_expected && run_ok && rows.len() == 41 && min_ratio > 1.0,
        format!(
            "covariance {cov} = N·d² {}; forward {fwd} = N(kh+hc) {fwd_expected}; training run counts match: {run_ok}; \
             table h=6..46 min ratio {min_ratio:.3}",
            n * d * d
        ),
    )
}

fn determinism(dir: &Path) -> Result<Verdict, String> {
    let s = |rel: &str| dir.join(rel).to_str().unwrap().to_string();
    run_cli(&["synth", "--per-class", "150", "--seed", "11", "--out", &s("syn")])?;
    run_cli(&[
        "preprocess",
        "--data",
        &s("syn/synthetic.csv"),
        "--schema",
        &s("syn/schema.json"),
        "--seed",
        "11",
        "--out",
        &s("enc"),
    ])?;
    let mut same = Vec::new();
    for run in ["a", "b"] {
        run_cli(&[
            "train",
            "--train",
            &s("enc/train.lke"),
            "--test",
            &s("enc/test.lke"),
            "--epochs",
            "10",
            "--batch-size",
            "16",
            "--seed",
            "3",
            "--out",
            &s(&format!("train-{run}")),
        ])?;
        run_cli(&[
            "federate",
            "--data",
            &s("syn/synthetic.csv"),
            "--schema",
            &s("syn/schema.json"),
            "--rounds",
            "20",
            "--seed",
            "3",
            "--out",
            &s(&format!("fed-{run}")),
        ])?;
    }
    for cmd in ["train", "fed"] {
        for art in ["model.json", "pca.json"] {
            let a = fs::read(dir.join(format!("{cmd}-a/{art}"))).map_err(|e| e.to_string())?;
            let b = fs::read(dir.join(format!("{cmd}-b/{art}"))).map_err(|e| e.to_string())?;
            same.push((format!("{cmd}/{art}"), a == b));
        }
    }
    let all = same.iter().all(|(_, ok)| *ok);
    let detail = same
        .iter()
        .map(|(n, ok)| format!("{n} {}", if *ok { "identical" } else { "DIFFERS" }))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(check(all, detail))
}

fn metrics_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for set in 0..1000 {
        let n = rng.random_range(2..100);
        let levels = if set % 2 == 0 { 7.0 } else { 1e9 };
        let scores: Vec<f64> = (0..n)
            .map(|_| (rng.random::<f64>() * levels).floor() / levels)
            .collect();
        let mut pos: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        pos[0] = true;
        pos[1] = false;
        let auc = auc_from_points(&binary_roc(&scores, &pos).unwrap());
        worst = worst.max((auc - mann_whitney(&scores, &pos)).abs());
    }
    let cm = confusion(&[0, 0, 1], &[0, 1, 1], 2).unwrap();
    let r = class_report(&cm).unwrap();
    let close = |a: Option<f64>, b: f64| a.is_some_and(|a| (a - b).abs() < 1e-15);
    let hand = cm.counts == vec![1, 1, 0, 1]
        && close(r.classes[0].detection_rate, 0.5)
        && close(r.classes[0].precision, 1.0)
        && close(r.classes[0].f1, 2.0 / 3.0)
        && close(r.classes[1].detection_rate, 1.0)
        && close(r.classes[1].precision, 0.5)
        && close(r.classes[1].f1, 2.0 / 3.0)
        && (r.accuracy - 2.0 / 3.0).abs() < 1e-15;
    check(
        worst <= 1e-12 && hand,
        format!("AUC vs Mann-Whitney max error {worst:.1e} over 1000 sets; 2x2 report matches hand values: {hand}"),
    )
}

fn normalize(name: &str) -> String {
    name.chars()
        .filter(char::is_ascii_alphanumeric)
        .collect::<String>()
        .to_ascii_lowercase()
}

fn botiot(dir: &Path) -> Result<Verdict, String> {
    let (Ok(csv), Ok(schema)) = (
        std::env::var("EDGEWARD_BOTIOT_CSV"),
        std::env::var("EDGEWARD_BOTIOT_SCHEMA"),
    ) else {
        return Ok(Skip("set EDGEWARD_BOTIOT_CSV and EDGEWARD_BOTIOT_SCHEMA to run".into()));
    };
    let s = |rel: &str| dir.join(rel).to_str().unwrap().to_string();
    run_cli(&["preprocess", "--data", &csv, "--schema", &schema, "--out", &s("enc")])?;
    run_cli(&[
        "train",
        "--train",
        &s("enc/train.lke"),
        "--test",
        &s("enc/test.lke"),
        "--out",
        &s("model"),
    ])?;
    run_cli(&[
        "evaluate",
        "--model",
        &s("model/model.json"),
        "--pca",
        &s("model/pca.json"),
        "--test",
        &s("enc/test.lke"),
        "--out",
        &s("eval"),
    ])?;
    let report = json(&dir.join("eval/report.json"))?;
    let schema_json = json(Path::new(&schema))?;
    let names: Vec<String> = schema_json["class_names"]
        .as_array()
        .ok_or("schema has no class_names")?
        .iter()
        .map(|v| v.as_str().unwrap_or_default().to_string())
        .collect();
    let find = |var: &str, fallbacks: &[&str]| -> Option<usize> {
        let wanted: Vec<String> = match std::env::var(var) {
            Ok(v) => vec![normalize(&v)],
            Err(_) => fallbacks.iter().map(|f| normalize(f)).collect(),
        };
        names.iter().position(|n| wanted.contains(&normalize(n)))
    };
    let dr = |i: usize| report["report"]["classes"][i]["detection_rate"].as_f64();
    let acc = report["report"]["accuracy"].as_f64().ok_or("no accuracy")?;
    let dos = find("EDGEWARD_BOTIOT_DOS_TCP_CLASS", &["DoS-TCP", "DoS_TCP", "DoS TCP"]).and_then(dr);
    let scan = find(
        "EDGEWARD_BOTIOT_SCAN_CLASS",
        &[
            "Server Scanning",
            "Service_Scan",
            "Service Scan",
            "Reconnaissance_Service_Scan",
        ],
    )
    .and_then(dr);
    let (Some(dos), Some(scan)) = (dos, scan) else {
        return Ok(Fail(format!(
            "accuracy {acc:.4}; could not locate DoS-TCP / scanning classes among {names:?}"
        )));
    };
    Ok(check(
        (acc - 0.999).abs() <= 0.003 && (dos - 1.0).abs() <= 0.001 && scan >= 0.995,
        format!("accuracy {acc:.5}, DoS-TCP DR {dos:.5}, scanning DR {scan:.5}"),
    ))
}

fn main() -> ExitCode {
    let scratch = tempfile::tempdir().expect("temp dir");
    let sub = |name: &str| {
        let p = scratch.path().join(name);
        fs::create_dir_all(&p).unwrap();
        p
    };
    type Criterion<'a> = (u8, &'a str, Option<u64>, Box<dyn FnOnce() -> Verdict + 'a>);
    let lift = |r: Result<Verdict, String>| r.unwrap_or_else(|e| Fail(format!("error: {e}")));
    let (d5, d7, d9) = (sub("ac5"), sub("ac7"), sub("ac9"));
    let criteria: Vec<Criterion> = vec![
        (1, "gradient fidelity", Some(30), Box::new(gradient_fidelity)),
        (2, "PCA correctness", Some(10), Box::new(pca_correctness)),
        (3, "federated collapse oracle", Some(10), Box::new(federated_collapse)),
        (4, "aggregation oracle", None, Box::new(aggregation_oracle)),
        (
            5,
            "end-to-end synthetic detection",
            Some(120),
            Box::new(move || lift(end_to_end(&d5))),
        ),
        (
            6,
            "complexity verification",
            Some(10),
            Box::new(complexity_verification),
        ),
        (7, "determinism", None, Box::new(move || lift(determinism(&d7)))),
        (8, "metrics oracles", None, Box::new(metrics_oracles)),
        (
            9,
            "BoT-IoT reproduction (optional)",
            None,
            Box::new(move || lift(botiot(&d9))),
        ),
    ];

    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        let start = Instant::now();
        let verdict =
            std::panic::catch_unwind(std::panic::AssertUnwindSafe(run)).unwrap_or_else(|_| Fail("panicked".into()));
        let took = start.elapsed();
        let verdict = match (verdict, limit) {
            (Pass(d), Some(secs)) if took > Duration::from_secs(secs) => {
                Fail(format!("{d}; took longer than {secs} s"))
            }
            (v, _) => v,
        };
        let (tag, detail) = match verdict {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("{tag} AC{id} {name}: {detail} [{:.2} s]", took.as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
