use std::path::PathBuf;

use anyhow::Result;
use edgeward_core::metrics::{class_report, confusion, roc, write_roc_csv, Averaging};
use edgeward_core::mlp::{argmax, predict_proba};
use edgeward_core::{ClassReport, ConfusionMatrix, Error};
use serde::Serialize;

use crate::config::write_resolved;
use crate::io::{load_lke, load_model, load_pca, load_schema, Artifacts, Usage};

const REPORT_VERSION: u32 = 1;

#[derive(Debug, clap::Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Args {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub pca: PathBuf,
    /// Encoded test set (LKE1).
    #[arg(long)]
    pub test: PathBuf,
    /// Schema whose class names label the text report.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Report<'a> {
    version: u32,
    seed: u64,
    samples: usize,
    confusion: &'a ConfusionMatrix,
    report: &'a ClassReport,
    micro_auc: Option<f64>,
    macro_auc: Option<f64>,
}

pub fn run(args: Args) -> Result<()> {
    let model = load_model(&args.model)?;
    let pca = load_pca(&args.pca)?;
    let test = load_lke(&args.test)?;
    if test.num_classes != model.c {
        return Err(Usage(format!(
            "test set has {} classes but the model predicts {}",
            test.num_classes, model.c
        ))
        .into());
    }
    let names = match &args.schema {
        Some(p) => Some(load_schema(p)?.class_names),
        None => None,
    };

    let probs = predict_proba(&model, &pca, &test.features)?;
    let predicted: Vec<usize> = probs.iter_rows().map(argmax).collect();
    let cm = confusion(&test.labels, &predicted, model.c)?;
    let report = class_report(&cm)?;
    let out = Artifacts::create(&args.out)?;

    let mut aucs = [None, None];
    for (slot, (mode, name)) in aucs
        .iter_mut()
        .zip([(Averaging::Micro, "roc_micro.csv"), (Averaging::Macro, "roc_macro.csv")])
    {
        match roc(&probs, &test.labels, mode) {
            Ok(r) => {
                out.write_with(name, |b| write_roc_csv(&r, b))?;
                *slot = Some(r.auc);
            }
            Err(Error::DegenerateRoc(why)) => eprintln!("warning: {mode:?} ROC undefined: {why}"),
            Err(e) => return Err(e.into()),
        }
    }

    let text = report.to_text(names.as_deref());
    print!("{text}");
    for (label, auc) in ["micro", "macro"].iter().zip(aucs) {
        if let Some(a) = auc {
            println!("{label} auc {a:.6}");
        }
    }
    out.write("report.txt", text.as_bytes())?;
    let json = Report {
        version: REPORT_VERSION,
        seed: model.seed,
        samples: test.len(),
        confusion: &cm,
        report: &report,
        micro_auc: aucs[0],
        macro_auc: aucs[1],
    };
    out.write("report.json", serde_json::to_string_pretty(&json)?.as_bytes())?;
    write_resolved(out.dir(), "evaluate", &args)
}
