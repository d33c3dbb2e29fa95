mod args;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use log::{info, warn};
use rayon::prelude::*;

use onhscan::compensation::{compensate_volume, CompensationParams};
use onhscan::evaluation::{cross_validate, holdout, DiceReport};
use onhscan::features::{
    append_score, read_scores, write_predictions, write_scores, PredictionRow,
};
use onhscan::forest::{load_model, save_model, train_forest_oob};
use onhscan::metrics::{extract_features, remove_small_islands};
use onhscan::phantom::{
    analytic_volumes, gen_labels, render_intensity, write_analytic, PhantomSpec,
};
use onhscan::simulation::{run_repro, sample_cohort};
use onhscan::volume::{load_volume, normalize_intensity, save_volume, LabelVolume};
use onhscan::{Error, EyeFeatures, ForestModel, Volume};

use args::{Cli, Command, EvaluateCmd, PhantomCmd};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_GATE: u8 = 3;

enum Failure {
    Usage(String),
    Data(String),
    Gate,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(msg) => Failure::Usage(msg),
            other => Failure::Data(other.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };

    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("global pool is configured once");
    }
    info!(
        "config: seed={} threads={} {:?}",
        cli.seed,
        rayon::current_num_threads(),
        cli.command
    );

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_DATA)
        }
        Err(Failure::Gate) => ExitCode::from(EXIT_GATE),
    }
}

fn run(cli: &Cli) -> CmdResult {
    let seed = cli.seed;
    match &cli.command {
        Command::Phantom(PhantomCmd::Gen(a)) => {
            let spec = match (&a.spec, a.preset) {
                (Some(path), _) => {
                    PhantomSpec::load(path).map_err(|e| Failure::Data(e.to_string()))?
                }
                (None, Some(p)) => PhantomSpec::preset(p),
                (None, None) => unreachable!("clap requires --preset or --spec"),
            };
            let labels = gen_labels(&spec)?;
            save_volume(&Volume::Label(labels.clone()), &a.out)?;
            let analytic = analytic_volumes(&spec);
            write_analytic(with_suffix(&a.out, ".analytic"), &analytic)?;
            if a.render {
                let intensity = render_intensity(&labels, &spec, seed)?;
                save_volume(
                    &Volume::Intensity(intensity),
                    with_suffix(&a.out, "_intensity"),
                )?;
            }
            info!(
                "phantom: drusen {} mm3, swelling {} mm3",
                analytic.drusen_mm3, analytic.swelling_mm3
            );
        }
        Command::Compensate(a) => {
            let params = CompensationParams {
                contrast_exp: a.contrast_exp,
                threshold_exp: a.threshold_exp,
                rescale_per_bscan: !a.no_rescale,
            };
            params.validate()?;
            let vol = load_volume(&a.input)?.into_intensity()?;
            let out = compensate_volume(&normalize_intensity(&vol)?, &params)?;
            save_volume(&Volume::Intensity(out), &a.out)?;
        }
        Command::Score(a) => {
            let labels = load_labels(&a.labels, a.min_island)?;
            let row = extract_features(&labels, &a.eye_id, &a.subject_id, a.true_class)?;
            append_score(&a.out, &row)?;
            info!(
                "{}: drusen {} mm3, swelling {} mm3",
                row.eye_id, row.drusen_score_mm3, row.swelling_score_mm3
            );
        }
        Command::Train(a) => {
            let rows = read_scores(&a.scores)?;
            let (model, oob) = train_forest_oob(&rows, &a.forest.params(seed))?;
            save_model(&model, &a.model)?;
            match oob {
                Some(acc) => info!(
                    "trained {} trees, out-of-bag accuracy {acc:.4}",
                    model.trees().len()
                ),
                None => info!("trained {} trees", model.trees().len()),
            }
        }
        Command::Predict(a) => {
            let model = load_model(&a.model)?;
            let rows = read_scores(&a.scores)?;
            let preds: Vec<PredictionRow> = rows.iter().map(|f| predict_row(&model, f)).collect();
            write_predictions(&a.out, &preds)?;
        }
        Command::Evaluate(EvaluateCmd::Dice { pred, truth, out }) => {
            let pred = load_volume(pred)?.into_labels()?;
            let truth = load_volume(truth)?.into_labels()?;
            write_text(out, &DiceReport::compute(&pred, &truth)?.to_json())?;
        }
        Command::Evaluate(EvaluateCmd::Cv {
            scores,
            folds,
            forest,
            out,
        }) => {
            let rows = read_scores(scores)?;
            let report = cross_validate(&rows, *folds, &forest.params(seed), seed)?;
            write_text(out, &report.to_json())?;
        }
        Command::Evaluate(EvaluateCmd::Holdout {
            scores,
            train_fraction,
            forest,
            out,
        }) => {
            let rows = read_scores(scores)?;
            let report = holdout(&rows, *train_fraction, &forest.params(seed), seed)?;
            write_text(out, &report.to_json())?;
        }
        Command::Repro(a) => {
            let report = run_repro(seed, a.classes_collapsed, &a.forest.params(seed))?;
            if let Some(path) = &a.cohort_out {
                write_scores(path, &sample_cohort(seed, a.classes_collapsed))?;
            }
            let json = report.to_json();
            match &a.out {
                Some(path) => write_text(path, &json)?,
                None => std::io::stdout()
                    .write_all(json.as_bytes())
                    .map_err(|e| Failure::Data(format!("stdout: {e}")))?,
            }
            let passed = report.passed();
            info!("repro gate {}", if passed { "passed" } else { "failed" });
            if !passed && !a.classes_collapsed {
                return Err(Failure::Gate);
            }
        }
        Command::Pipeline(a) => return pipeline(a),
    }
    Ok(())
}

fn pipeline(a: &args::PipelineArgs) -> CmdResult {
    let model = a.model.as_deref().map(load_model).transpose()?;
    let results: Vec<(String, Result<EyeFeatures, String>)> = a
        .labels
        .par_iter()
        .map(|stem| {
            let id = eye_id_of(stem);
            let scored = load_labels(stem, a.min_island)
                .and_then(|l| extract_features(&l, &id, &id, None))
                .map_err(|e| e.to_string());
            (id, scored)
        })
        .collect();

    let mut failed = 0;
    let mut scores = Vec::new();
    let mut preds = Vec::new();
    for (id, scored) in results {
        match scored {
            Ok(f) => {
                if let Some(m) = &model {
                    preds.push(predict_row(m, &f));
                }
                scores.push(f);
            }
            Err(msg) => {
                failed += 1;
                warn!("{id}: {msg}");
                preds.push(PredictionRow {
                    eye_id: id.clone(),
                    subject_id: id,
                    true_class: None,
                    outcome: Err(msg),
                });
            }
        }
    }
    write_scores(&a.scores_out, &scores)?;
    if let Some(path) = &a.preds_out {
        if model.is_none() {
            preds.retain(|p| p.outcome.is_err());
        }
        write_predictions(path, &preds)?;
    }
    if failed > 0 {
        return Err(Failure::Data(format!(
            "{failed} of {} volumes failed",
            a.labels.len()
        )));
    }
    Ok(())
}

fn predict_row(model: &ForestModel, f: &EyeFeatures) -> PredictionRow {
    let outcome = model
        .predict_proba(f.vector())
        .and_then(|p| Ok((model.predict_class(f.vector())?, p)))
        .map_err(|e| e.to_string());
    PredictionRow {
        eye_id: f.eye_id.clone(),
        subject_id: f.subject_id.clone(),
        true_class: f.true_class,
        outcome,
    }
}

fn load_labels(stem: &Path, min_island: Option<usize>) -> onhscan::Result<LabelVolume> {
    let labels = load_volume(stem)?.into_labels()?;
    Ok(match min_island {
        Some(n) => {
            let (clean, removed) = remove_small_islands(&labels, n);
            if removed > 0 {
                info!("{}: relabelled {removed} drusen islands", stem.display());
            }
            clean
        }
        None => labels,
    })
}

/// `dir/eye07.meta` and `dir/eye07` both give `eye07`.
fn eye_id_of(stem: &Path) -> String {
    let name = stem
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.strip_suffix(".meta")
        .or_else(|| name.strip_suffix(".raw"))
        .unwrap_or(&name)
        .to_string()
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Error::io(path, e).into())
}
