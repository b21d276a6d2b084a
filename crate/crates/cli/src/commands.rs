use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rulecraft::data::{FeatureMatrix, Vocabulary};
use rulecraft::pipeline::{benchmark, evaluate, train_multiclass, BenchmarkReport, MetricsReport, MulticlassModel};
use rulecraft::rules::{render_literal, render_rule, MatchProfile};
use serde::Serialize;

use crate::config::{CliConfig, DatasetSpec};
use crate::dataset;
use crate::error::CliError;
use crate::{BenchArgs, Cli, Command, EvalArgs, ExplainArgs, Format, PredictArgs, TrainArgs};

/// `writeln!` into a `String`, which cannot fail.
macro_rules! w {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).expect("writing to a String")
    };
}

const DATASET_FILE: &str = "dataset.json";
const VOCAB_FILE: &str = "vocab.json";
const METRICS_FILE: &str = "metrics.json";
const BENCH_FILE: &str = "bench.json";
const DEFAULT_MODEL_DIR: &str = "model";

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Train(args) => train(cli, args),
        Command::Eval(args) => eval(cli, args),
        Command::Predict(args) => predict(args),
        Command::Explain(args) => explain(args),
        Command::Bench(args) => bench(cli, args),
    }
}

/// Writes to stdout; a closed pipe (`| head`) ends output quietly.
fn emit(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::runtime(e)),
        _ => Ok(()),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(CliError::runtime)?;
    fs::write(path, text + "\n").map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn read_json<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn train_split(cfg: &CliConfig) -> Result<(FeatureMatrix, Option<Vocabulary>), CliError> {
    let path = cfg
        .train
        .as_deref()
        .ok_or_else(|| CliError::Config("no training dataset given (--train or \"train\" in the config)".into()))?;
    dataset::load(&cfg.dataset, path, cfg.train_labels.as_deref(), None, cfg.train_limit)
}

fn train(cli: &Cli, args: &TrainArgs) -> Result<(), CliError> {
    let cfg = cli.resolve(&args.overrides)?;
    let (matrix, vocab) = train_split(&cfg)?;
    let model = train_multiclass(&matrix, &cfg.pipeline).map_err(CliError::runtime)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_MODEL_DIR));
    model.save(&out).map_err(CliError::runtime)?;
    write_json(&out.join(DATASET_FILE), &cfg.dataset)?;
    if let Some(v) = &vocab {
        write_json(&out.join(VOCAB_FILE), v)?;
    }
    let dir = out;
    let mut out = String::new();
    w!(
        out,
        "trained {} rule sets on {} examples in {:.2}s -> {}",
        model.rulesets.len(),
        matrix.rows(),
        model.timings.total_s,
        dir.display()
    );
    for rs in &model.rulesets {
        w!(out, "  {:<12} {:>4} rules", rs.label(), rs.len());
    }
    emit(&out)
}

struct Loaded {
    model: MulticlassModel,
    spec: DatasetSpec,
    vocab: Option<Vocabulary>,
}

fn load_model(dir: &Path) -> Result<Loaded, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Config(format!(
            "model directory not found: {}",
            dir.display()
        )));
    }
    let model = MulticlassModel::load(dir).map_err(CliError::runtime)?;
    let spec: DatasetSpec = read_json(&dir.join(DATASET_FILE))?;
    let vocab_path = dir.join(VOCAB_FILE);
    let vocab = if vocab_path.exists() {
        Some(read_json(&vocab_path)?)
    } else {
        None
    };
    Ok(Loaded { model, spec, vocab })
}

impl Loaded {
    fn dataset(&self, path: &Path, labels: Option<&Path>, limit: Option<usize>) -> Result<FeatureMatrix, CliError> {
        Ok(dataset::load(&self.spec, path, labels, self.vocab.as_ref(), limit)?.0)
    }
}

fn pct(x: f64) -> String {
    format!("{:.2}%", x * 100.0)
}

fn format_metrics(r: &MetricsReport) -> String {
    let mut out = String::new();
    w!(
        out,
        "accuracy {}  precision {}  recall {}",
        pct(r.accuracy),
        pct(r.macro_precision),
        pct(r.macro_recall)
    );
    let width = r.labels.iter().map(|l| l.len()).max().unwrap_or(0).max(6);
    let mut header = format!("{:<10}", "label");
    let mut recall = format!("{:<10}", "recall");
    for (label, m) in r.labels.iter().zip(&r.per_label) {
        header.push_str(&format!(" {label:>width$}"));
        recall.push_str(&format!(" {:>width$.2}", m.recall * 100.0));
    }
    w!(out, "{header}\n{recall}");
    out
}

fn eval(cli: &Cli, args: &EvalArgs) -> Result<(), CliError> {
    let loaded = load_model(&args.model)?;
    let test = loaded.dataset(&args.test, args.test_labels.as_deref(), args.test_limit)?;
    let report = evaluate(&loaded.model, &test).map_err(CliError::runtime)?;
    emit(&format_metrics(&report))?;
    let out = cli.out.clone().unwrap_or_else(|| args.model.clone());
    fs::create_dir_all(&out).map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
    write_json(&out.join(METRICS_FILE), &report)
}

fn predict(args: &PredictArgs) -> Result<(), CliError> {
    let loaded = load_model(&args.model)?;
    let input = loaded.dataset(&args.input, args.input_labels.as_deref(), None)?;
    let predictor = loaded.model.predictor(input.schema()).map_err(CliError::runtime)?;
    let mut out = String::new();
    for row in 0..input.rows() {
        out.push_str(predictor.predict(&input, row));
        out.push('\n');
    }
    emit(&out)
}

#[derive(Serialize)]
struct RuleTrace {
    rule: String,
    /// Satisfied literals, in rule order.
    literals: Vec<String>,
}

#[derive(Serialize)]
struct LabelTrace {
    label: String,
    #[serde(flatten)]
    profile: MatchProfile,
    fired_rules: Vec<RuleTrace>,
}

#[derive(Serialize)]
struct Explanation {
    index: usize,
    predicted: String,
    /// `single`, `longest` or `partial`: which combination rule decided.
    decision: &'static str,
    labels: Vec<LabelTrace>,
}

fn explain(args: &ExplainArgs) -> Result<(), CliError> {
    let loaded = load_model(&args.model)?;
    let input = loaded.dataset(&args.input, args.input_labels.as_deref(), None)?;
    if args.index >= input.rows() {
        return Err(CliError::Config(format!(
            "index {} out of range for {} examples",
            args.index,
            input.rows()
        )));
    }
    let model = &loaded.model;
    let predictor = model.predictor(input.schema()).map_err(CliError::runtime)?;
    let profiles = predictor.profiles(&input, args.index);
    let mut labels = Vec::with_capacity(profiles.len());
    for ((rs, compiled), profile) in model.rulesets.iter().zip(predictor.compiled()).zip(&profiles) {
        let mut fired_rules = Vec::new();
        for (rule, c) in rs.rules().iter().zip(compiled.rules()) {
            let hits = c.trace(&input, args.index);
            if hits.iter().all(|&h| h) {
                let literals = rule
                    .literals()
                    .iter()
                    .map(render_literal)
                    .collect::<Result<_, _>>()
                    .map_err(CliError::runtime)?;
                fired_rules.push(RuleTrace {
                    rule: render_rule(rule).map_err(CliError::runtime)?,
                    literals,
                });
            }
        }
        labels.push(LabelTrace {
            label: rs.label().to_string(),
            profile: *profile,
            fired_rules,
        });
    }
    let fired = profiles.iter().filter(|p| p.fired).count();
    let decision = match fired {
        1 => "single",
        0 => "partial",
        _ => "longest",
    };
    let explanation = Explanation {
        index: args.index,
        predicted: predictor.predict(&input, args.index).to_string(),
        decision,
        labels,
    };
    let text = match args.format {
        Format::Json => serde_json::to_string_pretty(&explanation).map_err(CliError::runtime)? + "\n",
        Format::Text => format_explanation(&explanation),
    };
    emit(&text)
}

fn format_explanation(e: &Explanation) -> String {
    let mut out = String::new();
    let why = match e.decision {
        "single" => "the only rule set that fired",
        "longest" => "longest fired rule among several rule sets",
        _ => "no rule set fired; best partial match",
    };
    w!(out, "example {}: predicted {} ({why})", e.index, e.predicted);
    for l in &e.labels {
        if l.profile.fired {
            w!(
                out,
                "label {}: fired, {} rule(s), longest {} literals",
                l.label,
                l.fired_rules.len(),
                l.profile.longest_fired
            );
            for r in &l.fired_rules {
                w!(out, "  {}", r.rule);
            }
        } else {
            w!(
                out,
                "label {}: not fired, best partial {}",
                l.label,
                pct(l.profile.best_partial)
            );
        }
    }
    out
}

fn table_row(learner: &str, r: &MetricsReport, speedup: Option<f64>) -> String {
    format!(
        "{:<16} {:>10} {:>8} {:>9} {:>10} {:>8}",
        learner,
        format!("{:.2} s", r.wall_time_s),
        speedup.map(|s| format!("{s:.2}")).unwrap_or_default(),
        pct(r.accuracy),
        pct(r.macro_precision),
        pct(r.macro_recall)
    )
}

fn bench(cli: &Cli, args: &BenchArgs) -> Result<(), CliError> {
    if args.repeats == 0 {
        return Err(CliError::Config("repeats must be at least 1".into()));
    }
    let cfg = cli.resolve(&args.overrides)?;
    let (train, vocab) = train_split(&cfg)?;
    let test_path = cfg
        .test
        .as_deref()
        .ok_or_else(|| CliError::Config("no test dataset given (--test or \"test\" in the config)".into()))?;
    let (test, _) = dataset::load(
        &cfg.dataset,
        test_path,
        cfg.test_labels.as_deref(),
        vocab.as_ref(),
        cfg.test_limit,
    )?;
    let report: BenchmarkReport = benchmark(&train, &test, &cfg.pipeline, args.repeats).map_err(CliError::runtime)?;
    let name = serde_json::to_value(cfg.pipeline.learner)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    let mut text = String::new();
    w!(
        text,
        "{:<16} {:>10} {:>8} {:>9} {:>10} {:>8}",
        "learner",
        "time",
        "speedup",
        "accuracy",
        "precision",
        "recall"
    );
    w!(text, "{}", table_row(&name, &report.monolithic, None));
    w!(
        text,
        "{}",
        table_row(&format!("{name} - mod."), &report.modular, Some(report.speedup))
    );
    w!(
        text,
        "median of {} run(s), parallelism {}",
        report.repeats,
        cfg.pipeline.parallelism
    );
    if let Some(out) = &cfg.out {
        fs::create_dir_all(out).map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
        write_json(&out.join(BENCH_FILE), &report)?;
    }
    emit(&text)
}
