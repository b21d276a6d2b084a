use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{train_multiclass, MulticlassModel, PipelineConfig, PipelineError};
use crate::data::FeatureMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub support: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub per_label: Vec<LabelMetrics>,
    /// `confusion[actual][predicted]`, indexed by `labels`.
    pub confusion: Vec<Vec<usize>>,
    pub labels: Vec<String>,
    pub wall_time_s: f64,
    pub speedup_vs_baseline: Option<f64>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl MetricsReport {
    pub fn from_confusion(labels: Vec<String>, confusion: Vec<Vec<usize>>) -> Self {
        let k = labels.len();
        let total: usize = confusion.iter().flatten().sum();
        let correct: usize = (0..k).map(|i| confusion[i][i]).sum();
        let per_label: Vec<LabelMetrics> = (0..k)
            .map(|i| {
                let predicted: usize = (0..k).map(|a| confusion[a][i]).sum();
                let support: usize = confusion[i].iter().sum();
                LabelMetrics {
                    label: labels[i].clone(),
                    precision: ratio(confusion[i][i], predicted),
                    recall: ratio(confusion[i][i], support),
                    support,
                }
            })
            .collect();
        let mean = |f: fn(&LabelMetrics) -> f64| {
            if k == 0 {
                0.0
            } else {
                per_label.iter().map(f).sum::<f64>() / k as f64
            }
        };
        let accuracy = ratio(correct, total);
        MetricsReport {
            accuracy,
            macro_precision: mean(|l| l.precision),
            macro_recall: mean(|l| l.recall),
            // every example gets exactly one prediction
            micro_precision: accuracy,
            micro_recall: accuracy,
            per_label,
            confusion,
            labels,
            wall_time_s: 0.0,
            speedup_vs_baseline: None,
        }
    }

    pub fn label(&self, label: &str) -> Option<&LabelMetrics> {
        self.per_label.iter().find(|l| l.label == label)
    }
}

pub fn evaluate(model: &MulticlassModel, test: &FeatureMatrix) -> Result<MetricsReport, PipelineError> {
    if test.rows() == 0 {
        return Err(PipelineError::EmptyEvaluation);
    }
    if !model.schema.compatible_with(test.schema()) {
        return Err(PipelineError::SchemaMismatch);
    }
    let predictor = model.predictor(test.schema())?;
    let k = model.label_order.len();
    let mut confusion = vec![vec![0usize; k]; k];
    for row in 0..test.rows() {
        let actual = test.labels()[row].as_str();
        let a = model
            .label_order
            .iter()
            .position(|l| l == actual)
            .ok_or_else(|| PipelineError::UnknownLabel(actual.to_string()))?;
        confusion[a][predictor.predict_index(test, row)] += 1;
    }
    Ok(MetricsReport::from_confusion(model.label_order.clone(), confusion))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub modular: MetricsReport,
    pub monolithic: MetricsReport,
    /// Monolithic over modular median training time.
    pub speedup: f64,
    pub repeats: usize,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn timed_run(
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    cfg: &PipelineConfig,
    repeats: usize,
) -> Result<MetricsReport, PipelineError> {
    let mut times = Vec::with_capacity(repeats);
    let mut model = None;
    for _ in 0..repeats.max(1) {
        let started = Instant::now();
        let m = train_multiclass(train, cfg)?;
        times.push(started.elapsed().as_secs_f64());
        model = Some(m);
    }
    let mut report = evaluate(&model.expect("at least one run"), test)?;
    report.wall_time_s = median(times);
    Ok(report)
}

/// Modular run of `cfg` against its monolithic counterpart, same seed and parallelism.
pub fn benchmark(
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    cfg: &PipelineConfig,
    repeats: usize,
) -> Result<BenchmarkReport, PipelineError> {
    let modular_cfg = PipelineConfig {
        modular: true,
        ..cfg.clone()
    };
    let mut modular = timed_run(train, test, &modular_cfg, repeats)?;
    let monolithic = timed_run(train, test, &cfg.monolithic(), repeats)?;
    let speedup = monolithic.wall_time_s / modular.wall_time_s.max(f64::MIN_POSITIVE);
    modular.speedup_vs_baseline = Some(speedup);
    Ok(BenchmarkReport {
        modular,
        monolithic,
        speedup,
        repeats: repeats.max(1),
    })
}
