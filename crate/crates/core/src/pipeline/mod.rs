//! End-to-end training: one-vs-rest tasks, optional PCA + k-means input
//! selection, parallel per-cluster rule learning and multiclass combination.

mod metrics;
mod model;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{
    build_cluster_tasks, kmeans, select_negative_representatives, ClusterError, ClusterTask, Clustering,
    DEFAULT_NEG_CLUSTERS, DEFAULT_NEG_FRACTION, DEFAULT_POS_CLUSTERS,
};
use crate::data::{sanitize_name, FeatureMatrix};
use crate::learners::{
    foil_learn, irep_learn, ripper_learn, BinaryTask, LearnerConfig, TaskError, DEFAULT_GROW_FRACTION,
    DEFAULT_RIPPER_K, DEFAULT_RULE_CAP,
};
use crate::represent::{pca_fit_rows, pca_transform_rows, EmbeddedMatrix, PcaError, DEFAULT_COMPONENTS};
use crate::rules::{RuleError, RuleSet};
use crate::seed::derive_seed;

pub use metrics::{benchmark, evaluate, BenchmarkReport, LabelMetrics, MetricsReport};
pub use model::{combine_profiles, multiclass_predict, MulticlassModel, Predictor, Timings};

const POS_KMEANS_STREAM: u64 = 1 << 32;
const NEG_KMEANS_STREAM: u64 = (1 << 32) + 1;
const NEG_SAMPLE_STREAM: u64 = (1 << 32) + 2;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("need at least two distinct labels, found {0}")]
    SingleLabel(usize),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Pca(#[from] PcaError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error("dataset attributes do not match the model schema")]
    SchemaMismatch,
    #[error("evaluation set is empty")]
    EmptyEvaluation,
    #[error("label `{0}` was not seen in training")]
    UnknownLabel(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Learner {
    Foil,
    Irep,
    Ripper,
}

impl Learner {
    pub fn run(self, task: &BinaryTask<'_>, cfg: &LearnerConfig) -> RuleSet {
        match self {
            Learner::Foil => foil_learn(task, cfg),
            Learner::Irep => irep_learn(task, cfg),
            Learner::Ripper => ripper_learn(task, cfg),
        }
    }
}

impl std::str::FromStr for Learner {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "foil" => Ok(Learner::Foil),
            "irep" => Ok(Learner::Irep),
            "ripper" => Ok(Learner::Ripper),
            other => Err(format!("unknown learner `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub learner: Learner,
    pub modular: bool,
    pub pos_clusters: usize,
    pub neg_clusters: usize,
    /// Ignored (treated as 1.0) for FOIL.
    pub neg_fraction: f64,
    pub pca_k: usize,
    /// Fit PCA on every matrix row rather than on the task's rows. The two
    /// coincide for one-vs-rest tasks, which span all rows.
    pub global_pca: bool,
    pub rule_cap_per_cluster: usize,
    pub parallelism: usize,
    pub seed: u64,
    pub ripper_k: usize,
    pub grow_fraction: f64,
    pub min_gain: f64,
    pub max_literals_per_rule: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            learner: Learner::Foil,
            modular: true,
            pos_clusters: DEFAULT_POS_CLUSTERS,
            neg_clusters: DEFAULT_NEG_CLUSTERS,
            neg_fraction: DEFAULT_NEG_FRACTION,
            pca_k: DEFAULT_COMPONENTS,
            global_pca: false,
            rule_cap_per_cluster: DEFAULT_RULE_CAP,
            parallelism: 1,
            seed: 0,
            ripper_k: DEFAULT_RIPPER_K,
            grow_fraction: DEFAULT_GROW_FRACTION,
            min_gain: 0.0,
            max_literals_per_rule: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.pos_clusters == 0 {
            return bad("pos_clusters must be at least 1".into());
        }
        if self.neg_clusters == 0 {
            return bad("neg_clusters must be at least 1".into());
        }
        if !(self.neg_fraction > 0.0 && self.neg_fraction <= 1.0) {
            return bad(format!("neg_fraction must be in (0, 1], got {}", self.neg_fraction));
        }
        if self.parallelism == 0 {
            return bad("parallelism must be at least 1".into());
        }
        self.learner_config(0).validate().map_err(PipelineError::Config)
    }

    /// Negative sampling fraction actually used.
    pub fn effective_neg_fraction(&self) -> f64 {
        match self.learner {
            Learner::Foil => 1.0,
            _ => self.neg_fraction,
        }
    }

    fn needs_embedding(&self) -> bool {
        self.modular && (self.pos_clusters > 1 || self.effective_neg_fraction() < 1.0)
    }

    /// Learner settings for one invocation; monolithic runs get the cap of all clusters combined.
    pub fn learner_config(&self, seed: u64) -> LearnerConfig {
        let rule_cap = if self.modular {
            self.rule_cap_per_cluster
        } else {
            self.rule_cap_per_cluster.saturating_mul(self.pos_clusters)
        };
        LearnerConfig {
            rule_cap,
            max_literals_per_rule: self.max_literals_per_rule,
            min_gain: self.min_gain,
            grow_fraction: self.grow_fraction,
            ripper_k: self.ripper_k,
            seed,
        }
    }

    pub fn monolithic(&self) -> PipelineConfig {
        PipelineConfig {
            modular: false,
            ..self.clone()
        }
    }
}

/// Rule head used for a label's rule set.
pub fn head_for(label: &str) -> String {
    format!("label_{}", sanitize_name(label))
}

/// One-vs-rest tasks in label order.
pub fn build_binary_tasks(matrix: &FeatureMatrix) -> Result<Vec<BinaryTask<'_>>, PipelineError> {
    let order = matrix.label_order();
    if order.len() < 2 {
        return Err(PipelineError::SingleLabel(order.len()));
    }
    order
        .iter()
        .map(|label| {
            let (pos, neg): (Vec<usize>, Vec<usize>) = (0..matrix.rows()).partition(|&r| &matrix.labels()[r] == label);
            Ok(BinaryTask::new(matrix, pos, neg, label.clone(), head_for(label))?)
        })
        .collect()
}

/// PCA embedding of some matrix rows, addressable by matrix row.
struct RowEmbedding {
    points: EmbeddedMatrix,
    position: Vec<usize>,
}

impl RowEmbedding {
    fn fit(matrix: &FeatureMatrix, rows: &[usize], k: usize) -> Result<Self, PipelineError> {
        let k = k.min(matrix.width()).min(rows.len().saturating_sub(1));
        let model = pca_fit_rows(matrix, rows, k)?;
        let points = pca_transform_rows(&model, matrix, rows)?;
        let mut position = vec![usize::MAX; matrix.rows()];
        for (i, &r) in rows.iter().enumerate() {
            position[r] = i;
        }
        Ok(RowEmbedding { points, position })
    }

    fn subset(&self, rows: &[usize]) -> EmbeddedMatrix {
        let positions: Vec<usize> = rows.iter().map(|&r| self.position[r]).collect();
        self.points.subset(&positions)
    }
}

fn single_cluster(n: usize) -> Clustering {
    Clustering {
        assignments: vec![0; n],
        centroids: vec![Vec::new()],
        inertia: 0.0,
        inertia_history: Vec::new(),
    }
}

/// Input selection for one binary task: positive clusters plus shared negative representatives.
fn select_inputs(
    task: &BinaryTask<'_>,
    cfg: &PipelineConfig,
    embedding: Option<&RowEmbedding>,
) -> Result<Vec<ClusterTask>, PipelineError> {
    if task.positives.is_empty() {
        return Ok(Vec::new());
    }
    if !cfg.modular {
        return Ok(vec![ClusterTask {
            cluster_id: 0,
            positives: task.positives.clone(),
            negatives: task.negatives.clone(),
            rule_cap: cfg.learner_config(0).rule_cap,
        }]);
    }
    let k_pos = cfg.pos_clusters.min(task.positives.len());
    let pos = if k_pos > 1 {
        let emb = embedding.expect("embedding computed when clustering");
        kmeans(
            &emb.subset(&task.positives),
            k_pos,
            derive_seed(cfg.seed, POS_KMEANS_STREAM),
        )?
    } else {
        single_cluster(task.positives.len())
    };
    let fraction = cfg.effective_neg_fraction();
    let negatives = if fraction >= 1.0 || task.negatives.is_empty() {
        task.negatives.clone()
    } else {
        let emb = embedding.expect("embedding computed when sampling");
        let k_neg = cfg.neg_clusters.min(task.negatives.len());
        let neg = kmeans(
            &emb.subset(&task.negatives),
            k_neg,
            derive_seed(cfg.seed, NEG_KMEANS_STREAM),
        )?;
        select_negative_representatives(&neg, fraction, derive_seed(cfg.seed, NEG_SAMPLE_STREAM))
            .into_iter()
            .map(|i| task.negatives[i])
            .collect()
    };
    Ok(build_cluster_tasks(task, &pos, &negatives, cfg.rule_cap_per_cluster))
}

fn pool(parallelism: usize) -> Result<rayon::ThreadPool, PipelineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))
}

fn learn_cluster(task: &BinaryTask<'_>, ct: &ClusterTask, cfg: &PipelineConfig) -> Result<RuleSet, PipelineError> {
    let mut rows: Vec<usize> = ct.positives.iter().chain(&ct.negatives).copied().collect();
    rows.sort_unstable();
    // a cluster usually covers a fraction of the rows; learning on a compact
    // copy keeps the bitsets short. The map is monotone, so row order holds.
    let compact = (rows.len() * 2 <= task.data.rows()).then(|| task.data.select_rows(&rows));
    let data = compact.as_ref().unwrap_or(task.data);
    let remap = |ids: &[usize]| -> Vec<usize> {
        match &compact {
            Some(_) => ids
                .iter()
                .map(|r| rows.binary_search(r).expect("row in union"))
                .collect(),
            None => ids.to_vec(),
        }
    };
    let sub = BinaryTask::new(
        data,
        remap(&ct.positives),
        remap(&ct.negatives),
        task.label.clone(),
        task.head.clone(),
    )?;
    let mut lcfg = cfg.learner_config(derive_seed(cfg.seed, ct.cluster_id as u64));
    lcfg.rule_cap = ct.rule_cap;
    Ok(cfg.learner.run(&sub, &lcfg))
}

/// Train several binary tasks; clusters of all tasks share one worker pool.
fn train_tasks(
    tasks: &[BinaryTask<'_>],
    cfg: &PipelineConfig,
    embedding: Option<&RowEmbedding>,
    timings: &mut Timings,
) -> Result<Vec<RuleSet>, PipelineError> {
    cfg.validate()?;
    let workers = pool(cfg.parallelism)?;

    let started = Instant::now();
    let selections: Vec<Vec<ClusterTask>> = workers.install(|| {
        tasks
            .par_iter()
            .map(|t| select_inputs(t, cfg, embedding))
            .collect::<Result<_, _>>()
    })?;
    timings.cluster_s += started.elapsed().as_secs_f64();

    let started = Instant::now();
    let jobs: Vec<(usize, &ClusterTask)> = selections
        .iter()
        .enumerate()
        .flat_map(|(t, cts)| cts.iter().map(move |ct| (t, ct)))
        .collect();
    let learned: Vec<RuleSet> = workers.install(|| {
        jobs.par_iter()
            .map(|&(t, ct)| learn_cluster(&tasks[t], ct, cfg))
            .collect::<Result<_, _>>()
    })?;
    timings.learn_s += started.elapsed().as_secs_f64();

    let mut merged: Vec<RuleSet> = tasks
        .iter()
        .map(|t| RuleSet::empty(t.label.clone(), t.head.clone()))
        .collect();
    for ((t, _), rs) in jobs.iter().zip(learned) {
        merged[*t].extend(rs)?;
    }
    Ok(merged)
}

fn task_rows(task: &BinaryTask<'_>) -> Vec<usize> {
    let mut rows: Vec<usize> = task.positives.iter().chain(&task.negatives).copied().collect();
    rows.sort_unstable();
    rows
}

/// Rule set for one binary task. Learners always see the original attributes.
pub fn train_binary(task: &BinaryTask<'_>, cfg: &PipelineConfig) -> Result<RuleSet, PipelineError> {
    let mut timings = Timings::default();
    let embedding = if cfg.needs_embedding() && !task.positives.is_empty() {
        let rows = if cfg.global_pca {
            (0..task.data.rows()).collect()
        } else {
            task_rows(task)
        };
        Some(RowEmbedding::fit(task.data, &rows, cfg.pca_k)?)
    } else {
        None
    };
    let mut out = train_tasks(std::slice::from_ref(task), cfg, embedding.as_ref(), &mut timings)?;
    Ok(out.remove(0))
}

pub fn train_multiclass(matrix: &FeatureMatrix, cfg: &PipelineConfig) -> Result<MulticlassModel, PipelineError> {
    cfg.validate()?;
    let total = Instant::now();
    let tasks = build_binary_tasks(matrix)?;
    let mut timings = Timings::default();
    // every one-vs-rest task spans all rows, so a single fit serves all labels
    let embedding = if cfg.needs_embedding() {
        let started = Instant::now();
        let rows: Vec<usize> = (0..matrix.rows()).collect();
        let e = RowEmbedding::fit(matrix, &rows, cfg.pca_k)?;
        timings.represent_s = started.elapsed().as_secs_f64();
        Some(e)
    } else {
        None
    };
    let rulesets = train_tasks(&tasks, cfg, embedding.as_ref(), &mut timings)?;
    timings.total_s = total.elapsed().as_secs_f64();
    Ok(MulticlassModel {
        label_order: matrix.label_order(),
        rulesets,
        config: cfg.clone(),
        schema: matrix.schema().clone(),
        timings,
    })
}
