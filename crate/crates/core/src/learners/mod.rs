//! Rule induction: FOIL, IREP and RIPPER over one-vs-rest binary tasks.

mod engine;

use thiserror::Error;

use crate::bits::Bits;
use crate::data::FeatureMatrix;
use crate::rules::{Check, Literal, Rule, RuleError, RuleSet};
use crate::seed::rng;

use engine::{Cond, Engine, Learned};

pub const DEFAULT_RULE_CAP: usize = 20;
pub const DEFAULT_GROW_FRACTION: f64 = 2.0 / 3.0;
pub const DEFAULT_RIPPER_K: usize = 2;
/// Slack, in bits, over the best description length before rule generation stops.
pub const DL_SLACK_BITS: f64 = 64.0;

#[derive(Debug, Error, PartialEq)]
pub enum TaskError {
    #[error("row {0} is both positive and negative")]
    Overlap(usize),
    #[error("row {row} out of range for {rows} rows")]
    OutOfRange { row: usize, rows: usize },
}

/// Positive and negative rows of a matrix, learned against a single head.
#[derive(Clone, Debug)]
pub struct BinaryTask<'a> {
    pub data: &'a FeatureMatrix,
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
    pub label: String,
    pub head: String,
}

impl<'a> BinaryTask<'a> {
    pub fn new(
        data: &'a FeatureMatrix,
        positives: Vec<usize>,
        negatives: Vec<usize>,
        label: impl Into<String>,
        head: impl Into<String>,
    ) -> Result<Self, TaskError> {
        let rows = data.rows();
        let mut seen = Bits::zeros(rows);
        for &row in positives.iter().chain(&negatives) {
            if row >= rows {
                return Err(TaskError::OutOfRange { row, rows });
            }
            if seen.get(row) {
                return Err(TaskError::Overlap(row));
            }
            seen.set(row, true);
        }
        Ok(BinaryTask {
            data,
            positives,
            negatives,
            label: label.into(),
            head: head.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnerConfig {
    pub rule_cap: usize,
    /// `None` means one literal per attribute.
    pub max_literals_per_rule: Option<usize>,
    pub min_gain: f64,
    pub grow_fraction: f64,
    pub ripper_k: usize,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            rule_cap: DEFAULT_RULE_CAP,
            max_literals_per_rule: None,
            min_gain: 0.0,
            grow_fraction: DEFAULT_GROW_FRACTION,
            ripper_k: DEFAULT_RIPPER_K,
            seed: 0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.rule_cap == 0 {
            return Err("rule_cap must be at least 1".into());
        }
        if !(self.grow_fraction > 0.0 && self.grow_fraction < 1.0) {
            return Err(format!("grow_fraction must be in (0, 1), got {}", self.grow_fraction));
        }
        if !(self.min_gain >= 0.0) {
            return Err(format!("min_gain must be >= 0, got {}", self.min_gain));
        }
        if self.max_literals_per_rule == Some(0) {
            return Err("max_literals_per_rule must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CoverageCounts {
    pub p: usize,
    pub n: usize,
}

impl CoverageCounts {
    /// `(p - n) / (p + n)`, or -1 when nothing is covered.
    pub fn prune_metric(&self) -> f64 {
        prune_metric(self.p, self.n)
    }
}

pub(crate) fn prune_metric(p: usize, n: usize) -> f64 {
    if p + n == 0 {
        -1.0
    } else {
        (p as f64 - n as f64) / (p + n) as f64
    }
}

/// Quinlan's information gain for refining a rule covering (p0, n0) to one covering (p1, n1).
pub fn foil_gain(p0: usize, n0: usize, p1: usize, n1: usize) -> f64 {
    if p1 == 0 {
        return 0.0;
    }
    let before = (p0 as f64 / (p0 + n0) as f64).log2();
    let after = (p1 as f64 / (p1 + n1) as f64).log2();
    p1 as f64 * (after - before)
}

fn compile_rule(rule: &Rule, data: &FeatureMatrix) -> Result<Vec<Cond>, RuleError> {
    rule.literals()
        .iter()
        .map(|lit| {
            Ok(Cond {
                check: Check::compile(lit, data.schema())?,
                literal: lit.clone(),
            })
        })
        .collect()
}

fn to_rule(head: &str, conds: &[Cond]) -> Rule {
    Rule::new(head, conds.iter().map(|c| c.literal.clone()).collect()).expect("learners never repeat a slot")
}

fn to_ruleset(task: &BinaryTask<'_>, learned: &[Learned]) -> RuleSet {
    RuleSet::new(
        task.label.clone(),
        task.head.clone(),
        learned.iter().map(|l| to_rule(&task.head, &l.conds)).collect(),
    )
    .expect("heads agree")
}

/// All literals that could extend `rule`, with numeric thresholds taken from `rows`.
/// Ordered by attribute, then form.
pub fn candidate_literals(data: &FeatureMatrix, rule: &Rule, rows: &[usize]) -> Result<Vec<Literal>, RuleError> {
    let used = compile_rule(rule, data)?;
    let scope = Bits::from_indices(data.rows(), rows.iter().copied());
    let empty = Bits::zeros(data.rows());
    let mut out = Vec::new();
    engine::for_each_candidate(data, &used, &scope, &empty, |check, _, _| {
        out.push(check.to_literal(data.schema()));
    });
    Ok(out)
}

/// Rows of the task (positives and negatives) covered by `rule`.
pub fn rule_coverage(rule: &Rule, task: &BinaryTask<'_>) -> Result<CoverageCounts, RuleError> {
    let conds = compile_rule(rule, task.data)?;
    let engine = Engine::new(task, &LearnerConfig::default());
    let mask = engine.cover(&conds);
    Ok(CoverageCounts {
        p: mask.and_count(engine.pos()),
        n: mask.and_count(engine.neg()),
    })
}

pub fn foil_learn(task: &BinaryTask<'_>, cfg: &LearnerConfig) -> RuleSet {
    let engine = Engine::new(task, cfg);
    to_ruleset(task, &engine.foil(cfg.rule_cap))
}

/// Greedy refinement of `seed_rule` on the task until it covers no negatives,
/// no literal gains, or the literal budget runs out.
pub fn grow_rule(grow: &BinaryTask<'_>, seed_rule: &Rule, cfg: &LearnerConfig) -> Result<Rule, RuleError> {
    let seed = compile_rule(seed_rule, grow.data)?;
    let engine = Engine::new(grow, cfg);
    let conds = engine.grow(&seed, engine.pos(), engine.neg());
    Ok(to_rule(seed_rule.head(), &conds))
}

/// Best non-empty prefix of `rule` by `(p - n) / (p + n)` on the pruning task; ties keep the longer prefix.
pub fn prune_rule(rule: &Rule, prune: &BinaryTask<'_>) -> Result<Rule, RuleError> {
    let conds = compile_rule(rule, prune.data)?;
    let engine = Engine::new(prune, &LearnerConfig::default());
    let kept = engine.prune(conds, engine.pos(), engine.neg());
    Ok(to_rule(rule.head(), &kept))
}

/// Model bits plus exception bits of `rules` on all task examples.
pub fn description_length(rules: &RuleSet, task: &BinaryTask<'_>) -> Result<f64, RuleError> {
    let engine = Engine::new(task, &LearnerConfig::default());
    let learned = rules
        .rules()
        .iter()
        .map(|r| {
            let conds = compile_rule(r, task.data)?;
            Ok(engine.learned(conds))
        })
        .collect::<Result<Vec<_>, RuleError>>()?;
    Ok(engine.dl(&learned))
}

pub fn irep_learn(task: &BinaryTask<'_>, cfg: &LearnerConfig) -> RuleSet {
    let engine = Engine::new(task, cfg);
    let mut rng = rng(cfg.seed);
    to_ruleset(task, &engine.generate(cfg, &mut rng))
}

pub fn ripper_learn(task: &BinaryTask<'_>, cfg: &LearnerConfig) -> RuleSet {
    let engine = Engine::new(task, cfg);
    let mut rng = rng(cfg.seed);
    let mut rules = engine.generate(cfg, &mut rng);
    for _ in 0..cfg.ripper_k {
        rules = engine.optimize(rules, cfg, &mut rng);
    }
    to_ruleset(task, &rules)
}

/// One optimization pass: each rule, in order, may be swapped for a replacement
/// or a revision if that lowers the description length.
pub fn optimize_ruleset(rules: &RuleSet, task: &BinaryTask<'_>, cfg: &LearnerConfig) -> Result<RuleSet, RuleError> {
    let engine = Engine::new(task, cfg);
    let learned = rules
        .rules()
        .iter()
        .map(|r| Ok(engine.learned(compile_rule(r, task.data)?)))
        .collect::<Result<Vec<_>, RuleError>>()?;
    let mut rng = rng(cfg.seed);
    let out = engine.optimize(learned, cfg, &mut rng);
    Ok(RuleSet::new(
        rules.label(),
        rules.head(),
        out.iter().map(|l| to_rule(rules.head(), &l.conds)).collect(),
    )
    .expect("heads agree"))
}

#[cfg(test)]
mod tests;
