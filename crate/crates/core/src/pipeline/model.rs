use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PipelineConfig, PipelineError};
use crate::data::{sanitize_name, FeatureMatrix, RowRef, Schema};
use crate::rules::{match_profile, parse_ruleset, serialize_ruleset, CompiledRuleSet, MatchProfile, RuleSet};

/// Wall-clock seconds per training phase.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub represent_s: f64,
    pub cluster_s: f64,
    pub learn_s: f64,
    pub total_s: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MulticlassModel {
    pub label_order: Vec<String>,
    /// One per label, in `label_order`.
    pub rulesets: Vec<RuleSet>,
    pub config: PipelineConfig,
    pub schema: Schema,
    pub timings: Timings,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    config: PipelineConfig,
    label_order: Vec<String>,
    schema: Schema,
}

/// Picks a label index from per-label profiles: the only firing label, else
/// the label with the longest firing rule, else the best partial match.
/// Remaining ties go to the earliest label.
pub fn combine_profiles(profiles: &[MatchProfile]) -> usize {
    let fired: Vec<usize> = (0..profiles.len()).filter(|&i| profiles[i].fired).collect();
    match fired.len() {
        1 => fired[0],
        0 => {
            let mut best = 0;
            for (i, p) in profiles.iter().enumerate() {
                if p.best_partial > profiles[best].best_partial {
                    best = i;
                }
            }
            best
        }
        _ => {
            let mut best = fired[0];
            for &i in &fired[1..] {
                if profiles[i].longest_fired > profiles[best].longest_fired {
                    best = i;
                }
            }
            best
        }
    }
}

/// Predicted label for a single row, evaluating literals by attribute name.
pub fn multiclass_predict<'m>(model: &'m MulticlassModel, row: &RowRef<'_>) -> Result<&'m str, PipelineError> {
    let profiles = model
        .rulesets
        .iter()
        .map(|rs| match_profile(rs, row))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(&model.label_order[combine_profiles(&profiles)])
}

/// Rule sets compiled against a matrix schema for fast bulk prediction.
pub struct Predictor<'m> {
    model: &'m MulticlassModel,
    compiled: Vec<CompiledRuleSet>,
}

impl<'m> Predictor<'m> {
    pub fn new(model: &'m MulticlassModel, schema: &Schema) -> Result<Self, PipelineError> {
        let compiled = model
            .rulesets
            .iter()
            .map(|rs| CompiledRuleSet::compile(rs, schema))
            .collect::<Result<_, _>>()?;
        Ok(Predictor { model, compiled })
    }

    pub fn profiles(&self, m: &FeatureMatrix, row: usize) -> Vec<MatchProfile> {
        self.compiled.iter().map(|c| c.profile(m, row)).collect()
    }

    pub fn predict_index(&self, m: &FeatureMatrix, row: usize) -> usize {
        combine_profiles(&self.profiles(m, row))
    }

    pub fn predict(&self, m: &FeatureMatrix, row: usize) -> &'m str {
        &self.model.label_order[self.predict_index(m, row)]
    }

    pub fn compiled(&self) -> &[CompiledRuleSet] {
        &self.compiled
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

impl MulticlassModel {
    pub fn rules_file_name(label: &str) -> String {
        format!("label_{}.rules", sanitize_name(label))
    }

    pub fn predictor(&self, schema: &Schema) -> Result<Predictor<'_>, PipelineError> {
        Predictor::new(self, schema)
    }

    /// Writes `config.json`, `timings.json` and one `label_<l>.rules` per label.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), PipelineError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let mut names = HashSet::new();
        for rs in &self.rulesets {
            let name = Self::rules_file_name(rs.label());
            if !names.insert(name.clone()) {
                return Err(io_err(&dir.join(&name), "two labels map to the same file name"));
            }
            let path = dir.join(name);
            fs::write(&path, serialize_ruleset(rs)?).map_err(|e| io_err(&path, e))?;
        }
        write_json(
            &dir.join("config.json"),
            &Manifest {
                config: self.config.clone(),
                label_order: self.label_order.clone(),
                schema: self.schema.clone(),
            },
        )?;
        write_json(&dir.join("timings.json"), &self.timings)
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let dir = dir.as_ref();
        let manifest: Manifest = read_json(&dir.join("config.json"))?;
        let mut rulesets = Vec::with_capacity(manifest.label_order.len());
        for label in &manifest.label_order {
            let path = dir.join(Self::rules_file_name(label));
            let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
            let rs = parse_ruleset(&text).map_err(|e| io_err(&path, e))?;
            if rs.label() != label {
                return Err(io_err(
                    &path,
                    format!("holds label `{}`, expected `{label}`", rs.label()),
                ));
            }
            rulesets.push(rs);
        }
        let timings = read_json(&dir.join("timings.json")).unwrap_or_default();
        Ok(MulticlassModel {
            label_order: manifest.label_order,
            rulesets,
            config: manifest.config,
            schema: manifest.schema,
            timings,
        })
    }
}
