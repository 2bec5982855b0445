//! Tag types, enrichment functions, and the on-disk query configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::dataset::Condition;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreModelKind {
    #[default]
    Binormal,
}

/// One enrichment function of a tag type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnrichmentFunctionSpec {
    pub id: String,
    pub tag_type: String,
    /// AUC in (0.5, 1].
    pub quality: f64,
    /// Logical time units charged per invocation.
    pub cost: f64,
    #[serde(default)]
    pub model: ScoreModelKind,
    /// Relative per-call cost noise in [0, 1). Zero gives a constant cost.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub cost_jitter: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl EnrichmentFunctionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.quality > 0.5 && self.quality <= 1.0) {
            return Err(Error::Config(format!(
                "function `{}`: quality {} not in (0.5, 1]",
                self.id, self.quality
            )));
        }
        if !(self.cost > 0.0 && self.cost.is_finite()) {
            return Err(Error::Config(format!("function `{}`: cost must be > 0", self.id)));
        }
        if !(0.0..1.0).contains(&self.cost_jitter) {
            return Err(Error::Config(format!("function `{}`: cost_jitter not in [0, 1)", self.id)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TagType {
    pub id: String,
    pub tags: Vec<String>,
    /// Functions in state-vector order.
    pub functions: Vec<EnrichmentFunctionSpec>,
    /// Truth prior per tag, used only by the dataset generator.
    pub priors: Option<Vec<f64>>,
}

impl TagType {
    pub fn tag_index(&self, tag: &str) -> Option<usize> {
        self.tags.iter().position(|t| t == tag)
    }

    pub fn function_index(&self, id: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.id == id)
    }

    /// Base rate of a tag: the normalized prior, uniform when none is given.
    pub fn prior(&self, tag: usize) -> f64 {
        match &self.priors {
            Some(p) if p.iter().sum::<f64>() > 0.0 => p[tag] / p.iter().sum::<f64>(),
            _ => 1.0 / self.tags.len() as f64,
        }
    }
}

/// Validated set of tag types.
#[derive(Clone, Debug, PartialEq)]
pub struct Schema {
    pub tag_types: Vec<TagType>,
}

impl Schema {
    pub fn new(tag_types: Vec<TagType>) -> Result<Self> {
        for tt in &tag_types {
            if tt.tags.is_empty() {
                return Err(Error::Config(format!("tag type `{}` has no tags", tt.id)));
            }
            if tt.functions.len() > crate::model::StateVector::MAX_FUNCTIONS {
                return Err(Error::Config(format!("tag type `{}` has too many functions", tt.id)));
            }
            for f in &tt.functions {
                f.validate()?;
                if f.tag_type != tt.id {
                    return Err(Error::Config(format!(
                        "function `{}` declares tag type `{}` but is listed under `{}`",
                        f.id, f.tag_type, tt.id
                    )));
                }
            }
            if let Some(p) = &tt.priors {
                if p.len() != tt.tags.len() || p.iter().any(|x| *x < 0.0) {
                    return Err(Error::Config(format!("tag type `{}`: bad priors", tt.id)));
                }
            }
        }
        Ok(Schema { tag_types })
    }

    pub fn tag_type_index(&self, id: &str) -> Option<usize> {
        self.tag_types.iter().position(|t| t.id == id)
    }

    pub fn tag_type(&self, id: &str) -> Option<&TagType> {
        self.tag_types.iter().find(|t| t.id == id)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TagTypeConfig {
    pub id: String,
    pub tags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priors: Option<Vec<f64>>,
}

/// The JSON configuration file: schema, expression and precise conditions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QueryConfig {
    pub tag_types: Vec<TagTypeConfig>,
    /// Function order within a tag type fixes state-vector positions.
    pub functions: Vec<EnrichmentFunctionSpec>,
    pub expression: String,
    #[serde(default)]
    pub precise: BTreeMap<String, Condition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Labeled validation objects (JSON lines), relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<PathBuf>,
}

impl QueryConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: QueryConfig = serde_json::from_str(&text)?;
        if let (Some(v), Some(dir)) = (&cfg.validation, path.parent()) {
            if v.is_relative() {
                cfg.validation = Some(dir.join(v));
            }
        }
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn schema(&self) -> Result<Schema> {
        let mut tag_types = Vec::with_capacity(self.tag_types.len());
        for tt in &self.tag_types {
            if tag_types.iter().any(|t: &TagType| t.id == tt.id) {
                return Err(Error::Config(format!("duplicate tag type `{}`", tt.id)));
            }
            tag_types.push(TagType {
                id: tt.id.clone(),
                tags: tt.tags.clone(),
                functions: Vec::new(),
                priors: tt.priors.clone(),
            });
        }
        for f in &self.functions {
            let tt = tag_types
                .iter_mut()
                .find(|t| t.id == f.tag_type)
                .ok_or_else(|| Error::UnknownTagType(f.tag_type.clone()))?;
            if tt.function_index(&f.id).is_some() {
                return Err(Error::Config(format!("duplicate function `{}`", f.id)));
            }
            tt.functions.push(f.clone());
        }
        Schema::new(tag_types)
    }
}
