//! Synthetic datasets and the standard benchmark query.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::answer::Alpha;
use crate::engine::Session;
use crate::error::{Error, Result};
use crate::model::dataset::{read_jsonl, write_jsonl};
use crate::model::schema::TagTypeConfig;
use crate::model::{filter_precise, Condition, EnrichmentFunctionSpec, Expression, Object, QueryConfig, Schema, ScoreModelKind};
use crate::planner::DEFAULT_BUCKETS;
use crate::scalar::Scalar;
use crate::sim::{LearnedParams, Simulator, ValidationSet};

/// Attribute the selectivity conditions range over.
pub const SELECTIVITY_KEY: &str = "sel_key";
pub const KEY_SPAN: f64 = 10_000.0;

/// Parameters of a generated dataset.
#[derive(Clone, Debug)]
pub struct GenSpec {
    pub n: usize,
    pub n_validation: usize,
    pub seed: u64,
    pub tag_types: Vec<TagTypeConfig>,
    pub functions: Vec<EnrichmentFunctionSpec>,
    pub expression: String,
    /// Fraction of objects passing the precise condition.
    pub selectivity: f64,
    pub alpha: Option<f64>,
}

fn function(id: &str, tag_type: &str, quality: f64, cost: f64) -> EnrichmentFunctionSpec {
    EnrichmentFunctionSpec {
        id: id.into(),
        tag_type: tag_type.into(),
        quality,
        cost,
        model: ScoreModelKind::Binormal,
        cost_jitter: 0.0,
    }
}

impl GenSpec {
    /// One binary tag type with four functions of rising quality and cost,
    /// queried for one tag, over 2055 objects.
    pub fn standard(selectivity: f64, seed: u64) -> Self {
        GenSpec {
            n: 2055,
            n_validation: 2000,
            seed,
            tag_types: vec![TagTypeConfig {
                id: "Gender".into(),
                tags: vec!["Male".into(), "Female".into()],
                priors: Some(vec![0.5, 0.5]),
            }],
            functions: vec![
                function("gnb", "Gender", 0.70, 0.003),
                function("dt", "Gender", 0.62, 0.01),
                function("rf", "Gender", 0.84, 0.09),
                function("mlp", "Gender", 0.89, 0.25),
            ],
            expression: r#"Gender("Male")"#.into(),
            selectivity,
            alpha: None,
        }
    }

    pub fn config(&self) -> QueryConfig {
        let mut precise = BTreeMap::new();
        precise.insert(SELECTIVITY_KEY.to_string(), Condition::Range(0.0, self.selectivity * KEY_SPAN));
        QueryConfig {
            tag_types: self.tag_types.clone(),
            functions: self.functions.clone(),
            expression: self.expression.clone(),
            precise,
            alpha: self.alpha,
            validation: None,
        }
    }
}

/// Objects with stratified selectivity keys, so that a range covering a
/// fraction s of the key span selects round(s·n) objects up to one, and
/// truth tags drawn from the priors.
pub fn gen_objects(n: usize, prefix: &str, tag_types: &[TagTypeConfig], rng: &mut ChaCha8Rng) -> Vec<Object> {
    let mut slots: Vec<usize> = (0..n).collect();
    slots.shuffle(rng);
    (0..n)
        .map(|i| {
            let u: f64 = rng.random();
            let key = (slots[i] as f64 + u) / n as f64 * KEY_SPAN;
            let mut truth = BTreeMap::new();
            for tt in tag_types {
                let k = tt.tags.len();
                let priors = tt.priors.clone().unwrap_or_else(|| vec![1.0; k]);
                let total: f64 = priors.iter().sum();
                let mut x: f64 = rng.random::<f64>() * total;
                let mut pick = k - 1;
                for (j, p) in priors.iter().enumerate() {
                    if x < *p {
                        pick = j;
                        break;
                    }
                    x -= p;
                }
                truth.insert(tt.id.clone(), tt.tags[pick].clone());
            }
            Object {
                id: format!("{prefix}{i}"),
                precise: BTreeMap::from([(SELECTIVITY_KEY.to_string(), Value::from(key))]),
                truth,
            }
        })
        .collect()
}

/// A query with its data loaded in memory.
#[derive(Clone, Debug)]
pub struct Workload {
    pub config: QueryConfig,
    pub schema: Schema,
    pub expr: Expression,
    /// Objects passing the precise conditions.
    pub objects: Vec<Object>,
    pub validation: Vec<Object>,
}

impl Workload {
    pub fn new(config: QueryConfig, dataset: Vec<Object>, validation: Vec<Object>) -> Result<Self> {
        let schema = config.schema()?;
        let expr = Expression::parse(&config.expression, &schema)?;
        let keep = filter_precise(&dataset, &config.precise)?;
        let mut dataset: Vec<Option<Object>> = dataset.into_iter().map(Some).collect();
        let objects = keep.into_iter().map(|i| dataset[i].take().expect("indices are distinct")).collect();
        Ok(Workload { config, schema, expr, objects, validation })
    }

    pub fn generate(spec: &GenSpec) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let dataset = gen_objects(spec.n, "o", &spec.tag_types, &mut rng);
        let validation = gen_objects(spec.n_validation, "v", &spec.tag_types, &mut rng);
        Workload::new(spec.config(), dataset, validation)
    }

    /// Loads a configuration and dataset; the validation set comes from the
    /// configuration when present.
    pub fn load(config: &Path, dataset: &Path) -> Result<Self> {
        let cfg = QueryConfig::load(config)?;
        let validation = match &cfg.validation {
            Some(p) => read_jsonl(p)?,
            None => Vec::new(),
        };
        Workload::new(cfg, read_jsonl(dataset)?, validation)
    }

    /// Parameters learned from the validation set, or the configured ones
    /// when there is none.
    pub fn learn(&self, seed: u64) -> LearnedParams {
        if self.validation.is_empty() {
            return LearnedParams::configured(&self.schema, DEFAULT_BUCKETS);
        }
        let v = ValidationSet::record(&self.schema, &self.validation, &Simulator::new(seed));
        LearnedParams::offline(&self.schema, &v, &self.expr.tag_types(), DEFAULT_BUCKETS, seed)
    }

    pub fn alpha(&self, overridden: Option<f64>) -> Result<f64> {
        let a = overridden.or(self.config.alpha).unwrap_or(1.0);
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::Config(format!("alpha {a} not in (0, 1]")));
        }
        Ok(a)
    }

    /// Initialized session over the filtered objects.
    pub fn session<T: Scalar>(&self, params: &LearnedParams, seed: u64, alpha: f64) -> Result<Session<T>> {
        Session::initialize(
            self.schema.clone(),
            self.expr.clone(),
            self.objects.clone(),
            Simulator::new(seed),
            params.planner(),
            Alpha::new(T::lit(alpha))?,
        )
    }
}

/// Paths written by [`write_generated`].
#[derive(Clone, Debug)]
pub struct GeneratedFiles {
    pub dataset: PathBuf,
    pub validation: PathBuf,
    pub config: PathBuf,
}

/// Writes `dataset.jsonl`, `validation.jsonl` and `config.json` into `dir`.
pub fn write_generated(spec: &GenSpec, dir: &Path) -> Result<GeneratedFiles> {
    std::fs::create_dir_all(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dataset = gen_objects(spec.n, "o", &spec.tag_types, &mut rng);
    let validation = gen_objects(spec.n_validation, "v", &spec.tag_types, &mut rng);
    let files = GeneratedFiles {
        dataset: dir.join("dataset.jsonl"),
        validation: dir.join("validation.jsonl"),
        config: dir.join("config.json"),
    };
    write_jsonl(&files.dataset, &dataset)?;
    write_jsonl(&files.validation, &validation)?;
    let mut cfg = spec.config();
    cfg.validation = Some(PathBuf::from("validation.jsonl"));
    cfg.save(&files.config)?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selectivity_hits_target() {
        let w = Workload::generate(&GenSpec::standard(0.10, 3)).unwrap();
        assert!((w.objects.len() as i64 - 206).abs() <= 1, "{}", w.objects.len());
        let males = w.objects.iter().filter(|o| o.truth["Gender"] == "Male").count();
        assert!(males > 60 && males < 146);
    }

    #[test]
    fn empty_and_deterministic() {
        let mut s = GenSpec::standard(0.5, 9);
        s.n = 0;
        s.n_validation = 0;
        assert!(Workload::generate(&s).unwrap().objects.is_empty());
        let a = Workload::generate(&GenSpec::standard(0.05, 4)).unwrap();
        let b = Workload::generate(&GenSpec::standard(0.05, 4)).unwrap();
        assert_eq!(a.objects, b.objects);
    }
}
