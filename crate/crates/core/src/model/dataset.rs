use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// An enrichable record. `truth` is ground truth used only by the simulator and metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Object {
    pub id: String,
    #[serde(default)]
    pub precise: BTreeMap<String, Value>,
    #[serde(default)]
    pub truth: BTreeMap<String, String>,
}

/// A condition on one precise attribute.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Eq(Value),
    In(Vec<Value>),
    /// Half-open numeric range `[lo, hi)`.
    Range(f64, f64),
}

impl Condition {
    pub fn matches(&self, v: &Value) -> bool {
        match self {
            Condition::Eq(want) => values_equal(v, want),
            Condition::In(set) => set.iter().any(|w| values_equal(v, w)),
            Condition::Range(lo, hi) => v.as_f64().is_some_and(|x| *lo <= x && x < *hi),
        }
    }
}

fn values_equal(a: &Value, b: &Value) -> bool {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) => x == y,
        _ => a == b,
    }
}

/// Indices of the objects satisfying every condition, in dataset order.
pub fn filter_precise(objects: &[Object], conditions: &BTreeMap<String, Condition>) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(objects.len());
    for (i, o) in objects.iter().enumerate() {
        let mut keep = true;
        for (attr, cond) in conditions {
            let v = o.precise.get(attr).ok_or_else(|| Error::UnknownAttribute(attr.clone()))?;
            keep &= cond.matches(v);
        }
        if keep {
            out.push(i);
        }
    }
    Ok(out)
}

pub fn read_jsonl(path: &Path) -> Result<Vec<Object>> {
    let f = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

pub fn write_jsonl(path: &Path, objects: &[Object]) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    for o in objects {
        serde_json::to_writer(&mut w, o)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
