//! Learned lookup from (tag type, tag, state, uncertainty bucket) to the next
//! function to run and its expected uncertainty change.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Schema, StateVector};

pub const DEFAULT_BUCKETS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BucketEntry {
    /// Function index within the tag type.
    pub next: usize,
    /// Expected change in uncertainty, never positive.
    pub delta: f64,
    /// Number of validation observations behind the entry.
    pub support: usize,
}

type RowKey = (usize, usize, StateVector);

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTable {
    buckets: usize,
    rows: BTreeMap<RowKey, Vec<Option<BucketEntry>>>,
}

impl Default for DecisionTable {
    fn default() -> Self {
        DecisionTable::new(DEFAULT_BUCKETS)
    }
}

impl DecisionTable {
    pub fn new(buckets: usize) -> Self {
        assert!(buckets > 0, "bucket count must be positive");
        DecisionTable { buckets, rows: BTreeMap::new() }
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Bucket holding uncertainty `h`; the last bucket is closed at 1.
    pub fn bucket_of(&self, h: f64) -> usize {
        let b = (h.clamp(0.0, 1.0) * self.buckets as f64).floor() as usize;
        b.min(self.buckets - 1)
    }

    pub fn bucket_bounds(&self, bucket: usize) -> (f64, f64) {
        let w = 1.0 / self.buckets as f64;
        (bucket as f64 * w, (bucket + 1) as f64 * w)
    }

    /// Stores an entry. The next function must be unexecuted in `state` and
    /// the delta is clamped to be non-positive.
    pub fn insert(
        &mut self,
        tag_type: usize,
        tag: usize,
        state: StateVector,
        bucket: usize,
        mut entry: BucketEntry,
    ) -> Result<()> {
        if bucket >= self.buckets {
            return Err(Error::IndexOutOfRange { index: bucket, len: self.buckets });
        }
        if entry.next >= state.len() {
            return Err(Error::IndexOutOfRange { index: entry.next, len: state.len() });
        }
        if state.is_set(entry.next) {
            return Err(Error::Config(format!("next function {} already executed in {state:?}", entry.next)));
        }
        entry.delta = entry.delta.min(0.0);
        let n = self.buckets;
        self.rows.entry((tag_type, tag, state)).or_insert_with(|| vec![None; n])[bucket] = Some(entry);
        Ok(())
    }

    pub fn get(&self, tag_type: usize, tag: usize, state: StateVector, h: f64) -> Option<BucketEntry> {
        self.rows.get(&(tag_type, tag, state)).and_then(|row| row[self.bucket_of(h)])
    }

    pub fn row(&self, tag_type: usize, tag: usize, state: StateVector) -> Option<&[Option<BucketEntry>]> {
        self.rows.get(&(tag_type, tag, state)).map(|r| r.as_slice())
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, StateVector, usize, BucketEntry)> + '_ {
        self.rows.iter().flat_map(|((tt, tag, st), row)| {
            row.iter().enumerate().filter_map(move |(b, e)| e.map(|e| (*tt, *tag, *st, b, e)))
        })
    }

    pub fn to_json(&self, schema: &Schema) -> Result<String> {
        let rows: Vec<RowJson> = self
            .rows
            .iter()
            .map(|((tt, tag, state), row)| {
                let t = &schema.tag_types[*tt];
                RowJson {
                    tag_type: t.id.clone(),
                    tag: t.tags[*tag].clone(),
                    state: *state,
                    buckets: row
                        .iter()
                        .enumerate()
                        .filter_map(|(b, e)| {
                            e.map(|e| {
                                let (lo, hi) = self.bucket_bounds(b);
                                BucketJson {
                                    lo,
                                    hi,
                                    next: t.functions[e.next].id.clone(),
                                    delta: e.delta,
                                    support: e.support,
                                }
                            })
                        })
                        .collect(),
                }
            })
            .collect();
        Ok(serde_json::to_string_pretty(&TableJson { buckets: self.buckets, rows })?)
    }

    pub fn from_json(text: &str, schema: &Schema) -> Result<DecisionTable> {
        let parsed: TableJson = serde_json::from_str(text)?;
        let mut table = DecisionTable::new(parsed.buckets);
        for row in parsed.rows {
            let tt = schema.tag_type_index(&row.tag_type).ok_or_else(|| Error::UnknownTagType(row.tag_type.clone()))?;
            let t = &schema.tag_types[tt];
            let tag = t
                .tag_index(&row.tag)
                .ok_or_else(|| Error::UnknownTag { tag_type: row.tag_type.clone(), tag: row.tag.clone() })?;
            for b in row.buckets {
                let next = t
                    .function_index(&b.next)
                    .ok_or_else(|| Error::Config(format!("unknown function `{}`", b.next)))?;
                let bucket = table.bucket_of((b.lo + b.hi) / 2.0);
                table.insert(tt, tag, row.state, bucket, BucketEntry { next, delta: b.delta, support: b.support })?;
            }
        }
        Ok(table)
    }
}

#[derive(Serialize, Deserialize)]
struct TableJson {
    buckets: usize,
    rows: Vec<RowJson>,
}

#[derive(Serialize, Deserialize)]
struct RowJson {
    tag_type: String,
    tag: String,
    state: StateVector,
    buckets: Vec<BucketJson>,
}

#[derive(Serialize, Deserialize)]
struct BucketJson {
    lo: f64,
    hi: f64,
    next: String,
    delta: f64,
    #[serde(default)]
    support: usize,
}
