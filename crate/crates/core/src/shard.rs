//! Round-robin document sharding and the inverse merge.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Assignment of documents to `n_shards` shards: sorted document ids are
/// dealt out round-robin, so shard sizes differ by at most one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardPlan {
    pub n_shards: usize,
    pub assignment: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MergeError {
    #[error("shard count must be at least 1")]
    NoShards,
    #[error("document `{0}` appears twice")]
    DuplicateDocument(String),
    #[error("key `{key}` appears in shard inputs {first} and {second}")]
    Overlap { key: String, first: usize, second: usize },
    #[error("`{0}` does not belong to any document of the shard plan")]
    Unknown(String),
}

impl ShardPlan {
    pub fn round_robin<'a, I>(doc_ids: I, n_shards: usize) -> Result<Self, MergeError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        if n_shards == 0 {
            return Err(MergeError::NoShards);
        }
        let mut ids: Vec<&str> = doc_ids.into_iter().collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(MergeError::DuplicateDocument(w[0].into()));
        }
        let assignment = ids.into_iter().enumerate().map(|(i, id)| (String::from(id), i % n_shards)).collect();
        Ok(ShardPlan { n_shards, assignment })
    }

    pub fn shard_of(&self, doc_id: &str) -> Option<usize> {
        self.assignment.get(doc_id).copied()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0; self.n_shards];
        for &s in self.assignment.values() {
            sizes[s] += 1;
        }
        sizes
    }

    /// Number of shards that received no document.
    pub fn empty_shards(&self) -> usize {
        self.sizes().iter().filter(|&&n| n == 0).count()
    }

    /// Distributes `items` over the shards, keeping input order within each
    /// shard. Items whose document is not in the plan are an error.
    pub fn split<T, F>(&self, items: Vec<T>, doc_id: F) -> Result<Vec<Vec<T>>, MergeError>
    where
        F: Fn(&T) -> &str,
    {
        let mut shards: Vec<Vec<T>> = (0..self.n_shards).map(|_| Vec::new()).collect();
        for item in items {
            let id = doc_id(&item);
            let shard = self.shard_of(id).ok_or_else(|| MergeError::Unknown(id.into()))?;
            shards[shard].push(item);
        }
        Ok(shards)
    }
}

/// Concatenates per-shard record lists and stable-sorts them by key.
/// Records sharing a key must come from the same input; a key seen in two
/// inputs is an error.
pub fn merge_keyed<T, F>(parts: Vec<Vec<T>>, key: F) -> Result<Vec<T>, MergeError>
where
    F: Fn(&T) -> String,
{
    let mut owner: BTreeMap<String, usize> = BTreeMap::new();
    let mut keyed: Vec<(String, T)> = Vec::new();
    for (part, records) in parts.into_iter().enumerate() {
        for record in records {
            let k = key(&record);
            match owner.get(&k) {
                Some(&first) if first != part => return Err(MergeError::Overlap { key: k, first, second: part }),
                Some(_) => {}
                None => {
                    owner.insert(k.clone(), part);
                }
            }
            keyed.push((k, record));
        }
    }
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(keyed.into_iter().map(|(_, r)| r).collect())
}
