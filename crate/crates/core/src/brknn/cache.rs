use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex};

use crate::geo::{KeywordId, UserId, VertexId};

use super::bounds::SbList;
use super::stream::Hit;

const SHARDS: usize = 64;

struct Sharded<K, V> {
    shards: Vec<Mutex<HashMap<K, Arc<V>>>>,
}

impl<K: Hash + Eq + Copy, V> Sharded<K, V> {
    fn new() -> Self {
        Sharded {
            shards: (0..SHARDS).map(|_| Mutex::new(HashMap::new())).collect(),
        }
    }

    fn shard(&self, k: &K) -> &Mutex<HashMap<K, Arc<V>>> {
        let mut h = DefaultHasher::new();
        k.hash(&mut h);
        &self.shards[h.finish() as usize % SHARDS]
    }

    /// Returns the cached value and whether it had to be computed.
    fn get_or_compute(&self, k: K, f: impl FnOnce() -> V) -> (Arc<V>, bool) {
        if let Some(v) = self.shard(&k).lock().expect("cache lock").get(&k) {
            return (v.clone(), false);
        }
        let v = Arc::new(f());
        let mut g = self.shard(&k).lock().expect("cache lock");
        let e = g.entry(k).or_insert(v);
        (e.clone(), true)
    }

    fn len(&self) -> usize {
        self.shards
            .iter()
            .map(|s| s.lock().expect("cache lock").len())
            .sum()
    }
}

/// Per-user and per-border score lists, reusable across runs with the same
/// dataset, index, parameters and `k`.
pub struct BrknnCache {
    pub(crate) k: usize,
    pub(crate) alpha: f64,
    users: Sharded<UserId, SbList>,
    quick: Sharded<UserId, SbList>,
    wide: Sharded<UserId, SbList>,
    borders: Sharded<(VertexId, KeywordId), Vec<Hit>>,
}

impl BrknnCache {
    pub fn new(k: usize, alpha: f64) -> Self {
        BrknnCache {
            k,
            alpha,
            users: Sharded::new(),
            quick: Sharded::new(),
            wide: Sharded::new(),
            borders: Sharded::new(),
        }
    }

    pub(crate) fn sb_list(&self, u: UserId, f: impl FnOnce() -> SbList) -> (Arc<SbList>, bool) {
        self.users.get_or_compute(u, f)
    }

    pub(crate) fn quick_list(&self, u: UserId, f: impl FnOnce() -> SbList) -> (Arc<SbList>, bool) {
        self.quick.get_or_compute(u, f)
    }

    pub(crate) fn wide_list(&self, u: UserId, f: impl FnOnce() -> SbList) -> (Arc<SbList>, bool) {
        self.wide.get_or_compute(u, f)
    }

    pub(crate) fn border_list(
        &self,
        b: VertexId,
        t: KeywordId,
        f: impl FnOnce() -> Vec<Hit>,
    ) -> (Arc<Vec<Hit>>, bool) {
        self.borders.get_or_compute((b, t), f)
    }

    pub fn cached_users(&self) -> usize {
        self.users.len()
    }

    pub fn cached_borders(&self) -> usize {
        self.borders.len()
    }
}
