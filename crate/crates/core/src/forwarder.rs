//! Per-node NDN tables: FIB with longest-prefix match, PIT with expiry, and
//! an LRU content store.

use std::collections::{BTreeMap, HashMap};
use std::num::NonZeroUsize;
use std::rc::Rc;

use lru::LruCache;

use crate::engine::SimTime;
use crate::name::Name;
use crate::packet::Data;

pub type FaceId = usize;

/// Face connecting a node's forwarder to its local application.
pub const APP_FACE: FaceId = usize::MAX;

#[derive(Debug, Default, Clone)]
pub struct Fib {
    routes: BTreeMap<Vec<String>, Vec<FaceId>>,
}

impl Fib {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `face` for `prefix`. Faces keep insertion order; the first one is
    /// the preferred next hop.
    pub fn insert(&mut self, prefix: &Name, face: FaceId) {
        let faces = self.routes.entry(prefix.components().to_vec()).or_default();
        if !faces.contains(&face) {
            faces.push(face);
        }
    }

    pub fn remove(&mut self, prefix: &Name) {
        self.routes.remove(prefix.components());
    }

    /// Faces of the deepest registered prefix of `name`.
    pub fn longest_prefix_match(&self, name: &Name) -> Option<&[FaceId]> {
        let parts = name.components();
        (0..=parts.len())
            .rev()
            .find_map(|len| self.routes.get(&parts[..len]))
            .map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct PitEntry {
    pub in_faces: Vec<FaceId>,
    pub expiry: SimTime,
}

/// Pending Interest Table. Expired entries are invisible and purged lazily.
#[derive(Debug, Default)]
pub struct Pit {
    entries: HashMap<Name, PitEntry>,
    purge_at: usize,
}

/// Outcome of offering an Interest to the PIT.
#[derive(Debug, PartialEq, Eq)]
pub enum PitInsert {
    /// New entry: the Interest must be forwarded.
    Forward,
    /// A live entry already exists: the inbound face was aggregated.
    Aggregated,
}

impl Pit {
    const PURGE_FLOOR: usize = 4096;

    pub fn new() -> Self {
        Self {
            entries: HashMap::new(),
            purge_at: Self::PURGE_FLOOR,
        }
    }

    pub fn insert(&mut self, name: &Name, face: FaceId, now: SimTime, lifetime: SimTime) -> PitInsert {
        if self.entries.len() >= self.purge_at {
            self.entries.retain(|_, e| e.expiry > now);
            self.purge_at = (self.entries.len() * 2).max(Self::PURGE_FLOOR);
        }
        match self.entries.get_mut(name) {
            Some(e) if e.expiry > now => {
                if !e.in_faces.contains(&face) {
                    e.in_faces.push(face);
                }
                e.expiry = e.expiry.max(now + lifetime);
                PitInsert::Aggregated
            }
            _ => {
                self.entries.insert(
                    name.clone(),
                    PitEntry {
                        in_faces: vec![face],
                        expiry: now + lifetime,
                    },
                );
                PitInsert::Forward
            }
        }
    }

    /// Removes and returns the live entry for `name`.
    pub fn take(&mut self, name: &Name, now: SimTime) -> Option<PitEntry> {
        match self.entries.remove(name) {
            Some(e) if e.expiry > now => Some(e),
            _ => None,
        }
    }

    pub fn contains(&self, name: &Name, now: SimTime) -> bool {
        self.entries.get(name).is_some_and(|e| e.expiry > now)
    }

    /// Live entry count.
    pub fn live(&self, now: SimTime) -> usize {
        self.entries.values().filter(|e| e.expiry > now).count()
    }
}

/// Bounded LRU cache of Data packets. Capacity zero disables caching.
pub struct ContentStore {
    cache: Option<LruCache<Name, Rc<Data>>>,
}

impl ContentStore {
    pub fn new(capacity: usize) -> Self {
        Self {
            cache: NonZeroUsize::new(capacity).map(LruCache::new),
        }
    }

    pub fn get(&mut self, name: &Name) -> Option<Rc<Data>> {
        self.cache.as_mut()?.get(name).cloned()
    }

    pub fn insert(&mut self, data: Rc<Data>) {
        if let Some(c) = self.cache.as_mut() {
            c.put(data.name.clone(), data);
        }
    }

    pub fn len(&self) -> usize {
        self.cache.as_ref().map_or(0, LruCache::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn capacity(&self) -> usize {
        self.cache.as_ref().map_or(0, |c| c.cap().get())
    }
}

impl std::fmt::Debug for ContentStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ContentStore({}/{})", self.len(), self.capacity())
    }
}
