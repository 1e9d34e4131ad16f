//! Router-level topology: file format, validation and a deterministic
//! ISP-like generator.
//!
//! File format: one link per line, `node_a node_b [delay_ms]`; `#` starts a
//! comment. Node ids are non-negative integers and are renumbered densely in
//! ascending order.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Result, SimError};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    pub delay_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    /// Original id of each dense router index.
    ids: Vec<u64>,
    links: Vec<Link>,
}

impl Topology {
    pub fn from_links(routers: usize, links: Vec<Link>) -> Result<Self> {
        let t = Self {
            ids: (0..routers as u64).collect(),
            links,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn parse(text: &str, default_delay_ms: f64) -> Result<Self> {
        let mut raw = Vec::new();
        let mut ids = BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| SimError::Parse { line: i + 1, msg };
            let f: Vec<&str> = line.split_whitespace().collect();
            if !(2..=3).contains(&f.len()) {
                return Err(err(format!("expected 'a b [delay_ms]', got {line:?}")));
            }
            let a: u64 = f[0].parse().map_err(|_| err(format!("bad node id {:?}", f[0])))?;
            let b: u64 = f[1].parse().map_err(|_| err(format!("bad node id {:?}", f[1])))?;
            let delay = match f.get(2) {
                Some(d) => d.parse::<f64>().map_err(|_| err(format!("bad delay {d:?}")))?,
                None => default_delay_ms,
            };
            if a == b {
                return Err(err(format!("self-loop on node {a}")));
            }
            if !(delay.is_finite() && delay >= 0.0) {
                return Err(err(format!("delay must be non-negative, got {delay}")));
            }
            ids.insert(a);
            ids.insert(b);
            raw.push((a, b, delay));
        }
        let ids: Vec<u64> = ids.into_iter().collect();
        let index: BTreeMap<u64, NodeId> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let links = raw
            .into_iter()
            .map(|(a, b, delay_ms)| Link {
                a: index[&a],
                b: index[&b],
                delay_ms,
            })
            .collect();
        let t = Self { ids, links };
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: impl AsRef<Path>, default_delay_ms: f64) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, default_delay_ms)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for l in &self.links {
            out.push_str(&format!("{} {} {}\n", self.ids[l.a], self.ids[l.b], l.delay_ms));
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.ids.is_empty() {
            return Err(SimError::Parse { line: 0, msg: "topology has no links".into() });
        }
        let mut seen = BTreeSet::new();
        for l in &self.links {
            if l.a >= self.ids.len() || l.b >= self.ids.len() {
                return Err(SimError::Parse { line: 0, msg: "link endpoint out of range".into() });
            }
            if !seen.insert((l.a.min(l.b), l.a.max(l.b))) {
                return Err(SimError::Parse {
                    line: 0,
                    msg: format!("duplicate link {} {}", self.ids[l.a], self.ids[l.b]),
                });
            }
        }
        if !self.is_connected() {
            return Err(SimError::Parse { line: 0, msg: "topology is not connected".into() });
        }
        Ok(())
    }

    pub fn routers(&self) -> usize {
        self.ids.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn original_id(&self, node: NodeId) -> u64 {
        self.ids[node]
    }

    pub fn adjacency(&self) -> Vec<Vec<NodeId>> {
        let mut adj = vec![Vec::new(); self.routers()];
        for l in &self.links {
            adj[l.a].push(l.b);
            adj[l.b].push(l.a);
        }
        for v in &mut adj {
            v.sort_unstable();
        }
        adj
    }

    /// Router hop counts from `src`; `usize::MAX` for unreachable routers.
    pub fn hop_distances(&self, src: NodeId) -> Vec<usize> {
        bfs(&self.adjacency(), src)
    }

    pub fn is_connected(&self) -> bool {
        self.hop_distances(0).iter().all(|&d| d != usize::MAX)
    }
}

pub(crate) fn bfs(adj: &[Vec<NodeId>], src: NodeId) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    let mut queue = VecDeque::from([src]);
    dist[src] = 0;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Router and link counts of the Rocketfuel AS1221 map.
pub const AS1221_ROUTERS: usize = 278;
pub const AS1221_LINKS: usize = 731;

/// Deterministic three-tier ISP topology with the AS1221 router and link
/// counts: a meshed core, dual-homed aggregation routers, dual-homed access
/// routers, and extra metro links between access routers of one region.
pub fn synthetic_as1221(delay_ms: f64) -> Topology {
    const REGIONS: usize = 6;
    const CORE_PER_REGION: usize = 3;
    const AGG_PER_REGION: usize = 10;
    let core_n = REGIONS * CORE_PER_REGION;
    let agg_n = REGIONS * AGG_PER_REGION;
    let access_n = AS1221_ROUTERS - core_n - agg_n;

    let mut rng = ChaCha20Rng::seed_from_u64(1221);
    let mut edges = BTreeSet::new();
    let add = |a: NodeId, b: NodeId, edges: &mut BTreeSet<(NodeId, NodeId)>| {
        a != b && edges.insert((a.min(b), a.max(b)))
    };

    // Core: ring plus skip-one chords.
    for i in 0..core_n {
        add(i, (i + 1) % core_n, &mut edges);
        add(i, (i + 2) % core_n, &mut edges);
    }
    let core_of = |region: usize, k: usize| region * CORE_PER_REGION + k % CORE_PER_REGION;
    let agg_of = |region: usize, k: usize| core_n + region * AGG_PER_REGION + k % AGG_PER_REGION;
    // Aggregation: two core uplinks within the region and a regional ring.
    for r in 0..REGIONS {
        for k in 0..AGG_PER_REGION {
            let a = agg_of(r, k);
            add(a, core_of(r, k), &mut edges);
            add(a, core_of(r, k + 1), &mut edges);
            add(a, agg_of(r, k + 1), &mut edges);
        }
    }
    // Access: dual-homed to two aggregation routers of the same region.
    let mut region_access: Vec<Vec<NodeId>> = vec![Vec::new(); REGIONS];
    for j in 0..access_n {
        let a = core_n + agg_n + j;
        let r = j % REGIONS;
        let k = rng.gen_range(0..AGG_PER_REGION);
        add(a, agg_of(r, k), &mut edges);
        add(a, agg_of(r, k + 1 + rng.gen_range(0..AGG_PER_REGION - 1)), &mut edges);
        region_access[r].push(a);
    }
    // Metro links among access routers until the link budget is met.
    while edges.len() < AS1221_LINKS {
        let r = rng.gen_range(0..REGIONS);
        let pick: Vec<&NodeId> = region_access[r].choose_multiple(&mut rng, 2).collect();
        add(*pick[0], *pick[1], &mut edges);
    }
    let links = edges
        .into_iter()
        .map(|(a, b)| Link { a, b, delay_ms })
        .collect();
    Topology::from_links(AS1221_ROUTERS, links).expect("generated topology is valid")
}
