//! Random attachment of actors to routers.

use std::fmt::Write;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::engine::stream;
use crate::error::{Result, SimError};
use crate::topology::{NodeId, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Counts {
    /// All peers, the producer included.
    pub peers: usize,
    pub collab_peers: usize,
    pub censors: usize,
    pub proxies: usize,
    pub onion_relays: usize,
}

/// Attachment router of every actor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub proxies: Vec<NodeId>,
    pub producer: NodeId,
    pub collab_peers: Vec<NodeId>,
    pub other_peers: Vec<NodeId>,
    pub censors: Vec<NodeId>,
    pub onion_relays: Vec<NodeId>,
    /// Routers outside the censoring network.
    pub outside: Vec<bool>,
}

const PROXY_ATTEMPTS: usize = 1000;

/// Host-to-host hops between hosts on routers `a` and `b` at router distance `d`.
pub fn host_hops(router_distance: usize) -> usize {
    router_distance + 2
}

/// Places proxies first, then peers and censors on routers at least
/// `min_proxy_distance` host hops from every proxy. Each actor class draws
/// from its own stream, so for a fixed seed the peers stay put when the
/// censor count changes and the first peers stay put when the peer count
/// grows.
pub fn place_actors(
    topo: &Topology,
    counts: Counts,
    min_proxy_distance: usize,
    seed: u64,
) -> Result<Placement> {
    if counts.peers == 0 || counts.collab_peers >= counts.peers {
        return Err(SimError::Config(format!(
            "need collab_peers < peers (producer is a peer), got {} and {}",
            counts.collab_peers, counts.peers
        )));
    }
    if counts.proxies == 0 || counts.proxies > topo.routers() {
        return Err(SimError::Config(format!("bad proxy count {}", counts.proxies)));
    }
    let adj = topo.adjacency();
    let min_router_distance = min_proxy_distance.saturating_sub(2);
    let mut rng = stream(seed, "placement/proxies");
    let (proxies, eligible) = (0..PROXY_ATTEMPTS)
        .find_map(|_| {
            let proxies: Vec<NodeId> = index::sample(&mut rng, topo.routers(), counts.proxies).into_vec();
            let mut nearest = vec![usize::MAX; topo.routers()];
            for &p in &proxies {
                for (n, d) in crate::topology::bfs(&adj, p).into_iter().enumerate() {
                    nearest[n] = nearest[n].min(d);
                }
            }
            let component = largest_inside_component(&adj, &nearest);
            let eligible: Vec<NodeId> = (0..topo.routers())
                .filter(|&n| component[n] && nearest[n] >= min_router_distance.max(2))
                .collect();
            (eligible.len() >= 3).then_some((proxies, eligible))
        })
        .ok_or_else(|| {
            SimError::PlacementInfeasible(format!(
                "no proxy set leaves routers {min_proxy_distance} hops away after {PROXY_ATTEMPTS} draws"
            ))
        })?;

    let mut outside = vec![false; topo.routers()];
    for &p in &proxies {
        outside[p] = true;
        for &n in &adj[p] {
            outside[n] = true;
        }
    }

    let mut rng = stream(seed, "placement/peers");
    let peers: Vec<NodeId> = (0..counts.peers)
        .map(|_| *eligible.choose(&mut rng).expect("non-empty"))
        .collect();
    let producer = peers[0];
    let others = &peers[1..];
    let mut rng = stream(seed, "placement/collab");
    let chosen = select_collaborating_peers(others.len(), counts.collab_peers, &mut rng);
    let collab_peers: Vec<NodeId> = chosen.iter().map(|&i| others[i]).collect();
    let other_peers: Vec<NodeId> = (0..others.len())
        .filter(|i| !chosen.contains(i))
        .map(|i| others[i])
        .collect();

    let mut rng = stream(seed, "placement/censors");
    let censors: Vec<NodeId> = (0..counts.censors)
        .map(|_| *eligible.choose(&mut rng).expect("non-empty"))
        .collect();

    let relay_pool: Vec<NodeId> = (0..topo.routers())
        .filter(|n| !outside[*n] && !censors.contains(n))
        .collect();
    if relay_pool.len() < counts.onion_relays {
        return Err(SimError::PlacementInfeasible("too few routers for onion relays".into()));
    }
    let mut rng = stream(seed, "placement/onion");
    let onion_relays = index::sample(&mut rng, relay_pool.len(), counts.onion_relays)
        .into_iter()
        .map(|i| relay_pool[i])
        .collect();

    Ok(Placement {
        proxies,
        producer,
        collab_peers,
        other_peers,
        censors,
        onion_relays,
        outside,
    })
}

/// Routers farther than one hop from every proxy that lie in the largest
/// connected region of such routers. The sync tree never leaves it.
fn largest_inside_component(adj: &[Vec<NodeId>], nearest: &[usize]) -> Vec<bool> {
    let inside = |n: NodeId| nearest[n] >= 2;
    let mut label = vec![usize::MAX; adj.len()];
    let mut sizes = Vec::new();
    for s in 0..adj.len() {
        if !inside(s) || label[s] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut stack = vec![s];
        label[s] = id;
        let mut size = 0;
        while let Some(u) = stack.pop() {
            size += 1;
            for &v in &adj[u] {
                if inside(v) && label[v] == usize::MAX {
                    label[v] = id;
                    stack.push(v);
                }
            }
        }
        sizes.push(size);
    }
    let best = (0..sizes.len()).max_by_key(|&i| (sizes[i], std::cmp::Reverse(i)));
    label.iter().map(|&l| Some(l) == best).collect()
}

/// Uniform choice of `count` indices out of `available`, without
/// replacement, in ascending order.
pub fn select_collaborating_peers<R: Rng + ?Sized>(available: usize, count: usize, rng: &mut R) -> Vec<usize> {
    if count >= available {
        return (0..available).collect();
    }
    let mut picked = index::sample(rng, available, count).into_vec();
    picked.sort_unstable();
    picked
}

impl Placement {
    /// Smallest router distance between a proxy and any peer or censor.
    pub fn min_proxy_router_distance(&self, topo: &Topology) -> usize {
        let adj = topo.adjacency();
        self.proxies
            .iter()
            .map(|&p| {
                let d = crate::topology::bfs(&adj, p);
                std::iter::once(self.producer)
                    .chain(self.collab_peers.iter().copied())
                    .chain(self.other_peers.iter().copied())
                    .chain(self.censors.iter().copied())
                    .map(|n| d[n])
                    .min()
                    .unwrap_or(usize::MAX)
            })
            .min()
            .unwrap_or(usize::MAX)
    }

    /// `role node attachment_router` lines for reproducibility audits.
    pub fn dump(&self, topo: &Topology) -> String {
        let mut out = String::new();
        let mut line = |role: &str, i: usize, r: NodeId| {
            let _ = writeln!(out, "{role} {i} {}", topo.original_id(r));
        };
        for (i, &r) in self.proxies.iter().enumerate() {
            line(if i == 0 { "selected-proxy" } else { "proxy" }, i, r);
        }
        line("producer", 0, self.producer);
        for (i, &r) in self.collab_peers.iter().enumerate() {
            line("collab-peer", i, r);
        }
        for (i, &r) in self.other_peers.iter().enumerate() {
            line("peer", i, r);
        }
        for (i, &r) in self.censors.iter().enumerate() {
            line("censor", i, r);
        }
        for (i, &r) in self.onion_relays.iter().enumerate() {
            line("onion-relay", i, r);
        }
        out
    }
}
