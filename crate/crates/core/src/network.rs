//! The forwarding fabric: nodes with FIB/PIT/CS, point-to-point links with
//! propagation and serialization delay, sync-channel multicast trees and
//! border filtering of the censoring network.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::rc::Rc;

use crate::engine::{to_ms, EventQueue, SimTime};
use crate::forwarder::{ContentStore, FaceId, Fib, Pit, PitInsert, APP_FACE};
use crate::name::Name;
use crate::packet::{Data, Interest, Packet, Traffic};
use crate::topology::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Router,
    Host,
}

#[derive(Debug, Clone)]
pub struct Face {
    pub peer: NodeId,
    pub peer_face: FaceId,
    link: usize,
    dir: usize,
    /// Set on the inside end of a link leaving the censoring network.
    pub border: bool,
}

#[derive(Debug)]
struct LinkState {
    delay: SimTime,
    ns_per_byte: f64,
    busy_until: [SimTime; 2],
}

pub struct Node {
    pub kind: NodeKind,
    pub inside: bool,
    pub faces: Vec<Face>,
    pub fib: Fib,
    pub pit: Pit,
    pub cs: ContentStore,
}

#[derive(Debug, Clone)]
pub struct FabricConfig {
    pub pit_lifetime: SimTime,
    pub cs_capacity: usize,
    /// Serialization time per byte in nanoseconds for links added with
    /// [`Network::add_link`]; zero means infinite bandwidth.
    pub ns_per_byte: f64,
    pub trace: bool,
}

impl Default for FabricConfig {
    fn default() -> Self {
        Self {
            pit_lifetime: 4_000_000_000,
            cs_capacity: 1000,
            ns_per_byte: 0.0,
            trace: false,
        }
    }
}

#[derive(Debug, Default, Clone)]
pub struct FabricStats {
    /// Link-level bytes per traffic class, summed over every hop.
    pub link_bytes: [u64; Traffic::ALL.len()],
    pub link_packets: u64,
    pub cs_hits: u64,
    pub aggregated: u64,
    pub no_route_drops: u64,
    pub unsolicited_drops: u64,
    pub border_drops: u64,
    pub events: u64,
    /// Packets seen inside the censoring network that exposed a forbidden
    /// pattern.
    pub exposures: Vec<String>,
}

impl FabricStats {
    pub fn bytes(&self, t: Traffic) -> u64 {
        self.link_bytes[t.index()]
    }
}

/// Requests an application hands back to its node.
#[derive(Debug)]
enum Action {
    Interest(SimTime, Interest),
    Data(SimTime, Data),
    Timer(SimTime, u64),
}

/// Handler context of one application callback.
pub struct Ctx<'a, S> {
    now: SimTime,
    node: NodeId,
    actions: &'a mut Vec<Action>,
    pub shared: &'a mut S,
}

impl<S> Ctx<'_, S> {
    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn send_interest(&mut self, i: Interest) {
        self.actions.push(Action::Interest(self.now, i));
    }

    /// Emits `i` at absolute time `at` (not before now).
    pub fn send_interest_at(&mut self, at: SimTime, i: Interest) {
        self.actions.push(Action::Interest(at.max(self.now), i));
    }

    pub fn send_data(&mut self, d: Data) {
        self.actions.push(Action::Data(self.now, d));
    }

    pub fn timer_at(&mut self, at: SimTime, token: u64) {
        self.actions.push(Action::Timer(at.max(self.now), token));
    }

    pub fn timer_in(&mut self, delay: SimTime, token: u64) {
        self.actions.push(Action::Timer(self.now + delay, token));
    }
}

pub trait Application {
    type Shared;

    fn start(&mut self, _ctx: &mut Ctx<'_, Self::Shared>) {}
    fn on_interest(&mut self, ctx: &mut Ctx<'_, Self::Shared>, interest: Rc<Interest>);
    fn on_data(&mut self, ctx: &mut Ctx<'_, Self::Shared>, data: Rc<Data>);
    fn on_timer(&mut self, _ctx: &mut Ctx<'_, Self::Shared>, _token: u64) {}
}

enum Event {
    Start(NodeId),
    Arrive { node: NodeId, face: FaceId, pkt: Packet },
    FromApp { node: NodeId, pkt: Packet },
    Timer { node: NodeId, token: u64 },
}

/// Shortest-path trees of the sync group, one per member source.
#[derive(Default)]
struct SyncGroup {
    member: Vec<bool>,
    children: BTreeMap<NodeId, Vec<Vec<FaceId>>>,
}

pub struct Network<A: Application> {
    pub nodes: Vec<Node>,
    links: Vec<LinkState>,
    apps: Vec<Option<A>>,
    queue: EventQueue<Event>,
    config: FabricConfig,
    sync: SyncGroup,
    allowed_egress: Vec<String>,
    forbidden: Vec<Vec<u8>>,
    forbidden_prefix: Option<Name>,
    pub stats: FabricStats,
    pub trace: Vec<String>,
    pub shared: A::Shared,
    actions: Vec<Action>,
}

impl<A: Application> Network<A> {
    pub fn new(config: FabricConfig, shared: A::Shared) -> Self {
        Self {
            nodes: Vec::new(),
            links: Vec::new(),
            apps: Vec::new(),
            queue: EventQueue::new(),
            config,
            sync: SyncGroup::default(),
            allowed_egress: Vec::new(),
            forbidden: Vec::new(),
            forbidden_prefix: None,
            stats: FabricStats::default(),
            trace: Vec::new(),
            shared,
            actions: Vec::new(),
        }
    }

    pub fn add_node(&mut self, kind: NodeKind, inside: bool) -> NodeId {
        self.nodes.push(Node {
            kind,
            inside,
            faces: Vec::new(),
            fib: Fib::new(),
            pit: Pit::new(),
            cs: ContentStore::new(self.config.cs_capacity),
        });
        self.apps.push(None);
        self.nodes.len() - 1
    }

    /// Connects `a` and `b`; returns the new face ids at `a` and `b`. Links
    /// between an inside and an outside node get a border face on the inside
    /// end.
    pub fn add_link(&mut self, a: NodeId, b: NodeId, delay: SimTime) -> (FaceId, FaceId) {
        self.add_link_with(a, b, delay, self.config.ns_per_byte)
    }

    /// [`Network::add_link`] with its own serialization cost.
    pub fn add_link_with(&mut self, a: NodeId, b: NodeId, delay: SimTime, ns_per_byte: f64) -> (FaceId, FaceId) {
        let link = self.links.len();
        self.links.push(LinkState {
            delay,
            ns_per_byte,
            busy_until: [0, 0],
        });
        let fa = self.nodes[a].faces.len();
        let fb = self.nodes[b].faces.len();
        let (a_inside, b_inside) = (self.nodes[a].inside, self.nodes[b].inside);
        let crossing = a_inside != b_inside;
        self.nodes[a].faces.push(Face {
            peer: b,
            peer_face: fb,
            link,
            dir: 0,
            border: crossing && a_inside,
        });
        self.nodes[b].faces.push(Face {
            peer: a,
            peer_face: fa,
            link,
            dir: 1,
            border: crossing && b_inside,
        });
        (fa, fb)
    }

    pub fn set_app(&mut self, node: NodeId, app: A) {
        self.apps[node] = Some(app);
        self.queue.schedule(self.queue.now(), Event::Start(node));
    }

    pub fn app(&self, node: NodeId) -> Option<&A> {
        self.apps[node].as_ref()
    }

    pub fn apps(&self) -> impl Iterator<Item = (NodeId, &A)> {
        self.apps.iter().enumerate().filter_map(|(i, a)| a.as_ref().map(|a| (i, a)))
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    /// First components allowed to leave the censoring network.
    pub fn allow_egress(&mut self, first_component: &str) {
        if !self.allowed_egress.iter().any(|p| p == first_component) {
            self.allowed_egress.push(first_component.to_owned());
        }
    }

    /// Byte patterns and a name prefix that must never be visible inside
    /// the censoring network.
    pub fn forbid_visible(&mut self, prefix: Name, patterns: Vec<Vec<u8>>) {
        self.forbidden_prefix = Some(prefix);
        self.forbidden = patterns;
    }

    /// Delay-weighted shortest paths from `dest`, transiting routers only.
    /// Returns per-node (distance, face toward dest) with `usize::MAX` faces
    /// where unreachable.
    pub fn shortest_paths_to(&self, dest: NodeId) -> Vec<(SimTime, FaceId)> {
        self.dijkstra(dest, |n| self.nodes[n].kind == NodeKind::Router)
    }

    fn dijkstra(&self, src: NodeId, transit: impl Fn(NodeId) -> bool) -> Vec<(SimTime, FaceId)> {
        let mut best = vec![(SimTime::MAX, usize::MAX); self.nodes.len()];
        best[src] = (0, APP_FACE);
        let mut heap = BinaryHeap::from([Reverse((0, src))]);
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > best[u].0 || (u != src && !transit(u)) {
                continue;
            }
            for f in &self.nodes[u].faces {
                let nd = d + self.links[f.link].delay;
                let v = f.peer;
                if nd < best[v].0 {
                    best[v] = (nd, f.peer_face);
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        best
    }

    /// Installs `prefix` at every router (and at `dest` as a local route)
    /// along delay-shortest paths toward `dest`.
    pub fn route_prefix(&mut self, prefix: &Name, dest: NodeId) {
        let paths = self.shortest_paths_to(dest);
        for (n, &(d, face)) in paths.iter().enumerate() {
            if n == dest {
                self.nodes[n].fib.insert(prefix, APP_FACE);
            } else if d != SimTime::MAX && self.nodes[n].kind == NodeKind::Router {
                self.nodes[n].fib.insert(prefix, face);
            }
        }
    }

    pub fn path_delay(&self, from: NodeId, to: NodeId) -> SimTime {
        self.shortest_paths_to(to)[from].0
    }

    /// Builds the sync group over inside routers. Every member can be a
    /// source; delivery follows the source's delay-shortest-path tree.
    pub fn build_sync_group(&mut self, members: &[NodeId]) {
        let mut member = vec![false; self.nodes.len()];
        for &m in members {
            member[m] = true;
        }
        let mut children = BTreeMap::new();
        for &src in members {
            let tree = self.dijkstra(src, |n| {
                self.nodes[n].kind == NodeKind::Router && self.nodes[n].inside
            });
            let mut kids: Vec<Vec<FaceId>> = vec![Vec::new(); self.nodes.len()];
            let mut on_tree = vec![false; self.nodes.len()];
            on_tree[src] = true;
            for &m in members {
                let mut v = m;
                while !on_tree[v] {
                    let (d, face) = tree[v];
                    assert!(d != SimTime::MAX, "sync member {m} unreachable from {src}");
                    on_tree[v] = true;
                    let parent = self.nodes[v].faces[face].peer;
                    kids[parent].push(self.nodes[v].faces[face].peer_face);
                    v = parent;
                }
            }
            for k in &mut kids {
                k.sort_unstable();
            }
            children.insert(src, kids);
        }
        self.sync = SyncGroup { member, children };
    }

    pub fn is_sync_member(&self, node: NodeId) -> bool {
        self.sync.member.get(node).copied().unwrap_or(false)
    }

    /// Runs until the event list drains or simulated time passes `horizon`.
    /// Returns true when the run drained before the horizon.
    pub fn run(&mut self, horizon: SimTime) -> bool {
        while let Some(t) = self.queue.peek_time() {
            if t > horizon {
                return false;
            }
            let (_, ev) = self.queue.pop().expect("peeked");
            self.stats.events += 1;
            match ev {
                Event::Start(node) => self.with_app(node, |app, ctx| app.start(ctx)),
                Event::Timer { node, token } => {
                    self.with_app(node, |app, ctx| app.on_timer(ctx, token))
                }
                Event::Arrive { node, face, pkt } => {
                    if self.nodes[node].faces[face].border {
                        self.inspect(node, &pkt);
                    }
                    match pkt {
                        Packet::Interest(i) => {
                            if self.nodes[node].faces[face].border && !self.egress_allowed(&i.name) {
                                self.stats.border_drops += 1;
                                self.log(node, "drop-ingress", &i.name, i.size_bytes());
                            } else {
                                self.on_interest(node, face, i);
                            }
                        }
                        Packet::Data(d) => self.on_data(node, face, d),
                    }
                }
                Event::FromApp { node, pkt } => {
                    if self.nodes[node].inside {
                        self.inspect(node, &pkt);
                    }
                    match pkt {
                        Packet::Interest(i) => self.on_interest(node, APP_FACE, i),
                        Packet::Data(d) => self.on_data(node, APP_FACE, d),
                    }
                }
            }
        }
        true
    }

    fn with_app(&mut self, node: NodeId, f: impl FnOnce(&mut A, &mut Ctx<'_, A::Shared>)) {
        let Some(mut app) = self.apps[node].take() else {
            return;
        };
        let mut actions = std::mem::take(&mut self.actions);
        let now = self.queue.now();
        {
            let mut ctx = Ctx {
                now,
                node,
                actions: &mut actions,
                shared: &mut self.shared,
            };
            f(&mut app, &mut ctx);
        }
        self.apps[node] = Some(app);
        for a in actions.drain(..) {
            match a {
                Action::Interest(at, i) => self.queue.schedule(
                    at,
                    Event::FromApp {
                        node,
                        pkt: Packet::Interest(Rc::new(i)),
                    },
                ),
                Action::Data(at, d) => self.queue.schedule(
                    at,
                    Event::FromApp {
                        node,
                        pkt: Packet::Data(Rc::new(d)),
                    },
                ),
                Action::Timer(at, token) => self.queue.schedule(at, Event::Timer { node, token }),
            }
        }
        self.actions = actions;
    }

    fn on_interest(&mut self, node: NodeId, in_face: FaceId, interest: Rc<Interest>) {
        let now = self.queue.now();
        if let Some(d) = self.nodes[node].cs.get(&interest.name) {
            self.stats.cs_hits += 1;
            self.send(node, in_face, Packet::Data(d));
            return;
        }
        let lifetime = self.config.pit_lifetime;
        if self.nodes[node].pit.insert(&interest.name, in_face, now, lifetime) == PitInsert::Aggregated {
            self.stats.aggregated += 1;
            return;
        }
        let out: Vec<FaceId> = match interest.multicast {
            Some(m) => {
                let mut out = self
                    .sync
                    .children
                    .get(&m.source)
                    .map(|c| c[node].clone())
                    .unwrap_or_default();
                if in_face != APP_FACE && self.is_sync_member(node) {
                    out.push(APP_FACE);
                }
                out
            }
            None => match self.nodes[node].fib.longest_prefix_match(&interest.name) {
                Some(faces) => faces.iter().copied().filter(|&f| f != in_face).take(1).collect(),
                None => Vec::new(),
            },
        };
        if out.is_empty() && interest.multicast.is_none() {
            self.stats.no_route_drops += 1;
            self.log(node, "drop-noroute", &interest.name, interest.size_bytes());
            return;
        }
        for face in out {
            if face != APP_FACE
                && self.nodes[node].faces[face].border
                && !self.egress_allowed(&interest.name)
            {
                self.stats.border_drops += 1;
                self.log(node, "drop-egress", &interest.name, interest.size_bytes());
                continue;
            }
            self.send(node, face, Packet::Interest(interest.clone()));
        }
    }

    fn on_data(&mut self, node: NodeId, in_face: FaceId, data: Rc<Data>) {
        let now = self.queue.now();
        let Some(entry) = self.nodes[node].pit.take(&data.name, now) else {
            self.stats.unsolicited_drops += 1;
            self.log(node, "drop-unsolicited", &data.name, data.size_bytes());
            return;
        };
        self.nodes[node].cs.insert(data.clone());
        for face in entry.in_faces {
            if face != in_face {
                self.send(node, face, Packet::Data(data.clone()));
            }
        }
    }

    fn egress_allowed(&self, name: &Name) -> bool {
        name.first().is_some_and(|c| self.allowed_egress.iter().any(|p| p == c))
    }

    fn send(&mut self, node: NodeId, face: FaceId, pkt: Packet) {
        if face == APP_FACE {
            match pkt {
                Packet::Interest(i) => self.with_app(node, |app, ctx| app.on_interest(ctx, i)),
                Packet::Data(d) => self.with_app(node, |app, ctx| app.on_data(ctx, d)),
            }
            return;
        }
        let now = self.queue.now();
        let size = pkt.size_bytes();
        let f = &self.nodes[node].faces[face];
        let (peer, peer_face) = (f.peer, f.peer_face);
        let link = &mut self.links[f.link];
        let start = now.max(link.busy_until[f.dir]);
        let done = start + (size as f64 * link.ns_per_byte).round() as SimTime;
        link.busy_until[f.dir] = done;
        let arrive = done + link.delay;
        self.stats.link_bytes[pkt.traffic().index()] += size as u64;
        self.stats.link_packets += 1;
        if self.config.trace {
            let kind = match pkt {
                Packet::Interest(_) => "tx-interest",
                Packet::Data(_) => "tx-data",
            };
            self.log(node, kind, pkt.name(), size);
        }
        self.queue.schedule(
            arrive,
            Event::Arrive {
                node: peer,
                face: peer_face,
                pkt,
            },
        );
    }

    fn log(&mut self, node: NodeId, event: &str, name: &Name, size: usize) {
        if self.config.trace {
            self.trace
                .push(format!("{:.6} {node} {event} {name} {size}", to_ms(self.queue.now())));
        }
    }

    /// Records packets that would reveal a forbidden pattern to an observer
    /// inside the censoring network.
    fn inspect(&mut self, node: NodeId, pkt: &Packet) {
        if self.forbidden.is_empty() && self.forbidden_prefix.is_none() {
            return;
        }
        let name = pkt.name();
        let mut exposed = self.forbidden_prefix.as_ref().is_some_and(|p| p.is_prefix_of(name));
        let name_text = name.to_string();
        let mut fields: Vec<&[u8]> = vec![name_text.as_bytes()];
        match pkt {
            Packet::Interest(i) => {
                if let Some(p) = &i.payload {
                    fields.push(p);
                }
            }
            Packet::Data(d) => {
                fields.push(&d.content);
                fields.push(&d.signature_info.certificate_id);
                fields.push(&d.signature_value);
                if let Some(w) = &d.signature_info.warrant {
                    fields.push(w);
                }
            }
        }
        exposed |= self
            .forbidden
            .iter()
            .any(|pat| fields.iter().any(|f| memchr::memmem::find(f, pat).is_some()));
        if exposed {
            self.stats.exposures.push(format!("node {node}: {name_text}"));
        }
    }

    /// Live PIT entries summed over all nodes.
    pub fn pit_occupancy(&self) -> usize {
        let now = self.queue.now();
        self.nodes.iter().map(|n| n.pit.live(now)).sum()
    }
}
