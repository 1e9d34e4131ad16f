//! Builds one scenario on a topology, runs it and measures it.

use std::rc::Rc;

use harpocrates_crypto::proxy::Certificate;
use harpocrates_crypto::wire::Reader;
use harpocrates_crypto::{
    hmac_tag, keygen, HmacKey, KeyPair, ProxySignature, SchnorrGroup, SymmetricKey, VerificationKeyCache, Warrant,
};
use num_bigint::BigUint;
use rand::RngCore;

use crate::actors::{
    Actor, Censor, DirectUploader, OnionRelay, OnionSource, Peer, Producer, Proxy, ProxyRole, RunRecord, Setup,
};
use crate::config::{Mode, ScenarioConfig};
use crate::engine::{ms, stream, SimTime};
use crate::error::Result;
use crate::forwarder::APP_FACE;
use crate::metrics::{delay_breakdown, ms_of, RunMetrics};
use crate::name::Name;
use crate::network::{FabricConfig, FabricStats, Network, NodeKind};
use crate::onion::OnionCircuit;
use crate::packet::{Data, Traffic};
use crate::placement::{place_actors, Counts, Placement};
use crate::protocol::{assign_pieces, DelegationMetadata};
use crate::topology::{synthetic_as1221, NodeId, Topology};

/// Traffic classes counted as upload overhead.
pub const OVERHEAD_CLASSES: [Traffic; 6] = [
    Traffic::Delegation,
    Traffic::Metadata,
    Traffic::Sync,
    Traffic::Piece,
    Traffic::Push,
    Traffic::Onion,
];

pub struct RunOutput {
    pub metrics: RunMetrics,
    pub placement: Placement,
    pub stats: FabricStats,
    pub record: RunRecord,
    pub trace: Vec<String>,
}

pub fn load_topology(cfg: &ScenarioConfig) -> Result<Topology> {
    match &cfg.topology {
        Some(path) => Topology::load(path, cfg.link_delay_ms),
        None => Ok(synthetic_as1221(cfg.link_delay_ms)),
    }
}

pub fn scenario_group(cfg: &ScenarioConfig) -> Result<SchnorrGroup> {
    if cfg.q_bits == 256 {
        return Ok(SchnorrGroup::default_256());
    }
    Ok(SchnorrGroup::generate(cfg.q_bits, &mut stream(cfg.seed, "group"))?)
}

/// Runs `cfg` on a freshly loaded topology.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let topo = load_topology(cfg)?;
    let group = scenario_group(cfg)?;
    run_on(&topo, &group, cfg)
}

/// Runs `cfg` and, unless it is already a Pull run, a matched Pull run to
/// normalize its overhead.
pub fn run_normalized(topo: &Topology, group: &SchnorrGroup, cfg: &ScenarioConfig) -> Result<RunOutput> {
    let mut out = run_on(topo, group, cfg)?;
    let reference = if cfg.mode == Mode::Pull {
        out.metrics.overhead_ratio
    } else {
        let pull = ScenarioConfig {
            mode: Mode::Pull,
            verify_published: false,
            trace: false,
            ..cfg.clone()
        };
        run_on(topo, group, &pull)?.metrics.overhead_ratio
    };
    out.metrics.overhead_norm = Some(out.metrics.overhead_ratio / reference);
    Ok(out)
}

struct Builder<'a> {
    net: Network<Actor>,
    cfg: &'a ScenarioConfig,
}

impl Builder<'_> {
    /// Attaches a host to `router`; the host inherits the router's side of
    /// the censoring border and defaults all Interests toward it.
    fn host(&mut self, router: NodeId) -> NodeId {
        let inside = self.net.nodes[router].inside;
        let h = self.net.add_node(NodeKind::Host, inside);
        let (fh, _) = self.net.add_link_with(h, router, ms(self.cfg.link_delay_ms), ns_per_byte(self.cfg.access_mbps));
        self.net.nodes[h].fib.insert(&Name::root(), fh);
        h
    }
}

fn ns_per_byte(mbps: f64) -> f64 {
    if mbps > 0.0 {
        8000.0 / mbps
    } else {
        0.0
    }
}

fn random_bytes<R: RngCore>(rng: &mut R, n: usize) -> Vec<u8> {
    let mut v = vec![0u8; n];
    rng.fill_bytes(&mut v);
    v
}

/// Simulates one upload session.
pub fn run_on(topo: &Topology, group: &SchnorrGroup, cfg: &ScenarioConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let seed = cfg.seed;
    let counts = Counts {
        peers: cfg.effective_peers(),
        collab_peers: cfg.collab_peers,
        censors: cfg.censor_count(),
        proxies: cfg.proxies,
        onion_relays: crate::onion::CIRCUIT_LEN,
    };
    let placement = place_actors(topo, counts, cfg.min_proxy_distance, seed)?;

    let mut rng = stream(seed, "session");
    let data = random_bytes(&mut rng, cfg.data_size);
    let hmac_key = HmacKey::generate(&mut rng);
    let meta = DelegationMetadata {
        data_name: cfg.data_name.clone(),
        data_id: random_bytes(&mut rng, 8),
        data_hmac: hmac_tag(&hmac_key, &data).to_vec(),
        hmac_key,
        data_key: SymmetricKey::generate(&mut rng),
        expected_packets: cfg.total_packets(),
    };
    let certificate_id = random_bytes(&mut rng, 16);
    let session_key = SymmetricKey::generate(&mut rng);

    let mut keys = stream(seed, "keys");
    let producer_keys = keygen(group, &mut keys);
    let proxy_keys: Vec<KeyPair> = (0..cfg.proxies).map(|_| keygen(group, &mut keys)).collect();
    let proxy_certificates: Vec<Certificate> = proxy_keys
        .iter()
        .map(|k| Certificate {
            id: random_bytes(&mut keys, 16),
            public_key: k.public().clone(),
        })
        .collect();
    let peer_keys: Vec<KeyPair> = (0..cfg.collab_peers).map(|_| keygen(group, &mut keys)).collect();
    let relay_keys: Vec<KeyPair> = (0..crate::onion::CIRCUIT_LEN).map(|_| keygen(group, &mut keys)).collect();

    let assignment = assign_pieces(
        cfg.total_packets(),
        cfg.packets_per_piece(),
        cfg.collab_peers,
        cfg.piece_jitter,
        &mut stream(seed, "assignment"),
    );
    let proxy_decoys: Vec<Name> = cfg.decoy_pool[..cfg.proxies].to_vec();

    let mut setup = Setup {
        cfg: cfg.clone(),
        group: group.clone(),
        data,
        meta,
        certificate_id,
        session_key,
        proxy_decoys,
        proxy_certificates,
        selected_proxy: 0,
        peer_publics: peer_keys.iter().map(|k| k.public().clone()).collect(),
        assignment,
        nominal_piece_len: 0,
    };
    let full = 0..cfg.packets_per_piece().min(cfg.total_packets());
    let sample = setup.piece_body(&setup.proxy_decoys[0], full, &mut stream(seed, "nominal"));
    setup.nominal_piece_len = sample.encode().len() + harpocrates_crypto::symmetric::SEAL_OVERHEAD;
    let setup = Rc::new(setup);

    let fabric = FabricConfig {
        pit_lifetime: ms(cfg.pit_lifetime_ms),
        cs_capacity: cfg.cs_capacity,
        ns_per_byte: ns_per_byte(cfg.bandwidth_mbps),
        trace: cfg.trace,
    };
    let record = RunRecord::new(cfg.total_packets(), cfg.collab_peers);
    let mut b = Builder {
        net: Network::new(fabric, record),
        cfg,
    };
    for r in 0..topo.routers() {
        b.net.add_node(NodeKind::Router, !placement.outside[r]);
    }
    for l in topo.links() {
        b.net.add_link(l.a, l.b, ms(l.delay_ms));
    }

    let proxy_hosts: Vec<NodeId> = placement.proxies.iter().map(|&r| b.host(r)).collect();
    for i in 0..proxy_hosts.len() {
        for j in i + 1..proxy_hosts.len() {
            let (fi, fj) = b.net.add_link(proxy_hosts[i], proxy_hosts[j], ms(cfg.link_delay_ms));
            b.net.nodes[proxy_hosts[i]].fib.insert(&mesh_prefix(j), fi);
            b.net.nodes[proxy_hosts[j]].fib.insert(&mesh_prefix(i), fj);
        }
    }
    for (k, &h) in proxy_hosts.iter().enumerate() {
        b.net.nodes[h].fib.insert(&mesh_prefix(k), APP_FACE);
        b.net.route_prefix(&setup.proxy_decoys[k], h);
        b.net.route_prefix(&Name::from_components(["upload".to_owned(), k.to_string()]), h);
    }
    for d in &setup.proxy_decoys {
        b.net.allow_egress(d.first().expect("validated"));
    }
    b.net.allow_egress("upload");
    if cfg.mode == Mode::Onion {
        // The onion baseline is not subject to censor blocking.
        b.net.allow_egress("onion");
    }
    let mut patterns = vec![setup.certificate_id.clone(), hex::encode(&setup.certificate_id).into_bytes()];
    patterns.push(cfg.producer_prefix.to_string().into_bytes());
    b.net.forbid_visible(cfg.producer_prefix.clone(), patterns);

    let producer_host = b.host(placement.producer);
    let mut actor_rng = |role: &str, i: usize| stream(seed, &format!("actor/{role}/{i}"));

    match cfg.mode {
        Mode::Pull | Mode::Push | Mode::Hybrid => {
            let collab_hosts: Vec<NodeId> = placement.collab_peers.iter().map(|&r| b.host(r)).collect();
            let other_hosts: Vec<NodeId> = placement.other_peers.iter().map(|&r| b.host(r)).collect();
            let censor_hosts: Vec<NodeId> = placement.censors.iter().map(|&r| b.host(r)).collect();
            let mut members = vec![producer_host];
            members.extend(&collab_hosts);
            members.extend(&other_hosts);
            members.extend(&censor_hosts);
            b.net.build_sync_group(&members);

            b.net.set_app(
                producer_host,
                Actor::Producer(Producer::new(setup.clone(), producer_keys.clone(), actor_rng("producer", 0))),
            );
            for (i, (&h, k)) in collab_hosts.iter().zip(&peer_keys).enumerate() {
                let peer = Peer::new(setup.clone(), Some(i), k.clone(), actor_rng("peer", i));
                b.net.set_app(h, Actor::Peer(peer));
            }
            for (i, &h) in other_hosts.iter().enumerate() {
                let filler = keygen(group, &mut actor_rng("idle-key", i));
                b.net.set_app(h, Actor::Peer(Peer::new(setup.clone(), None, filler, actor_rng("idle", i))));
            }
            for (i, &h) in censor_hosts.iter().enumerate() {
                b.net.set_app(h, Actor::Censor(Censor::new(setup.clone(), actor_rng("censor", i))));
            }
            for (k, &h) in proxy_hosts.iter().enumerate() {
                let role = if k == setup.selected_proxy { ProxyRole::Selected } else { ProxyRole::Collaborating };
                let p = Proxy::new(setup.clone(), k, role, proxy_keys[k].clone(), actor_rng("proxy", k));
                b.net.set_app(h, Actor::Proxy(p));
            }
        }
        Mode::Direct => {
            let sink = nearest(&b.net, producer_host, &proxy_hosts);
            install_sink(&mut b.net, &setup, &proxy_hosts, &proxy_keys, sink, &mut actor_rng);
            let up = DirectUploader::new(setup.clone(), sink, actor_rng("direct", 0));
            b.net.set_app(producer_host, Actor::Direct(up));
        }
        Mode::Onion => {
            let relay_hosts: Vec<NodeId> = placement.onion_relays.iter().map(|&r| b.host(r)).collect();
            for &h in &relay_hosts {
                b.net.route_prefix(&Name::from_components(["onion".to_owned(), h.to_string()]), h);
            }
            let sink = nearest(&b.net, relay_hosts[crate::onion::CIRCUIT_LEN - 1], &proxy_hosts);
            install_sink(&mut b.net, &setup, &proxy_hosts, &proxy_keys, sink, &mut actor_rng);
            for (i, (&h, k)) in relay_hosts.iter().zip(&relay_keys).enumerate() {
                let relay = OnionRelay::new(setup.clone(), k.clone(), actor_rng("relay", i));
                b.net.set_app(h, Actor::OnionRelay(relay));
            }
            let circuit = OnionCircuit::new(relay_hosts, relay_keys.iter().map(|k| k.public().clone()).collect());
            let src = OnionSource::new(setup.clone(), circuit, sink, actor_rng("onion", 0));
            b.net.set_app(producer_host, Actor::OnionSource(src));
        }
    }

    let horizon = ms(cfg.horizon_s * 1000.0);
    let mut net = b.net;
    net.run(horizon);
    let metrics = measure(&net, &setup, producer_keys.public(), horizon);
    let Network { stats, shared, trace, .. } = net;
    Ok(RunOutput {
        metrics,
        placement,
        stats,
        record: shared,
        trace,
    })
}

fn mesh_prefix(k: usize) -> Name {
    Name::from_components(["proxy".to_owned(), k.to_string()])
}

/// Index of the proxy host with the smallest path delay from `from`.
fn nearest(net: &Network<Actor>, from: NodeId, proxy_hosts: &[NodeId]) -> usize {
    (0..proxy_hosts.len())
        .min_by_key(|&k| (net.path_delay(from, proxy_hosts[k]), k))
        .expect("at least one proxy")
}

fn install_sink(
    net: &mut Network<Actor>,
    setup: &Rc<Setup>,
    proxy_hosts: &[NodeId],
    proxy_keys: &[KeyPair],
    sink: usize,
    rng: &mut impl FnMut(&str, usize) -> rand_chacha::ChaCha20Rng,
) {
    let p = Proxy::new(setup.clone(), sink, ProxyRole::Sink, proxy_keys[sink].clone(), rng("proxy", sink));
    net.set_app(proxy_hosts[sink], Actor::Proxy(p));
}

/// Decodes the proxy signature carried by a published packet.
pub fn packet_signature(data: &Data) -> Option<ProxySignature> {
    let warrant = Warrant::from_bytes(data.signature_info.warrant.as_ref()?).ok()?;
    let mut r = Reader::new(&data.signature_value);
    let (t, a, b) = (r.uint().ok()?, r.uint().ok()?, r.uint().ok()?);
    r.finish().ok()?;
    Some(ProxySignature {
        message: data.signed_portion(),
        warrant,
        t,
        a,
        b,
    })
}

/// Consumer-side verification of every published packet. Returns the
/// number of packets that fail.
pub fn verify_publication(group: &SchnorrGroup, producer_public: &BigUint, packets: &[Data]) -> usize {
    let mut cache = VerificationKeyCache::new();
    packets
        .iter()
        .filter(|d| !packet_signature(d).is_some_and(|s| cache.verify(group, producer_public, &s)))
        .count()
}

fn measure(net: &Network<Actor>, setup: &Setup, producer_public: &BigUint, horizon: SimTime) -> RunMetrics {
    let cfg = &setup.cfg;
    let rec = &net.shared;
    let total = setup.total_packets();
    let delivered = rec.arrivals.iter().flatten().count() as u64;
    let complete = delivered == total;
    let last = rec.arrivals.iter().flatten().copied().max().unwrap_or(0);
    let pub_time = if complete { last } else { horizon };

    let per_packet_delays_ms = rec
        .arrivals
        .iter()
        .zip(&rec.dispatch)
        .filter_map(|(a, d)| Some(ms_of(a.as_ref()?.saturating_sub(*d.as_ref()?))))
        .collect();

    let (pct_metadata, pct_pieces, pct_egress) = if cfg.mode.uses_peers() {
        let meta_end = rec.delegation_done.unwrap_or(pub_time).max(rec.last_decoy_reply.unwrap_or(0));
        delay_breakdown(pub_time, meta_end, rec.last_piece_opened.unwrap_or(meta_end))
    } else {
        delay_breakdown(pub_time, 0, 0)
    };

    let overhead: u64 = OVERHEAD_CLASSES.iter().map(|&t| net.stats.bytes(t)).sum();
    let blocked = rec.bogus_victims.iter().filter(|&&b| b).count();

    let (published, integrity_ok, signature_failures) = match &rec.publication {
        Some(p) => {
            let ok = p.hmac_ok && p.data == setup.data;
            let sig = (cfg.verify_published && !p.packets.is_empty())
                .then(|| verify_publication(&setup.group, producer_public, &p.packets));
            (true, ok, sig)
        }
        None => (false, true, None),
    };

    RunMetrics {
        mode: cfg.mode,
        peers: cfg.effective_peers(),
        collab_peers: cfg.collab_peers,
        censor_frac: cfg.censor_frac,
        seed: cfg.seed,
        success_rate: delivered as f64 / total as f64,
        pub_delay_ms: ms_of(pub_time),
        complete,
        overhead_ratio: overhead as f64 / cfg.data_size as f64,
        overhead_norm: None,
        blocked_frac: if cfg.mode.uses_peers() { blocked as f64 / cfg.collab_peers as f64 } else { 0.0 },
        pct_metadata,
        pct_pieces,
        pct_egress,
        per_packet_delays_ms,
        integrity_ok,
        published,
        signature_failures,
        exposures: net.stats.exposures.len(),
        failures: rec.failures.clone(),
        events: net.stats.events,
    }
}
