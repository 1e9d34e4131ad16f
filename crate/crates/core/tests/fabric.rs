use std::rc::Rc;

use harpocrates::engine::{ms, SimTime};
use harpocrates::forwarder::ContentStore;
use harpocrates::name::Name;
use harpocrates::network::{Application, Ctx, FabricConfig, Network, NodeKind};
use harpocrates::packet::{Data, Interest, Traffic};
use proptest::prelude::*;

#[derive(Default)]
struct Log {
    data: Vec<(usize, SimTime, String)>,
    interests: Vec<(usize, SimTime, String)>,
}

enum Probe {
    Consumer(Vec<(SimTime, Name)>),
    Producer(usize),
    Pusher(Name),
    Multicaster(Name),
    Sink,
}

impl Application for Probe {
    type Shared = Log;

    fn start(&mut self, ctx: &mut Ctx<'_, Log>) {
        match self {
            Probe::Consumer(reqs) => {
                for (n, (at, name)) in reqs.iter().enumerate() {
                    ctx.send_interest_at(*at, Interest::new(name.clone(), n as u64, Traffic::Piece));
                }
            }
            Probe::Pusher(name) => ctx.send_data(Data::new(name.clone(), vec![1; 10], Traffic::Bogus)),
            Probe::Multicaster(name) => {
                let me = ctx.node();
                ctx.send_interest(Interest::new(name.clone(), 7, Traffic::Sync).multicast_from(me));
            }
            _ => {}
        }
    }

    fn on_interest(&mut self, ctx: &mut Ctx<'_, Log>, interest: Rc<Interest>) {
        let entry = (ctx.node(), ctx.now(), interest.name.to_string());
        ctx.shared.interests.push(entry);
        if let Probe::Producer(size) = self {
            ctx.send_data(Data::new(interest.name.clone(), vec![0; *size], Traffic::Piece));
        }
    }

    fn on_data(&mut self, ctx: &mut Ctx<'_, Log>, data: Rc<Data>) {
        let entry = (ctx.node(), ctx.now(), data.name.to_string());
        ctx.shared.data.push(entry);
    }
}

fn name(s: &str) -> Name {
    s.parse().unwrap()
}

/// consumer host - r1 - r2 - producer host, 2 ms per link.
fn line(config: FabricConfig) -> (Network<Probe>, [usize; 4]) {
    let mut net = Network::new(config, Log::default());
    let c = net.add_node(NodeKind::Host, true);
    let r1 = net.add_node(NodeKind::Router, true);
    let r2 = net.add_node(NodeKind::Router, true);
    let p = net.add_node(NodeKind::Host, true);
    net.add_link(c, r1, ms(2.0));
    net.add_link(r1, r2, ms(2.0));
    net.add_link(r2, p, ms(2.0));
    net.nodes[c].fib.insert(&Name::root(), 0);
    net.route_prefix(&name("/prod"), p);
    (net, [c, r1, r2, p])
}

#[test]
fn three_hop_path_has_six_ms_one_way_delay() {
    let (mut net, [c, _, _, p]) = line(FabricConfig::default());
    net.set_app(p, Probe::Producer(100));
    net.set_app(c, Probe::Consumer(vec![(0, name("/prod/a"))]));
    assert!(net.run(ms(1000.0)));
    assert_eq!(net.shared.interests, vec![(p, ms(6.0), "/prod/a".to_owned())]);
    assert_eq!(net.shared.data, vec![(c, ms(12.0), "/prod/a".to_owned())]);
    assert_eq!(net.stats.link_packets, 6);
}

#[test]
fn serialization_delay_adds_per_hop() {
    let (mut net, [c, _, _, p]) = line(FabricConfig {
        ns_per_byte: 8.0,
        ..FabricConfig::default()
    });
    net.set_app(p, Probe::Producer(1000));
    net.set_app(c, Probe::Consumer(vec![(0, name("/prod/a"))]));
    net.run(ms(1000.0));
    let i = Interest::new(name("/prod/a"), 0, Traffic::Piece).size_bytes() as u64;
    let d = Data::new(name("/prod/a"), vec![0; 1000], Traffic::Piece).size_bytes() as u64;
    assert_eq!(net.shared.data[0].1, ms(12.0) + 3 * 8 * (i + d));
}

#[test]
fn back_to_back_packets_queue_on_a_busy_link() {
    let mut net = Network::new(FabricConfig::default(), Log::default());
    let c = net.add_node(NodeKind::Host, true);
    let p = net.add_node(NodeKind::Host, true);
    net.add_link_with(c, p, ms(1.0), 1000.0);
    net.nodes[c].fib.insert(&Name::root(), 0);
    net.nodes[p].fib.insert(&name("/prod"), harpocrates::forwarder::APP_FACE);
    net.set_app(p, Probe::Sink);
    net.set_app(c, Probe::Consumer(vec![(0, name("/prod/a")), (0, name("/prod/b"))]));
    net.run(ms(100.0));
    let size = Interest::new(name("/prod/a"), 0, Traffic::Piece).size_bytes() as u64;
    let t: Vec<SimTime> = net.shared.interests.iter().map(|e| e.1).collect();
    assert_eq!(t, vec![ms(1.0) + 1000 * size, ms(1.0) + 2000 * size]);
}

#[test]
fn pit_aggregates_concurrent_requests() {
    let mut net = Network::new(FabricConfig::default(), Log::default());
    let c1 = net.add_node(NodeKind::Host, true);
    let c2 = net.add_node(NodeKind::Host, true);
    let r = net.add_node(NodeKind::Router, true);
    let p = net.add_node(NodeKind::Host, true);
    net.add_link(c1, r, ms(1.0));
    net.add_link(c2, r, ms(1.0));
    net.add_link(r, p, ms(5.0));
    for c in [c1, c2] {
        net.nodes[c].fib.insert(&Name::root(), 0);
    }
    net.route_prefix(&name("/prod"), p);
    net.set_app(p, Probe::Producer(10));
    net.set_app(c1, Probe::Consumer(vec![(0, name("/prod/x"))]));
    net.set_app(c2, Probe::Consumer(vec![(ms(0.5), name("/prod/x"))]));
    net.run(ms(100.0));
    assert_eq!(net.shared.interests.len(), 1);
    assert_eq!(net.stats.aggregated, 1);
    let mut got: Vec<usize> = net.shared.data.iter().map(|e| e.0).collect();
    got.sort_unstable();
    assert_eq!(got, vec![c1, c2]);
}

#[test]
fn content_store_answers_later_request() {
    let mut net = Network::new(FabricConfig::default(), Log::default());
    let c1 = net.add_node(NodeKind::Host, true);
    let c2 = net.add_node(NodeKind::Host, true);
    let r = net.add_node(NodeKind::Router, true);
    let p = net.add_node(NodeKind::Host, true);
    net.add_link(c1, r, ms(1.0));
    net.add_link(c2, r, ms(2.0));
    net.add_link(r, p, ms(5.0));
    for c in [c1, c2] {
        net.nodes[c].fib.insert(&Name::root(), 0);
    }
    net.route_prefix(&name("/prod"), p);
    net.set_app(p, Probe::Producer(10));
    net.set_app(c1, Probe::Consumer(vec![(0, name("/prod/x"))]));
    net.set_app(c2, Probe::Consumer(vec![(ms(50.0), name("/prod/x"))]));
    net.run(ms(200.0));
    assert_eq!(net.shared.interests.len(), 1);
    assert!(net.stats.cs_hits >= 1);
    let late = net.shared.data.iter().find(|e| e.0 == c2).unwrap();
    assert_eq!(late.1, ms(54.0));
}

#[test]
fn unsolicited_data_is_dropped() {
    let (mut net, [c, _, _, p]) = line(FabricConfig::default());
    net.set_app(c, Probe::Sink);
    net.set_app(p, Probe::Pusher(name("/prod/junk")));
    net.run(ms(100.0));
    assert!(net.shared.data.is_empty());
    assert_eq!(net.stats.unsolicited_drops, 1);
    assert_eq!(net.stats.link_packets, 0);
}

#[test]
fn missing_route_drops_interest() {
    let (mut net, [c, _, _, p]) = line(FabricConfig::default());
    net.set_app(p, Probe::Producer(10));
    net.set_app(c, Probe::Consumer(vec![(0, name("/other/x"))]));
    net.run(ms(100.0));
    assert!(net.shared.interests.is_empty());
    assert_eq!(net.stats.no_route_drops, 1);
}

/// inside host - inside router | outside router - outside host.
fn border() -> (Network<Probe>, [usize; 4]) {
    let mut net = Network::new(FabricConfig::default(), Log::default());
    let ih = net.add_node(NodeKind::Host, true);
    let ir = net.add_node(NodeKind::Router, true);
    let or = net.add_node(NodeKind::Router, false);
    let oh = net.add_node(NodeKind::Host, false);
    net.add_link(ih, ir, ms(1.0));
    net.add_link(ir, or, ms(1.0));
    net.add_link(or, oh, ms(1.0));
    net.nodes[ih].fib.insert(&Name::root(), 0);
    net.nodes[oh].fib.insert(&Name::root(), 0);
    for p in ["/Mendeley", "/alice"] {
        net.route_prefix(&name(p), oh);
    }
    net.route_prefix(&name("/inside"), ih);
    net.allow_egress("Mendeley");
    (net, [ih, ir, or, oh])
}

#[test]
fn border_blocks_egress_outside_allow_list() {
    let (mut net, [ih, ir, _, oh]) = border();
    assert!(net.nodes[ir].faces[1].border);
    assert!(!net.nodes[ir].faces[0].border);
    net.set_app(oh, Probe::Producer(10));
    net.set_app(ih, Probe::Consumer(vec![(0, name("/alice/doc")), (0, name("/Mendeley/d"))]));
    net.run(ms(100.0));
    assert_eq!(net.stats.border_drops, 1);
    let got: Vec<&str> = net.shared.data.iter().map(|e| e.2.as_str()).collect();
    assert_eq!(got, vec!["/Mendeley/d"]);
}

#[test]
fn border_blocks_ingress_outside_allow_list() {
    let (mut net, [ih, _, _, oh]) = border();
    net.set_app(ih, Probe::Producer(10));
    net.set_app(oh, Probe::Consumer(vec![(0, name("/inside/x"))]));
    net.run(ms(100.0));
    assert_eq!(net.stats.border_drops, 1);
    assert!(net.shared.interests.is_empty());
}

#[test]
fn inspection_flags_forbidden_prefix_and_bytes() {
    let (mut net, [ih, _, _, oh]) = border();
    net.forbid_visible(name("/alice"), vec![b"cert-42".to_vec()]);
    net.allow_egress("alice");
    net.set_app(oh, Probe::Producer(10));
    net.set_app(ih, Probe::Consumer(vec![(0, name("/alice/doc")), (0, name("/Mendeley/cert-42"))]));
    net.run(ms(100.0));
    // Interest and returning Data for each name.
    assert_eq!(net.stats.exposures.len(), 4);
}

#[test]
fn multicast_reaches_each_member_once() {
    let mut net = Network::new(FabricConfig::default(), Log::default());
    let routers: Vec<usize> = (0..4).map(|_| net.add_node(NodeKind::Router, true)).collect();
    for w in routers.windows(2) {
        net.add_link(w[0], w[1], ms(1.0));
    }
    net.add_link(routers[0], routers[3], ms(10.0));
    let members = [routers[0], routers[2], routers[3]];
    net.build_sync_group(&members);
    net.set_app(routers[2], Probe::Sink);
    net.set_app(routers[3], Probe::Sink);
    net.set_app(routers[0], Probe::Multicaster(name("/sync/x")));
    net.run(ms(100.0));
    let mut got: Vec<(usize, SimTime)> = net.shared.interests.iter().map(|e| (e.0, e.1)).collect();
    got.sort_unstable();
    assert_eq!(got, vec![(routers[2], ms(2.0)), (routers[3], ms(3.0))]);
}

fn data(n: u8) -> Rc<Data> {
    Rc::new(Data::new(name(&format!("/p/{n}")), vec![n], Traffic::Piece))
}

proptest! {
    #[test]
    fn content_store_respects_capacity(cap in 1usize..20, names in prop::collection::vec(0u8..40, 0..200)) {
        let mut cs = ContentStore::new(cap);
        for n in names.iter().copied() {
            cs.insert(data(n));
            prop_assert!(cs.len() <= cap);
            prop_assert!(cs.get(&data(n).name).is_some());
        }
    }

    #[test]
    fn every_delivery_answers_a_request(reqs in prop::collection::vec((0u32..50, 0u8..8, any::<bool>()), 1..40)) {
        let mut net = Network::new(FabricConfig::default(), Log::default());
        let c1 = net.add_node(NodeKind::Host, true);
        let c2 = net.add_node(NodeKind::Host, true);
        let r = net.add_node(NodeKind::Router, true);
        let p = net.add_node(NodeKind::Host, true);
        net.add_link(c1, r, ms(1.0));
        net.add_link(c2, r, ms(3.0));
        net.add_link(r, p, ms(4.0));
        for c in [c1, c2] {
            net.nodes[c].fib.insert(&Name::root(), 0);
        }
        net.route_prefix(&name("/prod"), p);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for &(t, n, first) in &reqs {
            let req = (ms(t as f64), name(&format!("/prod/{n}")));
            if first { a.push(req) } else { b.push(req) }
        }
        let asked: Vec<(usize, String)> = a.iter().map(|r| (c1, r.1.to_string()))
            .chain(b.iter().map(|r| (c2, r.1.to_string()))).collect();
        net.set_app(p, Probe::Producer(10));
        net.set_app(c1, Probe::Consumer(a));
        net.set_app(c2, Probe::Consumer(b));
        prop_assert!(net.run(ms(10_000.0)));
        for (node, _, n) in &net.shared.data {
            prop_assert!(asked.contains(&(*node, n.clone())));
        }
        prop_assert!(net.shared.data.len() <= asked.len());
        prop_assert!(net.shared.interests.len() <= asked.len());
        prop_assert_eq!(net.pit_occupancy(), 0);
    }
}
