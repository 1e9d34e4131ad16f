use std::rc::Rc;

use harpocrates_crypto::KeyPair;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::{ack, RunRecord, Setup};
use crate::engine::{SimTime, NS_PER_US};
use crate::name::Name;
use crate::network::Ctx;
use crate::onion::{onion_unwrap, onion_wrap, OnionCircuit};
use crate::packet::{Data, Interest, Traffic};

fn upload_name(setup: &Setup, proxy: usize, seq: u64) -> Name {
    Name::from_components(["upload".to_owned(), proxy.to_string(), setup.meta.data_id_hex(), seq.to_string()])
}

fn us(v: f64) -> SimTime {
    (v * NS_PER_US as f64).round() as SimTime
}

/// Producer sending every packet straight to its nearest proxy.
pub struct DirectUploader {
    setup: Rc<Setup>,
    proxy: usize,
    rng: ChaCha20Rng,
}

impl DirectUploader {
    pub fn new(setup: Rc<Setup>, proxy: usize, rng: ChaCha20Rng) -> Self {
        Self { setup, proxy, rng }
    }

    /// Sends at the same per-host egress rate the peers obey.
    pub fn start(&mut self, ctx: &mut Ctx<'_, RunRecord>) {
        let interval = (1e9 / self.setup.cfg.egress_rate).round() as SimTime;
        for seq in 0..self.setup.total_packets() {
            let at = ctx.now() + seq * interval;
            let payload = self.setup.sealed_packet(seq, &mut self.rng);
            let name = upload_name(&self.setup, self.proxy, seq);
            ctx.send_interest_at(at, Interest::new(name, self.rng.gen(), Traffic::Egress).with_payload(payload));
            ctx.shared.dispatched(seq..seq + 1, at);
        }
    }

    pub fn on_interest(&mut self, _ctx: &mut Ctx<'_, RunRecord>, _i: Rc<Interest>) {}
    pub fn on_data(&mut self, _ctx: &mut Ctx<'_, RunRecord>, _d: Rc<Data>) {}
    pub fn on_timer(&mut self, _ctx: &mut Ctx<'_, RunRecord>, _t: u64) {}
}

/// Producer wrapping each packet in three layers. Layering is serialized on
/// the producer's CPU at three encryptions per packet.
pub struct OnionSource {
    setup: Rc<Setup>,
    circuit: OnionCircuit,
    exit_proxy: usize,
    rng: ChaCha20Rng,
}

impl OnionSource {
    pub fn new(setup: Rc<Setup>, circuit: OnionCircuit, exit_proxy: usize, rng: ChaCha20Rng) -> Self {
        Self {
            setup,
            circuit,
            exit_proxy,
            rng,
        }
    }

    pub fn start(&mut self, ctx: &mut Ctx<'_, RunRecord>) {
        let per_packet = 3 * us(self.setup.cfg.onion_encrypt_us);
        let mut cpu = ctx.now();
        for seq in 0..self.setup.total_packets() {
            ctx.shared.dispatched(seq..seq + 1, cpu);
            cpu += per_packet;
            let inner = self.setup.sealed_packet(seq, &mut self.rng);
            let exit = upload_name(&self.setup, self.exit_proxy, seq);
            let layered = onion_wrap(&self.setup.group, &self.circuit, seq, &exit, &inner, &mut self.rng);
            let i = Interest::new(self.circuit.leg_name(0, seq), self.rng.gen(), Traffic::Onion).with_payload(layered);
            ctx.send_interest_at(cpu, i);
        }
    }

    pub fn on_interest(&mut self, _ctx: &mut Ctx<'_, RunRecord>, _i: Rc<Interest>) {}
    pub fn on_data(&mut self, _ctx: &mut Ctx<'_, RunRecord>, _d: Rc<Data>) {}
    pub fn on_timer(&mut self, _ctx: &mut Ctx<'_, RunRecord>, _t: u64) {}
}

/// Relay peeling one layer per packet on a serial CPU.
pub struct OnionRelay {
    setup: Rc<Setup>,
    keys: KeyPair,
    rng: ChaCha20Rng,
    cpu_free: SimTime,
    pub peeled: u64,
}

impl OnionRelay {
    pub fn new(setup: Rc<Setup>, keys: KeyPair, rng: ChaCha20Rng) -> Self {
        Self {
            setup,
            keys,
            rng,
            cpu_free: 0,
            peeled: 0,
        }
    }

    pub fn start(&mut self, _ctx: &mut Ctx<'_, RunRecord>) {}

    pub fn on_interest(&mut self, ctx: &mut Ctx<'_, RunRecord>, interest: Rc<Interest>) {
        if interest.name.first() != Some("onion") {
            return;
        }
        ctx.send_data(ack(&interest.name, Traffic::Ack));
        let Some(payload) = &interest.payload else { return };
        let Ok((next, inner)) = onion_unwrap(&self.setup.group, self.keys.private(), payload) else {
            ctx.shared.failures.push(format!("relay cannot peel {}", interest.name));
            return;
        };
        self.peeled += 1;
        self.cpu_free = self.cpu_free.max(ctx.now()) + us(self.setup.cfg.onion_decrypt_us);
        let traffic = if next.first() == Some("onion") { Traffic::Onion } else { Traffic::Egress };
        let i = Interest::new(next, self.rng.gen(), traffic).with_payload(inner);
        ctx.send_interest_at(self.cpu_free, i);
    }

    pub fn on_data(&mut self, _ctx: &mut Ctx<'_, RunRecord>, _d: Rc<Data>) {}
    pub fn on_timer(&mut self, _ctx: &mut Ctx<'_, RunRecord>, _t: u64) {}
}
