use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use harpocrates_crypto::wire::Writer;
use harpocrates_crypto::{hmac_verify, open, proxy_setup, proxy_sign, seal, Commitment, DelegationBundle, KeyPair};
use harpocrates_crypto::ProxySigningContext;
use rand_chacha::ChaCha20Rng;

use super::{ack, Publication, RunRecord, Setup};
use crate::name::Name;
use crate::network::Ctx;
use crate::packet::{Data, Interest, SignatureInfo, Traffic};
use crate::protocol::{encode_commitment_reply, DelegationMetadata, InnerPacket, ToProxy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProxyRole {
    /// Relays registered uploads to the selected proxy.
    Collaborating,
    /// Receives the delegation, gathers, reconciles and publishes.
    Selected,
    /// Baseline endpoint with out-of-band metadata and no delegation.
    Sink,
}

pub struct Proxy {
    setup: Rc<Setup>,
    index: usize,
    role: ProxyRole,
    keys: KeyPair,
    rng: ChaCha20Rng,
    registered: BTreeSet<String>,
    meta: Option<DelegationMetadata>,
    signer: Option<ProxySigningContext>,
    pending_registrations: usize,
    credentials_name: Option<Name>,
    received: BTreeMap<u64, Rc<Vec<u8>>>,
    published: bool,
}

impl Proxy {
    pub fn new(setup: Rc<Setup>, index: usize, role: ProxyRole, keys: KeyPair, rng: ChaCha20Rng) -> Self {
        let meta = (role == ProxyRole::Sink).then(|| setup.meta.clone());
        let mut registered = BTreeSet::new();
        if let Some(m) = &meta {
            registered.insert(m.data_id_hex());
        }
        Self {
            setup,
            index,
            role,
            keys,
            rng,
            registered,
            meta,
            signer: None,
            pending_registrations: 0,
            credentials_name: None,
            received: BTreeMap::new(),
            published: false,
        }
    }

    fn decoy(&self) -> &str {
        self.setup.proxy_decoys[self.index].first().expect("one-component decoy")
    }

    fn mesh_name(target: usize, parts: &[&str]) -> Name {
        let mut n = Name::from_components(["proxy".to_owned(), target.to_string()]);
        for p in parts {
            n = n.child(*p);
        }
        n
    }

    fn on_covert(&mut self, ctx: &mut Ctx<'_, RunRecord>, interest: &Interest) -> bool {
        let Some(payload) = &interest.payload else { return false };
        let Ok(plain) = open(&self.setup.session_key, payload) else { return false };
        match ToProxy::decode(&plain) {
            Ok(ToProxy::Metadata(meta)) => {
                let setup = self.setup.clone();
                let commitment = Commitment::create(
                    &setup.group,
                    &self.keys,
                    meta.data_name.to_string().into_bytes(),
                    meta.data_hmac.clone(),
                    meta.hmac_key.clone(),
                    &mut self.rng,
                );
                let reply = encode_commitment_reply(&meta.data_id, &commitment.to_bytes());
                let sealed = seal(&setup.session_key, &reply, &mut self.rng);
                self.registered.insert(meta.data_id_hex());
                self.meta = Some(meta);
                ctx.send_data(Data::new(interest.name.clone(), sealed, Traffic::Delegation));
            }
            Ok(ToProxy::Credentials(raw)) => {
                let Some(meta) = &self.meta else { return true };
                let id = meta.data_id_hex();
                let producer_public = DelegationBundle::from_bytes(&raw)
                    .ok()
                    .map(|b| (b.warrant.producer_public.clone(), b));
                let ctx_or_err = producer_public
                    .as_ref()
                    .map(|(pk, b)| proxy_setup(&self.setup.group, b, pk));
                match ctx_or_err {
                    Some(Ok(signer)) => self.signer = Some(signer),
                    _ => {
                        ctx.shared.failures.push("selected proxy: delegation invalid".into());
                        return true;
                    }
                }
                self.credentials_name = Some(interest.name.clone());
                let others: Vec<usize> = (0..self.setup.proxy_decoys.len()).filter(|&k| k != self.index).collect();
                self.pending_registrations = others.len();
                for k in others {
                    let i = Interest::new(Self::mesh_name(k, &["register", &id]), 0, Traffic::ProxyMesh);
                    ctx.send_interest(i);
                }
                self.maybe_ack_credentials(ctx);
            }
            Err(_) => return false,
        }
        true
    }

    fn maybe_ack_credentials(&mut self, ctx: &mut Ctx<'_, RunRecord>) {
        if self.pending_registrations == 0 {
            if let Some(name) = self.credentials_name.take() {
                let sealed = seal(&self.setup.session_key, b"ok", &mut self.rng);
                ctx.send_data(Data::new(name, sealed, Traffic::Delegation));
            }
        }
    }

    fn gather(&mut self, ctx: &mut Ctx<'_, RunRecord>, seq: u64, payload: Rc<Vec<u8>>) {
        if seq >= self.setup.total_packets() || self.received.contains_key(&seq) {
            return;
        }
        ctx.shared.arrivals[seq as usize] = Some(ctx.now());
        self.received.insert(seq, payload);
        if !self.published && self.received.len() as u64 == self.setup.total_packets() {
            self.reconcile(ctx);
        }
    }

    /// Opens every gathered packet with the data key, reassembles the data
    /// in sequence order and publishes it only if the HMAC verifies.
    fn reconcile(&mut self, ctx: &mut Ctx<'_, RunRecord>) {
        let Some(meta) = self.meta.clone() else { return };
        let mut data = Vec::with_capacity(self.setup.data.len());
        let mut contents = Vec::with_capacity(self.received.len());
        let mut corrupt = Vec::new();
        for (&seq, payload) in &self.received {
            match open(&meta.data_key, payload).ok().and_then(|p| InnerPacket::decode(&p).ok()) {
                Some(inner) if inner.seq == seq => {
                    data.extend_from_slice(&inner.content);
                    contents.push((seq, inner));
                }
                _ => corrupt.push(seq),
            }
        }
        if !corrupt.is_empty() {
            for seq in corrupt {
                self.received.remove(&seq);
                ctx.shared.arrivals[seq as usize] = None;
            }
            return;
        }
        self.published = true;
        let hmac_ok = hmac_verify(&meta.hmac_key, &data, &meta.data_hmac);
        if !hmac_ok {
            ctx.shared.failures.push("reconciled data fails the HMAC check".into());
        }
        let mut packets = Vec::new();
        if let (true, Some(signer)) = (hmac_ok, &self.signer) {
            let warrant = Rc::new(signer.warrant().to_bytes());
            for (seq, inner) in contents {
                let mut d = Data::new(meta.data_name.child(seq.to_string()), inner.content, Traffic::Ack);
                d.signature_info = SignatureInfo {
                    certificate_id: inner.certificate_id,
                    warrant: Some(warrant.clone()),
                };
                let sig = proxy_sign(signer, &d.signed_portion(), &mut self.rng);
                let mut w = Writer::new();
                w.uint(&sig.t).uint(&sig.a).uint(&sig.b);
                d.signature_value = w.finish();
                packets.push(d);
            }
        }
        ctx.shared.publication = Some(Publication {
            at: ctx.now(),
            data: if hmac_ok { data } else { Vec::new() },
            hmac_ok,
            packets,
        });
    }

    pub fn start(&mut self, _ctx: &mut Ctx<'_, RunRecord>) {}

    pub fn on_interest(&mut self, ctx: &mut Ctx<'_, RunRecord>, interest: Rc<Interest>) {
        let name = &interest.name;
        let parts: Vec<&str> = name.components().iter().map(String::as_str).collect();
        let me = self.index.to_string();
        match parts.as_slice() {
            ["proxy", target, "register", id] if *target == me => {
                self.registered.insert((*id).to_owned());
                ctx.send_data(ack(name, Traffic::ProxyMesh));
            }
            ["proxy", target, "relay", id, seq] if *target == me => {
                ctx.send_data(ack(name, Traffic::ProxyMesh));
                if let (true, Ok(seq), Some(p)) = (self.registered.contains(*id), seq.parse(), &interest.payload) {
                    self.gather(ctx, seq, p.clone());
                }
            }
            ["upload", target, id, seq] if *target == me => {
                ctx.send_data(ack(name, Traffic::Ack));
                if let (true, Ok(seq), Some(p)) = (self.registered.contains(*id), seq.parse(), &interest.payload) {
                    self.gather(ctx, seq, p.clone());
                }
            }
            [decoy, id, seq] if *decoy == self.decoy() && self.registered.contains(*id) => {
                ctx.send_data(ack(name, Traffic::Ack));
                let (Ok(seq), Some(p)) = (seq.parse::<u64>(), interest.payload.clone()) else {
                    return;
                };
                if self.role == ProxyRole::Collaborating {
                    let relay = Self::mesh_name(self.setup.selected_proxy, &["relay", id, &seq.to_string()]);
                    ctx.send_interest(Interest::new(relay, 0, Traffic::ProxyMesh).with_shared_payload(p));
                } else {
                    self.gather(ctx, seq, p);
                }
            }
            [decoy, ..] if *decoy == self.decoy() => {
                let handled = self.role == ProxyRole::Selected && self.on_covert(ctx, &interest);
                if !handled {
                    // Unrelated decoy-prefix traffic gets an ordinary reply.
                    ctx.send_data(ack(name, Traffic::Ack));
                }
            }
            _ => {}
        }
    }

    pub fn on_data(&mut self, ctx: &mut Ctx<'_, RunRecord>, data: Rc<Data>) {
        let parts: Vec<&str> = data.name.components().iter().map(String::as_str).collect();
        if let ["proxy", _, "register", _] = parts.as_slice() {
            self.pending_registrations = self.pending_registrations.saturating_sub(1);
            self.maybe_ack_credentials(ctx);
        }
    }

    pub fn on_timer(&mut self, _ctx: &mut Ctx<'_, RunRecord>, _token: u64) {}
}
