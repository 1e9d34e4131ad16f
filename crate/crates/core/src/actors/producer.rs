use std::ops::Range;
use std::rc::Rc;

use harpocrates_crypto::proxy::Certificate;
use harpocrates_crypto::{build_warrant, delegate, open, pk_seal, seal, Commitment, KeyPair, SymmetricKey};
use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::{parse_sync, RunRecord, Setup, SyncMessage};
use crate::config::Mode;
use crate::name::Name;
use crate::network::Ctx;
use crate::packet::{Data, Interest, Traffic};
use crate::protocol::{decode_commitment_reply, ToProxy, UploadingMetadata};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Delegation {
    AwaitCommitment,
    AwaitAck,
    Done,
    Aborted,
}

/// Producer-side state of one collaborating peer.
struct Slot {
    pair_key: SymmetricKey,
    pieces: Vec<Range<u64>>,
    decoy: Option<Name>,
    push: bool,
    last_request: Option<usize>,
    repeats: u32,
    /// Requests that arrived before the peer was ready to be served.
    deferred: Vec<(usize, Name)>,
    sealed: Vec<Option<Rc<Vec<u8>>>>,
}

pub struct Producer {
    setup: Rc<Setup>,
    keys: KeyPair,
    rng: ChaCha20Rng,
    state: Delegation,
    delegation_names: [Option<Name>; 2],
    slots: Vec<Slot>,
}

impl Producer {
    pub fn new(setup: Rc<Setup>, keys: KeyPair, mut rng: ChaCha20Rng) -> Self {
        let slots = setup
            .assignment
            .per_peer
            .iter()
            .map(|pieces| Slot {
                pair_key: SymmetricKey::generate(&mut rng),
                pieces: pieces.clone(),
                decoy: None,
                push: false,
                last_request: None,
                repeats: 0,
                deferred: Vec::new(),
                sealed: vec![None; pieces.len()],
            })
            .collect();
        Self {
            setup,
            keys,
            rng,
            state: Delegation::AwaitCommitment,
            delegation_names: [None, None],
            slots,
        }
    }

    /// A fresh innocuous-looking name under the selected proxy's decoy prefix.
    fn covert_name(&mut self) -> Name {
        let decoy = &self.setup.proxy_decoys[self.setup.selected_proxy];
        let tag: [u8; 8] = self.rng.gen();
        decoy.child(hex::encode(tag)).child(self.rng.gen::<u32>().to_string())
    }

    fn send_covert(&mut self, ctx: &mut Ctx<'_, RunRecord>, msg: ToProxy, slot: usize) {
        let name = self.covert_name();
        let payload = seal(&self.setup.session_key, &msg.encode(), &mut self.rng);
        self.delegation_names[slot] = Some(name.clone());
        ctx.send_interest(Interest::new(name, self.rng.gen(), Traffic::Delegation).with_payload(payload));
    }

    fn abort(&mut self, ctx: &mut Ctx<'_, RunRecord>, why: &str) {
        self.state = Delegation::Aborted;
        ctx.shared.failures.push(format!("producer aborted delegation: {why}"));
    }

    fn ready(&self, peer: usize) -> bool {
        self.state == Delegation::Done && self.slots[peer].decoy.is_some()
    }

    fn sealed_piece(&mut self, peer: usize, piece: usize) -> Rc<Vec<u8>> {
        if let Some(s) = &self.slots[peer].sealed[piece] {
            return s.clone();
        }
        let slot = &self.slots[peer];
        let decoy = slot.decoy.clone().expect("ready peer has a decoy");
        let body = self.setup.piece_body(&decoy, slot.pieces[piece].clone(), &mut self.rng);
        let sealed = Rc::new(seal(&slot.pair_key, &body.encode(), &mut self.rng));
        self.slots[peer].sealed[piece] = Some(sealed.clone());
        sealed
    }

    fn push_from(&mut self, ctx: &mut Ctx<'_, RunRecord>, peer: usize, first: usize) {
        self.slots[peer].push = true;
        for piece in first..self.slots[peer].pieces.len() {
            let payload = self.sealed_piece(peer, piece);
            let name = self.setup.piece_name(peer, piece).child("push");
            let i = Interest::new(name, self.rng.gen(), Traffic::Push)
                .with_shared_payload(payload)
                .multicast_from(ctx.node());
            ctx.send_interest(i);
            ctx.shared.dispatched(self.slots[peer].pieces[piece].clone(), ctx.now());
        }
    }

    fn serve(&mut self, ctx: &mut Ctx<'_, RunRecord>, peer: usize, piece: usize, name: Name) {
        let slot = &mut self.slots[peer];
        if slot.push {
            return;
        }
        if slot.last_request == Some(piece) {
            slot.repeats += 1;
        } else {
            slot.last_request = Some(piece);
            slot.repeats = 1;
        }
        if self.setup.cfg.mode == Mode::Hybrid && slot.repeats >= self.setup.cfg.threshold {
            ctx.shared.switched_to_push[peer] = true;
            self.push_from(ctx, peer, piece);
            return;
        }
        if self.setup.cfg.mode == Mode::Hybrid && self.slots[peer].repeats > 1 {
            // A repeat means the previous reply was intercepted; resending
            // it along the same path only feeds the censor.
            return;
        }
        let content = self.sealed_piece(peer, piece);
        ctx.shared.dispatched(self.slots[peer].pieces[piece].clone(), ctx.now());
        let mut d = Data::new(name, Vec::new(), Traffic::Piece);
        d.content = content;
        ctx.send_data(d);
    }

    fn release(&mut self, ctx: &mut Ctx<'_, RunRecord>, peer: usize) {
        if !self.ready(peer) {
            return;
        }
        if self.setup.cfg.mode == Mode::Push {
            if !self.slots[peer].push {
                self.push_from(ctx, peer, 0);
            }
            return;
        }
        for (piece, name) in std::mem::take(&mut self.slots[peer].deferred) {
            self.serve(ctx, peer, piece, name);
        }
    }

    fn on_commitment(&mut self, ctx: &mut Ctx<'_, RunRecord>, data: &Data) {
        let setup = self.setup.clone();
        let Ok(plain) = open(&setup.session_key, &data.content) else {
            return self.abort(ctx, "commitment reply does not open");
        };
        let Ok((data_id, raw)) = decode_commitment_reply(&plain) else {
            return self.abort(ctx, "malformed commitment reply");
        };
        if data_id != setup.meta.data_id {
            return self.abort(ctx, "commitment bound to another session");
        }
        let Ok(commitment) = Commitment::from_bytes(&raw) else {
            return self.abort(ctx, "malformed commitment");
        };
        let meta = &setup.meta;
        if commitment.data_name != meta.data_name.to_string().into_bytes()
            || commitment.data_hmac != meta.data_hmac
            || commitment.hmac_key != meta.hmac_key
        {
            return self.abort(ctx, "commitment fields differ from the metadata");
        }
        let cert: Certificate = setup.proxy_certificates[setup.selected_proxy].clone();
        let warrant = match build_warrant(&setup.group, commitment, cert, self.keys.public().clone()) {
            Ok(w) => w,
            Err(e) => return self.abort(ctx, &e.to_string()),
        };
        let bundle = delegate(&setup.group, &self.keys, warrant, &mut self.rng);
        self.state = Delegation::AwaitAck;
        self.send_covert(ctx, ToProxy::Credentials(bundle.to_bytes()), 1);
    }

    /// Sends every collaborating peer its uploading metadata. Only called
    /// once the selected proxy holds the delegation.
    fn share_metadata(&mut self, ctx: &mut Ctx<'_, RunRecord>) {
        let setup = self.setup.clone();
        for (peer, public) in setup.peer_publics.iter().enumerate() {
            let slot = &self.slots[peer];
            let meta = UploadingMetadata {
                pair_key: slot.pair_key.clone(),
                piece_names: (0..slot.pieces.len()).map(|k| setup.piece_name(peer, k)).collect(),
            };
            let payload = pk_seal(&setup.group, public, &meta.encode(), &mut self.rng);
            let i = Interest::new(setup.metadata_name(peer), self.rng.gen(), Traffic::Metadata)
                .with_payload(payload)
                .multicast_from(ctx.node());
            ctx.send_interest(i);
        }
    }

    pub fn start(&mut self, ctx: &mut Ctx<'_, RunRecord>) {
        let meta = self.setup.meta.clone();
        self.send_covert(ctx, ToProxy::Metadata(meta), 0);
    }

    pub fn on_interest(&mut self, ctx: &mut Ctx<'_, RunRecord>, interest: Rc<Interest>) {
        let Some(SyncMessage::Pull { peer, piece, .. }) = parse_sync(&self.setup.cfg.sync_prefix, &interest.name)
        else {
            return;
        };
        if peer >= self.slots.len() || piece >= self.slots[peer].pieces.len() {
            return;
        }
        if self.ready(peer) {
            self.serve(ctx, peer, piece, interest.name.clone());
        } else {
            self.slots[peer].deferred.push((piece, interest.name.clone()));
        }
    }

    pub fn on_data(&mut self, ctx: &mut Ctx<'_, RunRecord>, data: Rc<Data>) {
        if self.delegation_names[0].as_ref() == Some(&data.name) && self.state == Delegation::AwaitCommitment {
            self.on_commitment(ctx, &data);
            return;
        }
        if self.delegation_names[1].as_ref() == Some(&data.name) && self.state == Delegation::AwaitAck {
            match open(&self.setup.session_key, &data.content) {
                Ok(body) if body == b"ok" => {
                    self.state = Delegation::Done;
                    ctx.shared.delegation_done = Some(ctx.now());
                    self.share_metadata(ctx);
                }
                _ => self.abort(ctx, "proxy rejected the credentials"),
            }
            return;
        }
        if let Some(SyncMessage::Metadata { peer }) = parse_sync(&self.setup.cfg.sync_prefix, &data.name) {
            if peer >= self.slots.len() || self.slots[peer].decoy.is_some() {
                return;
            }
            let decoy = open(&self.slots[peer].pair_key, &data.content)
                .ok()
                .and_then(|b| String::from_utf8(b).ok())
                .and_then(|s| s.parse::<Name>().ok())
                .filter(|n| self.setup.proxy_decoys.contains(n));
            if let Some(decoy) = decoy {
                self.slots[peer].decoy = Some(decoy);
                ctx.shared.last_decoy_reply = Some(ctx.now());
                self.release(ctx, peer);
            }
        }
    }

    pub fn on_timer(&mut self, _ctx: &mut Ctx<'_, RunRecord>, _token: u64) {}
}
