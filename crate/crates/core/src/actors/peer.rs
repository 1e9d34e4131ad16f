use std::rc::Rc;

use harpocrates_crypto::{open, pk_open, seal, KeyPair};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::{parse_sync, RunRecord, Setup, SyncMessage};
use crate::config::Mode;
use crate::engine::SimTime;
use crate::name::Name;
use crate::network::Ctx;
use crate::packet::{Data, Interest, Traffic};
use crate::protocol::{PieceBody, UploadingMetadata};

/// A sync-group member. Collaborating peers carry an index into the
/// producer's assignment; other peers stay silent.
pub struct Peer {
    setup: Rc<Setup>,
    index: Option<usize>,
    keys: KeyPair,
    rng: ChaCha20Rng,
    meta: Option<UploadingMetadata>,
    push: bool,
    /// Piece and attempt of the outstanding pull request.
    current: Option<(usize, u32)>,
    opened: Vec<bool>,
    next_egress: SimTime,
}

fn token(piece: usize, attempt: u32) -> u64 {
    ((piece as u64) << 32) | attempt as u64
}

impl Peer {
    pub fn new(setup: Rc<Setup>, index: Option<usize>, keys: KeyPair, rng: ChaCha20Rng) -> Self {
        let push = setup.cfg.mode == Mode::Push;
        Self {
            setup,
            index,
            keys,
            rng,
            meta: None,
            push,
            current: None,
            opened: Vec::new(),
            next_egress: 0,
        }
    }

    fn egress_interval(&self) -> SimTime {
        (1e9 / self.setup.cfg.egress_rate).round() as SimTime
    }

    fn pull(&mut self, ctx: &mut Ctx<'_, RunRecord>, piece: usize, attempt: u32) {
        let idx = self.index.expect("collaborating peer");
        self.current = Some((piece, attempt));
        let name = self.setup.piece_name(idx, piece).child(attempt.to_string());
        ctx.send_interest(Interest::new(name, self.rng.gen(), Traffic::Sync).multicast_from(ctx.node()));
        ctx.timer_in(self.setup.pull_timeout(), token(piece, attempt));
    }

    /// Moves to the next unopened piece after `piece`, if any.
    fn advance(&mut self, ctx: &mut Ctx<'_, RunRecord>, piece: usize) {
        self.current = None;
        if self.push {
            return;
        }
        if let Some(next) = (piece + 1..self.opened.len()).find(|&k| !self.opened[k]) {
            self.pull(ctx, next, 0);
        }
    }

    fn retry_or_skip(&mut self, ctx: &mut Ctx<'_, RunRecord>, piece: usize, attempt: u32) {
        if self.push {
            self.current = None;
        } else if attempt < self.setup.cfg.max_retries {
            self.pull(ctx, piece, attempt + 1);
        } else {
            ctx.shared.pieces_abandoned += 1;
            self.advance(ctx, piece);
        }
    }

    /// Opens a received piece and schedules its decoy Interests at the
    /// egress rate. Returns false for bogus pieces.
    fn accept_piece(&mut self, ctx: &mut Ctx<'_, RunRecord>, piece: usize, sealed: &[u8]) -> bool {
        let Some(meta) = &self.meta else { return false };
        let Some(body) = open(&meta.pair_key, sealed).ok().and_then(|b| PieceBody::decode(&b).ok()) else {
            return false;
        };
        if piece >= self.opened.len() || self.opened[piece] {
            return true;
        }
        self.opened[piece] = true;
        let now = ctx.now();
        let last = ctx.shared.last_piece_opened.get_or_insert(now);
        *last = (*last).max(now);
        let interval = self.egress_interval();
        for e in body.interests {
            let at = self.next_egress.max(now);
            self.next_egress = at + interval;
            let i = Interest::new(e.name, self.rng.gen(), Traffic::Egress).with_payload(e.payload);
            ctx.send_interest_at(at, i);
        }
        true
    }

    fn on_metadata(&mut self, ctx: &mut Ctx<'_, RunRecord>, interest: &Interest) {
        if self.meta.is_some() {
            return;
        }
        let Some(payload) = &interest.payload else { return };
        let Some(meta) = pk_open(&self.setup.group, self.keys.private(), payload)
            .ok()
            .and_then(|b| UploadingMetadata::decode(&b).ok())
        else {
            return;
        };
        let decoy: Name = self.setup.proxy_decoys.choose(&mut self.rng).expect("proxies").clone();
        let reply = seal(&meta.pair_key, decoy.to_string().as_bytes(), &mut self.rng);
        ctx.send_data(Data::new(interest.name.clone(), reply, Traffic::Sync));
        self.opened = vec![false; meta.piece_names.len()];
        self.meta = Some(meta);
        if !self.push && !self.opened.is_empty() {
            self.pull(ctx, 0, 0);
        }
    }

    pub fn start(&mut self, _ctx: &mut Ctx<'_, RunRecord>) {}

    pub fn on_interest(&mut self, ctx: &mut Ctx<'_, RunRecord>, interest: Rc<Interest>) {
        let Some(idx) = self.index else { return };
        match parse_sync(&self.setup.cfg.sync_prefix, &interest.name) {
            Some(SyncMessage::Metadata { peer }) if peer == idx => self.on_metadata(ctx, &interest),
            Some(SyncMessage::Push { peer, piece }) if peer == idx => {
                self.push = true;
                self.current = None;
                if let Some(p) = interest.payload.clone() {
                    if !self.accept_piece(ctx, piece, &p) {
                        ctx.shared.bogus_victims[idx] = true;
                    }
                }
            }
            _ => {}
        }
    }

    pub fn on_data(&mut self, ctx: &mut Ctx<'_, RunRecord>, data: Rc<Data>) {
        let Some(idx) = self.index else { return };
        let Some(SyncMessage::Pull { peer, piece, attempt }) = parse_sync(&self.setup.cfg.sync_prefix, &data.name)
        else {
            return;
        };
        if peer != idx {
            return;
        }
        let ok = self.accept_piece(ctx, piece, &data.content);
        if !ok {
            ctx.shared.bogus_victims[idx] = true;
        }
        if self.current == Some((piece, attempt)) {
            if ok {
                self.advance(ctx, piece);
            } else {
                self.retry_or_skip(ctx, piece, attempt);
            }
        }
    }

    pub fn on_timer(&mut self, ctx: &mut Ctx<'_, RunRecord>, t: u64) {
        let (piece, attempt) = ((t >> 32) as usize, t as u32);
        if self.current == Some((piece, attempt)) {
            self.retry_or_skip(ctx, piece, attempt);
        }
    }
}
