//! Protocol state machines: producer, collaborating peers, censors, proxies
//! and the direct and onion baselines.

mod baseline;
mod censor;
mod peer;
mod producer;
mod proxy;

use std::rc::Rc;

use harpocrates_crypto::proxy::Certificate;
use harpocrates_crypto::{seal, SchnorrGroup, SymmetricKey};
use num_bigint::BigUint;
use rand::RngCore;

use crate::config::ScenarioConfig;
use crate::engine::SimTime;
use crate::name::Name;
use crate::network::{Application, Ctx};
use crate::packet::{Data, Interest};
use crate::protocol::{Assignment, DelegationMetadata, EmbeddedInterest, InnerPacket, PieceBody};

pub use baseline::{DirectUploader, OnionRelay, OnionSource};
pub use censor::Censor;
pub use peer::Peer;
pub use producer::Producer;
pub use proxy::{Proxy, ProxyRole};

/// Immutable scenario material every actor may read. Fields an actor could
/// not know in a real deployment are only read by the actors entitled to
/// them (e.g. `meta` by the producer and by baseline sinks).
pub struct Setup {
    pub cfg: ScenarioConfig,
    pub group: SchnorrGroup,
    pub data: Vec<u8>,
    pub meta: DelegationMetadata,
    /// The producer's anonymous certificate id.
    pub certificate_id: Vec<u8>,
    /// Producer–selected-proxy covert-channel key.
    pub session_key: SymmetricKey,
    pub proxy_decoys: Vec<Name>,
    pub proxy_certificates: Vec<Certificate>,
    pub selected_proxy: usize,
    pub peer_publics: Vec<BigUint>,
    pub assignment: Assignment,
    /// Sealed length of a full piece, used by censors to forge plausible
    /// replies.
    pub nominal_piece_len: usize,
}

impl Setup {
    pub fn total_packets(&self) -> u64 {
        self.meta.expected_packets
    }

    pub fn packet_content(&self, seq: u64) -> &[u8] {
        let size = self.cfg.packet_size;
        let start = seq as usize * size;
        &self.data[start..(start + size).min(self.data.len())]
    }

    pub fn sealed_packet<R: RngCore + ?Sized>(&self, seq: u64, rng: &mut R) -> Vec<u8> {
        let inner = InnerPacket {
            seq,
            content: self.packet_content(seq).to_vec(),
            certificate_id: self.certificate_id.clone(),
        };
        seal(&self.meta.data_key, &inner.encode(), rng)
    }

    /// Plaintext body of the piece covering `packets`, whose decoy Interests
    /// are named under `decoy`.
    pub fn piece_body<R: RngCore + ?Sized>(
        &self,
        decoy: &Name,
        packets: std::ops::Range<u64>,
        rng: &mut R,
    ) -> PieceBody {
        let id = self.meta.data_id_hex();
        PieceBody {
            interests: packets
                .map(|seq| EmbeddedInterest {
                    name: decoy.child(id.clone()).child(seq.to_string()),
                    payload: self.sealed_packet(seq, rng),
                })
                .collect(),
        }
    }

    pub fn piece_name(&self, peer: usize, piece: usize) -> Name {
        self.cfg.sync_prefix.child(format!("Piece_{peer:03}_{piece:04}"))
    }

    pub fn metadata_name(&self, peer: usize) -> Name {
        self.cfg
            .sync_prefix
            .child(format!("Meta_{peer:03}"))
            .child(hex::encode(&self.meta.data_id[..4]))
    }

    pub fn pull_timeout(&self) -> SimTime {
        crate::engine::ms(self.cfg.pull_timeout_ms)
    }
}

/// Kinds of sync-channel message, recovered from the name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncMessage {
    Metadata { peer: usize },
    Pull { peer: usize, piece: usize, attempt: u32 },
    Push { peer: usize, piece: usize },
}

pub fn parse_sync(sync_prefix: &Name, name: &Name) -> Option<SyncMessage> {
    if !sync_prefix.is_prefix_of(name) || name.len() != sync_prefix.len() + 2 {
        return None;
    }
    let head = name.get(sync_prefix.len())?;
    let tail = name.get(sync_prefix.len() + 1)?;
    if let Some(p) = head.strip_prefix("Meta_") {
        return Some(SyncMessage::Metadata { peer: p.parse().ok()? });
    }
    let (peer, piece) = head.strip_prefix("Piece_")?.split_once('_')?;
    let (peer, piece) = (peer.parse().ok()?, piece.parse().ok()?);
    if tail == "push" {
        Some(SyncMessage::Push { peer, piece })
    } else {
        Some(SyncMessage::Pull {
            peer,
            piece,
            attempt: tail.parse().ok()?,
        })
    }
}

/// Outcome log of one run, filled in by the actors.
#[derive(Debug, Default)]
pub struct RunRecord {
    /// First time the piece holding each packet left the producer.
    pub dispatch: Vec<Option<SimTime>>,
    /// First arrival of each packet at the gathering proxy.
    pub arrivals: Vec<Option<SimTime>>,
    pub delegation_done: Option<SimTime>,
    pub last_decoy_reply: Option<SimTime>,
    pub last_piece_opened: Option<SimTime>,
    /// Per collaborating peer: received at least one bogus piece.
    pub bogus_victims: Vec<bool>,
    /// Per collaborating peer: the producer switched it to Push.
    pub switched_to_push: Vec<bool>,
    pub pieces_abandoned: u64,
    pub publication: Option<Publication>,
    pub failures: Vec<String>,
}

impl RunRecord {
    pub fn new(packets: u64, collab_peers: usize) -> Self {
        Self {
            dispatch: vec![None; packets as usize],
            arrivals: vec![None; packets as usize],
            bogus_victims: vec![false; collab_peers],
            switched_to_push: vec![false; collab_peers],
            ..Default::default()
        }
    }

    pub fn dispatched(&mut self, packets: std::ops::Range<u64>, now: SimTime) {
        for seq in packets {
            self.dispatch[seq as usize].get_or_insert(now);
        }
    }
}

/// Data reconstructed and published by the gathering proxy.
#[derive(Debug)]
pub struct Publication {
    pub at: SimTime,
    pub data: Vec<u8>,
    pub hmac_ok: bool,
    /// Proxy-signed Data packets; empty for baseline sinks, which hold no
    /// delegation.
    pub packets: Vec<Data>,
}

pub enum Actor {
    Producer(Producer),
    Peer(Peer),
    Censor(Censor),
    Proxy(Proxy),
    Direct(DirectUploader),
    OnionSource(OnionSource),
    OnionRelay(OnionRelay),
}

macro_rules! dispatch {
    ($self:ident, $a:ident => $e:expr) => {
        match $self {
            Actor::Producer($a) => $e,
            Actor::Peer($a) => $e,
            Actor::Censor($a) => $e,
            Actor::Proxy($a) => $e,
            Actor::Direct($a) => $e,
            Actor::OnionSource($a) => $e,
            Actor::OnionRelay($a) => $e,
        }
    };
}

impl Application for Actor {
    type Shared = RunRecord;

    fn start(&mut self, ctx: &mut Ctx<'_, RunRecord>) {
        dispatch!(self, a => a.start(ctx))
    }

    fn on_interest(&mut self, ctx: &mut Ctx<'_, RunRecord>, interest: Rc<Interest>) {
        dispatch!(self, a => a.on_interest(ctx, interest))
    }

    fn on_data(&mut self, ctx: &mut Ctx<'_, RunRecord>, data: Rc<Data>) {
        dispatch!(self, a => a.on_data(ctx, data))
    }

    fn on_timer(&mut self, ctx: &mut Ctx<'_, RunRecord>, token: u64) {
        dispatch!(self, a => a.on_timer(ctx, token))
    }
}

/// Small acknowledgement Data answering a carrier Interest.
pub(crate) fn ack(name: &Name, traffic: crate::packet::Traffic) -> Data {
    Data::new(name.clone(), vec![1], traffic)
}
