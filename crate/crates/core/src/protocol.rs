//! Protocol messages exchanged by the actors and their byte encodings.

use std::ops::Range;

use harpocrates_crypto::wire::{Reader, Writer};
use harpocrates_crypto::{CryptoError, HmacKey, SymmetricKey};
use rand::Rng;

use crate::name::Name;

type CResult<T> = std::result::Result<T, CryptoError>;

fn read_name(r: &mut Reader<'_>) -> CResult<Name> {
    let raw = r.bytes()?;
    let text = std::str::from_utf8(raw).map_err(|_| CryptoError::Decode("name is not UTF-8".into()))?;
    text.parse().map_err(|_| CryptoError::Decode(format!("bad name {text:?}")))
}

/// What the producer tells the selected proxy over the covert channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelegationMetadata {
    pub data_name: Name,
    pub data_id: Vec<u8>,
    pub data_hmac: Vec<u8>,
    pub hmac_key: HmacKey,
    pub data_key: SymmetricKey,
    /// Number of Data packets the proxy must gather before reconciling.
    pub expected_packets: u64,
}

impl DelegationMetadata {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(self.data_name.to_string().as_bytes())
            .bytes(&self.data_id)
            .bytes(&self.data_hmac)
            .bytes(self.hmac_key.as_bytes())
            .bytes(self.data_key.as_bytes())
            .u64(self.expected_packets);
        w.finish()
    }

    pub fn decode(raw: &[u8]) -> CResult<Self> {
        let mut r = Reader::new(raw);
        let m = Self {
            data_name: read_name(&mut r)?,
            data_id: r.bytes()?.to_vec(),
            data_hmac: r.bytes()?.to_vec(),
            hmac_key: HmacKey::new(r.bytes()?.to_vec())?,
            data_key: SymmetricKey::from_slice(r.bytes()?, 0)?,
            expected_packets: r.u64()?,
        };
        r.finish()?;
        Ok(m)
    }

    pub fn data_id_hex(&self) -> String {
        hex::encode(&self.data_id)
    }
}

/// Messages the producer sends the selected proxy, sealed under the
/// session key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ToProxy {
    Metadata(DelegationMetadata),
    Credentials(Vec<u8>),
}

impl ToProxy {
    pub fn encode(&self) -> Vec<u8> {
        let (tag, body) = match self {
            ToProxy::Metadata(m) => (1u64, m.encode()),
            ToProxy::Credentials(b) => (2u64, b.clone()),
        };
        let mut w = Writer::new();
        w.u64(tag).bytes(&body);
        w.finish()
    }

    pub fn decode(raw: &[u8]) -> CResult<Self> {
        let mut r = Reader::new(raw);
        let tag = r.u64()?;
        let body = r.bytes()?;
        r.finish()?;
        match tag {
            1 => Ok(ToProxy::Metadata(DelegationMetadata::decode(body)?)),
            2 => Ok(ToProxy::Credentials(body.to_vec())),
            t => Err(CryptoError::Decode(format!("unknown message tag {t}"))),
        }
    }
}

/// The proxy's reply carrying its commitment, bound to the upload session
/// by the data id.
pub fn encode_commitment_reply(data_id: &[u8], commitment: &[u8]) -> Vec<u8> {
    let mut w = Writer::new();
    w.bytes(data_id).bytes(commitment);
    w.finish()
}

pub fn decode_commitment_reply(raw: &[u8]) -> CResult<(Vec<u8>, Vec<u8>)> {
    let mut r = Reader::new(raw);
    let out = (r.bytes()?.to_vec(), r.bytes()?.to_vec());
    r.finish()?;
    Ok(out)
}

/// What each collaborating peer learns from the producer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UploadingMetadata {
    pub pair_key: SymmetricKey,
    pub piece_names: Vec<Name>,
}

impl UploadingMetadata {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(self.pair_key.as_bytes()).u64(self.piece_names.len() as u64);
        for n in &self.piece_names {
            w.bytes(n.to_string().as_bytes());
        }
        w.finish()
    }

    pub fn decode(raw: &[u8]) -> CResult<Self> {
        let mut r = Reader::new(raw);
        let pair_key = SymmetricKey::from_slice(r.bytes()?, 0)?;
        let count = r.u64()? as usize;
        let piece_names = (0..count).map(|_| read_name(&mut r)).collect::<CResult<_>>()?;
        r.finish()?;
        Ok(Self {
            pair_key,
            piece_names,
        })
    }
}

/// One decoy Interest embedded in a piece.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddedInterest {
    pub name: Name,
    pub payload: Vec<u8>,
}

/// Plaintext of a data piece.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PieceBody {
    pub interests: Vec<EmbeddedInterest>,
}

impl PieceBody {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u64(self.interests.len() as u64);
        for i in &self.interests {
            w.bytes(i.name.to_string().as_bytes()).bytes(&i.payload);
        }
        w.finish()
    }

    pub fn decode(raw: &[u8]) -> CResult<Self> {
        let mut r = Reader::new(raw);
        let count = r.u64()? as usize;
        let interests = (0..count)
            .map(|_| {
                Ok(EmbeddedInterest {
                    name: read_name(&mut r)?,
                    payload: r.bytes()?.to_vec(),
                })
            })
            .collect::<CResult<_>>()?;
        r.finish()?;
        Ok(Self { interests })
    }
}

/// An inner Data packet before proxy signing: name, content and the
/// producer's anonymous certificate id. Sealed under the data key in
/// transit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InnerPacket {
    pub seq: u64,
    pub content: Vec<u8>,
    pub certificate_id: Vec<u8>,
}

impl InnerPacket {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u64(self.seq).bytes(&self.content).bytes(&self.certificate_id);
        w.finish()
    }

    pub fn decode(raw: &[u8]) -> CResult<Self> {
        let mut r = Reader::new(raw);
        let p = Self {
            seq: r.u64()?,
            content: r.bytes()?.to_vec(),
            certificate_id: r.bytes()?.to_vec(),
        };
        r.finish()?;
        Ok(p)
    }
}

/// Packet-sequence ranges of each piece, grouped per peer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub per_peer: Vec<Vec<Range<u64>>>,
}

impl Assignment {
    pub fn piece_count(&self) -> usize {
        self.per_peer.iter().map(Vec::len).sum()
    }
}

/// Splits `packets` consecutive Data packets into pieces of
/// `packets_per_piece` and hands each peer a contiguous run of pieces. Peer
/// shares are proportional to weights drawn uniformly from
/// `[1 - jitter, 1 + jitter]`, apportioned by largest remainder, so piece
/// counts differ across peers while every piece has exactly one owner.
pub fn assign_pieces<R: Rng + ?Sized>(
    packets: u64,
    packets_per_piece: u64,
    peers: usize,
    jitter: f64,
    rng: &mut R,
) -> Assignment {
    assert!(packets > 0 && packets_per_piece > 0 && peers > 0);
    let pieces = packets.div_ceil(packets_per_piece);
    let weights: Vec<f64> = (0..peers)
        .map(|_| 1.0 + if jitter > 0.0 { rng.gen_range(-jitter..=jitter) } else { 0.0 })
        .collect();
    let total: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| w / total * pieces as f64).collect();
    let mut counts: Vec<u64> = quotas.iter().map(|q| q.floor() as u64).collect();
    let mut order: Vec<usize> = (0..peers).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).expect("finite").then(a.cmp(&b))
    });
    let assigned: u64 = counts.iter().sum();
    for &i in order.iter().take((pieces - assigned) as usize) {
        counts[i] += 1;
    }
    let mut next_piece = 0u64;
    let per_peer = counts
        .iter()
        .map(|&c| {
            (0..c)
                .map(|_| {
                    let start = next_piece * packets_per_piece;
                    next_piece += 1;
                    start..(start + packets_per_piece).min(packets)
                })
                .collect()
        })
        .collect();
    Assignment { per_peer }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn assignment_partitions_packets() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for (packets, peers) in [(1024, 20), (1024, 40), (1024, 60), (7, 3), (3, 10), (102_400, 40)] {
            let a = assign_pieces(packets, 8, peers, 0.2, &mut rng);
            let flat: Vec<u64> = a.per_peer.iter().flatten().flat_map(|r| r.clone()).collect();
            assert_eq!(flat, (0..packets).collect::<Vec<_>>());
            assert_eq!(a.piece_count() as u64, packets.div_ceil(8));
        }
    }

    #[test]
    fn jitter_makes_shares_unequal() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let a = assign_pieces(1024, 8, 20, 0.2, &mut rng);
        let counts: Vec<usize> = a.per_peer.iter().map(Vec::len).collect();
        assert!(counts.iter().min() < counts.iter().max());
        let flat = assign_pieces(1024, 8, 16, 0.0, &mut rng);
        assert!(flat.per_peer.iter().all(|p| p.len() == 8));
    }

    #[test]
    fn messages_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let m = DelegationMetadata {
            data_name: "/alice/video".parse().unwrap(),
            data_id: vec![1, 2, 3],
            data_hmac: vec![9; 32],
            hmac_key: HmacKey::generate(&mut rng),
            data_key: SymmetricKey::generate(&mut rng),
            expected_packets: 1024,
        };
        // Key ids are local handles and never travel, so compare encodings.
        let msg = ToProxy::Metadata(m.clone());
        assert_eq!(ToProxy::decode(&msg.encode()).unwrap().encode(), msg.encode());
        let u = UploadingMetadata {
            pair_key: SymmetricKey::generate(&mut rng),
            piece_names: vec!["/sync/Game1/Piece_001_0000".parse().unwrap()],
        };
        assert_eq!(UploadingMetadata::decode(&u.encode()).unwrap().encode(), u.encode());
        let b = PieceBody {
            interests: vec![EmbeddedInterest {
                name: "/Mendeley/abc/7".parse().unwrap(),
                payload: vec![5; 40],
            }],
        };
        assert_eq!(PieceBody::decode(&b.encode()).unwrap(), b);
        let p = InnerPacket {
            seq: 4,
            content: vec![1; 10],
            certificate_id: b"cert".to_vec(),
        };
        assert_eq!(InnerPacket::decode(&p.encode()).unwrap(), p);
    }
}
