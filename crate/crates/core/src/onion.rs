//! Onion-routing baseline: three relays, one public-key layer per relay.

use std::time::Instant;

use harpocrates_crypto::wire::{Reader, Writer};
use harpocrates_crypto::{keygen, pk_open, pk_overhead, pk_seal, CryptoError, KeyPair, SchnorrGroup};
use num_bigint::BigUint;
use rand::RngCore;

use crate::name::Name;
use crate::topology::NodeId;

pub const CIRCUIT_LEN: usize = 3;

/// Relays in traversal order with their public keys.
#[derive(Debug, Clone)]
pub struct OnionCircuit {
    pub relays: Vec<NodeId>,
    pub relay_keys: Vec<BigUint>,
}

impl OnionCircuit {
    pub fn new(relays: Vec<NodeId>, relay_keys: Vec<BigUint>) -> Self {
        assert_eq!(relays.len(), CIRCUIT_LEN, "circuits have exactly three relays");
        assert_eq!(relay_keys.len(), CIRCUIT_LEN);
        for (i, r) in relays.iter().enumerate() {
            assert!(!relays[..i].contains(r), "relays must be distinct");
        }
        Self { relays, relay_keys }
    }

    /// Name of the leg entering relay `hop` for packet `seq`.
    pub fn leg_name(&self, hop: usize, seq: u64) -> Name {
        Name::from_components(["onion".to_owned(), self.relays[hop].to_string(), seq.to_string()])
    }
}

fn encode_layer(next: &Name, inner: &[u8]) -> Vec<u8> {
    let mut w = Writer::new();
    w.bytes(next.to_string().as_bytes()).bytes(inner);
    w.finish()
}

/// Seals `payload` for relays `2, 1, 0` in that order. Relay `j` learns only
/// the name of the next leg; the last relay learns `exit`.
pub fn onion_wrap<R: RngCore + ?Sized>(
    group: &SchnorrGroup,
    circuit: &OnionCircuit,
    seq: u64,
    exit: &Name,
    payload: &[u8],
    rng: &mut R,
) -> Vec<u8> {
    let mut body = payload.to_vec();
    for hop in (0..CIRCUIT_LEN).rev() {
        let next = if hop + 1 == CIRCUIT_LEN {
            exit.clone()
        } else {
            circuit.leg_name(hop + 1, seq)
        };
        body = pk_seal(group, &circuit.relay_keys[hop], &encode_layer(&next, &body), rng);
    }
    body
}

/// Removes one layer, returning the next leg's name and the inner body.
pub fn onion_unwrap(group: &SchnorrGroup, relay_private: &BigUint, layer: &[u8]) -> Result<(Name, Vec<u8>), CryptoError> {
    let plain = pk_open(group, relay_private, layer)?;
    let mut r = Reader::new(&plain);
    let next = std::str::from_utf8(r.bytes()?)
        .ok()
        .and_then(|s| s.parse::<Name>().ok())
        .ok_or_else(|| CryptoError::Decode("bad onion next hop".into()))?;
    let inner = r.bytes()?.to_vec();
    r.finish()?;
    Ok((next, inner))
}

/// Bytes one layer adds around a body whose next-hop name encodes to
/// `name_text_len` bytes.
pub fn layer_overhead(group: &SchnorrGroup, name_text_len: usize) -> usize {
    pk_overhead(group) + 8 + name_text_len
}

/// Measured per-layer cost in microseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerCost {
    pub encrypt_us: f64,
    pub decrypt_us: f64,
}

/// Times one layer seal and one layer open of a `packet_size` body on this
/// machine. Median of `rounds` samples.
pub fn calibrate<R: RngCore + ?Sized>(group: &SchnorrGroup, packet_size: usize, rounds: usize, rng: &mut R) -> LayerCost {
    let relay: KeyPair = keygen(group, rng);
    let mut body = vec![0u8; packet_size];
    rng.fill_bytes(&mut body);
    let next: Name = "/onion/0/0".parse().expect("static name");
    let mut enc = Vec::with_capacity(rounds);
    let mut dec = Vec::with_capacity(rounds);
    for _ in 0..rounds.max(1) {
        let t = Instant::now();
        let c = pk_seal(group, relay.public(), &encode_layer(&next, &body), rng);
        enc.push(t.elapsed().as_secs_f64() * 1e6);
        let t = Instant::now();
        let opened = onion_unwrap(group, relay.private(), &c).expect("own layer");
        dec.push(t.elapsed().as_secs_f64() * 1e6);
        std::hint::black_box(opened);
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    LayerCost {
        encrypt_us: median(&mut enc),
        decrypt_us: median(&mut dec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn circuit(group: &SchnorrGroup, rng: &mut ChaCha20Rng) -> (OnionCircuit, Vec<KeyPair>) {
        let keys: Vec<KeyPair> = (0..3).map(|_| keygen(group, rng)).collect();
        let c = OnionCircuit::new(vec![7, 3, 9], keys.iter().map(|k| k.public().clone()).collect());
        (c, keys)
    }

    #[test]
    fn wrap_then_unwrap_in_relay_order() {
        let group = SchnorrGroup::default_256();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let (c, keys) = circuit(&group, &mut rng);
        let exit: Name = "/upload/2/abcd/5".parse().unwrap();
        let payload = vec![42u8; 1000];
        let mut layer = onion_wrap(&group, &c, 5, &exit, &payload, &mut rng);
        for (hop, k) in keys.iter().enumerate() {
            let (next, inner) = onion_unwrap(&group, k.private(), &layer).unwrap();
            let want = if hop == 2 { exit.clone() } else { c.leg_name(hop + 1, 5) };
            assert_eq!(next, want);
            layer = inner;
        }
        assert_eq!(layer, payload);
    }

    #[test]
    fn out_of_order_unwrap_fails() {
        let group = SchnorrGroup::default_256();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let (c, keys) = circuit(&group, &mut rng);
        let layer = onion_wrap(&group, &c, 0, &"/upload/0/aa/0".parse().unwrap(), b"x", &mut rng);
        assert!(onion_unwrap(&group, keys[1].private(), &layer).is_err());
        assert!(onion_unwrap(&group, keys[2].private(), &layer).is_err());
    }

    #[test]
    fn growth_is_three_layer_overheads() {
        let group = SchnorrGroup::default_256();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let (c, _) = circuit(&group, &mut rng);
        let exit: Name = "/upload/0/ab/12".parse().unwrap();
        let layer = onion_wrap(&group, &c, 12, &exit, &[0u8; 500], &mut rng);
        let names = [c.leg_name(1, 12), c.leg_name(2, 12), exit];
        let expected: usize = 500 + names.iter().map(|n| layer_overhead(&group, n.to_string().len())).sum::<usize>();
        assert_eq!(layer.len(), expected);
    }

    #[test]
    #[should_panic(expected = "distinct")]
    fn repeated_relay_rejected() {
        OnionCircuit::new(vec![1, 2, 1], vec![BigUint::from(2u8); 3]);
    }
}
