//! Hybrid public-key sealing in the Schnorr group.
//!
//! An ephemeral scalar `e` yields the share `g^e`; the AEAD key is
//! `SHA-256(share || y^e)` for recipient key `y`. Output layout:
//! `share || seal(key, plaintext)`, the share padded to the width of `P`, so
//! the ciphertext is always [`pk_overhead`] bytes longer than the plaintext.

use num_bigint::BigUint;
use rand::RngCore;
use sha2::{Digest, Sha256};

use crate::error::{CryptoError, Result};
use crate::group::SchnorrGroup;
use crate::symmetric::{self, SymmetricKey, SEAL_OVERHEAD};
use crate::wire::encode_uint;

fn derive_key(share: &BigUint, shared: &BigUint) -> SymmetricKey {
    let mut h = Sha256::new();
    h.update(b"harpocrates/pk-seal");
    h.update(encode_uint(share));
    h.update(encode_uint(shared));
    SymmetricKey::from_bytes(h.finalize().into(), 0)
}

pub fn pk_seal<R: RngCore + ?Sized>(
    group: &SchnorrGroup,
    recipient_public: &BigUint,
    plaintext: &[u8],
    rng: &mut R,
) -> Vec<u8> {
    let e = group.random_scalar(rng);
    let share = group.pow_g(&e);
    let shared = group.pow(recipient_public, &e);
    let key = derive_key(&share, &shared);
    let width = group.element_len();
    let raw = share.to_bytes_be();
    let mut out = vec![0u8; width - raw.len()];
    out.extend_from_slice(&raw);
    out.extend_from_slice(&symmetric::seal(&key, plaintext, rng));
    out
}

pub fn pk_open(group: &SchnorrGroup, recipient_private: &BigUint, ciphertext: &[u8]) -> Result<Vec<u8>> {
    let width = group.element_len();
    if ciphertext.len() < pk_overhead(group) {
        return Err(CryptoError::AuthenticationFailure);
    }
    let (head, body) = ciphertext.split_at(width);
    let share = BigUint::from_bytes_be(head);
    if share >= *group.p() {
        return Err(CryptoError::AuthenticationFailure);
    }
    let shared = group.pow(&share, recipient_private);
    symmetric::open(&derive_key(&share, &shared), body)
}

/// Ciphertext expansion of [`pk_seal`].
pub fn pk_overhead(group: &SchnorrGroup) -> usize {
    group.element_len() + SEAL_OVERHEAD
}
