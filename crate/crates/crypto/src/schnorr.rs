//! Schnorr key pairs, hashing into `Z*_Q`, and the baseline Schnorr signature.

use num_bigint::BigUint;
use num_traits::Zero;
use rand::RngCore;
use sha2::{Digest, Sha512};

use crate::group::SchnorrGroup;
use crate::wire::encode_uint;

#[derive(Clone, PartialEq, Eq)]
pub struct KeyPair {
    private: BigUint,
    public: BigUint,
}

impl std::fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KeyPair")
            .field("private", &"<redacted>")
            .field("public", &format_args!("{:x}", self.public))
            .finish()
    }
}

impl KeyPair {
    /// Derives the public half from an explicit private key in `Z*_Q`.
    pub fn from_private(group: &SchnorrGroup, private: BigUint) -> Self {
        assert!(
            !private.is_zero() && &private < group.q(),
            "private key outside Z*_Q"
        );
        let public = group.pow_g(&private);
        Self { private, public }
    }

    pub fn private(&self) -> &BigUint {
        &self.private
    }

    pub fn public(&self) -> &BigUint {
        &self.public
    }
}

/// Draws a private key uniformly from `Z*_Q`.
pub fn keygen<R: RngCore + ?Sized>(group: &SchnorrGroup, rng: &mut R) -> KeyPair {
    KeyPair::from_private(group, group.random_scalar(rng))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SchnorrSignature {
    /// Challenge digest `a = H(M || k)`.
    pub a: BigUint,
    /// Response `b = r - x*a mod Q`.
    pub b: BigUint,
}

/// Hashes arbitrary bytes into `[1, Q - 1]`: SHA-512, reduced mod `Q - 1`,
/// plus one.
pub fn hash_to_zq(group: &SchnorrGroup, message: &[u8]) -> BigUint {
    let digest = Sha512::digest(message);
    let modulus = group.q() - 1u32;
    (BigUint::from_bytes_be(&digest) % modulus) + 1u32
}

/// `H(M || k)` with `k` in its canonical length-prefixed form.
pub fn challenge(group: &SchnorrGroup, message: &[u8], k: &BigUint) -> BigUint {
    let mut buf = Vec::with_capacity(message.len() + group.element_len() + 4);
    buf.extend_from_slice(message);
    buf.extend_from_slice(&encode_uint(k));
    hash_to_zq(group, &buf)
}

/// `b = (r - x * a) mod Q`.
pub fn response(group: &SchnorrGroup, private: &BigUint, nonce: &BigUint, a: &BigUint) -> BigUint {
    let q = group.q();
    let xa = (private * a) % q;
    ((nonce % q) + q - xa) % q
}

/// `g^b * y^a mod P`, the commitment a verifier reconstructs.
pub fn reconstruct_commitment(
    group: &SchnorrGroup,
    public: &BigUint,
    a: &BigUint,
    b: &BigUint,
) -> BigUint {
    group.mul(&group.pow_g(b), &group.pow(public, a))
}

/// Signs with an explicit nonce `r`. Exposed for test vectors.
pub fn sign_with_nonce(
    group: &SchnorrGroup,
    private: &BigUint,
    message: &[u8],
    nonce: &BigUint,
) -> SchnorrSignature {
    let k = group.pow_g(nonce);
    let a = challenge(group, message, &k);
    let b = response(group, private, nonce, &a);
    SchnorrSignature { a, b }
}

pub fn schnorr_sign<R: RngCore + ?Sized>(
    group: &SchnorrGroup,
    signer: &KeyPair,
    message: &[u8],
    rng: &mut R,
) -> SchnorrSignature {
    let nonce = group.random_scalar(rng);
    sign_with_nonce(group, &signer.private, message, &nonce)
}

/// Accepts iff `H(M || g^b * y^a) == a`. Out-of-range inputs are rejected.
pub fn schnorr_verify(
    group: &SchnorrGroup,
    public: &BigUint,
    message: &[u8],
    sig: &SchnorrSignature,
) -> bool {
    if !well_formed(group, public, sig) {
        return false;
    }
    let k = reconstruct_commitment(group, public, &sig.a, &sig.b);
    challenge(group, message, &k) == sig.a
}

pub(crate) fn well_formed(group: &SchnorrGroup, public: &BigUint, sig: &SchnorrSignature) -> bool {
    !sig.a.is_zero()
        && &sig.a < group.q()
        && &sig.b < group.q()
        && !public.is_zero()
        && public < group.p()
}
