//! Warrant-based proxy signatures.
//!
//! A producer with key pair `(PR_A, PK_A)` delegates signing to a proxy:
//!
//! 1. the proxy signs a [`Commitment`] over the publication name and the
//!    data HMAC with its primary key;
//! 2. the producer wraps it into a [`Warrant`], draws `i`, sets `t = g^i`,
//!    `W_h = H(W || t)` and `PR_S = W_h * PR_A + i mod Q` ([`delegate`]);
//! 3. the proxy checks `g^PR_S == PK_A^W_h * t` once ([`proxy_setup`]) and then
//!    signs messages as in plain Schnorr ([`proxy_sign`]);
//! 4. a consumer rebuilds `y = PK_A^W_h * t` and runs Schnorr verification
//!    against it ([`proxy_verify`]).

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::Zero;
use rand::RngCore;
use sha2::{Digest, Sha256};

use crate::error::{CryptoError, Result};
use crate::group::SchnorrGroup;
use crate::schnorr::{self, challenge, hash_to_zq, KeyPair, SchnorrSignature};
use crate::symmetric::HmacKey;
use crate::wire::{encode_uint, Reader, Writer};

/// Certificate of the proxy's primary key pair. Certificate chains are out
/// of scope; the id is opaque.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub id: Vec<u8>,
    pub public_key: BigUint,
}

/// The proxy's signed promise to publish exactly this data under this name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Commitment {
    pub data_name: Vec<u8>,
    pub data_hmac: Vec<u8>,
    pub hmac_key: HmacKey,
    pub signature: SchnorrSignature,
}

impl Commitment {
    fn signed_fields(data_name: &[u8], data_hmac: &[u8], hmac_key: &HmacKey) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(b"commitment")
            .bytes(data_name)
            .bytes(data_hmac)
            .bytes(hmac_key.as_bytes());
        w.finish()
    }

    pub fn create<R: RngCore + ?Sized>(
        group: &SchnorrGroup,
        proxy_primary: &KeyPair,
        data_name: Vec<u8>,
        data_hmac: Vec<u8>,
        hmac_key: HmacKey,
        rng: &mut R,
    ) -> Self {
        let fields = Self::signed_fields(&data_name, &data_hmac, &hmac_key);
        let signature = schnorr::schnorr_sign(group, proxy_primary, &fields, rng);
        Self {
            data_name,
            data_hmac,
            hmac_key,
            signature,
        }
    }

    pub fn verify(&self, group: &SchnorrGroup, proxy_public: &BigUint) -> bool {
        let fields = Self::signed_fields(&self.data_name, &self.data_hmac, &self.hmac_key);
        schnorr::schnorr_verify(group, proxy_public, &fields, &self.signature)
    }

    pub fn encode_into(&self, w: &mut Writer) {
        w.bytes(&self.data_name)
            .bytes(&self.data_hmac)
            .bytes(self.hmac_key.as_bytes())
            .uint(&self.signature.a)
            .uint(&self.signature.b);
    }

    pub fn decode_from(r: &mut Reader<'_>) -> Result<Self> {
        Ok(Self {
            data_name: r.bytes()?.to_vec(),
            data_hmac: r.bytes()?.to_vec(),
            hmac_key: HmacKey::new(r.bytes()?.to_vec())?,
            signature: SchnorrSignature {
                a: r.uint()?,
                b: r.uint()?,
            },
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode_into(&mut w);
        w.finish()
    }

    pub fn from_bytes(raw: &[u8]) -> Result<Self> {
        let mut r = Reader::new(raw);
        let c = Self::decode_from(&mut r)?;
        r.finish()?;
        Ok(c)
    }
}

/// Scope of a delegation: the proxy's commitment, its certificate and the
/// producer's public key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warrant {
    pub commitment: Commitment,
    pub proxy_certificate: Certificate,
    pub producer_public: BigUint,
}

impl Warrant {
    /// Canonical encoding, fields in declaration order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.commitment.encode_into(&mut w);
        w.bytes(&self.proxy_certificate.id)
            .uint(&self.proxy_certificate.public_key)
            .uint(&self.producer_public);
        w.finish()
    }

    pub fn from_bytes(raw: &[u8]) -> Result<Self> {
        let mut r = Reader::new(raw);
        let commitment = Commitment::decode_from(&mut r)?;
        let proxy_certificate = Certificate {
            id: r.bytes()?.to_vec(),
            public_key: r.uint()?,
        };
        let producer_public = r.uint()?;
        r.finish()?;
        Ok(Self {
            commitment,
            proxy_certificate,
            producer_public,
        })
    }
}

pub fn build_warrant(
    group: &SchnorrGroup,
    commitment: Commitment,
    proxy_certificate: Certificate,
    producer_public: BigUint,
) -> Result<Warrant> {
    if !commitment.verify(group, &proxy_certificate.public_key) {
        return Err(CryptoError::CommitmentInvalid);
    }
    if !group.contains(&producer_public) {
        return Err(CryptoError::InvalidGroup(
            "producer key outside the order-Q subgroup".into(),
        ));
    }
    Ok(Warrant {
        commitment,
        proxy_certificate,
        producer_public,
    })
}

/// `W_h = H(W || t)`.
pub fn warrant_digest(group: &SchnorrGroup, warrant_bytes: &[u8], t: &BigUint) -> BigUint {
    let mut buf = Vec::with_capacity(warrant_bytes.len() + group.element_len() + 4);
    buf.extend_from_slice(warrant_bytes);
    buf.extend_from_slice(&encode_uint(t));
    hash_to_zq(group, &buf)
}

/// What the producer hands the proxy: `<PR_S, W, t>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelegationBundle {
    pub delegated_private: BigUint,
    pub warrant: Warrant,
    pub t: BigUint,
}

impl DelegationBundle {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.uint(&self.delegated_private)
            .bytes(&self.warrant.to_bytes())
            .uint(&self.t);
        w.finish()
    }

    pub fn from_bytes(raw: &[u8]) -> Result<Self> {
        let mut r = Reader::new(raw);
        let delegated_private = r.uint()?;
        let warrant = Warrant::from_bytes(r.bytes()?)?;
        let t = r.uint()?;
        r.finish()?;
        Ok(Self {
            delegated_private,
            warrant,
            t,
        })
    }
}

/// `t = g^i`, `PR_S = W_h * PR_A + i mod Q` for explicit `i` and `W_h`.
pub fn delegated_key(
    group: &SchnorrGroup,
    producer_private: &BigUint,
    nonce: &BigUint,
    digest: &BigUint,
) -> (BigUint, BigUint) {
    let t = group.pow_g(nonce);
    let pr_s = (digest * producer_private + nonce) % group.q();
    (t, pr_s)
}

/// Derives a delegated key for the proxy named in `warrant`. `PR_S = 0`
/// (probability ~1/Q) is redrawn so the proxy key stays in `Z*_Q`.
pub fn delegate<R: RngCore + ?Sized>(
    group: &SchnorrGroup,
    producer: &KeyPair,
    warrant: Warrant,
    rng: &mut R,
) -> DelegationBundle {
    let warrant_bytes = warrant.to_bytes();
    loop {
        let i = group.random_scalar(rng);
        let t = group.pow_g(&i);
        let digest = warrant_digest(group, &warrant_bytes, &t);
        let (_, pr_s) = delegated_key(group, producer.private(), &i, &digest);
        if !pr_s.is_zero() {
            return DelegationBundle {
                delegated_private: pr_s,
                warrant,
                t,
            };
        }
    }
}

/// `PK_S == PK_A^W_h * t mod P`.
pub fn congruence_holds(
    group: &SchnorrGroup,
    delegated_public: &BigUint,
    producer_public: &BigUint,
    digest: &BigUint,
    t: &BigUint,
) -> bool {
    delegated_public == &verification_key(group, producer_public, digest, t)
}

/// `y = PK_A^W_h * t mod P`.
pub fn verification_key(
    group: &SchnorrGroup,
    producer_public: &BigUint,
    digest: &BigUint,
    t: &BigUint,
) -> BigUint {
    group.mul(&group.pow(producer_public, digest), t)
}

/// Proxy-side state after the one-time congruence check.
#[derive(Debug, Clone)]
pub struct ProxySigningContext {
    group: SchnorrGroup,
    delegated_private: BigUint,
    delegated_public: BigUint,
    warrant: Warrant,
    t: BigUint,
}

impl ProxySigningContext {
    pub fn delegated_public(&self) -> &BigUint {
        &self.delegated_public
    }

    pub fn warrant(&self) -> &Warrant {
        &self.warrant
    }

    pub fn t(&self) -> &BigUint {
        &self.t
    }

    pub fn group(&self) -> &SchnorrGroup {
        &self.group
    }
}

pub fn proxy_setup(
    group: &SchnorrGroup,
    bundle: &DelegationBundle,
    producer_public: &BigUint,
) -> Result<ProxySigningContext> {
    let pr_s = &bundle.delegated_private;
    if pr_s.is_zero() || pr_s >= group.q() || bundle.t.is_zero() || &bundle.t >= group.p() {
        return Err(CryptoError::DelegationInvalid);
    }
    let delegated_public = group.pow_g(pr_s);
    let digest = warrant_digest(group, &bundle.warrant.to_bytes(), &bundle.t);
    if !congruence_holds(group, &delegated_public, producer_public, &digest, &bundle.t) {
        return Err(CryptoError::DelegationInvalid);
    }
    Ok(ProxySigningContext {
        group: group.clone(),
        delegated_private: pr_s.clone(),
        delegated_public,
        warrant: bundle.warrant.clone(),
        t: bundle.t.clone(),
    })
}

/// `<M, W, t, a, b>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProxySignature {
    pub message: Vec<u8>,
    pub warrant: Warrant,
    pub t: BigUint,
    pub a: BigUint,
    pub b: BigUint,
}

impl ProxySignature {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(&self.message)
            .bytes(&self.warrant.to_bytes())
            .uint(&self.t)
            .uint(&self.a)
            .uint(&self.b);
        w.finish()
    }

    pub fn from_bytes(raw: &[u8]) -> Result<Self> {
        let mut r = Reader::new(raw);
        let sig = Self {
            message: r.bytes()?.to_vec(),
            warrant: Warrant::from_bytes(r.bytes()?)?,
            t: r.uint()?,
            a: r.uint()?,
            b: r.uint()?,
        };
        r.finish()?;
        Ok(sig)
    }
}

/// Signs with an explicit nonce `r`. Exposed for test vectors.
pub fn proxy_sign_with_nonce(
    ctx: &ProxySigningContext,
    message: &[u8],
    nonce: &BigUint,
) -> ProxySignature {
    let SchnorrSignature { a, b } =
        schnorr::sign_with_nonce(&ctx.group, &ctx.delegated_private, message, nonce);
    ProxySignature {
        message: message.to_vec(),
        warrant: ctx.warrant.clone(),
        t: ctx.t.clone(),
        a,
        b,
    }
}

pub fn proxy_sign<R: RngCore + ?Sized>(
    ctx: &ProxySigningContext,
    message: &[u8],
    rng: &mut R,
) -> ProxySignature {
    let nonce = ctx.group.random_scalar(rng);
    proxy_sign_with_nonce(ctx, message, &nonce)
}

fn check_with_key(group: &SchnorrGroup, y: &BigUint, sig: &ProxySignature) -> bool {
    let schnorr_sig = SchnorrSignature {
        a: sig.a.clone(),
        b: sig.b.clone(),
    };
    if !schnorr::well_formed(group, y, &schnorr_sig) {
        return false;
    }
    let k_v = schnorr::reconstruct_commitment(group, y, &sig.a, &sig.b);
    challenge(group, &sig.message, &k_v) == sig.a
}

fn derive_verification_key(
    group: &SchnorrGroup,
    producer_public: &BigUint,
    sig: &ProxySignature,
) -> Option<BigUint> {
    if &sig.warrant.producer_public != producer_public
        || sig.t.is_zero()
        || &sig.t >= group.p()
    {
        return None;
    }
    let digest = warrant_digest(group, &sig.warrant.to_bytes(), &sig.t);
    Some(verification_key(group, producer_public, &digest, &sig.t))
}

/// Consumer-side check against the producer's public key. Binary outcome.
pub fn proxy_verify(group: &SchnorrGroup, producer_public: &BigUint, sig: &ProxySignature) -> bool {
    match derive_verification_key(group, producer_public, sig) {
        Some(y) => check_with_key(group, &y, sig),
        None => false,
    }
}

/// Verifier that derives `y` once per `(PK_A, W, t)`.
#[derive(Debug, Default)]
pub struct VerificationKeyCache {
    keys: HashMap<[u8; 32], Option<BigUint>>,
}

impl VerificationKeyCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn verify(
        &mut self,
        group: &SchnorrGroup,
        producer_public: &BigUint,
        sig: &ProxySignature,
    ) -> bool {
        let mut h = Sha256::new();
        h.update(encode_uint(producer_public));
        h.update(sig.warrant.to_bytes());
        h.update(encode_uint(&sig.t));
        let id: [u8; 32] = h.finalize().into();
        let y = self
            .keys
            .entry(id)
            .or_insert_with(|| derive_verification_key(group, producer_public, sig));
        match y {
            Some(y) => check_with_key(group, y, sig),
            None => false,
        }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schnorr::keygen;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn n(v: u32) -> BigUint {
        BigUint::from(v)
    }

    fn setup(
        group: &SchnorrGroup,
        rng: &mut ChaCha20Rng,
    ) -> (KeyPair, KeyPair, Warrant) {
        let producer = keygen(group, rng);
        let proxy = keygen(group, rng);
        let key = HmacKey::generate(rng);
        let commitment =
            Commitment::create(group, &proxy, b"/pub/x".to_vec(), vec![7; 32], key, rng);
        let cert = Certificate {
            id: b"cert".to_vec(),
            public_key: proxy.public().clone(),
        };
        let warrant = build_warrant(group, commitment, cert, producer.public().clone()).unwrap();
        (producer, proxy, warrant)
    }

    #[test]
    fn toy_delegation_vector() {
        let group = SchnorrGroup::toy();
        let (t, pr_s) = delegated_key(&group, &n(5), &n(3), &n(7));
        assert_eq!(t, n(18));
        assert_eq!(pr_s, n(5));
        let pk_s = group.pow_g(&pr_s);
        assert_eq!(pk_s, n(12));
        assert!(congruence_holds(&group, &pk_s, &n(12), &n(7), &t));
        assert_eq!(verification_key(&group, &n(12), &n(7), &t), n(12));
    }

    #[test]
    fn round_trip_sign_verify() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let group = SchnorrGroup::generate(64, &mut rng).unwrap();
        let (producer, _, warrant) = setup(&group, &mut rng);
        let bundle = delegate(&group, &producer, warrant, &mut rng);
        let ctx = proxy_setup(&group, &bundle, producer.public()).unwrap();
        let mut cache = VerificationKeyCache::new();
        for i in 0..50u32 {
            let msg = i.to_be_bytes();
            let sig = proxy_sign(&ctx, &msg, &mut rng);
            assert!(proxy_verify(&group, producer.public(), &sig));
            assert!(cache.verify(&group, producer.public(), &sig));
            let decoded = ProxySignature::from_bytes(&sig.to_bytes()).unwrap();
            assert_eq!(decoded, sig);
        }
        assert_eq!(cache.len(), 1);
    }

    #[test]
    fn commitment_under_wrong_key_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let group = SchnorrGroup::generate(64, &mut rng).unwrap();
        let (producer, _, warrant) = setup(&group, &mut rng);
        let other = keygen(&group, &mut rng);
        let cert = Certificate {
            id: b"cert".to_vec(),
            public_key: other.public().clone(),
        };
        let err = build_warrant(&group, warrant.commitment, cert, producer.public().clone());
        assert_eq!(err.unwrap_err(), CryptoError::CommitmentInvalid);
    }

    #[test]
    fn setup_rejects_wrong_producer_and_tampering() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let group = SchnorrGroup::generate(64, &mut rng).unwrap();
        let (producer, _, warrant) = setup(&group, &mut rng);
        let bundle = delegate(&group, &producer, warrant, &mut rng);
        let other = keygen(&group, &mut rng);
        assert_eq!(
            proxy_setup(&group, &bundle, other.public()).unwrap_err(),
            CryptoError::DelegationInvalid
        );
        let mut bad = bundle.clone();
        bad.delegated_private = (&bad.delegated_private + 1u32) % group.q();
        assert!(proxy_setup(&group, &bad, producer.public()).is_err());
        let mut bad = bundle.clone();
        bad.warrant.commitment.data_name.push(b'!');
        assert!(proxy_setup(&group, &bad, producer.public()).is_err());
        let decoded = DelegationBundle::from_bytes(&bundle.to_bytes()).unwrap();
        assert_eq!(decoded, bundle);
    }

    #[test]
    fn verify_rejects_mutations() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let group = SchnorrGroup::generate(64, &mut rng).unwrap();
        let (producer, _, warrant) = setup(&group, &mut rng);
        let bundle = delegate(&group, &producer, warrant, &mut rng);
        let ctx = proxy_setup(&group, &bundle, producer.public()).unwrap();
        let sig = proxy_sign(&ctx, b"packet", &mut rng);

        let mut s = sig.clone();
        s.message[0] ^= 1;
        assert!(!proxy_verify(&group, producer.public(), &s));
        let mut s = sig.clone();
        s.t = group.mul(&s.t, group.g());
        assert!(!proxy_verify(&group, producer.public(), &s));
        let mut s = sig.clone();
        s.warrant.proxy_certificate.id.push(0);
        assert!(!proxy_verify(&group, producer.public(), &s));
        let mut s = sig.clone();
        s.a = (&s.a % group.q()) + 1u32;
        if s.a != sig.a {
            assert!(!proxy_verify(&group, producer.public(), &s));
        }
        let other = keygen(&group, &mut rng);
        assert!(!proxy_verify(&group, other.public(), &sig));
    }

    #[test]
    fn warrant_encoding_round_trips() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let group = SchnorrGroup::generate(64, &mut rng).unwrap();
        let (_, _, warrant) = setup(&group, &mut rng);
        let raw = warrant.to_bytes();
        assert_eq!(Warrant::from_bytes(&raw).unwrap(), warrant);
        let mut extended = raw.clone();
        extended.push(0);
        assert!(Warrant::from_bytes(&extended).is_err());
    }
}
