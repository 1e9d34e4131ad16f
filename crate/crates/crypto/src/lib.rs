//! Cryptographic building blocks for anonymous delegated publication.
//!
//! The crate has two layers:
//!
//! * primitives: Schnorr groups with safe-prime moduli ([`group`]), plain
//!   Schnorr signatures and hashing into `Z*_Q` ([`schnorr`]), authenticated
//!   symmetric sealing and HMAC ([`symmetric`]), and hybrid public-key sealing
//!   ([`pk`]);
//! * warrant-based proxy signatures ([`proxy`]): a producer derives a
//!   delegated signing key for a proxy, bound to a warrant that carries the
//!   proxy's signed commitment. Consumers verify proxy signatures against the
//!   producer's public key alone.
//!
//! All randomness comes from an injected [`rand::RngCore`], so every
//! operation is reproducible under a seeded generator.

pub mod error;
pub mod group;
pub mod pk;
pub mod proxy;
pub mod schnorr;
pub mod symmetric;
pub mod vectors;
pub mod wire;

pub use error::{CryptoError, Result};
pub use group::SchnorrGroup;
pub use pk::{pk_open, pk_overhead, pk_seal};
pub use proxy::{
    build_warrant, delegate, proxy_setup, proxy_sign, proxy_verify, Commitment,
    DelegationBundle, ProxySignature, ProxySigningContext, VerificationKeyCache, Warrant,
};
pub use schnorr::{hash_to_zq, keygen, schnorr_sign, schnorr_verify, KeyPair, SchnorrSignature};
pub use symmetric::{hmac_tag, hmac_verify, open, seal, HmacKey, SymmetricKey};
