//! Plain-text test-vector formats.
//!
//! A key file holds five lines of big-endian hex: `P`, `Q`, `g`, the private
//! key and the public key. A signature-vector file holds one record per
//! line, twelve space-separated hex fields:
//!
//! ```text
//! P Q g PR_A i W t PR_S M r a b
//! ```
//!
//! `W` and `M` are raw byte strings; the rest are integers. Blank lines and
//! lines starting with `#` are ignored.

use num_bigint::BigUint;
use rand::RngCore;

use crate::error::{CryptoError, Result};
use crate::group::SchnorrGroup;
use crate::proxy::{
    build_warrant, delegated_key, proxy_setup, proxy_sign_with_nonce, proxy_verify,
    warrant_digest, Certificate, Commitment, DelegationBundle, Warrant,
};
use crate::schnorr::{keygen, KeyPair};
use crate::symmetric::{hmac_tag, HmacKey};

fn parse_uint(field: &str) -> Result<BigUint> {
    BigUint::parse_bytes(field.as_bytes(), 16)
        .ok_or_else(|| CryptoError::Decode(format!("bad hex integer {field:?}")))
}

fn parse_bytes(field: &str) -> Result<Vec<u8>> {
    hex::decode(field).map_err(|e| CryptoError::Decode(format!("bad hex bytes: {e}")))
}

fn uint_hex(v: &BigUint) -> String {
    v.to_str_radix(16)
}

fn content_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyFile {
    pub group: SchnorrGroup,
    pub private: BigUint,
    pub public: BigUint,
}

impl KeyFile {
    pub fn new(group: SchnorrGroup, key: &KeyPair) -> Self {
        Self {
            group,
            private: key.private().clone(),
            public: key.public().clone(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let fields: Vec<BigUint> = content_lines(text).map(parse_uint).collect::<Result<_>>()?;
        let [p, q, g, private, public] = <[BigUint; 5]>::try_from(fields)
            .map_err(|v| CryptoError::Decode(format!("key file needs 5 lines, got {}", v.len())))?;
        let group = SchnorrGroup::new(p, q, g)?;
        if group.pow_g(&private) != public {
            return Err(CryptoError::Decode("public key does not match private key".into()));
        }
        Ok(Self {
            group,
            private,
            public,
        })
    }

    pub fn key_pair(&self) -> KeyPair {
        KeyPair::from_private(&self.group, self.private.clone())
    }

    pub fn to_text(&self) -> String {
        [
            self.group.p(),
            self.group.q(),
            self.group.g(),
            &self.private,
            &self.public,
        ]
        .iter()
        .map(|v| uint_hex(v) + "\n")
        .collect()
    }
}

/// One proxy-signature vector with every intermediate value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureRecord {
    pub group: SchnorrGroup,
    pub producer_private: BigUint,
    pub delegation_nonce: BigUint,
    pub warrant: Vec<u8>,
    pub t: BigUint,
    pub delegated_private: BigUint,
    pub message: Vec<u8>,
    pub signing_nonce: BigUint,
    pub a: BigUint,
    pub b: BigUint,
}

impl SignatureRecord {
    /// Builds a full delegation (commitment, warrant, bundle) and signs
    /// `message` with it.
    pub fn generate<R: RngCore + ?Sized>(
        group: &SchnorrGroup,
        message: &[u8],
        rng: &mut R,
    ) -> Result<Self> {
        let producer = keygen(group, rng);
        let proxy = keygen(group, rng);
        let hmac_key = HmacKey::generate(rng);
        let name = b"/vectors/publication".to_vec();
        let tag = hmac_tag(&hmac_key, message).to_vec();
        let commitment = Commitment::create(group, &proxy, name, tag, hmac_key, rng);
        let cert = Certificate {
            id: b"proxy-cert".to_vec(),
            public_key: proxy.public().clone(),
        };
        let warrant = build_warrant(group, commitment, cert, producer.public().clone())?;
        let warrant_bytes = warrant.to_bytes();

        let (delegation_nonce, t, delegated_private) = loop {
            let i = group.random_scalar(rng);
            let t = group.pow_g(&i);
            let digest = warrant_digest(group, &warrant_bytes, &t);
            let (_, pr_s) = delegated_key(group, producer.private(), &i, &digest);
            if pr_s != BigUint::from(0u32) {
                break (i, t, pr_s);
            }
        };
        let bundle = DelegationBundle {
            delegated_private: delegated_private.clone(),
            warrant,
            t: t.clone(),
        };
        let ctx = proxy_setup(group, &bundle, producer.public())?;
        let signing_nonce = group.random_scalar(rng);
        let sig = proxy_sign_with_nonce(&ctx, message, &signing_nonce);
        Ok(Self {
            group: group.clone(),
            producer_private: producer.private().clone(),
            delegation_nonce,
            warrant: warrant_bytes,
            t,
            delegated_private,
            message: message.to_vec(),
            signing_nonce,
            a: sig.a,
            b: sig.b,
        })
    }

    /// Recomputes every derived field and verifies the signature.
    pub fn check(&self) -> Result<()> {
        let g = &self.group;
        let mismatch = |what: &str| Err(CryptoError::Decode(format!("vector mismatch: {what}")));
        let producer = KeyPair::from_private(g, self.producer_private.clone());
        let (t, pr_s) = {
            let digest = warrant_digest(g, &self.warrant, &g.pow_g(&self.delegation_nonce));
            delegated_key(g, &self.producer_private, &self.delegation_nonce, &digest)
        };
        if t != self.t {
            return mismatch("t");
        }
        if pr_s != self.delegated_private {
            return mismatch("PR_S");
        }
        let warrant = Warrant::from_bytes(&self.warrant)?;
        let bundle = DelegationBundle {
            delegated_private: pr_s,
            warrant,
            t,
        };
        let ctx = proxy_setup(g, &bundle, producer.public())?;
        let sig = proxy_sign_with_nonce(&ctx, &self.message, &self.signing_nonce);
        if sig.a != self.a {
            return mismatch("a");
        }
        if sig.b != self.b {
            return mismatch("b");
        }
        if !proxy_verify(g, producer.public(), &sig) {
            return Err(CryptoError::AuthenticationFailure);
        }
        Ok(())
    }

    pub fn to_line(&self) -> String {
        [
            uint_hex(self.group.p()),
            uint_hex(self.group.q()),
            uint_hex(self.group.g()),
            uint_hex(&self.producer_private),
            uint_hex(&self.delegation_nonce),
            hex::encode(&self.warrant),
            uint_hex(&self.t),
            uint_hex(&self.delegated_private),
            hex::encode(&self.message),
            uint_hex(&self.signing_nonce),
            uint_hex(&self.a),
            uint_hex(&self.b),
        ]
        .join(" ")
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 12 {
            return Err(CryptoError::Decode(format!(
                "signature record needs 12 fields, got {}",
                f.len()
            )));
        }
        Ok(Self {
            group: SchnorrGroup::new(parse_uint(f[0])?, parse_uint(f[1])?, parse_uint(f[2])?)?,
            producer_private: parse_uint(f[3])?,
            delegation_nonce: parse_uint(f[4])?,
            warrant: parse_bytes(f[5])?,
            t: parse_uint(f[6])?,
            delegated_private: parse_uint(f[7])?,
            message: parse_bytes(f[8])?,
            signing_nonce: parse_uint(f[9])?,
            a: parse_uint(f[10])?,
            b: parse_uint(f[11])?,
        })
    }
}

pub fn parse_signature_file(text: &str) -> Result<Vec<SignatureRecord>> {
    content_lines(text).map(SignatureRecord::parse_line).collect()
}

pub fn write_signature_file(records: &[SignatureRecord]) -> String {
    records.iter().map(|r| r.to_line() + "\n").collect()
}
