//! Authenticated symmetric sealing (ChaCha20-Poly1305) and HMAC-SHA256.

use chacha20poly1305::aead::{Aead, KeyInit};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use hmac::{Hmac, Mac};
use rand::RngCore;
use sha2::Sha256;

use crate::error::{CryptoError, Result};

pub const AEAD_ALGORITHM: &str = "ChaCha20-Poly1305";
pub const HMAC_ALGORITHM: &str = "HMAC-SHA256";
pub const KEY_LEN: usize = 32;
pub const NONCE_LEN: usize = 12;
pub const TAG_LEN: usize = 16;
/// Bytes added by [`seal`]: the random nonce plus the Poly1305 tag.
pub const SEAL_OVERHEAD: usize = NONCE_LEN + TAG_LEN;
pub const HMAC_LEN: usize = 32;

#[derive(Clone, PartialEq, Eq)]
pub struct SymmetricKey {
    bytes: [u8; KEY_LEN],
    id: u64,
}

impl std::fmt::Debug for SymmetricKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SymmetricKey(id={:016x})", self.id)
    }
}

impl SymmetricKey {
    pub fn generate<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut bytes = [0u8; KEY_LEN];
        rng.fill_bytes(&mut bytes);
        Self {
            bytes,
            id: rng.next_u64(),
        }
    }

    pub fn from_bytes(bytes: [u8; KEY_LEN], id: u64) -> Self {
        Self { bytes, id }
    }

    pub fn from_slice(raw: &[u8], id: u64) -> Result<Self> {
        let bytes: [u8; KEY_LEN] = raw
            .try_into()
            .map_err(|_| CryptoError::Decode(format!("symmetric key must be {KEY_LEN} bytes")))?;
        Ok(Self { bytes, id })
    }

    pub fn as_bytes(&self) -> &[u8; KEY_LEN] {
        &self.bytes
    }

    pub fn id(&self) -> u64 {
        self.id
    }
}

/// `nonce || ChaCha20-Poly1305(plaintext)`.
pub fn seal<R: RngCore + ?Sized>(key: &SymmetricKey, plaintext: &[u8], rng: &mut R) -> Vec<u8> {
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    let cipher = ChaCha20Poly1305::new(Key::from_slice(&key.bytes));
    let body = cipher
        .encrypt(Nonce::from_slice(&nonce), plaintext)
        .expect("in-memory encryption cannot fail");
    let mut out = Vec::with_capacity(SEAL_OVERHEAD + plaintext.len());
    out.extend_from_slice(&nonce);
    out.extend_from_slice(&body);
    out
}

pub fn open(key: &SymmetricKey, ciphertext: &[u8]) -> Result<Vec<u8>> {
    if ciphertext.len() < SEAL_OVERHEAD {
        return Err(CryptoError::AuthenticationFailure);
    }
    let (nonce, body) = ciphertext.split_at(NONCE_LEN);
    let cipher = ChaCha20Poly1305::new(Key::from_slice(&key.bytes));
    cipher
        .decrypt(Nonce::from_slice(nonce), body)
        .map_err(|_| CryptoError::AuthenticationFailure)
}

#[derive(Clone, PartialEq, Eq)]
pub struct HmacKey(Vec<u8>);

impl std::fmt::Debug for HmacKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "HmacKey({} bytes)", self.0.len())
    }
}

impl HmacKey {
    pub fn new(bytes: Vec<u8>) -> Result<Self> {
        if bytes.is_empty() {
            return Err(CryptoError::Decode("HMAC key must be non-empty".into()));
        }
        Ok(Self(bytes))
    }

    pub fn generate<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut bytes = vec![0u8; 32];
        rng.fill_bytes(&mut bytes);
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

pub fn hmac_tag(key: &HmacKey, data: &[u8]) -> [u8; HMAC_LEN] {
    let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(&key.0).expect("any key length");
    mac.update(data);
    mac.finalize().into_bytes().into()
}

pub fn hmac_verify(key: &HmacKey, data: &[u8], tag: &[u8]) -> bool {
    let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(&key.0).expect("any key length");
    mac.update(data);
    mac.verify_slice(tag).is_ok()
}
