//! Canonical length-prefixed byte encoding.
//!
//! Every field is written as a 4-byte big-endian length followed by the raw
//! bytes. Big integers use their minimal big-endian magnitude (zero encodes
//! as a single `0x00` byte). The encoding is injective, which matters because
//! warrants and commitments are hashed and signed.

use num_bigint::BigUint;

use crate::error::{CryptoError, Result};

#[derive(Debug, Default, Clone)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bytes(&mut self, data: &[u8]) -> &mut Self {
        let len = u32::try_from(data.len()).expect("field longer than 4 GiB");
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.extend_from_slice(data);
        self
    }

    pub fn uint(&mut self, value: &BigUint) -> &mut Self {
        self.bytes(&value.to_bytes_be())
    }

    pub fn u64(&mut self, value: u64) -> &mut Self {
        self.bytes(&value.to_be_bytes())
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

#[derive(Debug, Clone)]
pub struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf }
    }

    pub fn bytes(&mut self) -> Result<&'a [u8]> {
        if self.buf.len() < 4 {
            return Err(CryptoError::Decode("truncated length prefix".into()));
        }
        let (len, rest) = self.buf.split_at(4);
        let len = u32::from_be_bytes(len.try_into().unwrap()) as usize;
        if rest.len() < len {
            return Err(CryptoError::Decode(format!(
                "field of {len} bytes exceeds remaining {}",
                rest.len()
            )));
        }
        let (field, rest) = rest.split_at(len);
        self.buf = rest;
        Ok(field)
    }

    pub fn uint(&mut self) -> Result<BigUint> {
        let raw = self.bytes()?;
        if raw.is_empty() || (raw.len() > 1 && raw[0] == 0) {
            return Err(CryptoError::Decode("non-canonical integer".into()));
        }
        Ok(BigUint::from_bytes_be(raw))
    }

    pub fn u64(&mut self) -> Result<u64> {
        let raw = self.bytes()?;
        let arr: [u8; 8] = raw
            .try_into()
            .map_err(|_| CryptoError::Decode("expected 8-byte integer".into()))?;
        Ok(u64::from_be_bytes(arr))
    }

    /// Unconsumed input.
    pub fn rest(&self) -> &'a [u8] {
        self.buf
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Fails unless every byte was consumed.
    pub fn finish(self) -> Result<()> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(CryptoError::Decode(format!("{} trailing bytes", self.buf.len())))
        }
    }
}

/// Canonical encoding of a single big integer (length prefix + magnitude).
pub fn encode_uint(value: &BigUint) -> Vec<u8> {
    let mut w = Writer::new();
    w.uint(value);
    w.finish()
}
