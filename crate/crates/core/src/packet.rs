use std::rc::Rc;

use crate::name::Name;
use crate::topology::NodeId;

/// Fixed per-packet header bytes (type, lengths, nonce, lifetime).
pub const INTEREST_HEADER: usize = 24;
/// Fixed Data header bytes (type, lengths, metainfo).
pub const DATA_HEADER: usize = 16;

/// Accounting class of a packet. Simulator bookkeeping only: forwarders never
/// look at it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Traffic {
    /// Producer and selected proxy exchanging delegation messages.
    Delegation,
    /// Uploading metadata sync-published to collaborating peers.
    Metadata,
    /// Decoy-prefix replies and piece requests on the sync channel.
    Sync,
    /// Pieces returned to pull requests.
    Piece,
    /// Pieces pushed over the sync channel.
    Push,
    /// Bogus pieces injected by censors.
    Bogus,
    /// Decoy Interests carrying sealed Data toward a proxy.
    Egress,
    /// Proxy-to-proxy relaying and data-id registration.
    ProxyMesh,
    /// Onion legs before the exit relay.
    Onion,
    /// Acknowledgements of carried payloads.
    Ack,
}

impl Traffic {
    pub const ALL: [Traffic; 10] = [
        Traffic::Delegation,
        Traffic::Metadata,
        Traffic::Sync,
        Traffic::Piece,
        Traffic::Push,
        Traffic::Bogus,
        Traffic::Egress,
        Traffic::ProxyMesh,
        Traffic::Onion,
        Traffic::Ack,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Routing tag of a sync-channel Interest: forwarded along the shortest-path
/// tree rooted at `source` instead of by FIB lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Multicast {
    pub source: NodeId,
}

#[derive(Debug, Clone)]
pub struct Interest {
    pub name: Name,
    pub nonce: u64,
    pub payload: Option<Rc<Vec<u8>>>,
    pub multicast: Option<Multicast>,
    pub traffic: Traffic,
}

impl Interest {
    pub fn new(name: Name, nonce: u64, traffic: Traffic) -> Self {
        Self {
            name,
            nonce,
            payload: None,
            multicast: None,
            traffic,
        }
    }

    pub fn with_payload(mut self, payload: Vec<u8>) -> Self {
        self.payload = Some(Rc::new(payload));
        self
    }

    pub fn with_shared_payload(mut self, payload: Rc<Vec<u8>>) -> Self {
        self.payload = Some(payload);
        self
    }

    pub fn multicast_from(mut self, source: NodeId) -> Self {
        self.multicast = Some(Multicast { source });
        self
    }

    pub fn size_bytes(&self) -> usize {
        INTEREST_HEADER + self.name.wire_len() + self.payload.as_ref().map_or(0, |p| p.len())
    }
}

/// Producer identification carried in a Data packet.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SignatureInfo {
    pub certificate_id: Vec<u8>,
    /// Encoded warrant when the packet is proxy-signed.
    pub warrant: Option<Rc<Vec<u8>>>,
}

#[derive(Debug, Clone)]
pub struct Data {
    pub name: Name,
    pub content: Rc<Vec<u8>>,
    pub signature_info: SignatureInfo,
    pub signature_value: Vec<u8>,
    pub traffic: Traffic,
}

impl Data {
    pub fn new(name: Name, content: Vec<u8>, traffic: Traffic) -> Self {
        Self {
            name,
            content: Rc::new(content),
            signature_info: SignatureInfo::default(),
            signature_value: Vec::new(),
            traffic,
        }
    }

    pub fn size_bytes(&self) -> usize {
        DATA_HEADER
            + self.name.wire_len()
            + self.content.len()
            + self.signature_info.certificate_id.len()
            + self.signature_info.warrant.as_ref().map_or(0, |w| w.len())
            + self.signature_value.len()
    }

    /// Bytes covered by the packet signature: name, content and metainfo.
    pub fn signed_portion(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.content.len() + 64);
        for c in self.name.components() {
            out.extend_from_slice(&(c.len() as u32).to_be_bytes());
            out.extend_from_slice(c.as_bytes());
        }
        out.extend_from_slice(&(self.content.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.content);
        out.extend_from_slice(&(self.signature_info.certificate_id.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.signature_info.certificate_id);
        out
    }
}

#[derive(Debug, Clone)]
pub enum Packet {
    Interest(Rc<Interest>),
    Data(Rc<Data>),
}

impl Packet {
    pub fn name(&self) -> &Name {
        match self {
            Packet::Interest(i) => &i.name,
            Packet::Data(d) => &d.name,
        }
    }

    pub fn size_bytes(&self) -> usize {
        match self {
            Packet::Interest(i) => i.size_bytes(),
            Packet::Data(d) => d.size_bytes(),
        }
    }

    pub fn traffic(&self) -> Traffic {
        match self {
            Packet::Interest(i) => i.traffic,
            Packet::Data(d) => d.traffic,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interest_size_counts_header_name_and_payload() {
        let name: Name = "/a/bc".parse().unwrap();
        let i = Interest::new(name.clone(), 1, Traffic::Sync);
        assert_eq!(i.size_bytes(), INTEREST_HEADER + 3 + 4);
        let i = i.with_payload(vec![0; 100]);
        assert_eq!(i.size_bytes(), INTEREST_HEADER + 7 + 100);
    }
}
