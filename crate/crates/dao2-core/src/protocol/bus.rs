//! The simulated broadcast bus. Messages are appended in a deterministic
//! order and kept as the session transcript; byte accounting and the JSON
//! transcript dump both read from here.

use serde::Serialize;

use crate::sharing::PartyIndex;

/// Message categories on the coordination bus. `accounted_len` rules per
/// kind live in the wire module.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PayloadKind {
    /// Receiver-side session descriptor (child key, chaincode, tag).
    Descriptor,
    /// Sender-side hash commitment to a partial DH term.
    DhCommitment,
    /// Sender-side opening: partial DH term plus commit nonce.
    DhOpening,
    /// On-chain stealth metadata (tag, label) attached to the payment.
    StealthMetadata,
    /// Receiver-side broadcast: a partial DH term or a one-time public share.
    ReceiverShare,
    /// Signing round 1: a nonce commitment point.
    #[serde(rename = "sig-round-1")]
    SigRound1,
    /// Signing round 2: a partial signature scalar.
    #[serde(rename = "sig-round-2")]
    SigRound2,
    /// A finished threshold signature broadcast to the chain.
    Signature,
    /// A complaint naming a misbehaving party.
    Complaint,
}

/// One broadcast on the bus.
#[derive(Clone, Debug, Serialize)]
pub struct BusMessage {
    pub session_id: u64,
    pub seq: u64,
    pub sender: PartyIndex,
    pub kind: PayloadKind,
    /// Accounted length per the protocol's byte-accounting conventions;
    /// differs from `payload.len()` where the conventions say so.
    pub accounted_len: usize,
    pub raw_len: usize,
    #[serde(serialize_with = "hex_payload")]
    pub payload: Vec<u8>,
}

fn hex_payload<S: serde::Serializer>(
    payload: &[u8],
    s: S,
) -> core::result::Result<S::Ok, S::Error> {
    s.serialize_str(&hex::encode(payload))
}

/// Append-only transcript of bus messages, delivered in append order.
#[derive(Default, Debug)]
pub struct Bus {
    messages: Vec<BusMessage>,
}

impl Bus {
    pub fn new() -> Self {
        Bus::default()
    }

    pub fn broadcast(
        &mut self,
        session_id: u64,
        sender: PartyIndex,
        kind: PayloadKind,
        payload: Vec<u8>,
        accounted_len: usize,
    ) {
        let seq = self.messages.len() as u64;
        self.messages.push(BusMessage {
            session_id,
            seq,
            sender,
            kind,
            accounted_len,
            raw_len: payload.len(),
            payload,
        });
    }

    pub fn messages(&self) -> &[BusMessage] {
        &self.messages
    }

    /// Messages belonging to one session.
    pub fn session(&self, session_id: u64) -> Vec<BusMessage> {
        self.messages
            .iter()
            .filter(|m| m.session_id == session_id)
            .cloned()
            .collect()
    }
}
