//! Canonical byte encodings for protocol objects and the per-session byte
//! accounting.
//!
//! All layouts are fixed-size for a fixed DAO size, with no length prefixes.
//! Two lengths are tracked: the raw bytes actually carried, and the
//! accounted length used in the communication tables. The accounting
//! conventions are:
//!
//! | object                     | raw | accounted |
//! |----------------------------|-----|-----------|
//! | session descriptor         | 81  | 81        |
//! | DH commitment              | 32  | 32        |
//! | DH opening (term + nonce)  | 65  | 33        |
//! | stealth metadata (tag+label)| 48 | 48        |
//! | receiver share broadcast   | 33  | 33        |
//! | signature                  | 65  | 64        |
//!
//! Commit-open nonces ride with the opening but are excluded from the
//! accounted figures; signatures are accounted at 64 bytes (x-only nonce
//! convention) although the raw encoding keeps the 33-byte compressed
//! nonce point.

use serde::Serialize;

use crate::dkd::{ChainCode, DerivationTag, CHAINCODE_LEN, TAG_LEN};
use crate::dsag::{StealthLabel, LABEL_LEN};
use crate::error::{Error, Result};
use crate::group::{GroupPoint, POINT_LEN};
use crate::protocol::bus::{BusMessage, PayloadKind};
use crate::protocol::ledger::{ChainTranscript, EntryStatus, LedgerEntry, SpendRecord};
use crate::protocol::SessionDescriptor;
use crate::tsig::{Signature, SIGNATURE_ACCOUNTED_LEN, SIGNATURE_RAW_LEN};

/// Encoded session descriptor length: point, chaincode, tag.
pub const DESCRIPTOR_LEN: usize = POINT_LEN + CHAINCODE_LEN + TAG_LEN; // 81
/// Encoded stealth metadata length: tag, label.
pub const STEALTH_METADATA_LEN: usize = TAG_LEN + LABEL_LEN; // 48
/// Accounted per-member sender DSAG bytes: commitment + opening.
pub const DSAG_SENDER_PER_MEMBER: usize = 32 + POINT_LEN; // 65
/// Accounted per-member receiver DSAG bytes: DH term + one-time share.
pub const DSAG_RECEIVER_PER_MEMBER: usize = 2 * POINT_LEN; // 66

pub fn encode_descriptor(d: &SessionDescriptor) -> Result<[u8; DESCRIPTOR_LEN]> {
    let mut out = [0u8; DESCRIPTOR_LEN];
    out[..POINT_LEN].copy_from_slice(&d.child_pub.encode()?);
    out[POINT_LEN..POINT_LEN + CHAINCODE_LEN].copy_from_slice(&d.chaincode);
    out[POINT_LEN + CHAINCODE_LEN..].copy_from_slice(d.tag.as_bytes());
    Ok(out)
}

pub fn decode_descriptor(bytes: &[u8]) -> Result<SessionDescriptor> {
    if bytes.len() != DESCRIPTOR_LEN {
        return Err(Error::Decode("descriptor must be 81 bytes"));
    }
    let child_pub = GroupPoint::decode(&bytes[..POINT_LEN])?;
    let mut chaincode: ChainCode = [0u8; CHAINCODE_LEN];
    chaincode.copy_from_slice(&bytes[POINT_LEN..POINT_LEN + CHAINCODE_LEN]);
    let mut tag = [0u8; TAG_LEN];
    tag.copy_from_slice(&bytes[POINT_LEN + CHAINCODE_LEN..]);
    Ok(SessionDescriptor {
        child_pub,
        chaincode,
        tag: DerivationTag::from_bytes(tag),
    })
}

pub fn encode_stealth_metadata(
    tag: &DerivationTag,
    label: &StealthLabel,
) -> [u8; STEALTH_METADATA_LEN] {
    let mut out = [0u8; STEALTH_METADATA_LEN];
    out[..TAG_LEN].copy_from_slice(tag.as_bytes());
    out[TAG_LEN..].copy_from_slice(label.as_bytes());
    out
}

pub fn decode_stealth_metadata(bytes: &[u8]) -> Result<(DerivationTag, StealthLabel)> {
    if bytes.len() != STEALTH_METADATA_LEN {
        return Err(Error::Decode("stealth metadata must be 48 bytes"));
    }
    let mut tag = [0u8; TAG_LEN];
    tag.copy_from_slice(&bytes[..TAG_LEN]);
    let mut label = [0u8; LABEL_LEN];
    label.copy_from_slice(&bytes[TAG_LEN..]);
    Ok((
        DerivationTag::from_bytes(tag),
        StealthLabel::from_bytes(label),
    ))
}

/// Opening message: encoded term followed by the commit nonce.
pub fn encode_dh_opening(term: &GroupPoint, nonce: &[u8; 32]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(POINT_LEN + 32);
    out.extend_from_slice(&term.encode()?);
    out.extend_from_slice(nonce);
    Ok(out)
}

pub fn decode_dh_opening(bytes: &[u8]) -> Result<(GroupPoint, [u8; 32])> {
    if bytes.len() != POINT_LEN + 32 {
        return Err(Error::Decode("DH opening must be 65 bytes"));
    }
    let term = GroupPoint::decode(&bytes[..POINT_LEN])?;
    let mut nonce = [0u8; 32];
    nonce.copy_from_slice(&bytes[POINT_LEN..]);
    Ok((term, nonce))
}

pub fn encode_signature(sig: &Signature) -> Result<[u8; SIGNATURE_RAW_LEN]> {
    sig.encode()
}

pub fn decode_signature(bytes: &[u8]) -> Result<Signature> {
    Signature::decode(bytes)
}

/// Canonical encoding of a ledger entry's current state: status byte,
/// length-prefixed payment message, signature, destination, tag, then
/// presence-flagged label and spend record.
pub fn encode_ledger_entry(entry: &LedgerEntry) -> Result<Vec<u8>> {
    let t = &entry.transcript;
    let mut out = Vec::new();
    out.push(match entry.status {
        EntryStatus::Pending => 0u8,
        EntryStatus::Confirmed => 1,
        EntryStatus::Spent => 2,
    });
    out.extend_from_slice(&(t.payment_message.len() as u32).to_be_bytes());
    out.extend_from_slice(&t.payment_message);
    out.extend_from_slice(&t.payment_sig.encode()?);
    out.extend_from_slice(&t.dest.encode()?);
    out.extend_from_slice(t.tag.as_bytes());
    match &t.label {
        Some(l) => {
            out.push(1);
            out.extend_from_slice(l.as_bytes());
        }
        None => out.push(0),
    }
    match &t.spend {
        Some(s) => {
            out.push(1);
            out.extend_from_slice(&(s.message.len() as u32).to_be_bytes());
            out.extend_from_slice(&s.message);
            out.extend_from_slice(&s.sig.encode()?);
        }
        None => out.push(0),
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(Error::Decode("truncated ledger entry"))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn take_u32(&mut self) -> Result<usize> {
        let raw = self.take(4)?;
        Ok(u32::from_be_bytes(raw.try_into().unwrap()) as usize)
    }

    fn take_byte(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn finish(&self) -> Result<()> {
        if self.pos == self.bytes.len() {
            Ok(())
        } else {
            Err(Error::Decode("trailing bytes in ledger entry"))
        }
    }
}

pub fn decode_ledger_entry(bytes: &[u8]) -> Result<LedgerEntry> {
    let mut c = Cursor { bytes, pos: 0 };
    let status = match c.take_byte()? {
        0 => EntryStatus::Pending,
        1 => EntryStatus::Confirmed,
        2 => EntryStatus::Spent,
        _ => return Err(Error::Decode("unknown entry status")),
    };
    let msg_len = c.take_u32()?;
    let payment_message = c.take(msg_len)?.to_vec();
    let payment_sig = Signature::decode(c.take(SIGNATURE_RAW_LEN)?)?;
    let dest = GroupPoint::decode(c.take(POINT_LEN)?)?;
    let tag = DerivationTag::from_bytes(
        c.take(TAG_LEN)?
            .try_into()
            .expect("cursor returns requested length"),
    );
    let label = match c.take_byte()? {
        0 => None,
        1 => Some(StealthLabel::from_bytes(
            c.take(LABEL_LEN)?
                .try_into()
                .expect("cursor returns requested length"),
        )),
        _ => return Err(Error::Decode("invalid label flag")),
    };
    let spend = match c.take_byte()? {
        0 => None,
        1 => {
            let len = c.take_u32()?;
            let message = c.take(len)?.to_vec();
            let sig = Signature::decode(c.take(SIGNATURE_RAW_LEN)?)?;
            Some(SpendRecord { message, sig })
        }
        _ => return Err(Error::Decode("invalid spend flag")),
    };
    c.finish()?;
    Ok(LedgerEntry {
        transcript: ChainTranscript {
            payment_message,
            payment_sig,
            dest,
            tag,
            label,
            spend,
        },
        status,
    })
}

/// Per-session communication totals, one row of the communication table.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CommBreakdown {
    pub n: u32,
    pub dkd_bytes: usize,
    pub dsag_sender_bytes: usize,
    pub sig_bytes: usize,
    pub dsag_receiver_bytes: usize,
    pub total: usize,
}

impl CommBreakdown {
    /// The closed-form expectation for a full-membership session of size `n`.
    pub fn expected(n: u32) -> CommBreakdown {
        let n_usize = n as usize;
        let dkd = DESCRIPTOR_LEN;
        let sender = DSAG_SENDER_PER_MEMBER * n_usize + STEALTH_METADATA_LEN;
        let sig = 2 * SIGNATURE_ACCOUNTED_LEN;
        let receiver = DSAG_RECEIVER_PER_MEMBER * n_usize;
        CommBreakdown {
            n,
            dkd_bytes: dkd,
            dsag_sender_bytes: sender,
            sig_bytes: sig,
            dsag_receiver_bytes: receiver,
            total: dkd + sender + sig + receiver,
        }
    }
}

/// Sums the accounted lengths of a completed anonymous session's transcript
/// into per-component totals. Signing round messages are coordination
/// traffic outside the four accounted components and contribute nothing.
pub fn account_session(messages: &[BusMessage], n: u32) -> Result<CommBreakdown> {
    let mut dkd = 0usize;
    let mut sender = 0usize;
    let mut sig = 0usize;
    let mut receiver = 0usize;
    let mut signatures = 0usize;
    for m in messages {
        match m.kind {
            PayloadKind::Descriptor => dkd += m.accounted_len,
            PayloadKind::DhCommitment | PayloadKind::DhOpening | PayloadKind::StealthMetadata => {
                sender += m.accounted_len
            }
            PayloadKind::ReceiverShare => receiver += m.accounted_len,
            PayloadKind::Signature => {
                sig += m.accounted_len;
                signatures += 1;
            }
            PayloadKind::SigRound1 | PayloadKind::SigRound2 | PayloadKind::Complaint => {}
        }
    }
    if dkd == 0 {
        return Err(Error::IncompleteTranscript("no session descriptor"));
    }
    if sender == 0 || receiver == 0 {
        return Err(Error::IncompleteTranscript("not an anonymous session"));
    }
    if signatures != 2 {
        return Err(Error::IncompleteTranscript(
            "expected payment and redemption signatures",
        ));
    }
    Ok(CommBreakdown {
        n,
        dkd_bytes: dkd,
        dsag_sender_bytes: sender,
        sig_bytes: sig,
        dsag_receiver_bytes: receiver,
        total: dkd + sender + sig + receiver,
    })
}
