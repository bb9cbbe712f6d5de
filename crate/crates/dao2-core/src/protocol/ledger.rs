//! The simulated chain: an append-only list of transaction records whose
//! status only moves forward, gated on signature validity.

use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;

use crate::dkd::DerivationTag;
use crate::dsag::StealthLabel;
use crate::error::{Error, Result};
use crate::group::GroupPoint;
use crate::tsig::{ts_verify, Signature};

/// The publicly visible record of one transfer.
#[derive(Clone, Debug)]
pub struct ChainTranscript {
    pub payment_message: Vec<u8>,
    pub payment_sig: Signature,
    pub dest: GroupPoint,
    pub tag: DerivationTag,
    /// Present for anonymous transfers only.
    pub label: Option<StealthLabel>,
    pub spend: Option<SpendRecord>,
}

#[derive(Clone, Debug)]
pub struct SpendRecord {
    pub message: Vec<u8>,
    pub sig: Signature,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryStatus {
    Pending,
    Confirmed,
    Spent,
}

#[derive(Clone, Debug)]
pub struct LedgerEntry {
    pub transcript: ChainTranscript,
    pub status: EntryStatus,
}

pub type EntryId = usize;

/// Append-only ledger. With persistence enabled, every accepted event is
/// appended to a file as a canonical binary record.
#[derive(Debug, Default)]
pub struct Ledger {
    entries: Vec<LedgerEntry>,
    persist_path: Option<PathBuf>,
}

impl Ledger {
    pub fn new() -> Self {
        Ledger::default()
    }

    pub fn with_persistence(path: PathBuf) -> Self {
        Ledger {
            entries: Vec::new(),
            persist_path: Some(path),
        }
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn entry(&self, id: EntryId) -> Result<&LedgerEntry> {
        self.entries.get(id).ok_or(Error::Ledger("no such entry"))
    }

    /// Accepts a broadcast transaction as pending.
    pub fn submit(&mut self, transcript: ChainTranscript) -> Result<EntryId> {
        let id = self.entries.len();
        self.entries.push(LedgerEntry {
            transcript,
            status: EntryStatus::Pending,
        });
        self.persist(id)?;
        Ok(id)
    }

    /// Validates the payment signature under the sender key and confirms.
    pub fn confirm(&mut self, id: EntryId, sender_key: &GroupPoint) -> Result<()> {
        let entry = self
            .entries
            .get_mut(id)
            .ok_or(Error::Ledger("no such entry"))?;
        if entry.status != EntryStatus::Pending {
            return Err(Error::Ledger("entry is not pending"));
        }
        if !ts_verify(
            sender_key,
            &entry.transcript.payment_message,
            &entry.transcript.payment_sig,
        ) {
            return Err(Error::Ledger("payment signature invalid"));
        }
        entry.status = EntryStatus::Confirmed;
        self.persist(id)?;
        Ok(())
    }

    /// Validates a redemption signature under the entry's destination key
    /// and marks the entry spent.
    pub fn record_spend(&mut self, id: EntryId, message: Vec<u8>, sig: Signature) -> Result<()> {
        let entry = self
            .entries
            .get_mut(id)
            .ok_or(Error::Ledger("no such entry"))?;
        if entry.status != EntryStatus::Confirmed {
            return Err(Error::Ledger("entry is not confirmed"));
        }
        if !ts_verify(&entry.transcript.dest, &message, &sig) {
            return Err(Error::Ledger("spend signature invalid"));
        }
        entry.transcript.spend = Some(SpendRecord { message, sig });
        entry.status = EntryStatus::Spent;
        self.persist(id)?;
        Ok(())
    }

    /// Canonical binary encoding of an entry's current state.
    pub fn encode_entry(&self, id: EntryId) -> Result<Vec<u8>> {
        crate::wire::encode_ledger_entry(self.entry(id)?)
    }

    fn persist(&self, id: EntryId) -> Result<()> {
        let Some(path) = &self.persist_path else {
            return Ok(());
        };
        let record = self.encode_entry(id)?;
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?;
        file.write_all(&(record.len() as u32).to_be_bytes())?;
        file.write_all(&record)?;
        Ok(())
    }
}
