//! Per-member protocol state. A party's secrets live here and nowhere else;
//! the audit serialization exists so tests can prove that one-time material
//! really leaves the state after redemption.

use std::collections::BTreeSet;

use crate::dkd::DerivationState;
use crate::dsag::OneTimeShare;
use crate::group::{GroupPoint, Scalar};
use crate::sharing::{PartyIndex, Share};

#[derive(Copy, Clone, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DaoRole {
    Sender,
    Receiver,
}

/// Key material held by a party, shaped by its DAO's role.
#[derive(Clone, Debug)]
pub enum PartyKeys {
    /// Long-term signing share under the sender DAO's aggregate key.
    Sender { share: Share, public: GroupPoint },
    /// The receiver lineage: the current epoch's extended-key state.
    Receiver { derivation: DerivationState },
}

/// One member's full local state.
#[derive(Clone, Debug)]
pub struct PartyState {
    pub role: DaoRole,
    pub index: PartyIndex,
    pub keys: PartyKeys,
    /// Transient one-time signing material, present only between detection
    /// and redemption of the current epoch.
    pub one_time: Option<OneTimeShare>,
    /// Transient stealth offset for the epoch being redeemed.
    pub stealth_offset: Option<Scalar>,
    /// Epochs whose one-time material has been destroyed.
    pub erased_epochs: BTreeSet<u64>,
}

impl PartyState {
    pub fn new_sender(index: PartyIndex, share: Share, public: GroupPoint) -> Self {
        PartyState {
            role: DaoRole::Sender,
            index,
            keys: PartyKeys::Sender { share, public },
            one_time: None,
            stealth_offset: None,
            erased_epochs: BTreeSet::new(),
        }
    }

    pub fn new_receiver(index: PartyIndex, derivation: DerivationState) -> Self {
        PartyState {
            role: DaoRole::Receiver,
            index,
            keys: PartyKeys::Receiver { derivation },
            one_time: None,
            stealth_offset: None,
            erased_epochs: BTreeSet::new(),
        }
    }

    pub fn derivation(&self) -> Option<&DerivationState> {
        match &self.keys {
            PartyKeys::Receiver { derivation } => Some(derivation),
            PartyKeys::Sender { .. } => None,
        }
    }

    pub fn derivation_mut(&mut self) -> Option<&mut DerivationState> {
        match &mut self.keys {
            PartyKeys::Receiver { derivation } => Some(derivation),
            PartyKeys::Sender { .. } => None,
        }
    }

    pub fn sender_share(&self) -> Option<&Share> {
        match &self.keys {
            PartyKeys::Sender { share, .. } => Some(share),
            PartyKeys::Receiver { .. } => None,
        }
    }

    /// Destroys the one-time material for `epoch`: overwrite, then drop.
    pub fn erase_one_time(&mut self, epoch: u64) {
        if let Some(one_time) = self.one_time.as_mut() {
            one_time.secret = Scalar::ZERO;
            one_time.public = GroupPoint::IDENTITY;
        }
        self.one_time = None;
        if let Some(rho) = self.stealth_offset.as_mut() {
            *rho = Scalar::ZERO;
        }
        self.stealth_offset = None;
        self.erased_epochs.insert(epoch);
    }

    /// Canonical serialization of everything this party stores, secrets
    /// included. This is the surface the erasure audit scans.
    pub fn audit_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.push(match self.role {
            DaoRole::Sender => 0u8,
            DaoRole::Receiver => 1,
        });
        out.extend_from_slice(&self.index.get().to_be_bytes());
        match &self.keys {
            PartyKeys::Sender { share, public } => {
                out.extend_from_slice(&share.value.encode());
                if let Ok(enc) = public.encode() {
                    out.extend_from_slice(&enc);
                }
            }
            PartyKeys::Receiver { derivation } => {
                out.extend_from_slice(&derivation.epoch().to_be_bytes());
                if let Ok(enc) = derivation.aggregate_pub().encode() {
                    out.extend_from_slice(&enc);
                }
                out.extend_from_slice(derivation.chaincode());
                if let Some(share) = derivation.my_share() {
                    out.extend_from_slice(&share.index.get().to_be_bytes());
                    out.extend_from_slice(&share.value.encode());
                }
                for (i, p) in derivation.public_shares() {
                    out.extend_from_slice(&i.get().to_be_bytes());
                    if let Ok(enc) = p.encode() {
                        out.extend_from_slice(&enc);
                    }
                }
                for tag in derivation.consumed_tags() {
                    out.extend_from_slice(tag.as_bytes());
                }
            }
        }
        if let Some(one_time) = &self.one_time {
            out.extend_from_slice(&one_time.secret.encode());
            if let Ok(enc) = one_time.public.encode() {
                out.extend_from_slice(&enc);
            }
        }
        if let Some(rho) = &self.stealth_offset {
            out.extend_from_slice(&rho.encode());
        }
        for epoch in &self.erased_epochs {
            out.extend_from_slice(&epoch.to_be_bytes());
        }
        out
    }
}
