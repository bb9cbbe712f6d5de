//! Distributed key derivation: advances a threshold-held extended-key state
//! from one epoch to the next by a public HMAC-derived additive offset. No
//! party ever reconstructs a secret; everyone applies the same offset to
//! their own share.
//!
//! The offset derivation is `HMAC-SHA512(cc_parent, encode(B_parent) || tag)`:
//! first 32 bytes reduced mod q give the scalar offset, last 32 bytes are the
//! child chaincode. Inputs are the 33-byte compressed parent key and a
//! 16-byte tag, 49 message bytes total.

use std::collections::BTreeSet;

use hmac::{Hmac, Mac};
use rand_core::{CryptoRng, RngCore};
use sha2::Sha512;

use crate::error::{Error, Result};
use crate::group::{GroupPoint, Scalar};
use crate::sharing::{PartyIndex, Share};

/// Byte length of a chaincode.
pub const CHAINCODE_LEN: usize = 32;
/// Byte length of a derivation tag.
pub const TAG_LEN: usize = 16;

pub type ChainCode = [u8; CHAINCODE_LEN];

/// Public per-transfer derivation tag. Fresh per transfer within one wallet
/// lineage; freshness is enforced via the consumed-tag set.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DerivationTag([u8; TAG_LEN]);

impl DerivationTag {
    pub fn random(rng: &mut (impl RngCore + CryptoRng)) -> Self {
        let mut bytes = [0u8; TAG_LEN];
        rng.fill_bytes(&mut bytes);
        DerivationTag(bytes)
    }

    pub fn from_bytes(bytes: [u8; TAG_LEN]) -> Self {
        DerivationTag(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; TAG_LEN] {
        &self.0
    }
}

impl core::fmt::Debug for DerivationTag {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "DerivationTag({})", hex::encode(self.0))
    }
}

impl serde::Serialize for DerivationTag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(self.0))
    }
}

/// Derives `(offset, child_chaincode)` from public parent state and a tag.
/// Deterministic; every holder of the same inputs gets identical outputs.
pub fn derive_offset(
    parent_pub: &GroupPoint,
    parent_cc: &ChainCode,
    tag: &DerivationTag,
) -> Result<(Scalar, ChainCode)> {
    let parent_enc = parent_pub.encode()?;
    let mut mac = Hmac::<Sha512>::new_from_slice(parent_cc).expect("any key length accepted");
    mac.update(&parent_enc);
    mac.update(tag.as_bytes());
    let out = mac.finalize().into_bytes();
    let mut left = [0u8; 32];
    left.copy_from_slice(&out[..32]);
    let mut child_cc = [0u8; CHAINCODE_LEN];
    child_cc.copy_from_slice(&out[32..]);
    // Reduce rather than reject: derivation stays total and the bias is
    // negligible at 2^-128 scale.
    Ok((Scalar::reduce_bytes(&left), child_cc))
}

/// Result of a public child derivation.
#[derive(Clone, Debug)]
pub struct ChildPublic {
    pub child_pub: GroupPoint,
    pub child_cc: ChainCode,
    pub offset: Scalar,
}

/// The extended-key epoch state held by each receiver party. `my_share` is
/// present on receiver parties and absent on public-only views.
#[derive(Clone, Debug)]
pub struct DerivationState {
    epoch: u64,
    aggregate_pub: GroupPoint,
    chaincode: ChainCode,
    my_share: Option<Share>,
    public_shares: Vec<(PartyIndex, GroupPoint)>,
    consumed_tags: BTreeSet<DerivationTag>,
}

impl DerivationState {
    /// Epoch-0 root state from a completed threshold setup.
    pub fn root(
        aggregate_pub: GroupPoint,
        chaincode: ChainCode,
        my_share: Option<Share>,
        public_shares: Vec<(PartyIndex, GroupPoint)>,
    ) -> Self {
        DerivationState {
            epoch: 0,
            aggregate_pub,
            chaincode,
            my_share,
            public_shares,
            consumed_tags: BTreeSet::new(),
        }
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn aggregate_pub(&self) -> GroupPoint {
        self.aggregate_pub
    }

    pub fn chaincode(&self) -> &ChainCode {
        &self.chaincode
    }

    pub fn my_share(&self) -> Option<&Share> {
        self.my_share.as_ref()
    }

    pub fn public_shares(&self) -> &[(PartyIndex, GroupPoint)] {
        &self.public_shares
    }

    pub fn consumed_tags(&self) -> &BTreeSet<DerivationTag> {
        &self.consumed_tags
    }

    /// Share-free copy, e.g. for a sender-side tracker.
    pub fn public_view(&self) -> DerivationState {
        DerivationState {
            my_share: None,
            ..self.clone()
        }
    }

    pub fn is_consumed(&self, tag: &DerivationTag) -> bool {
        self.consumed_tags.contains(tag)
    }

    /// Marks a tag consumed. Tags are never un-consumed.
    pub fn mark_consumed(&mut self, tag: DerivationTag) {
        self.consumed_tags.insert(tag);
    }

    /// Child public key, chaincode, and offset for `tag`. Public-input-only:
    /// any holder of the public state can compute it.
    pub fn derive_child_public(&self, tag: &DerivationTag) -> Result<ChildPublic> {
        if self.is_consumed(tag) {
            return Err(Error::TagConsumed);
        }
        let (offset, child_cc) = derive_offset(&self.aggregate_pub, &self.chaincode, tag)?;
        Ok(ChildPublic {
            child_pub: self.aggregate_pub + GroupPoint::base_mul(&offset),
            child_cc,
            offset,
        })
    }

    /// Applies a derivation offset to every share and the aggregate,
    /// producing the next epoch's state. The parent is left untouched.
    pub fn derive_child_share(&self, offset: &Scalar, child_cc: ChainCode) -> DerivationState {
        let offset_point = GroupPoint::base_mul(offset);
        DerivationState {
            epoch: self.epoch + 1,
            aggregate_pub: self.aggregate_pub + offset_point,
            chaincode: child_cc,
            my_share: self.my_share.map(|s| Share {
                index: s.index,
                value: s.value + *offset,
            }),
            public_shares: self
                .public_shares
                .iter()
                .map(|(i, p)| (*i, *p + offset_point))
                .collect(),
            consumed_tags: self.consumed_tags.clone(),
        }
    }

    /// Full transition for `tag`: offset derivation plus the share update.
    pub fn derive_child(&self, tag: &DerivationTag) -> Result<DerivationState> {
        let child = self.derive_child_public(tag)?;
        Ok(self.derive_child_share(&child.offset, child.child_cc))
    }
}
