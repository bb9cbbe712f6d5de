//! Distributed stealth-address generation.
//!
//! Sender side: each quorum member contributes a partial ECDH term against
//! the receiver's child key; the Lagrange-weighted sum is the joint shared
//! secret from which the one-time destination offset is hashed. Receiver
//! side: the mirrored computation against the sender key detects ownership
//! and recovers one-time signing shares.
//!
//! Sender contributions go through a hash commit-open layer by default, so a
//! member cannot pick its term after seeing the others.

use rand_core::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};

use crate::dkd::DerivationTag;
use crate::error::{Error, Result};
use crate::group::{hash_to_scalar, GroupPoint, Scalar};
use crate::sharing::{lagrange_coeff, PartyIndex, Share};

/// Byte length of a stealth label.
pub const LABEL_LEN: usize = 32;
/// Byte length of a commit-open nonce.
pub const DH_NONCE_LEN: usize = 32;

/// Fresh-per-session public label mixed into the destination offset hash.
#[derive(Copy, Clone, PartialEq, Eq, Hash)]
pub struct StealthLabel([u8; LABEL_LEN]);

impl StealthLabel {
    pub fn random(rng: &mut (impl RngCore + CryptoRng)) -> Self {
        let mut bytes = [0u8; LABEL_LEN];
        rng.fill_bytes(&mut bytes);
        StealthLabel(bytes)
    }

    pub fn from_bytes(bytes: [u8; LABEL_LEN]) -> Self {
        StealthLabel(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; LABEL_LEN] {
        &self.0
    }
}

impl core::fmt::Debug for StealthLabel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "StealthLabel({})", hex::encode(self.0))
    }
}

impl serde::Serialize for StealthLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(self.0))
    }
}

/// A one-time destination with its public session metadata.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StealthDestination {
    pub dest: GroupPoint,
    pub tag: DerivationTag,
    pub label: StealthLabel,
}

/// One member's partial DH contribution. Commitment and opening nonce are
/// present when the commit-open layer is enabled for the contribution.
#[derive(Clone, Debug)]
pub struct PartialDh {
    pub index: PartyIndex,
    pub term: GroupPoint,
    pub commitment: Option<[u8; 32]>,
    pub opening_nonce: Option<[u8; DH_NONCE_LEN]>,
}

/// Binding hash commitment over an encoded term and a random nonce.
pub fn dh_commitment(term: &GroupPoint, nonce: &[u8; DH_NONCE_LEN]) -> Result<[u8; 32]> {
    let mut hasher = Sha256::new();
    hasher.update(term.encode()?);
    hasher.update(nonce);
    Ok(hasher.finalize().into())
}

/// Sender-side partial term `a_i * B_child`.
pub fn sender_partial_dh(
    my_share: &Share,
    child_pub: &GroupPoint,
    commit: bool,
    rng: &mut (impl RngCore + CryptoRng),
) -> Result<PartialDh> {
    if child_pub.is_identity() {
        return Err(Error::IdentityPoint);
    }
    let term = my_share.value * *child_pub;
    if !commit {
        return Ok(PartialDh {
            index: my_share.index,
            term,
            commitment: None,
            opening_nonce: None,
        });
    }
    let mut nonce = [0u8; DH_NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    // A zero share would make the term the identity and uncommittable; that
    // only happens for a degenerate setup, surfaced as an error here.
    let commitment = dh_commitment(&term, &nonce)?;
    Ok(PartialDh {
        index: my_share.index,
        term,
        commitment: Some(commitment),
        opening_nonce: Some(nonce),
    })
}

/// Receiver-side partial term `b_j * A`. The commit-open layer is a
/// sender-side hardening; receiver contributions are broadcast plain.
pub fn receiver_partial_dh(my_child_share: &Share, sender_pub: &GroupPoint) -> Result<PartialDh> {
    if sender_pub.is_identity() {
        return Err(Error::IdentityPoint);
    }
    Ok(PartialDh {
        index: my_child_share.index,
        term: my_child_share.value * *sender_pub,
        commitment: None,
        opening_nonce: None,
    })
}

/// Lagrange-weighted aggregation of partial DH terms over the contributing
/// indices. Every commitment present must open correctly; a mismatch names
/// the offending party. Terms are combined in ascending index order so
/// transcripts stay byte-deterministic.
pub fn aggregate_shared_secret(partials: &[PartialDh]) -> Result<GroupPoint> {
    if partials.is_empty() {
        return Err(Error::EmptyShares);
    }
    let mut sorted: Vec<&PartialDh> = partials.iter().collect();
    sorted.sort_by_key(|p| p.index);
    for pair in sorted.windows(2) {
        if pair[0].index == pair[1].index {
            return Err(Error::DuplicateIndex(pair[0].index));
        }
    }
    let subset: Vec<PartyIndex> = sorted.iter().map(|p| p.index).collect();
    let mut acc = GroupPoint::IDENTITY;
    for p in &sorted {
        if let Some(expected) = p.commitment {
            let nonce = p.opening_nonce.ok_or(Error::InconsistentContribution(p.index))?;
            let opened =
                dh_commitment(&p.term, &nonce).map_err(|_| Error::InconsistentContribution(p.index))?;
            if opened != expected {
                return Err(Error::InconsistentContribution(p.index));
            }
        }
        acc += lagrange_coeff(p.index, &subset)? * p.term;
    }
    Ok(acc)
}

/// The destination offset `rho = H(encode(shared) || label)`.
pub fn stealth_offset(shared_secret: &GroupPoint, label: &StealthLabel) -> Result<Scalar> {
    if shared_secret.is_identity() {
        return Err(Error::DegenerateSession);
    }
    let mut input = Vec::with_capacity(33 + LABEL_LEN);
    input.extend_from_slice(&shared_secret.encode()?);
    input.extend_from_slice(label.as_bytes());
    Ok(hash_to_scalar(&input))
}

/// `B_child + rho * G`.
pub fn apply_stealth_offset(child_pub: &GroupPoint, rho: &Scalar) -> GroupPoint {
    *child_pub + GroupPoint::base_mul(rho)
}

/// Forms the one-time destination for a session.
pub fn make_destination(
    shared_secret: &GroupPoint,
    child_pub: &GroupPoint,
    label: StealthLabel,
    tag: DerivationTag,
) -> Result<StealthDestination> {
    if child_pub.is_identity() {
        return Err(Error::IdentityPoint);
    }
    let rho = stealth_offset(shared_secret, &label)?;
    Ok(StealthDestination {
        dest: apply_stealth_offset(child_pub, &rho),
        tag,
        label,
    })
}

/// Ownership test: does the candidate destination match the one recomputed
/// from the receiver-side shared secret? A mismatch is a normal negative.
pub fn detect(
    candidate: &StealthDestination,
    child_pub: &GroupPoint,
    recv_shared_secret: &GroupPoint,
) -> bool {
    match stealth_offset(recv_shared_secret, &candidate.label) {
        Ok(rho) => apply_stealth_offset(child_pub, &rho) == candidate.dest,
        Err(_) => false,
    }
}

/// A recovered one-time signing share `d_j = b_j + rho`.
#[derive(Copy, Clone, Debug)]
pub struct OneTimeShare {
    pub index: PartyIndex,
    pub secret: Scalar,
    pub public: GroupPoint,
}

/// Derives a party's one-time share from its child share and the offset.
pub fn recover_one_time_share(my_child_share: &Share, rho: &Scalar) -> OneTimeShare {
    let secret = my_child_share.value + *rho;
    OneTimeShare {
        index: my_child_share.index,
        secret,
        public: GroupPoint::base_mul(&secret),
    }
}

/// Aggregate consistency check `dest == sum lambda_j D_j`. Detects the
/// presence of a malformed contribution without identifying it.
pub fn verify_one_time_shares(
    publics: &[(PartyIndex, GroupPoint)],
    dest: &GroupPoint,
) -> Result<()> {
    let sum = crate::sharing::reconstruct_points(publics)?;
    if sum == *dest {
        Ok(())
    } else {
        Err(Error::InconsistentShares)
    }
}

/// Per-share isolation mode: checks each published `D_j` against the public
/// child share plus offset, naming the first culprit found.
pub fn isolate_inconsistent_share(
    publics: &[(PartyIndex, GroupPoint)],
    child_public_shares: &[(PartyIndex, GroupPoint)],
    rho: &Scalar,
) -> Result<()> {
    let rho_point = GroupPoint::base_mul(rho);
    for (index, published) in publics {
        let expected = child_public_shares
            .iter()
            .find(|(i, _)| i == index)
            .map(|(_, b)| *b + rho_point)
            .ok_or(Error::UnknownParty(*index))?;
        if *published != expected {
            return Err(Error::MisbehavingParty(*index));
        }
    }
    Ok(())
}
