//! Threshold Schnorr signing.
//!
//! Two logical rounds: each signer broadcasts a nonce commitment `R_i = k_i G`;
//! after the aggregate nonce and challenge are fixed, each signer releases
//! `s_i = k_i + e * x_i`. Both nonce points and response scalars are combined
//! with the same Lagrange weights as the key shares, so the usual Schnorr
//! verification equation closes under the aggregate key. The challenge hash
//! is key-prefixed, which stops a signature under one key from replaying
//! under an additively derived sibling.
//!
//! Because derived keys differ from their parents by a public additive
//! offset, shares produced by derivation or one-time recovery sign here
//! without any re-keying.

use rand_core::{CryptoRng, RngCore};

use crate::dsag::OneTimeShare;
use crate::error::{Error, Result};
use crate::group::{hash_to_scalar, GroupPoint, Scalar, POINT_LEN, SCALAR_LEN};
use crate::sharing::{lagrange_coeff, run_dkg, PartyIndex, Share, ShareSet};

/// Raw signature encoding: compressed nonce point plus response scalar.
pub const SIGNATURE_RAW_LEN: usize = POINT_LEN + SCALAR_LEN; // 65
/// Accounted signature length (x-only nonce convention).
pub const SIGNATURE_ACCOUNTED_LEN: usize = 64;

/// A signer's view of its key material.
#[derive(Copy, Clone, Debug)]
pub struct SigningShare {
    pub index: PartyIndex,
    pub secret: Scalar,
    pub public: GroupPoint,
}

impl SigningShare {
    pub fn from_share(share: &Share) -> Self {
        SigningShare {
            index: share.index,
            secret: share.value,
            public: GroupPoint::base_mul(&share.value),
        }
    }
}

impl From<&OneTimeShare> for SigningShare {
    fn from(o: &OneTimeShare) -> Self {
        SigningShare {
            index: o.index,
            secret: o.secret,
            public: o.public,
        }
    }
}

/// A Schnorr signature `(R, s)`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    pub nonce_point: GroupPoint,
    pub s: Scalar,
}

impl Signature {
    pub fn encode(&self) -> Result<[u8; SIGNATURE_RAW_LEN]> {
        let mut out = [0u8; SIGNATURE_RAW_LEN];
        out[..POINT_LEN].copy_from_slice(&self.nonce_point.encode()?);
        out[POINT_LEN..].copy_from_slice(&self.s.encode());
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Signature> {
        if bytes.len() != SIGNATURE_RAW_LEN {
            return Err(Error::Decode("signature must be 65 bytes"));
        }
        Ok(Signature {
            nonce_point: GroupPoint::decode(&bytes[..POINT_LEN])?,
            s: Scalar::decode(&bytes[POINT_LEN..])?,
        })
    }
}

/// One signer's round-1 broadcast.
#[derive(Copy, Clone, Debug)]
pub struct NonceCommitment {
    pub index: PartyIndex,
    pub point: GroupPoint,
}

/// One signer's round-2 broadcast.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct PartialSignature {
    pub index: PartyIndex,
    pub value: Scalar,
}

/// Per-signer session state. The nonce share is single-use: once a partial
/// signature is emitted the nonce is overwritten and a second emission is
/// refused.
pub struct SigningSession {
    index: PartyIndex,
    secret: Scalar,
    nonce: Option<Scalar>,
    commitment: GroupPoint,
}

impl SigningSession {
    /// Round 1: sample the nonce share and form its commitment.
    pub fn start(share: &SigningShare, rng: &mut (impl RngCore + CryptoRng)) -> Self {
        let nonce = Scalar::random(rng);
        SigningSession {
            index: share.index,
            secret: share.secret,
            nonce: Some(nonce),
            commitment: GroupPoint::base_mul(&nonce),
        }
    }

    pub fn commitment(&self) -> NonceCommitment {
        NonceCommitment {
            index: self.index,
            point: self.commitment,
        }
    }

    /// Round 2: `s_i = k_i + e * x_i`. Consumes the nonce share.
    pub fn partial_sign(&mut self, challenge: &Scalar) -> Result<PartialSignature> {
        let nonce = self.nonce.take().ok_or(Error::NonceConsumed)?;
        let value = nonce + *challenge * self.secret;
        // Overwrite before drop; the secret share itself stays (it is
        // long-lived key material, erased by the owning party state).
        self.nonce = None;
        Ok(PartialSignature {
            index: self.index,
            value,
        })
    }
}

/// Lagrange-weighted aggregate nonce `R = sum lambda_i R_i`.
pub fn aggregate_nonce(commitments: &[NonceCommitment]) -> Result<GroupPoint> {
    let points: Vec<(PartyIndex, GroupPoint)> =
        commitments.iter().map(|c| (c.index, c.point)).collect();
    crate::sharing::reconstruct_points(&points)
}

/// Key-prefixed challenge `e = H(encode(R) || encode(X) || m)`.
pub fn challenge(
    aggregate_nonce: &GroupPoint,
    verif_key: &GroupPoint,
    message: &[u8],
) -> Result<Scalar> {
    let mut input = Vec::with_capacity(2 * POINT_LEN + message.len());
    input.extend_from_slice(&aggregate_nonce.encode()?);
    input.extend_from_slice(&verif_key.encode()?);
    input.extend_from_slice(message);
    Ok(hash_to_scalar(&input))
}

/// Checks each partial against its signer's nonce commitment and public
/// share, then combines. A failing partial names its signer.
pub fn aggregate_signature(
    commitments: &[NonceCommitment],
    partials: &[PartialSignature],
    signer_publics: &[(PartyIndex, GroupPoint)],
    challenge: &Scalar,
) -> Result<Signature> {
    if partials.is_empty() {
        return Err(Error::EmptyShares);
    }
    let subset: Vec<PartyIndex> = partials.iter().map(|p| p.index).collect();
    let nonce_point = aggregate_nonce(commitments)?;
    let mut s = Scalar::ZERO;
    for p in partials {
        let r_i = commitments
            .iter()
            .find(|c| c.index == p.index)
            .ok_or(Error::UnknownParty(p.index))?
            .point;
        let x_i = signer_publics
            .iter()
            .find(|(i, _)| *i == p.index)
            .ok_or(Error::UnknownParty(p.index))?
            .1;
        // s_i * G == R_i + e * X_i for an honest signer.
        if GroupPoint::base_mul(&p.value) != r_i + *challenge * x_i {
            return Err(Error::MisbehavingSigner(p.index));
        }
        s += lagrange_coeff(p.index, &subset)? * p.value;
    }
    Ok(Signature { nonce_point, s })
}

/// Threshold key generation; a verifiable-DKG run.
pub fn ts_keygen(n: u32, t: u32, rng: &mut (impl RngCore + CryptoRng)) -> Result<ShareSet> {
    run_dkg(n, t, rng)
}

/// Honest two-round signing driver over an explicit signer set. Refuses
/// sub-threshold sets before producing any round data.
pub fn ts_sign(
    message: &[u8],
    signers: &[SigningShare],
    threshold: u32,
    verif_key: &GroupPoint,
    rng: &mut (impl RngCore + CryptoRng),
) -> Result<Signature> {
    if (signers.len() as u32) < threshold {
        return Err(Error::SubThreshold {
            have: signers.len() as u32,
            need: threshold,
        });
    }
    let subset: Vec<PartyIndex> = signers.iter().map(|s| s.index).collect();
    for (pos, &i) in subset.iter().enumerate() {
        if subset[..pos].contains(&i) {
            return Err(Error::DuplicateIndex(i));
        }
    }
    let mut sessions: Vec<SigningSession> =
        signers.iter().map(|s| SigningSession::start(s, rng)).collect();
    let commitments: Vec<NonceCommitment> = sessions.iter().map(|s| s.commitment()).collect();
    let agg_nonce = aggregate_nonce(&commitments)?;
    let e = challenge(&agg_nonce, verif_key, message)?;
    let partials: Vec<PartialSignature> = sessions
        .iter_mut()
        .map(|s| s.partial_sign(&e))
        .collect::<Result<_>>()?;
    let publics: Vec<(PartyIndex, GroupPoint)> =
        signers.iter().map(|s| (s.index, s.public)).collect();
    aggregate_signature(&commitments, &partials, &publics, &e)
}

/// `s * G == R + H(encode(R) || encode(X) || m) * X`.
pub fn ts_verify(verif_key: &GroupPoint, message: &[u8], sig: &Signature) -> bool {
    let e = match challenge(&sig.nonce_point, verif_key, message) {
        Ok(e) => e,
        Err(_) => return false,
    };
    GroupPoint::base_mul(&sig.s) == sig.nonce_point + e * *verif_key
}
