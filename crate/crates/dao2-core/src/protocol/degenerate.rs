//! Single-user reduction: with one-member DAOs on both sides, the whole
//! pipeline must coincide byte-for-byte with an ordinary scan/spend-key
//! stealth payment computed straight-line, with no sharing, aggregation, or
//! Lagrange machinery anywhere. The straight-line computation here is the
//! oracle: it rebuilds every value from the two root secrets using raw
//! HMAC/“hash” calls and plain group arithmetic only.

use hmac::{Hmac, Mac};
use serde::Serialize;
use sha2::{Digest, Sha256, Sha512};

use crate::error::{Error, Result};
use crate::group::{GroupPoint, Scalar};
use crate::tsig::Signature;

use super::{SetupConfig, Simulation, TransferOptions};

/// Field-by-field comparison between the pipeline and the oracle.
#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub seed: u64,
    pub derivation_offset_match: bool,
    pub child_pub_match: bool,
    pub shared_secret_match: bool,
    pub stealth_offset_match: bool,
    pub destination_match: bool,
    pub one_time_key_match: bool,
    pub payment_sig_valid: bool,
    pub spend_sig_valid: bool,
    /// Oracle-side re-verification of both signatures with an independent
    /// Schnorr check.
    pub oracle_sig_checks: bool,
}

impl EquivalenceReport {
    pub fn all_match(&self) -> bool {
        self.derivation_offset_match
            && self.child_pub_match
            && self.shared_secret_match
            && self.stealth_offset_match
            && self.destination_match
            && self.one_time_key_match
            && self.payment_sig_valid
            && self.spend_sig_valid
            && self.oracle_sig_checks
    }
}

// Plain Schnorr verification written against raw SHA-256, independent of the
// signing module's challenge path.
fn oracle_schnorr_verify(key: &GroupPoint, message: &[u8], sig: &Signature) -> bool {
    let (Ok(r_enc), Ok(k_enc)) = (sig.nonce_point.encode(), key.encode()) else {
        return false;
    };
    let mut h = Sha256::new();
    h.update(r_enc);
    h.update(k_enc);
    h.update(message);
    let digest: [u8; 32] = h.finalize().into();
    let e = Scalar::reduce_bytes(&digest);
    GroupPoint::base_mul(&sig.s) == sig.nonce_point + e * *key
}

/// Runs the full pipeline with `n1 = n2 = t1 = t2 = 1` and compares every
/// derived value against the straight-line single-user computation.
pub fn degenerate_single_user(seed: u64) -> Result<EquivalenceReport> {
    let mut sim = Simulation::setup(SetupConfig::new(1, 1, 1, 1), seed)?;

    // With one party and threshold one, the single share is the secret.
    let a = sim.sender_parties()[0]
        .sender_share()
        .expect("sender share")
        .value;
    let root = sim.receiver_state();
    let b0 = root.my_share().expect("receiver share").value;
    let cc0 = *root.chaincode();
    let parent_pub = root.aggregate_pub();

    let opts = TransferOptions {
        capture_secrets: true,
        ..TransferOptions::anonymous()
    };
    let record = sim.run_transfer(&opts)?;
    let secrets = record.secrets.as_ref().expect("captured secrets");
    let entry = sim.ledger().entry(record.entry_id)?;
    let label = record.label.expect("anonymous transfer");

    // Straight line: one HMAC, one ECDH product, one hash, three additions.
    let mut mac =
        Hmac::<Sha512>::new_from_slice(&cc0).expect("any key length accepted");
    mac.update(&parent_pub.encode()?);
    mac.update(record.descriptor.tag.as_bytes());
    let hm = mac.finalize().into_bytes();
    let mut left = [0u8; 32];
    left.copy_from_slice(&hm[..32]);
    let omega = Scalar::reduce_bytes(&left);
    let child_secret = b0 + omega;
    let child_pub = GroupPoint::base_mul(&child_secret);
    let ecdh = a * child_pub;
    let mut h = Sha256::new();
    h.update(ecdh.encode()?);
    h.update(label.as_bytes());
    let digest: [u8; 32] = h.finalize().into();
    let rho = Scalar::reduce_bytes(&digest);
    let one_time_secret = child_secret + rho;
    let dest = GroupPoint::base_mul(&one_time_secret);

    let pipeline_one_time = secrets
        .one_time_secrets
        .first()
        .map(|(_, bytes)| *bytes)
        .ok_or(Error::IncompleteTranscript("missing one-time secret"))?;

    let spend = entry
        .transcript
        .spend
        .as_ref()
        .ok_or(Error::Ledger("entry not spent"))?;

    Ok(EquivalenceReport {
        seed,
        derivation_offset_match: secrets.derivation_offset == omega.encode(),
        child_pub_match: record.descriptor.child_pub == child_pub,
        shared_secret_match: secrets.shared_secret == Some(ecdh.encode()?),
        stealth_offset_match: secrets.stealth_offset == Some(rho.encode()),
        destination_match: record.dest == dest,
        one_time_key_match: pipeline_one_time == one_time_secret.encode(),
        payment_sig_valid: crate::tsig::ts_verify(
            &sim.sender_aggregate(),
            &entry.transcript.payment_message,
            &entry.transcript.payment_sig,
        ),
        spend_sig_valid: crate::tsig::ts_verify(&dest, &spend.message, &spend.sig),
        oracle_sig_checks: oracle_schnorr_verify(
            &sim.sender_aggregate(),
            &entry.transcript.payment_message,
            &entry.transcript.payment_sig,
        ) && oracle_schnorr_verify(&dest, &spend.message, &spend.sig),
    })
}
