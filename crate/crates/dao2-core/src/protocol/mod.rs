//! End-to-end orchestration of transfers between two threshold-controlled
//! DAOs: party state machines, the two-phase transfer flow, a simulated
//! ledger, consumed-tag tracking, and key erasure.
//!
//! The simulator is deterministic: all randomness flows from one seeded
//! stream and bus messages are appended in a fixed order, so a seed fully
//! determines every transcript byte.

pub mod bus;
mod degenerate;
mod faults;
pub mod ledger;
pub mod party;

pub use degenerate::{degenerate_single_user, EquivalenceReport};
pub use faults::{inject_fault, Detection, FaultReport, FaultScenario};

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::Serialize;

use crate::dkd::{derive_offset, ChainCode, DerivationState, DerivationTag};
use crate::dsag::{
    self, aggregate_shared_secret, make_destination, receiver_partial_dh, recover_one_time_share,
    sender_partial_dh, stealth_offset, OneTimeShare, PartialDh, StealthLabel,
};
use crate::error::{Error, Result};
use crate::group::{GroupPoint, Scalar, POINT_LEN};
use crate::sharing::{self, Complaint, PartyIndex, Share};
use crate::tsig::{
    aggregate_nonce, aggregate_signature, challenge, NonceCommitment, PartialSignature, Signature,
    SigningSession, SigningShare, SIGNATURE_ACCOUNTED_LEN,
};
use crate::wire;

use bus::{Bus, BusMessage, PayloadKind};
use ledger::{ChainTranscript, EntryId, EntryStatus, Ledger};
use party::{PartyKeys, PartyState};

/// The receiver-to-sender coordination tuple for one transfer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionDescriptor {
    pub child_pub: GroupPoint,
    pub chaincode: ChainCode,
    pub tag: DerivationTag,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TransferMode {
    Anonymous,
    Plain,
}

/// Configuration for a two-DAO simulation.
#[derive(Clone, Debug)]
pub struct SetupConfig {
    pub n1: u32,
    pub t1: u32,
    pub n2: u32,
    pub t2: u32,
    /// Sender-side commit-open hardening for DSAG contributions.
    pub commit_open: bool,
    /// Append canonical ledger records to this file.
    pub ledger_path: Option<std::path::PathBuf>,
}

impl SetupConfig {
    pub fn new(n1: u32, t1: u32, n2: u32, t2: u32) -> Self {
        SetupConfig {
            n1,
            t1,
            n2,
            t2,
            commit_open: true,
            ledger_path: None,
        }
    }

    fn validate(&self) -> Result<()> {
        for &(t, n) in &[(self.t1, self.n1), (self.t2, self.n2)] {
            if t == 0 || t > n {
                return Err(Error::InvalidThreshold { t, n });
            }
        }
        Ok(())
    }
}

/// Fault-injection knobs threaded through a transfer by the harness.
#[derive(Clone, Debug, Default)]
pub struct FaultPlan {
    /// This sender opens a DH term different from its commitment.
    pub bad_dh_opening: Option<PartyIndex>,
    /// This receiver publishes a corrupted one-time public share.
    pub bad_one_time_share: Option<PartyIndex>,
    /// This receiver derives from a tampered tag during child-key allocation.
    pub mismatched_tag_party: Option<PartyIndex>,
}

/// Per-transfer options. Subset fields default to the full membership for
/// the session subsets and to the first `t` members for the signing subsets.
#[derive(Clone, Debug)]
pub struct TransferOptions {
    pub mode: TransferMode,
    pub amount: u64,
    pub s1: Option<Vec<PartyIndex>>,
    pub s2: Option<Vec<PartyIndex>>,
    pub t1_signers: Option<Vec<PartyIndex>>,
    pub t2_signers: Option<Vec<PartyIndex>>,
    /// Pin the derivation tag instead of sampling it (tests, replay checks).
    pub forced_tag: Option<DerivationTag>,
    /// Capture secret intermediates into the transfer record (audit oracle).
    pub capture_secrets: bool,
    /// Disable the key-erasure step; negative control for the audit.
    pub skip_erasure: bool,
    pub fault: FaultPlan,
}

impl TransferOptions {
    pub fn anonymous() -> Self {
        TransferOptions {
            mode: TransferMode::Anonymous,
            amount: 1,
            s1: None,
            s2: None,
            t1_signers: None,
            t2_signers: None,
            forced_tag: None,
            capture_secrets: false,
            skip_erasure: false,
            fault: FaultPlan::default(),
        }
    }

    pub fn plain() -> Self {
        TransferOptions {
            mode: TransferMode::Plain,
            ..TransferOptions::anonymous()
        }
    }
}

/// Issued by Phase I; consumed by Phase II.
#[derive(Clone, Debug)]
pub struct PendingTransfer {
    pub session_id: u64,
    pub entry_id: EntryId,
    pub descriptor: SessionDescriptor,
    opts: TransferOptions,
}

/// Secret intermediates captured for test oracles. These copies live in the
/// record handed back to the caller, never in party state.
#[derive(Clone, Debug, Default)]
pub struct CapturedSecrets {
    pub derivation_offset: [u8; 32],
    pub child_chaincode: [u8; 32],
    pub shared_secret: Option<[u8; 33]>,
    pub stealth_offset: Option<[u8; 32]>,
    pub one_time_secrets: Vec<(u32, [u8; 32])>,
}

/// The outcome of one redeemed transfer.
#[derive(Clone, Debug)]
pub struct TransferRecord {
    pub session_id: u64,
    pub entry_id: EntryId,
    pub mode: TransferMode,
    pub epoch: u64,
    pub descriptor: SessionDescriptor,
    pub dest: GroupPoint,
    pub label: Option<StealthLabel>,
    pub messages: Vec<BusMessage>,
    pub breakdown: Option<wire::CommBreakdown>,
    pub detections: Vec<Error>,
    pub secrets: Option<CapturedSecrets>,
}

impl TransferRecord {
    /// Structured transcript of every bus message with byte lengths.
    pub fn transcript_json(&self) -> serde_json::Value {
        serde_json::json!({
            "session_id": self.session_id,
            "entry_id": self.entry_id,
            "mode": self.mode,
            "epoch": self.epoch,
            "destination": hex::encode(self.dest.encode().unwrap_or([0u8; 33])),
            "tag": self.descriptor.tag,
            "label": self.label,
            "messages": self.messages,
            "breakdown": self.breakdown,
        })
    }
}

/// Phase II result for a single ledger entry.
#[derive(Debug)]
pub enum Phase2Outcome {
    Redeemed(Box<TransferRecord>),
    /// The entry is not addressed to this DAO; state untouched.
    Skipped,
}

/// A ledger entry the scanner claims for this DAO.
#[derive(Clone, Debug, Serialize)]
pub struct ScanHit {
    pub entry_id: EntryId,
    pub tag: DerivationTag,
}

/// Scan outcome over the whole ledger.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ScanReport {
    pub owned: Vec<ScanHit>,
    /// Entries carrying an already-consumed tag, excluded from ownership.
    pub consumed_tag_entries: Vec<EntryId>,
}

/// A deterministic two-DAO simulation.
pub struct Simulation {
    config: SetupConfig,
    rng: ChaCha20Rng,
    sender_parties: Vec<PartyState>,
    receiver_parties: Vec<PartyState>,
    sender_aggregate: GroupPoint,
    sender_public_shares: Vec<(PartyIndex, GroupPoint)>,
    ledger: Ledger,
    bus: Bus,
    next_session: u64,
    pending: Vec<PendingTransfer>,
    dkg_complaints: Vec<Complaint>,
    session_detections: Vec<(u64, Vec<Error>)>,
}

impl Simulation {
    pub fn setup(config: SetupConfig, seed: u64) -> Result<Simulation> {
        Simulation::setup_with_dkg_tamper(config, seed, None)
    }

    /// Setup with an optional corrupted DKG dealing on the receiver side:
    /// `(dealer, victim)` makes `dealer` send `victim` a share off by one.
    pub fn setup_with_dkg_tamper(
        config: SetupConfig,
        seed: u64,
        tamper: Option<(PartyIndex, PartyIndex)>,
    ) -> Result<Simulation> {
        config.validate()?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);

        let sender_set = sharing::run_dkg(config.n1, config.t1, &mut rng)?;
        let (receiver_set, complaints) =
            sharing::run_dkg_with_complaints(config.n2, config.t2, &mut rng, |d| {
                if let Some((dealer, victim)) = tamper {
                    if d.dealer == dealer {
                        if let Some(s) = d.dealt.iter_mut().find(|s| s.index == victim) {
                            s.value += Scalar::ONE;
                        }
                    }
                }
            })?;

        let mut root_cc: ChainCode = [0u8; 32];
        rng.fill_bytes(&mut root_cc);

        let sender_parties = sender_set
            .shares()
            .iter()
            .map(|s| {
                PartyState::new_sender(s.index, *s, sender_set.public_share(s.index).unwrap())
            })
            .collect();
        let receiver_parties = receiver_set
            .shares()
            .iter()
            .map(|s| {
                PartyState::new_receiver(
                    s.index,
                    DerivationState::root(
                        receiver_set.aggregate(),
                        root_cc,
                        Some(*s),
                        receiver_set.public_shares().to_vec(),
                    ),
                )
            })
            .collect();

        let ledger = match &config.ledger_path {
            Some(path) => Ledger::with_persistence(path.clone()),
            None => Ledger::new(),
        };
        Ok(Simulation {
            sender_aggregate: sender_set.aggregate(),
            sender_public_shares: sender_set.public_shares().to_vec(),
            sender_parties,
            receiver_parties,
            ledger,
            bus: Bus::new(),
            next_session: 0,
            pending: Vec::new(),
            dkg_complaints: complaints,
            session_detections: Vec::new(),
            config,
            rng,
        })
    }

    pub fn config(&self) -> &SetupConfig {
        &self.config
    }

    pub fn bus(&self) -> &Bus {
        &self.bus
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn sender_aggregate(&self) -> GroupPoint {
        self.sender_aggregate
    }

    pub fn sender_public_shares(&self) -> &[(PartyIndex, GroupPoint)] {
        &self.sender_public_shares
    }

    pub fn sender_parties(&self) -> &[PartyState] {
        &self.sender_parties
    }

    pub fn receiver_parties(&self) -> &[PartyState] {
        &self.receiver_parties
    }

    pub fn pending(&self) -> &[PendingTransfer] {
        &self.pending
    }

    pub fn dkg_complaints(&self) -> &[Complaint] {
        &self.dkg_complaints
    }

    /// Current receiver derivation state (all parties agree; the first
    /// party's copy is returned).
    pub fn receiver_state(&self) -> &DerivationState {
        self.receiver_parties[0]
            .derivation()
            .expect("receiver party holds derivation state")
    }

    /// True iff every receiver party holds bit-identical public derivation
    /// state.
    pub fn receiver_states_consistent(&self) -> bool {
        let reference = self.receiver_state();
        self.receiver_parties.iter().all(|p| {
            let d = p.derivation().expect("receiver party");
            d.epoch() == reference.epoch()
                && d.aggregate_pub() == reference.aggregate_pub()
                && d.chaincode() == reference.chaincode()
                && d.public_shares() == reference.public_shares()
                && d.consumed_tags() == reference.consumed_tags()
        })
    }

    /// Concatenated audit serialization of every party's local state.
    pub fn audit_all_states(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for p in self.sender_parties.iter().chain(self.receiver_parties.iter()) {
            out.extend_from_slice(&p.audit_bytes());
        }
        out
    }

    /// Imports a foreign confirmed entry (e.g. a decoy produced by another
    /// pair of DAOs) into this ledger. The payment signature must verify
    /// under the foreign sender key.
    pub fn import_confirmed(
        &mut self,
        transcript: ChainTranscript,
        foreign_sender_key: &GroupPoint,
    ) -> Result<EntryId> {
        let id = self.ledger.submit(transcript)?;
        self.ledger.confirm(id, foreign_sender_key)?;
        Ok(id)
    }

    fn sender_indices(&self) -> Vec<PartyIndex> {
        self.sender_parties.iter().map(|p| p.index).collect()
    }

    fn receiver_indices(&self) -> Vec<PartyIndex> {
        self.receiver_parties.iter().map(|p| p.index).collect()
    }

    fn receiver_party(&self, index: PartyIndex) -> Result<&PartyState> {
        self.receiver_parties
            .iter()
            .find(|p| p.index == index)
            .ok_or(Error::UnknownParty(index))
    }

    fn sender_share(&self, index: PartyIndex) -> Result<Share> {
        self.sender_parties
            .iter()
            .find(|p| p.index == index)
            .and_then(|p| p.sender_share().copied())
            .ok_or(Error::UnknownParty(index))
    }

    fn record_detections(&mut self, session_id: u64, detections: Vec<Error>) {
        if !detections.is_empty() {
            self.session_detections.push((session_id, detections));
        }
    }

    fn take_detections(&mut self, session_id: u64) -> Vec<Error> {
        let mut out = Vec::new();
        self.session_detections.retain(|(id, det)| {
            if *id == session_id {
                out.extend(det.iter().cloned());
                false
            } else {
                true
            }
        });
        out
    }

    /// Phase I: child-key allocation, stealth-destination generation (in
    /// anonymous mode), and outgoing threshold authorization. On success the
    /// transaction sits confirmed on the simulated ledger.
    pub fn phase1(&mut self, opts: &TransferOptions) -> Result<PendingTransfer> {
        let session_id = self.next_session;
        self.next_session += 1;
        let mut detections = Vec::new();

        let s1 = opts.s1.clone().unwrap_or_else(|| self.sender_indices());
        let s2 = opts.s2.clone().unwrap_or_else(|| self.receiver_indices());
        if (s1.len() as u32) < self.config.t1 {
            return Err(Error::SubThreshold {
                have: s1.len() as u32,
                need: self.config.t1,
            });
        }

        // Step 1.1: receiver-side child-key allocation. The coordinator
        // derives from public parent state; every session member recomputes
        // and cross-checks before the DSAG round may begin.
        let tag = opts
            .forced_tag
            .unwrap_or_else(|| DerivationTag::random(&mut self.rng));
        let coordinator = *s2.first().ok_or(Error::EmptyShares)?;
        let child = self
            .receiver_party(coordinator)?
            .derivation()
            .expect("receiver party")
            .derive_child_public(&tag)?;
        for &j in &s2 {
            let their_tag = if opts.fault.mismatched_tag_party == Some(j) {
                let mut tampered = *tag.as_bytes();
                tampered[0] ^= 0xff;
                DerivationTag::from_bytes(tampered)
            } else {
                tag
            };
            let echo = self
                .receiver_party(j)?
                .derivation()
                .expect("receiver party")
                .derive_child_public(&their_tag)?;
            if echo.child_pub != child.child_pub || echo.child_cc != child.child_cc {
                return Err(Error::DivergentDerivation(j));
            }
        }
        let descriptor = SessionDescriptor {
            child_pub: child.child_pub,
            chaincode: child.child_cc,
            tag,
        };
        self.bus.broadcast(
            session_id,
            coordinator,
            PayloadKind::Descriptor,
            wire::encode_descriptor(&descriptor)?.to_vec(),
            wire::DESCRIPTOR_LEN,
        );

        // Step 1.2: distributed stealth-destination generation.
        let (dest, label) = match opts.mode {
            TransferMode::Plain => (child.child_pub, None),
            TransferMode::Anonymous => {
                let shared = match self.dsag_sender_round(
                    session_id,
                    &s1,
                    &child.child_pub,
                    opts.fault.bad_dh_opening,
                ) {
                    Ok(shared) => shared,
                    Err(e @ Error::InconsistentContribution(culprit)) => {
                        detections.push(e.clone());
                        let survivors: Vec<PartyIndex> =
                            s1.iter().copied().filter(|&i| i != culprit).collect();
                        if (survivors.len() as u32) < self.config.t1 {
                            self.record_detections(session_id, detections);
                            return Err(e);
                        }
                        // A fresh honest subset repeats the round.
                        self.dsag_sender_round(session_id, &survivors, &child.child_pub, None)?
                    }
                    Err(e) => return Err(e),
                };
                let label = StealthLabel::random(&mut self.rng);
                let destination = make_destination(&shared, &child.child_pub, label, tag)?;
                self.bus.broadcast(
                    session_id,
                    s1[0],
                    PayloadKind::StealthMetadata,
                    wire::encode_stealth_metadata(&tag, &label).to_vec(),
                    wire::STEALTH_METADATA_LEN,
                );
                // The shared secret and partial terms are locals: they never
                // enter any party state, honoring sender-side erasure.
                (destination.dest, Some(label))
            }
        };

        // Step 1.3: outgoing threshold authorization under the sender key.
        let t1_set = opts
            .t1_signers
            .clone()
            .unwrap_or_else(|| s1.iter().copied().take(self.config.t1 as usize).collect());
        let signers: Vec<SigningShare> = t1_set
            .iter()
            .map(|&i| Ok(SigningShare::from_share(&self.sender_share(i)?)))
            .collect::<Result<_>>()?;
        let payment_message = payment_message(opts.mode, &dest, opts.amount, &tag, label.as_ref())?;
        let sender_key = self.sender_aggregate;
        let payment_sig = self.sign_with_bus(
            session_id,
            &payment_message,
            &signers,
            self.config.t1,
            &sender_key,
        )?;
        self.bus.broadcast(
            session_id,
            t1_set[0],
            PayloadKind::Signature,
            payment_sig.encode()?.to_vec(),
            SIGNATURE_ACCOUNTED_LEN,
        );

        let transcript = ChainTranscript {
            payment_message,
            payment_sig,
            dest,
            tag,
            label,
            spend: None,
        };
        let entry_id = self.ledger.submit(transcript)?;
        self.ledger.confirm(entry_id, &self.sender_aggregate)?;

        let pending = PendingTransfer {
            session_id,
            entry_id,
            descriptor,
            opts: opts.clone(),
        };
        self.pending.push(pending.clone());
        self.record_detections(session_id, detections);
        Ok(pending)
    }

    /// One DSAG sender round over `s1`: commit, open, aggregate.
    fn dsag_sender_round(
        &mut self,
        session_id: u64,
        s1: &[PartyIndex],
        child_pub: &GroupPoint,
        bad_opening: Option<PartyIndex>,
    ) -> Result<GroupPoint> {
        let mut partials: Vec<PartialDh> = Vec::with_capacity(s1.len());
        for &i in s1 {
            let share = self.sender_share(i)?;
            let partial =
                sender_partial_dh(&share, child_pub, self.config.commit_open, &mut self.rng)?;
            partials.push(partial);
        }
        if self.config.commit_open {
            for p in &partials {
                self.bus.broadcast(
                    session_id,
                    p.index,
                    PayloadKind::DhCommitment,
                    p.commitment.expect("commit-open enabled").to_vec(),
                    32,
                );
            }
        }
        // A cheating opener reveals a term other than the committed one.
        if let Some(culprit) = bad_opening {
            if let Some(p) = partials.iter_mut().find(|p| p.index == culprit) {
                p.term += GroupPoint::GENERATOR;
            }
        }
        for p in &partials {
            let payload = match (self.config.commit_open, p.opening_nonce) {
                (true, Some(nonce)) => wire::encode_dh_opening(&p.term, &nonce)?,
                _ => p.term.encode()?.to_vec(),
            };
            self.bus.broadcast(
                session_id,
                p.index,
                PayloadKind::DhOpening,
                payload,
                POINT_LEN,
            );
        }
        aggregate_shared_secret(&partials)
    }

    /// Two-round threshold signing with round messages on the bus. Refuses
    /// sub-threshold signer sets before any round data exists.
    fn sign_with_bus(
        &mut self,
        session_id: u64,
        message: &[u8],
        signers: &[SigningShare],
        threshold: u32,
        verif_key: &GroupPoint,
    ) -> Result<Signature> {
        if (signers.len() as u32) < threshold {
            return Err(Error::SubThreshold {
                have: signers.len() as u32,
                need: threshold,
            });
        }
        let mut sessions: Vec<SigningSession> = signers
            .iter()
            .map(|s| SigningSession::start(s, &mut self.rng))
            .collect();
        let commitments: Vec<NonceCommitment> = sessions.iter().map(|s| s.commitment()).collect();
        for c in &commitments {
            self.bus.broadcast(
                session_id,
                c.index,
                PayloadKind::SigRound1,
                c.point.encode()?.to_vec(),
                0,
            );
        }
        let agg_nonce = aggregate_nonce(&commitments)?;
        let e = challenge(&agg_nonce, verif_key, message)?;
        let mut partials: Vec<PartialSignature> = Vec::with_capacity(sessions.len());
        for s in sessions.iter_mut() {
            let p = s.partial_sign(&e)?;
            self.bus.broadcast(
                session_id,
                p.index,
                PayloadKind::SigRound2,
                p.value.encode().to_vec(),
                0,
            );
            partials.push(p);
        }
        let publics: Vec<(PartyIndex, GroupPoint)> =
            signers.iter().map(|s| (s.index, s.public)).collect();
        aggregate_signature(&commitments, &partials, &publics, &e)
    }

    /// Phase II: output detection, one-time share recovery, threshold
    /// redemption, state evolution, and erasure.
    pub fn phase2(&mut self, pending: &PendingTransfer) -> Result<Phase2Outcome> {
        let session_id = pending.session_id;
        let opts = &pending.opts;
        let entry = self.ledger.entry(pending.entry_id)?;
        if entry.status != EntryStatus::Confirmed {
            return Err(Error::Ledger("entry is not confirmed"));
        }
        let entry_dest = entry.transcript.dest;
        let entry_label = entry.transcript.label;
        let entry_tag = entry.transcript.tag;
        let mut detections = self.take_detections(session_id);

        let mut s2 = opts.s2.clone().unwrap_or_else(|| self.receiver_indices());
        if (s2.len() as u32) < self.config.t2 {
            return Err(Error::SubThreshold {
                have: s2.len() as u32,
                need: self.config.t2,
            });
        }
        if self.receiver_state().is_consumed(&entry_tag) {
            return Err(Error::TagConsumed);
        }

        // The public derivation offset, captured before any state moves.
        let parent = self.receiver_state();
        let (public_offset, _) =
            derive_offset(&parent.aggregate_pub(), parent.chaincode(), &entry_tag)?;

        // Step 2.1: child-state reconstruction. Pure per-party transitions;
        // nothing is adopted until redemption succeeds.
        let candidates: Vec<(PartyIndex, DerivationState)> = s2
            .iter()
            .map(|&j| {
                let state = self
                    .receiver_party(j)?
                    .derivation()
                    .expect("receiver party")
                    .derive_child(&entry_tag)?;
                Ok((j, state))
            })
            .collect::<Result<_>>()?;
        let child_pub = candidates[0].1.aggregate_pub();
        let child_epoch = candidates[0].1.epoch();

        let (rho, shared_enc) = match opts.mode {
            TransferMode::Plain => {
                if entry_dest != child_pub {
                    return Ok(Phase2Outcome::Skipped);
                }
                (None, None)
            }
            TransferMode::Anonymous => {
                let Some(label) = entry_label else {
                    return Ok(Phase2Outcome::Skipped);
                };
                // Receiver-side shared secret from each member's DH term.
                let partials: Vec<PartialDh> = candidates
                    .iter()
                    .map(|(_, state)| {
                        receiver_partial_dh(
                            state.my_share().expect("receiver share"),
                            &self.sender_aggregate,
                        )
                    })
                    .collect::<Result<_>>()?;
                for p in &partials {
                    self.bus.broadcast(
                        session_id,
                        p.index,
                        PayloadKind::ReceiverShare,
                        p.term.encode()?.to_vec(),
                        POINT_LEN,
                    );
                }
                let shared = aggregate_shared_secret(&partials)?;
                let rho = stealth_offset(&shared, &label)?;
                if dsag::apply_stealth_offset(&child_pub, &rho) != entry_dest {
                    return Ok(Phase2Outcome::Skipped);
                }
                (Some(rho), Some(shared.encode()?))
            }
        };

        // Step 2.2: one-time share recovery and public consistency check.
        let mut one_time: Vec<OneTimeShare> = Vec::new();
        if let Some(rho) = rho {
            let mut shares: Vec<OneTimeShare> = candidates
                .iter()
                .map(|(_, state)| {
                    recover_one_time_share(state.my_share().expect("receiver share"), &rho)
                })
                .collect();
            if let Some(culprit) = opts.fault.bad_one_time_share {
                if let Some(s) = shares.iter_mut().find(|s| s.index == culprit) {
                    s.public += GroupPoint::GENERATOR;
                }
            }
            for s in &shares {
                self.bus.broadcast(
                    session_id,
                    s.index,
                    PayloadKind::ReceiverShare,
                    s.public.encode()?.to_vec(),
                    POINT_LEN,
                );
            }
            let publics: Vec<(PartyIndex, GroupPoint)> =
                shares.iter().map(|s| (s.index, s.public)).collect();
            match dsag::verify_one_time_shares(&publics, &entry_dest) {
                Ok(()) => {}
                Err(e @ Error::InconsistentShares) => {
                    detections.push(e);
                    // Per-share isolation names the culprit; the session
                    // continues with the surviving qualified subset.
                    let child_publics = candidates[0].1.public_shares().to_vec();
                    let culprit =
                        match dsag::isolate_inconsistent_share(&publics, &child_publics, &rho) {
                            Err(Error::MisbehavingParty(i)) => {
                                detections.push(Error::MisbehavingParty(i));
                                i
                            }
                            Err(e) => return Err(e),
                            Ok(()) => return Err(Error::InconsistentShares),
                        };
                    let complaint = Complaint {
                        accuser: s2[0],
                        dealer: culprit,
                    };
                    self.bus.broadcast(
                        session_id,
                        s2[0],
                        PayloadKind::Complaint,
                        serde_json::to_vec(&complaint).unwrap_or_default(),
                        0,
                    );
                    s2.retain(|&j| j != culprit);
                    if (s2.len() as u32) < self.config.t2 {
                        self.record_detections(session_id, detections);
                        return Err(Error::InconsistentShares);
                    }
                    shares.retain(|s| s.index != culprit);
                    let pruned: Vec<(PartyIndex, GroupPoint)> =
                        shares.iter().map(|s| (s.index, s.public)).collect();
                    dsag::verify_one_time_shares(&pruned, &entry_dest)?;
                }
                Err(e) => return Err(e),
            }
            one_time = shares;
            // Park the recovered material in each participating party's
            // state until redemption erases it.
            for share in &one_time {
                if let Some(p) = self
                    .receiver_parties
                    .iter_mut()
                    .find(|p| p.index == share.index)
                {
                    p.one_time = Some(*share);
                    p.stealth_offset = Some(rho);
                }
            }
        }

        // Step 2.3: threshold redemption under the one-time key, then state
        // evolution and erasure.
        let t2_set: Vec<PartyIndex> = opts
            .t2_signers
            .clone()
            .unwrap_or_else(|| s2.iter().copied().take(self.config.t2 as usize).collect());
        for i in &t2_set {
            if !s2.contains(i) {
                return Err(Error::IndexNotInSubset(*i));
            }
        }
        let signers: Vec<SigningShare> = match opts.mode {
            TransferMode::Anonymous => t2_set
                .iter()
                .map(|&i| {
                    one_time
                        .iter()
                        .find(|o| o.index == i)
                        .map(SigningShare::from)
                        .ok_or(Error::UnknownParty(i))
                })
                .collect::<Result<_>>()?,
            TransferMode::Plain => t2_set
                .iter()
                .map(|&i| {
                    candidates
                        .iter()
                        .find(|(j, _)| *j == i)
                        .map(|(_, state)| {
                            SigningShare::from_share(state.my_share().expect("receiver share"))
                        })
                        .ok_or(Error::UnknownParty(i))
                })
                .collect::<Result<_>>()?,
        };
        let spend_message = spend_message(&entry_dest, opts.amount)?;
        let spend_sig = self.sign_with_bus(
            session_id,
            &spend_message,
            &signers,
            self.config.t2,
            &entry_dest,
        )?;
        self.bus.broadcast(
            session_id,
            t2_set[0],
            PayloadKind::Signature,
            spend_sig.encode()?.to_vec(),
            SIGNATURE_ACCOUNTED_LEN,
        );
        self.ledger
            .record_spend(pending.entry_id, spend_message, spend_sig)?;

        // All receiver parties adopt the child state and consume the tag;
        // derivation is deterministic, so non-participants land on the same
        // state as session members.
        for p in self.receiver_parties.iter_mut() {
            if let PartyKeys::Receiver { derivation } = &mut p.keys {
                let mut next = derivation.derive_child(&entry_tag)?;
                next.mark_consumed(entry_tag);
                *derivation = next;
            }
        }

        let secrets = if opts.capture_secrets {
            Some(CapturedSecrets {
                derivation_offset: public_offset.encode(),
                child_chaincode: pending.descriptor.chaincode,
                shared_secret: shared_enc,
                stealth_offset: rho.map(|r| r.encode()),
                one_time_secrets: one_time
                    .iter()
                    .map(|o| (o.index.get(), o.secret.encode()))
                    .collect(),
            })
        } else {
            None
        };

        if !opts.skip_erasure {
            for p in self.receiver_parties.iter_mut() {
                if p.one_time.is_some() || p.stealth_offset.is_some() {
                    p.erase_one_time(child_epoch);
                }
            }
        }

        self.pending.retain(|p| p.session_id != session_id);
        let messages = self.bus.session(session_id);
        let breakdown = match opts.mode {
            TransferMode::Anonymous => wire::account_session(&messages, self.config.n2).ok(),
            TransferMode::Plain => None,
        };
        Ok(Phase2Outcome::Redeemed(Box::new(TransferRecord {
            session_id,
            entry_id: pending.entry_id,
            mode: opts.mode,
            epoch: child_epoch,
            descriptor: pending.descriptor.clone(),
            dest: entry_dest,
            label: entry_label,
            messages,
            breakdown,
            detections,
            secrets,
        })))
    }

    /// Runs one complete transfer: Phase I, confirmation, Phase II.
    pub fn run_transfer(&mut self, opts: &TransferOptions) -> Result<TransferRecord> {
        let pending = self.phase1(opts)?;
        match self.phase2(&pending)? {
            Phase2Outcome::Redeemed(record) => Ok(*record),
            Phase2Outcome::Skipped => Err(Error::Ledger("own transfer not detected")),
        }
    }

    /// Scans pending and confirmed ledger entries against every outstanding
    /// session descriptor. Detection math runs off-bus; Phase II repeats it
    /// with accounting when an owned entry is redeemed.
    pub fn scan_ledger(&self) -> Result<ScanReport> {
        let mut report = ScanReport::default();
        let state = self.receiver_state();
        for (id, entry) in self.ledger.entries().iter().enumerate() {
            if entry.status == EntryStatus::Spent {
                continue;
            }
            let tag = entry.transcript.tag;
            if state.is_consumed(&tag) {
                report.consumed_tag_entries.push(id);
                continue;
            }
            let Some(pending) = self.pending.iter().find(|p| p.descriptor.tag == tag) else {
                continue;
            };
            let owned = match entry.transcript.label {
                None => entry.transcript.dest == pending.descriptor.child_pub,
                Some(label) => {
                    let partials: Vec<PartialDh> = self
                        .receiver_parties
                        .iter()
                        .map(|p| {
                            let child = p
                                .derivation()
                                .expect("receiver party")
                                .derive_child(&tag)?;
                            receiver_partial_dh(
                                child.my_share().expect("receiver share"),
                                &self.sender_aggregate,
                            )
                        })
                        .collect::<Result<_>>()?;
                    let shared = aggregate_shared_secret(&partials)?;
                    let candidate = dsag::StealthDestination {
                        dest: entry.transcript.dest,
                        tag,
                        label,
                    };
                    dsag::detect(&candidate, &pending.descriptor.child_pub, &shared)
                }
            };
            if owned {
                report.owned.push(ScanHit { entry_id: id, tag });
            }
        }
        Ok(report)
    }
}

/// Canonical payment message: mode byte, recipient, amount, tag, and the
/// stealth label when present.
pub fn payment_message(
    mode: TransferMode,
    dest: &GroupPoint,
    amount: u64,
    tag: &DerivationTag,
    label: Option<&StealthLabel>,
) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(90);
    out.push(0x01);
    out.extend_from_slice(&dest.encode()?);
    out.extend_from_slice(&amount.to_be_bytes());
    out.extend_from_slice(tag.as_bytes());
    match (mode, label) {
        (TransferMode::Anonymous, Some(l)) => out.extend_from_slice(l.as_bytes()),
        (TransferMode::Plain, None) => {}
        _ => return Err(Error::Ledger("label presence must match transfer mode")),
    }
    Ok(out)
}

/// Canonical redemption message over the one-time key.
pub fn spend_message(dest: &GroupPoint, amount: u64) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(42);
    out.push(0x02);
    out.extend_from_slice(&dest.encode()?);
    out.extend_from_slice(&amount.to_be_bytes());
    Ok(out)
}
