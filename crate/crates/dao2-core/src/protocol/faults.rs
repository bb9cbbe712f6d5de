//! Scripted Byzantine deviations and the detections they must trigger.
//!
//! Each scenario runs a seeded simulation with one corruption active,
//! records what the protocol detected, whether the session still completed
//! once the culprit was excluded, and whether honest receiver states stayed
//! bit-identical throughout.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sharing::{Complaint, PartyIndex};

use super::bus::PayloadKind;
use super::{FaultPlan, SetupConfig, Simulation, TransferOptions};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultScenario {
    /// A DKG dealer sends one party an inconsistent share.
    BadDkgShare,
    /// A sender opens a DH term that does not match its commitment.
    BadDhOpening,
    /// A receiver publishes a corrupted one-time public share.
    BadOneTimeShare,
    /// Fewer than `t` signers attempt to authorize a payment.
    SubThresholdSign,
    /// A full Phase I is replayed with an already-consumed tag.
    ReusedTag,
    /// One receiver derives the child state from a tampered tag.
    MismatchedDerivationState,
}

impl FaultScenario {
    pub const ALL: [FaultScenario; 6] = [
        FaultScenario::BadDkgShare,
        FaultScenario::BadDhOpening,
        FaultScenario::BadOneTimeShare,
        FaultScenario::SubThresholdSign,
        FaultScenario::ReusedTag,
        FaultScenario::MismatchedDerivationState,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FaultScenario::BadDkgShare => "bad-dkg-share",
            FaultScenario::BadDhOpening => "bad-dh-opening",
            FaultScenario::BadOneTimeShare => "bad-one-time-share",
            FaultScenario::SubThresholdSign => "sub-threshold-sign",
            FaultScenario::ReusedTag => "reused-tag",
            FaultScenario::MismatchedDerivationState => "mismatched-derivation-state",
        }
    }

    pub fn parse(name: &str) -> Option<FaultScenario> {
        FaultScenario::ALL.iter().copied().find(|s| s.name() == name)
    }
}

/// What a scenario's run observed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Detection {
    DkgComplaint(Complaint),
    ProtocolError(Error),
}

impl core::fmt::Display for Detection {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Detection::DkgComplaint(c) => {
                write!(f, "DkgComplaint(dealer {} accused by {})", c.dealer, c.accuser)
            }
            Detection::ProtocolError(e) => write!(f, "{}", e.name()),
        }
    }
}

/// The recorded outcome of one fault-injection run.
#[derive(Clone, Debug, Serialize)]
pub struct FaultReport {
    pub scenario: FaultScenario,
    pub detections: Vec<Detection>,
    /// The session (or a follow-up honest session) completed once the
    /// culprit was excluded. Not applicable to gate-style scenarios where
    /// the whole point is refusal.
    pub completed_after_recovery: bool,
    pub honest_states_consistent: bool,
    /// Whether any signature bytes reached the bus or ledger for the faulty
    /// session.
    pub signature_bytes_produced: bool,
}

impl FaultReport {
    /// Did the detection this scenario is supposed to trigger actually fire?
    pub fn expected_detection_fired(&self) -> bool {
        let has = |pred: &dyn Fn(&Detection) -> bool| self.detections.iter().any(pred);
        match self.scenario {
            FaultScenario::BadDkgShare => has(&|d| matches!(d, Detection::DkgComplaint(_))),
            FaultScenario::BadDhOpening => has(&|d| {
                matches!(
                    d,
                    Detection::ProtocolError(Error::InconsistentContribution(_))
                )
            }),
            FaultScenario::BadOneTimeShare => {
                has(&|d| matches!(d, Detection::ProtocolError(Error::InconsistentShares)))
                    && has(&|d| matches!(d, Detection::ProtocolError(Error::MisbehavingParty(_))))
            }
            FaultScenario::SubThresholdSign => {
                has(&|d| matches!(d, Detection::ProtocolError(Error::SubThreshold { .. })))
                    && !self.signature_bytes_produced
            }
            FaultScenario::ReusedTag => {
                has(&|d| matches!(d, Detection::ProtocolError(Error::TagConsumed)))
            }
            FaultScenario::MismatchedDerivationState => {
                has(&|d| matches!(d, Detection::ProtocolError(Error::DivergentDerivation(_))))
            }
        }
    }
}

fn idx(i: u32) -> PartyIndex {
    PartyIndex::new(i).expect("nonzero index")
}

fn signature_count(sim: &Simulation, session_id: u64) -> usize {
    sim.bus()
        .session(session_id)
        .iter()
        .filter(|m| m.kind == PayloadKind::Signature)
        .count()
}

/// Runs one scripted fault scenario under a seed and records the outcome.
pub fn inject_fault(scenario: FaultScenario, seed: u64) -> Result<FaultReport> {
    let config = SetupConfig::new(3, 2, 3, 2);
    match scenario {
        FaultScenario::BadDkgShare => {
            // Dealer 2 corrupts its share to party 1 during receiver setup.
            let mut sim = Simulation::setup_with_dkg_tamper(
                config,
                seed,
                Some((idx(2), idx(1))),
            )?;
            let detections: Vec<Detection> = sim
                .dkg_complaints()
                .iter()
                .map(|c| Detection::DkgComplaint(*c))
                .collect();
            // The surviving contributions must still carry a full transfer.
            let record = sim.run_transfer(&TransferOptions::anonymous())?;
            Ok(FaultReport {
                scenario,
                detections,
                completed_after_recovery: true,
                honest_states_consistent: sim.receiver_states_consistent(),
                signature_bytes_produced: signature_count(&sim, record.session_id) == 2,
            })
        }
        FaultScenario::BadDhOpening => {
            let mut sim = Simulation::setup(config, seed)?;
            let opts = TransferOptions {
                fault: FaultPlan {
                    bad_dh_opening: Some(idx(1)),
                    ..FaultPlan::default()
                },
                ..TransferOptions::anonymous()
            };
            let record = sim.run_transfer(&opts)?;
            Ok(FaultReport {
                scenario,
                detections: record
                    .detections
                    .iter()
                    .cloned()
                    .map(Detection::ProtocolError)
                    .collect(),
                completed_after_recovery: true,
                honest_states_consistent: sim.receiver_states_consistent(),
                signature_bytes_produced: signature_count(&sim, record.session_id) == 2,
            })
        }
        FaultScenario::BadOneTimeShare => {
            let mut sim = Simulation::setup(config, seed)?;
            let opts = TransferOptions {
                fault: FaultPlan {
                    bad_one_time_share: Some(idx(2)),
                    ..FaultPlan::default()
                },
                ..TransferOptions::anonymous()
            };
            let record = sim.run_transfer(&opts)?;
            Ok(FaultReport {
                scenario,
                detections: record
                    .detections
                    .iter()
                    .cloned()
                    .map(Detection::ProtocolError)
                    .collect(),
                completed_after_recovery: true,
                honest_states_consistent: sim.receiver_states_consistent(),
                signature_bytes_produced: signature_count(&sim, record.session_id) == 2,
            })
        }
        FaultScenario::SubThresholdSign => {
            let mut sim = Simulation::setup(config, seed)?;
            let opts = TransferOptions {
                t1_signers: Some(vec![idx(1)]),
                ..TransferOptions::anonymous()
            };
            let err = match sim.phase1(&opts) {
                Err(e) => e,
                Ok(_) => {
                    return Ok(FaultReport {
                        scenario,
                        detections: vec![],
                        completed_after_recovery: false,
                        honest_states_consistent: sim.receiver_states_consistent(),
                        signature_bytes_produced: true,
                    })
                }
            };
            // No signature may exist anywhere: the gate fires before round 1.
            let sigs = signature_count(&sim, 0);
            Ok(FaultReport {
                scenario,
                detections: vec![Detection::ProtocolError(err)],
                completed_after_recovery: false,
                honest_states_consistent: sim.receiver_states_consistent(),
                signature_bytes_produced: sigs > 0 || !sim.ledger().entries().is_empty(),
            })
        }
        FaultScenario::ReusedTag => {
            let mut sim = Simulation::setup(config, seed)?;
            let first = sim.run_transfer(&TransferOptions::anonymous())?;
            let replay = TransferOptions {
                forced_tag: Some(first.descriptor.tag),
                ..TransferOptions::anonymous()
            };
            let err = match sim.phase1(&replay) {
                Err(e) => e,
                Ok(_) => {
                    return Ok(FaultReport {
                        scenario,
                        detections: vec![],
                        completed_after_recovery: false,
                        honest_states_consistent: sim.receiver_states_consistent(),
                        signature_bytes_produced: true,
                    })
                }
            };
            Ok(FaultReport {
                scenario,
                detections: vec![Detection::ProtocolError(err)],
                completed_after_recovery: false,
                honest_states_consistent: sim.receiver_states_consistent(),
                signature_bytes_produced: false,
            })
        }
        FaultScenario::MismatchedDerivationState => {
            let mut sim = Simulation::setup(config, seed)?;
            let opts = TransferOptions {
                fault: FaultPlan {
                    mismatched_tag_party: Some(idx(2)),
                    ..FaultPlan::default()
                },
                ..TransferOptions::anonymous()
            };
            let err = match sim.phase1(&opts) {
                Err(e) => e,
                Ok(_) => {
                    return Ok(FaultReport {
                        scenario,
                        detections: vec![],
                        completed_after_recovery: false,
                        honest_states_consistent: sim.receiver_states_consistent(),
                        signature_bytes_produced: true,
                    })
                }
            };
            // The divergent party is excluded and the remaining quorum
            // finishes a fresh session.
            let retry = TransferOptions {
                s2: Some(vec![idx(1), idx(3)]),
                ..TransferOptions::anonymous()
            };
            let completed = sim.run_transfer(&retry).is_ok();
            Ok(FaultReport {
                scenario,
                detections: vec![Detection::ProtocolError(err)],
                completed_after_recovery: completed,
                honest_states_consistent: sim.receiver_states_consistent(),
                signature_bytes_produced: completed,
            })
        }
    }
}
