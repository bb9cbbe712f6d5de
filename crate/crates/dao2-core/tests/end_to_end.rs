//! Full-protocol behavior: correctness across qualified subsets, state
//! evolution, erasure, scanning, fault handling, and determinism.

use dao2_core::dkd::DerivationTag;
use dao2_core::protocol::ledger::EntryStatus;
use dao2_core::protocol::{
    inject_fault, FaultScenario, Phase2Outcome, SetupConfig, Simulation, TransferOptions,
};
use dao2_core::sharing::{lagrange_coeff, PartyIndex};
use dao2_core::wire::CommBreakdown;
use dao2_core::{Error, GroupPoint, Scalar};
use itertools::Itertools;

fn idx(i: u32) -> PartyIndex {
    PartyIndex::new(i).unwrap()
}

fn indices(v: &[u32]) -> Vec<PartyIndex> {
    v.iter().map(|&i| idx(i)).collect()
}

/// Lagrange sum of captured one-time secrets over a subset, in the exponent.
fn one_time_reconstruction(
    secrets: &[(u32, [u8; 32])],
    subset: &[u32],
) -> GroupPoint {
    let subset_idx = indices(subset);
    let mut acc = Scalar::ZERO;
    for &i in subset {
        let (_, bytes) = secrets.iter().find(|(j, _)| *j == i).unwrap();
        let d = Scalar::decode(bytes).unwrap();
        acc += lagrange_coeff(idx(i), &subset_idx).unwrap() * d;
    }
    GroupPoint::base_mul(&acc)
}

#[test]
fn destination_equals_one_time_reconstruction_across_subsets() {
    // For each configuration, every qualified receiver subset runs its own
    // session; the recovered one-time shares must reconstruct the published
    // destination exactly, and every sub-subset of the session members must
    // agree.
    for &(n, t) in &[(1u32, 1u32), (3, 2), (5, 2), (5, 3)] {
        let mut sim = Simulation::setup(SetupConfig::new(n, t, n, t), 1000 + u64::from(n)).unwrap();
        let members: Vec<u32> = (1..=n).collect();
        for k in t..=n {
            for s2 in members.iter().copied().combinations(k as usize) {
                let opts = TransferOptions {
                    s2: Some(indices(&s2)),
                    capture_secrets: true,
                    ..TransferOptions::anonymous()
                };
                let record = sim.run_transfer(&opts).unwrap();
                let secrets = record.secrets.as_ref().unwrap();
                for j in t..=(s2.len() as u32) {
                    for subset in s2.iter().copied().combinations(j as usize) {
                        assert_eq!(
                            one_time_reconstruction(&secrets.one_time_secrets, &subset),
                            record.dest,
                            "n={n} t={t} s2={s2:?} subset={subset:?}"
                        );
                    }
                }
                assert!(sim.receiver_states_consistent());
            }
        }
    }
}

#[test]
fn consecutive_transfers_evolve_one_epoch_each() {
    let mut sim = Simulation::setup(SetupConfig::new(3, 2, 3, 2), 2).unwrap();
    let first = sim.run_transfer(&TransferOptions::anonymous()).unwrap();
    let second = sim.run_transfer(&TransferOptions::anonymous()).unwrap();
    assert_eq!(first.epoch, 1);
    assert_eq!(second.epoch, 2);
    assert_ne!(first.descriptor.tag, second.descriptor.tag);
    assert_ne!(first.descriptor.chaincode, second.descriptor.chaincode);
    assert_ne!(first.dest, second.dest);
    assert_eq!(sim.receiver_state().epoch(), 2);
    assert_eq!(sim.receiver_state().consumed_tags().len(), 2);
}

#[test]
fn communication_breakdown_matches_closed_form() {
    for &n in &[3u32, 5, 7] {
        let mut sim = Simulation::setup(SetupConfig::new(n, 2, n, 2), 3).unwrap();
        let record = sim.run_transfer(&TransferOptions::anonymous()).unwrap();
        assert_eq!(record.breakdown.unwrap(), CommBreakdown::expected(n));
    }
}

#[test]
fn erasure_audit_finds_no_one_time_material() {
    let mut sim = Simulation::setup(SetupConfig::new(3, 2, 3, 2), 4).unwrap();
    let opts = TransferOptions {
        capture_secrets: true,
        ..TransferOptions::anonymous()
    };
    let record = sim.run_transfer(&opts).unwrap();
    let secrets = record.secrets.as_ref().unwrap();
    let audit = sim.audit_all_states();

    let contains = |needle: &[u8]| audit.windows(needle.len()).any(|w| w == needle);
    assert!(!contains(&secrets.stealth_offset.unwrap()));
    assert!(!contains(&secrets.shared_secret.unwrap()));
    for (_, d) in &secrets.one_time_secrets {
        assert!(!contains(d));
    }
    for p in sim.receiver_parties() {
        assert!(p.erased_epochs.contains(&1));
    }
}

#[test]
fn skipping_erasure_is_caught_by_the_audit() {
    // Negative control: with erasure disabled the same audit must find the
    // one-time secrets, proving the audit actually bites.
    let mut sim = Simulation::setup(SetupConfig::new(3, 2, 3, 2), 5).unwrap();
    let opts = TransferOptions {
        capture_secrets: true,
        skip_erasure: true,
        ..TransferOptions::anonymous()
    };
    let record = sim.run_transfer(&opts).unwrap();
    let secrets = record.secrets.as_ref().unwrap();
    let audit = sim.audit_all_states();
    let contains = |needle: &[u8]| audit.windows(needle.len()).any(|w| w == needle);
    assert!(contains(&secrets.stealth_offset.unwrap()));
    for (_, d) in &secrets.one_time_secrets {
        assert!(contains(d));
    }
}

#[test]
fn scan_returns_exactly_the_owned_entry() {
    let mut sim = Simulation::setup(SetupConfig::new(3, 2, 3, 2), 6).unwrap();
    let pending = sim.phase1(&TransferOptions::anonymous()).unwrap();

    // Fifteen decoys from independent single-member lineages, three of which
    // maliciously reuse our tag.
    for d in 0..15u64 {
        let mut decoy = Simulation::setup(SetupConfig::new(1, 1, 1, 1), 999 + d).unwrap();
        let p = decoy.phase1(&TransferOptions::anonymous()).unwrap();
        let mut transcript = decoy.ledger().entry(p.entry_id).unwrap().transcript.clone();
        if d % 5 == 0 {
            transcript.tag = pending.descriptor.tag;
        }
        let key = decoy.sender_aggregate();
        sim.import_confirmed(transcript, &key).unwrap();
    }

    let report = sim.scan_ledger().unwrap();
    assert_eq!(report.owned.len(), 1);
    assert_eq!(report.owned[0].entry_id, pending.entry_id);

    // Redeem, then rescan: nothing owned, and any entry still carrying the
    // now-consumed tag is reported as such.
    match sim.phase2(&pending).unwrap() {
        Phase2Outcome::Redeemed(_) => {}
        Phase2Outcome::Skipped => panic!("own entry must redeem"),
    }
    let after = sim.scan_ledger().unwrap();
    assert!(after.owned.is_empty());
    assert_eq!(after.consumed_tag_entries.len(), 3);
}

#[test]
fn empty_ledger_scans_empty() {
    let sim = Simulation::setup(SetupConfig::new(3, 2, 3, 2), 7).unwrap();
    let report = sim.scan_ledger().unwrap();
    assert!(report.owned.is_empty());
    assert!(report.consumed_tag_entries.is_empty());
}

#[test]
fn all_fault_scenarios_detect_and_keep_honest_states_aligned() {
    for scenario in FaultScenario::ALL {
        for seed in 0..5u64 {
            let report = inject_fault(scenario, seed).unwrap();
            assert!(
                report.expected_detection_fired(),
                "{scenario:?} seed {seed}: {:?}",
                report.detections
            );
            assert!(
                report.honest_states_consistent,
                "{scenario:?} seed {seed} diverged"
            );
        }
    }
}

#[test]
fn recovery_scenarios_complete_after_exclusion() {
    for scenario in [
        FaultScenario::BadDkgShare,
        FaultScenario::BadDhOpening,
        FaultScenario::BadOneTimeShare,
        FaultScenario::MismatchedDerivationState,
    ] {
        let report = inject_fault(scenario, 11).unwrap();
        assert!(report.completed_after_recovery, "{scenario:?}");
    }
}

#[test]
fn sub_threshold_sign_leaves_no_signature_bytes() {
    let report = inject_fault(FaultScenario::SubThresholdSign, 12).unwrap();
    assert!(!report.signature_bytes_produced);
}

#[test]
fn transcripts_are_seed_deterministic() {
    let run = |seed: u64| {
        let mut sim = Simulation::setup(SetupConfig::new(3, 2, 3, 2), seed).unwrap();
        let record = sim.run_transfer(&TransferOptions::anonymous()).unwrap();
        record.transcript_json().to_string()
    };
    assert_eq!(run(31), run(31));
    assert_ne!(run(31), run(32));
}

#[test]
fn ledger_rejects_invalid_confirmations() {
    let mut other = Simulation::setup(SetupConfig::new(1, 1, 1, 1), 8).unwrap();
    let p = other.phase1(&TransferOptions::anonymous()).unwrap();
    let transcript = other.ledger().entry(p.entry_id).unwrap().transcript.clone();

    let mut sim = Simulation::setup(SetupConfig::new(3, 2, 3, 2), 9).unwrap();
    let wrong_key = sim.sender_aggregate();
    assert_eq!(
        sim.import_confirmed(transcript, &wrong_key).unwrap_err(),
        Error::Ledger("payment signature invalid")
    );
}

#[test]
fn ledger_persistence_appends_records() {
    let dir = std::env::temp_dir().join(format!("dao2-ledger-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("ledger.bin");
    let _ = std::fs::remove_file(&path);

    let mut config = SetupConfig::new(3, 2, 3, 2);
    config.ledger_path = Some(path.clone());
    let mut sim = Simulation::setup(config, 10).unwrap();
    sim.run_transfer(&TransferOptions::anonymous()).unwrap();

    let bytes = std::fs::read(&path).unwrap();
    // submit, confirm, spend: three length-prefixed records, each decodable.
    let mut cursor = 0usize;
    let mut statuses = Vec::new();
    while cursor < bytes.len() {
        let len = u32::from_be_bytes(bytes[cursor..cursor + 4].try_into().unwrap()) as usize;
        let entry = dao2_core::wire::decode_ledger_entry(&bytes[cursor + 4..cursor + 4 + len])
            .expect("persisted record decodes");
        statuses.push(entry.status);
        cursor += 4 + len;
    }
    assert_eq!(cursor, bytes.len());
    assert_eq!(
        statuses,
        vec![
            EntryStatus::Pending,
            EntryStatus::Confirmed,
            EntryStatus::Spent
        ]
    );
    std::fs::remove_file(&path).unwrap();
}

#[test]
fn forced_tag_collision_across_lineages_still_detects_correct_owner() {
    // Two independent receiver DAOs with the same tag on file: each scan
    // claims only its own entry.
    let tag = DerivationTag::from_bytes([9u8; 16]);
    let opts = TransferOptions {
        forced_tag: Some(tag),
        ..TransferOptions::anonymous()
    };
    let mut a = Simulation::setup(SetupConfig::new(3, 2, 3, 2), 100).unwrap();
    let mut b = Simulation::setup(SetupConfig::new(3, 2, 3, 2), 200).unwrap();
    let pa = a.phase1(&opts).unwrap();
    let pb = b.phase1(&opts).unwrap();

    let tb = b.ledger().entry(pb.entry_id).unwrap().transcript.clone();
    let kb = b.sender_aggregate();
    a.import_confirmed(tb, &kb).unwrap();

    let report = a.scan_ledger().unwrap();
    assert_eq!(report.owned.len(), 1);
    assert_eq!(report.owned[0].entry_id, pa.entry_id);
}

#[test]
fn spent_entries_never_regress() {
    let mut sim = Simulation::setup(SetupConfig::new(3, 2, 3, 2), 13).unwrap();
    let record = sim.run_transfer(&TransferOptions::anonymous()).unwrap();
    let entry = sim.ledger().entry(record.entry_id).unwrap();
    assert_eq!(entry.status, EntryStatus::Spent);
    assert!(entry.transcript.spend.is_some());
}
