//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line. Tests share a lock so the timing-sensitive checks are
//! never measured while another criterion saturates the CPU.

use std::sync::{Mutex, MutexGuard, OnceLock};

use dao2_cli::commands::{run_bench, run_depth, BenchConfig, DepthArgs};
use dao2_core::group::{GroupPoint, Scalar};
use dao2_core::protocol::{
    degenerate_single_user, inject_fault, FaultScenario, SetupConfig, Simulation, TransferOptions,
};
use dao2_core::sharing::{lagrange_coeff, reconstruct, share_secret, PartyIndex, Share};
use dao2_core::tsig::ts_verify;
use itertools::Itertools;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

fn lock() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn idx(i: u32) -> PartyIndex {
    PartyIndex::new(i).unwrap()
}

fn indices(v: &[u32]) -> Vec<PartyIndex> {
    v.iter().map(|&i| idx(i)).collect()
}

// ---------------------------------------------------------------------------
// Criterion 1: communication parity, byte-exact.
// ---------------------------------------------------------------------------

const EXPECTED_SENDER: [(u32, usize); 6] = [
    (3, 243),
    (5, 373),
    (7, 503),
    (10, 698),
    (15, 1023),
    (20, 1348),
];
const EXPECTED_RECEIVER: [(u32, usize); 6] = [
    (3, 198),
    (5, 330),
    (7, 462),
    (10, 660),
    (15, 990),
    (20, 1320),
];

#[test]
fn criterion_1_communication_parity() {
    let _g = lock();
    let config = BenchConfig {
        n_values: vec![3, 5, 7, 10, 15, 20],
        t: 2,
        repetitions: 2,
        seed: 11,
    };
    let report = run_bench(&config).unwrap();
    for (row, (sender, receiver)) in report
        .rows
        .iter()
        .zip(EXPECTED_SENDER.iter().zip(EXPECTED_RECEIVER.iter()))
    {
        assert_eq!(row.n, sender.0);
        assert_eq!(row.comm.dkd_bytes, 81, "n={}", row.n);
        assert_eq!(row.comm.sig_bytes, 128, "n={}", row.n);
        assert_eq!(row.comm.dsag_sender_bytes, sender.1, "n={}", row.n);
        assert_eq!(row.comm.dsag_receiver_bytes, receiver.1, "n={}", row.n);
        assert_eq!(
            row.comm.total,
            81 + 128 + sender.1 + receiver.1,
            "n={}",
            row.n
        );
    }
    assert_eq!(report.rows[0].comm.total, 650);
    println!(
        "acceptance criterion 1 (communication parity): PASS — dkd 81 B, sigs 128 B, \
         sender/receiver series byte-exact for n in {{3,5,7,10,15,20}}, total 650 B at n=3"
    );
}

// ---------------------------------------------------------------------------
// Criteria 2 and 4 share one session fleet: correctness assertions run per
// session and the post-redemption state snapshots feed the erasure audit.
// ---------------------------------------------------------------------------

struct SessionOutcome {
    config: (u32, u32),
    dest: GroupPoint,
    one_time_secrets: Vec<(u32, [u8; 32])>,
    stealth_offset: [u8; 32],
    shared_secret: [u8; 33],
    session_members: Vec<u32>,
    payment_ok: bool,
    spend_ok: bool,
    states_consistent: bool,
    chaincodes_identical: bool,
    audit_snapshot: Vec<u8>,
}

struct Fleet {
    sessions: Vec<SessionOutcome>,
}

fn subsets_for(n: u32, t: u32, cap: usize, seed: u64) -> Vec<Vec<u32>> {
    let members: Vec<u32> = (1..=n).collect();
    let mut all: Vec<Vec<u32>> = (t..=n)
        .flat_map(|k| members.iter().copied().combinations(k as usize))
        .collect();
    if all.len() <= cap {
        return all;
    }
    // Deterministic partial shuffle, then take the prefix.
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for i in 0..cap {
        let j = i + (rng.next_u64() as usize) % (all.len() - i);
        all.swap(i, j);
    }
    all.truncate(cap);
    all
}

fn run_fleet() -> Fleet {
    // The last configuration extends the sweep to a large DAO with sampled
    // subsets; the six spec'd configurations precede it.
    let configs = [
        (1u32, 1u32),
        (3, 2),
        (5, 2),
        (5, 3),
        (7, 2),
        (7, 3),
        (20, 2),
    ];
    let mut sessions = Vec::new();
    for (ci, &(n, t)) in configs.iter().enumerate() {
        let cap = match n {
            7 => 50,
            20 => 6,
            _ => usize::MAX,
        };
        let epochs_per_subset = if n == 20 { 1 } else { 4 };
        let subsets = subsets_for(n, t, cap, 7000 + ci as u64);
        let mut sim =
            Simulation::setup(SetupConfig::new(n, t, n, t), 9000 + ci as u64).unwrap();
        for (si, subset) in subsets.iter().enumerate() {
            for _ in 0..epochs_per_subset {
                // Sender-side sessions sweep the qualified subsets too.
                let s1 = &subsets[(si + 1) % subsets.len()];
                let opts = TransferOptions {
                    s1: Some(indices(s1)),
                    s2: Some(indices(subset)),
                    capture_secrets: true,
                    ..TransferOptions::anonymous()
                };
                let record = sim.run_transfer(&opts).unwrap();
                let secrets = record.secrets.clone().unwrap();
                let entry = sim.ledger().entry(record.entry_id).unwrap();
                let spend = entry.transcript.spend.as_ref().unwrap();
                let reference = sim.receiver_state();
                let chaincodes_identical = sim
                    .receiver_parties()
                    .iter()
                    .all(|p| p.derivation().unwrap().chaincode() == reference.chaincode());
                sessions.push(SessionOutcome {
                    config: (n, t),
                    dest: record.dest,
                    one_time_secrets: secrets.one_time_secrets,
                    stealth_offset: secrets.stealth_offset.unwrap(),
                    shared_secret: secrets.shared_secret.unwrap(),
                    session_members: subset.clone(),
                    payment_ok: ts_verify(
                        &sim.sender_aggregate(),
                        &entry.transcript.payment_message,
                        &entry.transcript.payment_sig,
                    ),
                    spend_ok: ts_verify(&record.dest, &spend.message, &spend.sig),
                    states_consistent: sim.receiver_states_consistent(),
                    chaincodes_identical,
                    audit_snapshot: sim.audit_all_states(),
                });
            }
        }
    }
    Fleet { sessions }
}

fn fleet() -> &'static Fleet {
    static FLEET: OnceLock<Fleet> = OnceLock::new();
    FLEET.get_or_init(run_fleet)
}

fn one_time_reconstructs_everywhere(s: &SessionOutcome, t: u32) -> bool {
    for k in t..=(s.session_members.len() as u32) {
        for subset in s.session_members.iter().copied().combinations(k as usize) {
            let subset_idx = indices(&subset);
            let mut acc = Scalar::ZERO;
            for &i in &subset {
                let (_, bytes) = s
                    .one_time_secrets
                    .iter()
                    .find(|(j, _)| *j == i)
                    .expect("session member share");
                acc += lagrange_coeff(idx(i), &subset_idx).unwrap()
                        * Scalar::decode(bytes).unwrap();
            }
            if GroupPoint::base_mul(&acc) != s.dest {
                return false;
            }
        }
    }
    true
}

#[test]
fn criterion_2_transaction_correctness() {
    let _g = lock();
    let fleet = fleet();
    assert!(
        fleet.sessions.len() >= 500,
        "need >= 500 sessions, ran {}",
        fleet.sessions.len()
    );
    let mut failures = 0usize;
    for s in &fleet.sessions {
        let ok = one_time_reconstructs_everywhere(s, s.config.1)
            && s.payment_ok
            && s.spend_ok
            && s.states_consistent
            && s.chaincodes_identical;
        if !ok {
            failures += 1;
        }
    }
    assert_eq!(failures, 0);
    println!(
        "acceptance criterion 2 (transaction correctness): PASS — {} sessions across 7 \
         configurations (six required plus a sampled n=20 sweep), destination \
         reconstruction exact, both signatures verify, evolved states bit-identical, \
         0 failures",
        fleet.sessions.len()
    );
}

#[test]
fn criterion_4_erasure_audit() {
    let _g = lock();
    let fleet = fleet();
    let mut violations = 0usize;
    for s in &fleet.sessions {
        let audit = &s.audit_snapshot;
        let contains = |needle: &[u8]| audit.windows(needle.len()).any(|w| w == needle);
        if contains(&s.stealth_offset) || contains(&s.shared_secret) {
            violations += 1;
            continue;
        }
        if s
            .one_time_secrets
            .iter()
            .any(|(_, bytes)| contains(bytes))
        {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
    println!(
        "acceptance criterion 4 (erasure audit): PASS — {} redeemed sessions, zero \
         occurrences of one-time shares, stealth offsets, or shared secrets in any \
         serialized party state",
        fleet.sessions.len()
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: robustness scenarios.
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_robustness() {
    let _g = lock();
    let trials = 100u64;
    for scenario in FaultScenario::ALL {
        for seed in 0..trials {
            let report = inject_fault(scenario, seed).unwrap();
            assert!(
                report.expected_detection_fired(),
                "{scenario:?} seed {seed}: detections {:?}",
                report.detections
            );
            assert!(
                report.honest_states_consistent,
                "{scenario:?} seed {seed}: honest states diverged"
            );
        }
    }
    println!(
        "acceptance criterion 3 (robustness): PASS — 6 scenarios x {trials} seeded trials, \
         expected detection fired every time, no honest-state divergence"
    );
}

// ---------------------------------------------------------------------------
// Criterion 5: single-user degeneration.
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_single_user_degeneration() {
    let _g = lock();
    let runs = 100u64;
    let mut rng = ChaCha20Rng::seed_from_u64(0x5eed);
    for _ in 0..runs {
        let report = degenerate_single_user(rng.next_u64()).unwrap();
        assert!(report.all_match(), "mismatch: {report:?}");
    }
    println!(
        "acceptance criterion 5 (single-user degeneration): PASS — {runs}/{runs} seeded runs \
         byte-identical to the straight-line stealth computation (offsets, destination, \
         one-time key) with both signatures verifying"
    );
}

// ---------------------------------------------------------------------------
// Criterion 6: scaling shape. Absolute times are machine-dependent and never
// asserted; only the shape is.
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_scaling_shape() {
    let _g = lock();
    let config = BenchConfig {
        n_values: vec![3, 5, 7, 10, 15, 20],
        t: 2,
        repetitions: 10,
        seed: 21,
    };
    let report = run_bench(&config).unwrap();
    assert!(
        report.dsag_sender_r2 >= 0.95,
        "sender R^2 {}",
        report.dsag_sender_r2
    );
    assert!(
        report.dsag_receiver_r2 >= 0.95,
        "receiver R^2 {}",
        report.dsag_receiver_r2
    );
    assert!(report.sign_ratio <= 3.0, "sign ratio {}", report.sign_ratio);

    let depth = run_depth(&DepthArgs {
        depth: 1000,
        n: 7,
        t: 2,
        repetitions: 10,
        seed: 22,
    })
    .unwrap();
    assert!(
        depth.flatness_ratio <= 2.0,
        "flatness {}",
        depth.flatness_ratio
    );
    assert!(depth.states_identical);
    assert!(depth.aggregate_key_moved);
    println!(
        "acceptance criterion 6 (scaling shape): PASS — DSAG linearity R^2 sender {:.4} / \
         receiver {:.4} (>= 0.95), sign max/min {:.2} (<= 3), derivation flatness {:.2} \
         (<= 2) from depth 1 to 1000",
        report.dsag_sender_r2, report.dsag_receiver_r2, report.sign_ratio, depth.flatness_ratio
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: sharing vs. brute-force polynomial oracle.
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_sharing_oracle_equivalence() {
    let _g = lock();
    let mut rng = ChaCha20Rng::seed_from_u64(0x0417);
    let mut checked = 0usize;
    for n in 1..=6u32 {
        for t in 1..=n {
            // Oracle side: an explicit polynomial evaluated directly.
            let coeffs: Vec<Scalar> = (0..t).map(|_| Scalar::random(&mut rng)).collect();
            let eval = |x: u64| {
                let mut acc = Scalar::ZERO;
                for c in coeffs.iter().rev() {
                    acc = acc * Scalar::from_u64(x) + *c;
                }
                acc
            };
            let oracle_shares: Vec<Share> = (1..=n)
                .map(|i| Share {
                    index: idx(i),
                    value: eval(u64::from(i)),
                })
                .collect();
            // Implementation side: the library's own sharing of a secret.
            let secret = Scalar::random(&mut rng);
            let set = share_secret(&secret, n, t, &mut rng).unwrap();
            for k in t..=n {
                for subset in (0..n as usize).combinations(k as usize) {
                    let oracle_subset: Vec<Share> =
                        subset.iter().map(|&i| oracle_shares[i]).collect();
                    assert_eq!(reconstruct(&oracle_subset).unwrap(), coeffs[0]);
                    let impl_subset: Vec<Share> =
                        subset.iter().map(|&i| set.shares()[i]).collect();
                    assert_eq!(reconstruct(&impl_subset).unwrap(), secret);
                    checked += 2;
                }
            }
        }
    }
    println!(
        "acceptance criterion 7 (sharing oracle equivalence): PASS — {checked} exhaustive \
         subset reconstructions across all (n,t) with n <= 6, zero mismatches"
    );
}

// ---------------------------------------------------------------------------
// Criterion 8: ledger scan soundness among decoys.
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_detection_soundness() {
    let _g = lock();
    let seeds = 100u64;
    for seed in 0..seeds {
        let mut sim =
            Simulation::setup(SetupConfig::new(3, 2, 3, 2), 80_000 + seed).unwrap();
        let pending = sim.phase1(&TransferOptions::anonymous()).unwrap();

        // 50 decoys from independent lineages; a few maliciously reuse the
        // owned tag so the DH test, not the tag filter, must reject them.
        for d in 0..50u64 {
            let mut decoy =
                Simulation::setup(SetupConfig::new(1, 1, 1, 1), 90_000 + seed * 64 + d)
                    .unwrap();
            let p = decoy.phase1(&TransferOptions::anonymous()).unwrap();
            let mut transcript =
                decoy.ledger().entry(p.entry_id).unwrap().transcript.clone();
            if d % 17 == 0 {
                transcript.tag = pending.descriptor.tag;
            }
            let key = decoy.sender_aggregate();
            sim.import_confirmed(transcript, &key).unwrap();
        }

        let report = sim.scan_ledger().unwrap();
        assert_eq!(report.owned.len(), 1, "seed {seed}");
        assert_eq!(report.owned[0].entry_id, pending.entry_id, "seed {seed}");
    }
    println!(
        "acceptance criterion 8 (detection soundness): PASS — {seeds}/{seeds} seeds returned \
         exactly the one owned entry among 50 decoys"
    );
}
