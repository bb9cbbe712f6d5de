//! Shared fixtures for the criterion benchmarks.

use dao2_core::dkd::DerivationState;
use dao2_core::group::Scalar;
use dao2_core::sharing::{share_secret, ShareSet};
use dao2_core::tsig::SigningShare;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

pub struct BenchKeys {
    pub sender_set: ShareSet,
    pub receiver_set: ShareSet,
    pub child_state: DerivationState,
    pub signers: Vec<SigningShare>,
    pub rng: ChaCha20Rng,
}

/// Deterministic key material for a symmetric pair of DAOs of size `n`.
pub fn keys(n: u32, t: u32, seed: u64) -> BenchKeys {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let a = Scalar::random(&mut rng);
    let b = Scalar::random(&mut rng);
    let sender_set = share_secret(&a, n, t, &mut rng).expect("valid config");
    let receiver_set = share_secret(&b, n, t, &mut rng).expect("valid config");
    let mut cc = [0u8; 32];
    rng.fill_bytes(&mut cc);
    let child_state = DerivationState::root(
        receiver_set.aggregate(),
        cc,
        Some(receiver_set.shares()[0]),
        receiver_set.public_shares().to_vec(),
    );
    let signers = sender_set
        .shares()
        .iter()
        .take(t as usize)
        .map(SigningShare::from_share)
        .collect();
    BenchKeys {
        sender_set,
        receiver_set,
        child_state,
        signers,
        rng,
    }
}
