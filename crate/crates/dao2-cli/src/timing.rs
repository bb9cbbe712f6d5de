//! Measurement helpers: monotonic timing around pure computation, medians,
//! and a least-squares linearity diagnostic.
//!
//! Sweeps are interleaved round-robin across DAO sizes so background stalls
//! land on every size roughly equally instead of corrupting one point of
//! the series.

use std::time::Instant;

use dao2_core::dkd::{DerivationState, DerivationTag};
use dao2_core::dsag::{
    aggregate_shared_secret, make_destination, receiver_partial_dh, recover_one_time_share,
    sender_partial_dh, stealth_offset, verify_one_time_shares, StealthLabel,
};
use dao2_core::group::{GroupPoint, Scalar};
use dao2_core::sharing::{share_secret, PartyIndex, ShareSet};
use dao2_core::tsig::{ts_sign, SigningShare};
use dao2_core::Result;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

/// Median of a sample set, in milliseconds.
pub fn median_ms(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).expect("no NaN timings"));
    let mid = samples.len() / 2;
    if samples.len().is_multiple_of(2) {
        (samples[mid - 1] + samples[mid]) / 2.0
    } else {
        samples[mid]
    }
}

/// Coefficient of determination for a least-squares line through the points.
pub fn linear_r2(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    if syy == 0.0 {
        return 1.0;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let pred = slope * x + intercept;
            (y - pred) * (y - pred)
        })
        .sum();
    1.0 - ss_res / syy
}

fn time_ms(f: impl FnOnce()) -> f64 {
    let start = Instant::now();
    f();
    start.elapsed().as_secs_f64() * 1e3
}

/// Pre-built key material for one DAO size.
struct Fixture {
    sender_set: ShareSet,
    receiver_set: ShareSet,
    sender_key: GroupPoint,
    child_state: DerivationState,
    signers: Vec<SigningShare>,
    rng: ChaCha20Rng,
}

impl Fixture {
    fn new(n: u32, t: u32, seed: u64) -> Result<Fixture> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let a = Scalar::random(&mut rng);
        let b = Scalar::random(&mut rng);
        let sender_set = share_secret(&a, n, t, &mut rng)?;
        let receiver_set = share_secret(&b, n, t, &mut rng)?;
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
        Ok(Fixture {
            sender_key: sender_set.aggregate(),
            sender_set,
            receiver_set,
            child_state,
            signers,
            rng,
        })
    }

    /// One derivation step on a state tracking `n` public shares.
    fn dkd_op(&mut self) -> f64 {
        let tag = DerivationTag::random(&mut self.rng);
        let state = &self.child_state;
        time_ms(|| {
            let _ = std::hint::black_box(state.derive_child(&tag).unwrap());
        })
    }

    /// Full sender-side stealth computation: per-member committed DH terms,
    /// aggregation, offset hash, destination.
    fn dsag_sender_op(&mut self) -> f64 {
        let child_pub = self.child_state.aggregate_pub();
        let label = StealthLabel::random(&mut self.rng);
        let tag = DerivationTag::random(&mut self.rng);
        let shares = self.sender_set.shares().to_vec();
        let rng = &mut self.rng;
        time_ms(|| {
            let partials: Vec<_> = shares
                .iter()
                .map(|s| sender_partial_dh(s, &child_pub, true, rng).unwrap())
                .collect();
            let shared = aggregate_shared_secret(&partials).unwrap();
            let _ = std::hint::black_box(
                make_destination(&shared, &child_pub, label, tag).unwrap(),
            );
        })
    }

    /// Full receiver-side computation: per-member DH terms, aggregation,
    /// offset, one-time shares, aggregate consistency check.
    fn dsag_receiver_op(&mut self) -> f64 {
        let sender_key = self.sender_key;
        let child_shares = self.receiver_set.shares().to_vec();
        let dest_base = self.child_state.aggregate_pub();
        let label = StealthLabel::random(&mut self.rng);
        time_ms(|| {
            let partials: Vec<_> = child_shares
                .iter()
                .map(|s| receiver_partial_dh(s, &sender_key).unwrap())
                .collect();
            let shared = aggregate_shared_secret(&partials).unwrap();
            let rho = stealth_offset(&shared, &label).unwrap();
            let ones: Vec<_> = child_shares
                .iter()
                .map(|s| recover_one_time_share(s, &rho))
                .collect();
            let publics: Vec<(PartyIndex, GroupPoint)> =
                ones.iter().map(|o| (o.index, o.public)).collect();
            let dest = dest_base + GroupPoint::base_mul(&rho);
            {
                verify_one_time_shares(&publics, &dest).unwrap();
                std::hint::black_box(())
            };
        })
    }

    /// One `t`-signer threshold signature.
    fn sign_op(&mut self, round: u32) -> f64 {
        let msg = u64::from(round).to_be_bytes();
        let signers = self.signers.clone();
        let key = self.sender_key;
        let t = signers.len() as u32;
        let rng = &mut self.rng;
        time_ms(|| {
            let _ = std::hint::black_box(ts_sign(&msg, &signers, t, &key, rng).unwrap());
        })
    }
}

/// Median timings per DAO size, parallel to the input sizes.
pub struct SweepTimings {
    pub dkd_ms: Vec<f64>,
    pub dsag_sender_ms: Vec<f64>,
    pub dsag_receiver_ms: Vec<f64>,
    pub sign_ms: Vec<f64>,
}

/// Times the four per-module computations across `n_values`, interleaved:
/// round `r` measures every size once before round `r+1` begins.
pub fn measure_sweep(
    n_values: &[u32],
    t: u32,
    repetitions: u32,
    seed: u64,
) -> Result<SweepTimings> {
    let mut fixtures: Vec<Fixture> = n_values
        .iter()
        .enumerate()
        .map(|(i, &n)| Fixture::new(n, t, seed.wrapping_add(i as u64)))
        .collect::<Result<_>>()?;
    // Warm every code path once, untimed.
    for fx in fixtures.iter_mut() {
        fx.dkd_op();
        fx.dsag_sender_op();
        fx.dsag_receiver_op();
        fx.sign_op(u32::MAX);
    }
    let k = n_values.len();
    let mut dkd = vec![Vec::with_capacity(repetitions as usize); k];
    let mut sender = vec![Vec::with_capacity(repetitions as usize); k];
    let mut receiver = vec![Vec::with_capacity(repetitions as usize); k];
    let mut sign = vec![Vec::with_capacity(repetitions as usize); k];
    for round in 0..repetitions {
        for (i, fx) in fixtures.iter_mut().enumerate() {
            dkd[i].push(fx.dkd_op());
            sender[i].push(fx.dsag_sender_op());
            receiver[i].push(fx.dsag_receiver_op());
            sign[i].push(fx.sign_op(round));
        }
    }
    Ok(SweepTimings {
        dkd_ms: dkd.iter_mut().map(|s| median_ms(s)).collect(),
        dsag_sender_ms: sender.iter_mut().map(|s| median_ms(s)).collect(),
        dsag_receiver_ms: receiver.iter_mut().map(|s| median_ms(s)).collect(),
        sign_ms: sign.iter_mut().map(|s| median_ms(s)).collect(),
    })
}
