//! Shamir secret sharing over `Z_q`, Lagrange reconstruction, and a
//! Feldman-style verifiable DKG used as the threshold-setup procedure.
//!
//! Party indices run 1..=n; evaluation point 0 holds the secret. Complaint
//! handling is single-round exclude-on-complaint: a dealer whose share fails
//! the Feldman check is dropped and the remaining contributions are summed.

use std::collections::BTreeSet;

use rand_core::{CryptoRng, RngCore};

use crate::error::{Error, Result};
use crate::group::{GroupPoint, Scalar};

/// A 1-based party identity. Index 0 is the secret's evaluation point and is
/// never a valid party.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, serde::Serialize)]
#[serde(transparent)]
pub struct PartyIndex(u32);

impl PartyIndex {
    pub fn new(i: u32) -> Result<PartyIndex> {
        if i == 0 {
            return Err(Error::ZeroPartyIndex);
        }
        Ok(PartyIndex(i))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub(crate) fn as_scalar(self) -> Scalar {
        Scalar::from_u64(u64::from(self.0))
    }
}

impl core::fmt::Display for PartyIndex {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// All party indices `1..=n`.
pub fn all_indices(n: u32) -> Vec<PartyIndex> {
    (1..=n).map(PartyIndex).collect()
}

/// One party's secret share: the polynomial evaluated at `index`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Share {
    pub index: PartyIndex,
    pub value: Scalar,
}

/// An indexed sharing of a scalar together with its public share commitments
/// and the aggregate public key. In a deployment no single machine holds all
/// of this; the simulator's orchestrator does.
#[derive(Clone, Debug)]
pub struct ShareSet {
    n: u32,
    t: u32,
    shares: Vec<Share>,
    public_shares: Vec<(PartyIndex, GroupPoint)>,
    aggregate: GroupPoint,
}

impl ShareSet {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn shares(&self) -> &[Share] {
        &self.shares
    }

    pub fn share(&self, index: PartyIndex) -> Result<&Share> {
        self.shares
            .iter()
            .find(|s| s.index == index)
            .ok_or(Error::UnknownParty(index))
    }

    pub fn public_shares(&self) -> &[(PartyIndex, GroupPoint)] {
        &self.public_shares
    }

    pub fn public_share(&self, index: PartyIndex) -> Result<GroupPoint> {
        self.public_shares
            .iter()
            .find(|(i, _)| *i == index)
            .map(|(_, p)| *p)
            .ok_or(Error::UnknownParty(index))
    }

    /// Aggregate public key `X = xG`.
    pub fn aggregate(&self) -> GroupPoint {
        self.aggregate
    }
}

fn check_distinct(indices: &[PartyIndex]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for &i in indices {
        if !seen.insert(i) {
            return Err(Error::DuplicateIndex(i));
        }
    }
    Ok(())
}

/// Lagrange coefficient at evaluation point 0 for `i` within `subset`.
pub fn lagrange_coeff(i: PartyIndex, subset: &[PartyIndex]) -> Result<Scalar> {
    check_distinct(subset)?;
    if !subset.contains(&i) {
        return Err(Error::IndexNotInSubset(i));
    }
    let mut num = Scalar::ONE;
    let mut den = Scalar::ONE;
    for &j in subset {
        if j == i {
            continue;
        }
        num = num * j.as_scalar();
        den = den * (j.as_scalar() - i.as_scalar());
    }
    Ok(num * den.invert()?)
}

/// Shares `secret` as a degree-(t-1) polynomial evaluated at 1..=n.
pub fn share_secret(
    secret: &Scalar,
    n: u32,
    t: u32,
    rng: &mut (impl RngCore + CryptoRng),
) -> Result<ShareSet> {
    if t == 0 || t > n {
        return Err(Error::InvalidThreshold { t, n });
    }
    let mut coeffs = Vec::with_capacity(t as usize);
    coeffs.push(*secret);
    for _ in 1..t {
        coeffs.push(Scalar::random(rng));
    }
    let shares: Vec<Share> = all_indices(n)
        .into_iter()
        .map(|index| Share {
            index,
            value: eval_poly(&coeffs, index),
        })
        .collect();
    let public_shares: Vec<(PartyIndex, GroupPoint)> = shares
        .iter()
        .map(|s| (s.index, GroupPoint::base_mul(&s.value)))
        .collect();
    Ok(ShareSet {
        n,
        t,
        shares,
        public_shares,
        aggregate: GroupPoint::base_mul(secret),
    })
}

fn eval_poly(coeffs: &[Scalar], at: PartyIndex) -> Scalar {
    let x = at.as_scalar();
    let mut acc = Scalar::ZERO;
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Reconstructs the shared secret from any qualified subset.
pub fn reconstruct(shares: &[Share]) -> Result<Scalar> {
    if shares.is_empty() {
        return Err(Error::EmptyShares);
    }
    let subset: Vec<PartyIndex> = shares.iter().map(|s| s.index).collect();
    check_distinct(&subset)?;
    let mut acc = Scalar::ZERO;
    for s in shares {
        acc += lagrange_coeff(s.index, &subset)? * s.value;
    }
    Ok(acc)
}

/// Reconstruction in the exponent: `sum lambda_i * X_i`.
pub fn reconstruct_points(points: &[(PartyIndex, GroupPoint)]) -> Result<GroupPoint> {
    if points.is_empty() {
        return Err(Error::EmptyShares);
    }
    let subset: Vec<PartyIndex> = points.iter().map(|(i, _)| *i).collect();
    check_distinct(&subset)?;
    let mut acc = GroupPoint::IDENTITY;
    for (i, p) in points {
        acc += lagrange_coeff(*i, &subset)? * *p;
    }
    Ok(acc)
}

/// Commitments to a dealer's polynomial coefficients, `C_k = a_k G`.
#[derive(Clone, Debug)]
pub struct FeldmanCommitments {
    coeff_commits: Vec<GroupPoint>,
}

impl FeldmanCommitments {
    pub fn len(&self) -> usize {
        self.coeff_commits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeff_commits.is_empty()
    }

    /// Commitment to the dealer's contribution secret (constant term).
    pub fn constant_term(&self) -> GroupPoint {
        self.coeff_commits[0]
    }

    /// The public value a correct share for `recipient` must commit to:
    /// `sum_k j^k C_k`.
    pub fn expected_share_commit(&self, recipient: PartyIndex) -> GroupPoint {
        let x = recipient.as_scalar();
        let mut acc = GroupPoint::IDENTITY;
        for &c in self.coeff_commits.iter().rev() {
            acc = x * acc + c;
        }
        acc
    }
}

/// One dealer's full contribution: a share for every party plus the
/// coefficient commitments broadcast alongside.
#[derive(Clone, Debug)]
pub struct Dealing {
    pub dealer: PartyIndex,
    pub dealt: Vec<Share>,
    pub commitments: FeldmanCommitments,
}

/// A broadcast complaint naming a dealer whose share failed verification.
#[derive(Copy, Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Complaint {
    pub accuser: PartyIndex,
    pub dealer: PartyIndex,
}

/// Runs one dealer's round: sample a degree-(t-1) polynomial, deal the
/// evaluations, and commit to every coefficient.
pub fn dkg_deal(
    dealer: PartyIndex,
    n: u32,
    t: u32,
    rng: &mut (impl RngCore + CryptoRng),
) -> Result<Dealing> {
    if t == 0 || t > n {
        return Err(Error::InvalidThreshold { t, n });
    }
    let coeffs: Vec<Scalar> = (0..t).map(|_| Scalar::random(rng)).collect();
    let dealt = all_indices(n)
        .into_iter()
        .map(|index| Share {
            index,
            value: eval_poly(&coeffs, index),
        })
        .collect();
    let coeff_commits = coeffs.iter().map(GroupPoint::base_mul).collect();
    Ok(Dealing {
        dealer,
        dealt,
        commitments: FeldmanCommitments { coeff_commits },
    })
}

/// Feldman check for a received share: `s_ij * G == sum_k j^k C_k`.
pub fn dkg_verify(
    recipient: PartyIndex,
    value: &Scalar,
    commitments: &FeldmanCommitments,
) -> bool {
    GroupPoint::base_mul(value) == commitments.expected_share_commit(recipient)
}

/// Sums the accepted dealings into the joint sharing. Dealers named in a
/// complaint are excluded entirely.
pub fn dkg_finalize(
    n: u32,
    t: u32,
    dealings: &[Dealing],
    complaints: &[Complaint],
) -> Result<ShareSet> {
    let excluded: BTreeSet<PartyIndex> = complaints.iter().map(|c| c.dealer).collect();
    let accepted: Vec<&Dealing> = dealings
        .iter()
        .filter(|d| !excluded.contains(&d.dealer))
        .collect();
    if accepted.is_empty() {
        return Err(Error::NoQualifiedDealers);
    }
    let mut shares = Vec::with_capacity(n as usize);
    let mut public_shares = Vec::with_capacity(n as usize);
    for index in all_indices(n) {
        let mut value = Scalar::ZERO;
        let mut public = GroupPoint::IDENTITY;
        for d in &accepted {
            value += d.dealt.iter().find(|s| s.index == index).unwrap().value;
            public += d.commitments.expected_share_commit(index);
        }
        shares.push(Share { index, value });
        public_shares.push((index, public));
    }
    let aggregate = accepted
        .iter()
        .fold(GroupPoint::IDENTITY, |acc, d| acc + d.commitments.constant_term());
    Ok(ShareSet {
        n,
        t,
        shares,
        public_shares,
        aggregate,
    })
}

/// Honest DKG driver: every party deals, every share is verified, and the
/// contributions are summed. Returns the complaints alongside the result so
/// callers can observe exclusions.
pub fn run_dkg_with_complaints(
    n: u32,
    t: u32,
    rng: &mut (impl RngCore + CryptoRng),
    tamper: impl Fn(&mut Dealing),
) -> Result<(ShareSet, Vec<Complaint>)> {
    let mut dealings = Vec::with_capacity(n as usize);
    for dealer in all_indices(n) {
        let mut d = dkg_deal(dealer, n, t, rng)?;
        tamper(&mut d);
        dealings.push(d);
    }
    let mut complaints = Vec::new();
    for d in &dealings {
        for s in &d.dealt {
            if !dkg_verify(s.index, &s.value, &d.commitments) {
                complaints.push(Complaint {
                    accuser: s.index,
                    dealer: d.dealer,
                });
            }
        }
    }
    let set = dkg_finalize(n, t, &dealings, &complaints)?;
    Ok((set, complaints))
}

/// All-honest DKG.
pub fn run_dkg(n: u32, t: u32, rng: &mut (impl RngCore + CryptoRng)) -> Result<ShareSet> {
    run_dkg_with_complaints(n, t, rng, |_| {}).map(|(set, _)| set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;
    use rand_chacha::ChaCha20Rng;
    use rand_core::SeedableRng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    fn idx(i: u32) -> PartyIndex {
        PartyIndex::new(i).unwrap()
    }

    #[test]
    fn lagrange_singleton_is_one() {
        assert_eq!(lagrange_coeff(idx(1), &[idx(1)]).unwrap(), Scalar::ONE);
    }

    #[test]
    fn lagrange_pair_analytic() {
        let s = [idx(1), idx(2)];
        assert_eq!(lagrange_coeff(idx(1), &s).unwrap(), Scalar::from_u64(2));
        // 1/(1-2) = -1 = q-1
        assert_eq!(lagrange_coeff(idx(2), &s).unwrap(), -Scalar::ONE);
    }

    #[test]
    fn lagrange_triple_analytic_and_oracle() {
        let s = [idx(1), idx(2), idx(3)];
        assert_eq!(lagrange_coeff(idx(1), &s).unwrap(), Scalar::from_u64(3));

        // Oracle: reconstruct a random degree-2 polynomial's constant term
        // by brute evaluation at 1,2,3.
        let mut r = rng(7);
        let coeffs = [Scalar::random(&mut r), Scalar::random(&mut r), Scalar::random(&mut r)];
        let mut acc = Scalar::ZERO;
        for &i in &s {
            acc += lagrange_coeff(i, &s).unwrap() * eval_poly(&coeffs, i);
        }
        assert_eq!(acc, coeffs[0]);
    }

    #[test]
    fn lagrange_rejects_outsider_and_duplicates() {
        assert_eq!(
            lagrange_coeff(idx(3), &[idx(1), idx(2)]),
            Err(Error::IndexNotInSubset(idx(3)))
        );
        assert_eq!(
            lagrange_coeff(idx(1), &[idx(1), idx(1)]),
            Err(Error::DuplicateIndex(idx(1)))
        );
    }

    #[test]
    fn lagrange_coefficients_sum_to_one() {
        for n in 1..=7u32 {
            for k in 1..=n {
                for subset in all_indices(n).into_iter().combinations(k as usize) {
                    let mut sum = Scalar::ZERO;
                    for &i in &subset {
                        sum += lagrange_coeff(i, &subset).unwrap();
                    }
                    assert_eq!(sum, Scalar::ONE, "subset {subset:?}");
                }
            }
        }
    }

    #[test]
    fn t1_shares_equal_secret() {
        let mut r = rng(1);
        let secret = Scalar::random(&mut r);
        let set = share_secret(&secret, 4, 1, &mut r).unwrap();
        for s in set.shares() {
            assert_eq!(s.value, secret);
        }
    }

    #[test]
    fn two_of_two_reconstructs() {
        let mut r = rng(2);
        let secret = Scalar::random(&mut r);
        let set = share_secret(&secret, 2, 2, &mut r).unwrap();
        assert_eq!(reconstruct(set.shares()).unwrap(), secret);
    }

    #[test]
    fn invalid_thresholds_rejected() {
        let mut r = rng(3);
        let s = Scalar::random(&mut r);
        assert!(share_secret(&s, 3, 4, &mut r).is_err());
        assert!(share_secret(&s, 3, 0, &mut r).is_err());
    }

    #[test]
    fn every_qualified_subset_reconstructs() {
        let mut r = rng(4);
        for &(n, t) in &[(3u32, 2u32), (5, 3), (7, 2)] {
            let secret = Scalar::random(&mut r);
            let set = share_secret(&secret, n, t, &mut r).unwrap();
            for k in t..=n {
                for subset in set.shares().iter().copied().combinations(k as usize) {
                    assert_eq!(reconstruct(&subset).unwrap(), secret);
                }
            }
        }
    }

    #[test]
    fn sub_threshold_subset_misses_secret() {
        // Explicit polynomial with a nonzero linear coefficient: a single
        // share of a t=2 sharing interpolates to the share value itself,
        // which differs from the secret.
        let secret = Scalar::from_u64(41);
        let coeffs = [secret, Scalar::from_u64(9)];
        let share = Share {
            index: idx(2),
            value: eval_poly(&coeffs, idx(2)),
        };
        let got = reconstruct(&[share]).unwrap();
        assert_ne!(got, secret);
    }

    #[test]
    fn reconstruction_is_order_invariant() {
        let mut r = rng(5);
        let secret = Scalar::random(&mut r);
        let set = share_secret(&secret, 5, 3, &mut r).unwrap();
        let mut subset = vec![set.shares()[4], set.shares()[0], set.shares()[2]];
        let forward = reconstruct(&subset).unwrap();
        subset.reverse();
        assert_eq!(reconstruct(&subset).unwrap(), forward);
        assert_eq!(forward, secret);
    }

    #[test]
    fn exponent_reconstruction_matches_aggregate() {
        let mut r = rng(6);
        let secret = Scalar::random(&mut r);
        let set = share_secret(&secret, 5, 2, &mut r).unwrap();
        for k in 2..=5u32 {
            for subset in set.public_shares().iter().copied().combinations(k as usize) {
                assert_eq!(reconstruct_points(&subset).unwrap(), set.aggregate());
            }
        }
    }

    #[test]
    fn duplicate_share_indices_rejected() {
        let mut r = rng(7);
        let secret = Scalar::random(&mut r);
        let set = share_secret(&secret, 3, 2, &mut r).unwrap();
        let dup = [set.shares()[0], set.shares()[0]];
        assert_eq!(reconstruct(&dup), Err(Error::DuplicateIndex(idx(1))));
    }

    #[test]
    fn dkg_all_honest_matches_dealer_secret_sum() {
        let mut r = rng(8);
        let n = 3;
        let t = 2;
        let mut dealings = Vec::new();
        let mut secret_sum = Scalar::ZERO;
        for dealer in all_indices(n) {
            let d = dkg_deal(dealer, n, t, &mut r).unwrap();
            // The dealt polynomial's constant term is reconstructible from
            // any pair of its evaluations; sum them as the test-only oracle.
            secret_sum += reconstruct(&d.dealt[..2]).unwrap();
            dealings.push(d);
        }
        let set = dkg_finalize(n, t, &dealings, &[]).unwrap();
        for pair in set.shares().iter().copied().combinations(2) {
            assert_eq!(reconstruct(&pair).unwrap(), secret_sum);
        }
        assert_eq!(set.aggregate(), GroupPoint::base_mul(&secret_sum));
    }

    #[test]
    fn dkg_bad_share_complained_and_dealer_excluded() {
        let mut r = rng(9);
        let n = 3;
        let t = 2;
        let (set, complaints) = run_dkg_with_complaints(n, t, &mut r, |d| {
            if d.dealer == idx(2) {
                d.dealt[0].value += Scalar::ONE;
            }
        })
        .unwrap();
        assert_eq!(
            complaints,
            vec![Complaint {
                accuser: idx(1),
                dealer: idx(2)
            }]
        );
        // Remaining contributions still form a consistent sharing.
        for pair in set.shares().iter().copied().combinations(2) {
            assert_eq!(
                GroupPoint::base_mul(&reconstruct(&pair).unwrap()),
                set.aggregate()
            );
        }
    }

    #[test]
    fn dkg_single_party_degenerates_to_keypair() {
        let mut r = rng(10);
        let set = run_dkg(1, 1, &mut r).unwrap();
        assert_eq!(set.shares().len(), 1);
        let x = set.shares()[0].value;
        assert_eq!(set.aggregate(), GroupPoint::base_mul(&x));
        assert_eq!(reconstruct(set.shares()).unwrap(), x);
    }

    #[test]
    fn feldman_detects_any_single_bit_corruption() {
        let mut r = rng(11);
        let d = dkg_deal(idx(1), 3, 2, &mut r).unwrap();
        let victim = d.dealt[1];
        assert!(dkg_verify(victim.index, &victim.value, &d.commitments));
        let bytes = victim.value.encode();
        for bit in 0..256 {
            let mut corrupted = bytes;
            corrupted[bit / 8] ^= 1 << (bit % 8);
            // Skip flips that push the value out of canonical range; those
            // are rejected at decode time instead.
            if let Ok(bad) = Scalar::decode(&corrupted) {
                assert!(
                    !dkg_verify(victim.index, &bad, &d.commitments),
                    "bit {bit} not detected"
                );
            }
        }
    }

    #[test]
    fn public_shares_match_secret_shares() {
        let mut r = rng(12);
        let set = run_dkg(5, 3, &mut r).unwrap();
        for s in set.shares() {
            assert_eq!(
                set.public_share(s.index).unwrap(),
                GroupPoint::base_mul(&s.value)
            );
        }
    }
}
