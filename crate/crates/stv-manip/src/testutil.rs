//! Shared helpers for unit tests: random and property-test profiles.

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::election::{Ballot, CandidateId, Profile, WeightedBallot};

/// Builds weighted ballots from `(weight, ranking)` pairs of raw ids.
pub fn weighted(ballots: &[(u64, &[u32])]) -> Vec<WeightedBallot> {
    ballots
        .iter()
        .map(|&(weight, ids)| WeightedBallot {
            ballot: Ballot::from_ids(ids),
            weight,
        })
        .collect()
}

/// Uniform random profile with unit weights.
pub fn random_profile<R: Rng>(m: u32, n: u32, rng: &mut R) -> Profile {
    let mut ballots = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let mut ranking: Vec<CandidateId> = (1..=m).map(CandidateId).collect();
        ranking.shuffle(rng);
        ballots.push(WeightedBallot {
            ballot: Ballot::new(ranking),
            weight: 1,
        });
    }
    Profile::new(m, ballots).unwrap()
}

/// Permutation of `1..=m` derived by sorting random keys.
fn arb_ranking(m: u32) -> impl Strategy<Value = Ballot> {
    prop::collection::vec(any::<u32>(), m as usize).prop_map(move |keys| {
        let mut order: Vec<usize> = (0..m as usize).collect();
        order.sort_by_key(|&i| (keys[i], i));
        Ballot::new(order.into_iter().map(CandidateId::from_idx).collect())
    })
}

/// Profile over 1..=max_m candidates with up to `max_n` weighted ballots.
pub fn arb_profile(max_m: u32, max_n: usize) -> impl Strategy<Value = Profile> {
    (1..=max_m).prop_flat_map(move |m| {
        prop::collection::vec((arb_ranking(m), 1..=3u64), 0..=max_n).prop_map(move |raw| {
            let ballots = raw
                .into_iter()
                .map(|(ballot, weight)| WeightedBallot { ballot, weight })
                .collect();
            Profile::new(m, ballots).unwrap()
        })
    })
}
