//! Brute-force reference oracle and the solver cross-checking harness.
//!
//! The oracle decides manipulability by trying every one of the `m!`
//! possible manipulator ballots and running the tally, which is obviously
//! correct and obviously exponential. It exists to validate the search
//! solvers on small elections, never to stand in for them.

use std::collections::BTreeSet;

use itertools::Itertools;
use rand::Rng;
use thiserror::Error;

use crate::election::{stv_winners, Ballot, CandidateId, Profile, TieBreakPolicy};
use crate::generators::{RngSeed, VoteModel};
use crate::solver::{csl_possible_winners, manipulate_improved, ManipulationQuery};

/// No budget may allow more candidates than this; 10! tallies is already
/// several minutes of work.
pub const ORACLE_HARD_CAP_M: u32 = 10;

/// Caps on how much exhaustive work the oracle will accept.
#[derive(Clone, Copy, Debug)]
pub struct OracleBudget {
    pub max_m: u32,
    pub max_enumerations: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_m: 8,
            max_enumerations: 10_000_000,
        }
    }
}

impl OracleBudget {
    /// `max_m` is clamped to the hard cap.
    pub fn new(max_m: u32, max_enumerations: u64) -> Self {
        OracleBudget {
            max_m: max_m.min(ORACLE_HARD_CAP_M),
            max_enumerations,
        }
    }

    fn admit(&self, m: u32) -> Result<u64, OracleError> {
        let max_m = self.max_m.min(ORACLE_HARD_CAP_M);
        if m > max_m {
            return Err(OracleError::TooManyCandidates { m, max_m });
        }
        let needed = factorial(m);
        if needed > self.max_enumerations {
            return Err(OracleError::TooManyEnumerations {
                needed,
                limit: self.max_enumerations,
            });
        }
        Ok(needed)
    }
}

/// The oracle refuses out-of-budget instances outright; it never falls back
/// to sampling a subset of ballots.
#[derive(Error, Debug, PartialEq, Eq)]
pub enum OracleError {
    #[error("{m} candidates exceed the oracle budget of {max_m}")]
    TooManyCandidates { m: u32, max_m: u32 },
    #[error("enumerating {needed} ballots exceeds the oracle budget of {limit}")]
    TooManyEnumerations { needed: u64, limit: u64 },
}

fn factorial(m: u32) -> u64 {
    (1..=m as u64).product::<u64>().max(1)
}

/// Oracle verdict. `enumerations` counts ballots actually tallied; a
/// positive verdict stops at the first witness in lexicographic ballot
/// order.
#[derive(Clone, Debug)]
pub struct OracleOutcome {
    pub manipulable: bool,
    pub witness: Option<Ballot>,
    pub enumerations: u64,
}

/// Decides a query by exhaustive enumeration of manipulator ballots.
pub fn brute_force_manipulable(
    query: &ManipulationQuery,
    budget: &OracleBudget,
) -> Result<OracleOutcome, OracleError> {
    let m = query.profile.m();
    budget.admit(m)?;
    let mut enumerations = 0u64;
    for perm in (1..=m).permutations(m as usize) {
        enumerations += 1;
        let ballot = Ballot::from_ids(&perm);
        let p = query
            .profile
            .with_ballot(ballot.clone(), query.weight)
            .expect("permutation ballots are valid");
        let winners = stv_winners(&p, query.policy).expect("m >= 1");
        if winners.contains(&query.chosen) {
            return Ok(OracleOutcome {
                manipulable: true,
                witness: Some(ballot),
                enumerations,
            });
        }
    }
    Ok(OracleOutcome {
        manipulable: false,
        witness: None,
        enumerations,
    })
}

/// Every candidate some manipulator ballot of weight `weight` can make win,
/// by exhaustive enumeration.
pub fn possible_winners_brute(
    profile: &Profile,
    weight: u64,
    policy: TieBreakPolicy,
    budget: &OracleBudget,
) -> Result<(BTreeSet<CandidateId>, u64), OracleError> {
    let m = profile.m();
    budget.admit(m)?;
    let mut winners = BTreeSet::new();
    let mut enumerations = 0u64;
    for perm in (1..=m).permutations(m as usize) {
        enumerations += 1;
        let ballot = Ballot::from_ids(&perm);
        let p = profile
            .with_ballot(ballot, weight)
            .expect("permutation ballots are valid");
        winners.extend(stv_winners(&p, policy).expect("m >= 1"));
    }
    Ok((winners, enumerations))
}

/// Grid of configurations for cross-checking the solvers against the
/// oracle. For each `(m, n, w, model, policy)` cell, `trials_per_config`
/// seeded instances are drawn and all three procedures must agree.
#[derive(Clone, Debug)]
pub struct AgreementConfig {
    pub m_max: u32,
    pub n_max: u32,
    pub weights: Vec<u64>,
    pub models: Vec<VoteModel>,
    pub policies: Vec<TieBreakPolicy>,
    pub trials_per_config: u32,
    pub master_seed: u64,
    pub budget: OracleBudget,
}

impl Default for AgreementConfig {
    fn default() -> Self {
        AgreementConfig {
            m_max: 6,
            n_max: 8,
            weights: vec![1, 2],
            models: vec![VoteModel::Ic, VoteModel::Urn { b: 1.0 }],
            policies: vec![TieBreakPolicy::Lexicographic, TieBreakPolicy::Optimistic],
            trials_per_config: 200,
            master_seed: 0,
            budget: OracleBudget::default(),
        }
    }
}

/// A replayable counterexample: everything needed to rerun the instance.
#[derive(Clone, Debug)]
pub struct Mismatch {
    pub profile: Profile,
    pub chosen: CandidateId,
    pub weight: u64,
    pub policy: TieBreakPolicy,
    pub model: String,
    pub seed: RngSeed,
    pub improved: bool,
    pub oracle: bool,
    pub csl_member: bool,
}

#[derive(Clone, Debug, Default)]
pub struct AgreementReport {
    pub configs: u64,
    pub instances: u64,
    /// At most [`MISMATCH_REPORT_CAP`] entries; `disagreements` keeps the
    /// true count.
    pub mismatches: Vec<Mismatch>,
    pub disagreements: u64,
}

pub const MISMATCH_REPORT_CAP: usize = 32;

impl AgreementReport {
    pub fn all_agree(&self) -> bool {
        self.disagreements == 0
    }
}

/// Runs the full agreement grid with the production improved solver.
pub fn run_agreement_check(cfg: &AgreementConfig) -> Result<AgreementReport, OracleError> {
    run_agreement_check_with(cfg, |q| manipulate_improved(q).manipulable)
}

/// Same grid with an injectable decision procedure standing in for the
/// improved solver, so the harness itself can be shown to catch a wrong
/// solver.
pub fn run_agreement_check_with(
    cfg: &AgreementConfig,
    improved: impl Fn(&ManipulationQuery) -> bool,
) -> Result<AgreementReport, OracleError> {
    let mut report = AgreementReport::default();
    let mut config_idx: u64 = 0;
    for m in 2..=cfg.m_max {
        for n in 1..=cfg.n_max {
            for &w in &cfg.weights {
                for model in &cfg.models {
                    for &policy in &cfg.policies {
                        for trial in 0..cfg.trials_per_config {
                            let s = (config_idx << 32) | trial as u64;
                            let profile_seed = RngSeed::new(cfg.master_seed, 2 * s);
                            let profile = model
                                .generate(m, n, profile_seed)
                                .expect("grid models generate for all m >= 2, n >= 1");
                            let chosen = CandidateId(
                                RngSeed::new(cfg.master_seed, 2 * s + 1)
                                    .rng()
                                    .random_range(1..=m),
                            );
                            let query = ManipulationQuery::new(profile.clone(), chosen, w, policy)
                                .expect("grid queries are valid");
                            let got = improved(&query);
                            let oracle = brute_force_manipulable(&query, &cfg.budget)?;
                            let (csl, _) = csl_possible_winners(&profile, w, policy);
                            let csl_member = csl.contains(&chosen);
                            report.instances += 1;
                            if got != oracle.manipulable || csl_member != oracle.manipulable {
                                report.disagreements += 1;
                                if report.mismatches.len() < MISMATCH_REPORT_CAP {
                                    report.mismatches.push(Mismatch {
                                        profile,
                                        chosen,
                                        weight: w,
                                        policy,
                                        model: model.name().to_string(),
                                        seed: profile_seed,
                                        improved: got,
                                        oracle: oracle.manipulable,
                                        csl_member,
                                    });
                                }
                            }
                        }
                        config_idx += 1;
                        report.configs += 1;
                    }
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::election::Profile;
    use crate::testutil::{random_profile, weighted};
    use rand::SeedableRng;

    fn query(p: &Profile, chosen: u32, w: u64, policy: TieBreakPolicy) -> ManipulationQuery {
        ManipulationQuery::new(p.clone(), CandidateId(chosen), w, policy).unwrap()
    }

    #[test]
    fn oracle_hand_checked_negative() {
        // Candidate 1 never survives the first two rounds whatever the
        // manipulator submits: all six ballots fail.
        let p = Profile::new(3, weighted(&[(2, &[2, 1, 3]), (2, &[3, 1, 2])])).unwrap();
        let out = brute_force_manipulable(
            &query(&p, 1, 1, TieBreakPolicy::Lexicographic),
            &OracleBudget::default(),
        )
        .unwrap();
        assert!(!out.manipulable);
        assert_eq!(out.enumerations, 6);
        assert!(out.witness.is_none());
    }

    #[test]
    fn oracle_hand_checked_positive() {
        // Weight 3 on top of candidate 1 beats both blocks of 2.
        let p = Profile::new(3, weighted(&[(2, &[2, 1, 3]), (2, &[3, 1, 2])])).unwrap();
        let out = brute_force_manipulable(
            &query(&p, 1, 3, TieBreakPolicy::Lexicographic),
            &OracleBudget::default(),
        )
        .unwrap();
        assert!(out.manipulable);
        // First witness in lexicographic ballot order: 1>2>3 already works.
        assert_eq!(out.witness.unwrap(), Ballot::from_ids(&[1, 2, 3]));
    }

    #[test]
    fn oracle_witness_replays() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(0xabcd);
        let budget = OracleBudget::default();
        for _ in 0..200 {
            let m = rng.random_range(2..=4);
            let n = rng.random_range(1..=6);
            let p = random_profile(m, n, &mut rng);
            let chosen = rng.random_range(1..=m);
            let q = query(&p, chosen, 1, TieBreakPolicy::Lexicographic);
            let out = brute_force_manipulable(&q, &budget).unwrap();
            if let Some(w) = out.witness {
                let p2 = p.with_ballot(w, 1).unwrap();
                assert_eq!(
                    crate::election::stv_winner_lex(&p2).unwrap(),
                    CandidateId(chosen)
                );
            }
        }
    }

    #[test]
    fn budget_refuses_large_elections() {
        let p = random_profile(9, 3, &mut rand_chacha::ChaCha20Rng::seed_from_u64(1));
        let q = query(&p, 1, 1, TieBreakPolicy::Lexicographic);
        let err = brute_force_manipulable(&q, &OracleBudget::default()).unwrap_err();
        assert_eq!(err, OracleError::TooManyCandidates { m: 9, max_m: 8 });

        let tight = OracleBudget::new(8, 100);
        let p = random_profile(5, 3, &mut rand_chacha::ChaCha20Rng::seed_from_u64(2));
        let q = query(&p, 1, 1, TieBreakPolicy::Lexicographic);
        let err = brute_force_manipulable(&q, &tight).unwrap_err();
        assert_eq!(
            err,
            OracleError::TooManyEnumerations {
                needed: 120,
                limit: 100
            }
        );
    }

    #[test]
    fn budget_max_m_is_hard_capped() {
        let b = OracleBudget::new(15, u64::MAX);
        assert_eq!(b.max_m, ORACLE_HARD_CAP_M);
    }

    #[test]
    fn possible_winners_brute_counts_all_ballots() {
        let p = Profile::new(3, weighted(&[(1, &[1, 2, 3]), (1, &[2, 3, 1])])).unwrap();
        let (winners, enumerations) = possible_winners_brute(
            &p,
            2,
            TieBreakPolicy::Lexicographic,
            &OracleBudget::default(),
        )
        .unwrap();
        assert_eq!(enumerations, 6);
        assert!(!winners.is_empty());
        // Brute winner set matches the CSL search on the same instance.
        let (csl, _) = csl_possible_winners(&p, 2, TieBreakPolicy::Lexicographic);
        assert_eq!(winners, csl);
    }

    #[test]
    fn small_agreement_grid_passes() {
        let cfg = AgreementConfig {
            m_max: 4,
            n_max: 4,
            trials_per_config: 20,
            ..AgreementConfig::default()
        };
        let report = run_agreement_check(&cfg).unwrap();
        assert!(report.all_agree(), "{:?}", report.mismatches.first());
        assert_eq!(report.configs, 3 * 4 * 2 * 2 * 2);
        assert_eq!(report.instances, report.configs * 20);
    }

    #[test]
    fn agreement_harness_catches_a_broken_solver() {
        let cfg = AgreementConfig {
            m_max: 3,
            n_max: 3,
            trials_per_config: 10,
            ..AgreementConfig::default()
        };
        // A solver that calls everything manipulable must be flagged.
        let report = run_agreement_check_with(&cfg, |_| true).unwrap();
        assert!(!report.all_agree());
        assert!(!report.mismatches.is_empty());
        let mm = &report.mismatches[0];
        // The stored counterexample replays: the oracle verdict matches.
        let q =
            ManipulationQuery::new(mm.profile.clone(), mm.chosen, mm.weight, mm.policy).unwrap();
        let again = brute_force_manipulable(&q, &cfg.budget).unwrap();
        assert_eq!(again.manipulable, mm.oracle);
    }
}
