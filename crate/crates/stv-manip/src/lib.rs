//! Deciding and measuring manipulation of single transferable vote elections.

pub mod cli;
pub mod election;
pub mod experiments;
pub mod formats;
pub mod generators;
pub mod oracle;
pub mod solver;

#[cfg(test)]
pub(crate) mod testutil;

pub use election::{
    initial_state, stv_winner_lex, stv_winners, Ballot, CandidateId, ElectionError, ElectionState,
    Profile, TieBreakPolicy, WeightedBallot,
};
pub use experiments::{
    coalition_axis, fit_exponential, run_point, run_point_jobs, run_sweep, run_sweep_with,
    Algorithm, ExperimentError, FitResult, PointSpec, StatSummary, SweepAxis, SweepSpec,
};
pub use formats::{
    open_result_file, parse_profile, parse_result_rows, write_profile, ParseError, ResultRow,
    ResultWriter, RESULT_CSV_HEADER,
};
pub use generators::{
    gen_ic, gen_single_peaked_urn, gen_urn, is_single_peaked, sample_dataset, Axis, GenError,
    RngSeed, VoteModel,
};
pub use oracle::{
    brute_force_manipulable, possible_winners_brute, run_agreement_check, AgreementConfig,
    AgreementReport, OracleBudget, OracleError, OracleOutcome,
};
pub use solver::{
    csl_possible_winners, csl_possible_winners_with, manipulate_improved, manipulate_improved_with,
    reconstruct_witness, BranchOrder, ManipulationQuery, SolveOutcome, SolveStats,
};
