//! Solves a single manipulation instance and replays the witness ballot.

use stv_manip::{
    manipulate_improved, parse_profile, stv_winner_lex, CandidateId, ManipulationQuery,
    TieBreakPolicy,
};

const PROFILE: &str = "\
m 4
2: 1 3 2 4
2: 3 1 4 2
1: 2 4 1 3
1: 4 2 3 1
";

fn main() {
    let profile = parse_profile(PROFILE).unwrap();
    let chosen = CandidateId(4);
    let weight = 2;
    println!("honest winner: {}", stv_winner_lex(&profile).unwrap());

    let query = ManipulationQuery::new(
        profile.clone(),
        chosen,
        weight,
        TieBreakPolicy::Lexicographic,
    )
    .unwrap();
    let outcome = manipulate_improved(&query);
    println!(
        "can a coalition of weight {weight} elect {chosen}? {} ({} nodes)",
        outcome.manipulable, outcome.stats.nodes
    );

    if let Some(witness) = outcome.witness {
        println!("witness ballot: {witness}");
        let rigged = profile.with_ballot(witness, weight).unwrap();
        let winner = stv_winner_lex(&rigged).unwrap();
        assert_eq!(
            winner, chosen,
            "witness must actually elect the chosen candidate"
        );
        println!("replayed: winner is now {winner}");
    }
}
