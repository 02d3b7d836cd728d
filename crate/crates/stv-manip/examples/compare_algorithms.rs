//! Runs the pruned search and the baseline on identical instances and
//! compares expanded node counts. The pruned search answers a yes/no
//! membership question and stops early; the baseline always maps the full
//! winner set, so it expands strictly more nodes on average.

use stv_manip::{
    csl_possible_winners, gen_ic, manipulate_improved, CandidateId, ManipulationQuery, RngSeed,
    TieBreakPolicy,
};

fn main() {
    let m: u32 = 16;
    let n: u32 = 16;
    let trials: u32 = 200;
    let mut improved_nodes = 0u64;
    let mut csl_nodes = 0u64;
    let mut yes = 0u32;
    for t in 0..trials {
        let profile = gen_ic(m, n, RngSeed::new(11, t as u64)).unwrap();
        let chosen = CandidateId(t % m + 1);
        let query =
            ManipulationQuery::new(profile, chosen, 1, TieBreakPolicy::Lexicographic).unwrap();

        let out = manipulate_improved(&query);
        let (winners, stats) = csl_possible_winners(&query.profile, query.weight, query.policy);

        assert_eq!(out.manipulable, winners.contains(&chosen));
        improved_nodes += out.stats.nodes;
        csl_nodes += stats.nodes;
        yes += out.manipulable as u32;
    }
    println!("{trials} instances at m={m}, n={n}, manipulator weight 1");
    println!("manipulable: {yes}");
    println!(
        "mean nodes, pruned search: {:.1}",
        improved_nodes as f64 / trials as f64
    );
    println!(
        "mean nodes, baseline:      {:.1}",
        csl_nodes as f64 / trials as f64
    );
    println!("ratio: {:.2}x", csl_nodes as f64 / improved_nodes as f64);
}
