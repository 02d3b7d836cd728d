//! Sweeps the manipulator's weight and watches the success probability climb
//! from rare to certain. Weights are chosen relative to sqrt(n), where the
//! transition happens.

use stv_manip::{
    coalition_axis, run_sweep, Algorithm, BranchOrder, SweepAxis, SweepSpec, TieBreakPolicy,
    VoteModel,
};

fn main() {
    let n = 16;
    let spec = SweepSpec {
        model: VoteModel::Ic,
        axis: SweepAxis::VaryCoalition,
        m: 16,
        n,
        w: 0,
        points: coalition_axis(n),
        trials: 400,
        algorithm: Algorithm::Improved,
        policy: TieBreakPolicy::Lexicographic,
        order: BranchOrder::RightFirst,
        master_seed: 0,
        measure_time: false,
    };
    let rows = run_sweep(&spec, 4).unwrap();
    println!("m=16, n={n}, impartial culture");
    println!("{:>8} {:>8}", "w", "p_manip");
    for row in &rows {
        let bar = "#".repeat((row.p_manip * 40.0).round() as usize);
        println!("{:>8} {:>8.3} {bar}", row.w, row.p_manip);
    }
}
