//! Measures how search effort grows with the number of candidates and fits
//! nodes = a * b^m. The base b stays close to 1, far below the m! growth of
//! unpruned enumeration.

use stv_manip::{
    fit_exponential, run_sweep, Algorithm, BranchOrder, SweepAxis, SweepSpec, TieBreakPolicy,
    VoteModel,
};

fn main() {
    let spec = SweepSpec {
        model: VoteModel::Ic,
        axis: SweepAxis::VaryM,
        m: 0,
        n: 16,
        w: 1,
        points: vec![4, 8, 16, 32, 64],
        trials: 300,
        algorithm: Algorithm::Improved,
        policy: TieBreakPolicy::Lexicographic,
        order: BranchOrder::RightFirst,
        master_seed: 0,
        measure_time: false,
    };
    let rows = run_sweep(&spec, 4).unwrap();
    println!("{:>4} {:>12} {:>8}", "m", "mean_nodes", "p_manip");
    for row in &rows {
        println!("{:>4} {:>12.2} {:>8.3}", row.m, row.mean_nodes, row.p_manip);
    }
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.m as f64, r.mean_nodes)).collect();
    let fit = fit_exponential(&points).unwrap();
    println!(
        "fit: nodes = {:.3} * {:.4}^m  (r2 = {:.4})",
        fit.a, fit.b, fit.r_squared
    );
}
