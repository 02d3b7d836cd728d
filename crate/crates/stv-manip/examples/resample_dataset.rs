//! Resamples a fixed source profile to new sizes. Agents are bootstrap
//! resampled; shrinking the candidate set keeps relative order, growing it
//! inserts clones next to their originals.

use stv_manip::{parse_profile, sample_dataset, write_profile, RngSeed};

const SOURCE: &str = "\
m 4
3: 1 2 3 4
2: 2 1 4 3
1: 4 3 2 1
";

fn main() {
    let source = parse_profile(SOURCE).unwrap();
    println!("# source");
    print!("{}", write_profile(&source));

    for (m, n) in [(4, 10), (3, 4), (6, 5)] {
        let resampled = sample_dataset(&source, m, n, RngSeed::new(42, 0)).unwrap();
        println!("\n# resampled to m={m}, n={n}");
        print!("{}", write_profile(&resampled));
    }
}
