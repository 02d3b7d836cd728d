//! Cross-checks the two solvers against brute-force enumeration of every
//! possible manipulator ballot on a grid of small random elections.

use stv_manip::{run_agreement_check, AgreementConfig};

fn main() {
    let cfg = AgreementConfig {
        m_max: 4,
        n_max: 6,
        trials_per_config: 100,
        ..AgreementConfig::default()
    };
    let report = run_agreement_check(&cfg).unwrap();
    println!(
        "checked {} instances over {} configurations",
        report.instances, report.configs
    );
    println!("disagreements: {}", report.disagreements);
    for mm in &report.mismatches {
        println!(
            "  {} policy={} w={} chosen={}: improved={} oracle={}",
            mm.model, mm.policy, mm.weight, mm.chosen, mm.improved, mm.oracle
        );
    }
    assert!(report.all_agree());
}
