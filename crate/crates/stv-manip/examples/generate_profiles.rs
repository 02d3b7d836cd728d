//! Draws one profile from each vote model and prints it in the text format.

use stv_manip::{write_profile, Axis, CandidateId, RngSeed, VoteModel};

fn main() {
    let m = 4;
    let n = 6;
    let models = [
        VoteModel::Ic,
        VoteModel::Urn { b: 1.0 },
        VoteModel::SinglePeakedUrn {
            b: 0.5,
            axis: Some(
                Axis::new(vec![
                    CandidateId(2),
                    CandidateId(1),
                    CandidateId(3),
                    CandidateId(4),
                ])
                .unwrap(),
            ),
        },
    ];
    for (i, model) in models.iter().enumerate() {
        let profile = model.generate(m, n, RngSeed::new(7, i as u64)).unwrap();
        println!("# {}", model);
        print!("{}", write_profile(&profile));
        println!();
    }
}
