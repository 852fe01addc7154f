//! Both fitness kinds must prefer an architecture that can fit over one that cannot.

use resn::data::{generate_sine, SeriesOptions, SineSpec};
use resn::evolve::{EaConfig, Evaluator, FitnessKind};
use resn::mrs::MrsConfig;
use resn::rnn::Architecture;
use resn::train::AdamConfig;

#[test]
fn fitting_architecture_ranks_first_for_both_kinds() {
    // period 8: a single past value cannot tell rising from falling phase, four can
    let ds = generate_sine(&SineSpec::new(200, 8.0), &SeriesOptions::default()).unwrap();
    let fits = Architecture::new(vec![4], 4).unwrap();
    let fails = Architecture::new(vec![32], 1).unwrap();
    let mrs = MrsConfig::default();
    let adam = AdamConfig {
        learning_rate: 0.01,
        ..Default::default()
    };
    let ea = EaConfig {
        gdet_epochs: 300,
        ..Default::default()
    };
    for kind in [FitnessKind::Mrs, FitnessKind::Gdet] {
        let evaluator = Evaluator::new(&ds, kind, &mrs, &adam, &ea).unwrap();
        let wins = (0..20)
            .filter(|&seed| {
                let a = evaluator.score(&fits, 1000 + seed).unwrap();
                let b = evaluator.score(&fails, 1000 + seed).unwrap();
                a > b
            })
            .count();
        assert!(
            wins >= 18,
            "{kind:?} preferred the fitting architecture {wins}/20 times"
        );
    }
}
