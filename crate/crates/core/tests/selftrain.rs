mod common;

use ugst::baselines::run_base;
use ugst::em::{run_ugst, UgstConfig};
use ugst::gnn::TrainConfig;

#[test]
fn ugst_matches_or_beats_base_on_most_seeds() {
    let mut wins = 0;
    for seed in 0..10 {
        let (ds, split) = common::sbm_case(seed);
        let config = UgstConfig {
            gamma: 0.9,
            em_steps: 3,
            inner_train: TrainConfig {
                seed,
                ..TrainConfig::default()
            },
            ..UgstConfig::default()
        };
        let base = run_base(&ds, &split, &config.inner_train).unwrap();
        let ugst = run_ugst(&ds, &split, &config).unwrap();
        if ugst.result.test_accuracy >= base.result.test_accuracy {
            wins += 1;
        }
        let first = &ugst.result.iterations[0];
        assert_eq!(
            first.augmented_size,
            split.labeled().len() + first.pseudo_label_count
        );
    }
    assert!(wins >= 8, "UGST >= Base on {wins} of 10 seeds");
}
