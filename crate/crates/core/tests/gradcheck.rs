use scav::verification::{run_all, TARGETS};

#[test]
fn every_target_passes_on_several_seeds() {
    for seed in 0..3 {
        let reports = run_all(seed, None).unwrap();
        assert_eq!(reports.len(), TARGETS.len());
        for r in &reports {
            println!("seed {seed}: {r}");
        }
        assert!(reports.iter().all(|r| r.passed), "seed {seed}");
    }
}
