use omega_core::consensus::OmegaConsensus;
use omega_core::extractor::{probes_converged, run_reduction, ProbeRecord};
use omega_core::suites::extraction_config;
use omega_core::ProcessId;

#[test]
fn seed_zero_extracts_the_stable_leader() {
    let mut config = extraction_config().reduction(false).unwrap();
    config.budget = 300_000;
    config.tail = 5_000;
    config.probe_tail = 5_000;
    let run = run_reduction(OmegaConsensus::new(3), &config).unwrap();
    let v = &run.verdict;
    assert!(v.ok(), "{v:?}");
    assert_eq!(v.leader, Some(ProcessId::new(1)));
    assert_eq!(v.converged, vec![ProcessId::new(1), ProcessId::new(2)]);
    assert_eq!(v.simulated_safety_violations, 0);

    let tail: Vec<ProbeRecord> = run.system.proc(ProcessId::new(2)).probe_tail().iter().cloned().collect();
    assert!(probes_converged(&tail));
    // The crashed process stopped contributing output at its crash.
    assert!(run.system.proc(ProcessId::new(3)).outputs().len() < 100);
}

#[test]
fn reduction_runs_are_reproducible() {
    let mut config = extraction_config().with_seed(4).reduction(false).unwrap();
    config.budget = 50_000;
    config.tail = 1_000;
    let a = run_reduction(OmegaConsensus::new(3), &config).unwrap();
    let b = run_reduction(OmegaConsensus::new(3), &config).unwrap();
    for p in ProcessId::all(3) {
        assert_eq!(a.system.proc(p).outputs(), b.system.proc(p).outputs());
    }
    assert_eq!(
        serde_json::to_string(&a.verdict).unwrap(),
        serde_json::to_string(&b.verdict).unwrap()
    );
}

#[test]
fn inconsistent_config_is_rejected() {
    let mut config = extraction_config().reduction(false).unwrap();
    config.n = 4;
    assert!(run_reduction(OmegaConsensus::new(4), &config).is_err());
    let mut config = extraction_config().reduction(false).unwrap();
    config.explore_ratio = 0;
    assert!(run_reduction(OmegaConsensus::new(3), &config).is_err());
}
