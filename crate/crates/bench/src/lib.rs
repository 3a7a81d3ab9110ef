//! Workloads shared by the benchmarks.

use std::sync::Arc;

use omega_core::bgsim::{bg_macro_step, BgState, SimId};
use omega_core::consensus::OmegaConsensus;
use omega_core::dag::{CommProcess, VertexStore};
use omega_core::detectors::{make_omega, OmegaSpec};
use omega_core::extractor::{run_reduction, ReductionConfig};
use omega_core::sim::{ConsRegistry, FailurePattern, Scheduler, System};
use omega_core::suites::{extraction_config, fair_dag};
use omega_core::ProcessId;

/// Runs the communication component alone for `steps` steps; returns the
/// number of vertices built.
pub fn comm_run(n: usize, steps: u64, seed: u64) -> usize {
    let pattern = FailurePattern::new(n);
    let history = make_omega(&pattern, &OmegaSpec { t_stab: 200, leader: ProcessId::new(1), noise_seed: seed })
        .expect("valid detector");
    let procs = ProcessId::all(n).map(|p| CommProcess::new(p, n)).collect();
    let mut sys = System::new(pattern, Arc::new(history), procs).expect("valid system").without_trace();
    sys.run(&mut Scheduler::seeded(n, seed), steps).expect("run completes");
    sys.vertices().len()
}

pub fn bg_dag() -> VertexStore {
    fair_dag(3, 6_000, 1).expect("fair run").0
}

/// Alternates the two simulators for `macro_steps`; returns the number of
/// simulated steps.
pub fn bg_alternating(store: &VertexStore, macro_steps: usize) -> usize {
    let f = store.frontier();
    let view = store.view(&f);
    let mut cons = ConsRegistry::new();
    let mut st = BgState::new(OmegaConsensus::new(3), 3, [0, 1]);
    for q in SimId::BOTH.into_iter().cycle().take(macro_steps) {
        bg_macro_step(&mut st, q, &view, &mut cons).expect("full view never stalls");
    }
    st.sch().len()
}

pub fn reduction_config(budget: u64) -> ReductionConfig {
    let mut config = extraction_config().reduction(false).expect("valid config");
    config.budget = budget;
    config.tail = 1_000;
    config
}

/// Whether the reduction stabilized within the config's budget.
pub fn reduction(config: &ReductionConfig) -> bool {
    run_reduction(OmegaConsensus::new(config.n), config).expect("run completes").verdict.stable
}
