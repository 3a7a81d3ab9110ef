//! Property suites over batches of seeded runs. The CLI's `suite` and
//! `batch` commands and the acceptance tests call these.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::asyncsim::{run_simulation, validate_simulation, SimulationConfig};
use crate::bgsim::{bg_macro_step, exhaustive_sa_check, BgState, MacroOutcome, SaReport, SimId};
use crate::config::ExperimentConfig;
use crate::consensus::{check_decisions, OmegaConsensus};
use crate::dag::{check_dag_properties, snapshots, CommProcess, Frontier, VertexStore};
use crate::detectors::{make_omega, OmegaSpec};
use crate::error::{Error, Result};
use crate::extractor::{replay, run_reduction, PrefixDiagnosis, INPUT_VECTORS};
use crate::sim::{
    AutomatonProcess, Bit, ConsRegistry, FailurePattern, Process, ProcessId, Scheduler, System, Time,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    Sa,
    Consensus,
    Dag,
    Simulation,
    Bg,
    Replay,
    Extract,
}

impl Suite {
    pub const ALL: [Suite; 7] =
        [Suite::Sa, Suite::Consensus, Suite::Dag, Suite::Simulation, Suite::Bg, Suite::Replay, Suite::Extract];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Sa => "sa",
            Suite::Consensus => "consensus",
            Suite::Dag => "dag",
            Suite::Simulation => "simulation",
            Suite::Bg => "bg",
            Suite::Replay => "replay",
            Suite::Extract => "extract",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite {s:?}")))
    }
}

impl Serialize for Suite {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// The verdict of one suite: a one-line summary plus the full report.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub pass: bool,
    pub summary: String,
    pub detail: serde_json::Value,
}

fn outcome<R: Serialize>(suite: Suite, pass: bool, summary: String, report: &R) -> SuiteOutcome {
    SuiteOutcome {
        suite,
        pass,
        summary,
        detail: serde_json::to_value(report).expect("reports serialize"),
    }
}

/// Runs a suite at its default scale.
pub fn run_suite(suite: Suite) -> Result<SuiteOutcome> {
    Ok(match suite {
        Suite::Sa => {
            let r = sa_suite();
            let summary = format!(
                "{} executions, {} agreement / {} validity / {} pending-state violations",
                r.executions, r.agreement_violations, r.validity_violations, r.pending_mismatches
            );
            outcome(suite, r.ok(), summary, &r)
        }
        Suite::Consensus => {
            let r = consensus_suite(14, 1_000, 10_000)?;
            let summary = format!(
                "{} exhaustive schedules ({} deciding), {} violations; {} seeded runs, {} violations, {} undecided",
                r.schedules,
                r.deciding_schedules,
                r.exhaustive_violations,
                r.fuzz_runs,
                r.fuzz_violations.len(),
                r.undecided.len()
            );
            outcome(suite, r.ok(), summary, &r)
        }
        Suite::Dag => {
            let r = dag_suite(100, 5_000, 1_000)?;
            let summary = format!(
                "{} runs: {} safety, {} overdue liveness, {} vertex-count failures; {} instances discharged",
                r.runs,
                r.safety_failures.len(),
                r.overdue_failures.len(),
                r.count_failures.len(),
                r.discharged
            );
            outcome(suite, r.ok(), summary, &r)
        }
        Suite::Simulation => {
            let r = simulation_suite(100)?;
            let summary = format!(
                "{} runs: {} illegal, {} temporal, {} participation, {} undecided",
                r.runs,
                r.illegal.len(),
                r.temporal.len(),
                r.participation.len(),
                r.undecided.len()
            );
            outcome(suite, r.ok(), summary, &r)
        }
        Suite::Bg => {
            let r = bg_suite(10, 1_000, 10_000)?;
            let summary = format!(
                "{} DAGs: {} progress failures, {} runs with more than one blocked process",
                r.dags,
                r.progress_failures.len(),
                r.blocking_failures.len()
            );
            outcome(suite, r.ok(), summary, &r)
        }
        Suite::Replay => {
            let r = replay_suite(200, 200)?;
            let summary = format!(
                "{} cases ({} stalled): {} nondeterministic, {} replayer mismatches, {} prefix failures",
                r.cases,
                r.stalled,
                r.nondeterministic.len(),
                r.replayer_mismatches.len(),
                r.prefix_failures.len()
            );
            outcome(suite, r.ok(), summary, &r)
        }
        Suite::Extract => {
            let r = extract_batch(&extraction_config(), 0..50)?;
            outcome(suite, r.ok(), r.summary(), &r)
        }
    })
}

pub fn sa_suite() -> SaReport {
    exhaustive_sa_check()
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ConsensusSuiteReport {
    /// Complete schedules enumerated (all input vectors and leaders).
    pub schedules: u64,
    /// Enumerated schedules in which some process decided.
    pub deciding_schedules: u64,
    pub exhaustive_violations: u64,
    /// First violating schedule as process indices, with inputs.
    pub counterexample: Option<String>,
    pub fuzz_runs: u64,
    pub fuzz_violations: Vec<u64>,
    pub undecided: Vec<u64>,
}

impl ConsensusSuiteReport {
    pub fn ok(&self) -> bool {
        self.exhaustive_violations == 0 && self.fuzz_violations.is_empty() && self.undecided.is_empty()
    }
}

type ConsSystem = System<AutomatonProcess<OmegaConsensus>>;

fn consensus_system(inputs: &[Bit], pattern: FailurePattern, spec: &OmegaSpec) -> Result<ConsSystem> {
    let n = inputs.len();
    let algo = OmegaConsensus::new(n);
    let history = Arc::new(make_omega(&pattern, spec)?);
    let procs = inputs
        .iter()
        .enumerate()
        .map(|(i, &b)| AutomatonProcess::new(algo, ProcessId::from_index(i), b))
        .collect();
    System::new(pattern, history, procs)
}

/// Every schedule of `n = 2` processes up to `depth` steps, for all input
/// vectors and both constant leaders, checked for validity and agreement.
/// Then `fuzz_runs` seeded fair runs of `n = 3` with noise until `t_stab ≤ 200`.
pub fn consensus_suite(depth: usize, fuzz_runs: u64, budget: u64) -> Result<ConsensusSuiteReport> {
    fn walk(sys: &ConsSystem, inputs: &[Option<Bit>], depth: usize, path: &mut Vec<usize>, report: &mut ConsensusSuiteReport) -> Result<()> {
        let live: Vec<ProcessId> = ProcessId::all(sys.n()).filter(|&p| sys.is_live(p)).collect();
        if path.len() == depth || live.is_empty() {
            report.schedules += 1;
            let check = check_decisions(inputs, sys.steps());
            if !check.decided.is_empty() {
                report.deciding_schedules += 1;
            }
            if !check.ok() {
                report.exhaustive_violations += 1;
                report.counterexample.get_or_insert_with(|| format!("inputs {inputs:?} schedule {path:?}"));
            }
            return Ok(());
        }
        for p in live {
            let mut next = sys.clone();
            next.execute_step(p)?;
            path.push(p.index());
            walk(&next, inputs, depth, path, report)?;
            path.pop();
        }
        Ok(())
    }

    let mut report = ConsensusSuiteReport::default();
    for inputs in INPUT_VECTORS {
        for leader in ProcessId::all(2) {
            let spec = OmegaSpec { t_stab: 0, leader, noise_seed: 0 };
            let sys = consensus_system(&inputs, FailurePattern::new(2), &spec)?;
            let ins: Vec<Option<Bit>> = inputs.iter().map(|&b| Some(b)).collect();
            walk(&sys, &ins, depth, &mut Vec::new(), &mut report)?;
        }
    }

    let results = (0..fuzz_runs)
        .into_par_iter()
        .map(|seed| -> Result<(u64, bool, bool)> {
            let n = 3;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pattern = FailurePattern::new(n);
            if rng.random_ratio(2, 3) {
                pattern.set_crash(ProcessId::from_index(rng.random_range(0..n)), rng.random_range(0..300))?;
            }
            let correct = pattern.correct();
            let leader = correct[rng.random_range(0..correct.len())];
            let spec = OmegaSpec { t_stab: rng.random_range(0..=200), leader, noise_seed: seed };
            let inputs: Vec<Bit> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let mut sys = consensus_system(&inputs, pattern.clone(), &spec)?;
            let decided = |s: &ConsSystem| correct.iter().all(|&p| s.proc(p).decision().is_some());
            sys.run_until(&mut Scheduler::seeded(n, seed), budget, |s, _| decided(s))?;
            let safe = check_decisions(&sys.trace().inputs, sys.steps()).ok();
            Ok((seed, safe, decided(&sys)))
        })
        .collect::<Result<Vec<_>>>()?;
    report.fuzz_runs = fuzz_runs;
    for (seed, safe, decided) in results {
        if !safe {
            report.fuzz_violations.push(seed);
        }
        if !decided {
            report.undecided.push(seed);
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct DagSuiteReport {
    pub runs: u64,
    pub safety_failures: Vec<u64>,
    /// Runs with a liveness instance still open older than the horizon.
    pub overdue_failures: Vec<u64>,
    /// Runs where some correct process has no more vertices than a faulty one.
    pub count_failures: Vec<u64>,
    pub discharged: u64,
}

impl DagSuiteReport {
    pub fn ok(&self) -> bool {
        self.safety_failures.is_empty() && self.overdue_failures.is_empty() && self.count_failures.is_empty()
    }
}

/// Seeded fair runs of the communication component with `n ∈ {3, 4, 5}`
/// and up to `n - 2` crashes.
pub fn dag_suite(runs: u64, budget: u64, horizon: Time) -> Result<DagSuiteReport> {
    let results = (0..runs)
        .into_par_iter()
        .map(|seed| -> Result<(u64, bool, bool, bool, u64)> {
            let n = 3 + (seed % 3) as usize;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pattern = FailurePattern::new(n);
            let crashes = rng.random_range(1..=n - 2);
            let mut victims: Vec<usize> = (0..n).collect();
            for _ in 0..crashes {
                let p = victims.swap_remove(rng.random_range(0..victims.len()));
                pattern.set_crash(ProcessId::from_index(p), rng.random_range(0..budget / 2))?;
            }
            let correct = pattern.correct();
            let leader = correct[rng.random_range(0..correct.len())];
            let spec = OmegaSpec { t_stab: rng.random_range(0..budget / 2), leader, noise_seed: seed };
            let history = Arc::new(make_omega(&pattern, &spec)?);
            let procs = ProcessId::all(n).map(|p| CommProcess::new(p, n)).collect();
            let mut sys = System::new(pattern.clone(), history.clone(), procs)?;
            sys.run(&mut Scheduler::seeded(n, seed), budget)?;
            let report = check_dag_properties(sys.vertices(), &snapshots(sys.steps()), &pattern, history.as_ref());
            let overdue = report.overdue(sys.time().saturating_sub(horizon)).next().is_some();
            let len = |p: ProcessId| sys.vertices().chain(p).len();
            let min_correct = correct.iter().map(|&p| len(p)).min().unwrap_or(0);
            let counts_ok = pattern.faulty().iter().all(|&p| len(p) < min_correct);
            Ok((seed, report.safety_ok(), overdue, counts_ok, report.discharged as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut r = DagSuiteReport { runs, ..Default::default() };
    for (seed, safe, overdue, counts_ok, discharged) in results {
        if !safe {
            r.safety_failures.push(seed);
        }
        if overdue {
            r.overdue_failures.push(seed);
        }
        if !counts_ok {
            r.count_failures.push(seed);
        }
        r.discharged += discharged;
    }
    Ok(r)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SimulationSuiteReport {
    pub runs: u64,
    pub illegal: Vec<u64>,
    pub temporal: Vec<u64>,
    pub participation: Vec<u64>,
    /// Runs where a process correct in both patterns did not decide.
    pub undecided: Vec<u64>,
}

impl SimulationSuiteReport {
    pub fn ok(&self) -> bool {
        self.illegal.is_empty() && self.temporal.is_empty() && self.participation.is_empty() && self.undecided.is_empty()
    }
}

/// Runs of the detector-free simulation over live DAGs. Even seeds are
/// fair on the simulator side (every fourth with a DAG-builder crash); odd
/// seeds starve `p'_3` while `p3` keeps building the DAG.
pub fn simulation_suite(runs: u64) -> Result<SimulationSuiteReport> {
    let n = 3;
    let results = (0..runs)
        .into_par_iter()
        .map(|seed| -> Result<(u64, bool, bool, bool, bool)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut f = FailurePattern::new(n);
            let mut f_sim = FailurePattern::new(n);
            if seed % 2 == 1 {
                f_sim.set_crash(ProcessId::new(3), 0)?;
            } else if seed % 4 == 0 {
                f.set_crash(ProcessId::new(2), rng.random_range(100..400))?;
            }
            let inputs: Vec<Bit> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let config = SimulationConfig {
                n,
                f: f.clone(),
                f_sim: f_sim.clone(),
                omega: OmegaSpec { t_stab: 200, leader: ProcessId::new(1), noise_seed: seed },
                inputs: inputs.clone(),
                seed,
                budget: 12_000,
                tail: 60,
            };
            let algo = OmegaConsensus::new(n);
            let run = run_simulation(algo, config)?;
            let records: Vec<_> = run.records.iter().map(|(_, r)| r.clone()).collect();
            let report = validate_simulation(&algo, &inputs, &records, run.system.vertices(), &f, &f_sim, 60);
            let decided = report
                .expected
                .iter()
                .all(|p| run.system.proc(ProcessId::new(p.get() + n as u32)).decision().is_some());
            Ok((seed, report.legal(), report.temporal_ok(), report.participation_ok(), decided))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut r = SimulationSuiteReport { runs, ..Default::default() };
    for (seed, legal, temporal, participation, decided) in results {
        if !legal {
            r.illegal.push(seed);
        }
        if !temporal {
            r.temporal.push(seed);
        }
        if !participation {
            r.participation.push(seed);
        }
        if !decided {
            r.undecided.push(seed);
        }
    }
    Ok(r)
}

/// A DAG produced by a fair, crash-free run of the communication component.
pub fn fair_dag(n: usize, steps: u64, seed: u64) -> Result<(VertexStore, Vec<Frontier>)> {
    let pattern = FailurePattern::new(n);
    let history = make_omega(&pattern, &OmegaSpec { t_stab: 100, leader: ProcessId::new(1), noise_seed: seed })?;
    let procs = ProcessId::all(n).map(|p| CommProcess::new(p, n)).collect();
    let mut sys = System::new(pattern, Arc::new(history), procs)?.without_trace();
    sys.run(&mut Scheduler::seeded(n, seed), steps)?;
    let locals = sys.procs().iter().map(|p| p.local().clone()).collect();
    Ok((sys.vertices().clone(), locals))
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct BgSuiteReport {
    pub dags: u64,
    /// Seeds where some simulated process had no step after `short`
    /// macro-steps, or none between `short` and `long`.
    pub progress_failures: Vec<u64>,
    /// Seeds where a stopped simulator left more than one process blocked.
    pub blocking_failures: Vec<u64>,
    /// Step counts of the first DAG after `short` and `long` macro-steps.
    pub sample_counts: (Vec<u64>, Vec<u64>),
}

impl BgSuiteReport {
    pub fn ok(&self) -> bool {
        self.progress_failures.is_empty() && self.blocking_failures.is_empty()
    }
}

fn drive<A: crate::sim::Automaton>(
    state: &mut BgState<A>,
    sched: impl Iterator<Item = SimId>,
    store: &VertexStore,
    cons: &mut ConsRegistry,
) -> Result<()> {
    let f = store.frontier();
    let view = store.view(&f);
    for q in sched {
        if bg_macro_step(state, q, &view, cons)? == MacroOutcome::Stalled {
            return Err(Error::ReplayStalled { at: state.macro_steps() as usize });
        }
    }
    Ok(())
}

/// The two simulators alternate over a fair-run DAG; then one of them stops
/// right after opening a proposal and the other runs alone.
pub fn bg_suite(dags: u64, short: usize, long: usize) -> Result<BgSuiteReport> {
    let n = 3;
    let results = (0..dags)
        .into_par_iter()
        .map(|seed| -> Result<(u64, Vec<u64>, Vec<u64>, bool)> {
            let (store, _) = fair_dag(n, 6_000, seed)?;
            let algo = OmegaConsensus::new(n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let inputs = INPUT_VECTORS[rng.random_range(0..4)];

            let mut cons = ConsRegistry::new();
            let mut st = BgState::new(algo, n, inputs);
            drive(&mut st, SimId::BOTH.into_iter().cycle().take(short), &store, &mut cons)?;
            let early = st.counts().to_vec();
            drive(&mut st, SimId::BOTH.into_iter().cycle().take(long - short), &store, &mut cons)?;
            let late = st.counts().to_vec();

            let mut cons = ConsRegistry::new();
            let mut st = BgState::new(algo, n, inputs);
            let stop_at = 2 * rng.random_range(5..150) + 1;
            drive(&mut st, SimId::BOTH.into_iter().cycle().take(stop_at), &store, &mut cons)?;
            drive(&mut st, std::iter::repeat(SimId::Q2).take(200), &store, &mut cons)?;
            let before = st.counts().to_vec();
            drive(&mut st, std::iter::repeat(SimId::Q2).take(2_000), &store, &mut cons)?;
            let stuck = (0..n).filter(|&i| st.counts()[i] == before[i]).count();
            Ok((seed, early, late, stuck <= 1))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut r = BgSuiteReport { dags, ..Default::default() };
    for (seed, early, late, blocking_ok) in results {
        if !early.iter().zip(&late).all(|(&a, &b)| a >= 1 && b > a) {
            r.progress_failures.push(seed);
        }
        if !blocking_ok {
            r.blocking_failures.push(seed);
        }
        if seed == 0 {
            r.sample_counts = (early, late);
        }
    }
    Ok(r)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ReplaySuiteReport {
    pub cases: u64,
    /// Cases where a local view lacked a vertex consensus had chosen.
    pub stalled: u64,
    pub nondeterministic: Vec<u64>,
    pub replayer_mismatches: Vec<u64>,
    pub prefix_failures: Vec<u64>,
}

impl ReplaySuiteReport {
    pub fn ok(&self) -> bool {
        self.nondeterministic.is_empty() && self.replayer_mismatches.is_empty() && self.prefix_failures.is_empty()
    }
}

/// Everything a replay determines: schedule, per-process step counts,
/// decisions and simulated states.
type Fingerprint = (Vec<u16>, Vec<u64>, Vec<Option<Bit>>, String);

fn fingerprint(st: &BgState<OmegaConsensus>) -> Fingerprint {
    (st.sch().to_vec(), st.counts().to_vec(), st.decisions().to_vec(), format!("{:?}", st.states()))
}

/// Random `(J, σ)` replayed by two real processes with different local
/// views that share one consensus registry.
pub fn replay_suite(cases: u64, max_len: usize) -> Result<ReplaySuiteReport> {
    let n = 3;
    let dags = (0..4).map(|s| fair_dag(n, 6_000, 100 + s)).collect::<Result<Vec<_>>>()?;
    let algo = OmegaConsensus::new(n);
    let mut r = ReplaySuiteReport { cases, ..Default::default() };
    for case in 0..cases {
        let mut rng = ChaCha8Rng::seed_from_u64(case);
        let (store, locals) = &dags[case as usize % dags.len()];
        let j = INPUT_VECTORS[rng.random_range(0..4)];
        let len = rng.random_range(0..=max_len);
        let sigma: Vec<u8> = (0..len).map(|_| rng.random_range(1..=2)).collect();
        let q = rng.random_range(1..=2);
        let mut cons = ConsRegistry::new();
        let view_a = store.view(&locals[0]);
        let view_b = store.view(&locals[1]);

        let first = match replay(&algo, n, j, &sigma, &view_a, &mut cons) {
            Ok(st) => st,
            Err(Error::ReplayStalled { .. }) => {
                r.stalled += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let again = replay(&algo, n, j, &sigma, &view_a, &mut cons)?;
        if fingerprint(&first) != fingerprint(&again) {
            r.nondeterministic.push(case);
        }
        match replay(&algo, n, j, &sigma, &view_b, &mut cons) {
            Ok(other) if fingerprint(&other) != fingerprint(&first) => r.replayer_mismatches.push(case),
            Ok(_) => {}
            Err(Error::ReplayStalled { .. }) => r.stalled += 1,
            Err(e) => return Err(e),
        }
        let mut longer = sigma.clone();
        longer.push(q);
        match replay(&algo, n, j, &longer, &view_a, &mut cons) {
            Ok(ext) if !ext.sch().starts_with(first.sch()) => r.prefix_failures.push(case),
            Ok(_) => {}
            Err(Error::ReplayStalled { .. }) => r.stalled += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(r)
}

/// One end-to-end reduction run.
#[derive(Clone, Debug, Serialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub stable: bool,
    pub leader: Option<ProcessId>,
    /// Every correct process's probe-log tail sits in one growing probe.
    pub converged: bool,
    pub safe: bool,
    pub longest_prefix: Option<PrefixDiagnosis>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtractReport {
    pub seeds: u64,
    pub stable: u64,
    pub converged: u64,
    pub safe: u64,
    /// Required fraction of stable seeds.
    pub required_rate: f64,
    pub outcomes: Vec<SeedOutcome>,
}

impl ExtractReport {
    pub fn stable_rate(&self) -> f64 {
        self.stable as f64 / self.seeds.max(1) as f64
    }

    pub fn stability_ok(&self) -> bool {
        self.stable_rate() >= self.required_rate
    }

    pub fn safety_ok(&self) -> bool {
        self.safe == self.seeds
    }

    pub fn convergence_ok(&self) -> bool {
        self.converged == self.seeds
    }

    pub fn ok(&self) -> bool {
        self.stability_ok() && self.safety_ok() && self.convergence_ok()
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{}/{} stable ({:.0}%, need {:.0}%), {}/{} converged, {}/{} safe",
            self.stable,
            self.seeds,
            100.0 * self.stable_rate(),
            100.0 * self.required_rate,
            self.converged,
            self.seeds,
            self.safe,
            self.seeds
        );
        let deepest = self
            .outcomes
            .iter()
            .filter(|o| !o.stable || !o.converged)
            .filter_map(|o| o.longest_prefix.as_ref().map(|d| (o.seed, d)))
            .max_by_key(|(_, d)| d.sigma_len);
        if let Some((seed, d)) = deepest {
            s.push_str(&format!(
                "; deepest unsettled prefix: seed {seed} {} J={:?} |σ|={} σ={}…",
                d.proc, d.j, d.sigma_len, d.sigma_head
            ));
        }
        s
    }
}

/// One reduction run per seed in `seeds`, in parallel.
pub fn extract_batch(base: &ExperimentConfig, seeds: std::ops::Range<u64>) -> Result<ExtractReport> {
    let outcomes = seeds
        .clone()
        .into_par_iter()
        .map(|seed| -> Result<SeedOutcome> {
            let config = base.with_seed(seed).reduction(false)?;
            let run = run_reduction(OmegaConsensus::new(config.n), &config)?;
            let v = &run.verdict;
            Ok(SeedOutcome {
                seed,
                stable: v.stable,
                leader: v.leader,
                converged: v.converged.len() == config.pattern.correct().len(),
                safe: v.dag_safety && v.simulated_safety_violations == 0,
                longest_prefix: v.longest_prefix().cloned(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let count = |f: fn(&SeedOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count() as u64;
    Ok(ExtractReport {
        seeds: seeds.end - seeds.start,
        stable: count(|o| o.stable),
        converged: count(|o| o.converged),
        safe: count(|o| o.safe),
        required_rate: 0.95,
        outcomes,
    })
}

/// The end-to-end experiment: `n = 3`, `p3` crashes at 100, noisy Ω until
/// 300 with stable leader `p1`, budget `10^6` steps, tail windows `10^4`.
pub fn extraction_config() -> ExperimentConfig {
    ExperimentConfig {
        n: 3,
        crashes: vec![(ProcessId::new(3), 100)],
        t_stab: 300,
        leader: Some(ProcessId::new(1)),
        budget: 1_000_000,
        tail_window: 10_000,
        probe_tail: 10_000,
        ..ExperimentConfig::default()
    }
}
