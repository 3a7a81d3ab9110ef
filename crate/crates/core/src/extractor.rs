//! Extracting Ω: every process explores schedules of the two simulators
//! depth-first, running solo probes, and outputs the simulated process that
//! appears least often in the probe it is currently running.
//!
//! For each input vector `J` (in the order `(0,0), (0,1), (1,0), (1,1)`),
//! `explore(J, σ)` first runs `q1` solo from `σ` until some simulated process
//! decides, then `q2` solo likewise, then recurses into `σ·q1` and `σ·q2`.
//! Prefixes in which a simulated process already decided are not entered.
//! Eventually some solo probe never decides; it is 1-resilient, and the one
//! simulated process it starves is a correct process that the explorer keeps
//! outputting.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::Serialize;

use crate::bgsim::{BgState, MacroOutcome, SimId};
use crate::dag::{check_dag_properties, snapshots, CommProcess, DagReport, DagView};
use crate::detectors::{make_omega, stabilized_leader, OmegaSpec};
use crate::error::{Error, Result};
use crate::sim::{
    Automaton, Bit, ConsPort, Env, FailurePattern, OpRequest, Process, ProcessId, Response, RunStats, Scheduler,
    SchedulerMode, System, Time,
};

/// Input vectors of the two simulators, in exploration order.
pub const INPUT_VECTORS: [[Bit; 2]; 4] = [[0, 0], [0, 1], [1, 0], [1, 1]];

/// The process id occurring least often in `counts` (ties go to the smaller
/// id); all-zero counts give `p1`.
pub fn least_appearing(counts: &[u64]) -> ProcessId {
    let (i, _) = counts
        .iter()
        .enumerate()
        .min_by_key(|&(i, &c)| (c, i))
        .expect("at least one process");
    ProcessId::from_index(i)
}

/// [`least_appearing`] over a schedule of 0-based process indices.
pub fn least_appearing_in(n: usize, sch: &[u16]) -> ProcessId {
    let mut counts = vec![0u64; n];
    for &p in sch {
        counts[p as usize] += 1;
    }
    least_appearing(&counts)
}

/// `σ` rendered as a string of `1`s and `2`s.
pub fn sigma_text(sigma: &[u8]) -> String {
    sigma.iter().map(|&s| char::from(b'0' + s)).collect()
}

/// `ST(J, σ)` and `SCH(J, σ)` after replaying `σ` from the initial state.
pub fn replay<A: Automaton>(
    algo: &A,
    n: usize,
    inputs: [Bit; 2],
    sigma: &[u8],
    view: &DagView<'_>,
    port: &mut dyn ConsPort,
) -> Result<BgState<A>> {
    let sims = sigma.iter().map(|&s| SimId::from_symbol(s)).collect::<Result<Vec<_>>>()?;
    let mut state = BgState::new(algo.clone(), n, inputs);
    for (at, q) in sims.into_iter().enumerate() {
        if crate::bgsim::bg_macro_step(&mut state, q, view, port)? == MacroOutcome::Stalled {
            return Err(Error::ReplayStalled { at });
        }
    }
    Ok(state)
}

/// One unit of exploration work, as written to the probe log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProbeRecord {
    pub t: Time,
    pub proc: ProcessId,
    #[serde(rename = "J")]
    pub j: [Bit; 2],
    pub sigma: String,
    pub qj: String,
    pub rho_len: u64,
    pub omega_out: ProcessId,
    pub decided: bool,
    pub kind: UnitKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    /// A solo probe advanced.
    Probe,
    /// The prefix `σ·q` was computed.
    Extend,
    /// The local DAG lacked a vertex; nothing changed.
    Stall,
    /// Every exploration returned.
    Idle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Stage {
    Probe(SimId),
    Child(SimId),
    Done,
}

#[derive(Clone, Debug)]
struct Frame<A: Automaton> {
    sigma: Vec<u8>,
    state: BgState<A>,
    stage: Stage,
}

#[derive(Clone, Debug)]
struct Probe<A: Automaton> {
    q: SimId,
    state: BgState<A>,
    rho_len: u64,
}

#[derive(Clone, Debug)]
enum InFlight<A: Automaton> {
    Probe,
    Child(SimId, BgState<A>),
}

/// What a work unit needs from the outside.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnitStart {
    /// The unit finished locally.
    Local,
    /// The unit ends with this consensus access; pass the answer to
    /// [`Explorer::finish_unit`].
    Cons(crate::sim::ConsKey, Bit),
}

/// The depth-first exploration, one macro-step per work unit.
#[derive(Clone, Debug)]
pub struct Explorer<A: Automaton> {
    algo: A,
    n: usize,
    next_j: usize,
    j: [Bit; 2],
    stack: Vec<Frame<A>>,
    probe: Option<Probe<A>>,
    in_flight: Option<InFlight<A>>,
    omega: ProcessId,
    units: u64,
    safety_violations: u64,
    last: Option<LastUnit>,
}

#[derive(Clone, Debug)]
struct LastUnit {
    kind: UnitKind,
    q: SimId,
    sigma: Vec<u8>,
    rho_len: u64,
    decided: bool,
}

impl<A: Automaton> Explorer<A> {
    /// `me` is the initial output.
    pub fn new(algo: A, n: usize, me: ProcessId) -> Self {
        Self {
            algo,
            n,
            next_j: 0,
            j: INPUT_VECTORS[0],
            stack: Vec::new(),
            probe: None,
            in_flight: None,
            omega: me,
            units: 0,
            safety_violations: 0,
            last: None,
        }
    }

    pub fn omega(&self) -> ProcessId {
        self.omega
    }

    pub fn units(&self) -> u64 {
        self.units
    }

    /// Simulated runs in which decisions disagreed or were not inputs.
    pub fn safety_violations(&self) -> u64 {
        self.safety_violations
    }

    pub fn inputs(&self) -> [Bit; 2] {
        self.j
    }

    pub fn sigma(&self) -> &[u8] {
        self.stack.last().map(|f| f.sigma.as_slice()).unwrap_or(&[])
    }

    pub fn depth(&self) -> usize {
        self.stack.len()
    }

    /// The running probe: simulator and `|ρ|`.
    pub fn current_probe(&self) -> Option<(SimId, u64)> {
        self.probe.as_ref().map(|p| (p.q, p.rho_len))
    }

    pub fn probe_state(&self) -> Option<&BgState<A>> {
        self.probe.as_ref().map(|p| &p.state)
    }

    /// Starts a work unit against the local DAG `view`.
    pub fn begin_unit(&mut self, view: &DagView<'_>) -> Result<UnitStart> {
        if self.in_flight.is_some() {
            return Err(Error::SafeAgreementMisuse("work unit started twice".into()));
        }
        loop {
            let Some(top) = self.stack.last_mut() else {
                if self.next_j == INPUT_VECTORS.len() {
                    self.note(UnitKind::Idle, SimId::Q1, 0, false);
                    self.units += 1;
                    return Ok(UnitStart::Local);
                }
                self.j = INPUT_VECTORS[self.next_j];
                self.next_j += 1;
                let state = BgState::new(self.algo.clone(), self.n, self.j);
                self.stack.push(Frame { sigma: Vec::new(), state, stage: Stage::Probe(SimId::Q1) });
                continue;
            };
            match top.stage {
                Stage::Done => {
                    self.stack.pop();
                }
                Stage::Probe(q) => {
                    let probe = self.probe.get_or_insert_with(|| Probe { q, state: top.state.clone(), rho_len: 0 });
                    return match probe.state.begin(q, view)? {
                        MacroOutcome::Stalled => {
                            let rho = probe.rho_len;
                            self.note(UnitKind::Stall, q, rho, false);
                            self.units += 1;
                            Ok(UnitStart::Local)
                        }
                        MacroOutcome::NeedCons(key, u) => {
                            self.in_flight = Some(InFlight::Probe);
                            Ok(UnitStart::Cons(key, u))
                        }
                        MacroOutcome::Done => {
                            self.after_probe_step();
                            Ok(UnitStart::Local)
                        }
                    };
                }
                Stage::Child(q) => {
                    let mut child = top.state.clone();
                    return match child.begin(q, view)? {
                        MacroOutcome::Stalled => {
                            self.note(UnitKind::Stall, q, 0, false);
                            self.units += 1;
                            Ok(UnitStart::Local)
                        }
                        MacroOutcome::NeedCons(key, u) => {
                            self.in_flight = Some(InFlight::Child(q, child));
                            Ok(UnitStart::Cons(key, u))
                        }
                        MacroOutcome::Done => {
                            self.after_child(q, child);
                            Ok(UnitStart::Local)
                        }
                    };
                }
            }
        }
    }

    /// Completes a unit that ended in a consensus access.
    pub fn finish_unit(&mut self, answer: Bit) -> Result<()> {
        match self.in_flight.take() {
            Some(InFlight::Probe) => {
                self.probe.as_mut().expect("probe in flight").state.finish_cons(answer)?;
                self.after_probe_step();
            }
            Some(InFlight::Child(q, mut child)) => {
                child.finish_cons(answer)?;
                self.after_child(q, child);
            }
            None => return Err(Error::SafeAgreementMisuse("no work unit in flight".into())),
        }
        Ok(())
    }

    /// Runs one whole unit, answering consensus through `port`.
    pub fn step(&mut self, view: &DagView<'_>, port: &mut dyn ConsPort) -> Result<()> {
        if let UnitStart::Cons(key, u) = self.begin_unit(view)? {
            self.finish_unit(port.propose(key, u))?;
        }
        Ok(())
    }

    fn note(&mut self, kind: UnitKind, q: SimId, rho_len: u64, decided: bool) {
        let sigma = self.sigma().to_vec();
        self.last = Some(LastUnit { kind, q, sigma, rho_len, decided });
    }

    fn after_probe_step(&mut self) {
        self.units += 1;
        let probe = self.probe.as_mut().expect("probe running");
        probe.rho_len += 1;
        self.omega = least_appearing(probe.state.counts());
        let (q, rho, decided) = (probe.q, probe.rho_len, probe.state.decided());
        self.note(UnitKind::Probe, q, rho, decided);
        let probe = self.probe.as_mut().expect("probe running");
        if probe.state.decided() {
            if probe.state.safety_violation() {
                self.safety_violations += 1;
            }
            let q = probe.q;
            self.probe = None;
            let top = self.stack.last_mut().expect("probe belongs to a frame");
            top.stage = if q == SimId::Q1 { Stage::Probe(SimId::Q2) } else { Stage::Child(SimId::Q1) };
        }
    }

    fn after_child(&mut self, q: SimId, child: BgState<A>) {
        self.units += 1;
        self.note(UnitKind::Extend, q, 0, child.decided());
        let top = self.stack.last_mut().expect("child belongs to a frame");
        top.stage = if q == SimId::Q1 { Stage::Child(SimId::Q2) } else { Stage::Done };
        if child.decided() {
            if child.safety_violation() {
                self.safety_violations += 1;
            }
            return;
        }
        let mut sigma = top.sigma.clone();
        sigma.push(q.symbol());
        self.stack.push(Frame { sigma, state: child, stage: Stage::Probe(SimId::Q1) });
    }

    /// Describes the unit that just completed.
    pub fn record(&self, t: Time, proc: ProcessId) -> ProbeRecord {
        let idle = LastUnit { kind: UnitKind::Idle, q: SimId::Q1, sigma: Vec::new(), rho_len: 0, decided: false };
        let last = self.last.as_ref().unwrap_or(&idle);
        ProbeRecord {
            t,
            proc,
            j: self.j,
            sigma: sigma_text(&last.sigma),
            qj: last.q.to_string(),
            rho_len: last.rho_len,
            omega_out: self.omega,
            decided: last.decided,
            kind: last.kind,
        }
    }
}

/// Probe records whose prefix stays put while `ρ` keeps growing: the
/// explorer sits in one never-deciding solo probe.
pub fn probes_converged(records: &[ProbeRecord]) -> bool {
    let Some(first) = records.first() else { return false };
    let last = records.last().expect("non-empty");
    records.iter().all(|r| {
        r.j == first.j && r.sigma == first.sigma && r.qj == first.qj && !r.decided && r.kind != UnitKind::Extend
    }) && records.windows(2).all(|w| w[0].rho_len <= w[1].rho_len)
        && last.rho_len > first.rho_len
}

/// A real process of the reduction: after each step of the communication
/// component it runs `explore_ratio` exploration work units.
#[derive(Clone, Debug)]
pub struct ReductionProcess<A: Automaton> {
    me: ProcessId,
    comm: CommProcess,
    explorer: Explorer<A>,
    explore_ratio: u32,
    /// Position in the comm/explore cycle; 0 is the comm step.
    phase: u32,
    exploring: bool,
    outputs: Vec<ProcessId>,
    tail: VecDeque<ProbeRecord>,
    tail_cap: usize,
}

impl<A: Automaton> ReductionProcess<A> {
    pub fn new(algo: A, me: ProcessId, n: usize, explore_ratio: u32, tail_cap: usize) -> Self {
        Self {
            me,
            comm: CommProcess::new(me, n),
            explorer: Explorer::new(algo, n, me),
            explore_ratio,
            phase: 0,
            exploring: false,
            outputs: Vec::new(),
            tail: VecDeque::with_capacity(tail_cap.min(1 << 16)),
            tail_cap,
        }
    }

    pub fn explorer(&self) -> &Explorer<A> {
        &self.explorer
    }

    pub fn comm(&self) -> &CommProcess {
        &self.comm
    }

    /// The extracted output after each of this process's steps.
    pub fn outputs(&self) -> &[ProcessId] {
        &self.outputs
    }

    /// The most recent probe-log records.
    pub fn probe_tail(&self) -> &VecDeque<ProbeRecord> {
        &self.tail
    }
}

impl<A: Automaton> Process for ReductionProcess<A> {
    fn next_op(&mut self, env: &Env<'_>) -> OpRequest {
        self.exploring = self.phase > 0;
        self.phase = (self.phase + 1) % (self.explore_ratio + 1);
        if !self.exploring {
            return self.comm.next_request();
        }
        let view = env.vertices.view(self.comm.local());
        match self.explorer.begin_unit(&view).expect("exploration follows the model") {
            UnitStart::Local => OpRequest::Local,
            UnitStart::Cons(key, u) => OpRequest::Cons(key, u),
        }
    }

    fn complete(&mut self, op: &OpRequest, response: Response, env: &Env<'_>) {
        if self.exploring {
            if let (OpRequest::Cons(..), Response::Cons(b)) = (op, &response) {
                self.explorer.finish_unit(*b).expect("unit in flight");
            }
            if self.tail_cap > 0 {
                if self.tail.len() == self.tail_cap {
                    self.tail.pop_front();
                }
                self.tail.push_back(self.explorer.record(env.t, self.me));
            }
        } else {
            self.comm.on_response(response, env.t);
        }
        self.outputs.push(self.explorer.omega());
    }
}

/// Parameters of an end-to-end reduction run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionConfig {
    pub n: usize,
    pub pattern: FailurePattern,
    pub omega: OmegaSpec,
    pub scheduler: SchedulerMode,
    pub budget: u64,
    /// Exploration work units per communication step.
    pub explore_ratio: u32,
    /// Final window (in own steps) over which outputs must agree.
    pub tail: usize,
    /// Probe records kept per process.
    pub probe_tail: usize,
    /// Keep the event-loop trace (and check DAG snapshots against it).
    pub keep_trace: bool,
}

/// Outcome of [`run_reduction`].
#[derive(Clone, Debug, Serialize)]
pub struct ReductionVerdict {
    pub steps: u64,
    /// The common correct output of every correct process over the tail.
    pub leader: Option<ProcessId>,
    pub stable: bool,
    /// Correct processes whose probe-log tail sits in one growing probe.
    pub converged: Vec<ProcessId>,
    pub dag_safety: bool,
    pub simulated_safety_violations: u64,
    pub explorer_units: Vec<u64>,
    pub cons_objects: usize,
    /// Where each correct process's exploration stands at the end.
    pub prefixes: Vec<PrefixDiagnosis>,
}

/// The explored prefix of one process when the run ended.
#[derive(Clone, Debug, Serialize)]
pub struct PrefixDiagnosis {
    pub proc: ProcessId,
    #[serde(rename = "J")]
    pub j: [Bit; 2],
    pub sigma_len: usize,
    /// The first 64 symbols of `σ`.
    pub sigma_head: String,
    pub depth: usize,
}

impl ReductionVerdict {
    /// The deepest prefix any correct process reached.
    pub fn longest_prefix(&self) -> Option<&PrefixDiagnosis> {
        self.prefixes.iter().max_by_key(|d| d.sigma_len)
    }

    pub fn ok(&self) -> bool {
        self.stable && self.dag_safety && self.simulated_safety_violations == 0
    }
}

pub struct ReductionRun<A: Automaton> {
    pub system: System<ReductionProcess<A>>,
    pub stats: RunStats,
    pub verdict: ReductionVerdict,
    pub dag: DagReport,
}

/// Runs the reduction: every process builds the DAG and explores.
pub fn run_reduction<A: Automaton>(algo: A, config: &ReductionConfig) -> Result<ReductionRun<A>> {
    let n = config.n;
    if config.explore_ratio == 0 {
        return Err(Error::Config("explore_ratio must be positive".into()));
    }
    if config.pattern.n() != n {
        return Err(Error::Config(format!("pattern has {} processes, expected {n}", config.pattern.n())));
    }
    let history = Arc::new(make_omega(&config.pattern, &config.omega)?);
    let procs = ProcessId::all(n).map(|p| ReductionProcess::new(algo.clone(), p, n, config.explore_ratio, config.probe_tail)).collect();
    let mut system = System::new(config.pattern.clone(), history.clone(), procs)?;
    if !config.keep_trace {
        system = system.without_trace();
    }
    let mut sched = Scheduler::new(n, config.scheduler, Some(3 * n as u64));
    let stats = system.run(&mut sched, config.budget)?;

    let outputs: Vec<Vec<ProcessId>> = system.procs().iter().map(|p| p.outputs().to_vec()).collect();
    let leader = stabilized_leader(&outputs, &config.pattern, config.tail)?;
    let converged = config
        .pattern
        .correct()
        .into_iter()
        .filter(|&p| {
            let tail: Vec<ProbeRecord> = system.proc(p).probe_tail().iter().cloned().collect();
            probes_converged(&tail)
        })
        .collect();
    let dag = check_dag_properties(system.vertices(), &snapshots(system.steps()), &config.pattern, history.as_ref());
    let verdict = ReductionVerdict {
        steps: stats.steps,
        leader,
        stable: leader.is_some(),
        converged,
        dag_safety: dag.safety_ok(),
        simulated_safety_violations: system.procs().iter().map(|p| p.explorer().safety_violations()).sum(),
        explorer_units: system.procs().iter().map(|p| p.explorer().units()).collect(),
        cons_objects: system.cons().len(),
        prefixes: config
            .pattern
            .correct()
            .into_iter()
            .map(|p| {
                let ex = system.proc(p).explorer();
                let text = sigma_text(ex.sigma());
                PrefixDiagnosis {
                    proc: p,
                    j: ex.inputs(),
                    sigma_len: ex.sigma().len(),
                    sigma_head: text.chars().take(64).collect(),
                    depth: ex.depth(),
                }
            })
            .collect(),
    };
    Ok(ReductionRun { system, stats, verdict, dag })
}

/// The exploration written as plain recursion, stopping after `budget`
/// macro-steps. Returns the probe records in order; used to cross-check
/// [`Explorer`].
pub fn reference_explore<A: Automaton>(
    algo: &A,
    n: usize,
    view: &DagView<'_>,
    port: &mut dyn ConsPort,
    budget: u64,
) -> Result<Vec<ProbeRecord>> {
    struct Ctx<'a, 'v> {
        view: &'a DagView<'v>,
        port: &'a mut dyn ConsPort,
        left: u64,
        out: Vec<ProbeRecord>,
    }
    struct OutOfBudget;

    fn step<A: Automaton>(ctx: &mut Ctx<'_, '_>, st: &mut BgState<A>, q: SimId) -> Result<std::result::Result<(), OutOfBudget>> {
        if ctx.left == 0 {
            return Ok(Err(OutOfBudget));
        }
        ctx.left -= 1;
        let outcome = crate::bgsim::bg_macro_step(st, q, ctx.view, ctx.port)?;
        assert_ne!(outcome, MacroOutcome::Stalled, "reference exploration needs a complete view");
        Ok(Ok(()))
    }

    fn explore<A: Automaton>(
        ctx: &mut Ctx<'_, '_>,
        j: [Bit; 2],
        sigma: &mut Vec<u8>,
        state: &BgState<A>,
    ) -> Result<std::result::Result<(), OutOfBudget>> {
        if state.decided() {
            return Ok(Ok(()));
        }
        for q in SimId::BOTH {
            let mut probe = state.clone();
            let mut rho = 0;
            loop {
                if let Err(e) = step(ctx, &mut probe, q)? {
                    return Ok(Err(e));
                }
                rho += 1;
                ctx.out.push(ProbeRecord {
                    t: 0,
                    proc: ProcessId::new(1),
                    j,
                    sigma: sigma_text(sigma),
                    qj: q.to_string(),
                    rho_len: rho,
                    omega_out: least_appearing(probe.counts()),
                    decided: probe.decided(),
                    kind: UnitKind::Probe,
                });
                if probe.decided() {
                    break;
                }
            }
        }
        for q in SimId::BOTH {
            let mut child = state.clone();
            if let Err(e) = step(ctx, &mut child, q)? {
                return Ok(Err(e));
            }
            sigma.push(q.symbol());
            let r = explore(ctx, j, sigma, &child)?;
            sigma.pop();
            if r.is_err() {
                return Ok(r);
            }
        }
        Ok(Ok(()))
    }

    let mut ctx = Ctx { view, port, left: budget, out: Vec::new() };
    for j in INPUT_VECTORS {
        let root = BgState::new(algo.clone(), n, j);
        if explore(&mut ctx, j, &mut Vec::new(), &root)?.is_err() {
            break;
        }
    }
    Ok(ctx.out)
}
