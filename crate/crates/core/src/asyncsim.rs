//! The detector-free simulation: each process runs an automaton `A`, taking
//! its detector values from DAG vertices instead of a detector.
//!
//! Per simulated step of `A`, process `i` collects `V_1..V_n`, then looks for
//! its next own vertex `[i, d, ℓ]`. Waiting for that vertex goes through
//! consensus objects `cons[i, ℓ, r]` for `r = 1, 2, …`, proposing 1 iff the
//! local DAG already holds the vertex; every process that ever simulates this
//! wait therefore loops exactly the same number of times. A vertex that does
//! not succeed every collected `U[j]` is skipped (`ℓ` advances). The chosen
//! vertex is published in `V_i` and `A` takes one step with `d` as its
//! detector value.
//!
//! [`AsimProc`] is the per-process state machine. It is driven either by the
//! event loop directly ([`AsimRunner`], used by [`run_simulation`], which runs
//! A' next to the DAG builders) or by the two BG simulators in [`crate::bgsim`].

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use crate::dag::{CommProcess, DagView, Snapshot, VertexId, VertexStore};
use crate::detectors::{make_omega, History, OmegaHistory, OmegaSpec};
use crate::error::{Error, Result};
use crate::sim::{
    Automaton, Bit, ConsKey, Env, FailurePattern, OpRequest, Process, ProcessId, RegKey, Response, Scheduler,
    Slot, System, Time, Value,
};

/// The next thing a simulated process does.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AsimAction {
    /// Obtain the input value of `A`.
    Input,
    /// Read `V_j`.
    ReadV(ProcessId),
    /// One access of the wait loop's consensus object.
    Cons(ConsKey, Bit),
    /// Publish the vertex used for the coming step of `A`.
    WriteV(VertexId),
    /// One step of `A`; a query is answered with `d`.
    AStep { op: OpRequest, vertex: VertexId, d: ProcessId },
    /// Consensus says the vertex exists but the local DAG does not have it yet.
    Stall,
}

impl AsimAction {
    /// Whether the outcome depends on the schedule (and so must be agreed on
    /// when several simulators run the process).
    pub fn needs_agreement(&self) -> bool {
        match self {
            AsimAction::Input | AsimAction::ReadV(_) | AsimAction::Cons(..) => true,
            AsimAction::AStep { op, .. } => matches!(op, OpRequest::Read(_)),
            AsimAction::WriteV(_) | AsimAction::Stall => false,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AsimAction::Input => "input",
            AsimAction::ReadV(_) => "read-v",
            AsimAction::Cons(..) => "cons",
            AsimAction::WriteV(_) => "write-v",
            AsimAction::AStep { op, .. } => match op {
                OpRequest::Read(_) => "a-read",
                OpRequest::Write(..) => "a-write",
                OpRequest::Query => "a-query",
                OpRequest::Decide(_) => "a-decide",
                _ => "a-local",
            },
            AsimAction::Stall => "stall",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Phase {
    Init,
    Collect(usize),
    Wait,
    /// The wait loop returned 1 for the current `ℓ`.
    Found,
    WriteV(VertexId),
    AStep(VertexId),
}

/// One simulated step of `A`, with the vertex that supplied its detector value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AStepRecord<S> {
    pub proc: ProcessId,
    pub op: OpRequest,
    pub response: Response,
    pub vertex: VertexId,
    pub d: ProcessId,
    pub sample_time: Time,
    pub state_after: S,
}

/// State of one simulated process `p'_i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AsimProc<A: Automaton> {
    algo: A,
    me: ProcessId,
    n: usize,
    inner: Option<A::State>,
    ell: u64,
    r: u64,
    u: Vec<Option<VertexId>>,
    phase: Phase,
    steps: u64,
    a_steps: u64,
}

impl<A: Automaton> AsimProc<A> {
    pub fn new(algo: A, me: ProcessId, n: usize) -> Self {
        Self {
            algo,
            me,
            n,
            inner: None,
            ell: 0,
            r: 0,
            u: vec![None; n],
            phase: Phase::Init,
            steps: 0,
            a_steps: 0,
        }
    }

    pub fn me(&self) -> ProcessId {
        self.me
    }

    /// The simulated state of `A`, once the input is known.
    pub fn inner(&self) -> Option<&A::State> {
        self.inner.as_ref()
    }

    pub fn decision(&self) -> Option<Bit> {
        self.inner.as_ref().and_then(|s| self.algo.decision(s))
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }

    /// Steps of this process taken so far, cons accesses included.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn a_steps(&self) -> u64 {
        self.a_steps
    }

    fn candidate(&self) -> VertexId {
        VertexId::new(self.me, self.ell as u32)
    }

    /// Settles local bookkeeping and returns the next action.
    ///
    /// Only a process whose wait just ended can stall; everything else is a
    /// pure function of the state.
    pub fn next_action(&mut self, view: &DagView<'_>) -> AsimAction {
        if self.phase == Phase::Found {
            let v = self.candidate();
            if !view.contains(v) {
                return AsimAction::Stall;
            }
            let others: Vec<VertexId> = self.u.iter().flatten().copied().collect();
            debug_assert!(!others.contains(&v), "collected vertex equals the candidate");
            if view.dominates(v, others) {
                self.phase = Phase::WriteV(v);
            } else {
                self.ell += 1;
                self.r = 1;
                self.phase = Phase::Wait;
            }
        }
        self.action(view)
    }

    fn action(&self, view: &DagView<'_>) -> AsimAction {
        match self.phase {
            Phase::Init => AsimAction::Input,
            Phase::Collect(j) => AsimAction::ReadV(ProcessId::from_index(j)),
            Phase::Wait => {
                let key = ConsKey { proc: self.me, ell: self.ell, r: self.r };
                AsimAction::Cons(key, view.contains(self.candidate()) as Bit)
            }
            Phase::Found => AsimAction::Stall,
            Phase::WriteV(v) => AsimAction::WriteV(v),
            Phase::AStep(v) => {
                let d = view.vertex(v).expect("used vertex stays in the DAG").d;
                let inner = self.inner.as_ref().expect("input precedes steps");
                AsimAction::AStep { op: self.algo.pending(inner), vertex: v, d }
            }
        }
    }

    /// Applies the outcome of the action last returned by
    /// [`next_action`](Self::next_action).
    pub fn apply(&mut self, response: Response, view: &DagView<'_>) -> Result<Option<AStepRecord<A::State>>> {
        let bad = |msg: String| Error::SimModel { proc: self.me, msg };
        let mut record = None;
        self.phase = match (self.phase, response) {
            (Phase::Init, Response::Value(Value::Int(b))) if (0..=1).contains(&b) => {
                self.inner = Some(self.algo.init(self.me, b as Bit));
                Phase::Collect(0)
            }
            (Phase::Collect(j), Response::Value(v)) => {
                self.u[j] = match v {
                    Value::Bot => None,
                    Value::Vertex(id) => Some(id),
                    other => return Err(bad(format!("V_{} holds {other:?}", j + 1))),
                };
                if j + 1 < self.n {
                    Phase::Collect(j + 1)
                } else {
                    self.ell += 1;
                    self.r = 1;
                    Phase::Wait
                }
            }
            (Phase::Wait, Response::Cons(b)) => {
                if b == 1 {
                    Phase::Found
                } else {
                    self.r += 1;
                    Phase::Wait
                }
            }
            (Phase::WriteV(v), Response::Ack) => Phase::AStep(v),
            (Phase::AStep(v), response) => {
                let vertex = view.vertex(v).ok_or_else(|| bad(format!("vertex {v:?} left the view")))?;
                let inner = self.inner.as_ref().expect("input precedes steps");
                let op = self.algo.pending(inner);
                let response = match op {
                    OpRequest::Query => Response::Detector(vertex.d),
                    _ => response,
                };
                let next = self.algo.next(inner, &response);
                record = Some(AStepRecord {
                    proc: self.me,
                    op,
                    response,
                    vertex: v,
                    d: vertex.d,
                    sample_time: vertex.sample_time,
                    state_after: next.clone(),
                });
                self.inner = Some(next);
                self.a_steps += 1;
                Phase::Collect(0)
            }
            (phase, response) => return Err(bad(format!("{response:?} does not fit {phase:?}"))),
        };
        self.steps += 1;
        Ok(record)
    }
}

/// Runs an [`AsimProc`] as an event-loop process at position `me` while
/// simulating `p'_i`; registers of `A` and `V` are moved to owner `me`.
///
/// The DAG it waits on is the union of everything published so far.
#[derive(Clone, Debug)]
pub struct AsimRunner<A: Automaton> {
    sim: AsimProc<A>,
    input: Bit,
    offset: u32,
    pending: Option<AsimAction>,
    records: Vec<(Time, AStepRecord<A::State>)>,
}

impl<A: Automaton> AsimRunner<A> {
    /// `offset` is added to the owner of every simulated register.
    pub fn new(algo: A, sim_proc: ProcessId, n: usize, input: Bit, offset: u32) -> Self {
        Self {
            sim: AsimProc::new(algo, sim_proc, n),
            input,
            offset,
            pending: None,
            records: Vec::new(),
        }
    }

    pub fn sim(&self) -> &AsimProc<A> {
        &self.sim
    }

    /// Executed `A` steps with their event-loop times.
    pub fn records(&self) -> &[(Time, AStepRecord<A::State>)] {
        &self.records
    }

    fn shift(&self, reg: RegKey) -> RegKey {
        RegKey::new(ProcessId::new(reg.owner.get() + self.offset), reg.slot)
    }

    fn v_reg(&self, j: ProcessId) -> RegKey {
        self.shift(RegKey::new(j, Slot::V))
    }
}

impl<A: Automaton> Process for AsimRunner<A> {
    fn next_op(&mut self, env: &Env<'_>) -> OpRequest {
        let all = env.vertices.frontier();
        let action = self.sim.next_action(&env.vertices.view(&all));
        let op = match &action {
            AsimAction::Input | AsimAction::Stall => OpRequest::Local,
            AsimAction::ReadV(j) => OpRequest::Read(self.v_reg(*j)),
            AsimAction::Cons(key, u) => OpRequest::Cons(*key, *u),
            AsimAction::WriteV(v) => OpRequest::Write(self.v_reg(self.sim.me()), Value::Vertex(*v)),
            AsimAction::AStep { op, .. } => match op {
                OpRequest::Read(reg) => OpRequest::Read(self.shift(*reg)),
                OpRequest::Write(reg, v) => OpRequest::Write(self.shift(*reg), v.clone()),
                OpRequest::Decide(b) => OpRequest::Decide(*b),
                _ => OpRequest::Local,
            },
        };
        self.pending = Some(action);
        op
    }

    fn complete(&mut self, _op: &OpRequest, response: Response, env: &Env<'_>) {
        let action = self.pending.take().expect("complete follows next_op");
        let response = match action {
            AsimAction::Stall => return,
            AsimAction::Input => Response::Value(Value::Int(self.input as i64)),
            _ => response,
        };
        let all = env.vertices.frontier();
        match self.sim.apply(response, &env.vertices.view(&all)) {
            Ok(Some(rec)) => self.records.push((env.t, rec)),
            Ok(None) => {}
            Err(e) => panic!("{e}"),
        }
    }

    fn input(&self) -> Option<Bit> {
        Some(self.input)
    }

    fn decision(&self) -> Option<Bit> {
        self.sim.decision()
    }
}

/// History for the mixed system: Ω over the first `n` positions; the
/// simulating processes never query.
#[derive(Debug)]
struct CommOnly {
    inner: OmegaHistory,
    n: usize,
}

impl History for CommOnly {
    fn n(&self) -> usize {
        2 * self.n
    }

    fn sample(&self, p: ProcessId, t: Time) -> ProcessId {
        assert!(p.index() < self.n, "{p} is not a DAG-building process");
        self.inner.sample(p, t)
    }
}

/// A process of the mixed system.
#[derive(Clone, Debug)]
pub enum MixedProc<A: Automaton> {
    Comm(CommProcess),
    Sim(AsimRunner<A>),
}

impl<A: Automaton> Process for MixedProc<A> {
    fn next_op(&mut self, env: &Env<'_>) -> OpRequest {
        match self {
            MixedProc::Comm(c) => c.next_op(env),
            MixedProc::Sim(s) => s.next_op(env),
        }
    }

    fn complete(&mut self, op: &OpRequest, response: Response, env: &Env<'_>) {
        match self {
            MixedProc::Comm(c) => c.complete(op, response, env),
            MixedProc::Sim(s) => s.complete(op, response, env),
        }
    }

    fn input(&self) -> Option<Bit> {
        match self {
            MixedProc::Comm(_) => None,
            MixedProc::Sim(s) => s.input(),
        }
    }

    fn decision(&self) -> Option<Bit> {
        match self {
            MixedProc::Comm(_) => None,
            MixedProc::Sim(s) => s.decision(),
        }
    }
}

/// A run of the simulation next to the DAG it consumes: positions `1..=n`
/// build the DAG under pattern `f`, positions `n+1..=2n` simulate
/// `p'_1..p'_n` under pattern `f_sim`.
#[derive(Clone, Debug)]
pub struct SimulationConfig {
    pub n: usize,
    pub f: FailurePattern,
    pub f_sim: FailurePattern,
    pub omega: OmegaSpec,
    pub inputs: Vec<Bit>,
    pub seed: u64,
    pub budget: u64,
    /// Number of final `A` steps that count as "infinitely often".
    pub tail: usize,
}

pub struct SimulationRun<A: Automaton> {
    pub config: SimulationConfig,
    pub system: System<MixedProc<A>>,
    pub records: Vec<(Time, AStepRecord<A::State>)>,
}

impl<A: Automaton> SimulationRun<A> {
    pub fn snapshots(&self) -> Vec<Snapshot> {
        crate::dag::snapshots(self.system.steps())
    }
}

pub fn run_simulation<A: Automaton>(algo: A, config: SimulationConfig) -> Result<SimulationRun<A>> {
    let n = config.n;
    if config.f.n() != n || config.f_sim.n() != n || config.inputs.len() != n {
        return Err(Error::Config("pattern and input sizes must equal n".into()));
    }
    config.f_sim.validate()?;
    let mut mixed = FailurePattern::new(2 * n);
    for (p, t) in config.f.crashes() {
        mixed.set_crash(p, t)?;
    }
    for (p, t) in config.f_sim.crashes() {
        mixed.set_crash(ProcessId::new(p.get() + n as u32), t)?;
    }
    let history = CommOnly { inner: make_omega(&config.f, &config.omega)?, n };
    let mut procs: Vec<MixedProc<A>> = ProcessId::all(n).map(|p| MixedProc::Comm(CommProcess::new(p, n))).collect();
    for (i, p) in ProcessId::all(n).enumerate() {
        procs.push(MixedProc::Sim(AsimRunner::new(algo.clone(), p, n, config.inputs[i], n as u32)));
    }
    let mut system = System::new(mixed, Arc::new(history), procs)?;
    system.run(&mut Scheduler::seeded(2 * n, config.seed), config.budget)?;
    let mut records: Vec<(Time, AStepRecord<A::State>)> = system
        .procs()
        .iter()
        .filter_map(|p| match p {
            MixedProc::Sim(s) => Some(s.records().iter().cloned()),
            MixedProc::Comm(_) => None,
        })
        .flatten()
        .collect();
    records.sort_by_key(|(t, _)| *t);
    Ok(SimulationRun { config, system, records })
}

/// Verdict of [`validate_simulation`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimulationReport {
    /// Index of the first record that the legality replay rejects.
    pub legality_divergence: Option<usize>,
    /// Index of the first query whose vertex is not newer than a causally
    /// preceding query's vertex.
    pub temporal_violation: Option<usize>,
    /// Simulated processes with a step among the final `tail` records.
    pub participating: BTreeSet<ProcessId>,
    /// `correct(f) ∩ correct(f_sim)`.
    pub expected: BTreeSet<ProcessId>,
}

impl SimulationReport {
    pub fn legal(&self) -> bool {
        self.legality_divergence.is_none()
    }

    pub fn temporal_ok(&self) -> bool {
        self.temporal_violation.is_none()
    }

    pub fn participation_ok(&self) -> bool {
        self.participating == self.expected
    }

    pub fn ok(&self) -> bool {
        self.legal() && self.temporal_ok() && self.participation_ok()
    }
}

/// Checks that the simulated steps form a run of `A`: (a) replaying them
/// through fresh automata and atomic registers reproduces every response and
/// state; (b) whenever one query causally precedes another in the simulated
/// run, its vertex was sampled earlier; (c) the processes stepping in the
/// tail are exactly those correct in both patterns.
pub fn validate_simulation<A: Automaton>(
    algo: &A,
    inputs: &[Bit],
    records: &[AStepRecord<A::State>],
    store: &VertexStore,
    f: &FailurePattern,
    f_sim: &FailurePattern,
    tail: usize,
) -> SimulationReport {
    let n = inputs.len();
    let mut states: Vec<A::State> = ProcessId::all(n).map(|p| algo.init(p, inputs[p.index()])).collect();
    let mut mem: HashMap<RegKey, Value> = HashMap::new();
    let mut legality_divergence = None;
    for (k, rec) in records.iter().enumerate() {
        let state = &states[rec.proc.index()];
        let op = algo.pending(state);
        let vertex_ok = store
            .get(rec.vertex)
            .is_some_and(|v| v.proc == rec.proc && v.d == rec.d && v.sample_time == rec.sample_time);
        let response = match &op {
            OpRequest::Read(reg) => Response::Value(mem.get(reg).cloned().unwrap_or_default()),
            OpRequest::Write(reg, v) => {
                mem.insert(*reg, v.clone());
                Response::Ack
            }
            OpRequest::Query => Response::Detector(rec.d),
            _ => Response::Ack,
        };
        let next = algo.next(state, &response);
        if op != rec.op || response != rec.response || next != rec.state_after || !vertex_ok {
            legality_divergence = Some(k);
            break;
        }
        states[rec.proc.index()] = next;
    }

    // Latest sample time among queries causally preceding each process / register.
    let mut temporal_violation = None;
    let mut seen_proc: Vec<Option<Time>> = vec![None; n];
    let mut seen_reg: HashMap<RegKey, Option<Time>> = HashMap::new();
    for (k, rec) in records.iter().enumerate() {
        let i = rec.proc.index();
        match &rec.op {
            OpRequest::Read(reg) => {
                if let Some(&w) = seen_reg.get(reg) {
                    seen_proc[i] = seen_proc[i].max(w);
                }
            }
            OpRequest::Write(reg, _) => {
                let e = seen_reg.entry(*reg).or_default();
                *e = (*e).max(seen_proc[i]);
            }
            OpRequest::Query => {
                if seen_proc[i].is_some_and(|m| m >= rec.sample_time) && temporal_violation.is_none() {
                    temporal_violation = Some(k);
                }
                seen_proc[i] = seen_proc[i].max(Some(rec.sample_time));
            }
            _ => {}
        }
    }

    let participating = records[records.len().saturating_sub(tail)..].iter().map(|r| r.proc).collect();
    let expected = ProcessId::all(n).filter(|&p| f.is_correct(p) && f_sim.is_correct(p)).collect();
    SimulationReport { legality_divergence, temporal_violation, participating, expected }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::OmegaConsensus;
    use crate::dag::DagVertex;
    use crate::sim::{CausalOrder, Step, StepKind};

    fn pid(i: u32) -> ProcessId {
        ProcessId::new(i)
    }

    /// A store with hand-placed vertices; `preds` given as count vectors.
    fn store(n: usize, vertices: &[(u32, u32, Vec<u32>)]) -> VertexStore {
        let mut s = VertexStore::new(n);
        for (t, (p, d, preds)) in vertices.iter().enumerate() {
            s.append(DagVertex {
                proc: pid(*p),
                d: pid(*d),
                seq: 0,
                sample_time: t as Time,
                preds: crate::dag::Frontier::from_counts(preds.clone()),
            });
        }
        s
    }

    /// Drives `sim` through its collect with the given `V` contents.
    fn collect(sim: &mut AsimProc<OmegaConsensus>, view: &DagView<'_>, v: &[Value]) {
        for (j, val) in v.iter().enumerate() {
            assert_eq!(sim.next_action(view), AsimAction::ReadV(ProcessId::from_index(j)));
            sim.apply(Response::Value(val.clone()), view).unwrap();
        }
    }

    #[test]
    fn empty_collect_takes_first_vertex() {
        let s = store(2, &[(1, 2, vec![0, 0])]);
        let f = s.frontier();
        let view = s.view(&f);
        let mut sim = AsimProc::new(OmegaConsensus::new(2), pid(1), 2);
        assert_eq!(sim.next_action(&view), AsimAction::Input);
        sim.apply(Response::Value(Value::Int(1)), &view).unwrap();
        collect(&mut sim, &view, &[Value::Bot, Value::Bot]);
        let key = ConsKey { proc: pid(1), ell: 1, r: 1 };
        assert_eq!(sim.next_action(&view), AsimAction::Cons(key, 1));
        sim.apply(Response::Cons(1), &view).unwrap();
        let v = VertexId::new(pid(1), 1);
        assert_eq!(sim.next_action(&view), AsimAction::WriteV(v));
        sim.apply(Response::Ack, &view).unwrap();
        assert_eq!(
            sim.next_action(&view),
            AsimAction::AStep { op: OpRequest::Query, vertex: v, d: pid(2) }
        );
        let rec = sim.apply(Response::Ack, &view).unwrap().unwrap();
        assert_eq!(rec.response, Response::Detector(pid(2)));
        assert_eq!(sim.a_steps(), 1);
    }

    #[test]
    fn missing_vertex_proposes_zero_and_retries() {
        let s = store(2, &[(2, 2, vec![0, 0])]);
        let f = s.frontier();
        let view = s.view(&f);
        let mut sim = AsimProc::new(OmegaConsensus::new(2), pid(1), 2);
        sim.next_action(&view);
        sim.apply(Response::Value(Value::Int(0)), &view).unwrap();
        collect(&mut sim, &view, &[Value::Bot, Value::Bot]);
        assert_eq!(sim.next_action(&view), AsimAction::Cons(ConsKey { proc: pid(1), ell: 1, r: 1 }, 0));
        sim.apply(Response::Cons(0), &view).unwrap();
        assert_eq!(sim.next_action(&view), AsimAction::Cons(ConsKey { proc: pid(1), ell: 1, r: 2 }, 0));
    }

    #[test]
    fn non_dominating_vertex_is_skipped() {
        // [p1,·,1] does not see [p2,·,5]; [p1,·,2] does.
        let s = store(
            2,
            &[
                (1, 1, vec![0, 0]),
                (2, 1, vec![1, 0]),
                (2, 1, vec![1, 1]),
                (2, 1, vec![1, 2]),
                (2, 1, vec![1, 3]),
                (2, 1, vec![1, 4]),
                (1, 2, vec![1, 5]),
            ],
        );
        let f = s.frontier();
        let view = s.view(&f);
        let mut sim = AsimProc::new(OmegaConsensus::new(2), pid(1), 2);
        sim.next_action(&view);
        sim.apply(Response::Value(Value::Int(0)), &view).unwrap();
        collect(&mut sim, &view, &[Value::Bot, Value::Vertex(VertexId::new(pid(2), 5))]);
        sim.next_action(&view);
        sim.apply(Response::Cons(1), &view).unwrap();
        assert_eq!(sim.next_action(&view), AsimAction::Cons(ConsKey { proc: pid(1), ell: 2, r: 1 }, 1));
        sim.apply(Response::Cons(1), &view).unwrap();
        let v = VertexId::new(pid(1), 2);
        assert_eq!(sim.next_action(&view), AsimAction::WriteV(v));
        sim.apply(Response::Ack, &view).unwrap();
        assert!(matches!(sim.next_action(&view), AsimAction::AStep { d, .. } if d == pid(2)));
    }

    #[test]
    fn stall_until_vertex_is_local() {
        let s = store(2, &[(1, 2, vec![0, 0])]);
        let empty = crate::dag::Frontier::new(2);
        let full = s.frontier();
        let mut sim = AsimProc::new(OmegaConsensus::new(2), pid(1), 2);
        let view = s.view(&empty);
        sim.next_action(&view);
        sim.apply(Response::Value(Value::Int(0)), &view).unwrap();
        collect(&mut sim, &view, &[Value::Bot, Value::Bot]);
        sim.next_action(&view);
        // Somebody else saw the vertex and won the object with 1.
        sim.apply(Response::Cons(1), &view).unwrap();
        assert_eq!(sim.next_action(&view), AsimAction::Stall);
        assert_eq!(sim.next_action(&s.view(&full)), AsimAction::WriteV(VertexId::new(pid(1), 1)));
    }

    fn config(f: FailurePattern, f_sim: FailurePattern, seed: u64) -> SimulationConfig {
        SimulationConfig {
            n: 3,
            f,
            f_sim,
            omega: OmegaSpec { t_stab: 200, leader: pid(1), noise_seed: seed },
            inputs: vec![0, 1, 1],
            seed,
            budget: 12_000,
            tail: 60,
        }
    }

    fn plain(run: &SimulationRun<OmegaConsensus>) -> Vec<AStepRecord<crate::consensus::ConsensusState>> {
        run.records.iter().map(|(_, r)| r.clone()).collect()
    }

    #[test]
    fn fair_simulation_is_a_deciding_run() {
        let f = FailurePattern::with_crashes(3, &[(pid(2), 150)]).unwrap();
        let run = run_simulation(OmegaConsensus::new(3), config(f.clone(), FailurePattern::new(3), 7)).unwrap();
        let report = validate_simulation(
            &OmegaConsensus::new(3),
            &[0, 1, 1],
            &plain(&run),
            run.system.vertices(),
            &f,
            &FailurePattern::new(3),
            60,
        );
        assert!(report.ok(), "{report:?}");
        for p in [1, 3] {
            assert!(run.system.proc(pid(3 + p)).decision().is_some(), "p'{p} undecided");
        }
    }

    #[test]
    fn swapped_detector_value_breaks_legality() {
        let run = run_simulation(OmegaConsensus::new(3), config(FailurePattern::new(3), FailurePattern::new(3), 3)).unwrap();
        let mut recs = plain(&run);
        let k = recs.iter().position(|r| r.op == OpRequest::Query).unwrap();
        let other = ProcessId::from_index((recs[k].d.index() + 1) % 3);
        recs[k].d = other;
        recs[k].response = Response::Detector(other);
        let report = validate_simulation(
            &OmegaConsensus::new(3),
            &[0, 1, 1],
            &recs,
            run.system.vertices(),
            &FailurePattern::new(3),
            &FailurePattern::new(3),
            60,
        );
        assert_eq!(report.legality_divergence, Some(k));
    }

    #[test]
    fn starved_simulator_drops_out_of_the_tail() {
        let f_sim = FailurePattern::with_crashes(3, &[(pid(3), 0)]).unwrap();
        let run = run_simulation(OmegaConsensus::new(3), config(FailurePattern::new(3), f_sim.clone(), 11)).unwrap();
        let report = validate_simulation(
            &OmegaConsensus::new(3),
            &[0, 1, 1],
            &plain(&run),
            run.system.vertices(),
            &FailurePattern::new(3),
            &f_sim,
            60,
        );
        assert!(report.ok(), "{report:?}");
        assert_eq!(report.participating, BTreeSet::from([pid(1), pid(2)]));
    }

    #[test]
    fn temporal_check_agrees_with_brute_force_causality() {
        let run = run_simulation(OmegaConsensus::new(3), config(FailurePattern::new(3), FailurePattern::new(3), 5)).unwrap();
        let recs: Vec<_> = plain(&run).into_iter().take(150).collect();
        // Rebuild the simulated run as plain steps and compare pairwise.
        let steps: Vec<Step> = recs
            .iter()
            .enumerate()
            .map(|(t, r)| {
                let (kind, reg) = match &r.op {
                    OpRequest::Read(g) => (StepKind::Read, Some(*g)),
                    OpRequest::Write(g, _) => (StepKind::Write, Some(*g)),
                    OpRequest::Query => (StepKind::Query, None),
                    OpRequest::Decide(_) => (StepKind::Decide, None),
                    _ => (StepKind::Local, None),
                };
                Step { t: t as Time, proc: r.proc, kind, reg, value: None, fd: None, cons: None }
            })
            .collect();
        let order = CausalOrder::new(3, &steps);
        let queries: Vec<usize> = (0..recs.len()).filter(|&k| recs[k].op == OpRequest::Query).collect();
        let mut brute_ok = true;
        for &a in &queries {
            for &b in &queries {
                if order.precedes(a, b) && recs[a].sample_time >= recs[b].sample_time {
                    brute_ok = false;
                }
            }
        }
        let report = validate_simulation(
            &OmegaConsensus::new(3),
            &[0, 1, 1],
            &recs,
            run.system.vertices(),
            &FailurePattern::new(3),
            &FailurePattern::new(3),
            10,
        );
        assert!(brute_ok);
        assert!(report.temporal_ok());
    }
}
