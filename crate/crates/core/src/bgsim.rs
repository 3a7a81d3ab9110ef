//! Two simulators `q1`, `q2` running all `n` simulated processes of the
//! detector-free algorithm, agreeing on every schedule-dependent outcome
//! through safe agreement.
//!
//! A simulator that stops inside a safe agreement (at level 1) blocks that
//! one simulated process forever; everyone else keeps running. That is what
//! makes a solo extension of a simulator schedule a 1-resilient run.
//!
//! One *macro-step* of `q` finishes `q`'s open proposal (read the other slot,
//! raise, resolve), runs whatever deterministic simulated steps come up on
//! `q`'s round-robin, and stops right after `q` writes its next proposal. A
//! schedule over `{q1, q2}` is a sequence of macro-steps.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::asyncsim::{AsimAction, AsimProc};
use crate::dag::DagView;
use crate::error::{Error, Result};
use crate::sim::{Automaton, Bit, ConsKey, ConsPort, OpRequest, ProcessId, RegKey, Response, Slot, Value};

/// `q1` or `q2`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct SimId(u8);

impl SimId {
    pub const Q1: SimId = SimId(0);
    pub const Q2: SimId = SimId(1);
    pub const BOTH: [SimId; 2] = [SimId::Q1, SimId::Q2];

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn other(self) -> SimId {
        SimId(1 - self.0)
    }

    /// Schedule symbol: 1 for `q1`, 2 for `q2`.
    pub fn symbol(self) -> u8 {
        self.0 + 1
    }

    pub fn from_symbol(s: u8) -> Result<SimId> {
        match s {
            1 | 2 => Ok(SimId(s - 1)),
            _ => Err(Error::MalformedSchedule(s)),
        }
    }
}

impl fmt::Display for SimId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0 + 1)
    }
}

/// Progress of one simulator inside a [`SafeAgreement`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum SaStage {
    Idle,
    /// Proposal written at level 1.
    Written,
    /// Other slot read; holds the level seen there.
    Observed(u8),
    /// Level raised to 2 or withdrawn to 0.
    Done,
}

/// Two-party safe agreement. Proposing takes three atomic micro-steps:
/// write the value at level 1, read the other slot, then move to level 2
/// (or back off to 0 if the other slot already reached 2). Resolution is
/// pending while any slot sits at level 1, and otherwise returns the value of
/// the lowest-id simulator at level 2.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SafeAgreement<V> {
    values: [Option<V>; 2],
    levels: [u8; 2],
    stages: [SaStage; 2],
}

impl<V> Default for SafeAgreement<V> {
    fn default() -> Self {
        Self { values: [None, None], levels: [0, 0], stages: [SaStage::Idle, SaStage::Idle] }
    }
}

impl<V: Clone> SafeAgreement<V> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stage(&self, q: SimId) -> SaStage {
        self.stages[q.index()]
    }

    pub fn level(&self, q: SimId) -> u8 {
        self.levels[q.index()]
    }

    fn expect(&self, q: SimId, want: fn(SaStage) -> bool, what: &str) -> Result<()> {
        let got = self.stages[q.index()];
        if want(got) {
            Ok(())
        } else {
            Err(Error::SafeAgreementMisuse(format!("{q} cannot {what} in stage {got:?}")))
        }
    }

    pub fn write_proposal(&mut self, q: SimId, v: V) -> Result<()> {
        self.expect(q, |s| s == SaStage::Idle, "propose")?;
        self.values[q.index()] = Some(v);
        self.levels[q.index()] = 1;
        self.stages[q.index()] = SaStage::Written;
        Ok(())
    }

    pub fn read_other(&mut self, q: SimId) -> Result<()> {
        self.expect(q, |s| s == SaStage::Written, "read")?;
        self.stages[q.index()] = SaStage::Observed(self.levels[q.other().index()]);
        Ok(())
    }

    pub fn raise(&mut self, q: SimId) -> Result<()> {
        self.expect(q, |s| matches!(s, SaStage::Observed(_)), "raise")?;
        let SaStage::Observed(seen) = self.stages[q.index()] else { unreachable!() };
        self.levels[q.index()] = if seen == 2 { 0 } else { 2 };
        self.stages[q.index()] = SaStage::Done;
        Ok(())
    }

    /// Performs `q`'s next proposing micro-step; `value` is only called for
    /// the first. Returns true once `q` has finished proposing.
    pub fn propose_step(&mut self, q: SimId, value: impl FnOnce() -> V) -> Result<bool> {
        match self.stages[q.index()] {
            SaStage::Idle => self.write_proposal(q, value())?,
            SaStage::Written => self.read_other(q)?,
            SaStage::Observed(_) => self.raise(q)?,
            SaStage::Done => return Err(Error::SafeAgreementMisuse(format!("{q} proposed twice"))),
        }
        Ok(self.stages[q.index()] == SaStage::Done)
    }

    /// `None` while pending.
    pub fn resolve(&self, q: SimId) -> Result<Option<V>> {
        self.expect(q, |s| s == SaStage::Done, "resolve")?;
        if self.levels.contains(&1) {
            return Ok(None);
        }
        let winner = self.levels.iter().position(|&l| l == 2).expect("a finished proposer is at level 2 or saw one");
        Ok(self.values[winner].clone())
    }
}

/// Outcome of a full exhaustive check of [`SafeAgreement`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SaReport {
    pub executions: u64,
    pub agreement_violations: u64,
    pub validity_violations: u64,
    /// Resolve attempts that are pending although no simulator stopped
    /// between its level-1 and level-2 writes, or that resolve although one did.
    pub pending_mismatches: u64,
}

impl SaReport {
    pub fn ok(&self) -> bool {
        self.agreement_violations == 0 && self.validity_violations == 0 && self.pending_mismatches == 0
    }
}

/// Explores every interleaving of two simulators, each running
/// propose (three micro-steps) followed by two resolve attempts, cut at every
/// possible crash point, for every pair of proposed bits.
pub fn exhaustive_sa_check() -> SaReport {
    const PROGRAM: usize = 5;
    fn walk(sa: &SafeAgreement<Bit>, pc: [usize; 2], props: [Bit; 2], seen: &mut Vec<Bit>, report: &mut SaReport) {
        report.executions += 1;
        if seen.windows(2).any(|w| w[0] != w[1]) {
            report.agreement_violations += 1;
        }
        if seen.iter().any(|v| !props.contains(v)) {
            report.validity_violations += 1;
        }
        let midway = SimId::BOTH
            .iter()
            .any(|&q| matches!(sa.stage(q), SaStage::Written | SaStage::Observed(_)));
        for q in SimId::BOTH {
            if sa.stage(q) == SaStage::Done && sa.resolve(q).expect("finished proposing").is_none() != midway {
                report.pending_mismatches += 1;
            }
        }
        for q in SimId::BOTH {
            let i = q.index();
            if pc[i] == PROGRAM {
                continue;
            }
            let mut next = sa.clone();
            let mut pushed = false;
            if pc[i] < 3 {
                next.propose_step(q, || props[i]).expect("program order");
            } else if let Some(v) = next.resolve(q).expect("proposed first") {
                seen.push(v);
                pushed = true;
            }
            let mut npc = pc;
            npc[i] += 1;
            walk(&next, npc, props, seen, report);
            if pushed {
                seen.pop();
            }
        }
    }
    let mut report = SaReport::default();
    for props in [[0, 0], [0, 1], [1, 0], [1, 1]] {
        walk(&SafeAgreement::new(), [0, 0], props, &mut Vec::new(), &mut report);
    }
    report
}

/// One simulated process as seen by the simulation: its state plus the safe
/// agreement for its next step.
#[derive(Clone, Debug)]
struct SimulatedProc<A: Automaton> {
    asim: AsimProc<A>,
    sa: SafeAgreement<Response>,
    /// Number of steps applied so far; the agreement above is for step `step_no + 1`.
    step_no: u64,
}

#[derive(Clone, Debug, Default)]
struct Simulator {
    cursor: usize,
    blocked: BTreeSet<usize>,
}

/// Everything a macro-step may need to roll back.
#[derive(Clone, Debug)]
struct Core<A: Automaton> {
    procs: Vec<SimulatedProc<A>>,
    mem: HashMap<RegKey, Value>,
    sims: [Simulator; 2],
    counts: Vec<u64>,
    decisions: Vec<Option<Bit>>,
    safety_violation: bool,
    /// A proposal of `q` waiting on a consensus answer.
    awaiting: Option<(SimId, usize, ConsKey, Bit)>,
}

/// One applied simulated step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LogEntry {
    pub proc: ProcessId,
    pub step_no: u64,
    pub action_kind: &'static str,
    /// Present for outcomes fixed by safe agreement.
    pub agreed_outcome: Option<String>,
}

/// Result of a macro-step attempt.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MacroOutcome {
    Done,
    /// The macro-step's final proposal needs this consensus access; finish it
    /// with [`BgState::finish_cons`].
    NeedCons(ConsKey, Bit),
    /// The local DAG lacks a vertex some simulated process must use next;
    /// nothing changed.
    Stalled,
}

/// State of the simulation after some schedule: `ST(J, σ)` plus `SCH(J, σ)`.
#[derive(Clone, Debug)]
pub struct BgState<A: Automaton> {
    n: usize,
    inputs: [Bit; 2],
    core: Core<A>,
    sch: Vec<u16>,
    macro_steps: u64,
    log: Option<Vec<LogEntry>>,
}

fn outcome_text(r: &Response) -> String {
    match r {
        Response::Ack => "ack".into(),
        Response::Value(Value::Bot) => "⊥".into(),
        Response::Value(Value::Int(v)) => v.to_string(),
        Response::Value(Value::Vertex(v)) => format!("[{},{}]", v.proc, v.seq),
        Response::Value(Value::Dag(f)) => format!("dag{:?}", f.counts()),
        Response::Detector(p) => p.to_string(),
        Response::Cons(b) => format!("cons:{b}"),
    }
}

impl<A: Automaton> BgState<A> {
    /// Simulators `q1`, `q2` with inputs `inputs`; the simulated processes
    /// adopt the input of whichever simulator wins their first step.
    pub fn new(algo: A, n: usize, inputs: [Bit; 2]) -> Self {
        let procs = ProcessId::all(n)
            .map(|p| SimulatedProc { asim: AsimProc::new(algo.clone(), p, n), sa: SafeAgreement::new(), step_no: 0 })
            .collect();
        Self {
            n,
            inputs,
            core: Core {
                procs,
                mem: HashMap::new(),
                sims: Default::default(),
                counts: vec![0; n],
                decisions: vec![None; n],
                safety_violation: false,
                awaiting: None,
            },
            sch: Vec::new(),
            macro_steps: 0,
            log: None,
        }
    }

    /// Keeps a log of applied steps (off by default).
    pub fn with_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn inputs(&self) -> [Bit; 2] {
        self.inputs
    }

    /// The simulated schedule, as 0-based process indices.
    pub fn sch(&self) -> &[u16] {
        &self.sch
    }

    /// Steps per simulated process.
    pub fn counts(&self) -> &[u64] {
        &self.core.counts
    }

    pub fn macro_steps(&self) -> u64 {
        self.macro_steps
    }

    /// Whether some simulated process has decided.
    pub fn decided(&self) -> bool {
        self.core.decisions.iter().any(Option::is_some)
    }

    pub fn decisions(&self) -> &[Option<Bit>] {
        &self.core.decisions
    }

    /// Two simulated processes decided differently, or one decided a value
    /// that is no simulator's input.
    pub fn safety_violation(&self) -> bool {
        self.core.safety_violation
    }

    /// Simulated states of `A` (`None` before the input step).
    pub fn states(&self) -> Vec<Option<A::State>> {
        self.core.procs.iter().map(|p| p.asim.inner().cloned()).collect()
    }

    pub fn proc(&self, p: ProcessId) -> &AsimProc<A> {
        &self.core.procs[p.index()].asim
    }

    /// Simulated processes whose current step is pending for `q`.
    pub fn blocked_for(&self, q: SimId) -> Vec<ProcessId> {
        self.core.sims[q.index()].blocked.iter().map(|&i| ProcessId::from_index(i)).collect()
    }

    /// Whether `q` sits at level 1 in some agreement, which blocks that process for the other simulator.
    pub fn exposed(&self, q: SimId) -> Option<ProcessId> {
        self.core
            .procs
            .iter()
            .position(|p| p.sa.level(q) == 1)
            .map(ProcessId::from_index)
    }

    pub fn log(&self) -> Option<&[LogEntry]> {
        self.log.as_deref()
    }

    /// The step log as a JSON array.
    pub fn log_json(&self) -> String {
        serde_json::to_string(self.log.as_deref().unwrap_or(&[])).expect("log entries serialize")
    }

    fn v_reg(i: usize) -> RegKey {
        RegKey::new(ProcessId::from_index(i), Slot::V)
    }

    fn read(&self, reg: &RegKey) -> Response {
        Response::Value(self.core.mem.get(reg).cloned().unwrap_or_default())
    }

    fn advance(&mut self, q: SimId) {
        let s = &mut self.core.sims[q.index()];
        s.cursor = (s.cursor + 1) % self.n;
    }

    fn record(&mut self, i: usize, kind: &'static str, agreed: Option<&Response>, view: &DagView<'_>, response: Response) -> Result<()> {
        let p = &mut self.core.procs[i];
        p.asim.apply(response, view)?;
        p.step_no += 1;
        p.sa = SafeAgreement::new();
        let step_no = p.step_no;
        if let Some(b) = p.asim.decision() {
            if self.core.decisions[i].is_none() {
                self.core.decisions[i] = Some(b);
                let clash = self.core.decisions.iter().flatten().any(|&o| o != b);
                if clash || !self.inputs.contains(&b) {
                    self.core.safety_violation = true;
                }
            }
        }
        self.core.counts[i] += 1;
        self.sch.push(i as u16);
        for s in &mut self.core.sims {
            s.blocked.remove(&i);
        }
        if let Some(log) = &mut self.log {
            log.push(LogEntry {
                proc: ProcessId::from_index(i),
                step_no,
                action_kind: kind,
                agreed_outcome: agreed.map(outcome_text),
            });
        }
        Ok(())
    }

    /// Starts a macro-step of `q`. On [`MacroOutcome::NeedCons`] the caller
    /// must call [`finish_cons`](Self::finish_cons) before anything else.
    pub fn begin(&mut self, q: SimId, view: &DagView<'_>) -> Result<MacroOutcome> {
        if self.core.awaiting.is_some() {
            return Err(Error::SafeAgreementMisuse("macro-step started while a proposal awaits consensus".into()));
        }
        let saved = (self.core.clone(), self.sch.len(), self.log.as_ref().map(Vec::len));
        match self.run(q, view) {
            Ok(MacroOutcome::Stalled) => {
                self.core = saved.0;
                self.sch.truncate(saved.1);
                if let (Some(log), Some(len)) = (&mut self.log, saved.2) {
                    log.truncate(len);
                }
                Ok(MacroOutcome::Stalled)
            }
            Ok(MacroOutcome::Done) => {
                self.macro_steps += 1;
                Ok(MacroOutcome::Done)
            }
            other => other,
        }
    }

    /// Completes a macro-step that ended in a consensus access.
    pub fn finish_cons(&mut self, answer: Bit) -> Result<()> {
        let (q, i, _, _) = self
            .core
            .awaiting
            .take()
            .ok_or_else(|| Error::SafeAgreementMisuse("no proposal awaits consensus".into()))?;
        self.core.procs[i].sa.write_proposal(q, Response::Cons(answer))?;
        self.macro_steps += 1;
        Ok(())
    }

    /// The consensus access a pending macro-step waits on.
    pub fn awaiting(&self) -> Option<(ConsKey, Bit)> {
        self.core.awaiting.map(|(_, _, k, u)| (k, u))
    }

    fn run(&mut self, q: SimId, view: &DagView<'_>) -> Result<MacroOutcome> {
        // Each lap either proposes somewhere or passes a process pending for
        // `q`; at most one process is pending for `q` at a time.
        for _ in 0..=4 * self.n + 4 {
            let i = self.core.sims[q.index()].cursor;
            match self.core.procs[i].sa.stage(q) {
                SaStage::Idle => {
                    let action = self.core.procs[i].asim.next_action(view);
                    if action == AsimAction::Stall {
                        return Ok(MacroOutcome::Stalled);
                    }
                    if !action.needs_agreement() {
                        let response = match &action {
                            AsimAction::WriteV(v) => {
                                self.core.mem.insert(Self::v_reg(i), Value::Vertex(*v));
                                Response::Ack
                            }
                            AsimAction::AStep { op: OpRequest::Write(reg, val), .. } => {
                                self.core.mem.insert(*reg, val.clone());
                                Response::Ack
                            }
                            _ => Response::Ack,
                        };
                        self.record(i, action.kind(), None, view, response)?;
                        self.advance(q);
                        continue;
                    }
                    let outcome = match &action {
                        AsimAction::Input => Response::Value(Value::Int(self.inputs[q.index()] as i64)),
                        AsimAction::ReadV(j) => self.read(&Self::v_reg(j.index())),
                        AsimAction::AStep { op: OpRequest::Read(reg), .. } => self.read(reg),
                        AsimAction::Cons(key, u) => {
                            self.core.awaiting = Some((q, i, *key, *u));
                            return Ok(MacroOutcome::NeedCons(*key, *u));
                        }
                        other => unreachable!("{other:?} needs no agreement"),
                    };
                    self.core.procs[i].sa.write_proposal(q, outcome)?;
                    return Ok(MacroOutcome::Done);
                }
                SaStage::Written | SaStage::Observed(_) => {
                    let sa = &mut self.core.procs[i].sa;
                    while sa.stage(q) != SaStage::Done {
                        sa.propose_step(q, || unreachable!())?;
                    }
                }
                SaStage::Done => {}
            }
            match self.core.procs[i].sa.resolve(q)? {
                Some(outcome) => {
                    let kind = self.core.procs[i].asim.next_action(view).kind();
                    self.record(i, kind, Some(&outcome), view, outcome.clone())?;
                }
                None => {
                    self.core.sims[q.index()].blocked.insert(i);
                }
            }
            self.advance(q);
        }
        Err(Error::SafeAgreementMisuse(format!("{q} found nothing to propose in a full lap")))
    }
}

/// One macro-step of `q`, answering a consensus access through `port`.
pub fn bg_macro_step<A: Automaton>(
    state: &mut BgState<A>,
    q: SimId,
    view: &DagView<'_>,
    port: &mut dyn ConsPort,
) -> Result<MacroOutcome> {
    match state.begin(q, view)? {
        MacroOutcome::NeedCons(key, u) => {
            state.finish_cons(port.propose(key, u))?;
            Ok(MacroOutcome::Done)
        }
        other => Ok(other),
    }
}
