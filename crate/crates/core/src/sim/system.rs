use std::collections::HashMap;
use std::sync::Arc;

use super::cons::ConsRegistry;
use super::sched::Scheduler;
use super::types::{
    Automaton, Bit, ConsAccess, FailurePattern, OpRequest, ProcessId, RegKey, Response, Slot,
    Step, StepKind, Time, Trace, Value,
};
use crate::dag::{DagVertex, VertexStore};
use crate::detectors::History;
use crate::error::{Error, Result};

/// Read-only context handed to a process while it takes a step.
pub struct Env<'a> {
    pub t: Time,
    pub me: ProcessId,
    pub n: usize,
    /// The append-only store backing every DAG register value.
    pub vertices: &'a VertexStore,
}

/// A participant of the event loop.
///
/// `next_op` is called once per scheduled step and may advance purely local
/// state; `complete` receives the response to the returned operation.
pub trait Process: Clone {
    fn next_op(&mut self, env: &Env<'_>) -> OpRequest;

    fn complete(&mut self, op: &OpRequest, response: Response, env: &Env<'_>);

    fn terminated(&self) -> bool {
        false
    }

    fn input(&self) -> Option<Bit> {
        None
    }

    fn decision(&self) -> Option<Bit> {
        None
    }
}

/// Runs an [`Automaton`] as an event-loop process.
#[derive(Clone, Debug)]
pub struct AutomatonProcess<A: Automaton> {
    algo: A,
    input: Bit,
    state: A::State,
}

impl<A: Automaton> AutomatonProcess<A> {
    pub fn new(algo: A, me: ProcessId, input: Bit) -> Self {
        let state = algo.init(me, input);
        Self { algo, input, state }
    }

    pub fn state(&self) -> &A::State {
        &self.state
    }
}

impl<A: Automaton> Process for AutomatonProcess<A> {
    fn next_op(&mut self, _env: &Env<'_>) -> OpRequest {
        self.algo.pending(&self.state)
    }

    fn complete(&mut self, _op: &OpRequest, response: Response, _env: &Env<'_>) {
        self.state = self.algo.next(&self.state, &response);
    }

    fn input(&self) -> Option<Bit> {
        Some(self.input)
    }

    fn decision(&self) -> Option<Bit> {
        self.algo.decision(&self.state)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunStats {
    pub steps: u64,
    /// True when the loop stopped because nobody could move.
    pub quiescent: bool,
}

/// The deterministic single-threaded event loop: shared registers,
/// consensus objects, the DAG vertex store, and the processes.
#[derive(Clone)]
pub struct System<P> {
    pattern: FailurePattern,
    history: Arc<dyn History>,
    procs: Vec<P>,
    regs: HashMap<RegKey, Value>,
    cons: ConsRegistry,
    vertices: VertexStore,
    t: Time,
    trace: Option<Vec<Step>>,
}

impl<P: Process> System<P> {
    pub fn new(pattern: FailurePattern, history: Arc<dyn History>, procs: Vec<P>) -> Result<Self> {
        pattern.validate()?;
        if procs.len() != pattern.n() {
            return Err(Error::InvalidPattern(format!(
                "pattern covers {} processes but {} were supplied",
                pattern.n(),
                procs.len()
            )));
        }
        let n = procs.len();
        Ok(Self {
            pattern,
            history,
            procs,
            regs: HashMap::new(),
            cons: ConsRegistry::new(),
            vertices: VertexStore::new(n),
            t: 0,
            trace: Some(Vec::new()),
        })
    }

    /// Turns step recording off (long runs keep only what observers collect).
    pub fn without_trace(mut self) -> Self {
        self.trace = None;
        self
    }

    pub fn n(&self) -> usize {
        self.procs.len()
    }

    pub fn time(&self) -> Time {
        self.t
    }

    pub fn pattern(&self) -> &FailurePattern {
        &self.pattern
    }

    pub fn history(&self) -> &Arc<dyn History> {
        &self.history
    }

    pub fn procs(&self) -> &[P] {
        &self.procs
    }

    pub fn proc(&self, p: ProcessId) -> &P {
        &self.procs[p.index()]
    }

    pub fn cons(&self) -> &ConsRegistry {
        &self.cons
    }

    pub fn vertices(&self) -> &VertexStore {
        &self.vertices
    }

    pub fn register(&self, key: &RegKey) -> Value {
        self.regs.get(key).cloned().unwrap_or_default()
    }

    pub fn steps(&self) -> &[Step] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn is_live(&self, p: ProcessId) -> bool {
        !self.pattern.crashed_at(p, self.t) && !self.procs[p.index()].terminated()
    }

    pub fn live(&self) -> Vec<bool> {
        ProcessId::all(self.n()).map(|p| self.is_live(p)).collect()
    }

    /// Applies `p`'s pending operation atomically at the current time.
    pub fn execute_step(&mut self, p: ProcessId) -> Result<Step> {
        let t = self.t;
        if let Some(crash) = self.pattern.crash_time(p).filter(|&c| t >= c) {
            return Err(Error::CrashedProcess { proc: p, t, crash });
        }
        if self.procs[p.index()].terminated() {
            return Err(Error::TerminatedProcess { proc: p });
        }
        let n = self.n();
        let op = {
            let env = Env { t, me: p, n, vertices: &self.vertices };
            self.procs[p.index()].next_op(&env)
        };
        let mut step = Step {
            t,
            proc: p,
            kind: StepKind::Local,
            reg: None,
            value: None,
            fd: None,
            cons: None,
        };
        let response = match &op {
            OpRequest::Read(reg) => {
                let v = self.register(reg);
                step.kind = StepKind::Read;
                step.reg = Some(*reg);
                step.value = Some(v.clone());
                Response::Value(v)
            }
            OpRequest::Write(reg, v) => {
                if reg.owner != p {
                    return Err(Error::NotOwner { proc: p, reg: *reg });
                }
                self.regs.insert(*reg, v.clone());
                step.kind = StepKind::Write;
                step.reg = Some(*reg);
                step.value = Some(v.clone());
                Response::Ack
            }
            OpRequest::PublishVertex { d, sample_time, preds } => {
                let id = self.vertices.append(DagVertex {
                    proc: p,
                    d: *d,
                    seq: 0,
                    sample_time: *sample_time,
                    preds: preds.clone(),
                });
                let mut frontier = preds.clone();
                frontier.include(id);
                let reg = RegKey::new(p, Slot::Dag);
                let v = Value::Dag(frontier);
                self.regs.insert(reg, v.clone());
                step.kind = StepKind::Write;
                step.reg = Some(reg);
                step.value = Some(v);
                Response::Ack
            }
            OpRequest::Query => {
                let d = self.history.sample(p, t);
                step.kind = StepKind::Query;
                step.fd = Some(d);
                Response::Detector(d)
            }
            OpRequest::Cons(key, proposal) => {
                let returned = self.cons.access(*key, *proposal);
                step.kind = StepKind::Cons;
                step.cons = Some(ConsAccess { key: *key, proposed: *proposal, returned });
                Response::Cons(returned)
            }
            OpRequest::Decide(b) => {
                step.kind = StepKind::Decide;
                step.value = Some(Value::Int(*b as i64));
                Response::Ack
            }
            OpRequest::Local => Response::Ack,
        };
        {
            let env = Env { t, me: p, n, vertices: &self.vertices };
            self.procs[p.index()].complete(&op, response, &env);
        }
        self.t += 1;
        if let Some(trace) = &mut self.trace {
            trace.push(step.clone());
        }
        Ok(step)
    }

    /// Steps scheduled processes until `budget` steps ran or nobody is live.
    pub fn run(&mut self, sched: &mut Scheduler, budget: u64) -> Result<RunStats> {
        self.run_until(sched, budget, |_, _| false)
    }

    /// Like [`run`](Self::run), stopping early once `stop` returns true
    /// after a step.
    pub fn run_until(
        &mut self,
        sched: &mut Scheduler,
        budget: u64,
        mut stop: impl FnMut(&Self, &Step) -> bool,
    ) -> Result<RunStats> {
        let mut stats = RunStats::default();
        let mut live = self.live();
        while stats.steps < budget {
            for p in ProcessId::all(self.n()) {
                live[p.index()] = self.is_live(p);
            }
            if !live.iter().any(|&l| l) {
                stats.quiescent = true;
                break;
            }
            let p = sched.schedule_next(&live, self.t)?;
            let step = self.execute_step(p)?;
            stats.steps += 1;
            if stop(self, &step) {
                break;
            }
        }
        Ok(stats)
    }

    pub fn trace(&self) -> Trace {
        Trace {
            n: self.n(),
            crashes: self.pattern.crashes(),
            inputs: self.procs.iter().map(Process::input).collect(),
            steps: self.steps().to_vec(),
        }
    }
}
