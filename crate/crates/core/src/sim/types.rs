use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::dag::{Frontier, VertexId};
use crate::error::{Error, Result};

/// Event-loop time: the index of a step. One atomic operation per index.
pub type Time = u64;

/// A consensus input or decision.
pub type Bit = u8;

/// Identifier of one of the `n` processes, 1-based.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct ProcessId(u32);

impl ProcessId {
    pub fn new(index: u32) -> Self {
        assert!(index >= 1, "process ids are 1-based");
        Self(index)
    }

    /// The process at 0-based position `i`.
    pub fn from_index(i: usize) -> Self {
        Self(i as u32 + 1)
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// 0-based position, for indexing per-process vectors.
    pub fn index(self) -> usize {
        (self.0 - 1) as usize
    }

    pub fn all(n: usize) -> impl Iterator<Item = ProcessId> + Clone {
        (0..n).map(ProcessId::from_index)
    }
}

impl fmt::Debug for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

impl FromStr for ProcessId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s.trim().trim_start_matches(['p', 'P']);
        match digits.parse::<u32>() {
            Ok(i) if i >= 1 => Ok(ProcessId(i)),
            _ => Err(Error::Config(format!("bad process id {s:?}"))),
        }
    }
}

/// Which processes crash, and when. A process with no crash time is correct.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FailurePattern {
    crash: Vec<Option<Time>>,
}

impl FailurePattern {
    /// Failure-free pattern on `n` processes.
    pub fn new(n: usize) -> Self {
        Self { crash: vec![None; n] }
    }

    pub fn with_crashes(n: usize, crashes: &[(ProcessId, Time)]) -> Result<Self> {
        let mut pattern = Self::new(n);
        for &(p, t) in crashes {
            pattern.set_crash(p, t)?;
        }
        pattern.validate()?;
        Ok(pattern)
    }

    pub fn set_crash(&mut self, p: ProcessId, t: Time) -> Result<()> {
        let n = self.n();
        let slot = self
            .crash
            .get_mut(p.index())
            .ok_or_else(|| Error::InvalidPattern(format!("{p} out of range for n={n}")))?;
        *slot = Some(t);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n() < 2 {
            return Err(Error::InvalidPattern(format!("n={} but at least 2 processes are required", self.n())));
        }
        if self.correct().is_empty() {
            return Err(Error::InvalidPattern("every process crashes".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.crash.len()
    }

    pub fn crash_time(&self, p: ProcessId) -> Option<Time> {
        self.crash[p.index()]
    }

    /// Whether `p` belongs to F(t), the set crashed by time `t`.
    pub fn crashed_at(&self, p: ProcessId, t: Time) -> bool {
        self.crash[p.index()].is_some_and(|c| t >= c)
    }

    pub fn is_correct(&self, p: ProcessId) -> bool {
        self.crash[p.index()].is_none()
    }

    pub fn correct(&self) -> Vec<ProcessId> {
        ProcessId::all(self.n()).filter(|&p| self.is_correct(p)).collect()
    }

    pub fn faulty(&self) -> Vec<ProcessId> {
        ProcessId::all(self.n()).filter(|&p| !self.is_correct(p)).collect()
    }

    pub fn crashes(&self) -> Vec<(ProcessId, Time)> {
        ProcessId::all(self.n())
            .filter_map(|p| self.crash_time(p).map(|t| (p, t)))
            .collect()
    }
}

/// A named slot in some process's register file. Each (owner, slot) pair is
/// one single-writer multi-reader register.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Slot {
    /// The communication component's DAG.
    Dag,
    /// Vertex used for the latest simulated step (detector-free simulation).
    V,
    /// Leader proposal for a round.
    Prop(u64),
    /// Adopt-commit phase one, per round.
    Ac1(u64),
    /// Adopt-commit phase two, per round.
    Ac2(u64),
    /// Decision announcement.
    Dec,
    /// Free-form cell for tests and ad-hoc automata.
    Cell(u64),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct RegKey {
    pub owner: ProcessId,
    pub slot: Slot,
}

impl RegKey {
    pub fn new(owner: ProcessId, slot: Slot) -> Self {
        Self { owner, slot }
    }
}

impl fmt::Display for RegKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.slot {
            Slot::Dag => write!(f, "{}.dag", self.owner),
            Slot::V => write!(f, "{}.v", self.owner),
            Slot::Prop(r) => write!(f, "{}.prop[{r}]", self.owner),
            Slot::Ac1(r) => write!(f, "{}.ac1[{r}]", self.owner),
            Slot::Ac2(r) => write!(f, "{}.ac2[{r}]", self.owner),
            Slot::Dec => write!(f, "{}.dec", self.owner),
            Slot::Cell(i) => write!(f, "{}.cell[{i}]", self.owner),
        }
    }
}

impl Serialize for RegKey {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Identifies one linearizable consensus object. The reduction uses
/// `(simulated process, wait index ℓ, attempt r)`; other users pick any key.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ConsKey {
    pub proc: ProcessId,
    pub ell: u64,
    pub r: u64,
}

impl fmt::Display for ConsKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cons[{},{},{}]", self.proc, self.ell, self.r)
    }
}

impl Serialize for ConsKey {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Register contents.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub enum Value {
    #[default]
    Bot,
    Int(i64),
    Vertex(VertexId),
    Dag(Frontier),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_bot(&self) -> bool {
        matches!(self, Value::Bot)
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Value::Bot => s.serialize_none(),
            Value::Int(v) => s.serialize_i64(*v),
            Value::Vertex(v) => {
                let mut m = s.serialize_map(Some(2))?;
                m.serialize_entry("p", &v.proc)?;
                m.serialize_entry("seq", &v.seq)?;
                m.end()
            }
            Value::Dag(f) => f.serialize(s),
        }
    }
}

/// What a process asks the event loop to do next.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum OpRequest {
    Read(RegKey),
    Write(RegKey, Value),
    Query,
    Cons(ConsKey, Bit),
    Decide(Bit),
    Local,
    /// Append a new vertex to the caller's DAG chain and write the caller's
    /// DAG register; `preds` is the DAG the vertex is added to.
    PublishVertex {
        d: ProcessId,
        sample_time: Time,
        preds: Frontier,
    },
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Response {
    Ack,
    Value(Value),
    Detector(ProcessId),
    Cons(Bit),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize)]
pub enum StepKind {
    #[serde(rename = "read")]
    Read,
    #[serde(rename = "write")]
    Write,
    #[serde(rename = "query")]
    Query,
    #[serde(rename = "cons-access")]
    Cons,
    #[serde(rename = "local")]
    Local,
    #[serde(rename = "decide")]
    Decide,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct ConsAccess {
    pub key: ConsKey,
    pub proposed: Bit,
    pub returned: Bit,
}

/// One executed atomic step.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Step {
    pub t: Time,
    pub proc: ProcessId,
    pub kind: StepKind,
    pub reg: Option<RegKey>,
    /// Written value, or the value a read returned, or the decided bit.
    pub value: Option<Value>,
    /// Present exactly on query steps.
    pub fd: Option<ProcessId>,
    pub cons: Option<ConsAccess>,
}

impl Serialize for Step {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("t", &self.t)?;
        m.serialize_entry("proc", &self.proc)?;
        m.serialize_entry("kind", &self.kind)?;
        if let Some(reg) = &self.reg {
            m.serialize_entry("reg", reg)?;
        }
        if let Some(value) = &self.value {
            m.serialize_entry("value", value)?;
        }
        if let Some(fd) = &self.fd {
            m.serialize_entry("fd", fd)?;
        }
        if let Some(c) = &self.cons {
            m.serialize_entry("cons_id", &c.key)?;
            m.serialize_entry("proposal", &c.proposed)?;
            m.serialize_entry("value", &c.returned)?;
        }
        m.end()
    }
}

/// A finite run prefix: failure pattern, inputs and the executed steps.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub n: usize,
    pub crashes: Vec<(ProcessId, Time)>,
    pub inputs: Vec<Option<Bit>>,
    pub steps: Vec<Step>,
}

/// A deterministic per-process state machine. Each state carries the next
/// operation it wants to perform; `next` consumes that operation's response.
pub trait Automaton: Clone {
    type State: Clone + PartialEq + Eq + Hash + fmt::Debug;

    fn init(&self, me: ProcessId, input: Bit) -> Self::State;

    fn pending(&self, state: &Self::State) -> OpRequest;

    fn next(&self, state: &Self::State, response: &Response) -> Self::State;

    fn decision(&self, state: &Self::State) -> Option<Bit>;
}
