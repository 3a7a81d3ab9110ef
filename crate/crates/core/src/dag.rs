//! The communication component: each process repeatedly reads every DAG
//! register, samples its detector, and publishes a new vertex that every
//! vertex it has seen points to.
//!
//! Vertices live in one append-only [`VertexStore`]; a vertex records the
//! per-process prefix lengths it was appended after (its `preds`). A DAG is
//! then just a [`Frontier`]: a downward-closed set of per-process prefixes.
//! Edge `(u, v)` is present iff `u` lies inside `v.preds`, so union is an
//! element-wise max and transitive closure holds by construction.
//! [`Dag`] is the explicit vertex/edge-set form, used for dumps and for
//! cross-checking the compact form on small runs.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::detectors::History;
use crate::error::{Error, Result};
use crate::sim::{Env, FailurePattern, OpRequest, Process, ProcessId, RegKey, Response, Slot, Step, StepKind, Time, Value};

/// `[proc, ·, seq]`: the `seq`-th vertex (1-based) published by `proc`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize)]
pub struct VertexId {
    pub proc: ProcessId,
    pub seq: u32,
}

impl VertexId {
    pub fn new(proc: ProcessId, seq: u32) -> Self {
        debug_assert!(seq >= 1);
        Self { proc, seq }
    }
}

/// Per-process prefix lengths: `count(p) = k` means vertices `[p, ·, 1..=k]`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, Serialize)]
#[serde(transparent)]
pub struct Frontier(Vec<u32>);

impl Frontier {
    pub fn new(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn from_counts(counts: Vec<u32>) -> Self {
        Self(counts)
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn count(&self, p: ProcessId) -> u32 {
        self.0[p.index()]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| c as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.0.get(v.proc.index()).is_some_and(|&c| v.seq <= c)
    }

    /// Extends the prefix of `v.proc` to cover `v`.
    pub fn include(&mut self, v: VertexId) {
        let c = &mut self.0[v.proc.index()];
        *c = (*c).max(v.seq);
    }

    pub fn join(&mut self, other: &Frontier) {
        if self.0.len() < other.0.len() {
            self.0.resize(other.0.len(), 0);
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a = (*a).max(*b);
        }
    }

    /// Element-wise `self ≥ other`.
    pub fn covers(&self, other: &Frontier) -> bool {
        other
            .0
            .iter()
            .enumerate()
            .all(|(i, &b)| self.0.get(i).copied().unwrap_or(0) >= b)
    }

    /// The most recent vertex of each process inside the frontier.
    pub fn latest(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| VertexId::new(ProcessId::from_index(i), c))
    }
}

/// `[proc, d, seq]` plus the time `d` was sampled (a witness for tests,
/// never read by algorithms) and the prefix it was appended after.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct DagVertex {
    pub proc: ProcessId,
    pub d: ProcessId,
    pub seq: u32,
    pub sample_time: Time,
    pub preds: Frontier,
}

impl DagVertex {
    pub fn id(&self) -> VertexId {
        VertexId::new(self.proc, self.seq)
    }
}

/// Every vertex ever published, one chain per process.
#[derive(Clone, Debug, Default)]
pub struct VertexStore {
    chains: Vec<Vec<DagVertex>>,
}

impl VertexStore {
    pub fn new(n: usize) -> Self {
        Self { chains: vec![Vec::new(); n] }
    }

    pub fn n(&self) -> usize {
        self.chains.len()
    }

    /// Appends to `v.proc`'s chain, assigning the next sequence number.
    ///
    /// Panics if `v.preds` mentions vertices that do not exist or omits the
    /// publisher's own previous vertex: both mean a process forged a DAG.
    pub fn append(&mut self, mut v: DagVertex) -> VertexId {
        let i = v.proc.index();
        let seq = self.chains[i].len() as u32 + 1;
        assert_eq!(v.preds.count(v.proc), seq - 1, "{} published without its own prefix", v.proc);
        assert!(self.frontier().covers(&v.preds), "{} references unpublished vertices", v.proc);
        v.seq = seq;
        self.chains[i].push(v);
        VertexId::new(ProcessId::from_index(i), seq)
    }

    pub fn get(&self, id: VertexId) -> Option<&DagVertex> {
        self.chains.get(id.proc.index())?.get(id.seq.checked_sub(1)? as usize)
    }

    pub fn chain(&self, p: ProcessId) -> &[DagVertex] {
        &self.chains[p.index()]
    }

    pub fn len(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The frontier holding every published vertex.
    pub fn frontier(&self) -> Frontier {
        Frontier(self.chains.iter().map(|c| c.len() as u32).collect())
    }

    pub fn view<'a>(&'a self, frontier: &'a Frontier) -> DagView<'a> {
        DagView { store: self, frontier }
    }
}

/// A DAG as held in some register: the vertices inside `frontier`.
#[derive(Clone, Copy, Debug)]
pub struct DagView<'a> {
    store: &'a VertexStore,
    frontier: &'a Frontier,
}

impl<'a> DagView<'a> {
    pub fn frontier(&self) -> &'a Frontier {
        self.frontier
    }

    pub fn contains(&self, id: VertexId) -> bool {
        self.frontier.contains(id)
    }

    pub fn vertex(&self, id: VertexId) -> Option<&'a DagVertex> {
        if self.contains(id) {
            self.store.get(id)
        } else {
            None
        }
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        u != v && self.contains(u) && self.vertex(v).is_some_and(|v| v.preds.contains(u))
    }

    /// Whether `v` has an incoming edge from every vertex in `others`.
    pub fn dominates(&self, v: VertexId, others: impl IntoIterator<Item = VertexId>) -> bool {
        others.into_iter().all(|u| self.has_edge(u, v))
    }

    pub fn materialize(&self) -> Dag {
        let mut dag = Dag::default();
        for p in ProcessId::all(self.frontier.n()) {
            for v in &self.store.chain(p)[..self.frontier.count(p) as usize] {
                dag.vertices.insert(v.id(), (v.d, v.sample_time));
                for u in v.preds.latest() {
                    for seq in 1..=u.seq {
                        dag.edges.insert((VertexId::new(u.proc, seq), v.id()));
                    }
                }
            }
        }
        dag
    }
}

/// Explicit vertex and edge sets.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dag {
    /// `id → (d, sample_time)`.
    pub vertices: BTreeMap<VertexId, (ProcessId, Time)>,
    pub edges: BTreeSet<(VertexId, VertexId)>,
}

#[derive(Serialize)]
struct DagDump {
    vertices: Vec<DumpVertex>,
    edges: Vec<[usize; 2]>,
}

#[derive(Serialize)]
struct DumpVertex {
    p: ProcessId,
    d: ProcessId,
    seq: u32,
    t: Time,
}

impl Dag {
    /// Grows the explicit form the way a communication round does: a new vertex of `p` with an
    /// edge from every existing vertex.
    pub fn add_vertex(&mut self, p: ProcessId, d: ProcessId, t: Time) -> VertexId {
        let seq = self.vertices.keys().filter(|v| v.proc == p).count() as u32 + 1;
        let id = VertexId::new(p, seq);
        for &u in self.vertices.keys() {
            self.edges.insert((u, id));
        }
        self.vertices.insert(id, (d, t));
        id
    }

    pub fn is_transitively_closed(&self) -> bool {
        self.edges.iter().all(|&(a, b)| {
            self.edges
                .range((b, VertexId::new(ProcessId::new(1), 1))..)
                .take_while(|(x, _)| *x == b)
                .all(|&(_, c)| self.edges.contains(&(a, c)))
        })
    }

    pub fn is_acyclic(&self) -> bool {
        // Closed graphs are acyclic iff they have no self-loop.
        let mut closed = self.clone();
        closed.close();
        closed.edges.iter().all(|(a, b)| a != b)
    }

    /// Adds every edge implied by transitivity.
    pub fn close(&mut self) {
        loop {
            let mut added = Vec::new();
            for &(a, b) in &self.edges {
                for &(_, c) in self.edges.range((b, VertexId::new(ProcessId::new(1), 1))..).take_while(|(x, _)| *x == b) {
                    if !self.edges.contains(&(a, c)) {
                        added.push((a, c));
                    }
                }
            }
            if added.is_empty() {
                return;
            }
            self.edges.extend(added);
        }
    }

    pub fn to_json(&self) -> String {
        let index: BTreeMap<VertexId, usize> = self.vertices.keys().enumerate().map(|(i, &v)| (v, i)).collect();
        let dump = DagDump {
            vertices: self
                .vertices
                .iter()
                .map(|(id, &(d, t))| DumpVertex { p: id.proc, d, seq: id.seq, t })
                .collect(),
            edges: self.edges.iter().map(|(a, b)| [index[a], index[b]]).collect(),
        };
        serde_json::to_string(&dump).expect("dag dump is plain data")
    }
}

/// `G ← a ∪ b`. Both operands must come from the same run.
pub fn dag_union(a: &Dag, b: &Dag) -> Result<Dag> {
    let mut out = a.clone();
    for (&id, &meta) in &b.vertices {
        match out.vertices.get(&id) {
            Some(&mine) if mine.0 != meta.0 => {
                return Err(Error::DagConflict { proc: id.proc, seq: id.seq });
            }
            Some(_) => {}
            None => {
                out.vertices.insert(id, meta);
            }
        }
    }
    out.edges.extend(b.edges.iter().copied());
    Ok(out)
}

/// One process's communication loop: read `G_1..G_n`, query, publish.
#[derive(Clone, Debug)]
pub struct CommProcess {
    me: ProcessId,
    n: usize,
    local: Frontier,
    phase: CommPhase,
    sampled: Option<(ProcessId, Time)>,
    published: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CommPhase {
    Read(usize),
    Query,
    Publish,
}

impl CommProcess {
    pub fn new(me: ProcessId, n: usize) -> Self {
        Self {
            me,
            n,
            local: Frontier::new(n),
            phase: CommPhase::Read(0),
            sampled: None,
            published: 0,
        }
    }

    /// The DAG as of this process's latest publication, plus whatever it
    /// has merged in since.
    pub fn local(&self) -> &Frontier {
        &self.local
    }

    pub fn published(&self) -> u64 {
        self.published
    }

    pub fn next_request(&self) -> OpRequest {
        match self.phase {
            CommPhase::Read(j) => OpRequest::Read(RegKey::new(ProcessId::from_index(j), Slot::Dag)),
            CommPhase::Query => OpRequest::Query,
            CommPhase::Publish => {
                let (d, sample_time) = self.sampled.expect("query precedes publish");
                OpRequest::PublishVertex { d, sample_time, preds: self.local.clone() }
            }
        }
    }

    pub fn on_response(&mut self, response: Response, t: Time) {
        self.phase = match (self.phase, response) {
            (CommPhase::Read(j), Response::Value(v)) => {
                if let Value::Dag(f) = v {
                    self.local.join(&f);
                }
                if j + 1 < self.n {
                    CommPhase::Read(j + 1)
                } else {
                    CommPhase::Query
                }
            }
            (CommPhase::Query, Response::Detector(d)) => {
                self.sampled = Some((d, t));
                CommPhase::Publish
            }
            (CommPhase::Publish, Response::Ack) => {
                let seq = self.local.count(self.me) + 1;
                self.local.include(VertexId::new(self.me, seq));
                self.published += 1;
                self.sampled = None;
                CommPhase::Read(0)
            }
            (phase, r) => panic!("{}: unexpected {r:?} in {phase:?}", self.me),
        };
    }
}

impl Process for CommProcess {
    fn next_op(&mut self, _env: &Env<'_>) -> OpRequest {
        self.next_request()
    }

    fn complete(&mut self, _op: &OpRequest, response: Response, env: &Env<'_>) {
        self.on_response(response, env.t);
    }
}

/// A DAG register write: `proc`'s register holds `frontier` from time `t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    pub t: Time,
    pub proc: ProcessId,
    pub frontier: Frontier,
}

/// The DAG register writes of a trace, in order.
pub fn snapshots(steps: &[Step]) -> Vec<Snapshot> {
    steps
        .iter()
        .filter(|s| s.kind == StepKind::Write)
        .filter_map(|s| match (&s.reg, &s.value) {
            (Some(reg), Some(Value::Dag(f))) if reg.slot == Slot::Dag => Some(Snapshot {
                t: s.t,
                proc: s.proc,
                frontier: f.clone(),
            }),
            _ => None,
        })
        .collect()
}

/// Which DAG property an issue concerns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum DagProperty {
    /// Samples are real detector outputs of live processes.
    Sampled,
    /// Edges follow sample times.
    Temporal,
    /// Each process's own vertices are chained.
    OwnChain,
    /// Transitive closure and downward-closed snapshots.
    Closure,
    /// Every vertex is eventually seen by a later vertex of each correct process.
    Reaches,
    /// Every DAG of a correct process is eventually included in every other.
    Converges,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DagIssue {
    pub property: DagProperty,
    pub t: Time,
    pub proc: ProcessId,
    pub detail: String,
}

/// Outcome of [`check_dag_properties`]. Liveness instances still open at
/// the end of the run are `pending`; they count against the run only when
/// the snapshot is older than the horizon.
#[derive(Clone, Debug, Default, Serialize)]
pub struct DagReport {
    pub snapshots: usize,
    pub vertices: usize,
    pub violations: Vec<DagIssue>,
    pub pending: Vec<DagIssue>,
    pub discharged: usize,
}

impl DagReport {
    pub fn safety_ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// Pending liveness instances at snapshots taken no later than `cutoff`.
    pub fn overdue(&self, cutoff: Time) -> impl Iterator<Item = &DagIssue> {
        self.pending.iter().filter(move |i| i.t <= cutoff)
    }

    pub fn ok_with_horizon(&self, end: Time, horizon: Time) -> bool {
        self.safety_ok() && self.overdue(end.saturating_sub(horizon)).next().is_none()
    }
}

pub fn check_dag_properties(
    store: &VertexStore,
    snaps: &[Snapshot],
    pattern: &FailurePattern,
    history: &dyn History,
) -> DagReport {
    let mut report = DagReport {
        snapshots: snaps.len(),
        vertices: store.len(),
        ..DagReport::default()
    };
    let n = store.n();
    let mut bad = |property, t, proc, detail: String| report.violations.push(DagIssue { property, t, proc, detail });

    for p in ProcessId::all(n) {
        let chain = store.chain(p);
        for (k, v) in chain.iter().enumerate() {
            let t = v.sample_time;
            if v.d != history.sample(p, t) || pattern.crashed_at(p, t) {
                bad(DagProperty::Sampled, t, p, format!("vertex {} holds {} sampled at {t}", v.seq, v.d));
            }
            if v.preds.count(p) != v.seq - 1 {
                bad(DagProperty::OwnChain, t, p, format!("vertex {} misses its own prefix", v.seq));
            }
            if k > 0 {
                let prev = &chain[k - 1];
                if !v.preds.covers(&prev.preds) {
                    bad(DagProperty::Closure, t, p, format!("vertex {} forgets predecessors of {}", v.seq, prev.seq));
                }
            }
            for u in v.preds.latest() {
                match store.get(u) {
                    None => bad(DagProperty::Closure, t, p, format!("vertex {} points at missing {u:?}", v.seq)),
                    Some(uv) => {
                        if uv.sample_time >= t {
                            bad(
                                DagProperty::Temporal,
                                t,
                                p,
                                format!("edge {u:?} -> {:?} goes back in time", v.id()),
                            );
                        }
                        if !v.preds.covers(&uv.preds) {
                            bad(DagProperty::Closure, t, p, format!("vertex {} is not closed over {u:?}", v.seq));
                        }
                    }
                }
            }
        }
    }

    let mut last: Vec<Option<&Frontier>> = vec![None; n];
    for s in snaps {
        for u in s.frontier.latest() {
            if !store.get(u).is_some_and(|uv| s.frontier.covers(&uv.preds)) {
                bad(DagProperty::Closure, s.t, s.proc, format!("snapshot is not downward closed at {u:?}"));
            }
        }
        if let Some(prev) = last[s.proc.index()] {
            if !s.frontier.covers(prev) {
                bad(DagProperty::Closure, s.t, s.proc, "register shrank".into());
            }
        }
        last[s.proc.index()] = Some(&s.frontier);
    }

    let mut by_proc: Vec<Vec<&Snapshot>> = vec![Vec::new(); n];
    for s in snaps {
        by_proc[s.proc.index()].push(s);
    }
    let correct = pattern.correct();
    for s in snaps {
        for &pj in &correct {
            let chain = store.chain(pj);
            let k = chain.partition_point(|v| !v.preds.covers(&s.frontier));
            if k < chain.len() {
                report.discharged += 1;
            } else {
                report.pending.push(DagIssue {
                    property: DagProperty::Reaches,
                    t: s.t,
                    proc: s.proc,
                    detail: format!("no vertex of {pj} above this snapshot yet"),
                });
            }
            if pattern.is_correct(s.proc) && pj != s.proc {
                let theirs = &by_proc[pj.index()];
                let k = theirs.partition_point(|o| !(o.t > s.t && o.frontier.covers(&s.frontier)));
                if k < theirs.len() {
                    report.discharged += 1;
                } else {
                    report.pending.push(DagIssue {
                        property: DagProperty::Converges,
                        t: s.t,
                        proc: s.proc,
                        detail: format!("not yet contained in a DAG of {pj}"),
                    });
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::detectors::{make_omega, OmegaSpec};
    use crate::sim::{Scheduler, System};

    fn pid(i: u32) -> ProcessId {
        ProcessId::new(i)
    }

    fn comm_system(pattern: FailurePattern, t_stab: Time, seed: u64) -> System<CommProcess> {
        let n = pattern.n();
        let leader = pattern.correct()[0];
        let h = Arc::new(make_omega(&pattern, &OmegaSpec { t_stab, leader, noise_seed: seed }).unwrap());
        let procs = ProcessId::all(n).map(|p| CommProcess::new(p, n)).collect();
        System::new(pattern, h, procs).unwrap()
    }

    /// Runs one full communication loop of `p`: n reads, query, publish.
    fn comm_round(sys: &mut System<CommProcess>, p: ProcessId) {
        for _ in 0..sys.n() + 2 {
            sys.execute_step(p).unwrap();
        }
    }

    #[test]
    fn first_vertex_has_no_edges() {
        let mut sys = comm_system(FailurePattern::new(2), 0, 1);
        comm_round(&mut sys, pid(1));
        let f = sys.proc(pid(1)).local().clone();
        let dag = sys.vertices().view(&f).materialize();
        assert_eq!(dag.vertices.len(), 1);
        assert_eq!(dag.vertices[&VertexId::new(pid(1), 1)].0, pid(1));
        assert!(dag.edges.is_empty());
    }

    #[test]
    fn second_vertex_follows_first() {
        let mut sys = comm_system(FailurePattern::new(2), 0, 1);
        comm_round(&mut sys, pid(1));
        comm_round(&mut sys, pid(1));
        let f = sys.proc(pid(1)).local().clone();
        let view = sys.vertices().view(&f);
        assert!(view.has_edge(VertexId::new(pid(1), 1), VertexId::new(pid(1), 2)));
        assert!(!view.has_edge(VertexId::new(pid(1), 2), VertexId::new(pid(1), 1)));
    }

    #[test]
    fn interleaved_rounds_match_explicit_construction() {
        // p1, p2, p1 rounds; p2 reads p1's DAG before publishing.
        let mut sys = comm_system(FailurePattern::new(2), 0, 1);
        comm_round(&mut sys, pid(1));
        comm_round(&mut sys, pid(2));
        comm_round(&mut sys, pid(1));
        let f = sys.proc(pid(1)).local().clone();
        let got = sys.vertices().view(&f).materialize();

        let mut want = Dag::default();
        let ts: Vec<Time> = sys.steps().iter().filter(|s| s.kind == StepKind::Query).map(|s| s.t).collect();
        want.add_vertex(pid(1), pid(1), ts[0]);
        want.add_vertex(pid(2), pid(1), ts[1]);
        want.add_vertex(pid(1), pid(1), ts[2]);
        assert_eq!(got, want);
        let v11 = VertexId::new(pid(1), 1);
        let v21 = VertexId::new(pid(2), 1);
        let v12 = VertexId::new(pid(1), 2);
        assert!(got.edges.contains(&(v11, v21)));
        assert!(got.edges.contains(&(v11, v12)));
        assert!(got.edges.contains(&(v21, v12)));
    }

    #[test]
    fn union_basics() {
        let empty = Dag::default();
        assert_eq!(dag_union(&empty, &empty).unwrap(), empty);

        let mut g = Dag::default();
        g.add_vertex(pid(1), pid(2), 0);
        g.add_vertex(pid(2), pid(2), 1);
        assert_eq!(dag_union(&g, &g).unwrap(), g);

        let mut a = g.clone();
        a.add_vertex(pid(1), pid(1), 5);
        let mut b = g.clone();
        b.add_vertex(pid(2), pid(1), 6);
        let u = dag_union(&a, &b).unwrap();
        assert_eq!(u.vertices.len(), 4);
        assert!(u.is_transitively_closed());
        assert!(u.is_acyclic());
    }

    #[test]
    fn union_detects_conflicting_vertices() {
        let mut a = Dag::default();
        a.add_vertex(pid(1), pid(1), 0);
        let mut b = Dag::default();
        b.add_vertex(pid(1), pid(2), 0);
        assert!(matches!(dag_union(&a, &b), Err(Error::DagConflict { .. })));
    }

    #[test]
    fn dump_format() {
        let mut g = Dag::default();
        g.add_vertex(pid(1), pid(2), 3);
        g.add_vertex(pid(2), pid(2), 7);
        assert_eq!(
            g.to_json(),
            r#"{"vertices":[{"p":1,"d":2,"seq":1,"t":3},{"p":2,"d":2,"seq":1,"t":7}],"edges":[[0,1]]}"#
        );
    }

    #[test]
    fn fair_run_satisfies_properties() {
        let pattern = FailurePattern::new(3);
        let mut sys = comm_system(pattern.clone(), 200, 4);
        sys.run(&mut Scheduler::seeded(3, 4), 3_000).unwrap();
        let snaps = snapshots(sys.steps());
        let report = check_dag_properties(sys.vertices(), &snaps, &pattern, sys.history().as_ref());
        assert!(report.safety_ok(), "{:?}", report.violations);
        assert!(report.ok_with_horizon(3_000, 500), "{:?}", report.pending.first());
        assert!(report.discharged > 0);
    }

    #[test]
    fn inverted_sample_time_is_flagged() {
        let pattern = FailurePattern::new(2);
        let mut sys = comm_system(pattern.clone(), 0, 4);
        sys.run(&mut Scheduler::round_robin(2), 40).unwrap();
        let mut store = sys.vertices().clone();
        let victim = store.chains[1][2].clone();
        let u = victim.preds.latest().find(|u| u.proc == pid(1)).unwrap();
        store.chains[0][u.seq as usize - 1].sample_time = victim.sample_time + 1;
        let report = check_dag_properties(&store, &snapshots(sys.steps()), &pattern, sys.history().as_ref());
        assert!(report.violations.iter().any(|i| i.property == DagProperty::Temporal));
    }

    #[test]
    fn compact_form_agrees_with_explicit_closure() {
        let pattern = FailurePattern::new(3);
        let mut sys = comm_system(pattern, 0, 9);
        sys.run(&mut Scheduler::seeded(3, 9), 200).unwrap();
        let f = sys.vertices().frontier();
        let dag = sys.vertices().view(&f).materialize();
        let mut closed = dag.clone();
        closed.close();
        assert_eq!(closed, dag);
        assert!(dag.is_acyclic());
        for &(a, b) in &dag.edges {
            assert!(dag.vertices[&a].1 < dag.vertices[&b].1);
        }
    }
}
