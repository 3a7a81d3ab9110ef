use std::collections::{BTreeSet, HashMap};

use super::types::{ConsKey, FailurePattern, ProcessId, RegKey, Step, StepKind};
use crate::error::{Error, Result};

/// Fairness and resilience of a finite run prefix under the tail-window
/// convention: a process "appears infinitely often" iff it takes a step in
/// the last `w_tail` steps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunClass {
    pub fair: bool,
    pub max_k_resilience: usize,
    pub in_tail: BTreeSet<ProcessId>,
}

pub fn classify_run(steps: &[Step], pattern: &FailurePattern, w_tail: usize) -> Result<RunClass> {
    if w_tail > steps.len() {
        return Err(Error::WindowTooLarge { window: w_tail, len: steps.len() });
    }
    let in_tail: BTreeSet<ProcessId> = steps[steps.len() - w_tail..].iter().map(|s| s.proc).collect();
    let fair = pattern.correct().iter().all(|p| in_tail.contains(p));
    Ok(RunClass {
        fair,
        max_k_resilience: pattern.n() - in_tail.len(),
        in_tail,
    })
}

/// Objects through which steps become causally related.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Object {
    Reg(RegKey),
    Cons(ConsKey),
}

/// Causal precedence on a finite trace: same-process order, a write before a
/// later read of the same register, and the transitive closure of both.
/// A consensus access is treated as a write followed by a read of its object.
///
/// Built with vector clocks: `clock[s][p]` counts how many of `p`'s steps
/// causally precede-or-equal step `s`.
#[derive(Clone, Debug)]
pub struct CausalOrder {
    clocks: Vec<Vec<u32>>,
    /// Position of each step within its own process's subsequence (1-based).
    own_pos: Vec<u32>,
    procs: Vec<ProcessId>,
}

impl CausalOrder {
    pub fn new(n: usize, steps: &[Step]) -> Self {
        let mut proc_clock = vec![vec![0u32; n]; n];
        let mut object_clock: HashMap<Object, Vec<u32>> = HashMap::new();
        let mut clocks = Vec::with_capacity(steps.len());
        let mut own_pos = Vec::with_capacity(steps.len());
        for s in steps {
            let i = s.proc.index();
            let mut clock = std::mem::take(&mut proc_clock[i]);
            clock[i] += 1;
            let object = match (s.kind, s.reg, s.cons) {
                (StepKind::Read | StepKind::Write, Some(reg), _) => Some(Object::Reg(reg)),
                (StepKind::Cons, _, Some(c)) => Some(Object::Cons(c.key)),
                _ => None,
            };
            if let Some(obj) = object {
                let reads = matches!(s.kind, StepKind::Read | StepKind::Cons);
                let writes = matches!(s.kind, StepKind::Write | StepKind::Cons);
                if reads {
                    if let Some(oc) = object_clock.get(&obj) {
                        join(&mut clock, oc);
                    }
                }
                if writes {
                    let oc = object_clock.entry(obj).or_insert_with(|| vec![0; n]);
                    join(oc, &clock);
                }
            }
            own_pos.push(clock[i]);
            clocks.push(clock.clone());
            proc_clock[i] = clock;
        }
        Self {
            clocks,
            own_pos,
            procs: steps.iter().map(|s| s.proc).collect(),
        }
    }

    /// Whether step `s` causally precedes step `s2` (indices into the trace).
    pub fn precedes(&self, s: usize, s2: usize) -> bool {
        s != s2 && s < s2 && self.clocks[s2][self.procs[s].index()] >= self.own_pos[s]
    }
}

fn join(into: &mut [u32], other: &[u32]) {
    for (a, b) in into.iter_mut().zip(other) {
        *a = (*a).max(*b);
    }
}

/// Convenience wrapper for a single query.
pub fn causal_precedes(n: usize, steps: &[Step], s: usize, s2: usize) -> bool {
    CausalOrder::new(n, steps).precedes(s, s2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{Slot, Time, Value};

    fn step(t: Time, p: u32, kind: StepKind, reg: Option<RegKey>) -> Step {
        Step {
            t,
            proc: ProcessId::new(p),
            kind,
            reg,
            value: Some(Value::Bot),
            fd: None,
            cons: None,
        }
    }

    fn reg(owner: u32, i: u64) -> Option<RegKey> {
        Some(RegKey::new(ProcessId::new(owner), Slot::Cell(i)))
    }

    #[test]
    fn same_process_order() {
        let steps = vec![
            step(0, 1, StepKind::Local, None),
            step(1, 1, StepKind::Local, None),
        ];
        assert!(causal_precedes(2, &steps, 0, 1));
        assert!(!causal_precedes(2, &steps, 1, 0));
        assert!(!causal_precedes(2, &steps, 0, 0));
    }

    #[test]
    fn write_then_read_of_other_register_is_unrelated() {
        let steps = vec![
            step(0, 1, StepKind::Write, reg(1, 0)),
            step(1, 2, StepKind::Read, reg(1, 1)),
        ];
        assert!(!causal_precedes(2, &steps, 0, 1));
    }

    #[test]
    fn write_read_write_chain_is_transitive() {
        // p1 writes a, p2 reads a then writes b, p3 reads b.
        let steps = vec![
            step(0, 1, StepKind::Write, reg(1, 0)),
            step(1, 2, StepKind::Read, reg(1, 0)),
            step(2, 2, StepKind::Write, reg(2, 0)),
            step(3, 3, StepKind::Read, reg(2, 0)),
        ];
        assert!(causal_precedes(3, &steps, 0, 3));
    }

    #[test]
    fn classify_examples() {
        let pattern = FailurePattern::new(3);
        let steps: Vec<Step> = (0..6)
            .map(|t| step(t, (t % 3) as u32 + 1, StepKind::Local, None))
            .collect();
        let c = classify_run(&steps, &pattern, 3).unwrap();
        assert!(c.fair);
        assert_eq!(c.max_k_resilience, 0);

        let two: Vec<Step> = (0..6).map(|t| step(t, (t % 2) as u32 + 1, StepKind::Local, None)).collect();
        let c = classify_run(&two, &pattern, 4).unwrap();
        assert!(!c.fair);
        assert_eq!(c.max_k_resilience, 1);

        let four = FailurePattern::new(4);
        let solo: Vec<Step> = (0..5).map(|t| step(t, 1, StepKind::Local, None)).collect();
        assert_eq!(classify_run(&solo, &four, 5).unwrap().max_k_resilience, 3);

        assert!(matches!(
            classify_run(&solo, &four, 6),
            Err(Error::WindowTooLarge { .. })
        ));
    }
}
