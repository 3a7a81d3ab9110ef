use std::collections::HashMap;

use super::types::{Bit, ConsKey};

/// A linearizable one-shot binary consensus object.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConsensusObject {
    decision: Option<Bit>,
    seen: [bool; 2],
}

impl ConsensusObject {
    /// One atomic `propose`: the first proposal fixes the decision.
    pub fn propose(&mut self, v: Bit) -> Bit {
        debug_assert!(v <= 1, "binary consensus");
        self.seen[v as usize] = true;
        *self.decision.get_or_insert(v)
    }

    pub fn decision(&self) -> Option<Bit> {
        self.decision
    }

    pub fn was_proposed(&self, v: Bit) -> bool {
        self.seen[v as usize]
    }
}

/// All consensus objects of a run, created on first access.
#[derive(Clone, Debug, Default)]
pub struct ConsRegistry {
    objects: HashMap<ConsKey, ConsensusObject>,
}

impl ConsRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn access(&mut self, key: ConsKey, proposal: Bit) -> Bit {
        self.objects.entry(key).or_default().propose(proposal)
    }

    pub fn get(&self, key: &ConsKey) -> Option<&ConsensusObject> {
        self.objects.get(key)
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }
}

/// Anything that can answer a consensus proposal. The registry answers
/// directly; the event loop routes proposals through a step.
pub trait ConsPort {
    fn propose(&mut self, key: ConsKey, proposal: Bit) -> Bit;
}

impl ConsPort for ConsRegistry {
    fn propose(&mut self, key: ConsKey, proposal: Bit) -> Bit {
        self.access(key, proposal)
    }
}
