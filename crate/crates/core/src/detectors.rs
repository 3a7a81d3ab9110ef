//! Failure-detector histories and the Ω validity check.

use std::fmt::Debug;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sim::{FailurePattern, ProcessId, Time};

/// A failure-detector history: the value output at `p` at time `t`.
///
/// The range is process ids, which covers the Ω family; the event loop only
/// samples processes that have not crashed.
pub trait History: Debug + Send + Sync {
    fn n(&self) -> usize;

    fn sample(&self, p: ProcessId, t: Time) -> ProcessId;
}

/// Parameters of an Ω history: uniform noise over all ids before `t_stab`,
/// then `leader` everywhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OmegaSpec {
    pub t_stab: Time,
    pub leader: ProcessId,
    pub noise_seed: u64,
}

#[derive(Clone, Debug)]
pub struct OmegaHistory {
    n: usize,
    spec: OmegaSpec,
}

impl OmegaHistory {
    pub fn spec(&self) -> &OmegaSpec {
        &self.spec
    }
}

pub fn make_omega(pattern: &FailurePattern, spec: &OmegaSpec) -> Result<OmegaHistory> {
    let n = pattern.n();
    if spec.leader.index() >= n {
        return Err(Error::InvalidDetector(format!("leader {} out of range for n={n}", spec.leader)));
    }
    if !pattern.is_correct(spec.leader) {
        return Err(Error::InvalidDetector(format!("leader {} is faulty", spec.leader)));
    }
    Ok(OmegaHistory { n, spec: *spec })
}

impl History for OmegaHistory {
    fn n(&self) -> usize {
        self.n
    }

    fn sample(&self, p: ProcessId, t: Time) -> ProcessId {
        if t >= self.spec.t_stab {
            return self.spec.leader;
        }
        let mix = self.spec.noise_seed
            ^ (p.get() as u64).rotate_left(40)
            ^ t.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let mut rng = ChaCha8Rng::seed_from_u64(mix);
        ProcessId::from_index(rng.random_range(0..self.n))
    }
}

/// The id every correct process outputs throughout the final `tail` entries
/// of its series, if there is one and it is correct.
pub fn stabilized_leader(
    outputs: &[Vec<ProcessId>],
    pattern: &FailurePattern,
    tail: usize,
) -> Result<Option<ProcessId>> {
    let mut common: Option<ProcessId> = None;
    for p in pattern.correct() {
        let series = outputs.get(p.index()).map(Vec::as_slice).unwrap_or(&[]);
        if series.is_empty() {
            return Err(Error::EmptySeries(p));
        }
        if series.len() < tail {
            return Ok(None);
        }
        for &out in &series[series.len() - tail..] {
            match common {
                None => common = Some(out),
                Some(c) if c == out => {}
                Some(_) => return Ok(None),
            }
        }
    }
    Ok(common.filter(|&l| pattern.is_correct(l)))
}

/// Ω's eventual-leader property on finite series: a single correct id is
/// output by every correct process at every index of the final tail window.
pub fn validate_omega_stream(
    outputs: &[Vec<ProcessId>],
    pattern: &FailurePattern,
    tail: usize,
) -> Result<bool> {
    Ok(stabilized_leader(outputs, pattern, tail)?.is_some())
}
