use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::types::{ProcessId, Time};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchedulerMode {
    RoundRobin,
    SeededRandom { seed: u64 },
}

/// Chooses which live process takes the next step.
///
/// In seeded-random mode with a fairness window `W`, no live process waits
/// `W` or more consecutive steps: once a process's wait gets within the
/// number of live processes of `W`, it is forced ahead of the random pick.
#[derive(Clone, Debug)]
pub struct Scheduler {
    mode: SchedulerMode,
    rng: ChaCha8Rng,
    window: Option<u64>,
    last: Option<ProcessId>,
    waiting: Vec<u64>,
}

impl Scheduler {
    pub fn new(n: usize, mode: SchedulerMode, window: Option<u64>) -> Self {
        let seed = match mode {
            SchedulerMode::SeededRandom { seed } => seed,
            SchedulerMode::RoundRobin => 0,
        };
        Self {
            mode,
            rng: ChaCha8Rng::seed_from_u64(seed),
            window,
            last: None,
            waiting: vec![0; n],
        }
    }

    pub fn round_robin(n: usize) -> Self {
        Self::new(n, SchedulerMode::RoundRobin, None)
    }

    /// Seeded random scheduling with the default fairness window `3n`.
    pub fn seeded(n: usize, seed: u64) -> Self {
        Self::new(n, SchedulerMode::SeededRandom { seed }, Some(3 * n as u64))
    }

    pub fn mode(&self) -> SchedulerMode {
        self.mode
    }

    /// Picks the next process among those with `live[i] == true`.
    pub fn schedule_next(&mut self, live: &[bool], t: Time) -> Result<ProcessId> {
        let n = live.len();
        let live_count = live.iter().filter(|&&l| l).count();
        if live_count == 0 {
            return Err(Error::NoLiveProcess { t });
        }
        let chosen = match self.mode {
            SchedulerMode::RoundRobin => {
                let start = self.last.map_or(0, |p| p.index() + 1);
                (0..n)
                    .map(|k| (start + k) % n)
                    .find(|&i| live[i])
                    .expect("at least one live process")
            }
            SchedulerMode::SeededRandom { .. } => {
                let forced = self.window.and_then(|w| {
                    let threshold = w.saturating_sub(live_count as u64);
                    (0..n)
                        .filter(|&i| live[i] && self.waiting[i] >= threshold)
                        .max_by_key(|&i| (self.waiting[i], std::cmp::Reverse(i)))
                });
                match forced {
                    Some(i) => i,
                    None => {
                        let k = self.rng.random_range(0..live_count);
                        (0..n).filter(|&i| live[i]).nth(k).expect("k < live_count")
                    }
                }
            }
        };
        for (i, w) in self.waiting.iter_mut().enumerate() {
            if i == chosen {
                *w = 0;
            } else if live[i] {
                *w += 1;
            }
        }
        let p = ProcessId::from_index(chosen);
        self.last = Some(p);
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_robin_continues_after_last() {
        let mut s = Scheduler::round_robin(3);
        let live = [true, true, true];
        assert_eq!(s.schedule_next(&live, 0).unwrap(), ProcessId::new(1));
        assert_eq!(s.schedule_next(&live, 1).unwrap(), ProcessId::new(2));
        assert_eq!(s.schedule_next(&live, 2).unwrap(), ProcessId::new(3));
        assert_eq!(s.schedule_next(&live, 3).unwrap(), ProcessId::new(1));
    }

    #[test]
    fn round_robin_skips_dead() {
        let mut s = Scheduler::round_robin(3);
        s.schedule_next(&[true, true, true], 0).unwrap();
        assert_eq!(s.schedule_next(&[true, false, true], 1).unwrap(), ProcessId::new(3));
    }

    #[test]
    fn nobody_live_is_an_error() {
        let mut s = Scheduler::seeded(2, 1);
        assert_eq!(
            s.schedule_next(&[false, false], 9),
            Err(Error::NoLiveProcess { t: 9 })
        );
    }

    #[test]
    fn seeded_window_bounds_every_gap() {
        for seed in 0..50 {
            let n = 4;
            let w = 3 * n as u64;
            let mut s = Scheduler::seeded(n, seed);
            let live = vec![true; n];
            let mut last = vec![0u64; n];
            for t in 1..=5_000u64 {
                let p = s.schedule_next(&live, t).unwrap();
                assert!(t - last[p.index()] <= w, "seed {seed}: gap of {p} exceeds {w}");
                last[p.index()] = t;
            }
            for (i, &l) in last.iter().enumerate() {
                assert!(5_000 - l < w, "seed {seed}: p{} starved at the end", i + 1);
            }
        }
    }
}
