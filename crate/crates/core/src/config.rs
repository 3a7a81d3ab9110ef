//! Experiment configuration: a plain-text `key = value` file whose keys the
//! CLI mirrors as flags.
//!
//! ```text
//! # one crash, noisy detector until t = 300
//! n = 3
//! crash = p3@100
//! detector = omega
//! t_stab = 300
//! leader = p1
//! seed = 7
//! budget = 1000000
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::detectors::OmegaSpec;
use crate::error::{Error, Result};
use crate::extractor::ReductionConfig;
use crate::sim::{FailurePattern, ProcessId, SchedulerMode, Time};
use crate::suites::Suite;

/// Default exploration units per communication step.
pub const DEFAULT_EXPLORE_RATIO: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DetectorKind {
    Omega,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchedulerKind {
    Random,
    RoundRobin,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub crashes: Vec<(ProcessId, Time)>,
    pub detector: DetectorKind,
    pub t_stab: Time,
    /// Stable leader; the lowest correct id when unset.
    pub leader: Option<ProcessId>,
    /// Seed of the pre-stabilization noise; `seed` when unset.
    pub noise_seed: Option<u64>,
    pub scheduler: SchedulerKind,
    pub seed: u64,
    /// Event steps per run.
    pub budget: u64,
    /// Own steps over which every correct output must agree.
    pub tail_window: usize,
    pub explore_ratio: u32,
    /// Probe-log entries kept per process.
    pub probe_tail: usize,
    pub out: Option<PathBuf>,
    pub suite: Option<Suite>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 3,
            crashes: Vec::new(),
            detector: DetectorKind::Omega,
            t_stab: 300,
            leader: None,
            noise_seed: None,
            scheduler: SchedulerKind::Random,
            seed: 0,
            budget: 1_000_000,
            tail_window: 10_000,
            explore_ratio: DEFAULT_EXPLORE_RATIO,
            probe_tail: 10_000,
            out: None,
            suite: None,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

/// Parses `p3@100`.
pub fn parse_crash(s: &str) -> Result<(ProcessId, Time)> {
    let (p, t) = s
        .split_once('@')
        .ok_or_else(|| Error::Config(format!("crash {s:?} is not of the form pN@T")))?;
    Ok((p.trim().parse()?, parse_num("crash", t.trim())?))
}

impl ExperimentConfig {
    /// Reads a config file body. Later keys override earlier ones, except
    /// `crash`, which accumulates.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            config.set(key.trim(), value.trim())?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Sets one key. `-` and `_` are interchangeable in key names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.replace('-', "_").as_str() {
            "n" => self.n = parse_num(key, value)?,
            "crash" => {
                for c in value.split(',').map(str::trim).filter(|c| !c.is_empty()) {
                    self.crashes.push(parse_crash(c)?);
                }
            }
            "detector" => match value {
                "omega" => self.detector = DetectorKind::Omega,
                other => return Err(Error::Config(format!("unknown detector {other:?}"))),
            },
            "t_stab" => self.t_stab = parse_num(key, value)?,
            "leader" => self.leader = Some(value.parse()?),
            "noise_seed" => self.noise_seed = Some(parse_num(key, value)?),
            "scheduler" => {
                self.scheduler = match value {
                    "random" => SchedulerKind::Random,
                    "round-robin" | "round_robin" => SchedulerKind::RoundRobin,
                    other => return Err(Error::Config(format!("unknown scheduler {other:?}"))),
                }
            }
            "seed" => self.seed = parse_num(key, value)?,
            "budget" => self.budget = parse_num(key, value)?,
            "tail_window" => self.tail_window = parse_num(key, value)?,
            "explore_ratio" => self.explore_ratio = parse_num(key, value)?,
            "probe_tail" => self.probe_tail = parse_num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "suite" => self.suite = Some(value.parse()?),
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("n must be at least 2, got {}", self.n)));
        }
        let pattern = self.pattern()?;
        if pattern.correct().is_empty() {
            return Err(Error::Config("at least one process must be correct".into()));
        }
        if self.budget == 0 || self.tail_window == 0 || self.explore_ratio == 0 || self.probe_tail == 0 {
            return Err(Error::Config(
                "budget, tail_window, explore_ratio and probe_tail must be positive".into(),
            ));
        }
        if let Some(l) = self.leader {
            if !pattern.is_correct(l) {
                return Err(Error::Config(format!("leader {l} is not a correct process")));
            }
        }
        Ok(())
    }

    pub fn pattern(&self) -> Result<FailurePattern> {
        FailurePattern::with_crashes(self.n, &self.crashes)
    }

    pub fn omega(&self) -> Result<OmegaSpec> {
        let leader = match self.leader {
            Some(l) => l,
            None => self.pattern()?.correct()[0],
        };
        Ok(OmegaSpec { t_stab: self.t_stab, leader, noise_seed: self.noise_seed.unwrap_or(self.seed) })
    }

    pub fn scheduler_mode(&self) -> SchedulerMode {
        match self.scheduler {
            SchedulerKind::Random => SchedulerMode::SeededRandom { seed: self.seed },
            SchedulerKind::RoundRobin => SchedulerMode::RoundRobin,
        }
    }

    /// The same experiment under another seed. An explicit `noise_seed`
    /// is kept.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn reduction(&self, keep_trace: bool) -> Result<ReductionConfig> {
        self.validate()?;
        Ok(ReductionConfig {
            n: self.n,
            pattern: self.pattern()?,
            omega: self.omega()?,
            scheduler: self.scheduler_mode(),
            budget: self.budget,
            explore_ratio: self.explore_ratio,
            tail: self.tail_window,
            probe_tail: self.probe_tail,
            keep_trace,
        })
    }

    /// Renders the config in the file format; `parse(to_text())` is the
    /// identity.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n = {}", self.n);
        for (p, t) in &self.crashes {
            let _ = writeln!(s, "crash = {p}@{t}");
        }
        let _ = writeln!(s, "detector = omega");
        let _ = writeln!(s, "t_stab = {}", self.t_stab);
        if let Some(l) = self.leader {
            let _ = writeln!(s, "leader = {l}");
        }
        if let Some(ns) = self.noise_seed {
            let _ = writeln!(s, "noise_seed = {ns}");
        }
        let sched = match self.scheduler {
            SchedulerKind::Random => "random",
            SchedulerKind::RoundRobin => "round-robin",
        };
        let _ = writeln!(s, "scheduler = {sched}");
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "budget = {}", self.budget);
        let _ = writeln!(s, "tail_window = {}", self.tail_window);
        let _ = writeln!(s, "explore_ratio = {}", self.explore_ratio);
        let _ = writeln!(s, "probe_tail = {}", self.probe_tail);
        if let Some(out) = &self.out {
            let _ = writeln!(s, "out = {}", out.display());
        }
        if let Some(suite) = self.suite {
            let _ = writeln!(s, "suite = {suite}");
        }
        s
    }
}
