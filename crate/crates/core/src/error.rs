use thiserror::Error;

use crate::sim::{ProcessId, RegKey, Time};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// The event loop was asked to step a process that has crashed.
    #[error("scheduler bug: {proc} stepped at t={t} after crashing at t={crash}")]
    CrashedProcess { proc: ProcessId, t: Time, crash: Time },

    #[error("scheduler bug: {proc} stepped after terminating")]
    TerminatedProcess { proc: ProcessId },

    #[error("model violation: {proc} wrote {reg} which it does not own")]
    NotOwner { proc: ProcessId, reg: RegKey },

    #[error("no live process to schedule at t={t}")]
    NoLiveProcess { t: Time },

    #[error("tail window {window} is longer than the trace ({len} steps)")]
    WindowTooLarge { window: usize, len: usize },

    #[error("invalid failure pattern: {0}")]
    InvalidPattern(String),

    #[error("invalid detector spec: {0}")]
    InvalidDetector(String),

    #[error("empty output series for {0}")]
    EmptySeries(ProcessId),

    #[error("dag corruption: vertex {proc}#{seq} has conflicting contents")]
    DagConflict { proc: ProcessId, seq: u32 },

    #[error("model error in simulated process {proc}: {msg}")]
    SimModel { proc: ProcessId, msg: String },

    #[error("safe agreement misuse: {0}")]
    SafeAgreementMisuse(String),

    #[error("malformed schedule: simulator index {0} is not 1 or 2")]
    MalformedSchedule(u8),

    #[error("replay stalled at macro-step {at}: local DAG lacks a vertex chosen by consensus")]
    ReplayStalled { at: usize },

    #[error("config error: {0}")]
    Config(String),
}
