//! The asynchronous shared-memory model and its deterministic event loop.

mod analysis;
mod cons;
mod sched;
mod system;
mod trace_io;
mod types;

pub use analysis::{causal_precedes, classify_run, CausalOrder, RunClass};
pub use cons::{ConsPort, ConsRegistry, ConsensusObject};
pub use sched::{Scheduler, SchedulerMode};
pub use system::{AutomatonProcess, Env, Process, RunStats, System};
pub use trace_io::{steps_to_jsonl, write_jsonl};
pub use types::{
    Automaton, Bit, ConsAccess, ConsKey, FailurePattern, OpRequest, ProcessId, RegKey, Response,
    Slot, Step, StepKind, Time, Trace, Value,
};
