//! Extracting an eventual leader (Ω) from any failure detector that solves
//! consensus, on a deterministic asynchronous shared-memory simulator.
//!
//! The crate is layered bottom-up:
//!
//! * [`sim`]: processes, single-writer registers, failure patterns, the
//!   deterministic event loop and run-level analysis (fairness, causality).
//! * [`detectors`]: failure-detector histories; ships the Ω family.
//! * [`consensus`]: a consensus algorithm that uses Ω, written as an
//!   [`Automaton`](sim::Automaton). It is the algorithm the reduction simulates.
//! * [`dag`]: the communication component: every process grows a DAG of
//!   detector samples in its register.
//! * [`asyncsim`]: the detector-free algorithm that simulates an automaton
//!   from DAG samples, with the consensus-gated wait loop.
//! * [`bgsim`]: two simulators running a 1-resilient simulation of the
//!   detector-free algorithm through safe agreement.
//! * [`extractor`]: depth-first exploration of simulator schedules and the
//!   extracted Ω output, plus the end-to-end reduction run.
//! * [`suites`]: the property suites shared by the CLI and the test suite.

pub mod asyncsim;
pub mod bgsim;
pub mod config;
pub mod consensus;
pub mod dag;
pub mod detectors;
pub mod error;
pub mod extractor;
pub mod sim;
pub mod suites;

pub use error::{Error, Result};
pub use sim::{
    Automaton, Bit, ConsKey, FailurePattern, OpRequest, ProcessId, RegKey, Response, Slot, Step,
    StepKind, Time, Trace, Value,
};
