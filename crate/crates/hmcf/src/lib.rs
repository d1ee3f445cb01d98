//! Configuration files, output formats and run orchestration for
//! [`hmcf_core`].

pub mod config;
pub mod output;
pub mod runner;

pub use config::{load, parse, ConfigError, FlowRun, OutputConfig, RunConfig, StringInitial, StringRunConfig};
pub use runner::{
    compare, oracle, refine, run, simulate_flow, simulate_string, sweep, ContainmentReport, FlowOutcome,
    OracleKind, RefineTable, RunError, RunSummary,
};
