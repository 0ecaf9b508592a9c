//! Configuration, persistence, workload runners and reports behind the
//! `adamhash` command-line tool.

pub mod commands;
pub mod config;
pub mod persist;
pub mod report;
pub mod structure;
pub mod workload;

pub use commands::{build_structure, cmd_adversary, cmd_build, cmd_mutate, cmd_query, CommandOptions};
pub use config::{Mode, RunConfig};
pub use report::{Contract, Report, ReportRow, Summary};
pub use structure::{Engine, Structure, StructureSpec};
pub use workload::{apply_ops, parse_ops, run_adversary, run_queries, AdversarySettings, AdversaryState, Op};
