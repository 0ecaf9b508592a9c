//! File-level commands behind the CLI.

use std::fs;
use std::path::{Path, PathBuf};

use super::config::RunConfig;
use super::persist;
use super::report::Report;
use super::structure::{Structure, StructureSpec};
use super::workload::{self, AdversarySettings, AdversaryState, OpRecord};
use crate::error::{Error, Result};
use crate::io::{load_dataset, read_csv_rows};

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct CommandOptions {
    /// Overrides the config seed.
    pub seed: Option<u64>,
    /// Overrides the command's default output path.
    pub out: Option<PathBuf>,
}

impl CommandOptions {
    fn seed(&self, cfg: &RunConfig) -> u64 {
        self.seed.unwrap_or(cfg.seed)
    }
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::Config(format!("{what} is not set")))
}

/// Builds the structure described by `cfg` in memory.
pub fn build_structure(cfg: &RunConfig, seed: u64) -> Result<Structure> {
    let mut spec = StructureSpec::from_config(cfg)?;
    spec.seed = seed;
    let data = load_dataset(&cfg.dataset.path, cfg.dataset.format)?;
    Structure::build(spec, data)
}

/// `build`: writes the structure to `--out` or `workload.structure`.
pub fn cmd_build(cfg: &RunConfig, opts: &CommandOptions) -> Result<(PathBuf, Structure)> {
    let s = build_structure(cfg, opts.seed(cfg))?;
    let out = match &opts.out {
        Some(p) => p.clone(),
        None => required(&cfg.workload.structure, "workload.structure")?.to_path_buf(),
    };
    persist::save(&s, &out)?;
    Ok((out, s))
}

fn report_path(cfg: &RunConfig, opts: &CommandOptions) -> Result<PathBuf> {
    match &opts.out {
        Some(p) => Ok(p.clone()),
        None => required(&cfg.output, "output").map(Path::to_path_buf),
    }
}

/// `query`: runs `workload.queries` against `workload.structure`.
pub fn cmd_query(cfg: &RunConfig, opts: &CommandOptions) -> Result<(PathBuf, Report)> {
    let s = persist::load(required(&cfg.workload.structure, "workload.structure")?)?;
    let queries = read_csv_rows(required(&cfg.workload.queries, "workload.queries")?)?;
    let report = workload::run_queries(&s, &queries, opts.seed(cfg))?;
    let out = report_path(cfg, opts)?;
    report.write(&out)?;
    Ok((out, report))
}

/// `adversary`: adaptive rounds against an adam structure.
pub fn cmd_adversary(cfg: &RunConfig, opts: &CommandOptions) -> Result<(PathBuf, Report, AdversaryState)> {
    let s = persist::load(required(&cfg.workload.structure, "workload.structure")?)?;
    let settings = AdversarySettings {
        rounds: cfg.workload.rounds,
        radius: cfg.workload.radius,
        candidates: cfg.workload.candidates,
    };
    let (report, state) = workload::run_adversary(&s, settings, opts.seed(cfg))?;
    let out = report_path(cfg, opts)?;
    report.write(&out)?;
    Ok((out, report, state))
}

/// Path of the per-operation CSV written next to a mutated structure.
pub fn ops_report_path(structure: &Path) -> PathBuf {
    structure.with_extension("ops.csv")
}

/// `mutate`: applies `workload.ops` and writes the updated structure to
/// `--out` (default: in place) with a per-operation CSV beside it. Nothing is
/// written if any line is malformed or any operation fails.
pub fn cmd_mutate(cfg: &RunConfig, opts: &CommandOptions) -> Result<(PathBuf, Vec<OpRecord>)> {
    let input = required(&cfg.workload.structure, "workload.structure")?;
    let ops_path = required(&cfg.workload.ops, "workload.ops")?;
    let ops = workload::parse_ops(&fs::read_to_string(ops_path)?, ops_path)?;
    let mut s = persist::load(input)?;
    let records = workload::apply_ops(&mut s, &ops)?;
    let out = opts.out.clone().unwrap_or_else(|| input.to_path_buf());
    persist::save(&s, &out)?;
    fs::write(ops_report_path(&out), workload::ops_csv(&records))?;
    Ok((out, records))
}
