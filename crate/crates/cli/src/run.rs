//! Runs a resolved configuration end to end and writes the output files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use simulband_core::estimators::EstimatorError;
use simulband_core::regions::RegionError;
use simulband_core::MestError;

use crate::analysis::{analyze, mapping_for, simulate, DataSummary, ResultDoc};
use crate::config::{AnalysisConfig, Command, ConfigError};
use crate::ingest::{ingest_csv_with, IngestError};
use crate::{output, svg};

pub const RESULT_FILE: &str = "result.json";
pub const TABLE_FILE: &str = "table.csv";
pub const GRID_FILE: &str = "grid.csv";
pub const FIGURE_FILE: &str = "figure.svg";

#[derive(Debug)]
pub struct RunOutput {
    pub result: ResultDoc,
    pub files: Vec<PathBuf>,
    /// Ingestion notes such as dropped rows.
    pub diagnostics: Vec<String>,
}

/// Computes the result without touching the output directory.
pub fn compute(cfg: &AnalysisConfig) -> anyhow::Result<(ResultDoc, Vec<String>)> {
    if cfg.command == Command::Simulate {
        return Ok((simulate(cfg)?, vec![]));
    }
    let path = cfg.data_path.as_ref().context("no data file configured")?;
    let ingested = ingest_csv_with(path, &mapping_for(cfg), &cfg.derive)?;
    let summary = DataSummary { n: ingested.dataset.n(), rows_read: ingested.rows_read, dropped: ingested.dropped };
    let doc = analyze(cfg, &ingested.dataset, Some(summary))?;
    Ok((doc, ingested.diagnostics))
}

fn write(dir: &Path, name: &str, bytes: &[u8], files: &mut Vec<PathBuf>) -> anyhow::Result<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
    files.push(path);
    Ok(())
}

pub fn run(cfg: &AnalysisConfig) -> anyhow::Result<RunOutput> {
    let (doc, diagnostics) = compute(cfg)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut files = Vec::new();
    write(dir, RESULT_FILE, output::to_json(&doc)?.as_bytes(), &mut files)?;

    let mut table = Vec::new();
    match &doc.regions {
        Some(r) => output::write_table(&mut table, r)?,
        None => output::write_simulation_table(&mut table, &doc)?,
    }
    write(dir, TABLE_FILE, &table, &mut files)?;

    if let Some(g) = &doc.grid {
        let mut grid = Vec::new();
        output::write_grid(&mut grid, g)?;
        write(dir, GRID_FILE, &grid, &mut files)?;
        let label = format!("Effect on {}", cfg.columns.outcomes[0]);
        write(dir, FIGURE_FILE, svg::grid_figure(g, &label).as_bytes(), &mut files)?;
    } else if let (Command::Effects, Some(r)) = (cfg.command, &doc.regions) {
        write(dir, FIGURE_FILE, svg::effects_figure(r).as_bytes(), &mut files)?;
    }
    Ok(RunOutput { result: doc, files, diagnostics })
}

/// Exit status for a failed run: 2 configuration, 3 data, 4 estimation or
/// region construction, 1 anything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if cause.is::<IngestError>() {
            return 3;
        }
        if let Some(e) = cause.downcast_ref::<EstimatorError>() {
            return if matches!(e, EstimatorError::Data(_)) { 3 } else { 4 };
        }
        if cause.is::<MestError>() || cause.is::<RegionError>() {
            return 4;
        }
    }
    1
}
