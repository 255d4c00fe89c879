//! Experiment matrix execution.
//!
//! Cells are independent (dataset x rate x method x seed); a small worker
//! pool claims them off a shared cursor and results land in their matrix
//! slot, so the output order never depends on scheduling.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use pos2fs_core::pipeline::{run_selection, SelectionResult};

use crate::config::{build_run_config, CellSpec, ExperimentPlan};
use crate::CliError;

/// Selection method of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "pos2fs-lfa")]
    Pos2fsLfa,
    #[serde(rename = "pos2fs-zero")]
    Pos2fsZero,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Pos2fsLfa => "pos2fs-lfa",
            Method::Pos2fsZero => "pos2fs-zero",
        }
    }

    pub fn parse(text: &str) -> Option<Method> {
        match text {
            "pos2fs-lfa" => Some(Method::Pos2fsLfa),
            "pos2fs-zero" => Some(Method::Pos2fsZero),
            _ => None,
        }
    }
}

/// One row of the cell table. Wall time is informational and kept out of
/// the deterministic report body.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRecord {
    pub dataset: String,
    pub rate: f64,
    pub method: Method,
    pub seed: u64,
    pub selected_count: usize,
    pub accuracy: f64,
    pub degenerate: bool,
    pub selected_ids: Vec<usize>,
    pub wall_time_ms: u64,
}

/// Outcome of one cell: the record plus, when requested, the full per-step
/// trace for verbose dumps.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub spec: CellSpec,
    pub result: Result<(CellRecord, Option<SelectionResult>), String>,
}

/// Execute one cell synchronously.
pub fn run_cell(
    plan: &ExperimentPlan,
    cell: &CellSpec,
    keep_trace: bool,
) -> Result<(CellRecord, Option<SelectionResult>), CliError> {
    let source = plan.sources[cell.dataset_index]
        .as_ref()
        .map_err(|message| CliError::Cell {
            cell: cell.label(),
            message: format!("dataset unavailable: {message}"),
        })?;
    let run_config = build_run_config(&plan.config, cell)?;
    let started = Instant::now();
    let selection = run_selection(
        &source.dataset,
        source.observed.as_deref().map(Vec::as_slice),
        &run_config,
    )
    .map_err(|e| CliError::Cell {
        cell: cell.label(),
        message: e.to_string(),
    })?;
    let wall_time_ms = started.elapsed().as_millis() as u64;
    let record = CellRecord {
        dataset: cell.dataset.clone(),
        rate: cell.rate,
        method: cell.method,
        seed: cell.seed,
        selected_count: selection.selected_count,
        accuracy: selection.accuracy,
        degenerate: selection.degenerate_evaluation,
        selected_ids: selection.selected_ids.clone(),
        wall_time_ms,
    };
    Ok((record, keep_trace.then_some(selection)))
}

/// Run every cell of the plan with up to `workers` threads. Failed cells
/// are reported, not fatal; the successful rest still completes.
pub fn execute_plan(plan: &ExperimentPlan, workers: usize, keep_traces: bool) -> Vec<CellOutcome> {
    let worker_count = workers.max(1).min(plan.cells.len().max(1));
    let cursor = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<CellOutcome>>> = Mutex::new(vec![None; plan.cells.len()]);

    std::thread::scope(|scope| {
        for _ in 0..worker_count {
            scope.spawn(|| loop {
                let index = cursor.fetch_add(1, Ordering::Relaxed);
                if index >= plan.cells.len() {
                    break;
                }
                let cell = &plan.cells[index];
                let result = run_cell(plan, cell, keep_traces).map_err(|e| e.to_string());
                let outcome = CellOutcome {
                    spec: cell.clone(),
                    result,
                };
                slots.lock().unwrap()[index] = Some(outcome);
            });
        }
    });

    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|slot| slot.expect("every cell executed"))
        .collect()
}
