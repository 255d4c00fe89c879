//! Report files: the per-cell table, the aggregate tables (selected-feature
//! counts, accuracies, Wilcoxon rank sums), and a human-readable summary.
//!
//! `cells.csv` contains only deterministic fields, so a rerun with the same
//! config is byte-identical; wall times go to `timing.csv`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use pos2fs_core::pipeline::SelectionResult;
use pos2fs_core::stats::{wilcoxon_exact_p_value, wilcoxon_signed_rank, PairedSamples};

use crate::harness::{CellOutcome, CellRecord, Method};
use crate::CliError;

pub const CELLS_FILE: &str = "cells.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const FIG1_FILE: &str = "fig1_counts.csv";
pub const FIG2_FILE: &str = "fig2_accuracy.csv";
pub const TABLE4_FILE: &str = "table4_wilcoxon.csv";

pub fn cells_csv(records: &[&CellRecord]) -> String {
    let mut out =
        String::from("dataset,rate,method,seed,selected_count,accuracy,degenerate,selected_ids\n");
    for r in records {
        let ids: Vec<String> = r.selected_ids.iter().map(usize::to_string).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.dataset,
            r.rate,
            r.method.as_str(),
            r.seed,
            r.selected_count,
            r.accuracy,
            r.degenerate,
            ids.join(";"),
        );
    }
    out
}

pub fn timing_csv(records: &[&CellRecord]) -> String {
    let mut out = String::from("dataset,rate,method,seed,wall_time_ms\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.dataset,
            r.rate,
            r.method.as_str(),
            r.seed,
            r.wall_time_ms
        );
    }
    out
}

/// Parse a cells.csv produced by [`cells_csv`]. Wall times are not part of
/// the file and read back as zero.
pub fn read_cells_csv(path: &Path) -> Result<Vec<CellRecord>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut records = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if index == 0 || line.trim().is_empty() {
            continue;
        }
        let line_number = index + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(CliError::Csv {
                path: path.to_path_buf(),
                line: line_number,
                message: format!("expected 8 fields, found {}", fields.len()),
            });
        }
        let bad = |message: String| CliError::Csv {
            path: path.to_path_buf(),
            line: line_number,
            message,
        };
        let method = Method::parse(fields[2])
            .ok_or_else(|| bad(format!("unknown method '{}'", fields[2])))?;
        let selected_ids = if fields[7].is_empty() {
            Vec::new()
        } else {
            fields[7]
                .split(';')
                .map(|s| s.parse::<usize>().map_err(|_| bad(format!("bad id '{s}'"))))
                .collect::<Result<Vec<usize>, CliError>>()?
        };
        records.push(CellRecord {
            dataset: fields[0].to_string(),
            rate: fields[1].parse().map_err(|_| bad("bad rate".into()))?,
            method,
            seed: fields[3].parse().map_err(|_| bad("bad seed".into()))?,
            selected_count: fields[4].parse().map_err(|_| bad("bad count".into()))?,
            accuracy: fields[5].parse().map_err(|_| bad("bad accuracy".into()))?,
            degenerate: fields[6].parse().map_err(|_| bad("bad flag".into()))?,
            selected_ids,
            wall_time_ms: 0,
        });
    }
    Ok(records)
}

/// Group key for the aggregate tables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct GroupKey {
    dataset: String,
    // Rates are config literals; order them by their text form to keep the
    // key Ord without float comparisons.
    rate_text: String,
    method: &'static str,
}

fn rate_text(rate: f64) -> String {
    format!("{rate}")
}

/// Mean over seeds of one metric per (dataset, rate, method).
fn aggregate<F: Fn(&CellRecord) -> f64>(
    records: &[&CellRecord],
    metric: F,
) -> BTreeMap<GroupKey, (f64, usize)> {
    let mut sums: BTreeMap<GroupKey, (f64, usize)> = BTreeMap::new();
    for r in records {
        let key = GroupKey {
            dataset: r.dataset.clone(),
            rate_text: rate_text(r.rate),
            method: r.method.as_str(),
        };
        let entry = sums.entry(key).or_insert((0.0, 0));
        entry.0 += metric(r);
        entry.1 += 1;
    }
    sums
}

fn aggregate_csv<F: Fn(&CellRecord) -> f64>(
    records: &[&CellRecord],
    header: &str,
    metric: F,
) -> String {
    let mut out = format!("dataset,rate,method,{header},cells\n");
    for (key, (sum, count)) in aggregate(records, metric) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            key.dataset,
            key.rate_text,
            key.method,
            sum / count as f64,
            count
        );
    }
    out
}

/// Mean selected-feature count per (dataset, rate, method).
pub fn fig1_counts_csv(records: &[&CellRecord]) -> String {
    aggregate_csv(records, "mean_selected_count", |r| r.selected_count as f64)
}

/// Mean accuracy per (dataset, rate, method).
pub fn fig2_accuracy_csv(records: &[&CellRecord]) -> String {
    aggregate_csv(records, "mean_accuracy", |r| r.accuracy)
}

/// One Wilcoxon comparison row.
#[derive(Debug, Clone, PartialEq)]
pub struct WilcoxonRow {
    pub rate: String,
    pub datasets: usize,
    pub r_plus: f64,
    pub r_minus: f64,
    pub n_effective: usize,
    pub p_exact: Option<f64>,
}

/// Paired Wilcoxon signed-rank per rate: one pair per dataset, pairing the
/// per-dataset mean accuracy of `pos2fs-lfa` against `pos2fs-zero`.
pub fn wilcoxon_rows(records: &[&CellRecord]) -> Vec<WilcoxonRow> {
    let means = aggregate(records, |r| r.accuracy);
    let mut rates: Vec<String> = means.keys().map(|k| k.rate_text.clone()).collect();
    rates.sort();
    rates.dedup();

    let mut rows = Vec::new();
    for rate in rates {
        let mut lfa = Vec::new();
        let mut zero = Vec::new();
        let mut datasets: Vec<String> = means
            .keys()
            .filter(|k| k.rate_text == rate)
            .map(|k| k.dataset.clone())
            .collect();
        datasets.sort();
        datasets.dedup();
        for dataset in &datasets {
            let get = |method: &'static str| {
                means
                    .get(&GroupKey {
                        dataset: dataset.clone(),
                        rate_text: rate.clone(),
                        method,
                    })
                    .map(|(sum, count)| sum / *count as f64)
            };
            if let (Some(a), Some(b)) = (get("pos2fs-lfa"), get("pos2fs-zero")) {
                lfa.push(a);
                zero.push(b);
            }
        }
        if lfa.is_empty() {
            continue;
        }
        let samples = PairedSamples::new(lfa.clone(), zero).expect("validated accuracies");
        let sums = wilcoxon_signed_rank(&samples);
        rows.push(WilcoxonRow {
            rate,
            datasets: lfa.len(),
            r_plus: sums.r_plus,
            r_minus: sums.r_minus,
            n_effective: sums.n_effective,
            p_exact: wilcoxon_exact_p_value(&samples).ok(),
        });
    }
    rows
}

pub fn table4_wilcoxon_csv(records: &[&CellRecord]) -> String {
    let mut out = String::from("rate,datasets,r_plus,r_minus,n_effective,p_exact\n");
    for row in wilcoxon_rows(records) {
        let p = row.p_exact.map(|p| p.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.rate, row.datasets, row.r_plus, row.r_minus, row.n_effective, p
        );
    }
    out
}

fn summary_tables(records: &[&CellRecord]) -> String {
    let mut out = String::new();
    out.push_str("== Selected feature counts (mean over seeds) ==\n");
    out.push_str(&table_block(records, |r| r.selected_count as f64));
    out.push_str("\n== Accuracy (mean over seeds) ==\n");
    out.push_str(&table_block(records, |r| r.accuracy));
    out.push_str("\n== Wilcoxon signed-rank: pos2fs-lfa vs pos2fs-zero accuracy ==\n");
    let rows = wilcoxon_rows(records);
    if rows.is_empty() {
        out.push_str("(needs both methods at a shared rate)\n");
    } else {
        out.push_str("rate        datasets  R+      R-      p_exact\n");
        for row in rows {
            let p = row
                .p_exact
                .map(|p| format!("{p:.5}"))
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:<10}  {:<8}  {:<6}  {:<6}  {p}",
                row.rate, row.datasets, row.r_plus, row.r_minus
            );
        }
    }
    out
}

fn table_block<F: Fn(&CellRecord) -> f64>(records: &[&CellRecord], metric: F) -> String {
    let mut out = String::from("dataset          rate     method        mean\n");
    for (key, (sum, count)) in aggregate(records, metric) {
        let _ = writeln!(
            out,
            "{:<15}  {:<7}  {:<12}  {:.4}",
            key.dataset,
            key.rate_text,
            key.method,
            sum / count as f64
        );
    }
    out
}

/// Write the full report directory from executed cells.
pub fn write_run_report(
    out_dir: &Path,
    outcomes: &[CellOutcome],
    resolved_config: &str,
    verbose: bool,
) -> Result<usize, CliError> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let records: Vec<&CellRecord> = outcomes
        .iter()
        .filter_map(|o| o.result.as_ref().ok().map(|(record, _)| record))
        .collect();
    let failures: Vec<(&CellOutcome, &String)> = outcomes
        .iter()
        .filter_map(|o| o.result.as_ref().err().map(|message| (o, message)))
        .collect();

    write(out_dir.join(CELLS_FILE), cells_csv(&records))?;
    write(out_dir.join(TIMING_FILE), timing_csv(&records))?;
    write(out_dir.join(FIG1_FILE), fig1_counts_csv(&records))?;
    write(out_dir.join(FIG2_FILE), fig2_accuracy_csv(&records))?;
    write(out_dir.join(TABLE4_FILE), table4_wilcoxon_csv(&records))?;

    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "pos2fs run: {} cells ({} ok, {} failed)\n",
        outcomes.len(),
        records.len(),
        failures.len()
    );
    summary.push_str(&summary_tables(&records));
    if !failures.is_empty() {
        summary.push_str("\n== Failed cells ==\n");
        for (outcome, message) in &failures {
            let _ = writeln!(summary, "{}: {message}", outcome.spec.label());
        }
    }
    let total_ms: u64 = records.iter().map(|r| r.wall_time_ms).sum();
    let _ = writeln!(summary, "\ntotal cell wall time: {total_ms} ms");
    summary.push_str("\n== Resolved configuration ==\n");
    summary.push_str(resolved_config);
    write(out_dir.join(SUMMARY_FILE), summary)?;

    if verbose {
        write_traces(out_dir, outcomes)?;
    }
    Ok(failures.len())
}

/// Re-aggregate an existing cells file into report tables.
pub fn write_report_from_cells(out_dir: &Path, cells_path: &Path) -> Result<(), CliError> {
    let records = read_cells_csv(cells_path)?;
    let refs: Vec<&CellRecord> = records.iter().collect();
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    write(out_dir.join(FIG1_FILE), fig1_counts_csv(&refs))?;
    write(out_dir.join(FIG2_FILE), fig2_accuracy_csv(&refs))?;
    write(out_dir.join(TABLE4_FILE), table4_wilcoxon_csv(&refs))?;
    let mut summary = format!("pos2fs report over {} cells\n\n", refs.len());
    summary.push_str(&summary_tables(&refs));
    write(out_dir.join(SUMMARY_FILE), summary)?;
    Ok(())
}

/// Per-cell diagnostic dumps: swarm trace, imputation loss trace, and the
/// decision log.
fn write_traces(out_dir: &Path, outcomes: &[CellOutcome]) -> Result<(), CliError> {
    let trace_dir = out_dir.join("trace");
    fs::create_dir_all(&trace_dir).map_err(|e| CliError::io(&trace_dir, e))?;
    for outcome in outcomes {
        let Ok((record, Some(selection))) = &outcome.result else {
            continue;
        };
        let stem = format!(
            "{}_rate{}_{}_seed{}",
            record.dataset,
            record.rate,
            record.method.as_str(),
            record.seed
        )
        .replace('.', "p");
        write_trace_files(&trace_dir, &stem, selection)?;
    }
    Ok(())
}

fn write_trace_files(
    trace_dir: &Path,
    stem: &str,
    selection: &SelectionResult,
) -> Result<(), CliError> {
    let mut pso = String::from("step,iteration,gbest_fitness\n");
    let mut lfa = String::from("step,epoch,mean_loss\n");
    let mut decisions = String::from("step,feature_id,region,admitted,eliminated\n");
    for step in &selection.steps {
        for (i, fitness) in step.swarm_trace.iter().enumerate() {
            let _ = writeln!(pso, "{},{},{}", step.step_index, i, fitness);
        }
        for (epoch, loss) in step.lfa_loss_trace.iter().enumerate() {
            let _ = writeln!(lfa, "{},{},{}", step.step_index, epoch, loss);
        }
        for d in &step.decisions {
            let _ = writeln!(
                decisions,
                "{},{},{},{},{}",
                step.step_index,
                d.feature_id,
                d.region.as_str(),
                d.admitted,
                d.eliminated
            );
        }
    }
    write(trace_dir.join(format!("{stem}__pso.csv")), pso)?;
    write(trace_dir.join(format!("{stem}__lfa.csv")), lfa)?;
    write(trace_dir.join(format!("{stem}__decisions.csv")), decisions)?;
    Ok(())
}

fn write(path: std::path::PathBuf, contents: String) -> Result<(), CliError> {
    fs::write(&path, contents).map_err(|e| CliError::io(path, e))
}
