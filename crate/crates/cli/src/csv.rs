//! CSV loading and writing.
//!
//! Input files carry a header row; cells that are empty or read "NA" count
//! as missing. Features are min-max normalized to [0, 1] per column over
//! the observed entries at load time. Missing cells keep an observed flag
//! of false for the pipeline; their stored value is the column's observed
//! mean so that held-out rows still have usable coordinates if a user file
//! is incomplete there.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use pos2fs_core::data::{normalize_columns, Dataset};
use pos2fs_core::synth::SynthDataset;
use pos2fs_core::Matrix;

use crate::CliError;

/// Which column of the file holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

/// A loaded dataset plus the file's own missing-entry mask (None when the
/// file was fully observed).
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub dataset: Dataset,
    pub observed: Option<Vec<bool>>,
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "NA"
}

/// Load a CSV file with a header row, extracting the label column and
/// keeping the remaining columns as features in file order.
pub fn load_csv(path: &Path, label_column: &LabelColumn) -> Result<LoadedDataset, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| csv_error(path, 1, "empty file"))?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let arity = names.len();
    let label_index = match label_column {
        LabelColumn::Index(i) => {
            if *i >= arity {
                return Err(csv_error(
                    path,
                    1,
                    format!("label column index {i} out of range for {arity} columns"),
                ));
            }
            *i
        }
        LabelColumn::Name(name) => names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| csv_error(path, 1, format!("label column '{name}' not in header")))?,
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut observed: Vec<bool> = Vec::new();
    let mut labels: Vec<i64> = Vec::new();
    let mut any_missing = false;

    for (line_index, line) in lines {
        let line_number = line_index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != arity {
            return Err(csv_error(
                path,
                line_number,
                format!("expected {arity} cells, found {}", cells.len()),
            ));
        }
        let label_cell = cells[label_index];
        if is_missing(label_cell) {
            return Err(csv_error(path, line_number, "missing label"));
        }
        labels.push(parse_label(label_cell).map_err(|msg| csv_error(path, line_number, msg))?);

        let mut row = Vec::with_capacity(arity - 1);
        for (col, cell) in cells.iter().enumerate() {
            if col == label_index {
                continue;
            }
            if is_missing(cell) {
                any_missing = true;
                row.push(0.0);
                observed.push(false);
            } else {
                let value: f64 = cell.parse().map_err(|_| {
                    csv_error(
                        path,
                        line_number,
                        format!("non-numeric feature cell '{cell}'"),
                    )
                })?;
                if !value.is_finite() {
                    return Err(csv_error(path, line_number, "non-finite feature value"));
                }
                row.push(value);
                observed.push(true);
            }
        }
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(csv_error(path, 1, "no data rows"));
    }
    let feature_count = arity - 1;
    let mut feature_names = names;
    feature_names.remove(label_index);

    let mut values = Matrix::from_rows(&rows);
    let observed_opt = any_missing.then_some(observed);
    normalize_columns(&mut values, observed_opt.as_deref());

    if let Some(flags) = &observed_opt {
        // Columns with no observations cannot participate at all.
        for c in 0..feature_count {
            if !(0..rows.len()).any(|r| flags[r * feature_count + c]) {
                return Err(csv_error(
                    path,
                    1,
                    format!(
                        "feature column '{}' has no observed values",
                        feature_names[c]
                    ),
                ));
            }
        }
        // Park missing cells at the column's observed mean.
        for c in 0..feature_count {
            let mut sum = 0.0;
            let mut count = 0usize;
            for r in 0..rows.len() {
                if flags[r * feature_count + c] {
                    sum += values.get(r, c);
                    count += 1;
                }
            }
            let mean = sum / count as f64;
            for r in 0..rows.len() {
                if !flags[r * feature_count + c] {
                    values.set(r, c, mean);
                }
            }
        }
    }

    let dataset = Dataset::new(values, labels, Some(feature_names))
        .map_err(|e| csv_error(path, 1, format!("invalid dataset: {e}")))?;
    Ok(LoadedDataset {
        dataset,
        observed: observed_opt,
    })
}

fn parse_label(cell: &str) -> Result<i64, String> {
    if let Ok(v) = cell.parse::<i64>() {
        return Ok(v);
    }
    // Accept float-typed labels when they are integral (e.g. "1.0").
    if let Ok(v) = cell.parse::<f64>() {
        if v.is_finite() && v.fract() == 0.0 && (i64::MIN as f64..=i64::MAX as f64).contains(&v) {
            return Ok(v as i64);
        }
    }
    Err(format!("label '{cell}' is not an integer"))
}

fn csv_error(path: &Path, line: usize, message: impl Into<String>) -> CliError {
    CliError::Csv {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Write a dataset as CSV: feature columns in order, label column last.
pub fn write_dataset_csv(path: &Path, dataset: &Dataset) -> Result<(), CliError> {
    let mut out = String::new();
    let names: Vec<String> = match dataset.feature_names() {
        Some(names) => names.to_vec(),
        None => (0..dataset.feature_count())
            .map(|j| format!("f{j}"))
            .collect(),
    };
    out.push_str(&names.join(","));
    out.push_str(",label\n");
    for r in 0..dataset.instance_count() {
        for c in 0..dataset.feature_count() {
            let _ = write!(out, "{},", dataset.values().get(r, c));
        }
        let _ = writeln!(out, "{}", dataset.labels()[r]);
    }
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

/// Write the ground-truth sidecar next to a generated dataset:
/// `<path>.truth.toml` listing the planted informative and redundant ids.
pub fn write_truth_sidecar(dataset_path: &Path, synth: &SynthDataset) -> Result<(), CliError> {
    let mut sidecar = dataset_path.as_os_str().to_owned();
    sidecar.push(".truth.toml");
    let mut out = String::new();
    let informative: Vec<String> = synth.informative_ids.iter().map(usize::to_string).collect();
    let _ = writeln!(out, "informative = [{}]", informative.join(", "));
    out.push_str("# redundant entries are [column id, informative source id]\n");
    let redundant: Vec<String> = synth
        .redundant_ids
        .iter()
        .map(|(id, source)| format!("[{id}, {source}]"))
        .collect();
    let _ = writeln!(out, "redundant = [{}]", redundant.join(", "));
    fs::write(&sidecar, out).map_err(|e| CliError::io(sidecar.as_os_str(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct TempFile(std::path::PathBuf);

    impl TempFile {
        fn new(name: &str, contents: &str) -> Self {
            let path =
                std::env::temp_dir().join(format!("pos2fs_csv_test_{}_{name}", std::process::id()));
            fs::write(&path, contents).unwrap();
            TempFile(path)
        }
    }

    impl Drop for TempFile {
        fn drop(&mut self) {
            let _ = fs::remove_file(&self.0);
        }
    }

    #[test]
    fn three_row_file_with_label_column() {
        let file = TempFile::new("basic.csv", "a,b,label\n0.0,2.0,0\n0.5,4.0,1\n1.0,6.0,0\n");
        let loaded = load_csv(&file.0, &LabelColumn::Name("label".into())).unwrap();
        assert_eq!(loaded.dataset.instance_count(), 3);
        assert_eq!(loaded.dataset.feature_count(), 2);
        assert_eq!(loaded.dataset.labels(), &[0, 1, 0]);
        assert!(loaded.observed.is_none());
        // Normalized to [0, 1].
        assert_eq!(loaded.dataset.values().column(0), vec![0.0, 0.5, 1.0]);
        assert_eq!(loaded.dataset.values().column(1), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn label_by_index_and_float_labels() {
        let file = TempFile::new("byindex.csv", "y,x\n1.0,0.2\n0.0,0.9\n");
        let loaded = load_csv(&file.0, &LabelColumn::Index(0)).unwrap();
        assert_eq!(loaded.dataset.labels(), &[1, 0]);
        assert_eq!(loaded.dataset.feature_count(), 1);
    }

    #[test]
    fn ragged_row_reports_line_number() {
        let file = TempFile::new("ragged.csv", "a,b,label\n1,2,0\n1,2\n3,4,1\n");
        let err = load_csv(&file.0, &LabelColumn::Name("label".into())).unwrap_err();
        match err {
            CliError::Csv { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_is_an_error() {
        let file = TempFile::new("alpha.csv", "a,label\n1,0\nfoo,1\n");
        let err = load_csv(&file.0, &LabelColumn::Name("label".into())).unwrap_err();
        assert!(err.to_string().contains("non-numeric"), "{err}");
    }

    #[test]
    fn single_class_labels_rejected() {
        let file = TempFile::new("oneclass.csv", "a,label\n1,0\n2,0\n3,0\n");
        let err = load_csv(&file.0, &LabelColumn::Name("label".into())).unwrap_err();
        assert!(err.to_string().contains("single class"), "{err}");
    }

    #[test]
    fn missing_cells_are_masked_and_parked_at_mean() {
        let file = TempFile::new(
            "missing.csv",
            "a,b,label\n0.0,5.0,0\nNA,10.0,1\n10.0,,0\n5.0,0.0,1\n",
        );
        let loaded = load_csv(&file.0, &LabelColumn::Name("label".into())).unwrap();
        let observed = loaded.observed.unwrap();
        assert!(!observed[2]); // row 1, column a
        assert!(!observed[5]); // row 2, column b
                               // Column a observed values 0, 10, 5 normalize to 0, 1, 0.5; the
                               // missing cell holds their mean.
        let col_a = loaded.dataset.values().column(0);
        assert_eq!(col_a[0], 0.0);
        assert_eq!(col_a[2], 1.0);
        assert_eq!(col_a[3], 0.5);
        assert!((col_a[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn usps_shaped_file_loads() {
        // 1500 instances, 242 features, 2 classes.
        let mut contents = String::new();
        let header: Vec<String> = (0..242).map(|j| format!("f{j}")).collect();
        contents.push_str(&header.join(","));
        contents.push_str(",label\n");
        let mut state = 1234567u64;
        for i in 0..1500 {
            for _ in 0..242 {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                let v = (state >> 40) as f64 / (1u64 << 24) as f64;
                let _ = write!(contents, "{v:.6},");
            }
            let _ = writeln!(contents, "{}", i % 2);
        }
        let file = TempFile::new("usps_shape.csv", &contents);
        let loaded = load_csv(&file.0, &LabelColumn::Name("label".into())).unwrap();
        assert_eq!(loaded.dataset.instance_count(), 1500);
        assert_eq!(loaded.dataset.feature_count(), 242);
    }

    #[test]
    fn roundtrip_write_then_load() {
        let synth = pos2fs_core::synth::generate(&pos2fs_core::synth::SynthSpec {
            instances: 40,
            informative: 3,
            redundant: 2,
            noise: 5,
            classes: 2,
            noise_level: 0.1,
            seed: 3,
        })
        .unwrap();
        let path = std::env::temp_dir().join(format!(
            "pos2fs_csv_test_{}_roundtrip.csv",
            std::process::id()
        ));
        write_dataset_csv(&path, &synth.dataset).unwrap();
        let loaded = load_csv(&path, &LabelColumn::Name("label".into())).unwrap();
        let _ = fs::remove_file(&path);
        // Generated values already lie in [0, 1] per column extremes may
        // rescale slightly; shape and labels must survive exactly.
        assert_eq!(loaded.dataset.instance_count(), 40);
        assert_eq!(loaded.dataset.feature_count(), 10);
        assert_eq!(loaded.dataset.labels(), synth.dataset.labels());
        assert!(loaded.observed.is_none());
    }
}
