//! Dataset ingestion: rectangular CSV parsing with positional errors and
//! response extraction by column or separate file.

use std::path::{Path, PathBuf};

use bgm_core::GlmFamily;
use ndarray::{Array1, Array2};

use crate::errors::CliError;

#[derive(Debug, Clone)]
pub enum ResponseSource {
    /// Single-column file; a non-numeric first line is treated as a header.
    File(PathBuf),
    /// Column of the data file, by name (requires a header) or 1-based index.
    Column(String),
}

#[derive(Debug, Clone)]
pub struct DatasetFile {
    pub path: PathBuf,
    pub delimiter: u8,
    pub has_header: bool,
    pub response: ResponseSource,
}

#[derive(Debug)]
pub struct LoadedDataset {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub feature_names: Vec<String>,
}

struct RawTable {
    header: Option<Vec<String>>,
    rows: Vec<Vec<f64>>,
    /// 1-based file line of each data row.
    lines: Vec<u64>,
}

fn read_numeric_table(path: &Path, delimiter: u8, has_header: bool) -> Result<RawTable, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(false)
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    let mut header = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut lines = Vec::new();
    let mut expected: Option<usize> = None;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { pos, expected_len, len } => CliError::RaggedRows {
                path: path.to_path_buf(),
                line: pos.as_ref().map(|p| p.line()).unwrap_or(i as u64 + 1),
                got: *len as usize,
                expected: *expected_len as usize,
            },
            _ => CliError::io(path, e),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(i as u64 + 1);
        if i == 0 && has_header {
            header = Some(record.iter().map(|s| s.trim().to_string()).collect());
            expected = Some(record.len());
            continue;
        }
        if let Some(exp) = expected {
            if record.len() != exp {
                return Err(CliError::RaggedRows {
                    path: path.to_path_buf(),
                    line,
                    got: record.len(),
                    expected: exp,
                });
            }
        } else {
            expected = Some(record.len());
        }
        let mut row = Vec::with_capacity(record.len());
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| CliError::Parse {
                path: path.to_path_buf(),
                line,
                column: c + 1,
                message: format!("cannot parse {field:?} as a number"),
            })?;
            row.push(v);
        }
        rows.push(row);
        lines.push(line);
    }
    if rows.is_empty() {
        return Err(CliError::Config(format!(
            "{} contains no data rows",
            path.display()
        )));
    }
    Ok(RawTable { header, rows, lines })
}

fn read_response_file(path: &Path, delimiter: u8) -> Result<Vec<f64>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(false)
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::io(path, e))?;
        if record.len() != 1 {
            return Err(CliError::Config(format!(
                "response file {} must have exactly one column, line {} has {}",
                path.display(),
                i + 1,
                record.len()
            )));
        }
        let field = record.get(0).unwrap().trim();
        match field.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if i == 0 => {} // header line
            Err(_) => {
                return Err(CliError::Parse {
                    path: path.to_path_buf(),
                    line: record.position().map(|p| p.line()).unwrap_or(i as u64 + 1),
                    column: 1,
                    message: format!("cannot parse {field:?} as a number"),
                });
            }
        }
    }
    Ok(values)
}

/// Resolve a response column given as a name or 1-based index.
fn resolve_column(
    spec: &str,
    header: Option<&Vec<String>>,
    width: usize,
) -> Result<usize, CliError> {
    if let Ok(idx) = spec.parse::<usize>() {
        if idx == 0 || idx > width {
            return Err(CliError::Config(format!(
                "response column index {idx} out of range 1..={width}"
            )));
        }
        return Ok(idx - 1);
    }
    match header {
        Some(names) => names
            .iter()
            .position(|n| n == spec)
            .ok_or_else(|| CliError::Config(format!("response column {spec:?} not found"))),
        None => Err(CliError::Config(format!(
            "response column {spec:?} requires a header row"
        ))),
    }
}

pub fn load_dataset(spec: &DatasetFile, family: GlmFamily) -> Result<LoadedDataset, CliError> {
    let table = read_numeric_table(&spec.path, spec.delimiter, spec.has_header)?;
    let width = table.rows[0].len();
    let n = table.rows.len();

    let (x, y, feature_names) = match &spec.response {
        ResponseSource::Column(col) => {
            let rc = resolve_column(col, table.header.as_ref(), width)?;
            if width < 2 {
                return Err(CliError::Config(
                    "data file needs at least one feature besides the response".into(),
                ));
            }
            let p = width - 1;
            let mut x = Array2::<f64>::zeros((n, p));
            let mut y = Array1::<f64>::zeros(n);
            for (i, row) in table.rows.iter().enumerate() {
                let mut c = 0;
                for (j, &v) in row.iter().enumerate() {
                    if j == rc {
                        y[i] = v;
                    } else {
                        x[[i, c]] = v;
                        c += 1;
                    }
                }
            }
            let names = feature_names(table.header.as_ref(), width, Some(rc));
            (x, y, names)
        }
        ResponseSource::File(path) => {
            let yv = read_response_file(path, spec.delimiter)?;
            if yv.len() != n {
                return Err(CliError::Config(format!(
                    "response length {} does not match {} data rows",
                    yv.len(),
                    n
                )));
            }
            let mut x = Array2::<f64>::zeros((n, width));
            for (i, row) in table.rows.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    x[[i, j]] = v;
                }
            }
            let names = feature_names(table.header.as_ref(), width, None);
            (x, Array1::from_vec(yv), names)
        }
    };

    if family == GlmFamily::Logistic {
        for (i, &v) in y.iter().enumerate() {
            if v != 0.0 && v != 1.0 {
                return Err(CliError::BadResponseValues(format!(
                    "logistic response must be 0/1, found {v} at data row {} (line {})",
                    i + 1,
                    table.lines.get(i).copied().unwrap_or(i as u64 + 1)
                )));
            }
        }
    }
    Ok(LoadedDataset { x, y, feature_names })
}

fn feature_names(header: Option<&Vec<String>>, width: usize, skip: Option<usize>) -> Vec<String> {
    match header {
        Some(names) => names
            .iter()
            .enumerate()
            .filter(|(j, _)| Some(*j) != skip)
            .map(|(_, n)| n.clone())
            .collect(),
        None => {
            let p = width - usize::from(skip.is_some());
            (1..=p).map(|j| format!("x{j}")).collect()
        }
    }
}
