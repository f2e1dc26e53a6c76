//! Reading selected p-values from CSV.

use std::path::{Path, PathBuf};

use pubfdr_core::SelectedPvalues;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: no p-values found")]
    Empty { path: PathBuf },
    #[error("{path}: no column named {name:?} in header")]
    MissingColumn { path: PathBuf, name: String },
    #[error("{path}: {columns} columns and no column named \"p\"; choose one with --column")]
    Ambiguous { path: PathBuf, columns: usize },
    #[error("{path}, line {line}: cannot parse {field:?} as a number")]
    Parse { path: PathBuf, line: u64, field: String },
    #[error("{path}: {count} value(s) outside (0, 1], first at line {line} ({value}){more}")]
    OutOfRange { path: PathBuf, count: usize, line: u64, value: f64, more: String },
}

/// Parsed p-values plus what was read.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub pvalues: SelectedPvalues,
    pub column: Option<String>,
    pub rows: usize,
}

/// Load p-values from a CSV with one value per row.
///
/// Without `column` the file may be a bare single column, with or without a
/// header, or a headed table with a column called `p`.
pub fn ingest_pvalues(path: &Path, column: Option<&str>) -> Result<Ingested, IngestError> {
    let bytes = std::fs::read(path).map_err(|source| IngestError::Io { path: path.into(), source })?;
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(bytes.as_slice());
    let csv_err = |source| IngestError::Csv { path: path.into(), source };

    let mut records = reader.records();
    let first = match records.next() {
        Some(r) => r.map_err(csv_err)?,
        None => return Err(IngestError::Empty { path: path.into() }),
    };
    let headed = column.is_some() || first.get(0).map_or(true, |f| f.parse::<f64>().is_err());

    let (index, name) = if headed {
        let find = |wanted: &str| first.iter().position(|h| h == wanted);
        match column {
            Some(c) => {
                let i = find(c).ok_or_else(|| IngestError::MissingColumn { path: path.into(), name: c.into() })?;
                (i, Some(c.to_string()))
            }
            None if first.len() == 1 => (0, Some(first[0].to_string())),
            None => match find("p") {
                Some(i) => (i, Some("p".to_string())),
                None => return Err(IngestError::Ambiguous { path: path.into(), columns: first.len() }),
            },
        }
    } else if first.len() == 1 {
        (0, None)
    } else {
        return Err(IngestError::Ambiguous { path: path.into(), columns: first.len() });
    };

    let mut values = Vec::new();
    let mut rejected: Vec<(u64, f64)> = Vec::new();
    let mut take = |record: &csv::StringRecord| -> Result<(), IngestError> {
        let line = record.position().map_or(0, |p| p.line());
        let field = record.get(index).unwrap_or("");
        let v: f64 = field.parse().ok().filter(|v: &f64| !v.is_nan()).ok_or_else(|| IngestError::Parse {
            path: path.into(),
            line,
            field: field.into(),
        })?;
        if v > 0.0 && v <= 1.0 {
            values.push(v);
        } else {
            rejected.push((line, v));
        }
        Ok(())
    };
    if !headed {
        take(&first)?;
    }
    for record in records {
        take(&record.map_err(csv_err)?)?;
    }

    if let Some(&(line, value)) = rejected.first() {
        let others: Vec<String> = rejected.iter().skip(1).take(9).map(|(l, _)| l.to_string()).collect();
        let more = if others.is_empty() {
            String::new()
        } else {
            format!("; also line(s) {}{}", others.join(", "), if rejected.len() > 10 { ", ..." } else { "" })
        };
        return Err(IngestError::OutOfRange { path: path.into(), count: rejected.len(), line, value, more });
    }
    if values.is_empty() {
        return Err(IngestError::Empty { path: path.into() });
    }
    let rows = values.len();
    let pvalues =
        SelectedPvalues::new(values).expect("values were range-checked").with_provenance(path.display().to_string());
    Ok(Ingested { pvalues, column: name, rows })
}
