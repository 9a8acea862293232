//! Row store for dimension instances with explicit null semantics.
//!
//! All cell payloads are text. A null cell is a distinct state: ingestion
//! trims whitespace once and maps null tokens (always including the empty
//! string) to null, so a stored value is never empty.
//!
//! Tables follow a single-writer, multiple-reader contract: imputation
//! passes mutate in place, concurrent readers are only safe between
//! passes, and distinct tables may be processed in parallel.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use crate::error::{Error, Result};

/// A cell holds a text value or nothing.
pub type Cell = Option<String>;

/// Coordinates of one cell, used by fill logs, ground truth and reports.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellAddress {
    pub dimension: String,
    pub row: usize,
    pub attribute: String,
}

/// Rectangular, nullable row store for one dimension's instances. Row order
/// is stable across loads and imputation passes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InstanceTable {
    columns: Vec<String>,
    column_index: HashMap<String, usize>,
    rows: Vec<Vec<Cell>>,
}

impl InstanceTable {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<Cell>>) -> Result<Self> {
        let mut column_index = HashMap::new();
        for (i, c) in columns.iter().enumerate() {
            if column_index.insert(c.clone(), i).is_some() {
                return Err(Error::DuplicateColumn {
                    path: "<memory>".into(),
                    column: c.clone(),
                });
            }
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(Error::RaggedRow {
                    path: "<memory>".into(),
                    line: i as u64 + 2,
                    expected: columns.len(),
                    found: row.len(),
                });
            }
        }
        Ok(Self {
            columns,
            column_index,
            rows,
        })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column_of(&self, attribute: &str) -> Result<usize> {
        self.column_index
            .get(attribute)
            .copied()
            .ok_or_else(|| Error::UnknownColumn {
                column: attribute.to_string(),
            })
    }

    pub fn get(&self, row: usize, column: usize) -> Option<&str> {
        self.rows[row][column].as_deref()
    }

    pub fn get_by_name(&self, row: usize, attribute: &str) -> Result<Option<&str>> {
        Ok(self.get(row, self.column_of(attribute)?))
    }

    pub fn set(&mut self, row: usize, column: usize, value: Cell) {
        self.rows[row][column] = value;
    }

    pub fn row(&self, row: usize) -> &[Cell] {
        &self.rows[row]
    }

    /// Row indices whose cell in `column` is null, in row order.
    pub fn missing_rows(&self, column: usize) -> Vec<usize> {
        (0..self.rows.len())
            .filter(|&r| self.rows[r][column].is_none())
            .collect()
    }

    pub fn non_null_count(&self, column: usize) -> usize {
        self.rows.iter().filter(|r| r[column].is_some()).count()
    }
}

/// Addresses of every null cell in one column, in row order.
pub fn missing_cells(
    table: &InstanceTable,
    dimension: &str,
    attribute: &str,
) -> Result<Vec<CellAddress>> {
    let col = table.column_of(attribute)?;
    Ok(table
        .missing_rows(col)
        .into_iter()
        .map(|row| CellAddress {
            dimension: dimension.to_string(),
            row,
            attribute: attribute.to_string(),
        })
        .collect())
}

/// Loads an RFC-4180 CSV with a mandatory header row. Fields are trimmed
/// once; a trimmed field equal to the empty string or to any extra null
/// token becomes a null cell.
pub fn load_table(path: &Path, null_tokens: &BTreeSet<String>) -> Result<InstanceTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io {
                path: path.to_path_buf(),
                source: match e.into_kind() {
                    csv::ErrorKind::Io(io) => io,
                    _ => unreachable!(),
                },
            },
            _ => Error::Csv {
                path: path.to_path_buf(),
                source: e,
            },
        })?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?
        .clone();
    let columns: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    {
        let mut seen = BTreeSet::new();
        for c in &columns {
            if !seen.insert(c.clone()) {
                return Err(Error::DuplicateColumn {
                    path: path.to_path_buf(),
                    column: c.clone(),
                });
            }
        }
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
        if record.len() != columns.len() {
            let line = record
                .position()
                .map(|p| p.line())
                .unwrap_or(rows.len() as u64 + 2);
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                line,
                expected: columns.len(),
                found: record.len(),
            });
        }
        let row: Vec<Cell> = record
            .iter()
            .map(|field| {
                let trimmed = field.trim();
                if trimmed.is_empty() || null_tokens.contains(trimmed) {
                    None
                } else {
                    Some(trimmed.to_string())
                }
            })
            .collect();
        rows.push(row);
    }

    InstanceTable::new(columns, rows).map_err(|e| match e {
        Error::RaggedRow { line, expected, found, .. } => Error::RaggedRow {
            path: path.to_path_buf(),
            line,
            expected,
            found,
        },
        other => other,
    })
}

/// Writes the table as CSV, nulls as empty fields. `load_table` on the
/// result reproduces the table cell-for-cell.
pub fn write_table(table: &InstanceTable, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io {
            path: path.to_path_buf(),
            source: match e.into_kind() {
                csv::ErrorKind::Io(io) => io,
                _ => unreachable!(),
            },
        },
        _ => Error::Csv {
            path: path.to_path_buf(),
            source: e,
        },
    })?;
    let io_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    writer.write_record(table.columns()).map_err(io_err)?;
    for r in 0..table.row_count() {
        writer
            .write_record(table.row(r).iter().map(|c| c.as_deref().unwrap_or("")))
            .map_err(io_err)?;
    }
    writer.flush().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}
