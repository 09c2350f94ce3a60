//! Result serialization: CSV tables with 12 significant digits, pretty JSON reports.

use std::path::Path;

use serde_json::Value;

use crate::{CliError, Format};

/// One table cell.
#[derive(Clone, Debug)]
pub enum Cell {
    /// Number, serialized in scientific notation with 12 significant digits.
    Num(f64),
    /// Integer, serialized exactly.
    Int(u64),
    /// Boolean flag.
    Flag(bool),
    /// Free text.
    Text(String),
    /// Missing value: empty in CSV, null in JSON.
    Empty,
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:.11e}"),
            Cell::Int(n) => n.to_string(),
            Cell::Flag(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    /// JSON form with full float precision.
    pub fn to_json(&self) -> Value {
        match self {
            Cell::Num(x) => Value::from(*x),
            Cell::Int(n) => Value::from(*n),
            Cell::Flag(b) => Value::from(*b),
            Cell::Text(s) => Value::from(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

/// Rectangular result table with a fixed column order.
pub struct Table {
    /// Header names, emitted even when there are no rows.
    pub columns: Vec<&'static str>,
    /// Data rows; each must match the column count.
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    /// Table rows as an array of JSON objects keyed by column name.
    pub fn rows_as_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut object = serde_json::Map::new();
                for (name, cell) in self.columns.iter().zip(row) {
                    object.insert((*name).to_string(), cell.to_json());
                }
                Value::Object(object)
            })
            .collect();
        Value::from(rows)
    }
}

fn table_to_csv(table: &Table) -> Result<String, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| CliError::Config(format!("serializing csv: {e}"));
    writer.write_record(&table.columns).map_err(io_err)?;
    for row in &table.rows {
        debug_assert_eq!(row.len(), table.columns.len());
        writer
            .write_record(row.iter().map(|cell| cell.to_csv()))
            .map_err(io_err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Config(format!("serializing csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Config(format!("serializing csv: {e}")))
}

/// Writes the table (csv) or report (json) to the path, or stdout when absent.
pub fn emit(
    table: &Table,
    report: &Value,
    format: Format,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let text = match format {
        Format::Csv => table_to_csv(table)?,
        Format::Json => {
            let mut pretty = serde_json::to_string_pretty(report)
                .map_err(|e| CliError::Config(format!("serializing json: {e}")))?;
            pretty.push('\n');
            pretty
        }
    };
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
