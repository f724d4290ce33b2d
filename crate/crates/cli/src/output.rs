//! CSV and JSON emission. Numbers are printed with 17 significant digits and
//! nothing time- or host-dependent is written, so reruns are byte-identical.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::args::{Format, OutputArgs};
use crate::error::CliResult;

pub struct Table {
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &'static [&'static str]) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

/// `run.csv` -> `run.json`; falls back to appending when that would collide.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let candidate = out.with_extension("json");
    if candidate == out {
        let mut name = out.as_os_str().to_owned();
        name.push(".meta.json");
        PathBuf::from(name)
    } else {
        candidate
    }
}

fn pretty<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes `table` in the requested format. CSV gets a JSON sidecar holding
/// `meta`; JSON embeds the table next to `meta`.
pub fn emit<M: Serialize>(output: &OutputArgs, table: &Table, meta: &M) -> CliResult<()> {
    match output.format {
        Format::Csv => {
            let csv = table.to_csv();
            match &output.out {
                Some(path) => {
                    fs::write(path, csv)?;
                    fs::write(sidecar_path(path), pretty(meta)?)?;
                }
                None => io::stdout().write_all(csv.as_bytes())?,
            }
        }
        Format::Json => {
            let doc = json!({
                "meta": meta,
                "columns": table.header,
                "rows": table.rows,
            });
            let text = pretty(&doc)?;
            match &output.out {
                Some(path) => fs::write(path, text)?,
                None => io::stdout().write_all(text.as_bytes())?,
            }
        }
    }
    Ok(())
}
