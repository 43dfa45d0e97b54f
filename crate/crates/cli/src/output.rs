use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::Global;

/// Destination and format of a command's result.
pub struct Output {
    csv: bool,
    path: Option<PathBuf>,
}

/// Rows of a CSV table.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row<S: ToString>(&mut self, cells: impl IntoIterator<Item = S>) {
        self.rows.push(cells.into_iter().map(|c| c.to_string()).collect());
    }

    /// Header and single row from the scalar fields of a JSON object.
    pub fn from_object(value: &impl Serialize) -> Result<Self> {
        let json = serde_json::to_value(value)?;
        let obj = json.as_object().context("expected a JSON object")?;
        let mut header = Vec::new();
        let mut row = Vec::new();
        for (k, v) in obj {
            let cell = match v {
                serde_json::Value::Null => String::new(),
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Bool(_) | serde_json::Value::Number(_) => v.to_string(),
                _ => continue,
            };
            header.push(k.clone());
            row.push(cell);
        }
        Ok(Self {
            header,
            rows: vec![row],
        })
    }

    fn render(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(w.into_inner().map_err(|e| e.into_error())?)
    }
}

impl Output {
    pub fn new(g: &Global) -> Self {
        Self {
            csv: g.csv,
            path: g.out.clone(),
        }
    }

    /// Writes `value` as JSON, or `table()` when CSV output was requested.
    pub fn emit<T: Serialize>(&self, value: &T, table: impl FnOnce() -> Result<Table>) -> Result<()> {
        let bytes = if self.csv {
            table()?.render()?
        } else {
            let mut b = serde_json::to_vec_pretty(value)?;
            b.push(b'\n');
            b
        };
        match &self.path {
            Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(&bytes)?;
                stdout.flush()?;
                Ok(())
            }
        }
    }
}
