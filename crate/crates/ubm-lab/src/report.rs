//! Experiment reports: ordered rows of named columns, emitted as CSV (with
//! `#`-prefixed header lines) or JSON, with floats carrying 17 significant
//! digits so parse(emit(r)) == r.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::estimate::Verdict;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl ColValue {
    fn to_csv(&self) -> String {
        match self {
            ColValue::Float(v) => format!("{v:.16e}"),
            ColValue::Int(v) => format!("{v}"),
            ColValue::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub value: ColValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    pub columns: Vec<Column>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Row {
    pub fn new(label: impl Into<String>) -> Self {
        Row {
            label: label.into(),
            columns: Vec::new(),
            verdict: None,
            note: None,
        }
    }

    pub fn float(mut self, name: &str, v: f64) -> Self {
        self.columns.push(Column {
            name: name.into(),
            value: ColValue::Float(v),
        });
        self
    }

    pub fn int(mut self, name: &str, v: i64) -> Self {
        self.columns.push(Column {
            name: name.into(),
            value: ColValue::Int(v),
        });
        self
    }

    pub fn text(mut self, name: &str, v: impl Into<String>) -> Self {
        self.columns.push(Column {
            name: name.into(),
            value: ColValue::Text(v.into()),
        });
        self
    }

    pub fn verdict(mut self, v: Verdict) -> Self {
        self.verdict = Some(v);
        self
    }

    pub fn note(mut self, n: impl Into<String>) -> Self {
        self.note = Some(n.into());
        self
    }

    pub fn get_float(&self, name: &str) -> Option<f64> {
        self.columns.iter().find(|c| c.name == name).and_then(|c| {
            if let ColValue::Float(v) = c.value {
                Some(v)
            } else {
                None
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool_version: String,
    pub kind: String,
    pub master_seed: u64,
    pub config_echo: serde_json::Value,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn new(kind: &str, master_seed: u64, config_echo: serde_json::Value) -> Self {
        Report {
            tool_version: TOOL_VERSION.into(),
            kind: kind.into(),
            master_seed,
            config_echo,
            rows: Vec::new(),
        }
    }

    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| !matches!(r.verdict, Some(Verdict::Fail)))
    }

    /// CSV emission: `#` header lines (tool version, kind, seed, config),
    /// a column-name line, then one line per row in stable column order.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# tool_version={}", self.tool_version);
        let _ = writeln!(out, "# kind={}", self.kind);
        let _ = writeln!(out, "# master_seed={}", self.master_seed);
        let _ = writeln!(out, "# config={}", self.config_echo);
        let names: Vec<String> = self
            .rows
            .first()
            .map(|r| r.columns.iter().map(|c| c.name.clone()).collect())
            .unwrap_or_default();
        let _ = writeln!(out, "label,{},verdict,note", names.join(","));
        for row in &self.rows {
            let mut fields = vec![row.label.clone()];
            for name in &names {
                let v = row
                    .columns
                    .iter()
                    .find(|c| &c.name == name)
                    .map(|c| c.value.to_csv())
                    .unwrap_or_default();
                fields.push(v);
            }
            fields.push(match row.verdict {
                Some(Verdict::Pass) => "pass".into(),
                Some(Verdict::Fail) => "fail".into(),
                Some(Verdict::Flag) => "flag".into(),
                None => String::new(),
            });
            fields.push(row.note.clone().unwrap_or_default());
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self, String> {
        serde_json::from_str(s).map_err(|e| format!("invalid report JSON: {e}"))
    }

    /// Write both formats under `dir` with the given stem.
    pub fn emit(&self, dir: &Path, stem: &str) -> Result<(), String> {
        std::fs::create_dir_all(dir).map_err(|e| format!("creating {dir:?}: {e}"))?;
        let json_path = dir.join(format!("{stem}.json"));
        let csv_path = dir.join(format!("{stem}.csv"));
        let mut jf =
            std::fs::File::create(&json_path).map_err(|e| format!("creating {json_path:?}: {e}"))?;
        jf.write_all(self.to_json().as_bytes())
            .map_err(|e| format!("writing {json_path:?}: {e}"))?;
        let mut cf =
            std::fs::File::create(&csv_path).map_err(|e| format!("creating {csv_path:?}: {e}"))?;
        cf.write_all(self.to_csv().as_bytes())
            .map_err(|e| format!("writing {csv_path:?}: {e}"))?;
        Ok(())
    }
}

/// Parse the CSV emission back into (label, columns-as-text) rows for
/// round-trip checks; `#` lines are skipped.
pub fn parse_csv_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| l.split(',').map(|s| s.to_string()).collect())
        .collect()
}
