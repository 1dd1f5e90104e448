//! Report rows and their CSV, structured and text renderings.

use std::fmt::Write as _;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    Fitted,
    Sampled,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportRow {
    pub audit: String,
    /// Parameters of the audit as a compact JSON object.
    pub param_json: String,
    pub key: String,
    pub value: f64,
    pub provenance: Provenance,
}

/// A command's output: the full parameter echo plus flat rows.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    pub params: serde_json::Value,
    pub rows: Vec<ReportRow>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(command: &str, seed: u64, params: serde_json::Value) -> Self {
        Report { command: command.to_string(), seed, params, rows: Vec::new(), notes: Vec::new() }
    }

    pub fn push(&mut self, audit: &str, params: &serde_json::Value, key: &str, value: f64, provenance: Provenance) {
        self.rows.push(ReportRow {
            audit: audit.to_string(),
            param_json: params.to_string(),
            key: key.to_string(),
            value,
            provenance,
        });
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("audit,param_json,key,value\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.audit, csv_quote(&r.param_json), r.key, fmt_value(r.value));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command: {}", self.command);
        let _ = writeln!(out, "seed: {}", self.seed);
        let _ = writeln!(out, "params: {}", self.params);
        let wa = self.rows.iter().map(|r| r.audit.len()).max().unwrap_or(5).max(5);
        let wk = self.rows.iter().map(|r| r.key.len()).max().unwrap_or(3).max(3);
        let _ = writeln!(out, "{:<wa$}  {:<wk$}  {:>22}  provenance", "audit", "key", "value");
        for r in &self.rows {
            let prov = match r.provenance {
                Provenance::Exact => "exact",
                Provenance::Fitted => "fitted",
                Provenance::Sampled => "sampled",
            };
            let _ = writeln!(out, "{:<wa$}  {:<wk$}  {:>22}  {prov}", r.audit, r.key, fmt_value(r.value));
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        out
    }
}

/// Shortest round-trip formatting; stable across runs.
pub fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
