//! Self-verifying experiment reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::Result;

/// One inequality `lhs ≤ rhs + slack`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub passed: bool,
}

impl Check {
    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64, slack: f64) -> Check {
        Check {
            name: name.into(),
            lhs,
            rhs,
            slack,
            passed: lhs <= rhs + slack,
        }
    }

    /// `rhs + slack − lhs`; nonnegative iff the check passed.
    pub fn margin(&self) -> f64 {
        self.rhs + self.slack - self.lhs
    }

    /// Recomputes the verdict from the stored numbers.
    pub fn recompute(&self) -> bool {
        self.lhs <= self.rhs + self.slack
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub version: String,
    pub seed: Option<u64>,
    pub config: Value,
    pub records: Vec<BTreeMap<String, Value>>,
    pub aggregates: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub passed: bool,
    /// Only filled when timing is requested; keeps reports reproducible.
    pub wall_time_s: Option<f64>,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>, seed: Option<u64>, config: Value) -> Self {
        ExperimentReport {
            name: name.into(),
            version: crate::VERSION.to_string(),
            seed,
            config,
            records: Vec::new(),
            aggregates: BTreeMap::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            passed: true,
            wall_time_s: None,
        }
    }

    /// Adds a check and returns whether it passed.
    pub fn check(&mut self, name: impl Into<String>, lhs: f64, rhs: f64, slack: f64) -> bool {
        let c = Check::le(name, lhs, rhs, slack);
        let ok = c.passed;
        self.passed &= ok;
        self.checks.push(c);
        ok
    }

    pub fn aggregate(&mut self, key: impl Into<String>, value: f64) {
        self.aggregates.insert(key.into(), value);
    }

    pub fn record(&mut self, fields: BTreeMap<String, Value>) {
        self.records.push(fields);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Pass/fail recomputed from the recorded checks alone.
    pub fn verify(&self) -> bool {
        self.checks.iter().all(|c| c.recompute() == c.passed) && self.passed == self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Records as CSV with a header row; columns are the union of record keys.
    pub fn records_csv(&self) -> String {
        let mut cols: Vec<&String> = Vec::new();
        for r in &self.records {
            for k in r.keys() {
                if !cols.contains(&k) {
                    cols.push(k);
                }
            }
        }
        let mut out = String::new();
        out.push_str(&cols.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(","));
        out.push('\n');
        for r in &self.records {
            let row: Vec<String> = cols.iter().map(|c| csv_cell(r.get(*c))).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Checks as CSV: `name,lhs,rhs,slack,margin,passed`.
    pub fn checks_csv(&self) -> String {
        let mut out = String::from("name,lhs,rhs,slack,margin,passed\n");
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                c.name,
                fmt_f64(c.lhs),
                fmt_f64(c.rhs),
                fmt_f64(c.slack),
                fmt_f64(c.margin()),
                c.passed
            );
        }
        out
    }
}

/// 17 significant digits, enough to round-trip an f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn csv_cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::Number(n)) => match n.as_f64() {
            Some(f) if n.is_f64() => fmt_f64(f),
            _ => n.to_string(),
        },
        Some(Value::String(s)) => s.replace(',', ";"),
        Some(other) => other.to_string().replace(',', ";"),
    }
}

/// Builds a record from `(key, value)` pairs.
#[macro_export]
macro_rules! record {
    ($($k:expr => $v:expr),* $(,)?) => {{
        let mut m = ::std::collections::BTreeMap::<String, ::serde_json::Value>::new();
        $( m.insert($k.to_string(), ::serde_json::json!($v)); )*
        m
    }};
}

/// Minimal SVG line chart: one polyline per series over a shared x axis.
pub fn svg_line_chart(title: &str, x: &[f64], series: &[(&str, Vec<f64>)]) -> String {
    let (w, h, pad) = (640.0, 400.0, 48.0);
    let finite = |v: &f64| v.is_finite();
    let xmin = x.iter().copied().filter(finite).fold(f64::INFINITY, f64::min);
    let xmax = x.iter().copied().filter(finite).fold(f64::NEG_INFINITY, f64::max);
    let all = series.iter().flat_map(|(_, ys)| ys.iter().copied()).filter(finite);
    let (ymin, ymax) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    let sx = |v: f64| pad + (v - xmin) / (xmax - xmin).max(1e-300) * (w - 2.0 * pad);
    let sy = |v: f64| h - pad - (v - ymin) / (ymax - ymin).max(1e-300) * (h - 2.0 * pad);
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n\
         <text x=\"{pad}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">{title}</text>\n\
         <rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n",
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    for (k, (name, ys)) in series.iter().enumerate() {
        let color = colors[k % colors.len()];
        let pts: Vec<String> = x
            .iter()
            .zip(ys)
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(&a, &b)| format!("{:.2},{:.2}", sx(a), sy(b)))
            .collect();
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>",
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{color}\">{name}</text>",
            w - pad - 120.0,
            pad + 16.0 * (k as f64 + 1.0)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{pad}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">x: {} .. {}, y: {} .. {}</text>",
        h - 12.0,
        fmt_short(xmin),
        fmt_short(xmax),
        fmt_short(ymin),
        fmt_short(ymax)
    );
    out.push_str("</svg>\n");
    out
}

fn fmt_short(v: f64) -> String {
    format!("{v:.4}")
}
