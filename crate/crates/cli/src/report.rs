//! JSON reports and the resonance CSV table.

use reslab_core::solver::Resonance;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: Value,
    pub results: Value,
    pub diagnostics: Value,
    pub timestamp: String,
}

impl Report {
    pub fn new(config: &impl Serialize, results: impl Serialize, diagnostics: impl Serialize) -> Self {
        let value = |x: Result<Value, serde_json::Error>| x.expect("value serializes");
        Self {
            config: value(serde_json::to_value(config)),
            results: value(serde_json::to_value(results)),
            diagnostics: value(serde_json::to_value(diagnostics)),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceRow {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
    pub residual: f64,
}

impl From<&Resonance> for ResonanceRow {
    fn from(r: &Resonance) -> Self {
        Self {
            re: r.z.re,
            im: r.z.im,
            multiplicity: r.multiplicity,
            residual: r.residual,
        }
    }
}

pub const CSV_HEADER: &str = "re,im,multiplicity,residual";

/// Rows with 17 significant digits, LF line endings.
pub fn resonance_csv(rows: &[ResonanceRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{:.16e},{:.16e},{},{:.16e}\n", r.re, r.im, r.multiplicity, r.residual));
    }
    out
}

pub fn parse_resonance_csv(text: &str) -> Result<Vec<ResonanceRow>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(format!("missing header {CSV_HEADER:?}"));
    }
    lines
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            let [re, im, m, residual] = fields.as_slice() else {
                return Err(format!("expected 4 fields: {line:?}"));
            };
            let real = |s: &str| s.parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
            Ok(ResonanceRow {
                re: real(re)?,
                im: real(im)?,
                multiplicity: m.parse().map_err(|e| format!("{m:?}: {e}"))?,
                residual: real(residual)?,
            })
        })
        .collect()
}
