//! Report rows, number formatting and the CSV/JSON writers.

use std::io;
use std::path::{Path, PathBuf};

use serde::{Serialize, Serializer};

pub const COLUMNS: [&str; 14] = [
    "scenario",
    "k",
    "N_k",
    "mavol",
    "mavol_rescaled",
    "rhs_thm11",
    "ratio_thm11",
    "mz_gap",
    "bms_defect_times_k",
    "det_lemma_ratio",
    "sat_residual",
    "demailly_lhs",
    "demailly_rhs",
    "runtime_seconds",
];

/// Formats `x` with 12 significant digits in the shortest of fixed and
/// scientific notation, trailing zeros removed (C's `%.12g`).
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let fixed = format!("{:.*}", (11 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn serialize_sig12<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    let text = sig12(*x);
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => s.serialize_f64(v),
        _ => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub scenario: String,
    pub k: u32,
    #[serde(rename = "N_k")]
    pub n_k: usize,
    #[serde(serialize_with = "serialize_sig12")]
    pub mavol: f64,
    #[serde(serialize_with = "serialize_sig12")]
    pub mavol_rescaled: f64,
    #[serde(serialize_with = "serialize_sig12")]
    pub rhs_thm11: f64,
    #[serde(serialize_with = "serialize_sig12")]
    pub ratio_thm11: f64,
    #[serde(serialize_with = "serialize_sig12")]
    pub mz_gap: f64,
    #[serde(serialize_with = "serialize_sig12")]
    pub bms_defect_times_k: f64,
    #[serde(serialize_with = "serialize_sig12")]
    pub det_lemma_ratio: f64,
    #[serde(serialize_with = "serialize_sig12")]
    pub sat_residual: f64,
    #[serde(serialize_with = "serialize_sig12")]
    pub demailly_lhs: f64,
    #[serde(serialize_with = "serialize_sig12")]
    pub demailly_rhs: f64,
    #[serde(serialize_with = "serialize_sig12")]
    pub runtime_seconds: f64,
}

impl ReportRow {
    pub fn record(&self) -> [String; 14] {
        [
            self.scenario.clone(),
            self.k.to_string(),
            self.n_k.to_string(),
            sig12(self.mavol),
            sig12(self.mavol_rescaled),
            sig12(self.rhs_thm11),
            sig12(self.ratio_thm11),
            sig12(self.mz_gap),
            sig12(self.bms_defect_times_k),
            sig12(self.det_lemma_ratio),
            sig12(self.sat_residual),
            sig12(self.demailly_lhs),
            sig12(self.demailly_rhs),
            sig12(self.runtime_seconds),
        ]
    }
}

/// Outcome of one invariant check. `k` is absent for whole-ladder gates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateResult {
    pub gate: String,
    pub scenario: String,
    pub k: Option<u32>,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for GateResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let status = if self.passed { "ok" } else { "FAILED" };
        match self.k {
            Some(k) => write!(f, "{status} {} [scenario={}, k={k}]: {}", self.gate, self.scenario, self.detail),
            None => write!(f, "{status} {} [scenario={}, ladder]: {}", self.gate, self.scenario, self.detail),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub gates: Vec<GateResult>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &GateResult> {
        self.gates.iter().filter(|g| !g.passed)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(COLUMNS)?;
        for row in &self.rows {
            w.write_record(row.record())?;
        }
        w.into_inner().map_err(|e| e.into_error().into())
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Writes `<stem>.csv` and `<stem>.json`, returning both paths.
    pub fn write(&self, stem: &Path) -> io::Result<(PathBuf, PathBuf)> {
        let csv_path = with_suffix(stem, ".csv");
        let json_path = with_suffix(stem, ".json");
        if let Some(dir) = stem.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&csv_path, self.to_csv().map_err(io::Error::other)?)?;
        std::fs::write(&json_path, self.to_json()?)?;
        Ok((csv_path, json_path))
    }
}

/// Output stem from a user path: a trailing `.csv` or `.json` is dropped.
/// Other dots are kept, so `sep-eps0.1` stays intact.
pub fn output_stem(path: &str) -> PathBuf {
    let trimmed = path.strip_suffix(".csv").or_else(|| path.strip_suffix(".json")).unwrap_or(path);
    PathBuf::from(trimmed)
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}
