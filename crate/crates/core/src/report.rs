//! The JSON diagnostics report and its published schema.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::diagnostics::{CknScanResult, CriterionProfile, DecayScan, EnergyResidual, GoodSlices};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::pressure::SplitSummary;
use crate::rescale::{HarmonicVanishing, ScalingReport, ZoomParams};

/// JSON Schema (draft 7) every emitted report validates against.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

pub const TOOL: &str = "nsrl";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub n: usize,
    pub box_length: f64,
    pub snapshots: usize,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoomRecord {
    pub params: ZoomParams,
    pub target_n: usize,
    pub target_box_length: f64,
    pub output_manifest: String,
    pub output_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RescaleRecord {
    Zoom(ZoomRecord),
    Scaling(ScalingReport),
    HarmonicVanishing(HarmonicVanishing),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub tool: String,
    pub version: String,
    /// FNV-1a of the input manifest bytes.
    pub manifest_digest: String,
    pub grid: GridInfo,
    /// Configs verbatim, in the order the commands ran.
    pub config: Vec<String>,
    pub criterion_profile: Option<CriterionProfile>,
    pub good_slices: Option<GoodSlices>,
    #[serde(default)]
    pub ckn_scans: Vec<CknScanResult>,
    #[serde(default)]
    pub decay_scans: Vec<DecayScan>,
    #[serde(default)]
    pub energy_residuals: Vec<EnergyResidual>,
    #[serde(default)]
    pub pressure_split: Vec<SplitSummary>,
    #[serde(default)]
    pub rescale: Vec<RescaleRecord>,
}

impl DiagnosticsReport {
    pub fn new(manifest_digest: u64, grid: GridInfo) -> Self {
        DiagnosticsReport {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            manifest_digest: crate::io::checksum_hex(manifest_digest),
            grid,
            config: Vec::new(),
            criterion_profile: None,
            good_slices: None,
            ckn_scans: Vec::new(),
            decay_scans: Vec::new(),
            energy_residuals: Vec::new(),
            pressure_split: Vec::new(),
            rescale: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<Value> {
        let v = serde_json::to_value(self)?;
        check_finite(&v)?;
        Ok(v)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(&self.to_json()?)?;
        bytes.push(b'\n');
        write_atomic(path, &bytes)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let v: Value = serde_json::from_slice(&std::fs::read(path)?)?;
        Ok(serde_json::from_value(v)?)
    }

    /// Number of flagged CKN scans.
    pub fn flagged(&self) -> usize {
        self.ckn_scans.iter().filter(|s| s.flagged).count()
    }

    pub fn summary_line(&self) -> String {
        let fmt = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.6e}"));
        format!(
            "m_proxy={} M_proxy={} flagged={}",
            fmt(self.criterion_profile.as_ref().map(|c| c.m_proxy)),
            fmt(self.criterion_profile.as_ref().map(|c| c.big_m_proxy)),
            self.flagged()
        )
    }
}

/// `serde_json` writes non-finite floats as `null`, so a report that no
/// longer parses back into its own type carried a NaN or an infinity.
fn check_finite(v: &Value) -> Result<()> {
    serde_json::from_value::<DiagnosticsReport>(v.clone())
        .map(|_| ())
        .map_err(|e| Error::NonFinite(format!("report ({e})")))
}
