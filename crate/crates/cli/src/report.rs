//! The JSON report emitted by `estimate`.

use bodymetrics::metrics::{BodyEstimate, PipelineConfig, StageRecord};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct InputInfo {
    pub path: String,
    /// "ply", "pgm" or "raw".
    pub kind: String,
    /// SHA-256 of the input file bytes, hex encoded.
    pub sha256: String,
}

/// Everything needed to audit one `estimate` invocation: tool version,
/// exact input, the effective configuration (defaults included), the
/// estimate itself, and what each stage did.
///
/// Two runs over the same input and configuration differ only in the
/// stage `millis` fields.
#[derive(Debug, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub input: InputInfo,
    pub config: PipelineConfig,
    pub estimate: BodyEstimate,
    pub stages: Vec<StageInfo>,
}

/// Serializable mirror of [`StageRecord`] with an owned name.
#[derive(Debug, Serialize, Deserialize)]
pub struct StageInfo {
    pub name: String,
    pub points_in: usize,
    pub points_out: usize,
    pub millis: f64,
}

impl From<&StageRecord> for StageInfo {
    fn from(s: &StageRecord) -> Self {
        StageInfo {
            name: s.name.to_string(),
            points_in: s.points_in,
            points_out: s.points_out,
            millis: s.millis,
        }
    }
}

pub fn build_report(
    input: InputInfo,
    config: &PipelineConfig,
    estimate: BodyEstimate,
    stages: &[StageRecord],
) -> ReportDocument {
    ReportDocument {
        schema_version: SCHEMA_VERSION,
        tool: ToolInfo {
            name: "bodymetrics".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        input,
        config: config.clone(),
        estimate,
        stages: stages.iter().map(StageInfo::from).collect(),
    }
}
