//! Shared check-record and report types serialized by the CLI.

use serde::Serialize;

use crate::vector::ClassificationReport;

/// Version of the JSON report layout; bump when fields change shape.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CheckStatus {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "NOT_APPLICABLE")]
    NotApplicable,
    #[serde(rename = "INCONCLUSIVE")]
    Inconclusive,
}

impl CheckStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::NotApplicable => "NOT_APPLICABLE",
            CheckStatus::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// One verification item. `key` is a stable catalogue tag (B1..B9 for the
/// identity battery, descriptive tags elsewhere) so failures can be traced.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub key: String,
    pub description: String,
    pub status: CheckStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CheckRecord {
    pub fn new(key: &str, description: &str, status: CheckStatus) -> CheckRecord {
        CheckRecord {
            key: key.to_string(),
            description: description.to_string(),
            status,
            depth: None,
            detail: String::new(),
        }
    }

    pub fn from_bool(key: &str, description: &str, ok: bool) -> CheckRecord {
        CheckRecord::new(
            key,
            description,
            if ok { CheckStatus::Pass } else { CheckStatus::Fail },
        )
    }

    pub fn with_depth(mut self, depth: u32) -> CheckRecord {
        self.depth = Some(depth);
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> CheckRecord {
        self.detail = detail.into();
        self
    }

    pub fn is_fail(&self) -> bool {
        matches!(self.status, CheckStatus::Fail | CheckStatus::Inconclusive)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub total: usize,
    pub pass: usize,
    pub fail: usize,
    pub not_applicable: usize,
    pub inconclusive: usize,
    pub exit_code: i32,
}

pub fn summarize(checks: &[CheckRecord]) -> Summary {
    let count = |s: CheckStatus| checks.iter().filter(|c| c.status == s).count();
    let fail = count(CheckStatus::Fail);
    let inconclusive = count(CheckStatus::Inconclusive);
    Summary {
        total: checks.len(),
        pass: count(CheckStatus::Pass),
        fail,
        not_applicable: count(CheckStatus::NotApplicable),
        inconclusive,
        exit_code: if fail + inconclusive > 0 { 1 } else { 0 },
    }
}

/// Top-level report: configuration echo, classification, check list, summary.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<ClassificationReport>,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
}

impl RunReport {
    pub fn new(
        config: serde_json::Value,
        classification: Option<ClassificationReport>,
        checks: Vec<CheckRecord>,
    ) -> RunReport {
        let summary = summarize(&checks);
        RunReport {
            schema_version: SCHEMA_VERSION,
            config,
            classification,
            checks,
            summary,
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}
