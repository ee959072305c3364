//! Check records and report emission.

use crate::config::SuiteConfig;
use serde::Serialize;
use std::time::Duration;

/// What a check compares its computed value against.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Expectation {
    /// `|computed − value| ≤ tolerance`.
    Equals { value: f64 },
    /// `computed ≤ bound + tolerance`.
    AtMost { bound: f64 },
    /// `computed ≥ bound − tolerance`.
    AtLeast { bound: f64 },
    /// Informational value, always passes.
    Recorded,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    /// Stable identifier, also the key for tolerance overrides.
    pub id: String,
    /// The identity or quantity the check verifies.
    pub tag: String,
    pub computed: f64,
    pub expected: Expectation,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
    /// Wall time; excluded from default emission so reports stay
    /// byte-identical across runs.
    #[serde(skip)]
    pub wall_time: Duration,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u128>,
}

impl CheckResult {
    pub fn evaluate(
        id: &str,
        tag: &str,
        computed: f64,
        expected: Expectation,
        tolerance: f64,
        detail: String,
        wall_time: Duration,
    ) -> Self {
        let pass = match &expected {
            Expectation::Equals { value } => (computed - value).abs() <= tolerance,
            Expectation::AtMost { bound } => computed <= bound + tolerance,
            Expectation::AtLeast { bound } => computed >= bound - tolerance,
            Expectation::Recorded => true,
        };
        CheckResult {
            id: id.to_string(),
            tag: tag.to_string(),
            computed,
            expected,
            tolerance,
            pass,
            detail,
            wall_time,
            wall_time_ms: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

#[derive(Serialize)]
struct Summary {
    total: usize,
    passed: usize,
    failed: usize,
}

#[derive(Serialize)]
struct Report<'a> {
    config: &'a SuiteConfig,
    checks: &'a [CheckResult],
    summary: Summary,
}

/// Serializes the results; deterministic for a fixed config and seed unless
/// `timings` is requested.
pub fn emit_report(
    cfg: &SuiteConfig,
    results: &[CheckResult],
    format: Format,
    timings: bool,
) -> String {
    let mut owned;
    let checks: &[CheckResult] = if timings {
        owned = results.to_vec();
        for c in owned.iter_mut() {
            c.wall_time_ms = Some(c.wall_time.as_millis());
        }
        &owned
    } else {
        results
    };
    let summary = Summary {
        total: checks.len(),
        passed: checks.iter().filter(|c| c.pass).count(),
        failed: checks.iter().filter(|c| !c.pass).count(),
    };
    match format {
        Format::Json => {
            let report = Report {
                config: cfg,
                checks,
                summary,
            };
            let mut s = serde_json::to_string_pretty(&report).expect("serializable report");
            s.push('\n');
            s
        }
        Format::Text => {
            let mut out = String::new();
            let idw = checks.iter().map(|c| c.id.len()).max().unwrap_or(8).max(8);
            out.push_str(&format!(
                "{:idw$}  {:>13}  {:>13}  {:>9}  {:4}  {}\n",
                "check", "computed", "expected", "tol", "ok", "tag"
            ));
            for c in checks {
                let expected = match &c.expected {
                    Expectation::Equals { value } => format!("{value:.6e}"),
                    Expectation::AtMost { bound } => format!("<= {bound:.3e}"),
                    Expectation::AtLeast { bound } => format!(">= {bound:.3e}"),
                    Expectation::Recorded => "recorded".to_string(),
                };
                let timing = match c.wall_time_ms {
                    Some(ms) => format!("  [{ms} ms]"),
                    None => String::new(),
                };
                out.push_str(&format!(
                    "{:idw$}  {:>13.6e}  {:>13}  {:>9.1e}  {:4}  {}{}\n",
                    c.id,
                    c.computed,
                    expected,
                    c.tolerance,
                    if c.pass { "PASS" } else { "FAIL" },
                    c.tag,
                    timing
                ));
                if !c.pass || matches!(c.expected, Expectation::Recorded) {
                    out.push_str(&format!("{:idw$}    {}\n", "", c.detail));
                }
            }
            out.push_str(&format!(
                "summary: {} checks, {} passed, {} failed\n",
                summary.total, summary.passed, summary.failed
            ));
            out
        }
    }
}
