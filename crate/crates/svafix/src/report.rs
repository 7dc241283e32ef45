//! TE/LE/FR metrics, the COI coverage analog, and report emission.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::cdfg::{cone_of_influence, DesignCdfg, Direction};
use crate::classify::{ErrorClassification, ErrorKind};
use crate::fix::{FixOutcome, FixStatus};
use crate::hdl::{render_assertion, SvaAssertion};

/// Printed in the proof-core column: extracting a proof core needs a
/// formal engine, which this tool does not drive.
pub const PROOF_CORE_NOTE: &str = "requires formal engine";

/// Rounds `100 * numer / denom` half-up to tenths of a percent.
/// `None` when the denominator is zero.
pub fn percent_tenths(numer: u64, denom: u64) -> Option<u64> {
    if denom == 0 {
        return None;
    }
    Some((2 * numer * 1000 + denom) / (2 * denom))
}

pub fn format_percent(tenths: u64) -> String {
    format!("{}.{}", tenths / 10, tenths % 10)
}

/// Timing/logic attempt and fix counts for one design run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrCounts {
    pub te_attempted: u32,
    pub te_fixed: u32,
    pub le_attempted: u32,
    pub le_fixed: u32,
}

impl FrCounts {
    /// Fix rate over both error classes, in tenths of a percent, rounded
    /// half-up. `None` when nothing was attempted.
    pub fn fr_tenths(&self) -> Option<u64> {
        percent_tenths(
            u64::from(self.te_fixed) + u64::from(self.le_fixed),
            u64::from(self.te_attempted) + u64::from(self.le_attempted),
        )
    }

    /// `"83.8%"`, or `"N/A"` when nothing was attempted.
    pub fn fr_display(&self) -> String {
        match self.fr_tenths() {
            Some(t) => format!("{}%", format_percent(t)),
            None => "N/A".to_string(),
        }
    }
}

pub fn fr_metrics(outcomes: &[FixOutcome]) -> FrCounts {
    let mut c = FrCounts {
        te_attempted: 0,
        te_fixed: 0,
        le_attempted: 0,
        le_fixed: 0,
    };
    for o in outcomes {
        let fixed = o.status == FixStatus::Fixed;
        match o.classification {
            ErrorKind::Timing => {
                c.te_attempted += 1;
                c.te_fixed += u32::from(fixed);
            }
            ErrorKind::Logic => {
                c.le_attempted += 1;
                c.le_fixed += u32::from(fixed);
            }
        }
    }
    c
}

/// Percentage of design nodes inside the union of every assertion's
/// backward cone of influence, rounded half-up to one decimal. A node
/// analog of a formal tool's COI coverage, not the tool metric itself.
/// Assertions with unresolvable signals are skipped with a warning.
pub fn coi_coverage(g: &DesignCdfg, assertions: &[SvaAssertion]) -> f64 {
    let total = g.nodes().len();
    if total == 0 {
        return 0.0;
    }
    let mut covered: BTreeSet<String> = BTreeSet::new();
    for a in assertions {
        let mut seeds: BTreeSet<String> = a.antecedent.signals();
        seeds.extend(a.consequent.signals());
        if let Some(d) = &a.disable {
            seeds.extend(d.signals());
        }
        if let Some(c) = &a.clock {
            seeds.insert(c.signal.clone());
        }
        match cone_of_influence(g, &seeds, Direction::Backward, None) {
            Ok(cone) => covered.extend(cone.into_keys()),
            Err(e) => warn!("coi coverage: skipping assertion ({e})"),
        }
    }
    let tenths = percent_tenths(covered.len() as u64, total as u64).unwrap_or(0);
    tenths as f64 / 10.0
}

/// One assertion's trip through classify and fix. Status is `fixed`,
/// `unfixed`, `passed` (no repair needed), or `error` (pipeline failure
/// before a repair attempt; the cause lands in `notes`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssertionRow {
    pub name: String,
    pub original: String,
    pub classification: Option<String>,
    pub evidence: String,
    pub status: String,
    pub origin: Option<String>,
    pub fixed: Option<String>,
    pub candidates_tried: usize,
    pub notes: Vec<String>,
}

impl AssertionRow {
    pub fn new(
        name: impl Into<String>,
        original: &SvaAssertion,
        classification: &ErrorClassification,
        outcome: &FixOutcome,
    ) -> AssertionRow {
        AssertionRow {
            name: name.into(),
            original: render_assertion(original),
            classification: Some(
                match outcome.classification {
                    ErrorKind::Timing => "timing",
                    ErrorKind::Logic => "logic",
                }
                .to_string(),
            ),
            evidence: classification.rationale.clone(),
            status: match outcome.status {
                FixStatus::Fixed => "fixed",
                FixStatus::Unfixed => "unfixed",
            }
            .to_string(),
            origin: outcome.accepted.as_ref().map(|c| c.origin.label().to_string()),
            fixed: outcome.accepted.as_ref().map(|c| render_assertion(&c.assertion)),
            candidates_tried: outcome.trials.len(),
            notes: Vec::new(),
        }
    }

    pub fn passed(name: impl Into<String>, original: &SvaAssertion) -> AssertionRow {
        AssertionRow {
            name: name.into(),
            original: render_assertion(original),
            classification: None,
            evidence: "passes and is covered on every trace".to_string(),
            status: "passed".to_string(),
            origin: None,
            fixed: None,
            candidates_tried: 0,
            notes: Vec::new(),
        }
    }

    pub fn error(
        name: impl Into<String>,
        original: impl Into<String>,
        note: impl Into<String>,
    ) -> AssertionRow {
        AssertionRow {
            name: name.into(),
            original: original.into(),
            classification: None,
            evidence: String::new(),
            status: "error".to_string(),
            origin: None,
            fixed: None,
            candidates_tried: 0,
            notes: vec![note.into()],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub backend: String,
    pub shift_bound: u32,
    pub top_k: usize,
    pub candidate_cap: usize,
    pub seed: u64,
}

/// Full per-design run report. Serialization is timestamp-free and
/// key-sorted so identical runs emit identical bytes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixReport {
    pub design: String,
    pub counts: FrCounts,
    pub fr: String,
    pub assertions: Vec<AssertionRow>,
    pub coi_analog_before: f64,
    pub coi_analog_after: f64,
    pub proof_core: String,
    pub config: ConfigEcho,
}

impl FixReport {
    pub fn new(
        design: impl Into<String>,
        counts: FrCounts,
        assertions: Vec<AssertionRow>,
        coi_analog_before: f64,
        coi_analog_after: f64,
        config: ConfigEcho,
    ) -> FixReport {
        FixReport {
            design: design.into(),
            counts,
            fr: counts.fr_display(),
            assertions,
            coi_analog_before,
            coi_analog_after,
            proof_core: PROOF_CORE_NOTE.to_string(),
            config,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
}

pub fn emit_report(r: &FixReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            // Round-trip through Value: serde_json's default map is a
            // BTreeMap, which sorts the keys.
            let v = serde_json::to_value(r).expect("report serializes");
            let mut bytes = serde_json::to_vec_pretty(&v).expect("report serializes");
            bytes.push(b'\n');
            bytes
        }
        ReportFormat::Markdown => markdown_report(r).into_bytes(),
    }
}

/// One column per design, TE/LE as attempted/fixed pairs, FR as a
/// percent. Mirrors the evaluation table layout.
pub fn fr_markdown_table(rows: &[(&str, FrCounts)]) -> String {
    let mut s = String::from("| Metric |");
    for (name, _) in rows {
        write!(s, " {name} |").unwrap();
    }
    s.push_str("\n| --- |");
    for _ in rows {
        s.push_str(" --- |");
    }
    s.push_str("\n| TE |");
    for (_, c) in rows {
        write!(s, " {}/{} |", c.te_attempted, c.te_fixed).unwrap();
    }
    s.push_str("\n| LE |");
    for (_, c) in rows {
        write!(s, " {}/{} |", c.le_attempted, c.le_fixed).unwrap();
    }
    s.push_str("\n| FR |");
    for (_, c) in rows {
        write!(s, " {} |", c.fr_display()).unwrap();
    }
    s.push('\n');
    s
}

fn markdown_report(r: &FixReport) -> String {
    let mut s = String::new();
    writeln!(s, "# Assertion fix report: {}\n", r.design).unwrap();
    s.push_str(&fr_markdown_table(&[(r.design.as_str(), r.counts)]));
    s.push('\n');
    writeln!(s, "| Coverage | before | after |").unwrap();
    writeln!(s, "| --- | --- | --- |").unwrap();
    writeln!(
        s,
        "| COI(analog) | {}% | {}% |",
        r.coi_analog_before, r.coi_analog_after
    )
    .unwrap();
    writeln!(s, "| Proof core | {} | {} |", r.proof_core, r.proof_core).unwrap();
    s.push('\n');
    s.push_str("## Assertions\n\n");
    writeln!(s, "| name | classification | status | origin | candidates |").unwrap();
    writeln!(s, "| --- | --- | --- | --- | --- |").unwrap();
    for row in &r.assertions {
        writeln!(
            s,
            "| {} | {} | {} | {} | {} |",
            row.name,
            row.classification.as_deref().unwrap_or("-"),
            row.status,
            row.origin.as_deref().unwrap_or("-"),
            row.candidates_tried
        )
        .unwrap();
    }
    for row in &r.assertions {
        writeln!(s, "\n### {}\n", row.name).unwrap();
        writeln!(s, "- original: `{}`", row.original).unwrap();
        if let Some(f) = &row.fixed {
            writeln!(s, "- fixed: `{f}`").unwrap();
        }
        if !row.evidence.is_empty() {
            writeln!(s, "- evidence: {}", row.evidence).unwrap();
        }
        for n in &row.notes {
            writeln!(s, "- note: {n}").unwrap();
        }
    }
    s.push_str("\n## Config\n\n");
    writeln!(
        s,
        "backend={} shift_bound={} top_k={} candidate_cap={} seed={}",
        r.config.backend,
        r.config.shift_bound,
        r.config.top_k,
        r.config.candidate_cap,
        r.config.seed
    )
    .unwrap();
    s
}

fn expect_keys(
    obj: &serde_json::Map<String, serde_json::Value>,
    keys: &[&str],
    what: &str,
) -> Result<(), String> {
    let got: Vec<&str> = obj.keys().map(String::as_str).collect();
    if got != keys {
        return Err(format!("{what}: keys {got:?}, expected {keys:?}"));
    }
    Ok(())
}

fn as_count(v: &serde_json::Value, what: &str) -> Result<u64, String> {
    v.as_u64().ok_or_else(|| format!("{what}: not a count"))
}

fn as_str<'a>(v: &'a serde_json::Value, what: &str) -> Result<&'a str, String> {
    v.as_str().ok_or_else(|| format!("{what}: not a string"))
}

fn as_percent(v: &serde_json::Value, what: &str) -> Result<f64, String> {
    let f = v.as_f64().ok_or_else(|| format!("{what}: not a number"))?;
    if !(0.0..=100.0).contains(&f) {
        return Err(format!("{what}: {f} outside [0, 100]"));
    }
    Ok(f)
}

/// Validates a parsed report against the documented schema: exact key
/// sets, value types, percentages in range, and the FR string agreeing
/// with the counts.
pub fn validate_report_json(v: &serde_json::Value) -> Result<(), String> {
    let obj = v.as_object().ok_or("report: not an object")?;
    expect_keys(
        obj,
        &[
            "assertions",
            "coi_analog_after",
            "coi_analog_before",
            "config",
            "counts",
            "design",
            "fr",
            "proof_core",
        ],
        "report",
    )?;
    as_str(&obj["design"], "design")?;
    as_percent(&obj["coi_analog_before"], "coi_analog_before")?;
    as_percent(&obj["coi_analog_after"], "coi_analog_after")?;
    if as_str(&obj["proof_core"], "proof_core")? != PROOF_CORE_NOTE {
        return Err("proof_core: unexpected text".to_string());
    }

    let counts = obj["counts"].as_object().ok_or("counts: not an object")?;
    expect_keys(
        counts,
        &["le_attempted", "le_fixed", "te_attempted", "te_fixed"],
        "counts",
    )?;
    let c = FrCounts {
        te_attempted: as_count(&counts["te_attempted"], "te_attempted")? as u32,
        te_fixed: as_count(&counts["te_fixed"], "te_fixed")? as u32,
        le_attempted: as_count(&counts["le_attempted"], "le_attempted")? as u32,
        le_fixed: as_count(&counts["le_fixed"], "le_fixed")? as u32,
    };
    if c.te_fixed > c.te_attempted || c.le_fixed > c.le_attempted {
        return Err("counts: fixed exceeds attempted".to_string());
    }
    if as_str(&obj["fr"], "fr")? != c.fr_display() {
        return Err(format!(
            "fr: `{}` disagrees with counts ({})",
            obj["fr"], c.fr_display()
        ));
    }

    let config = obj["config"].as_object().ok_or("config: not an object")?;
    expect_keys(
        config,
        &["backend", "candidate_cap", "seed", "shift_bound", "top_k"],
        "config",
    )?;
    as_str(&config["backend"], "backend")?;
    for key in ["candidate_cap", "seed", "shift_bound", "top_k"] {
        as_count(&config[key], key)?;
    }

    let rows = obj["assertions"]
        .as_array()
        .ok_or("assertions: not an array")?;
    let mut derived = FrCounts {
        te_attempted: 0,
        te_fixed: 0,
        le_attempted: 0,
        le_fixed: 0,
    };
    for (i, row) in rows.iter().enumerate() {
        let what = format!("assertions[{i}]");
        let row = row.as_object().ok_or_else(|| format!("{what}: not an object"))?;
        expect_keys(
            row,
            &[
                "candidates_tried",
                "classification",
                "evidence",
                "fixed",
                "name",
                "notes",
                "origin",
                "original",
                "status",
            ],
            &what,
        )?;
        as_str(&row["name"], &what)?;
        as_str(&row["original"], &what)?;
        as_str(&row["evidence"], &what)?;
        as_count(&row["candidates_tried"], &what)?;
        let notes = row["notes"]
            .as_array()
            .ok_or_else(|| format!("{what}: notes not an array"))?;
        for n in notes {
            as_str(n, &what)?;
        }
        let status = as_str(&row["status"], &what)?;
        if !matches!(status, "fixed" | "unfixed" | "passed" | "error") {
            return Err(format!("{what}: bad status"));
        }
        let attempted = matches!(status, "fixed" | "unfixed");
        if row["classification"].is_null() == attempted {
            return Err(format!("{what}: classification disagrees with status"));
        }
        if attempted {
            let fixed = status == "fixed";
            match as_str(&row["classification"], &what)? {
                "timing" => {
                    derived.te_attempted += 1;
                    derived.te_fixed += u32::from(fixed);
                }
                "logic" => {
                    derived.le_attempted += 1;
                    derived.le_fixed += u32::from(fixed);
                }
                _ => return Err(format!("{what}: bad classification")),
            }
        }
        let has_fix = !row["fixed"].is_null();
        if has_fix != (status == "fixed") || row["origin"].is_null() != row["fixed"].is_null() {
            return Err(format!("{what}: fix fields disagree with status"));
        }
        if has_fix {
            as_str(&row["fixed"], &what)?;
            as_str(&row["origin"], &what)?;
        }
    }
    if derived != c {
        return Err(format!("counts {c:?} disagree with rows {derived:?}"));
    }
    Ok(())
}
