//! Stage 2: decide whether a failing assertion suffers a timing error
//! (right check, wrong cycle alignment) or a logic error (wrong condition,
//! signal, or value).
//!
//! The deterministic heuristic searches for a consequent shift within a
//! bound that makes every counterexample trace pass, then cross-checks the
//! antecedent against the guards the RTL actually uses to drive the
//! consequent signals. A guard-constant mismatch forces Logic even when a
//! shift happens to pass: a lagging waveform is exactly the bait that makes
//! misread read-maps look like timing bugs.

use crate::cdfg::{cone_of_influence, guard_conditions, DesignCdfg, Direction};
use crate::expr::Const;
use crate::hdl::{render_assertion, SvaAssertion};
use crate::llm::{LlmClient, Prompt};
use crate::retrieval::RtlChunk;
use crate::trace::{evaluate_assertion, shift_consequent, CounterexampleTrace, TraceError, Val};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub const DEFAULT_SHIFT_BOUND: u32 = 3;
/// Cycles of waveform shown in a classification prompt.
const PROMPT_WINDOW: usize = 32;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("classification requires at least one counterexample trace")]
    NoTraces,
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Timing,
    Logic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Heuristic,
    Llm,
    LlmOverriddenByHeuristic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Evidence {
    /// Shifting the consequent by `k` cycles makes every trace pass.
    PassingShift { k: i32 },
    /// The RTL drives `target` under `signal == rtl`, but the antecedent
    /// requires `signal == assertion`.
    GuardMismatch {
        target: String,
        signal: String,
        rtl: Const,
        assertion: Const,
    },
    /// An antecedent signal has no dataflow path into the consequent cone.
    CoiMismatch { signal: String },
    /// Shift search exhausted without a passing alignment.
    NoAlignedShift,
    /// The model's verdict, uncorroborated by heuristic evidence.
    ModelVerdict,
}

#[derive(Debug, Clone)]
pub struct ErrorClassification {
    pub kind: ErrorKind,
    pub evidence: Evidence,
    pub source: Source,
    pub rationale: String,
}

/// Searches |k| = 1..=bound, positive first, for a consequent shift that
/// passes and is covered on every trace. Returns the minimal such |k|.
pub fn find_passing_shift(
    a: &SvaAssertion,
    traces: &[CounterexampleTrace],
    bound: u32,
) -> Result<Option<i32>, TraceError> {
    for mag in 1..=bound as i32 {
        for k in [mag, -mag] {
            let shifted = shift_consequent(a, k)?;
            let mut all = true;
            for t in traces {
                if !evaluate_assertion(&shifted, t)?.passes_and_covered() {
                    all = false;
                    break;
                }
            }
            if all {
                return Ok(Some(k));
            }
        }
    }
    Ok(None)
}

fn suffix_normalize(name: &str) -> &str {
    name.strip_suffix("_i")
        .or_else(|| name.strip_suffix("_o"))
        .unwrap_or(name)
}

/// Equality atoms of the antecedent, keyed by suffix-normalized signal.
fn antecedent_atoms(a: &SvaAssertion) -> BTreeMap<String, (String, Const)> {
    let mut atoms = BTreeMap::new();
    for c in a.antecedent.conjuncts() {
        if let Some((sig, val)) = c.as_eq_atom() {
            atoms.insert(suffix_normalize(sig).to_string(), (sig.to_string(), val));
        }
    }
    atoms
}

/// The Fig.-3-shaped trap detector: for each consequent signal, find the
/// RTL assignments whose right-hand side mentions the value the consequent
/// expects, and compare their guards against the antecedent's equality
/// atoms. A constant disagreement on the same guard signal is a logic
/// error, whatever the waveform suggests.
pub fn guard_mismatch(a: &SvaAssertion, g: &DesignCdfg) -> Option<Evidence> {
    let atoms = antecedent_atoms(a);
    if atoms.is_empty() {
        return None;
    }
    let cons_signals = a.consequent.signals();
    for target in &cons_signals {
        let mut expected: BTreeSet<&str> = cons_signals
            .iter()
            .filter(|s| *s != target)
            .map(|s| s.as_str())
            .collect();
        // `dout == $past(txr)`: the target's drivers should mention txr.
        if expected.is_empty() {
            continue;
        }
        expected = expected.into_iter().collect();
        let assignments = match guard_conditions(g, target) {
            Ok(list) => list,
            Err(_) => continue, // undriven or foreign signal: nothing to check
        };
        let mut first_mismatch = None;
        let mut corroborated = false;
        for asg in &assignments {
            if !asg.rhs.signals().iter().any(|s| expected.contains(s.as_str())) {
                continue; // arm does not produce the expected value
            }
            let mut arm_matches = 0u32;
            let mut arm_mismatch = None;
            for part in &asg.guard {
                for atom in part.conjuncts() {
                    let Some((gsig, gval)) = atom.as_eq_atom() else { continue };
                    let Some((asig, aval)) = atoms.get(suffix_normalize(gsig)) else {
                        continue;
                    };
                    if aval.same_value(&gval) {
                        arm_matches += 1;
                    } else if arm_mismatch.is_none() {
                        arm_mismatch = Some(Evidence::GuardMismatch {
                            target: target.clone(),
                            signal: asig.clone(),
                            rtl: gval,
                            assertion: *aval,
                        });
                    }
                }
            }
            match arm_mismatch {
                Some(m) => {
                    if first_mismatch.is_none() {
                        first_mismatch = Some(m);
                    }
                }
                None if arm_matches > 0 => corroborated = true,
                None => {}
            }
        }
        if corroborated {
            continue; // some arm drives the expected value under the asserted guard
        }
        if first_mismatch.is_some() {
            return first_mismatch;
        }
    }
    None
}

/// Antecedent signal with no path into the backward cone of the consequent.
fn coi_mismatch(a: &SvaAssertion, g: &DesignCdfg) -> Option<Evidence> {
    let cons: BTreeSet<String> = a
        .consequent
        .signals()
        .into_iter()
        .filter(|s| g.node_id(s).is_some())
        .collect();
    if cons.is_empty() {
        return None;
    }
    let cone = cone_of_influence(g, &cons, Direction::Backward, None).ok()?;
    for s in a.antecedent.signals() {
        if g.node_id(&s).is_some() && !cone.contains_key(&s) {
            return Some(Evidence::CoiMismatch { signal: s });
        }
    }
    None
}

fn heuristic_verdict(
    guard: &Option<Evidence>,
    shift: Option<i32>,
    coi: &Option<Evidence>,
) -> (ErrorKind, Evidence, String) {
    if let Some(ev) = guard {
        let text = match ev {
            Evidence::GuardMismatch {
                target,
                signal,
                rtl,
                assertion,
            } => format!(
                "RTL drives {} under {} == {} but the antecedent requires {} == {}",
                target, signal, rtl, signal, assertion
            ),
            _ => unreachable!("guard_mismatch returns GuardMismatch"),
        };
        return (ErrorKind::Logic, ev.clone(), text);
    }
    if let Some(k) = shift {
        return (
            ErrorKind::Timing,
            Evidence::PassingShift { k },
            format!(
                "shifting the consequent by {} cycle(s) makes every counterexample pass and stay covered",
                k
            ),
        );
    }
    if let Some(ev) = coi {
        let text = match ev {
            Evidence::CoiMismatch { signal } => format!(
                "antecedent signal {} has no dataflow path into the consequent cone",
                signal
            ),
            _ => unreachable!("coi_mismatch returns CoiMismatch"),
        };
        return (ErrorKind::Logic, ev.clone(), text);
    }
    (
        ErrorKind::Logic,
        Evidence::NoAlignedShift,
        "no consequent shift within the bound aligns the traces".to_string(),
    )
}

/// Classifies a failing assertion. With a client, the model answers the
/// three-source prompt (assertion, waveform, retrieved RTL); the heuristic
/// guard check still overrides a Timing verdict, and a Timing verdict
/// without a passing shift is demoted to Logic so Timing evidence always
/// carries a shift that provably repairs the traces.
pub fn classify_error(
    a: &SvaAssertion,
    traces: &[CounterexampleTrace],
    chunks: &[RtlChunk],
    g: &DesignCdfg,
    llm: Option<&dyn LlmClient>,
    shift_bound: u32,
) -> Result<ErrorClassification, ClassifyError> {
    assert!(shift_bound >= 1, "shift bound must be at least 1");
    if traces.is_empty() {
        return Err(ClassifyError::NoTraces);
    }
    let guard = guard_mismatch(a, g);
    let shift = find_passing_shift(a, traces, shift_bound)?;
    let coi = coi_mismatch(a, g);
    let (kind, evidence, rationale) = heuristic_verdict(&guard, shift, &coi);

    let Some(client) = llm else {
        return Ok(ErrorClassification {
            kind,
            evidence,
            source: Source::Heuristic,
            rationale,
        });
    };

    let prompt = build_classification_prompt(a, traces, chunks);
    let verdict = match client.complete(&prompt) {
        Ok(resp) => parse_verdict(&resp.text),
        Err(e) => {
            log::warn!("classification backend failed ({}); using heuristic", e);
            None
        }
    };
    Ok(match verdict {
        None => ErrorClassification {
            kind,
            evidence,
            source: Source::Heuristic,
            rationale,
        },
        Some(ErrorKind::Logic) => ErrorClassification {
            kind: ErrorKind::Logic,
            evidence: if matches!(evidence, Evidence::PassingShift { .. }) {
                Evidence::ModelVerdict
            } else {
                evidence
            },
            source: Source::Llm,
            rationale: "model classified the failure as a logic error".to_string(),
        },
        Some(ErrorKind::Timing) => {
            if guard.is_some() {
                ErrorClassification {
                    kind: ErrorKind::Logic,
                    evidence: guard.unwrap(),
                    source: Source::LlmOverriddenByHeuristic,
                    rationale: format!("model said Timing, but {}", rationale),
                }
            } else if let Some(k) = shift {
                ErrorClassification {
                    kind: ErrorKind::Timing,
                    evidence: Evidence::PassingShift { k },
                    source: Source::Llm,
                    rationale,
                }
            } else {
                ErrorClassification {
                    kind: ErrorKind::Logic,
                    evidence: Evidence::NoAlignedShift,
                    source: Source::LlmOverriddenByHeuristic,
                    rationale: "model said Timing, but no shift within the bound passes".to_string(),
                }
            }
        }
    })
}

pub(crate) fn format_val(v: Val) -> String {
    if v.width <= 4 {
        (0..v.width)
            .rev()
            .map(|i| {
                if v.xmask >> i & 1 != 0 {
                    'x'
                } else if v.bits >> i & 1 != 0 {
                    '1'
                } else {
                    '0'
                }
            })
            .collect()
    } else {
        let nibbles = (v.width + 3) / 4;
        (0..nibbles)
            .rev()
            .map(|n| {
                let shift = n * 4;
                if (v.xmask >> shift) & 0xf != 0 {
                    'x'
                } else {
                    char::from_digit(((v.bits >> shift) & 0xf) as u32, 16).unwrap()
                }
            })
            .collect()
    }
}

pub(crate) fn waveform_table(
    a: &SvaAssertion,
    t: &CounterexampleTrace,
    keep: &BTreeSet<String>,
) -> String {
    let names: Vec<&str> = t
        .signal_names()
        .filter(|n| keep.contains(*n))
        .collect();
    if names.is_empty() || t.is_empty() {
        return "(no overlapping signals)\n".to_string();
    }
    let fail = evaluate_assertion(a, t)
        .ok()
        .and_then(|r| r.first_failing_cycle)
        .unwrap_or(0);
    let start = fail.saturating_sub(PROMPT_WINDOW / 2);
    let end = (start + PROMPT_WINDOW).min(t.len());

    let mut widths: Vec<usize> = names.iter().map(|n| n.len()).collect();
    let mut rows: Vec<Vec<String>> = Vec::new();
    for cycle in start..end {
        let mut row = Vec::with_capacity(names.len());
        for (j, n) in names.iter().enumerate() {
            let cell = format_val(t.signal(n).unwrap().value(cycle));
            widths[j] = widths[j].max(cell.len());
            row.push(cell);
        }
        rows.push(row);
    }
    let mut out = String::new();
    out.push_str("cycle");
    for (j, n) in names.iter().enumerate() {
        out.push_str(&format!(" | {:>w$}", n, w = widths[j]));
    }
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        out.push_str(&format!("{:>5}", start + i));
        for (j, cell) in row.iter().enumerate() {
            out.push_str(&format!(" | {:>w$}", cell, w = widths[j]));
        }
        out.push('\n');
    }
    out
}

/// Deterministic three-source prompt: the assertion, a cycle-indexed
/// waveform window centered on the first failure, and the retrieved RTL.
pub fn build_classification_prompt(
    a: &SvaAssertion,
    traces: &[CounterexampleTrace],
    chunks: &[RtlChunk],
) -> Prompt {
    let mut keep: BTreeSet<String> = a.antecedent.signals();
    keep.extend(a.consequent.signals());
    if let Some(d) = &a.disable {
        keep.extend(d.signals());
    }
    for c in chunks {
        keep.extend(c.defined.iter().cloned());
        keep.extend(c.used.iter().cloned());
    }

    let mut user = String::new();
    user.push_str("Failing assertion:\n");
    user.push_str(&render_assertion(a));
    user.push_str("\n\nCounterexample waveform (values sampled at each rising clock edge):\n");
    for (i, t) in traces.iter().enumerate() {
        user.push_str(&format!("Trace {}:\n", i + 1));
        user.push_str(&waveform_table(a, t, &keep));
        user.push('\n');
    }
    user.push_str("Relevant RTL:\n");
    for c in chunks {
        user.push_str(&format!(
            "[chunk {}] module {} lines {}-{}\n{}\n",
            c.id, c.module, c.start_line, c.end_line, c.text
        ));
    }
    user.push_str(
        "\nIs this assertion failure a timing error (the checked relation is right \
         but shifted by some cycles) or a logic error (wrong condition, signal, or \
         value)? Think step by step, then end with exactly one line:\n\
         ANSWER: Timing\nor\nANSWER: Logic\n",
    );
    Prompt::new(
        "You classify failing SystemVerilog assertions against golden RTL. \
         The RTL is correct; only the assertion is wrong.",
        user,
    )
}

fn parse_verdict(text: &str) -> Option<ErrorKind> {
    let line = text
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.to_ascii_uppercase().starts_with("ANSWER:"))?;
    let rest = line["ANSWER:".len()..].trim().to_ascii_lowercase();
    match rest.as_str() {
        "timing" => Some(ErrorKind::Timing),
        "logic" => Some(ErrorKind::Logic),
        _ => {
            log::warn!("unparsable classification verdict `{}`", line);
            None
        }
    }
}
