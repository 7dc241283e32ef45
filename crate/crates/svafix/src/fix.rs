//! Stage 3: repair. Timing errors get a validated delay search; logic
//! errors get bidirectional anchor reconstruction over the dependence
//! graph. Model-proposed candidates, when a backend is present, are
//! validated exactly like deterministic ones and never trusted blind.
//!
//! Validation means: the candidate passes and is covered on every supplied
//! counterexample trace. A fix that merely goes vacuous is not a fix.

use crate::cdfg::{cone_of_influence, guard_conditions, DesignCdfg, Direction, Timing,
                  DEFAULT_SEQ_PATH_CAP};
use crate::classify::{waveform_table, ErrorKind};
use crate::expr::Expr;
use crate::hdl::render::render_expr;
use crate::hdl::{parse_assertion, render_assertion, ImplicationKind, SvaAssertion};
use crate::llm::{LlmClient, Prompt};
use crate::retrieval::RtlChunk;
use crate::trace::{evaluate_assertion, shift_consequent, CounterexampleTrace, EvalResult,
                   TraceError};
use std::collections::BTreeSet;
use thiserror::Error;

pub const DEFAULT_CANDIDATE_CAP: usize = 16;

#[derive(Debug, Error)]
pub enum FixError {
    #[error("assertion already passes every supplied trace; nothing to fix")]
    NoFailure,
    #[error("no driver of any consequent signal found in the design")]
    NoDriversFound,
    #[error("antecedent implies no guarded assignment within the depth cap")]
    NoForwardTargets,
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    ShiftSearch,
    BackwardReconstruction,
    ForwardReconstruction,
    Llm,
}

impl Origin {
    pub fn label(&self) -> &'static str {
        match self {
            Origin::ShiftSearch => "shift-search",
            Origin::BackwardReconstruction => "backward-reconstruction",
            Origin::ForwardReconstruction => "forward-reconstruction",
            Origin::Llm => "llm",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FixCandidate {
    pub assertion: SvaAssertion,
    pub origin: Origin,
    /// Which side changed and how, e.g. `antecedent: a == 1 -> a == 2`.
    pub edit: String,
    /// Set on degenerate candidates emitted without real evidence.
    pub low_confidence: bool,
}

/// Which sides of the implication differ between two assertions. The
/// delay/implication shape counts as the consequent side.
pub fn edit_sides(original: &SvaAssertion, candidate: &SvaAssertion) -> (bool, bool) {
    let ant = original.antecedent != candidate.antecedent;
    let cons = original.consequent != candidate.consequent
        || original.delays != candidate.delays
        || original.implication != candidate.implication;
    (ant, cons)
}

#[derive(Debug, Clone)]
pub struct ValidationRecord {
    pub candidate: FixCandidate,
    pub per_trace: Vec<EvalResult>,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixStatus {
    Fixed,
    Unfixed,
}

#[derive(Debug, Clone)]
pub struct FixOutcome {
    pub classification: ErrorKind,
    pub trials: Vec<ValidationRecord>,
    pub accepted: Option<FixCandidate>,
    pub status: FixStatus,
}

fn render_delays(delays: &[u32], implication: ImplicationKind) -> String {
    let mut s = String::new();
    s.push_str(implication.symbol());
    for d in delays {
        s.push_str(&format!(" ##{}", d));
    }
    s
}

/// Passes-and-covered check across every trace. An evaluation error (e.g.
/// the candidate references a signal the trace never recorded) rejects the
/// candidate rather than aborting the run.
fn validate(a: &SvaAssertion, traces: &[CounterexampleTrace]) -> (Vec<EvalResult>, bool) {
    let mut per = Vec::new();
    let mut ok = true;
    for t in traces {
        match evaluate_assertion(a, t) {
            Ok(r) => {
                ok &= r.passes_and_covered();
                per.push(r);
            }
            Err(e) => {
                log::warn!("candidate `{}` not evaluable: {}", render_assertion(a), e);
                return (per, false);
            }
        }
    }
    (per, ok && !traces.is_empty())
}

/// Runs candidates in order, accepting the first that validates. Always
/// records every trial up to and including the accepted one.
fn run_candidates(
    classification: ErrorKind,
    candidates: Vec<FixCandidate>,
    traces: &[CounterexampleTrace],
    cap: usize,
) -> FixOutcome {
    let mut trials = Vec::new();
    let mut accepted = None;
    for cand in candidates.into_iter().take(cap) {
        let (per_trace, ok) = validate(&cand.assertion, traces);
        trials.push(ValidationRecord {
            candidate: cand.clone(),
            per_trace,
            accepted: ok,
        });
        if ok {
            accepted = Some(cand);
            break;
        }
    }
    FixOutcome {
        classification,
        status: if accepted.is_some() {
            FixStatus::Fixed
        } else {
            FixStatus::Unfixed
        },
        trials,
        accepted,
    }
}

/// Diagnosis lines fed to the repair prompt, one per error class.
pub const TIMING_HINT: &str =
    "timing error: the checked relation is believed right but misaligned by some cycles";
pub const LOGIC_HINT: &str =
    "logic error: a condition, signal, or value in the assertion is wrong";

pub fn repair_prompt(
    a: &SvaAssertion,
    traces: &[CounterexampleTrace],
    chunks: &[RtlChunk],
    hint: &str,
) -> Prompt {
    let mut keep: BTreeSet<String> = a.antecedent.signals();
    keep.extend(a.consequent.signals());
    for c in chunks {
        keep.extend(c.defined.iter().cloned());
        keep.extend(c.used.iter().cloned());
    }
    let mut user = String::new();
    user.push_str("Failing assertion:\n");
    user.push_str(&render_assertion(a));
    user.push_str(&format!("\n\nDiagnosis: {}\n", hint));
    user.push_str("\nCounterexample waveform (values sampled at each rising clock edge):\n");
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
        "\nPropose the corrected assertion. Keep the clocking event and use only \
         signals visible above. End with exactly one line:\nFIXED: <assertion>\n",
    );
    Prompt::new(
        "You repair failing SystemVerilog assertions. The RTL is golden; only \
         the assertion may change.",
        user,
    )
}

/// One model proposal, parsed from a `FIXED:` line; unparsable output is
/// dropped with a warning.
fn llm_candidates(
    client: &dyn LlmClient,
    a: &SvaAssertion,
    traces: &[CounterexampleTrace],
    chunks: &[RtlChunk],
    hint: &str,
) -> Vec<FixCandidate> {
    let prompt = repair_prompt(a, traces, chunks, hint);
    let text = match client.complete(&prompt) {
        Ok(r) => r.text,
        Err(e) => {
            log::warn!("repair backend failed ({}); continuing without proposals", e);
            return Vec::new();
        }
    };
    let Some(line) = text
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with("FIXED:"))
    else {
        log::warn!("repair response has no FIXED: line");
        return Vec::new();
    };
    match parse_assertion(line["FIXED:".len()..].trim()) {
        Ok(fixed) => {
            let edit = format!(
                "model-proposed: {} -> {}",
                render_assertion(a),
                render_assertion(&fixed)
            );
            vec![FixCandidate {
                assertion: fixed,
                origin: Origin::Llm,
                edit,
                low_confidence: false,
            }]
        }
        Err(e) => {
            log::warn!("model proposal does not parse ({}); dropped", e);
            Vec::new()
        }
    }
}

/// Timing repair: model proposal first (validated), then exhaustive shift
/// search over |k| <= bound, positive before negative, so the accepted fix
/// has minimal |k| among passing shifts.
pub fn fix_timing(
    a: &SvaAssertion,
    traces: &[CounterexampleTrace],
    chunks: &[RtlChunk],
    llm: Option<&dyn LlmClient>,
    shift_bound: u32,
    cap: usize,
) -> Result<FixOutcome, FixError> {
    let mut any_failure = false;
    for t in traces {
        if !evaluate_assertion(a, t)?.passed {
            any_failure = true;
            break;
        }
    }
    if !any_failure {
        return Err(FixError::NoFailure);
    }

    let mut candidates = Vec::new();
    if let Some(client) = llm {
        candidates.extend(llm_candidates(client, a, traces, chunks, TIMING_HINT));
    }
    let old = render_delays(&a.delays, a.implication);
    for mag in 1..=shift_bound as i32 {
        for k in [mag, -mag] {
            let shifted = shift_consequent(a, k)?;
            let edit = format!(
                "delays: {} -> {} (shift {:+})",
                old,
                render_delays(&shifted.delays, shifted.implication),
                k
            );
            candidates.push(FixCandidate {
                assertion: shifted,
                origin: Origin::ShiftSearch,
                edit,
                low_confidence: false,
            });
        }
    }
    Ok(run_candidates(ErrorKind::Timing, candidates, traces, cap))
}

/// Rewrites every signal in an RTL right-hand side as `$past(sig, d)`,
/// producing the assertion-side view of a value captured d cycles ago.
fn wrap_past(e: &Expr, d: u32) -> Expr {
    if d == 0 {
        return e.clone();
    }
    match e {
        Expr::Ident(n) => Expr::ident(n.clone()).past(d),
        Expr::Const(c) => Expr::Const(*c),
        Expr::Unary(op, x) => Expr::Unary(*op, Box::new(wrap_past(x, d))),
        Expr::Binary(op, x, y) => {
            Expr::Binary(*op, Box::new(wrap_past(x, d)), Box::new(wrap_past(y, d)))
        }
        Expr::Ternary(c, x, y) => Expr::Ternary(
            Box::new(wrap_past(c, d)),
            Box::new(wrap_past(x, d)),
            Box::new(wrap_past(y, d)),
        ),
        Expr::Concat(parts) => Expr::Concat(parts.iter().map(|p| wrap_past(p, d)).collect()),
        Expr::Index(x, i) => Expr::Index(Box::new(wrap_past(x, d)), *i),
        Expr::Slice(x, h, l) => Expr::Slice(Box::new(wrap_past(x, d)), *h, *l),
        Expr::Past(x, k) => Expr::Past(x.clone(), k + d),
        Expr::Sampled(f, x) => Expr::Sampled(*f, Box::new(wrap_past(x, d))),
    }
}

/// Conjuncts rendered for set comparison; equality atoms are normalized
/// through Const so `3'b100` and `3'd4` agree.
fn conjunct_keys(e: &Expr) -> BTreeSet<String> {
    e.conjuncts().into_iter().map(render_expr).collect()
}

fn guard_signals(guard: &[Expr]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for g in guard {
        out.extend(g.signals());
    }
    out
}

/// When retrieval produced chunks, reconstruction only considers targets
/// those chunks define; an empty slice means no restriction.
fn chunk_defined(chunks: &[RtlChunk]) -> Option<BTreeSet<&str>> {
    if chunks.is_empty() {
        return None;
    }
    Some(
        chunks
            .iter()
            .flat_map(|c| c.defined.iter().map(|s| s.as_str()))
            .collect(),
    )
}

/// Backward direction: the consequent is trusted, the antecedent is
/// rebuilt from the guards under which the RTL actually produces the
/// consequent's expected value. Only guards whose register depth agrees
/// with the assertion's delay budget qualify, so the candidate differs
/// from the original on the antecedent side alone.
pub fn backward_reconstruct(
    a: &SvaAssertion,
    g: &DesignCdfg,
    chunks: &[RtlChunk],
) -> Result<Vec<FixCandidate>, FixError> {
    let total_delay = a.total_delay();
    let cons_signals = a.consequent.signals();
    let allowed = chunk_defined(chunks);
    let old_ant = render_expr(&a.antecedent);
    let ant_signals = a.antecedent.signals();
    let ant_keys = conjunct_keys(&a.antecedent);

    let mut proposals: Vec<(usize, usize, String, FixCandidate)> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut any_driver = false;
    let mut unguarded_only = true;

    for target in &cons_signals {
        if let Some(allowed) = &allowed {
            if !allowed.contains(target.as_str()) {
                continue;
            }
        }
        let expected: BTreeSet<&str> = cons_signals
            .iter()
            .filter(|s| *s != target)
            .map(|s| s.as_str())
            .collect();
        let assignments = match guard_conditions(g, target) {
            Ok(list) if !list.is_empty() => list,
            _ => continue,
        };
        any_driver = true;
        for asg in &assignments {
            if !expected.is_empty()
                && !asg.rhs.signals().iter().any(|s| expected.contains(s.as_str()))
            {
                continue;
            }
            if asg.guard.is_empty() {
                continue; // nothing to propose; degeneracy handled below
            }
            unguarded_only = false;
            let depth = match asg.timing {
                Timing::Sequential => 1,
                Timing::Combinational => 0,
            };
            if depth != total_delay {
                continue; // guard implies a different alignment; not this mode's edit
            }
            let antecedent = Expr::conjoin(asg.guard.clone());
            let key = render_expr(&antecedent);
            if key == old_ant || !seen.insert(key.clone()) {
                continue;
            }
            let mut fixed = a.clone();
            fixed.antecedent = antecedent.clone();
            let overlap = guard_signals(&asg.guard)
                .intersection(&ant_signals)
                .count();
            let cand_keys = conjunct_keys(&antecedent);
            let edit_size = ant_keys.symmetric_difference(&cand_keys).count();
            proposals.push((
                overlap,
                edit_size,
                key.clone(),
                FixCandidate {
                    assertion: fixed,
                    origin: Origin::BackwardReconstruction,
                    edit: format!("antecedent: {} -> {}", old_ant, key),
                    low_confidence: false,
                },
            ));
        }
    }

    if !any_driver {
        return Err(FixError::NoDriversFound);
    }
    if proposals.is_empty() {
        if unguarded_only {
            // Drivers exist but carry no guards: nothing better to offer
            // than the original antecedent.
            return Ok(vec![FixCandidate {
                assertion: a.clone(),
                origin: Origin::BackwardReconstruction,
                edit: "no guard found on any driver; antecedent unchanged".to_string(),
                low_confidence: true,
            }]);
        }
        return Ok(Vec::new());
    }
    // Rank: most antecedent-signal overlap, then smallest edit, then text.
    proposals.sort_by(|x, y| {
        y.0.cmp(&x.0)
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });
    Ok(proposals.into_iter().map(|(_, _, _, c)| c).collect())
}

/// Forward direction: the antecedent is trusted; its effects are traced
/// forward to guarded assignments whose guard the antecedent syntactically
/// implies. Each such assignment contributes a consequent candidate
/// `target == rhs'` with the right-hand side pushed back `d` cycles.
pub fn forward_reconstruct(
    a: &SvaAssertion,
    g: &DesignCdfg,
    chunks: &[RtlChunk],
) -> Result<Vec<FixCandidate>, FixError> {
    let ant_keys = conjunct_keys(&a.antecedent);
    let ant_atoms: Vec<(String, crate::expr::Const)> = a
        .antecedent
        .conjuncts()
        .iter()
        .filter_map(|c| c.as_eq_atom())
        .map(|(s, v)| (s.to_string(), v))
        .collect();
    let implied = |guard: &[Expr]| -> bool {
        if guard.is_empty() {
            return false;
        }
        guard.iter().flat_map(|p| p.conjuncts()).all(|conj| {
            if let Some((sig, val)) = conj.as_eq_atom() {
                if ant_atoms.iter().any(|(s, v)| s == sig && v.same_value(&val)) {
                    return true;
                }
            }
            ant_keys.contains(&render_expr(conj))
        })
    };

    let seeds: BTreeSet<String> = a
        .antecedent
        .signals()
        .into_iter()
        .filter(|s| g.node_id(s).is_some())
        .collect();
    if seeds.is_empty() {
        return Err(FixError::NoForwardTargets);
    }
    let reach = cone_of_influence(g, &seeds, Direction::Forward, Some(DEFAULT_SEQ_PATH_CAP))
        .expect("seeds checked");
    let allowed = chunk_defined(chunks);
    let cons_signals = a.consequent.signals();
    let old_cons = format!(
        "{} {}",
        render_delays(&a.delays, a.implication),
        render_expr(&a.consequent)
    );

    let mut proposals: Vec<(usize, String, FixCandidate)> = Vec::new();
    let mut seen = BTreeSet::new();
    for target in reach.keys() {
        if seeds.contains(target) {
            continue;
        }
        if let Some(allowed) = &allowed {
            if !allowed.contains(target.as_str()) {
                continue;
            }
        }
        let Ok(assignments) = guard_conditions(g, target) else { continue };
        for asg in &assignments {
            if !implied(&asg.guard) {
                continue;
            }
            let depth = match asg.timing {
                Timing::Sequential => 1,
                Timing::Combinational => 0,
            };
            let consequent = Expr::ident(target.clone()).eq(wrap_past(&asg.rhs, depth));
            let mut fixed = a.clone();
            fixed.implication = ImplicationKind::Overlapped;
            fixed.delays = if depth == 0 { vec![] } else { vec![depth] };
            fixed.consequent = consequent.clone();
            let key = format!(
                "{} {}",
                render_delays(&fixed.delays, fixed.implication),
                render_expr(&consequent)
            );
            if key == old_cons || !seen.insert(key.clone()) {
                continue;
            }
            let overlap = consequent.signals().intersection(&cons_signals).count();
            proposals.push((
                overlap,
                key.clone(),
                FixCandidate {
                    assertion: fixed,
                    origin: Origin::ForwardReconstruction,
                    edit: format!("consequent: {} -> {}", old_cons, key),
                    low_confidence: false,
                },
            ));
        }
    }
    if proposals.is_empty() {
        return Err(FixError::NoForwardTargets);
    }
    proposals.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
    Ok(proposals.into_iter().map(|(_, _, c)| c).collect())
}

fn interleave(b: Vec<FixCandidate>, f: Vec<FixCandidate>) -> Vec<FixCandidate> {
    let mut out = Vec::with_capacity(b.len() + f.len());
    let mut bi = b.into_iter();
    let mut fi = f.into_iter();
    loop {
        match (bi.next(), fi.next()) {
            (None, None) => break,
            (x, y) => {
                out.extend(x);
                out.extend(y);
            }
        }
    }
    out
}

/// Logic repair by bidirectional anchor reconstruction: backward and
/// forward candidates interleaved (backward first), then model proposals,
/// all trace-validated in order.
pub fn fix_logic_bar(
    a: &SvaAssertion,
    g: &DesignCdfg,
    traces: &[CounterexampleTrace],
    chunks: &[RtlChunk],
    llm: Option<&dyn LlmClient>,
    cap: usize,
) -> FixOutcome {
    let backward = match backward_reconstruct(a, g, chunks) {
        Ok(c) => c,
        Err(e) => {
            log::info!("backward reconstruction: {}", e);
            Vec::new()
        }
    };
    let forward = match forward_reconstruct(a, g, chunks) {
        Ok(c) => c,
        Err(e) => {
            log::info!("forward reconstruction: {}", e);
            Vec::new()
        }
    };
    let mut candidates = interleave(backward, forward);
    if let Some(client) = llm {
        candidates.extend(llm_candidates(client, a, traces, chunks, LOGIC_HINT));
    }
    run_candidates(ErrorKind::Logic, candidates, traces, cap)
}
