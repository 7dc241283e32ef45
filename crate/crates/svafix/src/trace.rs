//! Counterexample traces: VCD parsing and writing, clock-edge sampling,
//! and bounded assertion evaluation over sampled values.
//!
//! Values are 4-state: a (bits, xmask) pair per sample, where xmask marks
//! unknown bit positions. Evaluation is pessimistic — an unknown consequent
//! fails the attempt — so a rewrite can never pass by hiding behind X.

use crate::expr::{BinaryOp, Const, Expr, SampledFn, UnaryOp};
use crate::hdl::sva::SvaAssertion;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("VCD syntax error at line {line}: {message}")]
    VcdSyntax { line: usize, message: String },
    #[error("clock `{name}` not found in VCD")]
    MissingClock { name: String },
    #[error("signal `{name}` referenced by the assertion is not in the trace")]
    SignalMissing { name: String },
    #[error("width mismatch: `{context}` compares a {found}-bit constant against {expected} bits")]
    WidthMismatch {
        context: String,
        expected: u32,
        found: u32,
    },
    #[error("shift of {shift} cannot be expressed for this assertion")]
    UnrepresentableShift { shift: i32 },
}

fn width_mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// One 4-state sampled value. Invariant: `bits` and `xmask` fit the width
/// and `bits & xmask == 0` (unknown positions read as zero in `bits`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Val {
    pub width: u32,
    pub bits: u64,
    pub xmask: u64,
}

impl Val {
    pub fn new(width: u32, bits: u64, xmask: u64) -> Val {
        let m = width_mask(width);
        let xmask = xmask & m;
        Val {
            width,
            bits: bits & m & !xmask,
            xmask,
        }
    }

    pub fn known(width: u32, bits: u64) -> Val {
        Val::new(width, bits, 0)
    }

    pub fn all_x(width: u32) -> Val {
        Val::new(width, 0, width_mask(width))
    }

    pub fn is_fully_known(&self) -> bool {
        self.xmask == 0
    }

    /// Logical truth of the value: true if any bit is a known 1, false if
    /// every bit is a known 0, unknown otherwise.
    pub fn truth(&self) -> Option<bool> {
        if self.bits != 0 {
            Some(true)
        } else if self.xmask != 0 {
            None
        } else {
            Some(false)
        }
    }

    fn extend(&self, width: u32) -> Val {
        // values are width-masked, so zero extension is implicit
        Val {
            width,
            bits: self.bits,
            xmask: self.xmask,
        }
    }

    fn lsb(&self) -> Option<bool> {
        if self.xmask & 1 != 0 {
            None
        } else {
            Some(self.bits & 1 != 0)
        }
    }
}

fn from_truth(t: Option<bool>) -> Val {
    match t {
        Some(true) => Val::known(1, 1),
        Some(false) => Val::known(1, 0),
        None => Val::all_x(1),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalTrace {
    pub width: u32,
    samples: Vec<Val>,
}

impl SignalTrace {
    pub fn value(&self, cycle: usize) -> Val {
        self.samples[cycle]
    }
}

/// A clock-sampled waveform: one value per signal per rising clock edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterexampleTrace {
    pub clock: String,
    len: usize,
    signals: BTreeMap<String, SignalTrace>,
    /// VCD identifier code → signal name, kept for diagnostics.
    pub id_map: BTreeMap<String, String>,
}

impl CounterexampleTrace {
    pub fn new(clock: &str, len: usize) -> CounterexampleTrace {
        CounterexampleTrace {
            clock: clock.to_string(),
            len,
            signals: BTreeMap::new(),
            id_map: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn signal(&self, name: &str) -> Option<&SignalTrace> {
        self.signals.get(name)
    }

    pub fn signal_names(&self) -> impl Iterator<Item = &str> {
        self.signals.keys().map(|s| s.as_str())
    }

    /// Adds a fully known value sequence. Panics if the length disagrees
    /// with the trace length; trace construction is programmer-controlled.
    pub fn add_signal(&mut self, name: &str, width: u32, values: &[u64]) {
        assert_eq!(values.len(), self.len, "signal `{}` length", name);
        let samples = values.iter().map(|&v| Val::known(width, v)).collect();
        self.signals
            .insert(name.to_string(), SignalTrace { width, samples });
    }

    pub fn add_signal_vals(&mut self, name: &str, width: u32, values: &[Val]) {
        assert_eq!(values.len(), self.len, "signal `{}` length", name);
        let samples = values
            .iter()
            .map(|v| Val::new(width, v.bits, v.xmask))
            .collect();
        self.signals
            .insert(name.to_string(), SignalTrace { width, samples });
    }
}

// ---- VCD parsing ----

/// Parses a VCD file and samples every declared variable at each rising
/// edge of `clock`. Changes at a timestamp are applied before the edge at
/// that timestamp is evaluated, so same-timestamp updates are visible.
pub fn parse_vcd(text: &str, clock: &str) -> Result<CounterexampleTrace, TraceError> {
    let mut vars: Vec<(String, u32)> = Vec::new();
    let mut by_id: BTreeMap<String, usize> = BTreeMap::new();
    let mut id_map: BTreeMap<String, String> = BTreeMap::new();
    let mut scope: Vec<String> = Vec::new();

    let mut tokens = Tokens::new(text);
    // header: definitions until $enddefinitions
    loop {
        let t = match tokens.next() {
            Some(t) => t,
            None => {
                return Err(tokens.err("unexpected end of file in VCD header"));
            }
        };
        match t {
            "$enddefinitions" => {
                tokens.skip_to_end()?;
                break;
            }
            "$scope" => {
                tokens.next(); // kind
                if let Some(name) = tokens.next() {
                    scope.push(name.to_string());
                }
                tokens.skip_to_end()?;
            }
            "$upscope" => {
                scope.pop();
                tokens.skip_to_end()?;
            }
            "$var" => {
                tokens.next(); // var type
                let width: u32 = tokens
                    .next()
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| tokens.err("bad $var width"))?;
                let id = tokens
                    .next()
                    .ok_or_else(|| tokens.err("missing $var id"))?
                    .to_string();
                let name = tokens
                    .next()
                    .ok_or_else(|| tokens.err("missing $var name"))?
                    .to_string();
                tokens.skip_to_end()?;
                if width == 0 || width > 64 {
                    return Err(tokens.err(format!("unsupported width {} for `{}`", width, name)));
                }
                if by_id.contains_key(&id) {
                    continue;
                }
                let taken = vars.iter().any(|(n, _)| *n == name);
                let reg_name = if taken {
                    let qualified = if scope.is_empty() {
                        name.clone()
                    } else {
                        format!("{}.{}", scope.join("."), name)
                    };
                    log::warn!(
                        "duplicate VCD name `{}`; registering as `{}`",
                        name,
                        qualified
                    );
                    qualified
                } else {
                    name
                };
                by_id.insert(id.clone(), vars.len());
                id_map.insert(id, reg_name.clone());
                vars.push((reg_name, width));
            }
            _ if t.starts_with('$') => {
                tokens.skip_to_end()?;
            }
            _ => return Err(tokens.err(format!("unexpected token `{}` in header", t))),
        }
    }

    let clock_idx = vars
        .iter()
        .position(|(n, _)| n == clock)
        .ok_or_else(|| TraceError::MissingClock {
            name: clock.to_string(),
        })?;

    let mut cur: Vec<Val> = vars.iter().map(|&(_, w)| Val::all_x(w)).collect();
    let mut sampled: Vec<Vec<Val>> = vec![Vec::new(); vars.len()];
    let mut clk_prev: Option<bool> = cur[clock_idx].lsb();
    let mut in_time_block = false;

    let finalize_block = |cur: &Vec<Val>, clk_prev: &mut Option<bool>, sampled: &mut Vec<Vec<Val>>| {
        let clk_now = cur[clock_idx].lsb();
        if *clk_prev == Some(false) && clk_now == Some(true) {
            for (i, v) in cur.iter().enumerate() {
                sampled[i].push(*v);
            }
        }
        *clk_prev = clk_now;
    };

    while let Some(t) = tokens.next() {
        if let Some(rest) = t.strip_prefix('#') {
            rest.parse::<u64>()
                .map_err(|_| tokens.err(format!("bad timestamp `{}`", t)))?;
            if in_time_block {
                finalize_block(&cur, &mut clk_prev, &mut sampled);
            }
            in_time_block = true;
            continue;
        }
        match t.chars().next() {
            Some('$') => {
                // $dumpvars / $dumpon / ... sections wrap plain value changes
                if !matches!(t, "$dumpvars" | "$dumpall" | "$dumpon" | "$dumpoff" | "$end") {
                    tokens.skip_to_end()?;
                }
            }
            Some('b') | Some('B') => {
                let digits = &t[1..];
                let id = tokens
                    .next()
                    .ok_or_else(|| tokens.err("missing id after vector value"))?;
                if let Some(&vi) = by_id.get(id) {
                    cur[vi] = parse_vector(digits, vars[vi].1)
                        .map_err(|m| tokens.err(m))?;
                }
            }
            Some('r') | Some('R') => {
                tokens.next(); // real value change: id consumed, value ignored
            }
            Some(c @ ('0' | '1' | 'x' | 'X' | 'z' | 'Z')) => {
                let id = &t[1..];
                if id.is_empty() {
                    return Err(tokens.err(format!("missing id in scalar change `{}`", t)));
                }
                if let Some(&vi) = by_id.get(id) {
                    cur[vi] = match c {
                        '0' => Val::known(vars[vi].1, 0),
                        '1' => Val::known(vars[vi].1, 1),
                        _ => Val::all_x(vars[vi].1),
                    };
                }
            }
            _ => return Err(tokens.err(format!("unexpected token `{}`", t))),
        }
    }
    if in_time_block {
        finalize_block(&cur, &mut clk_prev, &mut sampled);
    }

    let len = sampled[clock_idx].len();
    let mut trace = CounterexampleTrace::new(clock, len);
    trace.id_map = id_map;
    for (i, (name, width)) in vars.iter().enumerate() {
        if i == clock_idx {
            continue;
        }
        trace.signals.insert(
            name.clone(),
            SignalTrace {
                width: *width,
                samples: std::mem::take(&mut sampled[i]),
            },
        );
    }
    Ok(trace)
}

fn parse_vector(digits: &str, width: u32) -> Result<Val, String> {
    if digits.is_empty() {
        return Err("empty vector value".to_string());
    }
    let mut bits = 0u64;
    let mut xmask = 0u64;
    for c in digits.chars() {
        bits <<= 1;
        xmask <<= 1;
        match c {
            '0' => {}
            '1' => bits |= 1,
            'x' | 'X' | 'z' | 'Z' => xmask |= 1,
            _ => return Err(format!("bad vector digit `{}`", c)),
        }
    }
    // left-extend: x/z extends with x, 0/1 extends with 0
    let given = digits.len() as u32;
    if given < width && matches!(digits.chars().next(), Some('x' | 'X' | 'z' | 'Z')) {
        for i in given..width.min(64) {
            xmask |= 1u64 << i;
        }
    }
    Ok(Val::new(width, bits, xmask))
}

struct Tokens<'a> {
    rest: &'a str,
    line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Tokens<'a> {
        Tokens { rest: text, line: 1 }
    }

    fn next(&mut self) -> Option<&'a str> {
        loop {
            let mut it = self.rest.char_indices();
            let mut start = None;
            for (i, c) in it.by_ref() {
                if c == '\n' {
                    self.line += 1;
                } else if !c.is_whitespace() {
                    start = Some(i);
                    break;
                }
            }
            let start = start?;
            let tail = &self.rest[start..];
            let end = tail
                .char_indices()
                .find(|&(_, c)| c.is_whitespace())
                .map(|(i, _)| i)
                .unwrap_or(tail.len());
            self.rest = &tail[end..];
            return Some(&tail[..end]);
        }
    }

    fn skip_to_end(&mut self) -> Result<(), TraceError> {
        loop {
            match self.next() {
                Some("$end") => return Ok(()),
                Some(_) => {}
                None => return Err(self.err("missing $end")),
            }
        }
    }

    fn err(&self, message: impl Into<String>) -> TraceError {
        TraceError::VcdSyntax {
            line: self.line,
            message: message.into(),
        }
    }
}

// ---- VCD writing ----

fn vcd_id(i: usize) -> String {
    // printable identifier codes, base 94 starting at '!'
    let mut n = i;
    let mut out = String::new();
    loop {
        out.push((33 + (n % 94)) as u8 as char);
        n /= 94;
        if n == 0 {
            break;
        }
    }
    out
}

fn vcd_value(v: Val, id: &str) -> String {
    if v.width == 1 {
        let c = if v.xmask & 1 != 0 {
            'x'
        } else if v.bits & 1 != 0 {
            '1'
        } else {
            '0'
        };
        format!("{}{}", c, id)
    } else {
        let mut s = String::from("b");
        for bit in (0..v.width).rev() {
            if v.xmask >> bit & 1 != 0 {
                s.push('x');
            } else if v.bits >> bit & 1 != 0 {
                s.push('1');
            } else {
                s.push('0');
            }
        }
        format!("{} {}", s, id)
    }
}

/// Serializes a sampled trace back to VCD. Cycle `i` values change at the
/// rising clock edge at time `10*i + 5`, which the same-timestamp rule in
/// `parse_vcd` samples as cycle `i`.
pub fn write_vcd(t: &CounterexampleTrace) -> String {
    let mut out = String::new();
    out.push_str("$timescale 1ns $end\n$scope module top $end\n");
    let clk_id = vcd_id(0);
    out.push_str(&format!("$var wire 1 {} {} $end\n", clk_id, t.clock));
    let mut ids = Vec::new();
    for (i, (name, sig)) in t.signals.iter().enumerate() {
        let id = vcd_id(i + 1);
        out.push_str(&format!("$var wire {} {} {} $end\n", sig.width, id, name));
        ids.push(id);
    }
    out.push_str("$upscope $end\n$enddefinitions $end\n");
    out.push_str(&format!("#0\n$dumpvars\n0{}\n$end\n", clk_id));
    let mut prev: Vec<Option<Val>> = vec![None; t.signals.len()];
    for cycle in 0..t.len {
        out.push_str(&format!("#{}\n1{}\n", 10 * cycle + 5, clk_id));
        for (i, sig) in t.signals.values().enumerate() {
            let v = sig.value(cycle);
            if prev[i] != Some(v) {
                out.push_str(&vcd_value(v, &ids[i]));
                out.push('\n');
            }
            prev[i] = Some(v);
        }
        out.push_str(&format!("#{}\n0{}\n", 10 * cycle + 10, clk_id));
    }
    out
}

// ---- evaluation ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Vacuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Attempt {
    pub start: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalResult {
    pub attempts: Vec<Attempt>,
    /// False iff some attempt fails.
    pub passed: bool,
    /// True iff some attempt was non-vacuous.
    pub covered: bool,
    pub first_failing_cycle: Option<usize>,
}

impl EvalResult {
    /// The bar a repaired assertion must clear: no failing attempt, and at
    /// least one attempt that actually exercised the consequent.
    pub fn passes_and_covered(&self) -> bool {
        self.passed && self.covered
    }
}

/// Evaluates `a` at every start cycle of `t` with bounded semantics: the
/// consequent of an attempt at cycle `i` is sampled at `i + Σdelays`
/// (+1 for `|=>`); attempts whose window passes the end of the trace are
/// vacuous; `disable iff` is sampled at the attempt's start cycle.
pub fn evaluate_assertion(
    a: &SvaAssertion,
    t: &CounterexampleTrace,
) -> Result<EvalResult, TraceError> {
    let mut referenced = a.antecedent.signals();
    referenced.extend(a.consequent.signals());
    if let Some(d) = &a.disable {
        referenced.extend(d.signals());
    }
    for name in &referenced {
        if t.signal(name).is_none() {
            return Err(TraceError::SignalMissing { name: name.clone() });
        }
    }
    check_widths(&a.antecedent, t)?;
    check_widths(&a.consequent, t)?;
    if let Some(d) = &a.disable {
        check_widths(d, t)?;
    }

    let window = a.total_delay() as usize;
    let n = t.len();
    let mut attempts = Vec::with_capacity(n);
    let mut covered = false;
    let mut first_failing = None;
    for i in 0..n {
        let verdict = (|| {
            if let Some(d) = &a.disable {
                if eval_expr(d, t, i).truth() == Some(true) {
                    return Verdict::Vacuous;
                }
            }
            match eval_expr(&a.antecedent, t, i).truth() {
                Some(true) => {}
                _ => return Verdict::Vacuous,
            }
            let j = i + window;
            if j >= n {
                return Verdict::Vacuous;
            }
            match eval_expr(&a.consequent, t, j).truth() {
                Some(true) => Verdict::Pass,
                // unknown is pessimistically a failure
                _ => Verdict::Fail,
            }
        })();
        if verdict != Verdict::Vacuous {
            covered = true;
        }
        if verdict == Verdict::Fail && first_failing.is_none() {
            first_failing = Some(i);
        }
        attempts.push(Attempt { start: i, verdict });
    }
    Ok(EvalResult {
        passed: first_failing.is_none(),
        covered,
        first_failing_cycle: first_failing,
        attempts,
    })
}

fn check_widths(e: &Expr, t: &CounterexampleTrace) -> Result<(), TraceError> {
    if let Expr::Binary(op, a, b) = e {
        if matches!(op, BinaryOp::Eq | BinaryOp::Ne) {
            let pairs = [(a.as_ref(), b.as_ref()), (b.as_ref(), a.as_ref())];
            for (c, other) in pairs {
                if let Expr::Const(Const { width: Some(w), .. }) = c {
                    if let Some(sw) = static_width(other, t) {
                        if *w != sw {
                            return Err(TraceError::WidthMismatch {
                                context: crate::hdl::render::render_expr(e),
                                expected: sw,
                                found: *w,
                            });
                        }
                    }
                }
            }
        }
    }
    match e {
        Expr::Ident(_) | Expr::Const(_) => Ok(()),
        Expr::Unary(_, x) | Expr::Past(x, _) | Expr::Sampled(_, x) => check_widths(x, t),
        Expr::Index(x, _) | Expr::Slice(x, _, _) => check_widths(x, t),
        Expr::Binary(_, x, y) => {
            check_widths(x, t)?;
            check_widths(y, t)
        }
        Expr::Ternary(c, x, y) => {
            check_widths(c, t)?;
            check_widths(x, t)?;
            check_widths(y, t)
        }
        Expr::Concat(parts) => {
            for p in parts {
                check_widths(p, t)?;
            }
            Ok(())
        }
    }
}

fn static_width(e: &Expr, t: &CounterexampleTrace) -> Option<u32> {
    match e {
        Expr::Ident(n) => t.signal(n).map(|s| s.width),
        Expr::Const(c) => c.width,
        Expr::Unary(op, x) => match op {
            UnaryOp::LogicNot | UnaryOp::ReduceAnd | UnaryOp::ReduceOr | UnaryOp::ReduceXor => {
                Some(1)
            }
            UnaryOp::BitNot | UnaryOp::Neg => static_width(x, t),
        },
        Expr::Binary(op, a, b) => match op {
            BinaryOp::Eq
            | BinaryOp::Ne
            | BinaryOp::Lt
            | BinaryOp::Le
            | BinaryOp::Gt
            | BinaryOp::Ge
            | BinaryOp::LogicAnd
            | BinaryOp::LogicOr => Some(1),
            BinaryOp::Shl | BinaryOp::Shr => static_width(a, t),
            _ => match (static_width(a, t), static_width(b, t)) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (w, None) | (None, w) => w,
            },
        },
        Expr::Ternary(_, a, b) => match (static_width(a, t), static_width(b, t)) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (w, None) | (None, w) => w,
        },
        Expr::Concat(parts) => {
            let mut sum = 0;
            for p in parts {
                sum += static_width(p, t)?;
            }
            Some(sum)
        }
        Expr::Index(_, _) => Some(1),
        Expr::Slice(_, hi, lo) => Some(hi - lo + 1),
        Expr::Past(x, _) => static_width(x, t),
        Expr::Sampled(_, _) => Some(1),
    }
}

/// Evaluates an expression at a sampled cycle. Referenced signals must
/// exist (checked by the caller); `$past` beyond the trace start is X.
pub fn eval_expr(e: &Expr, t: &CounterexampleTrace, cycle: usize) -> Val {
    match e {
        Expr::Ident(n) => t.signal(n).expect("signal checked").value(cycle),
        Expr::Const(c) => Val::known(c.width.unwrap_or(64), c.value),
        Expr::Unary(op, x) => {
            let v = eval_expr(x, t, cycle);
            match op {
                UnaryOp::LogicNot => from_truth(v.truth().map(|b| !b)),
                UnaryOp::BitNot => Val::new(v.width, !v.bits, v.xmask),
                UnaryOp::Neg => {
                    if v.is_fully_known() {
                        Val::known(v.width, v.bits.wrapping_neg())
                    } else {
                        Val::all_x(v.width)
                    }
                }
                UnaryOp::ReduceAnd => {
                    let m = width_mask(v.width);
                    if v.bits | v.xmask != m {
                        Val::known(1, 0)
                    } else if v.xmask != 0 {
                        Val::all_x(1)
                    } else {
                        Val::known(1, 1)
                    }
                }
                UnaryOp::ReduceOr => from_truth(v.truth()),
                UnaryOp::ReduceXor => {
                    if v.xmask != 0 {
                        Val::all_x(1)
                    } else {
                        Val::known(1, (v.bits.count_ones() & 1) as u64)
                    }
                }
            }
        }
        Expr::Binary(op, a, b) => {
            let va = eval_expr(a, t, cycle);
            let vb = eval_expr(b, t, cycle);
            eval_binary(*op, va, vb)
        }
        Expr::Ternary(c, a, b) => {
            let vc = eval_expr(c, t, cycle);
            match vc.truth() {
                Some(true) => eval_expr(a, t, cycle),
                Some(false) => eval_expr(b, t, cycle),
                None => {
                    let va = eval_expr(a, t, cycle);
                    let vb = eval_expr(b, t, cycle);
                    let w = va.width.max(vb.width);
                    // bits where both arms agree and are known stay known
                    let agree = !va.xmask & !vb.xmask & !(va.bits ^ vb.bits);
                    Val::new(w, va.bits & agree, !agree)
                }
            }
        }
        Expr::Concat(parts) => {
            let mut bits = 0u64;
            let mut xmask = 0u64;
            let mut width = 0u32;
            for p in parts {
                let v = eval_expr(p, t, cycle);
                bits = (bits << v.width) | v.bits;
                xmask = (xmask << v.width) | v.xmask;
                width += v.width;
            }
            Val::new(width.min(64), bits, xmask)
        }
        Expr::Index(x, i) => {
            let v = eval_expr(x, t, cycle);
            if *i >= v.width {
                Val::all_x(1)
            } else {
                Val::new(1, v.bits >> i, v.xmask >> i)
            }
        }
        Expr::Slice(x, hi, lo) => {
            let v = eval_expr(x, t, cycle);
            let w = hi - lo + 1;
            Val::new(w, v.bits >> lo, v.xmask >> lo)
        }
        Expr::Past(x, k) => {
            let k = *k as usize;
            if cycle >= k {
                eval_expr(x, t, cycle - k)
            } else {
                Val::all_x(static_width(x, t).unwrap_or(1))
            }
        }
        Expr::Sampled(f, x) => {
            let now = eval_expr(x, t, cycle);
            let prev = if cycle >= 1 {
                eval_expr(x, t, cycle - 1)
            } else {
                Val::all_x(now.width)
            };
            match f {
                SampledFn::Rose => {
                    from_truth(and3(eq_bool(now.lsb(), true), eq_bool(prev.lsb(), false)))
                }
                SampledFn::Fell => {
                    from_truth(and3(eq_bool(now.lsb(), false), eq_bool(prev.lsb(), true)))
                }
                SampledFn::Stable => {
                    let w = now.width.max(prev.width);
                    from_truth(eq_vals(now.extend(w), prev.extend(w)))
                }
            }
        }
    }
}

fn eq_bool(v: Option<bool>, want: bool) -> Option<bool> {
    v.map(|b| b == want)
}

fn and3(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

fn or3(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(true), _) | (_, Some(true)) => Some(true),
        (Some(false), Some(false)) => Some(false),
        _ => None,
    }
}

/// 4-state equality over equal-width values.
fn eq_vals(a: Val, b: Val) -> Option<bool> {
    let known = !a.xmask & !b.xmask;
    if (a.bits ^ b.bits) & known != 0 {
        Some(false)
    } else if a.xmask | b.xmask != 0 {
        None
    } else {
        Some(true)
    }
}

fn eval_binary(op: BinaryOp, a: Val, b: Val) -> Val {
    let w = a.width.max(b.width);
    let (a, b) = (a.extend(w), b.extend(w));
    match op {
        BinaryOp::LogicAnd => from_truth(and3(a.truth(), b.truth())),
        BinaryOp::LogicOr => from_truth(or3(a.truth(), b.truth())),
        BinaryOp::Eq => from_truth(eq_vals(a, b)),
        BinaryOp::Ne => from_truth(eq_vals(a, b).map(|x| !x)),
        BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => {
            if a.is_fully_known() && b.is_fully_known() {
                let r = match op {
                    BinaryOp::Lt => a.bits < b.bits,
                    BinaryOp::Le => a.bits <= b.bits,
                    BinaryOp::Gt => a.bits > b.bits,
                    _ => a.bits >= b.bits,
                };
                from_truth(Some(r))
            } else {
                Val::all_x(1)
            }
        }
        BinaryOp::BitAnd => {
            let known1 = (a.bits & !a.xmask) & (b.bits & !b.xmask);
            let known0 = (!a.bits & !a.xmask) | (!b.bits & !b.xmask);
            Val::new(w, known1, !(known0 | known1))
        }
        BinaryOp::BitOr => {
            let known1 = (a.bits & !a.xmask) | (b.bits & !b.xmask);
            let known0 = (!a.bits & !a.xmask) & (!b.bits & !b.xmask);
            Val::new(w, known1, !(known0 | known1))
        }
        BinaryOp::BitXor => {
            let known = !a.xmask & !b.xmask;
            Val::new(w, (a.bits ^ b.bits) & known, !known)
        }
        BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul => {
            if a.is_fully_known() && b.is_fully_known() {
                let r = match op {
                    BinaryOp::Add => a.bits.wrapping_add(b.bits),
                    BinaryOp::Sub => a.bits.wrapping_sub(b.bits),
                    _ => a.bits.wrapping_mul(b.bits),
                };
                Val::known(w, r)
            } else {
                Val::all_x(w)
            }
        }
        BinaryOp::Shl | BinaryOp::Shr => {
            if !b.is_fully_known() {
                return Val::all_x(a.width);
            }
            let s = b.bits.min(64) as u32;
            if s >= 64 {
                return Val::known(a.width, 0);
            }
            match op {
                BinaryOp::Shl => Val::new(a.width, a.bits << s, a.xmask << s),
                _ => Val::new(a.width, a.bits >> s, a.xmask >> s),
            }
        }
    }
}

// ---- consequent shifting ----

/// Moves the consequent `k` cycles later (positive) or earlier (negative).
/// A positive shift extends the first delay. A negative shift drains the
/// first delay to zero; any remainder re-expresses the consequent `r`
/// cycles earlier by deepening every `$past` in it.
pub fn shift_consequent(a: &SvaAssertion, k: i32) -> Result<SvaAssertion, TraceError> {
    let mut out = a.clone();
    if k == 0 {
        return Ok(out);
    }
    if k > 0 {
        if out.delays.is_empty() {
            out.delays.push(k as u32);
        } else {
            out.delays[0] += k as u32;
        }
        return Ok(out);
    }
    let r = (-k) as u32;
    let first = out.delays.first().copied().unwrap_or(0);
    let absorbed = first.min(r);
    if absorbed > 0 {
        out.delays[0] = first - absorbed;
    }
    let shortfall = r - absorbed;
    if shortfall > 0 {
        out.consequent = out.consequent.deepen_past(shortfall);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::hdl::sva::parse_assertion;

    fn trace(clock: &str, len: usize) -> CounterexampleTrace {
        CounterexampleTrace::new(clock, len)
    }

    #[test]
    fn vcd_basic_sampling() {
        let vcd = "\
$timescale 1ns $end
$scope module top $end
$var wire 1 ! clk $end
$var wire 1 \" d $end
$upscope $end
$enddefinitions $end
#0
$dumpvars
0!
1\"
$end
#5
1!
#10
0!
#15
1!
#20
0!
#25
1!
#30
0!
#35
1!
#40
0!
#45
1!
";
        let t = parse_vcd(vcd, "clk").unwrap();
        assert_eq!(t.len(), 5);
        let d = t.signal("d").unwrap();
        for i in 0..5 {
            assert_eq!(d.value(i), Val::known(1, 1));
        }
    }

    #[test]
    fn vcd_missing_clock() {
        let vcd = "$var wire 1 ! c $end\n$enddefinitions $end\n#0\n";
        let err = parse_vcd(vcd, "clk").unwrap_err();
        assert!(matches!(err, TraceError::MissingClock { .. }));
    }

    #[test]
    fn vcd_x_value_sampled() {
        let vcd = "\
$var wire 1 ! clk $end
$var wire 4 \" v $end
$enddefinitions $end
#0
0!
b1x0z \"
#5
1!
";
        let t = parse_vcd(vcd, "clk").unwrap();
        let v = t.signal("v").unwrap().value(0);
        assert_eq!(v, Val::new(4, 0b1000, 0b0101));
    }

    #[test]
    fn vcd_same_timestamp_change_then_sample() {
        // d changes to 1 at the same timestamp as the rising edge
        let vcd = "\
$var wire 1 ! clk $end
$var wire 1 \" d $end
$enddefinitions $end
#0
0!
0\"
#5
1!
1\"
#10
0!
";
        let t = parse_vcd(vcd, "clk").unwrap();
        assert_eq!(t.signal("d").unwrap().value(0), Val::known(1, 1));
    }

    #[test]
    fn vcd_round_trip() {
        let mut t = trace("clk", 4);
        t.add_signal("adr", 3, &[0, 5, 4, 5]);
        t.add_signal("en", 1, &[1, 0, 1, 1]);
        t.add_signal_vals(
            "mix",
            8,
            &[
                Val::known(8, 0xAB),
                Val::new(8, 0x0F, 0xF0),
                Val::all_x(8),
                Val::known(8, 0),
            ],
        );
        let text = write_vcd(&t);
        let back = parse_vcd(&text, "clk").unwrap();
        assert_eq!(back.len(), t.len());
        for name in ["adr", "en", "mix"] {
            assert_eq!(back.signal(name), t.signal(name), "signal {}", name);
        }
    }

    fn paper_trace() -> CounterexampleTrace {
        let mut t = trace("clk", 6);
        t.add_signal("wb_adr_i", 3, &[0, 1, 2, 5, 0, 0]);
        t.add_signal("txr", 8, &[0, 0, 0, 0xAB, 0, 0]);
        t.add_signal("wb_dat_o", 8, &[0, 0, 0, 0, 0xAB, 0]);
        t
    }

    #[test]
    fn attempt_passes_on_hand_trace() {
        let a = parse_assertion("(wb_adr_i == 3'b101) |-> ##1 (wb_dat_o == $past(txr))").unwrap();
        let r = evaluate_assertion(&a, &paper_trace()).unwrap();
        assert!(r.passed && r.covered);
        assert_eq!(r.attempts[3].verdict, Verdict::Pass);
        assert_eq!(r.first_failing_cycle, None);
    }

    #[test]
    fn vacuous_when_antecedent_never_true() {
        let a = parse_assertion("(wb_adr_i == 3'b111) |-> ##1 (wb_dat_o == $past(txr))").unwrap();
        let r = evaluate_assertion(&a, &paper_trace()).unwrap();
        assert!(r.passed);
        assert!(!r.covered);
        assert!(r.attempts.iter().all(|at| at.verdict == Verdict::Vacuous));
    }

    #[test]
    fn constant_false_antecedent_is_vacuous_pass() {
        let a = parse_assertion("1'b0 |-> wb_ack").unwrap();
        let mut t = trace("clk", 4);
        t.add_signal("wb_ack", 1, &[0, 0, 0, 0]);
        let r = evaluate_assertion(&a, &t).unwrap();
        assert!(r.passed && !r.covered);
    }

    #[test]
    fn unknown_consequent_fails() {
        let a = parse_assertion("en |-> q").unwrap();
        let mut t = trace("clk", 2);
        t.add_signal("en", 1, &[1, 0]);
        t.add_signal_vals("q", 1, &[Val::all_x(1), Val::known(1, 0)]);
        let r = evaluate_assertion(&a, &t).unwrap();
        assert!(!r.passed);
        assert_eq!(r.first_failing_cycle, Some(0));
    }

    #[test]
    fn unknown_antecedent_is_vacuous() {
        let a = parse_assertion("en |-> q").unwrap();
        let mut t = trace("clk", 2);
        t.add_signal_vals("en", 1, &[Val::all_x(1), Val::known(1, 0)]);
        t.add_signal("q", 1, &[0, 0]);
        let r = evaluate_assertion(&a, &t).unwrap();
        assert!(r.passed && !r.covered);
    }

    #[test]
    fn window_truncation_is_vacuous() {
        let a = parse_assertion("en |=> ##2 q").unwrap();
        let mut t = trace("clk", 3);
        t.add_signal("en", 1, &[1, 1, 1]);
        t.add_signal("q", 1, &[0, 0, 0]);
        // every window ends past cycle 2, so nothing is ever checked
        let r = evaluate_assertion(&a, &t).unwrap();
        assert!(r.passed && !r.covered);
    }

    #[test]
    fn disable_iff_suppresses_attempt() {
        let a = parse_assertion("@(posedge clk) disable iff (rst) en |-> q").unwrap();
        let mut t = trace("clk", 3);
        t.add_signal("rst", 1, &[1, 0, 0]);
        t.add_signal("en", 1, &[1, 1, 0]);
        t.add_signal("q", 1, &[0, 1, 0]);
        let r = evaluate_assertion(&a, &t).unwrap();
        assert!(r.passed);
        assert_eq!(r.attempts[0].verdict, Verdict::Vacuous);
        assert_eq!(r.attempts[1].verdict, Verdict::Pass);
    }

    #[test]
    fn missing_signal_reported() {
        let a = parse_assertion("en |-> nope").unwrap();
        let mut t = trace("clk", 1);
        t.add_signal("en", 1, &[1]);
        let err = evaluate_assertion(&a, &t).unwrap_err();
        match err {
            TraceError::SignalMissing { name } => assert_eq!(name, "nope"),
            other => panic!("expected SignalMissing, got {:?}", other),
        }
    }

    #[test]
    fn width_mismatch_reported() {
        let a = parse_assertion("(adr == 4'b0101) |-> ack").unwrap();
        let mut t = trace("clk", 1);
        t.add_signal("adr", 3, &[5]);
        t.add_signal("ack", 1, &[1]);
        let err = evaluate_assertion(&a, &t).unwrap_err();
        match err {
            TraceError::WidthMismatch {
                expected, found, ..
            } => {
                assert_eq!(expected, 3);
                assert_eq!(found, 4);
            }
            other => panic!("expected WidthMismatch, got {:?}", other),
        }
    }

    #[test]
    fn rose_and_stable() {
        let a = parse_assertion("$rose(req) |-> $stable(cfg)").unwrap();
        let mut t = trace("clk", 4);
        t.add_signal("req", 1, &[0, 1, 1, 0]);
        t.add_signal("cfg", 4, &[7, 7, 3, 3]);
        let r = evaluate_assertion(&a, &t).unwrap();
        // rose fires only at cycle 1, where cfg held its value
        assert_eq!(r.attempts[1].verdict, Verdict::Pass);
        assert!(r.attempts.iter().filter(|x| x.verdict != Verdict::Vacuous).count() == 1);
        assert!(r.passed);
    }

    #[test]
    fn shift_positive_extends_first_delay() {
        let a = parse_assertion("a |-> ##1 b").unwrap();
        let s = shift_consequent(&a, 1).unwrap();
        assert_eq!(s.delays, vec![2]);
        let s = shift_consequent(&a, -1).unwrap();
        assert_eq!(s.delays, vec![0]);
        assert_eq!(s.consequent, Expr::ident("b"));
    }

    #[test]
    fn shift_negative_past_zero_deepens_past() {
        let a = parse_assertion("a |-> ##0 (d == $past(txr))").unwrap();
        let s = shift_consequent(&a, -1).unwrap();
        assert_eq!(s.delays, vec![0]);
        assert_eq!(
            s.consequent,
            Expr::eq(
                Expr::past(Expr::ident("d"), 1),
                Expr::past(Expr::ident("txr"), 2)
            )
        );
    }

    #[test]
    fn shift_zero_is_identity() {
        let a = parse_assertion("a |=> ##3 $past(b, 2)").unwrap();
        assert_eq!(shift_consequent(&a, 0).unwrap(), a);
    }

    #[test]
    fn shift_empty_delay_list() {
        let a = parse_assertion("a |-> b").unwrap();
        let s = shift_consequent(&a, 2).unwrap();
        assert_eq!(s.delays, vec![2]);
        let s = shift_consequent(&a, -1).unwrap();
        assert!(s.delays.is_empty());
        assert_eq!(s.consequent, Expr::past(Expr::ident("b"), 1));
    }

    #[test]
    fn shift_identity_and_composition_evaluate_equal() {
        let a = parse_assertion("(adr == 3'b101) |-> ##2 (dat == $past(txr))").unwrap();
        let mut t = trace("clk", 8);
        t.add_signal("adr", 3, &[5, 0, 5, 0, 0, 5, 0, 0]);
        t.add_signal("dat", 8, &[1, 2, 3, 4, 5, 6, 7, 8]);
        t.add_signal("txr", 8, &[3, 2, 5, 4, 9, 6, 7, 8]);
        let base = evaluate_assertion(&a, &t).unwrap();
        let zero = evaluate_assertion(&shift_consequent(&a, 0).unwrap(), &t).unwrap();
        assert_eq!(base, zero);
        let two_steps =
            shift_consequent(&shift_consequent(&a, -1).unwrap(), -1).unwrap();
        let one_step = shift_consequent(&a, -2).unwrap();
        assert_eq!(
            evaluate_assertion(&two_steps, &t).unwrap(),
            evaluate_assertion(&one_step, &t).unwrap()
        );
    }
}
