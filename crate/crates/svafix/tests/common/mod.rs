//! Shared oracles and generators for the integration suites. The evaluator
//! oracle recomputes assertion verdicts over per-bit `Option<bool>` vectors
//! instead of packed (bits, xmask) words; the graph oracles recompute
//! reachability by whole-edge-list relaxation and path enumeration. Agreement
//! with the library is then evidence, not tautology.

#![allow(dead_code)]

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

use svafix::cdfg::{
    build_cdfg, cone_of_influence, sequential_depth, sequential_depth_with_cap, DesignCdfg,
    Direction, Timing,
};
use svafix::expr::{BinaryOp, Const, Expr, SampledFn, UnaryOp};
use svafix::hdl::{
    parse_assertion, parse_design, ClockEdge, ClockEvent, ImplicationKind, SvaAssertion,
};
use svafix::trace::{evaluate_assertion, CounterexampleTrace, Val, Verdict};

// ---- naive 4-state evaluation ----

/// One 4-state value, least significant bit first. `None` is X.
pub type XVal = Vec<Option<bool>>;

fn val_to_xval(v: Val) -> XVal {
    (0..v.width)
        .map(|i| {
            if i >= 64 {
                Some(false)
            } else if v.xmask >> i & 1 != 0 {
                None
            } else {
                Some(v.bits >> i & 1 != 0)
            }
        })
        .collect()
}

fn x_of_u64(w: usize, val: u64) -> XVal {
    (0..w).map(|i| Some(i < 64 && val >> i & 1 != 0)).collect()
}

fn x_truth(v: &XVal) -> Option<bool> {
    if v.iter().any(|b| *b == Some(true)) {
        Some(true)
    } else if v.iter().all(|b| b.is_some()) {
        Some(false)
    } else {
        None
    }
}

fn x_from_truth(t: Option<bool>) -> XVal {
    vec![t]
}

fn x_extend(v: &XVal, w: usize) -> XVal {
    let mut out = v.clone();
    while out.len() < w {
        out.push(Some(false));
    }
    out
}

fn x_known(v: &XVal) -> Option<u64> {
    let mut out = 0u64;
    for (i, b) in v.iter().enumerate() {
        match b {
            Some(true) => {
                if i < 64 {
                    out |= 1 << i;
                }
            }
            Some(false) => {}
            None => return None,
        }
    }
    Some(out)
}

fn x_eq(a: &XVal, b: &XVal) -> Option<bool> {
    let mut unknown = false;
    for i in 0..a.len().max(b.len()) {
        match (
            a.get(i).copied().unwrap_or(Some(false)),
            b.get(i).copied().unwrap_or(Some(false)),
        ) {
            (Some(x), Some(y)) => {
                if x != y {
                    return Some(false);
                }
            }
            _ => unknown = true,
        }
    }
    if unknown {
        None
    } else {
        Some(true)
    }
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

/// Width by shape alone, mirroring what the evaluator consults when `$past`
/// has no history yet.
fn shape_width(e: &Expr, t: &CounterexampleTrace) -> Option<u32> {
    match e {
        Expr::Ident(n) => t.signal(n).map(|s| s.width),
        Expr::Const(c) => c.width,
        Expr::Unary(op, x) => match op {
            UnaryOp::LogicNot | UnaryOp::ReduceAnd | UnaryOp::ReduceOr | UnaryOp::ReduceXor => {
                Some(1)
            }
            UnaryOp::BitNot | UnaryOp::Neg => shape_width(x, t),
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
            BinaryOp::Shl | BinaryOp::Shr => shape_width(a, t),
            _ => match (shape_width(a, t), shape_width(b, t)) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (w, None) | (None, w) => w,
            },
        },
        Expr::Ternary(_, a, b) => match (shape_width(a, t), shape_width(b, t)) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (w, None) | (None, w) => w,
        },
        Expr::Concat(parts) => {
            let mut sum = 0;
            for p in parts {
                sum += shape_width(p, t)?;
            }
            Some(sum)
        }
        Expr::Index(_, _) => Some(1),
        Expr::Slice(_, hi, lo) => Some(hi - lo + 1),
        Expr::Past(x, _) => shape_width(x, t),
        Expr::Sampled(_, _) => Some(1),
    }
}

pub fn naive_eval_expr(e: &Expr, t: &CounterexampleTrace, cycle: usize) -> XVal {
    match e {
        Expr::Ident(n) => val_to_xval(t.signal(n).expect("signal present").value(cycle)),
        Expr::Const(c) => x_of_u64(c.width.unwrap_or(64) as usize, c.value),
        Expr::Unary(op, x) => {
            let v = naive_eval_expr(x, t, cycle);
            match op {
                UnaryOp::LogicNot => x_from_truth(x_truth(&v).map(|b| !b)),
                UnaryOp::BitNot => v.iter().map(|b| b.map(|x| !x)).collect(),
                UnaryOp::Neg => match x_known(&v) {
                    Some(n) => x_of_u64(v.len(), n.wrapping_neg()),
                    None => vec![None; v.len()],
                },
                UnaryOp::ReduceAnd => {
                    if v.iter().any(|b| *b == Some(false)) {
                        vec![Some(false)]
                    } else if v.iter().any(|b| b.is_none()) {
                        vec![None]
                    } else {
                        vec![Some(true)]
                    }
                }
                UnaryOp::ReduceOr => x_from_truth(x_truth(&v)),
                UnaryOp::ReduceXor => {
                    if v.iter().any(|b| b.is_none()) {
                        vec![None]
                    } else {
                        let ones = v.iter().filter(|b| **b == Some(true)).count();
                        vec![Some(ones % 2 == 1)]
                    }
                }
            }
        }
        Expr::Binary(op, a, b) => {
            let va = naive_eval_expr(a, t, cycle);
            let vb = naive_eval_expr(b, t, cycle);
            naive_binary(*op, va, vb)
        }
        Expr::Ternary(c, a, b) => {
            let vc = naive_eval_expr(c, t, cycle);
            match x_truth(&vc) {
                Some(true) => naive_eval_expr(a, t, cycle),
                Some(false) => naive_eval_expr(b, t, cycle),
                None => {
                    let va = naive_eval_expr(a, t, cycle);
                    let vb = naive_eval_expr(b, t, cycle);
                    let w = va.len().max(vb.len());
                    let (va, vb) = (x_extend(&va, w), x_extend(&vb, w));
                    (0..w)
                        .map(|i| match (va[i], vb[i]) {
                            (Some(x), Some(y)) if x == y => Some(x),
                            _ => None,
                        })
                        .collect()
                }
            }
        }
        Expr::Concat(parts) => {
            // most significant part first, as in source text
            let mut out: XVal = Vec::new();
            for p in parts {
                let mut v = naive_eval_expr(p, t, cycle);
                v.extend(out);
                out = v;
            }
            out.truncate(64);
            out
        }
        Expr::Index(x, i) => {
            let v = naive_eval_expr(x, t, cycle);
            match v.get(*i as usize) {
                Some(b) => vec![*b],
                None => vec![None],
            }
        }
        Expr::Slice(x, hi, lo) => {
            let v = naive_eval_expr(x, t, cycle);
            (*lo..=*hi)
                .map(|i| v.get(i as usize).copied().unwrap_or(Some(false)))
                .collect()
        }
        Expr::Past(x, k) => {
            let k = *k as usize;
            if cycle >= k {
                naive_eval_expr(x, t, cycle - k)
            } else {
                vec![None; shape_width(x, t).unwrap_or(1) as usize]
            }
        }
        Expr::Sampled(f, x) => {
            let now = naive_eval_expr(x, t, cycle);
            let prev = if cycle >= 1 {
                naive_eval_expr(x, t, cycle - 1)
            } else {
                vec![None; now.len()]
            };
            match f {
                SampledFn::Rose => x_from_truth(and3(
                    now[0].map(|b| b),
                    prev[0].map(|b| !b),
                )),
                SampledFn::Fell => x_from_truth(and3(
                    now[0].map(|b| !b),
                    prev[0].map(|b| b),
                )),
                SampledFn::Stable => {
                    let w = now.len().max(prev.len());
                    x_from_truth(x_eq(&x_extend(&now, w), &x_extend(&prev, w)))
                }
            }
        }
    }
}

fn naive_binary(op: BinaryOp, a: XVal, b: XVal) -> XVal {
    let w = a.len().max(b.len());
    let a = x_extend(&a, w);
    let b = x_extend(&b, w);
    match op {
        BinaryOp::LogicAnd => x_from_truth(and3(x_truth(&a), x_truth(&b))),
        BinaryOp::LogicOr => x_from_truth(or3(x_truth(&a), x_truth(&b))),
        BinaryOp::Eq => x_from_truth(x_eq(&a, &b)),
        BinaryOp::Ne => x_from_truth(x_eq(&a, &b).map(|x| !x)),
        BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => {
            match (x_known(&a), x_known(&b)) {
                (Some(x), Some(y)) => x_from_truth(Some(match op {
                    BinaryOp::Lt => x < y,
                    BinaryOp::Le => x <= y,
                    BinaryOp::Gt => x > y,
                    _ => x >= y,
                })),
                _ => vec![None],
            }
        }
        BinaryOp::BitAnd => (0..w).map(|i| and3(a[i], b[i])).collect(),
        BinaryOp::BitOr => (0..w).map(|i| or3(a[i], b[i])).collect(),
        BinaryOp::BitXor => (0..w)
            .map(|i| match (a[i], b[i]) {
                (Some(x), Some(y)) => Some(x != y),
                _ => None,
            })
            .collect(),
        BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul => match (x_known(&a), x_known(&b)) {
            (Some(x), Some(y)) => {
                let r = match op {
                    BinaryOp::Add => x.wrapping_add(y),
                    BinaryOp::Sub => x.wrapping_sub(y),
                    _ => x.wrapping_mul(y),
                };
                x_of_u64(w, r)
            }
            _ => vec![None; w],
        },
        BinaryOp::Shl | BinaryOp::Shr => match x_known(&b) {
            None => vec![None; w],
            Some(s) => {
                let s = s.min(64) as usize;
                if s >= 64 {
                    return vec![Some(false); w];
                }
                (0..w)
                    .map(|i| match op {
                        BinaryOp::Shl => {
                            if i >= s {
                                a[i - s]
                            } else {
                                Some(false)
                            }
                        }
                        _ => a.get(i + s).copied().unwrap_or(Some(false)),
                    })
                    .collect()
            }
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaiveResult {
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
    pub covered: bool,
    pub first_failing: Option<usize>,
}

/// Attempt-by-attempt re-evaluation with the same bounded semantics as the
/// library: disable and antecedent sampled at the start cycle, consequent at
/// start plus the delay sum (plus one for `|=>`), truncated windows vacuous,
/// unknown consequents failing.
pub fn naive_check(a: &SvaAssertion, t: &CounterexampleTrace) -> NaiveResult {
    let mut window = 0usize;
    for d in &a.delays {
        window += *d as usize;
    }
    if a.implication == ImplicationKind::NonOverlapped {
        window += 1;
    }
    let n = t.len();
    let mut verdicts = Vec::with_capacity(n);
    for i in 0..n {
        let mut verdict = Verdict::Vacuous;
        let disabled = match &a.disable {
            Some(d) => x_truth(&naive_eval_expr(d, t, i)) == Some(true),
            None => false,
        };
        if !disabled && x_truth(&naive_eval_expr(&a.antecedent, t, i)) == Some(true) {
            let j = i + window;
            if j < n {
                verdict = match x_truth(&naive_eval_expr(&a.consequent, t, j)) {
                    Some(true) => Verdict::Pass,
                    _ => Verdict::Fail,
                };
            }
        }
        verdicts.push(verdict);
    }
    NaiveResult {
        passed: !verdicts.contains(&Verdict::Fail),
        covered: verdicts.iter().any(|v| *v != Verdict::Vacuous),
        first_failing: verdicts.iter().position(|v| *v == Verdict::Fail),
        verdicts,
    }
}

// ---- random traces ----

pub fn random_trace(
    rng: &mut ChaCha8Rng,
    sigs: &[(String, u32)],
    len: usize,
    x_percent: u32,
) -> CounterexampleTrace {
    let mut t = CounterexampleTrace::new("clk", len);
    for (name, w) in sigs {
        let vals: Vec<Val> = (0..len)
            .map(|_| {
                let bits = rng.gen::<u64>();
                let xmask = if x_percent > 0 {
                    let mut m = 0u64;
                    for i in 0..*w {
                        if rng.gen_range(0..100) < x_percent {
                            m |= 1 << i;
                        }
                    }
                    m
                } else {
                    0
                };
                Val::new(*w, bits, xmask)
            })
            .collect();
        t.add_signal_vals(name, *w, &vals);
    }
    t
}

// ---- random assertions for evaluator equivalence ----

/// Boolean-shaped expression over the given signals, safe to evaluate: any
/// constant compared with `==`/`!=` carries the width of the other side.
fn rand_bool_expr(rng: &mut ChaCha8Rng, sigs: &[(String, u32)], depth: u32) -> Expr {
    let (name, w) = sigs[rng.gen_range(0..sigs.len())].clone();
    if depth == 0 {
        return match rng.gen_range(0..4) {
            0 => Expr::ident(&name),
            1 => Expr::Unary(UnaryOp::ReduceOr, Box::new(Expr::ident(&name))),
            2 => Expr::Index(Box::new(Expr::ident(&name)), rng.gen_range(0..=w)),
            _ => Expr::Sampled(
                match rng.gen_range(0..3) {
                    0 => SampledFn::Rose,
                    1 => SampledFn::Fell,
                    _ => SampledFn::Stable,
                },
                Box::new(Expr::ident(&name)),
            ),
        };
    }
    let sub = |rng: &mut ChaCha8Rng| rand_bool_expr(rng, sigs, depth - 1);
    match rng.gen_range(0..9) {
        0 => Expr::Unary(UnaryOp::LogicNot, Box::new(sub(rng))),
        1 => Expr::Binary(BinaryOp::LogicAnd, Box::new(sub(rng)), Box::new(sub(rng))),
        2 => Expr::Binary(BinaryOp::LogicOr, Box::new(sub(rng)), Box::new(sub(rng))),
        3 => {
            // signal against width-matched constant
            let value = rng.gen::<u64>();
            Expr::Binary(
                if rng.gen() { BinaryOp::Eq } else { BinaryOp::Ne },
                Box::new(Expr::ident(&name)),
                Box::new(Expr::Const(Const::new(Some(w), value))),
            )
        }
        4 => {
            let (other, _) = sigs[rng.gen_range(0..sigs.len())].clone();
            Expr::Binary(
                BinaryOp::Eq,
                Box::new(Expr::ident(&name)),
                Box::new(Expr::Past(
                    Box::new(Expr::ident(&other)),
                    rng.gen_range(1..=2),
                )),
            )
        }
        5 => {
            let (other, _) = sigs[rng.gen_range(0..sigs.len())].clone();
            let op = [BinaryOp::Lt, BinaryOp::Le, BinaryOp::Gt, BinaryOp::Ge]
                [rng.gen_range(0..4)];
            Expr::Binary(op, Box::new(Expr::ident(&name)), Box::new(Expr::ident(&other)))
        }
        6 => {
            let (other, _) = sigs[rng.gen_range(0..sigs.len())].clone();
            let op = [BinaryOp::BitAnd, BinaryOp::BitOr, BinaryOp::BitXor]
                [rng.gen_range(0..3)];
            Expr::Unary(
                UnaryOp::ReduceOr,
                Box::new(Expr::Binary(
                    op,
                    Box::new(Expr::ident(&name)),
                    Box::new(Expr::ident(&other)),
                )),
            )
        }
        7 => Expr::Past(Box::new(sub(rng)), rng.gen_range(1..=2)),
        _ => {
            let hi = rng.gen_range(0..w);
            let lo = rng.gen_range(0..=hi);
            Expr::Binary(
                BinaryOp::Ne,
                Box::new(Expr::Slice(Box::new(Expr::ident(&name)), hi, lo)),
                Box::new(Expr::Const(Const::new(Some(hi - lo + 1), rng.gen()))),
            )
        }
    }
}

pub fn random_eval_assertion(rng: &mut ChaCha8Rng, sigs: &[(String, u32)]) -> SvaAssertion {
    let n_delays = rng.gen_range(0..=2);
    SvaAssertion {
        name: None,
        clock: Some(ClockEvent {
            edge: ClockEdge::Pos,
            signal: "clk".to_string(),
        }),
        disable: if rng.gen_range(0..5) == 0 {
            Some(rand_bool_expr(rng, sigs, 1))
        } else {
            None
        },
        antecedent: rand_bool_expr(rng, sigs, 2),
        implication: if rng.gen() {
            ImplicationKind::Overlapped
        } else {
            ImplicationKind::NonOverlapped
        },
        delays: (0..n_delays).map(|_| rng.gen_range(0..=3)).collect(),
        consequent: rand_bool_expr(rng, sigs, 2),
    }
}

// ---- random assertion ASTs for parse/render round-trips ----

const IDENT_POOL: &[&str] = &[
    "sig_a", "sig_b", "addr", "data", "req", "ack", "valid", "ready", "q0", "q1", "state",
    "wb_dat_o", "grant", "busy",
];

fn rand_ident(rng: &mut ChaCha8Rng) -> String {
    IDENT_POOL[rng.gen_range(0..IDENT_POOL.len())].to_string()
}

/// Any expression the assertion grammar can spell: no ternary, no concat.
pub fn random_ast_expr(rng: &mut ChaCha8Rng, budget: u32) -> Expr {
    if budget == 0 {
        return match rng.gen_range(0..3) {
            0 => Expr::ident(&rand_ident(rng)),
            1 => Expr::Const(Const::new(Some(rng.gen_range(1..=8)), rng.gen())),
            _ => Expr::Const(Const::unsized_dec(rng.gen_range(0..1000))),
        };
    }
    let sub = |rng: &mut ChaCha8Rng, b: u32| random_ast_expr(rng, b);
    match rng.gen_range(0..6) {
        0 => {
            let op = [
                UnaryOp::LogicNot,
                UnaryOp::BitNot,
                UnaryOp::Neg,
                UnaryOp::ReduceAnd,
                UnaryOp::ReduceOr,
                UnaryOp::ReduceXor,
            ][rng.gen_range(0..6)];
            Expr::Unary(op, Box::new(sub(rng, budget - 1)))
        }
        1 => {
            let op = [
                BinaryOp::LogicAnd,
                BinaryOp::LogicOr,
                BinaryOp::BitAnd,
                BinaryOp::BitOr,
                BinaryOp::BitXor,
                BinaryOp::Eq,
                BinaryOp::Ne,
                BinaryOp::Lt,
                BinaryOp::Le,
                BinaryOp::Gt,
                BinaryOp::Ge,
                BinaryOp::Shl,
                BinaryOp::Shr,
                BinaryOp::Add,
                BinaryOp::Sub,
                BinaryOp::Mul,
            ][rng.gen_range(0..16)];
            let lb = rng.gen_range(0..budget);
            Expr::Binary(op, Box::new(sub(rng, lb)), Box::new(sub(rng, budget - 1 - lb)))
        }
        2 => Expr::Index(Box::new(sub(rng, budget - 1)), rng.gen_range(0..16)),
        3 => {
            let lo = rng.gen_range(0..8);
            let hi = lo + rng.gen_range(0..8);
            Expr::Slice(Box::new(sub(rng, budget - 1)), hi, lo)
        }
        4 => Expr::Past(Box::new(sub(rng, budget - 1)), rng.gen_range(1..=4)),
        _ => Expr::Sampled(
            match rng.gen_range(0..3) {
                0 => SampledFn::Rose,
                1 => SampledFn::Fell,
                _ => SampledFn::Stable,
            },
            Box::new(sub(rng, budget - 1)),
        ),
    }
}

pub fn random_ast_assertion(rng: &mut ChaCha8Rng) -> SvaAssertion {
    let n_delays = rng.gen_range(0..=3);
    SvaAssertion {
        name: if rng.gen() {
            Some(format!("chk_{}", rng.gen_range(0..100)))
        } else {
            None
        },
        clock: if rng.gen_range(0..4) > 0 {
            Some(ClockEvent {
                edge: if rng.gen() { ClockEdge::Pos } else { ClockEdge::Neg },
                signal: rand_ident(rng),
            })
        } else {
            None
        },
        disable: if rng.gen_range(0..3) == 0 {
            Some(random_ast_expr(rng, 2))
        } else {
            None
        },
        antecedent: {
            let budget = rng.gen_range(0..5);
            random_ast_expr(rng, budget)
        },
        implication: if rng.gen() {
            ImplicationKind::Overlapped
        } else {
            ImplicationKind::NonOverlapped
        },
        delays: (0..n_delays).map(|_| rng.gen_range(0..=5)).collect(),
        consequent: {
            let budget = rng.gen_range(0..5);
            random_ast_expr(rng, budget)
        },
    }
}

// ---- random designs and graph oracles ----

/// Source text for a random single-module design: wires assigned only from
/// earlier signals (so combinational logic is acyclic by construction),
/// registers from anything, with a mix of plain, if-guarded, and case-guarded
/// clocked assignments.
pub fn random_design_source(rng: &mut ChaCha8Rng, max_signals: usize) -> String {
    assert!(max_signals >= 8);
    let n_in = rng.gen_range(2..=3);
    let rest = max_signals - 1 - n_in; // one slot for clk
    let n_regs = rng.gen_range(2..=(rest / 2).max(2));
    let n_wires = rng.gen_range(2..=(rest - n_regs).max(2));

    let width = |rng: &mut ChaCha8Rng| rng.gen_range(1..=4);
    let mut header = String::from("  input clk");
    let mut decl = String::new();
    let mut pool: Vec<String> = Vec::new();
    for i in 0..n_in {
        header.push_str(&format!(",\n  input [{}:0] in{}", width(rng) - 1, i));
        pool.push(format!("in{i}"));
    }
    for i in 0..n_regs {
        decl.push_str(&format!("  reg [{}:0] rg{};\n", width(rng) - 1, i));
        pool.push(format!("rg{i}"));
    }

    let pick = |rng: &mut ChaCha8Rng, pool: &[String]| pool[rng.gen_range(0..pool.len())].clone();
    let rhs = |rng: &mut ChaCha8Rng, pool: &[String]| {
        let a = pick(rng, pool);
        match rng.gen_range(0..4) {
            0 => a,
            1 => format!("~{a}"),
            2 => format!("{a} {} {}", ["&", "|", "^", "+"][rng.gen_range(0..4)], pick(rng, pool)),
            _ => format!(
                "{a} {} ({} {} {})",
                ["&", "|", "^"][rng.gen_range(0..3)],
                pick(rng, pool),
                ["&", "|"][rng.gen_range(0..2)],
                pick(rng, pool)
            ),
        }
    };

    let mut body = String::new();
    for i in 0..n_wires {
        // only earlier signals on the right keeps assigns loop-free
        let e = rhs(rng, &pool);
        decl.push_str(&format!("  wire [{}:0] wr{};\n", width(rng) - 1, i));
        body.push_str(&format!("  assign wr{i} = {e};\n"));
        pool.push(format!("wr{i}"));
    }
    for i in 0..n_regs {
        match rng.gen_range(0..3) {
            0 => body.push_str(&format!(
                "  always @(posedge clk) rg{i} <= {};\n",
                rhs(rng, &pool)
            )),
            1 => body.push_str(&format!(
                "  always @(posedge clk) if ({}) rg{i} <= {}; else rg{i} <= {};\n",
                pick(rng, &pool),
                rhs(rng, &pool),
                rhs(rng, &pool)
            )),
            _ => body.push_str(&format!(
                "  always @(posedge clk)\n    case ({})\n      1'b0: rg{i} <= {};\n      default: rg{i} <= {};\n    endcase\n",
                pick(rng, &pool),
                rhs(rng, &pool),
                rhs(rng, &pool)
            )),
        }
    }

    format!("module rnd(\n{header}\n);\n{decl}\n{body}endmodule\n")
}

/// Register-distance reachability by repeated relaxation over the whole
/// edge list, the dumbest fixpoint that can work.
pub fn relaxed_coi(
    g: &DesignCdfg,
    seeds: &[String],
    direction: Direction,
    cap: Option<u32>,
) -> BTreeMap<String, u32> {
    let mut dist: BTreeMap<usize, u32> = BTreeMap::new();
    for s in seeds {
        dist.insert(g.node_id(s).expect("seed exists"), 0);
    }
    loop {
        let mut changed = false;
        for e in g.edges() {
            let (u, v) = match direction {
                Direction::Forward => (e.src, e.dst),
                Direction::Backward => (e.dst, e.src),
            };
            let step = if e.timing == Timing::Sequential { 1 } else { 0 };
            if let Some(&du) = dist.get(&u) {
                let nd = du + step;
                if dist.get(&v).map_or(true, |&dv| nd < dv) {
                    dist.insert(v, nd);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    dist.into_iter()
        .filter(|(_, d)| cap.map_or(true, |c| *d <= c))
        .map(|(id, d)| (g.nodes()[id].name.clone(), d))
        .collect()
}

// ---- equivalence battles, shared by the focused suites and the gate ----

/// The template family: both implications, delays 0..3, `$past` to depth 2,
/// sampled-value functions, over two one-bit signals `a` and `b`.
pub fn eval_templates() -> Vec<SvaAssertion> {
    [
        "a |-> b",
        "a |=> b",
        "a |-> ##1 b",
        "a |-> ##2 b",
        "a |-> ##3 b",
        "a |=> ##1 !b",
        "a |-> $past(b)",
        "a |-> ##1 b == $past(a)",
        "a |-> ##1 b == $past(a, 2)",
        "$rose(a) |-> ##1 b",
        "$fell(a) |=> b",
        "a && b |-> ##1 ##1 a",
        "a || b |-> ##1 $stable(b)",
        "disable iff (b) a |-> ##1 a",
        "a |-> ##0 (a ^ b)",
        "!a |-> ##1 (a | b)",
        "a == b |-> ##1 $past(a ^ b)",
        "b |-> ##2 $stable(a)",
        "$stable(a) |-> b",
        "a != b |=> a",
    ]
    .iter()
    .map(|t| parse_assertion(t).expect("template parses"))
    .collect()
}

pub fn assert_eval_equiv(a: &SvaAssertion, t: &CounterexampleTrace, ctx: &str) {
    let lib = evaluate_assertion(a, t).expect("assertion evaluates");
    let naive = naive_check(a, t);
    assert_eq!(lib.attempts.len(), naive.verdicts.len(), "{ctx}");
    for (i, at) in lib.attempts.iter().enumerate() {
        assert_eq!(at.start, i, "{ctx}");
        assert_eq!(
            at.verdict, naive.verdicts[i],
            "{ctx}: attempt {i} of {}",
            svafix::hdl::render_assertion(a)
        );
    }
    assert_eq!(lib.passed, naive.passed, "{ctx}");
    assert_eq!(lib.covered, naive.covered, "{ctx}");
    assert_eq!(lib.first_failing_cycle, naive.first_failing, "{ctx}");
}

/// Every trace of two one-bit signals up to length 6, against every
/// template. Returns the number of comparisons.
pub fn exhaustive_two_signal_battle() -> usize {
    let templates = eval_templates();
    let mut checks = 0;
    for len in 1..=6usize {
        for code in 0u32..1 << (2 * len) {
            let mut t = CounterexampleTrace::new("clk", len);
            let a: Vec<u64> = (0..len).map(|i| (code >> (2 * i) & 1) as u64).collect();
            let b: Vec<u64> = (0..len).map(|i| (code >> (2 * i + 1) & 1) as u64).collect();
            t.add_signal("a", 1, &a);
            t.add_signal("b", 1, &b);
            for (ti, tpl) in templates.iter().enumerate() {
                assert_eval_equiv(tpl, &t, &format!("template {ti}, len {len}, code {code:b}"));
                checks += 1;
            }
        }
    }
    checks
}

/// Random multi-bit traces with X bits against sampled assertions.
pub fn random_wider_battle(cases: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let n_sig = rng.gen_range(2..=4);
        let sigs: Vec<(String, u32)> = (0..n_sig)
            .map(|i| (format!("s{i}"), rng.gen_range(1..=8)))
            .collect();
        let len = rng.gen_range(3..=12);
        let x = [0, 0, 5, 20][rng.gen_range(0..4)];
        let t = random_trace(&mut rng, &sigs, len, x);
        let a = random_eval_assertion(&mut rng, &sigs);
        assert_eval_equiv(&a, &t, &format!("random case {case}"));
    }
    cases
}

/// One random design: library COI against whole-edge-list relaxation, for
/// sampled seed sets, both directions, assorted caps.
pub fn coi_battle(seed: u64, max_signals: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let src = random_design_source(&mut rng, max_signals);
    let ast = parse_design(&[("rnd.v", src.as_str())]).expect("random design parses");
    let g = build_cdfg(&ast).expect("random design builds");
    assert!(g.nodes().len() <= max_signals, "{src}");
    let names: Vec<String> = g.nodes().iter().map(|n| n.name.clone()).collect();
    let mut checks = 0;
    for _ in 0..3 {
        let k = rng.gen_range(1..=3.min(names.len()));
        let seeds: BTreeSet<String> = (0..k)
            .map(|_| names[rng.gen_range(0..names.len())].clone())
            .collect();
        let cap = [None, None, Some(0), Some(1), Some(2)][rng.gen_range(0..5)];
        for dir in [Direction::Backward, Direction::Forward] {
            let lib = cone_of_influence(&g, &seeds, dir, cap).expect("seeds exist");
            let seed_list: Vec<String> = seeds.iter().cloned().collect();
            let naive = relaxed_coi(&g, &seed_list, dir, cap);
            assert_eq!(lib, naive, "seed {seed}, {dir:?}, cap {cap:?}\n{src}");
            checks += 1;
        }
    }
    checks
}

/// One random design of at most 20 signals: depth range against exhaustive
/// simple-path enumeration, then the default-cap lower-bound contract.
pub fn depth_battle(seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let src = random_design_source(&mut rng, 20);
    let ast = parse_design(&[("rnd.v", src.as_str())]).expect("random design parses");
    let g = build_cdfg(&ast).expect("random design builds");
    assert!(g.nodes().len() <= 20, "{src}");
    let names: Vec<String> = g.nodes().iter().map(|n| n.name.clone()).collect();
    let mut checks = 0;
    for _ in 0..4 {
        let from = &names[rng.gen_range(0..names.len())];
        let to = &names[rng.gen_range(0..names.len())];
        let exact = enumerated_depths(&g, from, to);
        let lib = sequential_depth_with_cap(&g, from, to, 10_000).expect("signals exist");
        assert_eq!(
            lib.map(|d| (d.min, d.max)),
            exact,
            "{from} -> {to}\n{src}"
        );
        let capped = sequential_depth(&g, from, to).expect("signals exist");
        match (capped, exact) {
            (Some(d), Some((lo, hi))) => {
                assert_eq!(d.min, lo, "{from} -> {to}");
                assert!(d.max <= hi, "{from} -> {to}");
                if hi <= svafix::cdfg::DEFAULT_SEQ_PATH_CAP {
                    assert_eq!(d.max, hi, "{from} -> {to}");
                }
            }
            (None, None) => {}
            other => panic!("reachability disagrees for {from} -> {to}: {other:?}"),
        }
        checks += 1;
    }
    checks
}

/// Min and max register stages over every simple path, by full enumeration.
pub fn enumerated_depths(g: &DesignCdfg, from: &str, to: &str) -> Option<(u32, u32)> {
    let src = g.node_id(from)?;
    let dst = g.node_id(to)?;
    if src == dst {
        return Some((0, 0));
    }
    let mut adj: Vec<Vec<(usize, u32)>> = vec![Vec::new(); g.nodes().len()];
    for e in g.edges() {
        adj[e.src].push((e.dst, (e.timing == Timing::Sequential) as u32));
    }
    let mut on_path = vec![false; g.nodes().len()];
    let mut best: Option<(u32, u32)> = None;
    on_path[src] = true;
    fn dfs(
        adj: &[Vec<(usize, u32)>],
        u: usize,
        dst: usize,
        depth: u32,
        on_path: &mut [bool],
        best: &mut Option<(u32, u32)>,
    ) {
        for &(v, w) in &adj[u] {
            let nd = depth + w;
            if v == dst {
                *best = match *best {
                    None => Some((nd, nd)),
                    Some((lo, hi)) => Some((lo.min(nd), hi.max(nd))),
                };
                continue;
            }
            if !on_path[v] {
                on_path[v] = true;
                dfs(adj, v, dst, nd, on_path, best);
                on_path[v] = false;
            }
        }
    }
    dfs(&adj, src, dst, 0, &mut on_path, &mut best);
    best
}
