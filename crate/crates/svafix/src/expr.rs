//! Expression AST shared by the RTL statement subset and the assertion
//! subset. Constants are normalized to (width, unsigned value) pairs so
//! `3'b100` and `3'd4` compare equal.

use std::collections::BTreeSet;
use std::fmt;

/// A numeric constant. `width == None` for unsized decimal literals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Const {
    pub width: Option<u32>,
    pub value: u64,
}

impl Const {
    pub fn new(width: Option<u32>, value: u64) -> Self {
        let value = match width {
            Some(w) if w < 64 => value & ((1u64 << w) - 1),
            _ => value,
        };
        Const { width, value }
    }

    pub fn unsized_dec(value: u64) -> Self {
        Const { width: None, value }
    }

    /// Semantic equality used by guard matching: values must agree and,
    /// when both sides carry a width, the widths must too.
    pub fn same_value(&self, other: &Const) -> bool {
        self.value == other.value
            && match (self.width, other.width) {
                (Some(a), Some(b)) => a == b,
                _ => true,
            }
    }
}

impl fmt::Display for Const {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.width {
            Some(w) => {
                write!(f, "{}'b", w)?;
                for i in (0..w).rev() {
                    write!(f, "{}", (self.value >> i) & 1)?;
                }
                Ok(())
            }
            None => write!(f, "{}", self.value),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    LogicNot,
    BitNot,
    ReduceAnd,
    ReduceOr,
    ReduceXor,
    Neg,
}

impl UnaryOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            UnaryOp::LogicNot => "!",
            UnaryOp::BitNot => "~",
            UnaryOp::ReduceAnd => "&",
            UnaryOp::ReduceOr => "|",
            UnaryOp::ReduceXor => "^",
            UnaryOp::Neg => "-",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    LogicAnd,
    LogicOr,
    BitAnd,
    BitOr,
    BitXor,
    Add,
    Sub,
    Mul,
    Shl,
    Shr,
}

impl BinaryOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::LogicAnd => "&&",
            BinaryOp::LogicOr => "||",
            BinaryOp::BitAnd => "&",
            BinaryOp::BitOr => "|",
            BinaryOp::BitXor => "^",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Shl => "<<",
            BinaryOp::Shr => ">>",
        }
    }

    /// Binding strength for rendering with minimal parentheses.
    pub fn precedence(&self) -> u8 {
        match self {
            BinaryOp::Mul => 10,
            BinaryOp::Add | BinaryOp::Sub => 9,
            BinaryOp::Shl | BinaryOp::Shr => 8,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 7,
            BinaryOp::Eq | BinaryOp::Ne => 6,
            BinaryOp::BitAnd => 5,
            BinaryOp::BitXor => 4,
            BinaryOp::BitOr => 3,
            BinaryOp::LogicAnd => 2,
            BinaryOp::LogicOr => 1,
        }
    }
}

/// Sampled-value functions allowed in the assertion subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SampledFn {
    Rose,
    Fell,
    Stable,
}

impl SampledFn {
    pub fn name(&self) -> &'static str {
        match self {
            SampledFn::Rose => "$rose",
            SampledFn::Fell => "$fell",
            SampledFn::Stable => "$stable",
        }
    }
}

/// Expression tree. The RTL statement parser and the assertion parser each
/// accept a subset of the variants; see the respective parsers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Ident(String),
    Const(Const),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    /// `cond ? then : else` — RTL only.
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
    /// `{a, b, c}` — RTL only.
    Concat(Vec<Expr>),
    /// `x[i]` with a constant index.
    Index(Box<Expr>, u32),
    /// `x[h:l]` with constant bounds, msb first.
    Slice(Box<Expr>, u32, u32),
    /// `$past(e, depth)`, depth >= 1 — assertions only.
    Past(Box<Expr>, u32),
    /// `$rose/$fell/$stable(e)` — assertions only.
    Sampled(SampledFn, Box<Expr>),
}

impl Expr {
    pub fn ident(name: impl Into<String>) -> Expr {
        Expr::Ident(name.into())
    }

    pub fn constant(width: Option<u32>, value: u64) -> Expr {
        Expr::Const(Const::new(width, value))
    }

    pub fn eq(self, rhs: Expr) -> Expr {
        Expr::Binary(BinaryOp::Eq, Box::new(self), Box::new(rhs))
    }

    pub fn and(self, rhs: Expr) -> Expr {
        Expr::Binary(BinaryOp::LogicAnd, Box::new(self), Box::new(rhs))
    }

    pub fn not(self) -> Expr {
        Expr::Unary(UnaryOp::LogicNot, Box::new(self))
    }

    pub fn past(self, depth: u32) -> Expr {
        Expr::Past(Box::new(self), depth)
    }

    /// All signal names referenced anywhere in the expression.
    pub fn signals(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_signals(&mut out);
        out
    }

    pub fn collect_signals(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Ident(n) => {
                out.insert(n.clone());
            }
            Expr::Const(_) => {}
            Expr::Unary(_, e) | Expr::Past(e, _) | Expr::Sampled(_, e) => e.collect_signals(out),
            Expr::Binary(_, a, b) => {
                a.collect_signals(out);
                b.collect_signals(out);
            }
            Expr::Ternary(c, a, b) => {
                c.collect_signals(out);
                a.collect_signals(out);
                b.collect_signals(out);
            }
            Expr::Concat(parts) => {
                for p in parts {
                    p.collect_signals(out);
                }
            }
            Expr::Index(e, _) | Expr::Slice(e, _, _) => e.collect_signals(out),
        }
    }

    /// Rewrites every identifier through `f`, preserving structure.
    pub fn map_idents(&self, f: &mut impl FnMut(&str) -> String) -> Expr {
        match self {
            Expr::Ident(n) => Expr::Ident(f(n)),
            Expr::Const(c) => Expr::Const(*c),
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.map_idents(f))),
            Expr::Binary(op, a, b) => {
                Expr::Binary(*op, Box::new(a.map_idents(f)), Box::new(b.map_idents(f)))
            }
            Expr::Ternary(c, a, b) => Expr::Ternary(
                Box::new(c.map_idents(f)),
                Box::new(a.map_idents(f)),
                Box::new(b.map_idents(f)),
            ),
            Expr::Concat(parts) => Expr::Concat(parts.iter().map(|p| p.map_idents(f)).collect()),
            Expr::Index(e, i) => Expr::Index(Box::new(e.map_idents(f)), *i),
            Expr::Slice(e, hi, lo) => Expr::Slice(Box::new(e.map_idents(f)), *hi, *lo),
            Expr::Past(e, p) => Expr::Past(Box::new(e.map_idents(f)), *p),
            Expr::Sampled(s, e) => Expr::Sampled(*s, Box::new(e.map_idents(f))),
        }
    }

    /// Wraps every signal reference `k` cycles into the past: identifiers
    /// become `$past(id, k)` and existing `$past(e, p)` becomes
    /// `$past(e, p + k)`. Constants are left alone. This is the semantic
    /// "evaluate k cycles earlier" transform used by consequent shifting.
    pub fn deepen_past(&self, k: u32) -> Expr {
        if k == 0 {
            return self.clone();
        }
        match self {
            Expr::Ident(_) | Expr::Index(_, _) | Expr::Slice(_, _, _) => {
                Expr::Past(Box::new(self.clone()), k)
            }
            Expr::Const(c) => Expr::Const(*c),
            Expr::Past(e, p) => Expr::Past(e.clone(), p + k),
            Expr::Sampled(f, e) => {
                Expr::Past(Box::new(Expr::Sampled(*f, e.clone())), k)
            }
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.deepen_past(k))),
            Expr::Binary(op, a, b) => Expr::Binary(
                *op,
                Box::new(a.deepen_past(k)),
                Box::new(b.deepen_past(k)),
            ),
            Expr::Ternary(c, a, b) => Expr::Ternary(
                Box::new(c.deepen_past(k)),
                Box::new(a.deepen_past(k)),
                Box::new(b.deepen_past(k)),
            ),
            Expr::Concat(parts) => {
                Expr::Concat(parts.iter().map(|p| p.deepen_past(k)).collect())
            }
        }
    }

    /// Splits a conjunction into its top-level conjuncts. Both `&&` and `&`
    /// split, matching how guards are written in control code over 1-bit
    /// strobes. A non-conjunction is a single atom.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        self.collect_conjuncts(&mut out);
        out
    }

    fn collect_conjuncts<'a>(&'a self, out: &mut Vec<&'a Expr>) {
        match self {
            Expr::Binary(BinaryOp::LogicAnd, a, b) | Expr::Binary(BinaryOp::BitAnd, a, b) => {
                a.collect_conjuncts(out);
                b.collect_conjuncts(out);
            }
            other => out.push(other),
        }
    }

    /// Rebuilds a conjunction from conjuncts using `&&`. An empty list is
    /// the constant true.
    pub fn conjoin(parts: Vec<Expr>) -> Expr {
        let mut it = parts.into_iter();
        match it.next() {
            None => Expr::Const(Const::new(Some(1), 1)),
            Some(first) => it.fold(first, |acc, e| acc.and(e)),
        }
    }

    /// The `(signal, constant)` pair of an equality atom like
    /// `sig == 3'b101`, if the expression has that shape.
    pub fn as_eq_atom(&self) -> Option<(&str, Const)> {
        if let Expr::Binary(BinaryOp::Eq, a, b) = self {
            match (a.as_ref(), b.as_ref()) {
                (Expr::Ident(n), Expr::Const(c)) | (Expr::Const(c), Expr::Ident(n)) => {
                    return Some((n, *c));
                }
                _ => {}
            }
        }
        None
    }
}
