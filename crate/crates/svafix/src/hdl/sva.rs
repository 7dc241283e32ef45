//! Parser for the supported assertion subset: an optional label, optional
//! clocking event and disable clause, one implication, a finite delay
//! chain, and boolean antecedent/consequent expressions.

use crate::expr::{BinaryOp, Expr, SampledFn, UnaryOp};
use crate::hdl::lexer::{lex, Tok, Token};
use crate::hdl::parser::parse_number;
use crate::hdl::ParseError;
use crate::source::SourceMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClockEdge {
    Pos,
    Neg,
}

impl ClockEdge {
    pub fn keyword(self) -> &'static str {
        match self {
            ClockEdge::Pos => "posedge",
            ClockEdge::Neg => "negedge",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClockEvent {
    pub edge: ClockEdge,
    pub signal: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImplicationKind {
    /// `|->`: consequent window starts at the antecedent cycle.
    Overlapped,
    /// `|=>`: consequent window starts one cycle later.
    NonOverlapped,
}

impl ImplicationKind {
    pub fn symbol(self) -> &'static str {
        match self {
            ImplicationKind::Overlapped => "|->",
            ImplicationKind::NonOverlapped => "|=>",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SvaAssertion {
    pub name: Option<String>,
    pub clock: Option<ClockEvent>,
    pub disable: Option<Expr>,
    pub antecedent: Expr,
    pub implication: ImplicationKind,
    /// `##N` cycle counts between implication and consequent, in order.
    pub delays: Vec<u32>,
    pub consequent: Expr,
}

impl SvaAssertion {
    /// Cycles from the antecedent match to the consequent sample.
    pub fn total_delay(&self) -> u32 {
        let base: u32 = self.delays.iter().sum();
        match self.implication {
            ImplicationKind::Overlapped => base,
            ImplicationKind::NonOverlapped => base + 1,
        }
    }
}

/// Parses one `assert property (...)` statement or a bare property
/// expression. Every input token must belong to the assertion.
pub fn parse_assertion(text: &str) -> Result<SvaAssertion, ParseError> {
    let mut map = SourceMap::default();
    let file = map.add("<assertion>", text);
    let toks = lex(text, file).map_err(|e| e.locate(&map))?;
    let mut p = SvaParser {
        toks: &toks,
        pos: 0,
        file,
    };
    p.assertion().map_err(|e| e.locate(&map))
}

struct SvaParser<'a> {
    toks: &'a [Token],
    pos: usize,
    file: u32,
}

impl<'a> SvaParser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> &Token {
        let t = &self.toks[self.pos];
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::syntax(self.file, self.toks[self.pos].start, message)
    }

    fn unsupported(&self, feature: impl Into<String>) -> ParseError {
        ParseError::UnsupportedSvaFeature {
            feature: feature.into(),
        }
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!(
                "expected {}, found {}",
                want.describe(),
                self.peek().describe()
            )))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            other => Err(self.err(format!("expected `{}`, found {}", kw, other.describe()))),
        }
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.err(format!("expected identifier, found {}", other.describe()))),
        }
    }

    fn assertion(&mut self) -> Result<SvaAssertion, ParseError> {
        let name = if matches!(self.peek(), Tok::Ident(s) if s != "assert")
            && matches!(self.peek2(), Tok::Colon)
        {
            let n = self.ident()?;
            self.bump();
            Some(n)
        } else {
            None
        };
        let wrapped = self.at_kw("assert");
        if wrapped {
            self.bump();
            self.expect_kw("property")?;
            self.expect(Tok::LParen)?;
        }
        let mut a = self.property()?;
        a.name = name;
        if wrapped {
            self.expect(Tok::RParen)?;
        }
        if matches!(self.peek(), Tok::Semi) {
            self.bump();
        }
        match self.peek() {
            Tok::Eof => Ok(a),
            other => Err(self.err(format!(
                "trailing input after assertion: {}",
                other.describe()
            ))),
        }
    }

    fn property(&mut self) -> Result<SvaAssertion, ParseError> {
        let clock = if matches!(self.peek(), Tok::At) {
            self.bump();
            self.expect(Tok::LParen)?;
            let edge = if self.at_kw("posedge") {
                ClockEdge::Pos
            } else if self.at_kw("negedge") {
                ClockEdge::Neg
            } else {
                return Err(self.err(format!(
                    "expected `posedge` or `negedge`, found {}",
                    self.peek().describe()
                )));
            };
            self.bump();
            let signal = self.ident()?;
            self.expect(Tok::RParen)?;
            Some(ClockEvent { edge, signal })
        } else {
            None
        };
        let disable = if self.at_kw("disable") {
            self.bump();
            self.expect_kw("iff")?;
            self.expect(Tok::LParen)?;
            let e = self.expr(0)?;
            self.expect(Tok::RParen)?;
            Some(e)
        } else {
            None
        };
        let antecedent = self.expr(0)?;
        let implication = match self.peek() {
            Tok::OverlapImpl => ImplicationKind::Overlapped,
            Tok::NonOverlapImpl => ImplicationKind::NonOverlapped,
            Tok::DoubleHash => return Err(self.unsupported("delay before implication")),
            other => {
                return Err(self.err(format!(
                    "expected `|->` or `|=>`, found {}",
                    other.describe()
                )))
            }
        };
        self.bump();
        let mut delays = Vec::new();
        while matches!(self.peek(), Tok::DoubleHash) {
            self.bump();
            delays.push(self.delay_count()?);
        }
        let consequent = self.expr(0)?;
        if matches!(self.peek(), Tok::DoubleHash) {
            return Err(self.unsupported("sequence concatenation after consequent"));
        }
        Ok(SvaAssertion {
            name: None,
            clock,
            disable,
            antecedent,
            implication,
            delays,
            consequent,
        })
    }

    fn delay_count(&mut self) -> Result<u32, ParseError> {
        match self.peek().clone() {
            Tok::Number(text) => {
                self.bump();
                let c = parse_number(&text)
                    .map_err(|m| ParseError::syntax(self.file, self.toks[self.pos].start, m))?;
                u32::try_from(c.value).map_err(|_| self.err("delay count out of range"))
            }
            Tok::LBracket => Err(self.unsupported("delay range `##[m:n]`")),
            other => Err(self.err(format!(
                "expected delay count after `##`, found {}",
                other.describe()
            ))),
        }
    }

    // ---- boolean expressions (precedence climbing) ----

    fn expr(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                Tok::OrOr => BinaryOp::LogicOr,
                Tok::AndAnd => BinaryOp::LogicAnd,
                Tok::Pipe => BinaryOp::BitOr,
                Tok::Caret => BinaryOp::BitXor,
                Tok::Amp => BinaryOp::BitAnd,
                Tok::EqEq => BinaryOp::Eq,
                Tok::NotEq => BinaryOp::Ne,
                Tok::Lt => BinaryOp::Lt,
                Tok::NonBlocking => BinaryOp::Le,
                Tok::Gt => BinaryOp::Gt,
                Tok::Ge => BinaryOp::Ge,
                Tok::Shl => BinaryOp::Shl,
                Tok::Shr => BinaryOp::Shr,
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                Tok::Star => BinaryOp::Mul,
                Tok::Question => return Err(self.unsupported("ternary operator")),
                _ => return Ok(lhs),
            };
            let prec = op.precedence();
            if prec < min_prec {
                return Ok(lhs);
            }
            self.bump();
            let rhs = self.expr(prec + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary_expr(&mut self) -> Result<Expr, ParseError> {
        let op = match self.peek() {
            Tok::Not => Some(UnaryOp::LogicNot),
            Tok::Tilde => Some(UnaryOp::BitNot),
            Tok::Amp => Some(UnaryOp::ReduceAnd),
            Tok::Pipe => Some(UnaryOp::ReduceOr),
            Tok::Caret => Some(UnaryOp::ReduceXor),
            Tok::Minus => Some(UnaryOp::Neg),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let e = self.unary_expr()?;
            return Ok(Expr::Unary(op, Box::new(e)));
        }
        self.postfix_expr()
    }

    fn postfix_expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.primary_expr()?;
        while matches!(self.peek(), Tok::LBracket) {
            if matches!(self.peek2(), Tok::Star) {
                return Err(self.unsupported("repetition `[*n]`"));
            }
            self.bump();
            let hi = self.index_const()?;
            if matches!(self.peek(), Tok::Colon) {
                self.bump();
                let lo = self.index_const()?;
                self.expect(Tok::RBracket)?;
                e = Expr::Slice(Box::new(e), hi, lo);
            } else {
                self.expect(Tok::RBracket)?;
                e = Expr::Index(Box::new(e), hi);
            }
        }
        Ok(e)
    }

    fn index_const(&mut self) -> Result<u32, ParseError> {
        match self.peek().clone() {
            Tok::Number(text) => {
                self.bump();
                let c = parse_number(&text)
                    .map_err(|m| ParseError::syntax(self.file, self.toks[self.pos].start, m))?;
                u32::try_from(c.value).map_err(|_| self.err("index out of range"))
            }
            other => Err(self.err(format!(
                "expected constant index, found {}",
                other.describe()
            ))),
        }
    }

    fn primary_expr(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Number(text) => {
                self.bump();
                let c = parse_number(&text)
                    .map_err(|m| ParseError::syntax(self.file, self.toks[self.pos].start, m))?;
                Ok(Expr::Const(c))
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Expr::Ident(name))
            }
            Tok::SysIdent(name) => match name.as_str() {
                "$past" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let e = self.expr(0)?;
                    let depth = if matches!(self.peek(), Tok::Comma) {
                        self.bump();
                        self.index_const()?
                    } else {
                        1
                    };
                    self.expect(Tok::RParen)?;
                    if depth == 0 {
                        return Err(self.err("$past depth must be at least 1"));
                    }
                    Ok(Expr::Past(Box::new(e), depth))
                }
                "$rose" | "$fell" | "$stable" => {
                    let f = match name.as_str() {
                        "$rose" => SampledFn::Rose,
                        "$fell" => SampledFn::Fell,
                        _ => SampledFn::Stable,
                    };
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let e = self.expr(0)?;
                    self.expect(Tok::RParen)?;
                    Ok(Expr::Sampled(f, Box::new(e)))
                }
                other => Err(self.unsupported(other)),
            },
            Tok::LParen => {
                self.bump();
                let e = self.expr(0)?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::LBrace => Err(self.unsupported("concatenation")),
            other => Err(self.err(format!("expected expression, found {}", other.describe()))),
        }
    }
}
