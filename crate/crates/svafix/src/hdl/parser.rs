//! Recursive-descent parser for the RTL subset: module declarations,
//! wire/reg nets, parameters, continuous assigns, sequential and
//! combinational always-blocks with if/case, and module instances.
//!
//! Out-of-subset constructs (generate, functions, tasks, initial blocks,
//! memories, for loops) are reported as `UnsupportedConstruct`, never
//! silently dropped.

use crate::expr::{BinaryOp, Const, Expr, UnaryOp};
use crate::hdl::ast::*;
use crate::hdl::lexer::{lex, Tok, Token};
use crate::hdl::ParseError;
use crate::source::{SourceMap, Span};
use std::collections::{BTreeMap, BTreeSet};

/// Parses a design from `(path, text)` pairs and resolves every identifier.
pub fn parse_design(
    sources: &[(impl AsRef<str>, impl AsRef<str>)],
) -> Result<DesignAst, ParseError> {
    let mut map = SourceMap::default();
    let mut modules = Vec::new();
    for (path, text) in sources {
        let file = map.add(path.as_ref(), text.as_ref());
        let toks = lex(text.as_ref(), file).map_err(|e| e.locate(&map))?;
        let mut p = Parser::new(&toks, file, &map);
        loop {
            p.skip_semis();
            if p.at_eof() {
                break;
            }
            let m = p.module().map_err(|e| e.locate(&map))?;
            modules.push(m);
        }
    }
    let design = DesignAst {
        modules,
        sources: map,
    };
    resolve(&design)?;
    Ok(design)
}

/// Post-parse resolution: substitutes parameters into expressions, checks
/// that every referenced identifier is a declared port/net, and checks
/// instance port names against the instantiated module when it is present.
fn resolve(design: &DesignAst) -> Result<(), ParseError> {
    for m in &design.modules {
        let file = design.sources.file(m.span.file);
        let check_expr = |e: &Expr, span: Span| -> Result<(), ParseError> {
            for sig in e.signals() {
                if !m.is_declared(&sig) {
                    return Err(ParseError::UnresolvedIdentifier {
                        name: sig,
                        path: file.path.clone(),
                        line: span.line_start,
                    });
                }
            }
            Ok(())
        };
        let check_lvalue = |lv: &LValue, span: Span| -> Result<(), ParseError> {
            if !m.is_declared(&lv.signal) {
                return Err(ParseError::UnresolvedIdentifier {
                    name: lv.signal.clone(),
                    path: file.path.clone(),
                    line: span.line_start,
                });
            }
            Ok(())
        };
        for a in &m.assigns {
            check_lvalue(&a.target, a.span)?;
            check_expr(&a.rhs, a.span)?;
        }
        for blk in &m.always_blocks {
            if let Some(clk) = blk.sensitivity.clock() {
                if !m.is_declared(clk) {
                    return Err(ParseError::UnresolvedIdentifier {
                        name: clk.to_string(),
                        path: file.path.clone(),
                        line: blk.span.line_start,
                    });
                }
            }
            let mut guards = Vec::new();
            let mut err = None;
            visit_assignments(&blk.body, &mut guards, &mut |lv, rhs, _, gs, span| {
                if err.is_some() {
                    return;
                }
                if let Err(e) = check_lvalue(lv, span) {
                    err = Some(e);
                    return;
                }
                if let Err(e) = check_expr(rhs, span) {
                    err = Some(e);
                    return;
                }
                for g in gs {
                    if let Err(e) = check_expr(g, span) {
                        err = Some(e);
                        return;
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
        for inst in &m.instances {
            for (port, conn) in &inst.connections {
                check_expr(conn, inst.span)?;
                if let Some(child) = design.module(&inst.module) {
                    if !child.ports.iter().any(|p| &p.name == port) {
                        return Err(ParseError::UnresolvedIdentifier {
                            name: format!("{}.{}", inst.module, port),
                            path: file.path.clone(),
                            line: inst.span.line_start,
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

pub(crate) struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    file: u32,
    sources: &'a SourceMap,
    params: BTreeMap<String, u64>,
}

const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "generate", "endgenerate", "function", "endfunction", "task", "endtask", "initial", "for",
    "while", "repeat", "forever", "casex", "casez", "genvar", "integer", "real", "fork",
    "specify", "primitive",
];

impl<'a> Parser<'a> {
    pub(crate) fn new(toks: &'a [Token], file: u32, sources: &'a SourceMap) -> Self {
        Parser {
            toks,
            pos: 0,
            file,
            sources,
            params: BTreeMap::new(),
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn cur(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> &Token {
        let t = &self.toks[self.pos];
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub(crate) fn skip_semis(&mut self) {
        while matches!(self.peek(), Tok::Semi) {
            self.bump();
        }
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::syntax(self.file, self.cur().start, message)
    }

    fn expect(&mut self, want: Tok) -> Result<&Token, ParseError> {
        if *self.peek() == want {
            Ok(self.bump())
        } else {
            Err(self.err(format!(
                "expected {}, found {}",
                want.describe(),
                self.peek().describe()
            )))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<usize, ParseError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                let start = self.cur().start;
                self.bump();
                Ok(start)
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
                if UNSUPPORTED_KEYWORDS.contains(&s.as_str()) {
                    return Err(self.unsupported(&s));
                }
                self.bump();
                Ok(s)
            }
            other => Err(self.err(format!("expected identifier, found {}", other.describe()))),
        }
    }

    fn unsupported(&self, construct: &str) -> ParseError {
        let f = self.sources.file(self.file);
        ParseError::UnsupportedConstruct {
            construct: construct.to_string(),
            path: f.path.clone(),
            line: f.line_of(self.cur().start),
        }
    }

    fn span_from(&self, start: usize) -> Span {
        let end = if self.pos > 0 {
            self.toks[self.pos - 1].end
        } else {
            start
        };
        Span::new(self.file, start, end, self.sources.file(self.file))
    }

    // ---- module structure ----

    pub(crate) fn module(&mut self) -> Result<ModuleAst, ParseError> {
        let start = self.expect_kw("module")?;
        self.params.clear();
        let name = self.ident()?;
        let mut ports: Vec<Port> = Vec::new();
        let mut port_order: Vec<String> = Vec::new();
        if matches!(self.peek(), Tok::LParen) {
            self.bump();
            if !matches!(self.peek(), Tok::RParen) {
                loop {
                    match self.peek() {
                        Tok::Ident(s)
                            if matches!(s.as_str(), "input" | "output" | "inout") =>
                        {
                            // ANSI port declaration
                            let decls = self.port_decl()?;
                            for p in decls {
                                port_order.push(p.name.clone());
                                ports.push(p);
                            }
                        }
                        Tok::Ident(_) => {
                            // non-ANSI: bare port name, direction declared in body
                            port_order.push(self.ident()?);
                        }
                        other => {
                            return Err(self.err(format!(
                                "expected port declaration, found {}",
                                other.describe()
                            )))
                        }
                    }
                    if matches!(self.peek(), Tok::Comma) {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen)?;
        }
        self.expect(Tok::Semi)?;

        let mut nets = Vec::new();
        let mut assigns = Vec::new();
        let mut always_blocks = Vec::new();
        let mut instances = Vec::new();
        loop {
            self.skip_semis();
            match self.peek().clone() {
                Tok::Ident(kw) if kw == "endmodule" => {
                    self.bump();
                    break;
                }
                Tok::Ident(kw) if matches!(kw.as_str(), "input" | "output" | "inout") => {
                    // non-ANSI body port declaration
                    let decls = self.port_decl()?;
                    for p in decls {
                        if !port_order.contains(&p.name) {
                            return Err(self.err(format!(
                                "port `{}` declared in body but not listed in module header",
                                p.name
                            )));
                        }
                        ports.push(p);
                    }
                    self.expect(Tok::Semi)?;
                }
                Tok::Ident(kw) if kw == "wire" || kw == "reg" => {
                    let kind = if kw == "wire" { NetKind::Wire } else { NetKind::Reg };
                    self.bump();
                    let width = self.opt_range()?;
                    loop {
                        let n = self.ident()?;
                        if matches!(self.peek(), Tok::LBracket) {
                            return Err(self.unsupported("memory (array declaration)"));
                        }
                        nets.push(Net {
                            name: n,
                            kind,
                            width,
                        });
                        if matches!(self.peek(), Tok::Comma) {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    self.expect(Tok::Semi)?;
                }
                Tok::Ident(kw) if kw == "parameter" || kw == "localparam" => {
                    self.bump();
                    loop {
                        let n = self.ident()?;
                        self.expect(Tok::Assign)?;
                        let v = self.const_expr()?;
                        self.params.insert(n, v);
                        if matches!(self.peek(), Tok::Comma) {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    self.expect(Tok::Semi)?;
                }
                Tok::Ident(kw) if kw == "assign" => {
                    let astart = self.cur().start;
                    self.bump();
                    let target = self.lvalue()?;
                    self.expect(Tok::Assign)?;
                    let rhs = self.expr(0)?;
                    self.expect(Tok::Semi)?;
                    assigns.push(ContAssign {
                        target,
                        rhs,
                        span: self.span_from(astart),
                    });
                }
                Tok::Ident(kw) if kw == "always" => {
                    always_blocks.push(self.always_block()?);
                }
                Tok::Ident(kw) if UNSUPPORTED_KEYWORDS.contains(&kw.as_str()) => {
                    return Err(self.unsupported(&kw));
                }
                Tok::Ident(_) if matches!(self.peek2(), Tok::Ident(_)) => {
                    // module instantiation: `child u0 (...);`
                    let istart = self.cur().start;
                    let module = self.ident()?;
                    let iname = self.ident()?;
                    self.expect(Tok::LParen)?;
                    let mut connections = Vec::new();
                    if !matches!(self.peek(), Tok::RParen) {
                        loop {
                            self.expect(Tok::Dot)?;
                            let port = self.ident()?;
                            self.expect(Tok::LParen)?;
                            let conn = self.expr(0)?;
                            self.expect(Tok::RParen)?;
                            connections.push((port, conn));
                            if matches!(self.peek(), Tok::Comma) {
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen)?;
                    self.expect(Tok::Semi)?;
                    instances.push(Instance {
                        module,
                        name: iname,
                        connections,
                        span: self.span_from(istart),
                    });
                }
                other => {
                    return Err(self.err(format!(
                        "expected module item, found {}",
                        other.describe()
                    )))
                }
            }
        }
        let span = self.span_from(start);
        // params were substituted during parsing; keep the table for reference
        let parameters = self.params.iter().map(|(k, v)| (k.clone(), *v)).collect();
        let m = ModuleAst {
            name,
            ports,
            nets,
            parameters,
            assigns,
            always_blocks,
            instances,
            span,
        };
        // every header-listed port must have a direction by now
        let declared: BTreeSet<&str> = m.ports.iter().map(|p| p.name.as_str()).collect();
        for p in &port_order {
            if !declared.contains(p.as_str()) {
                return Err(ParseError::UnresolvedIdentifier {
                    name: p.clone(),
                    path: self.sources.file(self.file).path.clone(),
                    line: span.line_start,
                });
            }
        }
        Ok(m)
    }

    fn port_decl(&mut self) -> Result<Vec<Port>, ParseError> {
        let dir = match self.ident()?.as_str() {
            "input" => PortDir::Input,
            "output" => PortDir::Output,
            "inout" => PortDir::Inout,
            _ => unreachable!(),
        };
        // optional `wire` / `reg`
        if self.at_kw("wire") || self.at_kw("reg") {
            self.bump();
        }
        let width = self.opt_range()?;
        let mut out = Vec::new();
        loop {
            let name = self.ident()?;
            out.push(Port {
                name,
                dir,
                width,
            });
            // In ANSI lists a comma may introduce either another name for
            // this declaration or a new directioned declaration; the caller
            // handles the latter, so stop before a direction keyword.
            if matches!(self.peek(), Tok::Comma)
                && matches!(self.peek2(), Tok::Ident(s) if !matches!(s.as_str(), "input" | "output" | "inout"))
            {
                self.bump();
            } else {
                break;
            }
        }
        Ok(out)
    }

    fn opt_range(&mut self) -> Result<u32, ParseError> {
        if !matches!(self.peek(), Tok::LBracket) {
            return Ok(1);
        }
        self.bump();
        let msb = self.const_expr()?;
        self.expect(Tok::Colon)?;
        let lsb = self.const_expr()?;
        self.expect(Tok::RBracket)?;
        if lsb > msb {
            return Err(self.err(format!("descending range [{}:{}] required", msb, lsb)));
        }
        let width = msb - lsb + 1;
        if width > 64 {
            return Err(self.unsupported("nets wider than 64 bits"));
        }
        Ok(width as u32)
    }

    /// Constant expression evaluation for ranges and parameter values:
    /// numbers, parameter references, + - * and parentheses.
    fn const_expr(&mut self) -> Result<u64, ParseError> {
        let mut acc = self.const_term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = acc.wrapping_add(self.const_term()?);
                }
                Tok::Minus => {
                    self.bump();
                    acc = acc.wrapping_sub(self.const_term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn const_term(&mut self) -> Result<u64, ParseError> {
        let mut acc = self.const_atom()?;
        while matches!(self.peek(), Tok::Star) {
            self.bump();
            acc = acc.wrapping_mul(self.const_atom()?);
        }
        Ok(acc)
    }

    fn const_atom(&mut self) -> Result<u64, ParseError> {
        match self.peek().clone() {
            Tok::Number(text) => {
                self.bump();
                let c = parse_number(&text)
                    .map_err(|m| ParseError::syntax(self.file, self.cur().start, m))?;
                Ok(c.value)
            }
            Tok::Ident(name) => {
                if let Some(v) = self.params.get(&name).copied() {
                    self.bump();
                    Ok(v)
                } else {
                    Err(self.err(format!("`{}` is not a parameter", name)))
                }
            }
            Tok::LParen => {
                self.bump();
                let v = self.const_expr()?;
                self.expect(Tok::RParen)?;
                Ok(v)
            }
            other => Err(self.err(format!(
                "expected constant expression, found {}",
                other.describe()
            ))),
        }
    }

    fn always_block(&mut self) -> Result<AlwaysBlock, ParseError> {
        let start = self.expect_kw("always")?;
        self.expect(Tok::At)?;
        let sensitivity = if matches!(self.peek(), Tok::Star) {
            self.bump();
            Sensitivity::Comb
        } else {
            self.expect(Tok::LParen)?;
            let s = if matches!(self.peek(), Tok::Star) {
                self.bump();
                Sensitivity::Comb
            } else if self.at_kw("posedge") || self.at_kw("negedge") {
                let pos = self.at_kw("posedge");
                self.bump();
                let clk = self.ident()?;
                if self.at_kw("or") {
                    return Err(self.unsupported("multiple edges in sensitivity list"));
                }
                if pos {
                    Sensitivity::Posedge(clk)
                } else {
                    Sensitivity::Negedge(clk)
                }
            } else {
                // level-sensitive list `@(a or b or c)` is combinational
                self.ident()?;
                while self.at_kw("or") || matches!(self.peek(), Tok::Comma) {
                    self.bump();
                    self.ident()?;
                }
                Sensitivity::Comb
            };
            self.expect(Tok::RParen)?;
            s
        };
        let body = self.stmt_block()?;
        Ok(AlwaysBlock {
            sensitivity,
            body,
            span: self.span_from(start),
        })
    }

    /// A single statement or a begin/end block, returned as a list.
    fn stmt_block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        if self.at_kw("begin") {
            self.bump();
            let mut stmts = Vec::new();
            while !self.at_kw("end") {
                if self.at_eof() {
                    return Err(self.err("unterminated begin block"));
                }
                stmts.push(self.stmt()?);
            }
            self.bump();
            Ok(stmts)
        } else {
            Ok(vec![self.stmt()?])
        }
    }

    pub(crate) fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let start = self.cur().start;
        match self.peek().clone() {
            Tok::Semi => {
                self.bump();
                Ok(Stmt::Null {
                    span: self.span_from(start),
                })
            }
            Tok::Ident(kw) if kw == "if" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.expr(0)?;
                self.expect(Tok::RParen)?;
                let then_body = self.stmt_block()?;
                let else_body = if self.at_kw("else") {
                    self.bump();
                    self.stmt_block()?
                } else {
                    Vec::new()
                };
                Ok(Stmt::If {
                    cond,
                    then_body,
                    else_body,
                    span: self.span_from(start),
                })
            }
            Tok::Ident(kw) if kw == "case" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let selector = self.expr(0)?;
                self.expect(Tok::RParen)?;
                let mut arms = Vec::new();
                let mut default = Vec::new();
                loop {
                    if self.at_kw("endcase") {
                        self.bump();
                        break;
                    }
                    if self.at_eof() {
                        return Err(self.err("unterminated case statement"));
                    }
                    if self.at_kw("default") {
                        self.bump();
                        if matches!(self.peek(), Tok::Colon) {
                            self.bump();
                        }
                        default = self.stmt_block()?;
                        continue;
                    }
                    let astart = self.cur().start;
                    let mut labels = vec![self.expr(0)?];
                    while matches!(self.peek(), Tok::Comma) {
                        self.bump();
                        labels.push(self.expr(0)?);
                    }
                    self.expect(Tok::Colon)?;
                    let body = self.stmt_block()?;
                    arms.push(CaseArm {
                        labels,
                        body,
                        span: self.span_from(astart),
                    });
                }
                Ok(Stmt::Case {
                    selector,
                    arms,
                    default,
                    span: self.span_from(start),
                })
            }
            Tok::Ident(kw) if UNSUPPORTED_KEYWORDS.contains(&kw.as_str()) => {
                Err(self.unsupported(&kw))
            }
            Tok::Ident(_) => {
                let target = self.lvalue()?;
                let blocking = match self.peek() {
                    Tok::Assign => true,
                    Tok::NonBlocking => false,
                    other => {
                        return Err(self.err(format!(
                            "expected `=` or `<=`, found {}",
                            other.describe()
                        )))
                    }
                };
                self.bump();
                let rhs = self.expr(0)?;
                self.expect(Tok::Semi)?;
                Ok(Stmt::Assign {
                    target,
                    rhs,
                    blocking,
                    span: self.span_from(start),
                })
            }
            other => Err(self.err(format!("expected statement, found {}", other.describe()))),
        }
    }

    fn lvalue(&mut self) -> Result<LValue, ParseError> {
        let signal = self.ident()?;
        let select = if matches!(self.peek(), Tok::LBracket) {
            self.bump();
            let hi = self.const_expr()? as u32;
            let sel = if matches!(self.peek(), Tok::Colon) {
                self.bump();
                let lo = self.const_expr()? as u32;
                Select::Part(hi, lo)
            } else {
                Select::Bit(hi)
            };
            self.expect(Tok::RBracket)?;
            Some(sel)
        } else {
            None
        };
        Ok(LValue { signal, select })
    }

    // ---- expressions (precedence climbing) ----

    pub(crate) fn expr(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
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
                Tok::Question => {
                    if min_prec > 0 {
                        return Ok(lhs);
                    }
                    self.bump();
                    let then_e = self.expr(0)?;
                    self.expect(Tok::Colon)?;
                    let else_e = self.expr(0)?;
                    return Ok(Expr::Ternary(
                        Box::new(lhs),
                        Box::new(then_e),
                        Box::new(else_e),
                    ));
                }
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
            self.bump();
            let hi = self.const_expr()? as u32;
            if matches!(self.peek(), Tok::Colon) {
                self.bump();
                let lo = self.const_expr()? as u32;
                self.expect(Tok::RBracket)?;
                e = Expr::Slice(Box::new(e), hi, lo);
            } else {
                self.expect(Tok::RBracket)?;
                e = Expr::Index(Box::new(e), hi);
            }
        }
        Ok(e)
    }

    fn primary_expr(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Number(text) => {
                self.bump();
                let c = parse_number(&text)
                    .map_err(|m| ParseError::syntax(self.file, self.cur().start, m))?;
                Ok(Expr::Const(c))
            }
            Tok::Ident(name) => {
                if UNSUPPORTED_KEYWORDS.contains(&name.as_str()) {
                    return Err(self.unsupported(&name));
                }
                self.bump();
                // single-level parameter substitution happens here
                if let Some(v) = self.params.get(&name).copied() {
                    Ok(Expr::Const(Const::unsized_dec(v)))
                } else {
                    Ok(Expr::Ident(name))
                }
            }
            Tok::SysIdent(name) => Err(self.unsupported(&name)),
            Tok::LParen => {
                self.bump();
                let e = self.expr(0)?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::LBrace => {
                self.bump();
                let mut parts = vec![self.expr(0)?];
                while matches!(self.peek(), Tok::Comma) {
                    self.bump();
                    parts.push(self.expr(0)?);
                }
                self.expect(Tok::RBrace)?;
                if parts.len() == 1 {
                    // `{N{x}}` replication would lex differently; a single
                    // element brace is just the element
                    Ok(parts.pop().unwrap())
                } else {
                    Ok(Expr::Concat(parts))
                }
            }
            other => Err(self.err(format!("expected expression, found {}", other.describe()))),
        }
    }
}

/// Parses a Verilog number literal into a normalized constant.
/// `x`/`z` digits are rejected: the AST is 2-state by construction.
pub(crate) fn parse_number(text: &str) -> Result<Const, String> {
    let clean: String = text.chars().filter(|c| *c != '_').collect();
    if let Some(q) = clean.find('\'') {
        let width: Option<u32> = if q == 0 {
            None
        } else {
            Some(
                clean[..q]
                    .parse()
                    .map_err(|_| format!("bad width in `{}`", text))?,
            )
        };
        let rest = &clean[q + 1..];
        let (base, digits) = match rest.chars().next() {
            Some('b') | Some('B') => (2, &rest[1..]),
            Some('o') | Some('O') => (8, &rest[1..]),
            Some('d') | Some('D') => (10, &rest[1..]),
            Some('h') | Some('H') => (16, &rest[1..]),
            _ => (10, rest),
        };
        if digits.is_empty() {
            return Err(format!("missing digits in `{}`", text));
        }
        if digits.chars().any(|c| matches!(c, 'x' | 'X' | 'z' | 'Z' | '?')) {
            return Err(format!("x/z digits not supported in `{}`", text));
        }
        let value =
            u64::from_str_radix(digits, base).map_err(|_| format!("bad digits in `{}`", text))?;
        if let Some(w) = width {
            if w == 0 || w > 64 {
                return Err(format!("width {} out of range in `{}`", w, text));
            }
        }
        Ok(Const::new(width, value))
    } else {
        let value: u64 = clean
            .parse()
            .map_err(|_| format!("bad number `{}`", text))?;
        Ok(Const::unsized_dec(value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_one(src: &str) -> DesignAst {
        parse_design(&[("test.v", src)]).expect("parse")
    }

    #[test]
    fn minimal_sequential_module() {
        let d = parse_one(
            "module m(input a, input clk, output reg q); always @(posedge clk) q <= a; endmodule",
        );
        assert_eq!(d.modules.len(), 1);
        let m = &d.modules[0];
        assert_eq!(m.always_blocks.len(), 1);
        assert_eq!(
            m.always_blocks[0].sensitivity,
            Sensitivity::Posedge("clk".into())
        );
        match &m.always_blocks[0].body[0] {
            Stmt::Assign {
                target,
                rhs,
                blocking,
                ..
            } => {
                assert_eq!(target.signal, "q");
                assert_eq!(*rhs, Expr::ident("a"));
                assert!(!*blocking);
            }
            other => panic!("expected assignment, got {:?}", other),
        }
    }

    #[test]
    fn undeclared_net_is_unresolved() {
        let err = parse_design(&[(
            "test.v",
            "module m(input a, output w); assign w = a & ghost; endmodule",
        )])
        .unwrap_err();
        match err {
            ParseError::UnresolvedIdentifier { name, .. } => assert_eq!(name, "ghost"),
            other => panic!("expected UnresolvedIdentifier, got {:?}", other),
        }
    }

    #[test]
    fn unsupported_construct_reported() {
        let err = parse_design(&[(
            "test.v",
            "module m(input a); initial a = 0; endmodule",
        )])
        .unwrap_err();
        match err {
            ParseError::UnsupportedConstruct { construct, .. } => {
                assert_eq!(construct, "initial")
            }
            other => panic!("expected UnsupportedConstruct, got {:?}", other),
        }
    }

    #[test]
    fn case_and_if_nesting() {
        let d = parse_one(
            "module m(input clk, input [1:0] sel, input p, input q, input [7:0] a, output reg [7:0] y);
               always @(posedge clk)
                 if (p)
                   if (q) begin
                     case (sel)
                       2'b00: y <= a;
                       2'b01, 2'b10: y <= 8'hFF;
                       default: y <= 8'h00;
                     endcase
                   end
               endmodule",
        );
        let m = &d.modules[0];
        let mut guard_sets = Vec::new();
        let mut guards = Vec::new();
        visit_assignments(&m.always_blocks[0].body, &mut guards, &mut |lv, _, _, gs, _| {
            guard_sets.push((lv.signal.clone(), gs.len()));
        });
        // three assignments: arm 00 (p, q, sel==00), arm 01/10, default (negations)
        assert_eq!(guard_sets[0], ("y".to_string(), 3));
        assert_eq!(guard_sets[1], ("y".to_string(), 3));
        // default pushes one != per labeled value: p, q, and 3 exclusions
        assert_eq!(guard_sets[2], ("y".to_string(), 5));
    }

    #[test]
    fn parameters_substitute_into_ranges_and_exprs() {
        let d = parse_one(
            "module m(input clk); parameter W = 8; reg [W-1:0] r; always @(posedge clk) r <= W; endmodule",
        );
        let m = &d.modules[0];
        assert_eq!(m.nets[0].width, 8);
        match &m.always_blocks[0].body[0] {
            Stmt::Assign { rhs, .. } => assert_eq!(*rhs, Expr::Const(Const::unsized_dec(8))),
            _ => panic!(),
        }
    }

    #[test]
    fn non_ansi_ports() {
        let d = parse_one(
            "module m(a, y); input a; output y; assign y = ~a; endmodule",
        );
        let m = &d.modules[0];
        assert_eq!(m.ports.len(), 2);
        assert_eq!(m.ports[0].dir, PortDir::Input);
        assert_eq!(m.ports[1].dir, PortDir::Output);
    }

    #[test]
    fn instance_with_named_connections() {
        let d = parse_one(
            "module leaf(input a, output y); assign y = ~a; endmodule
             module top(input x, output z); wire t; leaf u0 (.a(x), .y(t)); assign z = t; endmodule",
        );
        let top = d.module("top").unwrap();
        assert_eq!(top.instances.len(), 1);
        assert_eq!(top.instances[0].connections.len(), 2);
        assert_eq!(d.top_module().name, "top");
    }

    #[test]
    fn instance_bad_port_name() {
        let err = parse_design(&[(
            "t.v",
            "module leaf(input a, output y); assign y = a; endmodule
             module top(input x, output z); leaf u0 (.nope(x), .y(z)); endmodule",
        )])
        .unwrap_err();
        assert!(matches!(err, ParseError::UnresolvedIdentifier { .. }));
    }

    #[test]
    fn sibling_spans_do_not_overlap() {
        let src = "module m(input clk, input a, input b, output reg q, output w);
  assign w = a & b;
  always @(posedge clk) q <= a;
endmodule";
        let d = parse_one(src);
        let m = &d.modules[0];
        let s1 = m.assigns[0].span;
        let s2 = m.always_blocks[0].span;
        assert!(s1.end <= s2.start || s2.end <= s1.start);
        assert!(m.span.contains(s1) && m.span.contains(s2));
    }

    #[test]
    fn number_forms() {
        assert_eq!(parse_number("3'b101").unwrap(), Const::new(Some(3), 5));
        assert_eq!(parse_number("3'd4").unwrap(), Const::new(Some(3), 4));
        assert_eq!(parse_number("8'hFF").unwrap(), Const::new(Some(8), 255));
        assert_eq!(parse_number("42").unwrap(), Const::unsized_dec(42));
        assert!(parse_number("4'bxx01").is_err());
    }
}
