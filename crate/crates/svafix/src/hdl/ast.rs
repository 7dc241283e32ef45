//! AST for the synthesizable RTL subset: modules, nets, continuous
//! assigns, always-blocks with if/case statements, and module instances.

use crate::expr::Expr;
use crate::source::{SourceMap, Span};
use serde::Serialize;
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PortDir {
    Input,
    Output,
    Inout,
}

#[derive(Debug, Clone, Serialize)]
pub struct Port {
    pub name: String,
    pub dir: PortDir,
    pub width: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NetKind {
    Wire,
    Reg,
}

#[derive(Debug, Clone, Serialize)]
pub struct Net {
    pub name: String,
    pub kind: NetKind,
    pub width: u32,
}

/// Sensitivity of an always-block: one clock edge, or combinational.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sensitivity {
    Posedge(String),
    Negedge(String),
    Comb,
}

impl Sensitivity {
    pub fn is_sequential(&self) -> bool {
        !matches!(self, Sensitivity::Comb)
    }

    pub fn clock(&self) -> Option<&str> {
        match self {
            Sensitivity::Posedge(c) | Sensitivity::Negedge(c) => Some(c),
            Sensitivity::Comb => None,
        }
    }
}

/// Assignment target: a signal, optionally a bit- or part-select of it.
/// Selects keep the whole vector as the dependence target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LValue {
    pub signal: String,
    pub select: Option<Select>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Select {
    Bit(u32),
    Part(u32, u32),
}

#[derive(Debug, Clone)]
pub enum Stmt {
    Assign {
        target: LValue,
        rhs: Expr,
        blocking: bool,
        span: Span,
    },
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Vec<Stmt>,
        span: Span,
    },
    Case {
        selector: Expr,
        arms: Vec<CaseArm>,
        default: Vec<Stmt>,
        span: Span,
    },
    /// Empty statement `;`.
    Null { span: Span },
}

impl Stmt {
    pub fn span(&self) -> Span {
        match self {
            Stmt::Assign { span, .. }
            | Stmt::If { span, .. }
            | Stmt::Case { span, .. }
            | Stmt::Null { span } => *span,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CaseArm {
    pub labels: Vec<Expr>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct ContAssign {
    pub target: LValue,
    pub rhs: Expr,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct AlwaysBlock {
    pub sensitivity: Sensitivity,
    pub body: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub module: String,
    pub name: String,
    /// Named connections `.port(expr)`.
    pub connections: Vec<(String, Expr)>,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct ModuleAst {
    pub name: String,
    pub ports: Vec<Port>,
    pub nets: Vec<Net>,
    pub parameters: Vec<(String, u64)>,
    pub assigns: Vec<ContAssign>,
    pub always_blocks: Vec<AlwaysBlock>,
    pub instances: Vec<Instance>,
    pub span: Span,
}

impl ModuleAst {
    /// Width of a declared port or net; `None` if undeclared.
    pub fn width_of(&self, name: &str) -> Option<u32> {
        self.ports
            .iter()
            .find(|p| p.name == name)
            .map(|p| p.width)
            .or_else(|| self.nets.iter().find(|n| n.name == name).map(|n| n.width))
    }

    pub fn is_declared(&self, name: &str) -> bool {
        self.width_of(name).is_some()
    }

    /// Declared signal names in declaration order (ports then nets, deduped).
    pub fn declared_signals(&self) -> Vec<(String, u32)> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for p in &self.ports {
            if seen.insert(p.name.clone()) {
                out.push((p.name.clone(), p.width));
            }
        }
        for n in &self.nets {
            if seen.insert(n.name.clone()) {
                out.push((n.name.clone(), n.width));
            }
        }
        out
    }
}

/// A parsed design: all modules plus the sources they came from.
#[derive(Debug, Clone)]
pub struct DesignAst {
    pub modules: Vec<ModuleAst>,
    pub sources: SourceMap,
}

impl DesignAst {
    pub fn module(&self, name: &str) -> Option<&ModuleAst> {
        self.modules.iter().find(|m| m.name == name)
    }

    /// The top module: not instantiated by any other module. Falls back to
    /// the first module when the design is a single module or fully cyclic.
    pub fn top_module(&self) -> &ModuleAst {
        let instantiated: BTreeSet<&str> = self
            .modules
            .iter()
            .flat_map(|m| m.instances.iter().map(|i| i.module.as_str()))
            .collect();
        self.modules
            .iter()
            .find(|m| !instantiated.contains(m.name.as_str()))
            .unwrap_or(&self.modules[0])
    }
}

/// Walks statements depth-first, handing each assignment to `f` together
/// with the stack of control predicates guarding it. If-else pushes the
/// condition (negated on the else branch); case arms push
/// `selector == label` (label equalities are OR-combined within one arm,
/// and the default arm pushes the negation of every labeled value).
pub fn visit_assignments<F>(stmts: &[Stmt], guards: &mut Vec<Expr>, f: &mut F)
where
    F: FnMut(&LValue, &Expr, bool, &[Expr], Span),
{
    use crate::expr::BinaryOp;
    for s in stmts {
        match s {
            Stmt::Assign {
                target,
                rhs,
                blocking,
                span,
            } => f(target, rhs, *blocking, guards, *span),
            Stmt::If {
                cond,
                then_body,
                else_body,
                ..
            } => {
                guards.push(cond.clone());
                visit_assignments(then_body, guards, f);
                guards.pop();
                if !else_body.is_empty() {
                    guards.push(cond.clone().not());
                    visit_assignments(else_body, guards, f);
                    guards.pop();
                }
            }
            Stmt::Case {
                selector,
                arms,
                default,
                ..
            } => {
                for arm in arms {
                    let mut eqs = arm
                        .labels
                        .iter()
                        .map(|l| selector.clone().eq(l.clone()));
                    let first = eqs.next().expect("case arm has at least one label");
                    let pred = eqs.fold(first, |acc, e| {
                        Expr::Binary(BinaryOp::LogicOr, Box::new(acc), Box::new(e))
                    });
                    guards.push(pred);
                    visit_assignments(&arm.body, guards, f);
                    guards.pop();
                }
                if !default.is_empty() {
                    let mut pushed = 0;
                    for arm in arms {
                        for l in &arm.labels {
                            guards.push(Expr::Binary(
                                BinaryOp::Ne,
                                Box::new(selector.clone()),
                                Box::new(l.clone()),
                            ));
                            pushed += 1;
                        }
                    }
                    visit_assignments(default, guards, f);
                    for _ in 0..pushed {
                        guards.pop();
                    }
                }
            }
            Stmt::Null { .. } => {}
        }
    }
}
