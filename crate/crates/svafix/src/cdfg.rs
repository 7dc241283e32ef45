//! Signal-level control/data flow graph. One node per signal; edges record
//! which signals feed which, whether through data or control, and whether a
//! register stage sits in between. BAR and coverage queries run on top.

use crate::expr::Expr;
use crate::hdl::ast::visit_assignments;
use crate::hdl::ast::{DesignAst, ModuleAst, PortDir};
use crate::source::Span;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

/// Simple-path DFS in `sequential_depth` stops exploring once a path has
/// accumulated this many register stages.
pub const DEFAULT_SEQ_PATH_CAP: u32 = 8;

#[derive(Debug, Error)]
pub enum CdfgError {
    #[error("combinational loop: {}", cycle.join(" -> "))]
    CombinationalLoop { cycle: Vec<String> },
    #[error("unknown signal `{name}`")]
    UnknownSignal { name: String },
    #[error("recursive instantiation of module `{module}`")]
    RecursiveInstantiation { module: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Data,
    Control,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    Combinational,
    Sequential,
}

#[derive(Debug, Clone)]
pub struct CdfgNode {
    pub name: String,
    pub width: u32,
}

#[derive(Debug, Clone)]
pub struct CdfgEdge {
    pub src: usize,
    pub dst: usize,
    pub kind: EdgeKind,
    pub timing: Timing,
    /// Assignment or guard that induced this edge.
    pub span: Span,
}

/// One assignment to a target together with the conjunction of control
/// predicates on the path to it. Case-item guards are expanded to
/// `selector == label` equalities.
#[derive(Debug, Clone)]
pub struct GuardedAssignment {
    pub target: String,
    pub rhs: Expr,
    pub guard: Vec<Expr>,
    pub timing: Timing,
    pub span: Span,
}

impl GuardedAssignment {
    pub fn guard_expr(&self) -> Expr {
        Expr::conjoin(self.guard.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Backward,
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DepthRange {
    pub min: u32,
    pub max: u32,
}

#[derive(Debug, Clone)]
pub struct DesignCdfg {
    nodes: Vec<CdfgNode>,
    edges: Vec<CdfgEdge>,
    index: BTreeMap<String, usize>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    /// All guarded assignments in source order across the flattened design.
    assigns: Vec<GuardedAssignment>,
}

impl DesignCdfg {
    pub fn nodes(&self) -> &[CdfgNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[CdfgEdge] {
        &self.edges
    }

    pub fn assignments(&self) -> &[GuardedAssignment] {
        &self.assigns
    }

    pub fn node_id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn node(&self, name: &str) -> Result<usize, CdfgError> {
        self.node_id(name).ok_or_else(|| CdfgError::UnknownSignal {
            name: name.to_string(),
        })
    }

    pub fn width_of(&self, name: &str) -> Option<u32> {
        self.node_id(name).map(|i| self.nodes[i].width)
    }
}

pub fn build_cdfg(ast: &DesignAst) -> Result<DesignCdfg, CdfgError> {
    let mut b = Builder {
        design: ast,
        nodes: Vec::new(),
        edges: Vec::new(),
        index: BTreeMap::new(),
        assigns: Vec::new(),
    };
    let top = ast.top_module();
    let mut stack = vec![top.name.clone()];
    b.add_module(top, "", &mut stack)?;
    let mut out_edges = vec![Vec::new(); b.nodes.len()];
    let mut in_edges = vec![Vec::new(); b.nodes.len()];
    for (i, e) in b.edges.iter().enumerate() {
        out_edges[e.src].push(i);
        in_edges[e.dst].push(i);
    }
    let g = DesignCdfg {
        nodes: b.nodes,
        edges: b.edges,
        index: b.index,
        out_edges,
        in_edges,
        assigns: b.assigns,
    };
    if let Some(cycle) = combinational_cycle(&g) {
        return Err(CdfgError::CombinationalLoop { cycle });
    }
    Ok(g)
}

struct Builder<'a> {
    design: &'a DesignAst,
    nodes: Vec<CdfgNode>,
    edges: Vec<CdfgEdge>,
    index: BTreeMap<String, usize>,
    assigns: Vec<GuardedAssignment>,
}

impl<'a> Builder<'a> {
    fn intern(&mut self, name: &str, width: u32) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.nodes.len();
        self.nodes.push(CdfgNode {
            name: name.to_string(),
            width,
        });
        self.index.insert(name.to_string(), i);
        i
    }

    fn edge(&mut self, src: usize, dst: usize, kind: EdgeKind, timing: Timing, span: Span) {
        self.edges.push(CdfgEdge {
            src,
            dst,
            kind,
            timing,
            span,
        });
    }

    fn add_module(
        &mut self,
        m: &ModuleAst,
        prefix: &str,
        stack: &mut Vec<String>,
    ) -> Result<(), CdfgError> {
        let qual = |n: &str| format!("{}{}", prefix, n);
        for p in &m.ports {
            self.intern(&qual(&p.name), p.width);
        }
        for n in &m.nets {
            self.intern(&qual(&n.name), n.width);
        }

        let record = |b: &mut Self, target: &str, rhs: &Expr, guard: &[Expr], timing: Timing, span: Span| {
            let dst = b.index[&qual(target)];
            for sig in rhs.signals() {
                let src = b.index[&qual(&sig)];
                b.edge(src, dst, EdgeKind::Data, timing, span);
            }
            for g in guard {
                for sig in g.signals() {
                    let src = b.index[&qual(&sig)];
                    b.edge(src, dst, EdgeKind::Control, timing, span);
                }
            }
            let mut q = |e: &Expr| e.map_idents(&mut |n| qual(n));
            b.assigns.push(GuardedAssignment {
                target: qual(target),
                rhs: q(rhs),
                guard: guard.iter().map(&mut q).collect(),
                timing,
                span,
            });
        };

        for a in &m.assigns {
            record(self, &a.target.signal, &a.rhs, &[], Timing::Combinational, a.span);
        }
        for blk in &m.always_blocks {
            let clocked = blk.sensitivity.is_sequential();
            let mut guards = Vec::new();
            visit_assignments(&blk.body, &mut guards, &mut |lv, rhs, blocking, gs, span| {
                let timing = if clocked && !blocking {
                    Timing::Sequential
                } else {
                    Timing::Combinational
                };
                record(self, &lv.signal, rhs, gs, timing, span);
            });
        }

        for inst in &m.instances {
            let child = match self.design.module(&inst.module) {
                Some(c) => c,
                None => {
                    log::warn!(
                        "instance `{}` references unknown module `{}`; treated as a black box",
                        inst.name,
                        inst.module
                    );
                    continue;
                }
            };
            if stack.contains(&inst.module) {
                return Err(CdfgError::RecursiveInstantiation {
                    module: inst.module.clone(),
                });
            }
            let child_prefix = format!("{}{}.", prefix, inst.name);
            stack.push(inst.module.clone());
            self.add_module(child, &child_prefix, stack)?;
            stack.pop();
            for (port, conn) in &inst.connections {
                let p = child
                    .ports
                    .iter()
                    .find(|p| &p.name == port)
                    .expect("connection checked during resolve");
                let port_node = self.index[&format!("{}{}", child_prefix, port)];
                match p.dir {
                    PortDir::Input => {
                        for sig in conn.signals() {
                            let src = self.index[&qual(&sig)];
                            self.edge(src, port_node, EdgeKind::Data, Timing::Combinational, inst.span);
                        }
                    }
                    PortDir::Output => {
                        for sig in conn.signals() {
                            let dst = self.index[&qual(&sig)];
                            self.edge(port_node, dst, EdgeKind::Data, Timing::Combinational, inst.span);
                        }
                    }
                    PortDir::Inout => {
                        for sig in conn.signals() {
                            let other = self.index[&qual(&sig)];
                            self.edge(other, port_node, EdgeKind::Data, Timing::Combinational, inst.span);
                            self.edge(port_node, other, EdgeKind::Data, Timing::Combinational, inst.span);
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Finds a cycle in the combinational-only subgraph, if any.
fn combinational_cycle(g: &DesignCdfg) -> Option<Vec<String>> {
    const WHITE: u8 = 0;
    const GRAY: u8 = 1;
    const BLACK: u8 = 2;
    let n = g.nodes.len();
    let mut color = vec![WHITE; n];
    let mut parent = vec![usize::MAX; n];

    for start in 0..n {
        if color[start] != WHITE {
            continue;
        }
        // iterative DFS keeping an explicit stack of (node, next edge index)
        let mut stack = vec![(start, 0usize)];
        color[start] = GRAY;
        while let Some(&mut (u, ref mut ei)) = stack.last_mut() {
            let mut advanced = false;
            while *ei < g.out_edges[u].len() {
                let edge = &g.edges[g.out_edges[u][*ei]];
                *ei += 1;
                if edge.timing != Timing::Combinational {
                    continue;
                }
                let v = edge.dst;
                if color[v] == GRAY {
                    // walk parents from u back to v to list the cycle
                    let mut cycle = vec![g.nodes[v].name.clone()];
                    let mut cur = u;
                    while cur != v {
                        cycle.push(g.nodes[cur].name.clone());
                        cur = parent[cur];
                    }
                    cycle.push(g.nodes[v].name.clone());
                    cycle.reverse();
                    return Some(cycle);
                }
                if color[v] == WHITE {
                    color[v] = GRAY;
                    parent[v] = u;
                    stack.push((v, 0));
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                color[u] = BLACK;
                stack.pop();
            }
        }
    }
    None
}

/// Transitive closure along edges in one direction, labelling every reached
/// signal with the fewest register stages on any connecting path. Nodes
/// whose minimum depth would exceed `max_depth` are excluded.
pub fn cone_of_influence(
    g: &DesignCdfg,
    seeds: &BTreeSet<String>,
    direction: Direction,
    max_depth: Option<u32>,
) -> Result<BTreeMap<String, u32>, CdfgError> {
    let mut dist: BTreeMap<usize, u32> = BTreeMap::new();
    let mut dq: VecDeque<usize> = VecDeque::new();
    for s in seeds {
        let id = g.node(s)?;
        dist.insert(id, 0);
        dq.push_back(id);
    }
    // 0-1 BFS: combinational edges cost 0, sequential edges cost 1
    while let Some(u) = dq.pop_front() {
        let du = dist[&u];
        let edge_ids = match direction {
            Direction::Backward => &g.in_edges[u],
            Direction::Forward => &g.out_edges[u],
        };
        for &ei in edge_ids {
            let e = &g.edges[ei];
            let v = match direction {
                Direction::Backward => e.src,
                Direction::Forward => e.dst,
            };
            let w = if e.timing == Timing::Sequential { 1 } else { 0 };
            let nd = du + w;
            if let Some(limit) = max_depth {
                if nd > limit {
                    continue;
                }
            }
            let better = match dist.get(&v) {
                Some(&old) => nd < old,
                None => true,
            };
            if better {
                dist.insert(v, nd);
                if w == 0 {
                    dq.push_front(v);
                } else {
                    dq.push_back(v);
                }
            }
        }
    }
    Ok(dist
        .into_iter()
        .map(|(id, d)| (g.nodes[id].name.clone(), d))
        .collect())
}

/// All assignments driving `target`, in source order.
pub fn guard_conditions(g: &DesignCdfg, target: &str) -> Result<Vec<GuardedAssignment>, CdfgError> {
    g.node(target)?;
    Ok(g.assigns
        .iter()
        .filter(|a| a.target == target)
        .cloned()
        .collect())
}

/// Register-stage counts over simple paths from `from` to `to`, with the
/// default exploration cap.
pub fn sequential_depth(
    g: &DesignCdfg,
    from: &str,
    to: &str,
) -> Result<Option<DepthRange>, CdfgError> {
    sequential_depth_with_cap(g, from, to, DEFAULT_SEQ_PATH_CAP)
}

/// Paths that accumulate more than `cap` sequential edges are not explored,
/// so on dense cyclic graphs the reported max is a lower bound.
pub fn sequential_depth_with_cap(
    g: &DesignCdfg,
    from: &str,
    to: &str,
    cap: u32,
) -> Result<Option<DepthRange>, CdfgError> {
    let src = g.node(from)?;
    let dst = g.node(to)?;
    if src == dst {
        return Ok(Some(DepthRange { min: 0, max: 0 }));
    }
    // min over simple paths equals min over all paths (dropping a cycle
    // never adds register stages), so 0-1 BFS gives it exactly
    let seeds: BTreeSet<String> = [from.to_string()].into();
    let coi = cone_of_influence(g, &seeds, Direction::Forward, None)?;
    let min = match coi.get(to) {
        Some(&d) => d,
        None => return Ok(None),
    };

    let mut on_path = vec![false; g.nodes.len()];
    let mut best = None;
    on_path[src] = true;
    max_depth_dfs(g, src, dst, 0, cap, &mut on_path, &mut best);
    let max = best.unwrap_or(min).max(min);
    Ok(Some(DepthRange { min, max }))
}

fn max_depth_dfs(
    g: &DesignCdfg,
    u: usize,
    dst: usize,
    depth: u32,
    cap: u32,
    on_path: &mut Vec<bool>,
    best: &mut Option<u32>,
) {
    for &ei in &g.out_edges[u] {
        let e = &g.edges[ei];
        let v = e.dst;
        let nd = depth + if e.timing == Timing::Sequential { 1 } else { 0 };
        if nd > cap {
            continue;
        }
        if v == dst {
            if best.map_or(true, |b| nd > b) {
                *best = Some(nd);
            }
            continue;
        }
        if on_path[v] {
            continue;
        }
        on_path[v] = true;
        max_depth_dfs(g, v, dst, nd, cap, on_path, best);
        on_path[v] = false;
    }
}

/// DOT rendering for debugging; node and edge order follow the graph's
/// deterministic construction order.
pub fn to_dot(g: &DesignCdfg) -> String {
    let mut out = String::from("digraph cdfg {\n");
    for n in &g.nodes {
        out.push_str(&format!(
            "  \"{}\" [label=\"{} [{}]\"];\n",
            n.name, n.name, n.width
        ));
    }
    for e in &g.edges {
        let style = match e.timing {
            Timing::Sequential => "solid",
            Timing::Combinational => "dashed",
        };
        let color = match e.kind {
            EdgeKind::Data => "black",
            EdgeKind::Control => "blue",
        };
        out.push_str(&format!(
            "  \"{}\" -> \"{}\" [style={}, color={}, label=\"{}/{}\"];\n",
            g.nodes[e.src].name,
            g.nodes[e.dst].name,
            style,
            color,
            match e.kind {
                EdgeKind::Data => "data",
                EdgeKind::Control => "control",
            },
            match e.timing {
                Timing::Sequential => "seq",
                Timing::Combinational => "comb",
            }
        ));
    }
    out.push_str("}\n");
    out
}
