//! Stage 1 retrieval: partition each module into chunks, index them, rank
//! by a lexical score with a signal-definer boost, then filter down to the
//! chunks a repair prompt should actually see.
//!
//! Ranking is tiered: chunks defining the query signal outrank chunks that
//! only read it, which outrank suffix-normalized matches (`_i`/`_o`
//! stripped), which outrank plain text hits. Within a tier, BM25 over the
//! chunk text orders candidates and ties fall back to source order.

use crate::cdfg::{cone_of_influence, DesignCdfg, Direction};
use crate::hdl::ast::{visit_assignments, DesignAst, ModuleAst, PortDir};
use crate::hdl::{render_assertion, SvaAssertion};
use crate::llm::{LlmClient, LlmError, Prompt};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

pub const DEFAULT_TOP_K: usize = 10;
pub const QUERY_TEMPLATE: &str = "What are the code snippets related to {signal}?";

const BM25_K1: f64 = 1.2;
const BM25_B: f64 = 0.75;
/// Tier separation must dominate any achievable BM25 score.
const TIER_WEIGHT: f64 = 1000.0;

/// One contiguous run of source lines inside a module. Logic chunks carry
/// the signals they define and use; declaration chunks carry neither.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RtlChunk {
    pub id: usize,
    pub module: String,
    pub file: String,
    pub start_line: u32,
    pub end_line: u32,
    #[serde(skip)]
    pub text: String,
    pub defined: BTreeSet<String>,
    pub used: BTreeSet<String>,
}

impl RtlChunk {
    pub fn is_logic(&self) -> bool {
        !self.defined.is_empty() || !self.used.is_empty()
    }
}

struct Anchor {
    start_line: u32,
    end_line: u32,
    defined: BTreeSet<String>,
    used: BTreeSet<String>,
}

/// Splits every module into chunks: one per always-block, per instance, per
/// run of consecutive continuous assigns; the remaining lines become
/// declaration chunks. Within a module the chunks partition the module's
/// line range exactly.
pub fn chunk_design(ast: &DesignAst) -> Vec<RtlChunk> {
    let mut chunks = Vec::new();
    for module in &ast.modules {
        chunk_module(ast, module, &mut chunks);
    }
    chunks
}

fn chunk_module(ast: &DesignAst, module: &ModuleAst, out: &mut Vec<RtlChunk>) {
    let mut anchors: Vec<Anchor> = Vec::new();

    for blk in &module.always_blocks {
        let mut defined = BTreeSet::new();
        let mut used = BTreeSet::new();
        if let Some(clk) = blk.sensitivity.clock() {
            used.insert(clk.to_string());
        }
        let mut guards = Vec::new();
        visit_assignments(&blk.body, &mut guards, &mut |lv, rhs, _blocking, gs, _span| {
            defined.insert(lv.signal.clone());
            used.extend(rhs.signals());
            for g in gs {
                used.extend(g.signals());
            }
        });
        anchors.push(Anchor {
            start_line: blk.span.line_start,
            end_line: blk.span.line_end,
            defined,
            used,
        });
    }

    for inst in &module.instances {
        let mut defined = BTreeSet::new();
        let mut used = BTreeSet::new();
        let child = ast.module(&inst.module);
        for (port, conn) in &inst.connections {
            let dir = child.and_then(|c| {
                c.ports.iter().find(|p| &p.name == port).map(|p| p.dir)
            });
            match dir {
                Some(PortDir::Output) => defined.extend(conn.signals()),
                Some(PortDir::Inout) => {
                    defined.extend(conn.signals());
                    used.extend(conn.signals());
                }
                // Unknown child modules are opaque: treat everything as read.
                Some(PortDir::Input) | None => used.extend(conn.signals()),
            }
        }
        anchors.push(Anchor {
            start_line: inst.span.line_start,
            end_line: inst.span.line_end,
            defined,
            used,
        });
    }

    // Consecutive assigns merge into one run.
    let mut assigns: Vec<&crate::hdl::ast::ContAssign> = module.assigns.iter().collect();
    assigns.sort_by_key(|a| a.span.line_start);
    let mut run: Option<Anchor> = None;
    for a in assigns {
        let defined: BTreeSet<String> = [a.target.signal.clone()].into_iter().collect();
        let used = a.rhs.signals();
        match &mut run {
            Some(r) if a.span.line_start <= r.end_line + 1 => {
                r.end_line = r.end_line.max(a.span.line_end);
                r.defined.extend(defined);
                r.used.extend(used);
            }
            _ => {
                if let Some(r) = run.take() {
                    anchors.push(r);
                }
                run = Some(Anchor {
                    start_line: a.span.line_start,
                    end_line: a.span.line_end,
                    defined,
                    used,
                });
            }
        }
    }
    if let Some(r) = run.take() {
        anchors.push(r);
    }

    anchors.sort_by_key(|a| (a.start_line, a.end_line));
    // Constructs sharing lines collapse into one chunk.
    let mut merged: Vec<Anchor> = Vec::new();
    for a in anchors {
        match merged.last_mut() {
            Some(m) if a.start_line <= m.end_line => {
                m.end_line = m.end_line.max(a.end_line);
                m.defined.extend(a.defined);
                m.used.extend(a.used);
            }
            _ => merged.push(a),
        }
    }

    let src = ast.sources.file(module.span.file);
    let emit = |start_line: u32, end_line: u32, defined: BTreeSet<String>, used: BTreeSet<String>, out: &mut Vec<RtlChunk>| {
        let (s, e) = src.line_range(start_line, end_line);
        out.push(RtlChunk {
            id: 0, // assigned below
            module: module.name.clone(),
            file: src.path.clone(),
            start_line,
            end_line,
            text: src.text[s..e].to_string(),
            defined,
            used,
        });
    };

    let first = out.len();
    let mut cursor = module.span.line_start;
    for a in merged {
        if a.start_line > cursor {
            emit(cursor, a.start_line - 1, BTreeSet::new(), BTreeSet::new(), out);
        }
        emit(a.start_line, a.end_line, a.defined, a.used, out);
        cursor = a.end_line + 1;
    }
    if cursor <= module.span.line_end {
        emit(cursor, module.span.line_end, BTreeSet::new(), BTreeSet::new(), out);
    }
    for (i, c) in out.iter_mut().enumerate().skip(first) {
        c.id = i;
    }
}

/// Dump shape consumed by external tooling: chunk metadata without text.
pub fn chunk_dump(chunks: &[RtlChunk]) -> String {
    serde_json::to_string_pretty(chunks).expect("chunk dump serialization")
}

fn tokenize(text: &str) -> Vec<String> {
    let mut toks = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_ascii_alphanumeric() || c == '_' || c == '$' {
            cur.push(c);
        } else if !cur.is_empty() {
            toks.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        toks.push(cur);
    }
    toks
}

/// Strips one `_i`/`_o` port suffix so `txr` still matches `txr_o`.
fn suffix_normalize(name: &str) -> &str {
    name.strip_suffix("_i")
        .or_else(|| name.strip_suffix("_o"))
        .unwrap_or(name)
}

/// Immutable ranked-retrieval index over a chunked design.
pub struct ChunkIndex {
    chunks: Vec<RtlChunk>,
    postings: BTreeMap<String, Vec<(usize, u32)>>,
    doc_len: Vec<u32>,
    avg_len: f64,
    definers: BTreeMap<String, BTreeSet<usize>>,
    users: BTreeMap<String, BTreeSet<usize>>,
    normalized: BTreeMap<String, BTreeSet<usize>>,
}

pub fn build_index(chunks: Vec<RtlChunk>) -> ChunkIndex {
    let mut postings: BTreeMap<String, Vec<(usize, u32)>> = BTreeMap::new();
    let mut doc_len = Vec::with_capacity(chunks.len());
    let mut definers: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    let mut users: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    let mut normalized: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();

    for (i, chunk) in chunks.iter().enumerate() {
        let toks = tokenize(&chunk.text);
        doc_len.push(toks.len() as u32);
        let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
        for t in &toks {
            *tf.entry(t.as_str()).or_insert(0) += 1;
        }
        for (t, n) in tf {
            postings.entry(t.to_string()).or_default().push((i, n));
        }
        for s in &chunk.defined {
            definers.entry(s.clone()).or_default().insert(i);
            normalized.entry(suffix_normalize(s).to_string()).or_default().insert(i);
        }
        for s in &chunk.used {
            users.entry(s.clone()).or_default().insert(i);
            normalized.entry(suffix_normalize(s).to_string()).or_default().insert(i);
        }
    }
    let total: u64 = doc_len.iter().map(|&l| l as u64).sum();
    let avg_len = if doc_len.is_empty() {
        1.0
    } else {
        (total as f64 / doc_len.len() as f64).max(1.0)
    };
    ChunkIndex {
        chunks,
        postings,
        doc_len,
        avg_len,
        definers,
        users,
        normalized,
    }
}

impl ChunkIndex {
    pub fn chunks(&self) -> &[RtlChunk] {
        &self.chunks
    }

    fn bm25(&self, chunk: usize, query_tokens: &[String]) -> f64 {
        let n = self.chunks.len() as f64;
        let mut score = 0.0;
        for t in query_tokens {
            let Some(plist) = self.postings.get(t) else { continue };
            let Ok(pos) = plist.binary_search_by_key(&chunk, |&(c, _)| c) else { continue };
            let tf = plist[pos].1 as f64;
            let df = plist.len() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            let len_norm = 1.0 - BM25_B + BM25_B * self.doc_len[chunk] as f64 / self.avg_len;
            score += idf * tf * (BM25_K1 + 1.0) / (tf + BM25_K1 * len_norm);
        }
        score
    }

    fn tier(&self, chunk: usize, signal: &str) -> u32 {
        if self.definers.get(signal).is_some_and(|s| s.contains(&chunk)) {
            3
        } else if self.users.get(signal).is_some_and(|s| s.contains(&chunk)) {
            2
        } else if self
            .normalized
            .get(suffix_normalize(signal))
            .is_some_and(|s| s.contains(&chunk))
        {
            1
        } else {
            0
        }
    }

    fn knows_signal(&self, signal: &str) -> bool {
        self.definers.contains_key(signal)
            || self.users.contains_key(signal)
            || self.normalized.contains_key(suffix_normalize(signal))
    }
}

/// Top-k chunks for one query signal. An unindexed signal yields an empty
/// list with a warning rather than an error so a batch run keeps going.
pub fn coarse_retrieve(index: &ChunkIndex, signal: &str, k: usize) -> Vec<(RtlChunk, f64)> {
    assert!(k >= 1, "retrieval requires k >= 1");
    if !index.knows_signal(signal) {
        log::warn!("query signal `{}` not defined or used by any chunk", signal);
        return Vec::new();
    }
    let query = QUERY_TEMPLATE.replace("{signal}", signal);
    let query_tokens = tokenize(&query);
    let mut scored: Vec<(usize, f64)> = (0..index.chunks.len())
        .map(|i| {
            let s = index.tier(i, signal) as f64 * TIER_WEIGHT + index.bm25(i, &query_tokens);
            (i, s)
        })
        .filter(|&(_, s)| s > 0.0)
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored
        .into_iter()
        .take(k)
        .map(|(i, s)| (index.chunks[i].clone(), s))
        .collect()
}

/// Retrieval for a whole assertion: one query per consequent signal, merged
/// by max score.
pub fn retrieve_for_assertion(
    index: &ChunkIndex,
    assertion: &SvaAssertion,
    k: usize,
) -> Vec<(RtlChunk, f64)> {
    let mut best: BTreeMap<usize, (RtlChunk, f64)> = BTreeMap::new();
    for signal in assertion.consequent.signals() {
        for (chunk, score) in coarse_retrieve(index, &signal, k) {
            let entry = best.entry(chunk.id).or_insert((chunk, score));
            if score > entry.1 {
                entry.1 = score;
            }
        }
    }
    let mut merged: Vec<(RtlChunk, f64)> = best.into_values().collect();
    merged.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.id.cmp(&b.0.id)));
    merged.truncate(k);
    merged
}

/// True when a chunk-local signal name names the graph node, which may be
/// instance-qualified.
fn names_node(coi: &BTreeMap<String, u32>, local: &str) -> bool {
    if coi.contains_key(local) {
        return true;
    }
    let dotted = format!(".{}", local);
    coi.keys().any(|n| n.ends_with(&dotted))
}

fn known_seeds(g: &DesignCdfg, signals: BTreeSet<String>) -> BTreeSet<String> {
    signals
        .into_iter()
        .filter(|s| {
            let known = g.node_id(s).is_some();
            if !known {
                log::warn!("assertion signal `{}` missing from the design graph", s);
            }
            known
        })
        .collect()
}

/// Narrows coarse results to chunks that can matter for the assertion.
/// Without a client this keeps chunks touching the backward cone of the
/// consequent or the forward cone of the antecedent. With a client, the
/// model picks ids and the result is clamped to a subset of the input.
pub fn fine_filter(
    chunks: &[(RtlChunk, f64)],
    assertion: &SvaAssertion,
    g: &DesignCdfg,
    llm: Option<&dyn LlmClient>,
) -> Result<Vec<RtlChunk>, LlmError> {
    match llm {
        None => Ok(heuristic_filter(chunks, assertion, g)),
        Some(client) => llm_filter(chunks, assertion, client),
    }
}

fn heuristic_filter(
    chunks: &[(RtlChunk, f64)],
    assertion: &SvaAssertion,
    g: &DesignCdfg,
) -> Vec<RtlChunk> {
    let cons = known_seeds(g, assertion.consequent.signals());
    let ant = known_seeds(g, assertion.antecedent.signals());
    if cons.is_empty() && ant.is_empty() {
        log::warn!("no assertion signal resolves to the design; keeping all chunks");
        return chunks.iter().map(|(c, _)| c.clone()).collect();
    }
    let backward = if cons.is_empty() {
        BTreeMap::new()
    } else {
        cone_of_influence(g, &cons, Direction::Backward, None).expect("seeds checked")
    };
    let forward = if ant.is_empty() {
        BTreeMap::new()
    } else {
        cone_of_influence(g, &ant, Direction::Forward, None).expect("seeds checked")
    };
    chunks
        .iter()
        .filter(|(c, _)| {
            c.defined
                .iter()
                .chain(c.used.iter())
                .any(|s| names_node(&backward, s) || names_node(&forward, s))
        })
        .map(|(c, _)| c.clone())
        .collect()
}

fn llm_filter(
    chunks: &[(RtlChunk, f64)],
    assertion: &SvaAssertion,
    client: &dyn LlmClient,
) -> Result<Vec<RtlChunk>, LlmError> {
    let mut user = String::new();
    user.push_str("Failing assertion:\n");
    user.push_str(&render_assertion(assertion));
    user.push_str("\n\nCandidate RTL chunks:\n");
    for (c, _) in chunks {
        user.push_str(&format!(
            "[chunk {}] module {} lines {}-{}\n{}\n",
            c.id, c.module, c.start_line, c.end_line, c.text
        ));
    }
    user.push_str(
        "\nThink step by step about which chunks could explain the failure, \
         then answer with one line: CHUNKS: <comma-separated chunk ids>\n",
    );
    let prompt = Prompt::new(
        "You filter RTL code chunks for assertion repair. Keep only chunks \
         logically connected to the assertion's signals.",
        user,
    );
    let response = client.complete(&prompt)?;
    let ids = parse_chunk_ids(&response.text)?;
    let input_ids: BTreeSet<usize> = chunks.iter().map(|(c, _)| c.id).collect();
    let mut keep = BTreeSet::new();
    for id in ids {
        if input_ids.contains(&id) {
            keep.insert(id);
        } else {
            log::warn!("model selected chunk {} outside the candidate set; discarded", id);
        }
    }
    Ok(chunks
        .iter()
        .filter(|(c, _)| keep.contains(&c.id))
        .map(|(c, _)| c.clone())
        .collect())
}

fn parse_chunk_ids(text: &str) -> Result<Vec<usize>, LlmError> {
    let line = text
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with("CHUNKS:"))
        .ok_or_else(|| LlmError::Malformed {
            message: "response has no CHUNKS: line".to_string(),
        })?;
    let mut ids = Vec::new();
    for part in line["CHUNKS:".len()..].split(',') {
        let part = part.trim();
        if part.is_empty() || part.eq_ignore_ascii_case("none") {
            continue;
        }
        match part.parse() {
            Ok(id) => ids.push(id),
            Err(_) => log::warn!("unparsable chunk id `{}` in model response", part),
        }
    }
    Ok(ids)
}
