//! End-to-end orchestration: load a design with its assertions and
//! counterexample traces, run retrieve -> classify -> repair on every
//! failing assertion, dump per-assertion artifacts, and build the report.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cdfg::{build_cdfg, DesignCdfg};
use crate::classify::{
    build_classification_prompt, classify_error, ErrorKind, DEFAULT_SHIFT_BOUND,
};
use crate::fix::{
    fix_logic_bar, fix_timing, repair_prompt, FixOutcome, DEFAULT_CANDIDATE_CAP, LOGIC_HINT,
    TIMING_HINT,
};
use crate::hdl::ast::DesignAst;
use crate::hdl::{parse_assertion, parse_design, render_assertion, SvaAssertion};
use crate::llm::{HttpClient, LlmClient, MockClient, Prompt, ReplayClient};
use crate::report::{
    coi_coverage, emit_report, fr_metrics, AssertionRow, ConfigEcho, FixReport, ReportFormat,
};
use crate::retrieval::{
    build_index, chunk_design, chunk_dump, fine_filter, retrieve_for_assertion, ChunkIndex,
    RtlChunk, DEFAULT_TOP_K,
};
use crate::trace::{evaluate_assertion, parse_vcd};

#[derive(Debug, Error)]
pub enum PipelineError {
    /// Invalid configuration or arguments; maps to exit code 64.
    #[error("config: {0}")]
    Config(String),
    /// Unreadable or unwritable file; maps to exit code 74.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    /// Well-formed I/O but unparseable content; maps to exit code 65.
    #[error("{0}")]
    Data(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 64,
            PipelineError::Io { .. } => 74,
            PipelineError::Data(_) => 65,
        }
    }
}

fn read(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    fs::write(path, bytes).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone)]
pub enum Backend {
    Http {
        endpoint: String,
        model: String,
        /// Name of the environment variable holding the API key.
        api_key_env: String,
    },
    Replay {
        fixtures: PathBuf,
    },
    Mock {
        rules: Vec<(String, String)>,
    },
}

impl Backend {
    pub fn build(&self) -> Result<Box<dyn LlmClient>, PipelineError> {
        match self {
            Backend::Http {
                endpoint,
                model,
                api_key_env,
            } => {
                let key = std::env::var(api_key_env).ok();
                Ok(Box::new(HttpClient::new(endpoint, key.as_deref(), model)))
            }
            Backend::Replay { fixtures } => ReplayClient::from_file(fixtures)
                .map(|c| Box::new(c) as Box<dyn LlmClient>)
                .map_err(|e| PipelineError::Data(format!("{}: {e}", fixtures.display()))),
            Backend::Mock { rules } => {
                let mut c = MockClient::new();
                for (pattern, response) in rules {
                    c = c.rule(pattern, response);
                }
                Ok(Box::new(c))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub sources: Vec<PathBuf>,
    pub assertions: PathBuf,
    pub trace_dir: PathBuf,
    pub backend: Backend,
    pub shift_bound: u32,
    pub top_k: usize,
    pub candidate_cap: usize,
    /// Worker count; 0 means available parallelism.
    pub jobs: usize,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    design: RawDesign,
    assertions: RawAssertions,
    traces: RawTraces,
    llm: RawLlm,
    #[serde(default)]
    run: RawRun,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDesign {
    sources: Vec<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAssertions {
    path: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTraces {
    dir: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLlm {
    backend: String,
    fixtures: Option<PathBuf>,
    endpoint: Option<String>,
    model: Option<String>,
    api_key_env: Option<String>,
    #[serde(default)]
    rules: Vec<RawRule>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRule {
    pattern: String,
    response: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawRun {
    shift_bound: u32,
    top_k: usize,
    candidate_cap: usize,
    jobs: usize,
    seed: u64,
    out: PathBuf,
}

impl Default for RawRun {
    fn default() -> RawRun {
        RawRun {
            shift_bound: DEFAULT_SHIFT_BOUND,
            top_k: DEFAULT_TOP_K,
            candidate_cap: DEFAULT_CANDIDATE_CAP,
            jobs: 0,
            seed: 0,
            out: PathBuf::from("out"),
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl PipelineConfig {
    /// Parses a TOML config; relative paths are resolved against the
    /// config file's directory. Secrets come from the environment, never
    /// the file: `SVAFIX_LLM_ENDPOINT` and `SVAFIX_LLM_MODEL` override the
    /// http backend settings, and the API key is read from the variable
    /// named by `api_key_env` (default `SVAFIX_LLM_API_KEY`).
    pub fn load(path: &Path) -> Result<PipelineConfig, PipelineError> {
        let text = read(path)?;
        let raw: RawConfig = toml::from_str(&text)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));

        let backend = match raw.llm.backend.as_str() {
            "http" => {
                let endpoint = HttpClient::env_endpoint()
                    .or(raw.llm.endpoint)
                    .ok_or_else(|| {
                        PipelineError::Config(
                            "http backend needs llm.endpoint or SVAFIX_LLM_ENDPOINT".to_string(),
                        )
                    })?;
                let model = HttpClient::env_model().or(raw.llm.model).ok_or_else(|| {
                    PipelineError::Config(
                        "http backend needs llm.model or SVAFIX_LLM_MODEL".to_string(),
                    )
                })?;
                Backend::Http {
                    endpoint,
                    model,
                    api_key_env: raw
                        .llm
                        .api_key_env
                        .unwrap_or_else(|| "SVAFIX_LLM_API_KEY".to_string()),
                }
            }
            "replay" => {
                let fixtures = raw.llm.fixtures.ok_or_else(|| {
                    PipelineError::Config("replay backend needs llm.fixtures".to_string())
                })?;
                Backend::Replay {
                    fixtures: resolve(base, &fixtures),
                }
            }
            "mock" => Backend::Mock {
                rules: raw
                    .llm
                    .rules
                    .into_iter()
                    .map(|r| (r.pattern, r.response))
                    .collect(),
            },
            other => {
                return Err(PipelineError::Config(format!(
                    "unknown llm.backend `{other}` (expected http, replay, or mock)"
                )))
            }
        };

        Ok(PipelineConfig {
            sources: raw
                .design
                .sources
                .iter()
                .map(|p| resolve(base, p))
                .collect(),
            assertions: resolve(base, &raw.assertions.path),
            trace_dir: resolve(base, &raw.traces.dir),
            backend,
            shift_bound: raw.run.shift_bound,
            top_k: raw.run.top_k,
            candidate_cap: raw.run.candidate_cap,
            jobs: raw.run.jobs,
            seed: raw.run.seed,
            out: resolve(base, &raw.run.out),
        })
    }

    /// Input paths must exist and bounds must be positive. The output
    /// directory is created later, so it is exempt.
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.sources.is_empty() {
            return Err(PipelineError::Config("design.sources is empty".to_string()));
        }
        for s in &self.sources {
            if !s.is_file() {
                return Err(PipelineError::Config(format!(
                    "design source not found: {}",
                    s.display()
                )));
            }
        }
        if !self.assertions.is_file() {
            return Err(PipelineError::Config(format!(
                "assertion list not found: {}",
                self.assertions.display()
            )));
        }
        if !self.trace_dir.is_dir() {
            return Err(PipelineError::Config(format!(
                "trace directory not found: {}",
                self.trace_dir.display()
            )));
        }
        if let Backend::Replay { fixtures } = &self.backend {
            if !fixtures.is_file() {
                return Err(PipelineError::Config(format!(
                    "fixture file not found: {}",
                    fixtures.display()
                )));
            }
        }
        if self.shift_bound == 0 || self.top_k == 0 || self.candidate_cap == 0 {
            return Err(PipelineError::Config(
                "shift_bound, top_k, and candidate_cap must be positive".to_string(),
            ));
        }
        Ok(())
    }

    fn backend_name(&self) -> String {
        match &self.backend {
            Backend::Http { model, .. } => format!("http:{model}"),
            Backend::Replay { .. } => "replay".to_string(),
            Backend::Mock { .. } => "mock".to_string(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NamedAssertion {
    pub name: String,
    pub text: String,
}

fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && s.len() <= 64
        && !s.starts_with('.')
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

/// Loads `.json` lists of `{name, text}` pairs; any other extension is
/// read as one assertion per line (blank lines and `//` or `#` comments
/// skipped) with positional names `a0, a1, ...`. Names become artifact
/// directories and trace file stems, so they are restricted to
/// `[A-Za-z0-9_.-]` and must be unique.
pub fn load_assertions(path: &Path) -> Result<Vec<NamedAssertion>, PipelineError> {
    let text = read(path)?;
    let list: Vec<NamedAssertion> = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text)
            .map_err(|e| PipelineError::Data(format!("{}: {e}", path.display())))?
    } else {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with("//") && !l.starts_with('#'))
            .enumerate()
            .map(|(i, l)| NamedAssertion {
                name: format!("a{i}"),
                text: l.to_string(),
            })
            .collect()
    };
    let mut seen = BTreeSet::new();
    for a in &list {
        if !valid_name(&a.name) {
            return Err(PipelineError::Data(format!(
                "assertion name `{}` is not a valid artifact name",
                a.name
            )));
        }
        if !seen.insert(a.name.as_str()) {
            return Err(PipelineError::Data(format!(
                "duplicate assertion name `{}`",
                a.name
            )));
        }
    }
    Ok(list)
}

/// Traces for assertion `name`: `<name>.vcd` plus any `<name>.*.vcd`,
/// sorted by file name.
pub fn trace_paths(dir: &Path, name: &str) -> Result<Vec<PathBuf>, PipelineError> {
    let mut found = Vec::new();
    let entries = fs::read_dir(dir).map_err(|source| PipelineError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let prefix = format!("{name}.");
    for entry in entries {
        let entry = entry.map_err(|source| PipelineError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let file_name = entry.file_name();
        let Some(fname) = file_name.to_str() else {
            continue;
        };
        if fname.starts_with(&prefix) && fname.ends_with(".vcd") {
            found.push(entry.path());
        }
    }
    found.sort();
    Ok(found)
}

// ---- benchmark manifest ----

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkManifest {
    pub benchmarks: Vec<BenchmarkEntry>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkEntry {
    pub name: String,
    pub loc: u64,
    pub sources: Vec<PathBuf>,
    /// Incorrect-assertion counts by injected error type.
    pub timing_errors: u32,
    pub logic_errors: u32,
}

impl BenchmarkManifest {
    pub fn load(path: &Path) -> Result<BenchmarkManifest, PipelineError> {
        let text = read(path)?;
        serde_json::from_str(&text)
            .map_err(|e| PipelineError::Data(format!("{}: {e}", path.display())))
    }
}

impl BenchmarkEntry {
    /// Recounts the listed sources (comment-insensitively) and checks the
    /// declared LOC against it within 2%.
    pub fn check_loc(&self, base: &Path) -> Result<(), PipelineError> {
        let mut counted = 0u64;
        for s in &self.sources {
            counted += count_loc(&read(&resolve(base, s))?);
        }
        let tolerance = self.loc / 50;
        if counted.abs_diff(self.loc) > tolerance {
            return Err(PipelineError::Data(format!(
                "{}: declared {} LOC but sources count {counted} (tolerance {tolerance})",
                self.name, self.loc
            )));
        }
        Ok(())
    }
}

/// Non-blank lines after stripping `//` line comments and `/* */` block
/// comments.
pub fn count_loc(text: &str) -> u64 {
    let mut count = 0u64;
    let mut in_block = false;
    for line in text.lines() {
        let mut rest = line;
        let mut kept = String::new();
        while !rest.is_empty() {
            if in_block {
                match rest.find("*/") {
                    Some(i) => {
                        in_block = false;
                        rest = &rest[i + 2..];
                    }
                    None => break,
                }
                continue;
            }
            match (rest.find("//"), rest.find("/*")) {
                (Some(l), Some(b)) if l < b => {
                    kept.push_str(&rest[..l]);
                    break;
                }
                (Some(l), None) => {
                    kept.push_str(&rest[..l]);
                    break;
                }
                (_, Some(b)) => {
                    kept.push_str(&rest[..b]);
                    in_block = true;
                    rest = &rest[b + 2..];
                }
                (None, None) => {
                    kept.push_str(rest);
                    break;
                }
            }
        }
        if !kept.trim().is_empty() {
            count += 1;
        }
    }
    count
}

// ---- the run ----

/// The module not instantiated by any other, falling back to the first.
fn design_name(ast: &DesignAst) -> String {
    let mut instantiated = BTreeSet::new();
    for m in &ast.modules {
        for i in &m.instances {
            instantiated.insert(i.module.as_str());
        }
    }
    ast.modules
        .iter()
        .find(|m| !instantiated.contains(m.name.as_str()))
        .or_else(|| ast.modules.first())
        .map(|m| m.name.clone())
        .unwrap_or_else(|| "design".to_string())
}

struct Shared<'a> {
    cfg: &'a PipelineConfig,
    g: &'a DesignCdfg,
    index: &'a ChunkIndex,
    llm: &'a dyn LlmClient,
}

fn prompt_text(p: &Prompt) -> String {
    format!("== system ==\n{}\n\n== user ==\n{}\n", p.system, p.user)
}

/// Best-effort artifact write; a failure becomes a row note, not an abort.
fn dump(dir: &Path, file: &str, contents: &str, notes: &mut Vec<String>) {
    if let Err(e) = fs::write(dir.join(file), contents) {
        notes.push(format!("artifact {file} not written: {e}"));
    }
}

fn format_eval(results: &[(String, crate::trace::EvalResult)]) -> String {
    let mut s = String::new();
    for (name, r) in results {
        writeln!(
            s,
            "{name}: passed={} covered={} first_failing_cycle={:?} attempts={}",
            r.passed,
            r.covered,
            r.first_failing_cycle,
            r.attempts.len()
        )
        .unwrap();
    }
    s
}

fn process_assertion(s: &Shared, item: &NamedAssertion) -> (AssertionRow, Option<FixOutcome>) {
    let err_row = |note: String| (AssertionRow::error(&item.name, &item.text, note), None);

    let art = s.cfg.out.join(&item.name);
    if let Err(e) = fs::create_dir_all(&art) {
        return err_row(format!("artifact dir: {e}"));
    }
    let mut notes = Vec::new();

    let a = match parse_assertion(&item.text) {
        Ok(a) => a,
        Err(e) => return err_row(format!("assertion parse: {e}")),
    };
    let Some(clock) = a.clock.clone() else {
        return err_row("assertion has no clock event; traces cannot be sampled".to_string());
    };

    let paths = match trace_paths(&s.cfg.trace_dir, &item.name) {
        Ok(p) => p,
        Err(e) => return err_row(e.to_string()),
    };
    if paths.is_empty() {
        return err_row(format!(
            "no trace {}.vcd in {}",
            item.name,
            s.cfg.trace_dir.display()
        ));
    }
    let mut traces = Vec::new();
    let mut trace_names = Vec::new();
    for p in &paths {
        let text = match read(p) {
            Ok(t) => t,
            Err(e) => return err_row(e.to_string()),
        };
        match parse_vcd(&text, &clock.signal) {
            Ok(t) => {
                traces.push(t);
                trace_names.push(p.file_name().unwrap().to_string_lossy().into_owned());
            }
            Err(e) => return err_row(format!("{}: {e}", p.display())),
        }
    }

    let mut evals = Vec::new();
    for (name, t) in trace_names.iter().zip(&traces) {
        match evaluate_assertion(&a, t) {
            Ok(r) => evals.push((name.clone(), r)),
            Err(e) => return err_row(format!("{name}: {e}")),
        }
    }
    dump(&art, "eval.txt", &format_eval(&evals), &mut notes);
    if evals.iter().all(|(_, r)| r.passed) {
        let mut row = AssertionRow::passed(&item.name, &a);
        if !evals.iter().any(|(_, r)| r.covered) {
            row.notes.push("vacuous: never triggered on any trace".to_string());
        }
        row.notes.append(&mut notes);
        return (row, None);
    }

    // Stage 1: coarse retrieval, then the fine filter.
    let scored = retrieve_for_assertion(s.index, &a, s.cfg.top_k);
    let coarse: Vec<RtlChunk> = scored.iter().map(|(c, _)| c.clone()).collect();
    dump(&art, "retrieved.json", &chunk_dump(&coarse), &mut notes);
    let chunks = match fine_filter(&scored, &a, s.g, Some(s.llm)) {
        Ok(c) => c,
        Err(e) => {
            notes.push(format!("fine filter: {e}; heuristic filter used"));
            fine_filter(&scored, &a, s.g, None).expect("heuristic filter is infallible")
        }
    };
    dump(&art, "chunks.json", &chunk_dump(&chunks), &mut notes);
    dump(
        &art,
        "classify_prompt.txt",
        &prompt_text(&build_classification_prompt(&a, &traces, &chunks)),
        &mut notes,
    );

    // Stage 2: error classification.
    let cls = match classify_error(&a, &traces, &chunks, s.g, Some(s.llm), s.cfg.shift_bound) {
        Ok(c) => c,
        Err(e) => return err_row(format!("classification: {e}")),
    };
    dump(
        &art,
        "classification.txt",
        &format!(
            "kind: {:?}\nsource: {:?}\nevidence: {:?}\nrationale: {}\n",
            cls.kind, cls.source, cls.evidence, cls.rationale
        ),
        &mut notes,
    );

    // Stage 3: repair and validation.
    let hint = match cls.kind {
        ErrorKind::Timing => TIMING_HINT,
        ErrorKind::Logic => LOGIC_HINT,
    };
    dump(
        &art,
        "repair_prompt.txt",
        &prompt_text(&repair_prompt(&a, &traces, &chunks, hint)),
        &mut notes,
    );
    let outcome = match cls.kind {
        ErrorKind::Timing => {
            match fix_timing(
                &a,
                &traces,
                &chunks,
                Some(s.llm),
                s.cfg.shift_bound,
                s.cfg.candidate_cap,
            ) {
                Ok(o) => o,
                Err(e) => return err_row(format!("timing fix: {e}")),
            }
        }
        ErrorKind::Logic => fix_logic_bar(
            &a,
            s.g,
            &traces,
            &chunks,
            Some(s.llm),
            s.cfg.candidate_cap,
        ),
    };

    let mut trials = String::new();
    for rec in &outcome.trials {
        writeln!(
            trials,
            "{} [{}] {}\n  edit: {}",
            if rec.accepted { "accepted" } else { "rejected" },
            rec.candidate.origin.label(),
            render_assertion(&rec.candidate.assertion),
            rec.candidate.edit
        )
        .unwrap();
        for (name, r) in trace_names.iter().zip(&rec.per_trace) {
            writeln!(
                trials,
                "  {name}: passed={} covered={}",
                r.passed, r.covered
            )
            .unwrap();
        }
    }
    dump(&art, "trials.txt", &trials, &mut notes);

    let mut row = AssertionRow::new(&item.name, &a, &cls, &outcome);
    row.notes.append(&mut notes);
    (row, Some(outcome))
}

fn effective_jobs(cfg_jobs: usize, work: usize) -> usize {
    let auto = thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let jobs = if cfg_jobs > 0 { cfg_jobs } else { auto };
    jobs.clamp(1, work.max(1))
}

/// Runs the three-stage flow over every assertion in the batch. Failures
/// on one assertion become its row's `error` status; only configuration
/// and design-wide problems abort.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<FixReport, PipelineError> {
    cfg.validate()?;

    let mut sources = Vec::new();
    for p in &cfg.sources {
        sources.push((p.display().to_string(), read(p)?));
    }
    let pairs: Vec<(&str, &str)> = sources
        .iter()
        .map(|(n, t)| (n.as_str(), t.as_str()))
        .collect();
    let ast = parse_design(&pairs).map_err(|e| PipelineError::Data(e.to_string()))?;
    let g = build_cdfg(&ast).map_err(|e| PipelineError::Data(e.to_string()))?;
    let index = build_index(chunk_design(&ast));
    let named = load_assertions(&cfg.assertions)?;
    let llm = cfg.backend.build()?;
    fs::create_dir_all(&cfg.out).map_err(|source| PipelineError::Io {
        path: cfg.out.clone(),
        source,
    })?;

    let originals: Vec<Option<SvaAssertion>> = named
        .iter()
        .map(|n| parse_assertion(&n.text).ok())
        .collect();
    let before_set: Vec<SvaAssertion> = originals.iter().flatten().cloned().collect();
    let coi_before = coi_coverage(&g, &before_set);

    let shared = Shared {
        cfg,
        g: &g,
        index: &index,
        llm: llm.as_ref(),
    };
    let slots: Vec<Mutex<Option<(AssertionRow, Option<FixOutcome>)>>> =
        named.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let jobs = effective_jobs(cfg.jobs, named.len());
    thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= named.len() {
                    break;
                }
                let result = process_assertion(&shared, &named[i]);
                *slots[i].lock().unwrap() = Some(result);
            });
        }
    });
    let results: Vec<(AssertionRow, Option<FixOutcome>)> = slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("worker filled every slot"))
        .collect();

    let after_set: Vec<SvaAssertion> = results
        .iter()
        .zip(&originals)
        .filter_map(|((_, outcome), original)| {
            match outcome.as_ref().and_then(|o| o.accepted.as_ref()) {
                Some(c) => Some(c.assertion.clone()),
                None => original.clone(),
            }
        })
        .collect();
    let coi_after = coi_coverage(&g, &after_set);

    let outcomes: Vec<FixOutcome> = results.iter().filter_map(|(_, o)| o.clone()).collect();
    let rows: Vec<AssertionRow> = results.into_iter().map(|(r, _)| r).collect();
    let report = FixReport::new(
        design_name(&ast),
        fr_metrics(&outcomes),
        rows,
        coi_before,
        coi_after,
        ConfigEcho {
            backend: cfg.backend_name(),
            shift_bound: cfg.shift_bound,
            top_k: cfg.top_k,
            candidate_cap: cfg.candidate_cap,
            seed: cfg.seed,
        },
    );
    write(
        &cfg.out.join("report.json"),
        &emit_report(&report, ReportFormat::Json),
    )?;
    write(
        &cfg.out.join("report.md"),
        &emit_report(&report, ReportFormat::Markdown),
    )?;
    Ok(report)
}
