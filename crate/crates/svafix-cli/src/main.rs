use std::fs;
use std::path::{Path, PathBuf};
use std::process::exit;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};

use svafix::cdfg::{build_cdfg, to_dot, DesignCdfg};
use svafix::classify::{classify_error, DEFAULT_SHIFT_BOUND};
use svafix::hdl::ast::DesignAst;
use svafix::hdl::{parse_assertion, parse_design, SvaAssertion};
use svafix::pipeline::{run_pipeline, Backend, PipelineConfig, PipelineError};
use svafix::report::{emit_report, validate_report_json, FixReport, ReportFormat};
use svafix::retrieval::{
    build_index, chunk_design, chunk_dump, fine_filter, retrieve_for_assertion, RtlChunk,
    DEFAULT_TOP_K,
};
use svafix::trace::{evaluate_assertion, parse_vcd, CounterexampleTrace, EvalResult};

/// Exit codes: 0 success (or `check` pass), 1 `check` fail, 2 `check`
/// vacuous-only, 64 usage, 65 unparseable data, 74 I/O failure.
#[derive(Parser)]
#[command(
    name = "svafix",
    version,
    about = "Repairs failing SystemVerilog assertions against RTL and counterexample traces"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse Verilog sources and print a per-module summary
    Parse {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Build the design graph; print stats or emit GraphViz DOT
    Cdfg {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Write DOT here ("-" for stdout)
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Rank RTL chunks relevant to an assertion's signals
    Retrieve {
        #[arg(long)]
        assertion: String,
        #[arg(long, default_value_t = DEFAULT_TOP_K)]
        top_k: usize,
        /// Emit the ranked chunks as JSON instead of a listing
        #[arg(long)]
        json: bool,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Classify a failing assertion as a timing or logic error
    Classify {
        #[arg(long)]
        assertion: String,
        /// Counterexample VCD; repeat for several traces
        #[arg(long = "trace", required = true)]
        traces: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SHIFT_BOUND)]
        shift_bound: u32,
        #[arg(long, default_value_t = DEFAULT_TOP_K)]
        top_k: usize,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Evaluate an assertion on traces: exit 0 pass, 1 fail, 2 vacuous-only
    Check {
        #[arg(long)]
        assertion: String,
        #[arg(long = "trace", required = true)]
        traces: Vec<PathBuf>,
    },
    /// Run the retrieve-classify-repair pipeline from a config file
    Fix {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        /// Fixture JSONL for the replay backend
        #[arg(long)]
        fixtures: Option<PathBuf>,
        #[arg(long)]
        shift_bound: Option<u32>,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = available parallelism)
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Validate a report.json and re-emit it
    Report {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Http,
    Replay,
    Mock,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Markdown,
}

fn main() {
    env_logger::init();
    let cli = Cli::try_parse().unwrap_or_else(|e| {
        use clap::error::ErrorKind;
        let code = match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
            _ => 64,
        };
        let _ = e.print();
        exit(code);
    });
    match run(cli.cmd) {
        Ok(code) => exit(code),
        Err(err) => {
            eprintln!("svafix: {err:#}");
            exit(exit_code_for(&err));
        }
    }
}

fn exit_code_for(err: &anyhow::Error) -> i32 {
    if let Some(p) = err.downcast_ref::<PipelineError>() {
        return p.exit_code();
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return 74;
    }
    70
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| {
        PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
        .into()
    })
}

fn data(message: impl std::fmt::Display) -> anyhow::Error {
    PipelineError::Data(message.to_string()).into()
}

fn usage(message: impl std::fmt::Display) -> anyhow::Error {
    PipelineError::Config(message.to_string()).into()
}

fn load_design(files: &[PathBuf]) -> Result<DesignAst> {
    let mut sources = Vec::new();
    for p in files {
        sources.push((p.display().to_string(), read(p)?));
    }
    let pairs: Vec<(&str, &str)> = sources
        .iter()
        .map(|(n, t)| (n.as_str(), t.as_str()))
        .collect();
    parse_design(&pairs).map_err(data)
}

fn load_assertion(text: &str) -> Result<SvaAssertion> {
    parse_assertion(text).map_err(data)
}

fn load_traces(a: &SvaAssertion, paths: &[PathBuf]) -> Result<Vec<CounterexampleTrace>> {
    let clock = a
        .clock
        .as_ref()
        .ok_or_else(|| data("assertion has no clock event; traces cannot be sampled"))?;
    let mut traces = Vec::new();
    for p in paths {
        let text = read(p)?;
        traces.push(
            parse_vcd(&text, &clock.signal).map_err(|e| data(format!("{}: {e}", p.display())))?,
        );
    }
    Ok(traces)
}

fn filtered_chunks(
    ast: &DesignAst,
    g: &DesignCdfg,
    a: &SvaAssertion,
    top_k: usize,
) -> Result<Vec<RtlChunk>> {
    let index = build_index(chunk_design(ast));
    let scored = retrieve_for_assertion(&index, a, top_k);
    Ok(fine_filter(&scored, a, g, None).expect("heuristic filter is infallible"))
}

fn run(cmd: Cmd) -> Result<i32> {
    match cmd {
        Cmd::Parse { files } => {
            let ast = load_design(&files)?;
            for m in &ast.modules {
                println!(
                    "module {}: {} ports, {} nets, {} always blocks, {} assigns, {} instances",
                    m.name,
                    m.ports.len(),
                    m.nets.len(),
                    m.always_blocks.len(),
                    m.assigns.len(),
                    m.instances.len()
                );
            }
            Ok(0)
        }
        Cmd::Cdfg { files, dot } => {
            let ast = load_design(&files)?;
            let g = build_cdfg(&ast).map_err(data)?;
            match dot {
                Some(path) if path.as_os_str() == "-" => print!("{}", to_dot(&g)),
                Some(path) => fs::write(&path, to_dot(&g))
                    .map_err(|source| PipelineError::Io { path, source })?,
                None => {
                    println!("{} nodes, {} edges", g.nodes().len(), g.edges().len());
                    for n in g.nodes() {
                        println!("  {} [{}]", n.name, n.width);
                    }
                }
            }
            Ok(0)
        }
        Cmd::Retrieve {
            assertion,
            top_k,
            json,
            files,
        } => {
            if top_k == 0 {
                return Err(usage("--top-k must be positive"));
            }
            let ast = load_design(&files)?;
            let a = load_assertion(&assertion)?;
            let index = build_index(chunk_design(&ast));
            let scored = retrieve_for_assertion(&index, &a, top_k);
            if json {
                let chunks: Vec<RtlChunk> = scored.iter().map(|(c, _)| c.clone()).collect();
                println!("{}", chunk_dump(&chunks));
            } else {
                for (c, score) in &scored {
                    println!(
                        "#{} {} {}:{}-{} score {:.2}",
                        c.id, c.module, c.file, c.start_line, c.end_line, score
                    );
                }
            }
            Ok(0)
        }
        Cmd::Classify {
            assertion,
            traces,
            shift_bound,
            top_k,
            files,
        } => {
            if shift_bound == 0 || top_k == 0 {
                return Err(usage("--shift-bound and --top-k must be positive"));
            }
            let ast = load_design(&files)?;
            let g = build_cdfg(&ast).map_err(data)?;
            let a = load_assertion(&assertion)?;
            let ts = load_traces(&a, &traces)?;
            let chunks = filtered_chunks(&ast, &g, &a, top_k)?;
            let cls = classify_error(&a, &ts, &chunks, &g, None, shift_bound).map_err(data)?;
            println!("kind: {:?}", cls.kind);
            println!("source: {:?}", cls.source);
            println!("evidence: {:?}", cls.evidence);
            println!("rationale: {}", cls.rationale);
            Ok(0)
        }
        Cmd::Check { assertion, traces } => {
            let a = load_assertion(&assertion)?;
            let ts = load_traces(&a, &traces)?;
            let mut results: Vec<EvalResult> = Vec::new();
            for (p, t) in traces.iter().zip(&ts) {
                let r = evaluate_assertion(&a, t).map_err(|e| data(format!("{}: {e}", p.display())))?;
                let verdict = if !r.passed {
                    "fail"
                } else if r.covered {
                    "pass"
                } else {
                    "vacuous"
                };
                println!(
                    "{}: {verdict} ({} attempts, first failing cycle {})",
                    p.display(),
                    r.attempts.len(),
                    r.first_failing_cycle
                        .map_or("none".to_string(), |c| c.to_string()),
                );
                results.push(r);
            }
            if results.iter().any(|r| !r.passed) {
                Ok(1)
            } else if results.iter().any(|r| r.covered) {
                Ok(0)
            } else {
                Ok(2)
            }
        }
        Cmd::Fix {
            config,
            backend,
            fixtures,
            shift_bound,
            top_k,
            out,
            jobs,
            seed,
        } => {
            let mut cfg = PipelineConfig::load(&config)?;
            match backend {
                Some(BackendArg::Http) => {
                    // Endpoint and model must come from the environment
                    // when the config file configured another backend.
                    if !matches!(cfg.backend, Backend::Http { .. }) {
                        let endpoint = svafix::llm::HttpClient::env_endpoint()
                            .ok_or_else(|| usage("--backend http needs SVAFIX_LLM_ENDPOINT"))?;
                        let model = svafix::llm::HttpClient::env_model()
                            .ok_or_else(|| usage("--backend http needs SVAFIX_LLM_MODEL"))?;
                        cfg.backend = Backend::Http {
                            endpoint,
                            model,
                            api_key_env: "SVAFIX_LLM_API_KEY".to_string(),
                        };
                    }
                }
                Some(BackendArg::Replay) => {
                    let f = fixtures
                        .clone()
                        .or(match &cfg.backend {
                            Backend::Replay { fixtures } => Some(fixtures.clone()),
                            _ => None,
                        })
                        .ok_or_else(|| usage("--backend replay needs --fixtures"))?;
                    cfg.backend = Backend::Replay { fixtures: f };
                }
                Some(BackendArg::Mock) => cfg.backend = Backend::Mock { rules: Vec::new() },
                None => {
                    if let Some(f) = &fixtures {
                        cfg.backend = Backend::Replay {
                            fixtures: f.clone(),
                        };
                    }
                }
            }
            if let Some(k) = shift_bound {
                cfg.shift_bound = k;
            }
            if let Some(k) = top_k {
                cfg.top_k = k;
            }
            if let Some(o) = out {
                cfg.out = o;
            }
            if let Some(j) = jobs {
                cfg.jobs = j;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = run_pipeline(&cfg)?;
            for row in &report.assertions {
                match &row.fixed {
                    Some(f) => println!("{}: {} -> {f}", row.name, row.status),
                    None => println!("{}: {}", row.name, row.status),
                }
            }
            println!(
                "TE {}/{} LE {}/{} FR {}",
                report.counts.te_attempted,
                report.counts.te_fixed,
                report.counts.le_attempted,
                report.counts.le_fixed,
                report.fr
            );
            println!("report written to {}", cfg.out.join("report.json").display());
            Ok(0)
        }
        Cmd::Report { file, format } => {
            let text = read(&file)?;
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| data(format!("{}: {e}", file.display())))?;
            validate_report_json(&value).map_err(|e| data(format!("{}: {e}", file.display())))?;
            let report: FixReport = serde_json::from_value(value)
                .map_err(|e| data(format!("{}: {e}", file.display())))?;
            let rendered = match format {
                FormatArg::Json => emit_report(&report, ReportFormat::Json),
                FormatArg::Markdown => emit_report(&report, ReportFormat::Markdown),
            };
            print!("{}", String::from_utf8(rendered).expect("reports are utf-8"));
            Ok(0)
        }
    }
}
