// SPDX-License-Identifier: Apache-2.0

//! `rtlfix`: the toolkit as a batch command line.
//!
//! Exit codes: 0 success or Pass, 1 Fail (or diagnostics, or an exhausted
//! repair loop), 2 tool and usage errors.

mod manifest;

use std::fs;
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use rtlfix_core::concolic::{explore, CoverageReport, InputSet};
use rtlfix_core::config::Config;
use rtlfix_core::instrument::InstrumentedDesign;
use rtlfix_core::oracle::stub::{serve, ServeEnd};
use rtlfix_core::oracle::{differential_check, CounterModel, Faults, ModelSpec, RtlModel, Verdict};
use rtlfix_core::repair::{run_loop, CompletionClient, LoopStatus, MockClient};
use rtlfix_core::report::metrics::{summary, ResultRow};
use rtlfix_core::report::{build_coverage_message, build_redundancy_prompt, build_syntax_prompt, build_trace_debug_prompt, PromptArtifact};
use rtlfix_core::sim::{run, InputVector};
use rtlfix_core::verilog::{parse_module, validate_interface, AstModule, Diagnostic, Direction, PortSpec};

#[derive(Parser, Debug)]
#[command(name = "rtlfix", version, about = "Parse, instrument, simulate, explore and differentially check Verilog, and drive the repair loop")]
struct Cli {
    /// Config file (TOML, or JSON by extension) with a section per module.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for machine-readable output.
    #[arg(short, long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// More logging; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Parse and validate a module; writes diagnostics.json.
    Parse {
        rtl: PathBuf,
        /// Expected interface, `{"ports":[{"name","direction","width"}]}`.
        #[arg(long)]
        port_spec: Option<PathBuf>,
    },
    /// Emit instrumented RTL and the branch map.
    Instrument { rtl: PathBuf },
    /// Run one input vector; writes trace.json and trace.jsonl.
    Simulate { rtl: PathBuf, inputs: PathBuf },
    /// Explore from seeds; writes full_inputs.json and coverage.json.
    Concolic {
        rtl: PathBuf,
        /// Seed vectors. Without one a reset seed is used.
        #[arg(long)]
        seed: Option<PathBuf>,
        /// Length of the reset seed.
        #[arg(long, default_value_t = 3)]
        cycles: usize,
        #[arg(long)]
        max_solver_calls: Option<usize>,
    },
    /// Check against a golden model; writes verdict.json.
    Diff {
        rtl: PathBuf,
        inputs: PathBuf,
        #[command(flatten)]
        oracle: OracleArgs,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Write a feedback prompt from reports.
    Prompt {
        #[command(subcommand)]
        kind: PromptCmd,
    },
    /// pass@k and FPR from a results CSV with header `problem,n,c`.
    Metrics {
        csv: PathBuf,
        /// Values of k; defaults to the config's, else 1 and 5.
        #[arg(long = "k")]
        ks: Vec<u64>,
    },
    /// Run the full repair loop from a run manifest.
    Loop {
        manifest: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
        /// Scripted responses (JSON array) instead of the configured client.
        #[arg(long)]
        mock_responses: Option<PathBuf>,
    },
    /// Serve a reference model over stdin/stdout: the counter, or a module.
    StubOracle {
        #[arg(long)]
        rtl: Option<PathBuf>,
        #[arg(long)]
        tags: bool,
    },
}

#[derive(Subcommand, Debug)]
enum PromptCmd {
    /// Compiler diagnostics for a module that does not parse.
    Syntax { rtl: PathBuf },
    /// Trace feedback for the first mismatch in a verdict.json.
    Trace {
        rtl: PathBuf,
        verdict: PathBuf,
        /// Which mismatch to use.
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Potentially-unreachable branches from a coverage.json.
    Redundancy { rtl: PathBuf, coverage: PathBuf },
    /// Uncovered reference-model regions.
    Coverage {
        model: PathBuf,
        /// All region tags of the model, comma separated.
        #[arg(long, value_delimiter = ',')]
        tags: Vec<String>,
        /// Tags the current vectors exercised.
        #[arg(long, value_delimiter = ',')]
        seen: Vec<String>,
    },
}

#[derive(Args, Debug)]
struct OracleArgs {
    /// Golden model command line, e.g. "python3 golden.py".
    #[arg(long)]
    oracle: Option<String>,
    #[arg(long)]
    oracle_timeout_ms: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("rtlfix: error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    let config = match &cli.config {
        Some(p) => Config::load(p).map_err(|e| anyhow!(e))?,
        None => Config::default(),
    };
    let out = cli.out_dir.as_path();
    match cli.cmd {
        Cmd::Parse { rtl, port_spec } => cmd_parse(&rtl, port_spec.as_deref(), out),
        Cmd::Instrument { rtl } => cmd_instrument(&rtl, out),
        Cmd::Simulate { rtl, inputs } => cmd_simulate(&rtl, &inputs, out),
        Cmd::Concolic { rtl, seed, cycles, max_solver_calls } => {
            let mut budget = config.concolic;
            if let Some(n) = max_solver_calls {
                budget.max_solver_calls = n;
            }
            cmd_concolic(&rtl, seed.as_deref(), cycles, budget, out)
        }
        Cmd::Diff { rtl, inputs, oracle, jobs } => {
            let spec = oracle_spec(&oracle, &config)?;
            cmd_diff(&rtl, &inputs, &spec, jobs.unwrap_or(config.diff.jobs), out)
        }
        Cmd::Prompt { kind } => cmd_prompt(kind, out),
        Cmd::Metrics { csv, ks } => cmd_metrics(&csv, if ks.is_empty() { &config.metrics.ks } else { &ks }, out),
        Cmd::Loop { manifest, jobs, mock_responses } => cmd_loop(&manifest, jobs, mock_responses.as_deref(), &cli.config),
        Cmd::StubOracle { rtl, tags } => cmd_stub(rtl.as_deref(), tags),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_json(path: &Path) -> Result<Value> {
    serde_json::from_str(&read(path)?).with_context(|| format!("{} is not valid JSON", path.display()))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let p = dir.join(name);
    fs::write(&p, text).with_context(|| format!("cannot write {}", p.display()))?;
    Ok(p)
}

fn write_json(dir: &Path, name: &str, v: &Value) -> Result<PathBuf> {
    write(dir, name, &(serde_json::to_string_pretty(v)? + "\n"))
}

fn parse_file(path: &Path) -> Result<(String, AstModule)> {
    let text = read(path)?;
    let m = parse_module(&text).map_err(|e| anyhow!("{}", e.render(&path.display().to_string())))?;
    Ok((text, m))
}

fn load_design(path: &Path) -> Result<(String, InstrumentedDesign)> {
    let (text, m) = parse_file(path)?;
    let d = InstrumentedDesign::from_module(m).with_context(|| format!("cannot instrument {}", path.display()))?;
    Ok((text, d))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "design".into())
}

fn oracle_spec(args: &OracleArgs, config: &Config) -> Result<ModelSpec> {
    let mut spec = match &args.oracle {
        Some(line) => ModelSpec::new(&shlex::split(line).ok_or_else(|| anyhow!("cannot split oracle command `{line}`"))?),
        None => config.oracle.clone().ok_or_else(|| anyhow!("no golden model: pass --oracle or set [oracle] in the config"))?,
    };
    if spec.command.is_empty() {
        bail!("empty oracle command");
    }
    if let Some(ms) = args.oracle_timeout_ms {
        spec.timeout_ms = ms;
    }
    Ok(spec)
}

fn cmd_parse(rtl: &Path, port_spec: Option<&Path>, out: &Path) -> Result<ExitCode> {
    let text = read(rtl)?;
    let file = rtl.display().to_string();
    let (name, mut diags) = match parse_module(&text) {
        Ok(m) => {
            let mut d = Vec::new();
            if let Some(p) = port_spec {
                let spec = PortSpec::from_json(&read(p)?).map_err(|e| anyhow!("{}: {e}", p.display()))?;
                if let Err(errs) = validate_interface(&m, &spec) {
                    d = errs.iter().map(|e| Diagnostic::error(m.pos, format!("interface: {e}"))).collect();
                }
            }
            (Some(m.name), d)
        }
        Err(e) => (None, e.diagnostics().to_vec()),
    };
    diags.sort_by_key(|d| (d.pos.line, d.pos.column));
    let report = json!({
        "file": file,
        "module": name,
        "ok": diags.is_empty(),
        "diagnostics": diags.iter().map(|d| json!({
            "line": d.pos.line,
            "column": d.pos.column,
            "severity": d.severity.to_string(),
            "message": d.message,
        })).collect::<Vec<_>>(),
    });
    write_json(out, "diagnostics.json", &report)?;
    if diags.is_empty() {
        println!("{file}: module `{}` is clean", name.unwrap_or_default());
        Ok(ExitCode::SUCCESS)
    } else {
        for d in &diags {
            println!("{}", d.render(&file));
        }
        println!("{} diagnostics", diags.len());
        Ok(ExitCode::from(1))
    }
}

fn cmd_instrument(rtl: &Path, out: &Path) -> Result<ExitCode> {
    let (_, d) = load_design(rtl)?;
    let s = stem(rtl);
    let v = write(out, &format!("{s}.instrumented.v"), &d.text())?;
    let b = write_json(out, &format!("{s}.branches.json"), &d.branch_map.to_json())?;
    println!("{} branches; wrote {} and {}", d.branch_count(), v.display(), b.display());
    for (id, info) in &d.branch_map.branches {
        println!("  {id}: line {} `{}`", info.pos.line, info.condition);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(rtl: &Path, inputs: &Path, out: &Path) -> Result<ExitCode> {
    let (_, d) = load_design(rtl)?;
    let v = InputVector::from_json(&read_json(inputs)?, &d.design.input_ports()).context("bad input vector")?;
    let t = run(&d, &v).context("simulation failed")?;
    write_json(out, "trace.json", &Value::Array(t.records.iter().map(|r| r.to_json()).collect()))?;
    write(out, "trace.jsonl", &t.to_jsonl())?;
    for r in &t.records {
        let bs: Vec<String> = r.branches.iter().map(|b| b.to_string()).collect();
        let outs: Vec<String> = r.outs.iter().map(|(k, v)| format!("{k}={}", v.to_hex())).collect();
        println!("cycle {}: [{}] {}", r.cycle, bs.join(", "), outs.join(" "));
    }
    println!("{} cycles, {} of {} branches covered", t.len(), t.covered().len(), d.branch_count());
    Ok(ExitCode::SUCCESS)
}

fn load_seeds(path: Option<&Path>, d: &InstrumentedDesign, cycles: usize) -> Result<InputSet> {
    let ports = d.design.input_ports();
    match path {
        Some(p) => InputSet::from_json(&read_json(p)?, &ports).with_context(|| format!("bad seed file {}", p.display())),
        None => Ok(InputSet::seeds(vec![InputVector::reset_seed(&ports, cycles.max(1))])),
    }
}

fn cmd_concolic(rtl: &Path, seed: Option<&Path>, cycles: usize, budget: rtlfix_core::concolic::ExploreBudget, out: &Path) -> Result<ExitCode> {
    let (_, d) = load_design(rtl)?;
    let seeds = load_seeds(seed, &d, cycles)?;
    let o = explore(&d, &seeds, budget).context("exploration failed")?;
    write_json(out, "full_inputs.json", &o.inputs.to_json())?;
    write_json(out, "coverage.json", &o.report.to_json())?;
    write_json(
        out,
        "explore_stats.json",
        &json!({
            "solver_calls": o.stats.solver_calls,
            "stepping_calls": o.stats.stepping,
            "sim_runs": o.stats.sim_runs,
            "extensions": o.stats.extensions,
            "attempts": o.stats.attempts.len(),
        }),
    )?;
    print_coverage(&o.report);
    println!("{} vectors, {} solver calls, {} simulations", o.inputs.len(), o.stats.solver_calls, o.stats.sim_runs);
    Ok(ExitCode::SUCCESS)
}

fn print_coverage(r: &CoverageReport) {
    println!("coverage {}/{} ({:.1}%)", r.covered(), r.total(), r.coverage_pct());
    for (b, c) in &r.branches {
        println!("  {b}: {} hits, {}", c.hits, c.class);
    }
}

fn cmd_diff(rtl: &Path, inputs: &Path, spec: &ModelSpec, jobs: usize, out: &Path) -> Result<ExitCode> {
    let (_, d) = load_design(rtl)?;
    let set = InputSet::from_json(&read_json(inputs)?, &d.design.input_ports()).context("bad input set")?;
    let v = differential_check(&d, spec, &set, jobs)?;
    write_json(out, "verdict.json", &v.to_json())?;
    Ok(report_verdict(&v, set.len()))
}

fn report_verdict(v: &Verdict, n: usize) -> ExitCode {
    match v {
        Verdict::Pass { vacuous: true } => {
            println!("PASS (vacuous: no vectors)");
            ExitCode::SUCCESS
        }
        Verdict::Pass { .. } => {
            println!("PASS over {n} vectors");
            ExitCode::SUCCESS
        }
        Verdict::Fail(ms) => {
            println!("FAIL: {} of {n} vectors diverge", ms.len());
            for m in ms.iter().take(10) {
                println!("  {m}");
            }
            ExitCode::from(1)
        }
    }
}

fn emit(p: &PromptArtifact, out: &Path, stem: &str) -> Result<ExitCode> {
    let (md, js) = p.write(out, stem)?;
    println!("{} prompt: wrote {} and {}", p.kind, md.display(), js.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_prompt(kind: PromptCmd, out: &Path) -> Result<ExitCode> {
    match kind {
        PromptCmd::Syntax { rtl } => {
            let text = read(&rtl)?;
            let diags = match parse_module(&text) {
                Ok(_) => Vec::new(),
                Err(e) => e.diagnostics().to_vec(),
            };
            if diags.is_empty() {
                println!("{} parses cleanly; no syntax prompt needed", rtl.display());
                return Ok(ExitCode::SUCCESS);
            }
            emit(&build_syntax_prompt(&text, &diags), out, "syntax-debug")
        }
        PromptCmd::Trace { rtl, verdict, index } => {
            let (text, d) = load_design(&rtl)?;
            let v = Verdict::from_json(&read_json(&verdict)?, &d.design).map_err(|e| anyhow!("{}: {e}", verdict.display()))?;
            let Some(m) = v.mismatches().get(index) else {
                println!("verdict has no mismatch {index}; no trace prompt needed");
                return Ok(ExitCode::SUCCESS);
            };
            emit(&build_trace_debug_prompt(&text, m), out, "trace-debug")
        }
        PromptCmd::Redundancy { rtl, coverage } => {
            let (text, d) = load_design(&rtl)?;
            let r = CoverageReport::from_json(&read_json(&coverage)?).map_err(|e| anyhow!("{}: {e}", coverage.display()))?;
            emit(&build_redundancy_prompt(&text, &r, &d.branch_map, &d.design), out, "redundancy")
        }
        PromptCmd::Coverage { model, tags, seen } => {
            let code = read(&model)?;
            let hit = tags.iter().filter(|t| seen.contains(t)).count();
            let pct = if tags.is_empty() { 100.0 } else { 100.0 * hit as f64 / tags.len() as f64 };
            emit(&build_coverage_message(&code, &tags, &seen, pct), out, "coverage-message")
        }
    }
}

fn cmd_metrics(csv_path: &Path, ks: &[u64], out: &Path) -> Result<ExitCode> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(csv_path).with_context(|| format!("cannot read {}", csv_path.display()))?;
    let rows: Vec<ResultRow> = rdr.deserialize().collect::<Result<_, _>>().with_context(|| format!("bad results CSV {}", csv_path.display()))?;
    let s = summary(&rows, ks)?;
    write_json(out, "metrics.json", &s)?;
    println!("{} problems", rows.len());
    for (k, v) in s.as_object().expect("summary is an object") {
        println!("{k} = {v}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_loop(path: &Path, jobs: Option<usize>, mock: Option<&Path>, cli_config: &Option<PathBuf>) -> Result<ExitCode> {
    let m = manifest::RunManifest::load(path)?;
    let config_path = m.config.clone().or_else(|| cli_config.clone());
    let config = match &config_path {
        Some(p) => Config::load(p).map_err(|e| anyhow!(e))?,
        None => Config::default(),
    };
    let mut lc = config.loop_config();
    if let Some(j) = jobs {
        lc.jobs = j;
    }
    lc.validate().map_err(|e| anyhow!(e))?;
    let oracle = m.oracle_spec(config.oracle.as_ref())?;
    let spec = PortSpec::from_json(&read(&m.port_spec)?).map_err(|e| anyhow!("{}: {e}", m.port_spec.display()))?;
    let rtl = read(&m.rtl)?;
    let inputs = seed_ports(&rtl, &spec);
    let seeds = match &m.seed {
        Some(p) => InputSet::from_json(&read_json(p)?, &inputs).with_context(|| format!("bad seed file {}", p.display()))?,
        None => InputSet::default(),
    };
    let mut client: Box<dyn CompletionClient> = match (mock, &config.client) {
        (Some(p), _) => Box::new(MockClient::from_file(p)?),
        (None, Some(c)) => c.build()?,
        (None, None) => bail!("no completion client: set [client] in the config or pass --mock-responses"),
    };
    let outcome = run_loop(&rtl, &spec, &lc, client.as_mut(), &oracle, &seeds);

    let dir = &m.output_dir;
    write(dir, "final.v", &outcome.final_rtl)?;
    let mut summary = outcome.to_json();
    summary["problem"] = json!(m.problem);
    write_json(dir, "outcome.json", &summary)?;
    if let Some(c) = &outcome.coverage {
        write_json(dir, "coverage.json", &c.to_json())?;
    }
    if let Some(v) = &outcome.verdict {
        write_json(dir, "verdict.json", &v.to_json())?;
    }
    if let Some(i) = &outcome.inputs {
        write_json(dir, "full_inputs.json", &i.to_json())?;
    }
    for (i, p) in outcome.prompts.iter().enumerate() {
        p.write(&dir.join("prompts"), &format!("{:02}-{}", i + 1, p.kind))?;
    }
    println!("{}: {}", m.problem, outcome.status);
    for (i, r) in outcome.log.iter().enumerate() {
        let cov = r.coverage_pct.map(|c| format!(" coverage {c:.1}%")).unwrap_or_default();
        println!("  {:>2}. {} [{:?}]{cov}: {}", i + 1, r.kind, r.verdict, r.note);
    }
    println!("outputs in {}", dir.display());
    Ok(if outcome.status == LoopStatus::Verified { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

/// Data inputs for decoding seeds. The initial RTL may not even parse, so
/// when it does not the clock is guessed from the port name.
fn seed_ports(rtl: &str, spec: &PortSpec) -> Vec<(String, u32)> {
    if let Some(d) = parse_module(rtl).ok().and_then(|m| rtlfix_core::sim::Design::lower(&m).ok()) {
        return d.input_ports();
    }
    spec.ports
        .iter()
        .filter(|p| p.direction == Direction::Input && !matches!(p.name.as_str(), "clk" | "clock"))
        .map(|p| (p.name.clone(), p.width))
        .collect()
}

fn cmd_stub(rtl: Option<&Path>, tags: bool) -> Result<ExitCode> {
    let stdin = BufReader::new(io::stdin().lock());
    let stdout = io::stdout().lock();
    let faults = Faults::default();
    let end = match rtl {
        Some(p) => {
            let (_, m) = parse_file(p)?;
            let d = rtlfix_core::sim::Design::lower(&m).with_context(|| format!("cannot lower {}", p.display()))?;
            serve(&mut RtlModel::new(Arc::new(d)), stdin, stdout, &faults, tags)?
        }
        None => serve(&mut CounterModel::default(), stdin, stdout, &faults, tags)?,
    };
    match end {
        ServeEnd::Done => Ok(ExitCode::SUCCESS),
        ServeEnd::Crash => Ok(ExitCode::from(3)),
        ServeEnd::Violation(m) => bail!("protocol violation: {m}"),
    }
}
