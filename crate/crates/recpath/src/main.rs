use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use recpath_core::flowgraph::{to_dot, NodeMap, OmitTarget};
use recpath_core::frontend::parse_source;
use recpath_core::interp::{run_from, ExecConfig, DEFAULT_STEP_LIMIT};
use recpath_core::model::ProgramModel;
use recpath_core::paths::{enumerate_paths_pruned, render_trace, EnumOptions, RenderMode, DEFAULT_DEPTH, DEFAULT_MAX_PATHS};
use recpath_core::recursion::RecursionAnalysis;
use recpath_core::report::{analyze, ReportOptions};
use recpath_core::testgen::{coverage, feasible_prefix, path_condition, Reference, DEFAULT_RANGE};

mod text;

use text::Style;

/// Path-oriented test design for recursive MiniLang programs.
#[derive(Parser, Debug)]
#[command(name = "recpath", version)]
struct Cli {
    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Sidecar assigning node ids (`function.key = id` per line).
    #[arg(long, global = true, value_name = "FILE")]
    node_map: Option<PathBuf>,
    /// Function to start from instead of `main`.
    #[arg(long, global = true, value_name = "NAME")]
    entry: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full report: graphs, recursion, paths, test cases, coverage, warnings.
    Analyze {
        #[command(flatten)]
        program: ProgramArgs,
        #[command(flatten)]
        paths: PathArgs,
        #[arg(long, default_value_t = DEFAULT_RANGE)]
        range: i64,
        /// Reference conditions to check against the derived ones.
        #[arg(long, value_name = "FILE")]
        reference: Option<PathBuf>,
        /// Measure coverage with this suite instead of the derived test data.
        #[arg(long, value_name = "FILE")]
        suite: Option<PathBuf>,
    },
    /// Enumerate bounded execution paths, one `Path-K.` line each.
    Paths {
        #[command(flatten)]
        program: ProgramArgs,
        #[command(flatten)]
        paths: PathArgs,
        /// Also list traces no input can follow.
        #[arg(long)]
        all: bool,
        #[arg(long, default_value_t = DEFAULT_RANGE)]
        range: i64,
    },
    /// Derive a test condition and test data for every path.
    Tests {
        #[command(flatten)]
        program: ProgramArgs,
        #[command(flatten)]
        paths: PathArgs,
        #[arg(long, default_value_t = DEFAULT_RANGE)]
        range: i64,
        #[arg(long, value_name = "FILE")]
        reference: Option<PathBuf>,
    },
    /// Run a suite (`[{"inputs":[0]}, ...]`) and report coverage and warnings.
    Coverage {
        #[command(flatten)]
        program: ProgramArgs,
        #[arg(long, value_name = "FILE")]
        suite: PathBuf,
    },
    /// Execute the program on the given inputs.
    Run {
        #[command(flatten)]
        program: ProgramArgs,
        /// Comma-separated input values, consumed by parameters then `read()`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        input: Vec<i64>,
        #[arg(long, value_enum, default_value_t = TraceMode::Off)]
        trace: TraceMode,
        #[arg(long, default_value_t = DEFAULT_STEP_LIMIT)]
        step_limit: usize,
    },
    /// Print the flow graphs in Graphviz DOT form.
    Dot {
        #[command(flatten)]
        program: ProgramArgs,
        /// Write to a file instead of stdout.
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct ProgramArgs {
    /// MiniLang source file.
    file: PathBuf,
    /// Remove a function or a node id before analysis; repeatable.
    #[arg(long, value_name = "ID|NAME")]
    omit: Vec<OmitTarget>,
}

#[derive(Args, Debug)]
struct PathArgs {
    /// Activations of one function allowed in a call chain.
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    depth: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_PATHS)]
    max_paths: usize,
    #[arg(long, default_value_t = RenderMode::Full)]
    render: RenderMode,
    /// Drop provably infeasible prefixes while enumerating.
    #[arg(long)]
    prune: bool,
}

impl PathArgs {
    fn options(&self) -> EnumOptions {
        EnumOptions { depth: self.depth, max_paths: self.max_paths }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum TraceMode {
    Off,
    Full,
    Paper,
}

impl TraceMode {
    fn render(self) -> Option<RenderMode> {
        match self {
            TraceMode::Off => None,
            TraceMode::Full => Some(RenderMode::Full),
            TraceMode::Paper => Some(RenderMode::Paper),
        }
    }
}

#[derive(Deserialize)]
struct SuiteEntry {
    inputs: Vec<i64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let style = Style::detect();
    match execute(&cli, style) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = io::stdout().flush();
            eprintln!("{} {e:#}", style.error("error:"));
            ExitCode::from(1)
        }
    }
}

fn execute(cli: &Cli, style: Style) -> Result<()> {
    let mut out = io::stdout().lock();
    match &cli.command {
        Command::Analyze { program, paths, range, reference, suite } => {
            let model = load(cli, program)?;
            let options = ReportOptions {
                paths: paths.options(),
                range: *range,
                render: paths.render,
                prune: paths.prune,
                suite: suite.as_deref().map(load_suite).transpose()?,
                reference: reference.as_deref().map(load_reference).transpose()?,
            };
            let report = analyze(&model, &options)?;
            if cli.json {
                emit_json(&mut out, &report)?;
            } else {
                write!(out, "{}", text::report(&report, &program.file, style))?;
            }
        }
        Command::Paths { program, paths, all, range } => {
            let model = load(cli, program)?;
            let analysis = RecursionAnalysis::new(model.flow());
            let set = if paths.prune {
                enumerate_paths_pruned(&model, model.entry(), paths.options(), &mut feasible_prefix(&model))?
            } else {
                enumerate_paths_pruned(&model, model.entry(), paths.options(), &mut |_| true)?
            };
            let mut lines = Vec::new();
            for t in &set.traces {
                let feasible = path_condition(t, &model, *range).is_feasible();
                if feasible || *all {
                    lines.push(PathLine { trace: render_trace(t, paths.render, &model, &analysis), feasible });
                }
            }
            if cli.json {
                emit_json(&mut out, &PathsJson { depth: set.depth, truncated: set.truncated, pruned: set.pruned, paths: lines })?;
            } else {
                for (k, l) in lines.iter().enumerate() {
                    let mark = if l.feasible { String::new() } else { format!("  {}", style.dim("[infeasible]")) };
                    writeln!(out, "Path-{}. {}{mark}", k + 1, l.trace)?;
                }
                if set.truncated {
                    eprintln!("{}", style.dim(&format!("note: some prefixes stopped at depth {} or at {} paths", set.depth, paths.max_paths)));
                }
            }
        }
        Command::Tests { program, paths, range, reference } => {
            let model = load(cli, program)?;
            let options = ReportOptions {
                paths: paths.options(),
                range: *range,
                render: paths.render,
                prune: paths.prune,
                suite: None,
                reference: reference.as_deref().map(load_reference).transpose()?,
            };
            let report = analyze(&model, &options)?;
            if cli.json {
                emit_json(&mut out, &TestsJson { tests: &report.tests, reference: &report.reference })?;
            } else {
                write!(out, "{}", text::tests(&report, style))?;
                write!(out, "{}", text::reference(&report, style))?;
            }
        }
        Command::Coverage { program, suite } => {
            let model = load(cli, program)?;
            let analysis = RecursionAnalysis::new(model.flow());
            let report = coverage(&model, &analysis, &load_suite(suite)?)?;
            if cli.json {
                emit_json(&mut out, &report)?;
            } else {
                write!(out, "{}", text::coverage(&report, style))?;
                write!(out, "{}", text::warnings(&report.warnings, style))?;
            }
        }
        Command::Run { program, input, trace, step_limit } => {
            let model = load(cli, program)?;
            let config = ExecConfig { inputs: input.clone(), step_limit: *step_limit };
            let result = run_from(&model, model.entry(), &config)?;
            let rendered = trace.render().map(|mode| {
                let analysis = RecursionAnalysis::new(model.flow());
                render_trace(&result, mode, &model, &analysis)
            });
            if cli.json {
                emit_json(&mut out, &RunJson { outputs: &result.outputs, result: result.result, steps: result.step_count, trace: rendered })?;
            } else {
                for v in &result.outputs {
                    writeln!(out, "{v}")?;
                }
                if let Some(t) = rendered {
                    writeln!(out, "trace: {t}")?;
                }
            }
        }
        Command::Dot { program, output } => {
            let model = load(cli, program)?;
            let dot = to_dot(model.graphs());
            match output {
                Some(path) => fs::write(path, dot).with_context(|| format!("cannot write {}", path.display()))?,
                None => out.write_all(dot.as_bytes())?,
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct PathLine {
    trace: String,
    feasible: bool,
}

#[derive(Serialize)]
struct PathsJson {
    depth: usize,
    truncated: bool,
    pruned: usize,
    paths: Vec<PathLine>,
}

#[derive(Serialize)]
struct TestsJson<'a, T: Serialize, R: Serialize> {
    tests: &'a T,
    reference: &'a R,
}

#[derive(Serialize)]
struct RunJson<'a> {
    outputs: &'a [i64],
    result: Option<i64>,
    steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<String>,
}

fn emit_json(out: &mut impl Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn read(path: &Path, what: &str) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {what} {}", path.display()))
}

fn load(cli: &Cli, program: &ProgramArgs) -> Result<ProgramModel> {
    let file = &program.file;
    let source = read(file, "source file")?;
    let ast = parse_source(&source).map_err(|e| anyhow::anyhow!("{}:{e}", file.display()))?;
    let map = match &cli.node_map {
        Some(p) => Some(NodeMap::parse(&read(p, "node map")?).with_context(|| p.display().to_string())?),
        None => None,
    };
    let mut model = ProgramModel::new(ast, map.as_ref()).with_context(|| file.display().to_string())?;
    for target in &program.omit {
        model.omit(target).with_context(|| format!("cannot omit `{target}`"))?;
    }
    if let Some(entry) = &cli.entry {
        model.set_entry(entry)?;
    }
    Ok(model)
}

fn load_suite(path: &Path) -> Result<Vec<Vec<i64>>> {
    let entries: Vec<SuiteEntry> =
        serde_json::from_str(&read(path, "suite")?).with_context(|| format!("{}: expected [{{\"inputs\": [..]}}, ..]", path.display()))?;
    Ok(entries.into_iter().map(|e| e.inputs).collect())
}

fn load_reference(path: &Path) -> Result<Reference> {
    Reference::parse(&read(path, "reference")?).with_context(|| path.display().to_string())
}
