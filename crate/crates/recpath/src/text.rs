//! Human-readable report formatting.

use std::fmt::Write;
use std::io::IsTerminal;
use std::path::Path;

use recpath_core::report::{AnalysisReport, SuiteSource};
use recpath_core::testgen::{CoverageReport, DefectExposure};

#[derive(Debug, Clone, Copy)]
pub struct Style {
    color: bool,
}

impl Style {
    /// Colour on a terminal unless `RECPATH_COLOR=0`.
    pub fn detect() -> Self {
        let disabled = std::env::var("RECPATH_COLOR").is_ok_and(|v| v == "0");
        Style { color: !disabled && std::io::stdout().is_terminal() }
    }

    fn paint(&self, code: &str, s: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{s}\x1b[0m")
        } else {
            s.to_string()
        }
    }

    pub fn heading(&self, s: &str) -> String {
        self.paint("1", s)
    }

    pub fn warn(&self, s: &str) -> String {
        self.paint("33", s)
    }

    pub fn error(&self, s: &str) -> String {
        self.paint("31;1", s)
    }

    pub fn dim(&self, s: &str) -> String {
        self.paint("2", s)
    }
}

/// `Path-K` labels over the feasible traces, in enumeration order.
fn path_labels(report: &AnalysisReport) -> Vec<Option<usize>> {
    let mut k = 0;
    report
        .paths
        .traces
        .iter()
        .map(|t| {
            t.feasible.then(|| {
                k += 1;
                k
            })
        })
        .collect()
}

fn label(labels: &[Option<usize>], index: usize) -> String {
    match labels.get(index).copied().flatten() {
        Some(k) => format!("Path-{k}"),
        None => "-".to_string(),
    }
}

fn list<T: ToString>(items: &[T]) -> String {
    if items.is_empty() {
        "-".to_string()
    } else {
        items.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
    }
}

pub fn report(r: &AnalysisReport, file: &Path, style: Style) -> String {
    let mut s = String::new();
    let p = &r.program;
    let _ = writeln!(s, "{} {}", style.heading("program"), file.display());
    let _ = writeln!(s, "  entry {}, functions {}, globals {}", p.entry, list(&p.functions), list(&p.globals));
    if !p.omitted.is_empty() {
        let _ = writeln!(s, "  omitted {}", list(&p.omitted));
    }

    let _ = writeln!(s, "\n{}", style.heading("flow graphs"));
    let width = r.graphs.iter().map(|g| g.function.len()).max().unwrap_or(0);
    for g in &r.graphs {
        let ids: Vec<String> = g.nodes.iter().map(|n| n.id.to_string()).collect();
        let _ = writeln!(
            s,
            "  {:width$}  nodes {:>2}  edges {:>2}  predicates {}  V(G) {}  [{}]",
            g.function,
            g.nodes.len(),
            g.edges,
            g.predicates,
            g.cyclomatic_complexity,
            ids.join(" ")
        );
        for b in &g.basis_paths {
            let _ = writeln!(s, "  {:width$}    basis {b}", "");
        }
    }

    let _ = writeln!(s, "\n{}", style.heading("recursion"));
    for f in &r.recursion.functions {
        let level = r.recursion.nesting_levels.get(&f.function).copied().unwrap_or(0);
        let _ = write!(s, "  {:width$}  {:<10} level {level}", f.function, f.class.to_string());
        if !f.call_sites.is_empty() {
            let _ = write!(s, "  sites {}  base {}  recursive {}", list(&f.call_sites), list(&f.base_cases), list(&f.recursive_branches));
        }
        if f.non_terminating_risk {
            let _ = write!(s, "  {}", style.warn("no base case"));
        }
        s.push('\n');
    }
    for a in &r.recursion.aspects {
        let _ = writeln!(s, "  site {:>3}  {} -> {}  {}", a.call_site.to_string(), a.caller, a.callee, a.aspect);
    }

    let labels = path_labels(r);
    let _ = writeln!(s, "\n{} (depth {}, {})", style.heading("paths"), r.paths.depth, r.paths.render);
    for (t, l) in r.paths.traces.iter().zip(&labels) {
        match l {
            Some(k) => {
                let _ = writeln!(s, "Path-{k}. {}", t.rendered);
            }
            None => {
                let _ = writeln!(s, "{}", style.dim(&format!("infeasible. {}", t.rendered)));
            }
        }
    }

    s.push('\n');
    s.push_str(&tests(r, style));
    s.push_str(&reference(r, style));
    let source = match r.coverage.suite_source {
        SuiteSource::Derived => "derived test data",
        SuiteSource::Supplied => "supplied suite",
    };
    let _ = writeln!(s, "\n{} ({source})", style.heading("coverage"));
    s.push_str(&coverage_body(&r.coverage.report));
    s.push_str(&warnings(&r.warnings, style));
    s
}

pub fn tests(r: &AnalysisReport, style: Style) -> String {
    let labels = path_labels(r);
    let mut s = format!("{}\n", style.heading("test cases"));
    for c in &r.tests {
        let family = c.family_condition.as_ref().map_or("-", |f| f.text.as_str());
        let data = if c.condition.is_feasible() { format!("{:?}", c.data) } else { "none".to_string() };
        let _ = writeln!(
            s,
            "  {:<7} family {:<7} condition {:<14} data {:<6} expect {:?}  aspects {}",
            label(&labels, c.path),
            family,
            c.condition_text,
            data,
            c.expected_outputs,
            list(&c.aspects)
        );
    }
    s
}

pub fn reference(r: &AnalysisReport, style: Style) -> String {
    if r.reference.is_empty() {
        return String::new();
    }
    let mut s = format!("\n{}\n", style.heading("reference check"));
    for n in &r.reference {
        let verdict = if n.agrees { "agrees".to_string() } else { style.warn("DISCREPANCY") };
        let data = n.data.map_or(String::new(), |d| format!(" ; {d}"));
        let _ = writeln!(
            s,
            "  {}/{}  reference {}{data}  derived {}  {verdict}",
            n.predicate,
            if n.branch { "true" } else { "false" },
            n.reference,
            n.derived.as_deref().unwrap_or("-")
        );
        for note in &n.notes {
            let _ = writeln!(s, "    {note}");
        }
    }
    s
}

pub fn coverage(r: &CoverageReport, style: Style) -> String {
    format!("{}\n{}", style.heading("coverage"), coverage_body(r))
}

fn coverage_body(r: &CoverageReport) -> String {
    let mut s = String::new();
    let width = r.functions.iter().map(|f| f.function.len()).max().unwrap_or(0);
    for f in &r.functions {
        let _ = writeln!(
            s,
            "  {:width$}  nodes {}/{} ({:.2})  edges {}/{} ({:.2})  uncovered {}",
            f.function,
            f.covered.len(),
            f.total_nodes(),
            f.node_ratio,
            f.covered_edges.len(),
            f.total_edges,
            f.edge_ratio,
            list(&f.uncovered)
        );
    }
    for run in &r.runs {
        let _ = writeln!(s, "  run {:?} -> {:?}  {}", run.inputs, run.outputs, run.trace);
    }
    s
}

pub fn warnings(w: &[DefectExposure], style: Style) -> String {
    let mut s = format!("\n{}\n", style.heading("warnings"));
    if w.is_empty() {
        s.push_str("  none\n");
    }
    for d in w {
        let _ = writeln!(s, "  {} [{}] {}", style.warn(&d.code.to_string()), d.subject, d.message);
    }
    s
}
