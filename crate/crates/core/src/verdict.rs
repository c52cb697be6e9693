//! Decision rules turning locus and monodromy evidence into a verdict.

use std::fmt;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::locus::{BranchLocus, InfiniteLocusEvidence};
use crate::permgroup::{is_trivial_system, ClosureSize, GroupReport, Partition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Solvable,
    Unsolvable,
    Inconclusive,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Solvable => 0,
            Status::Unsolvable => 1,
            Status::Inconclusive => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Inf,
    Wielandt,
    FinUnsolvable,
    FinSolvable,
    NoEvidence,
}

impl Rule {
    pub const PRIORITY: [Rule; 5] = [
        Rule::Inf,
        Rule::Wielandt,
        Rule::FinUnsolvable,
        Rule::FinSolvable,
        Rule::NoEvidence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Inf => "R-INF",
            Rule::Wielandt => "R-WIELANDT",
            Rule::FinUnsolvable => "R-FIN-UNSOLVABLE",
            Rule::FinSolvable => "R-FIN-SOLVABLE",
            Rule::NoEvidence => "R-NOEVIDENCE",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Rule {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    Criterion,
    Heuristic,
}

/// Everything the rules look at.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    pub locus: BranchLocus,
    pub growth: InfiniteLocusEvidence,
    /// Root counts of `f(x) = a0` over the growth windows.
    pub root_counts: Vec<usize>,
    /// Group generated by the critical-value loops.
    pub group: GroupReport,
    /// Critical-value loops that could not be tracked.
    pub failed_generators: usize,
    pub tower_depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleOutcome {
    pub rule: Rule,
    pub fired: bool,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub rule: Rule,
    pub confidence: Confidence,
    /// Every rule in priority order with the reason it did or did not fire.
    pub rules: Vec<RuleOutcome>,
    /// Nontrivial invariant partition of the roots, if the action has one:
    /// a nontrivial block system for a transitive action, otherwise the
    /// orbit partition.
    pub decomposition_witness: Option<Partition>,
}

fn strictly_increasing(v: &[usize]) -> bool {
    v.len() >= 2 && v.windows(2).all(|p| p[1] > p[0])
}

fn constant(v: &[usize]) -> bool {
    v.windows(2).all(|p| p[1] == p[0])
}

fn evaluate(rule: Rule, ev: &Evidence) -> (bool, String) {
    let g = &ev.group;
    let escapes = !g.escaped_generators.is_empty();
    let finite = g.closure_size.exact();
    match rule {
        Rule::Inf => {
            let growth = ev.growth.monotone_growth;
            let fs = g.has_finite_support_gen;
            let reason = format!(
                "critical value counts {:?} (threshold {}): monotone growth {}; finite-support generator {}",
                ev.growth.counts, ev.growth.threshold, growth, fs
            );
            (growth && fs, reason)
        }
        Rule::Wielandt => {
            let capped = matches!(g.closure_size, ClosureSize::Capped(_));
            let roots_grow = strictly_increasing(&ev.root_counts);
            let primitive = g.primitive == Some(true);
            let fs = g.has_finite_support_gen;
            let reason = format!(
                "closure capped {capped}; root counts {:?} increasing {roots_grow}; primitive {:?}; finite-support generator {fs}",
                ev.root_counts, g.primitive
            );
            ((capped || roots_grow) && primitive && fs, reason)
        }
        Rule::FinUnsolvable => {
            let reason = format!(
                "closure {}; escaped generators {}; derived series {:?}",
                closure_text(g.closure_size),
                g.escaped_generators.len(),
                sizes_text(&g.derived_sizes)
            );
            (finite.is_some() && !escapes && g.solvable == Some(false), reason)
        }
        Rule::FinSolvable => {
            let stable = constant(&ev.growth.counts);
            let reason = format!(
                "closure {}; escaped generators {}; failed generators {}; solvable {:?}; critical value counts {:?} constant {}",
                closure_text(g.closure_size),
                g.escaped_generators.len(),
                ev.failed_generators,
                g.solvable,
                ev.growth.counts,
                stable
            );
            let fired = finite.is_some()
                && !escapes
                && ev.failed_generators == 0
                && g.solvable == Some(true)
                && stable;
            (fired, reason)
        }
        Rule::NoEvidence => (true, "no earlier rule fired".to_string()),
    }
}

fn closure_text(c: ClosureSize) -> String {
    match c {
        ClosureSize::Exact(n) => format!("order {n}"),
        ClosureSize::Capped(n) => format!("capped after {n} elements"),
    }
}

fn sizes_text(sizes: &[ClosureSize]) -> Vec<String> {
    sizes
        .iter()
        .map(|s| match s {
            ClosureSize::Exact(n) => n.to_string(),
            ClosureSize::Capped(n) => format!(">{n}"),
        })
        .collect()
}

fn decomposition_witness(g: &GroupReport) -> Option<Partition> {
    match &g.blocks {
        Some(blocks) => blocks.iter().find(|p| !is_trivial_system(p, g.degree)).cloned(),
        None => (g.orbits.len() > 1 && g.orbits.iter().any(|o| o.len() > 1)).then(|| g.orbits.clone()),
    }
}

/// First rule in priority order that fires decides the verdict.
pub fn decide(ev: &Evidence) -> Verdict {
    let mut rules: Vec<RuleOutcome> = Vec::with_capacity(Rule::PRIORITY.len());
    for rule in Rule::PRIORITY {
        let (holds, reason) = evaluate(rule, ev);
        let fired = holds && (rule != Rule::NoEvidence || rules.iter().all(|r| !r.fired));
        rules.push(RuleOutcome { rule, fired, reason });
    }
    let rule = rules.iter().find(|r| r.fired).expect("R-NOEVIDENCE always fires").rule;
    let (status, confidence) = match rule {
        Rule::Inf | Rule::Wielandt => (Status::Unsolvable, Confidence::Heuristic),
        Rule::FinUnsolvable => (Status::Unsolvable, Confidence::Criterion),
        Rule::FinSolvable => (Status::Solvable, Confidence::Criterion),
        Rule::NoEvidence => (Status::Inconclusive, Confidence::Heuristic),
    };
    Verdict {
        status,
        rule,
        confidence,
        rules,
        decomposition_witness: decomposition_witness(&ev.group),
    }
}

/// Short human-readable summary of a verdict and its evidence.
pub fn render_text(v: &Verdict, ev: &Evidence) -> String {
    let mut out = String::new();
    out.push_str(&format!("status: {:?} ({}, {:?})\n", v.status, v.rule, v.confidence));
    out.push_str(&format!("critical values: {}\n", ev.locus.len()));
    for a in &ev.locus.values {
        out.push_str(&format!("  {}\n", fmt_complex(*a)));
    }
    out.push_str(&format!("growth counts: {:?}\n", ev.growth.counts));
    out.push_str(&format!("root counts: {:?}\n", ev.root_counts));
    out.push_str(&format!("degree: {}\n", ev.group.degree));
    for (i, g) in ev.group.generators.iter().enumerate() {
        out.push_str(&format!("  g{i} = {g}\n"));
    }
    out.push_str(&format!("closure: {}\n", closure_text(ev.group.closure_size)));
    out.push_str(&format!("derived series: {}\n", sizes_text(&ev.group.derived_sizes).join(" -> ")));
    if let Some(w) = &v.decomposition_witness {
        out.push_str(&format!("decomposition witness: {w:?}\n"));
    }
    for r in &v.rules {
        let mark = if r.fired { "fired" } else { "no" };
        out.push_str(&format!("{:<17} {:<5} {}\n", r.rule.name(), mark, r.reason));
    }
    out
}

pub fn fmt_complex(z: Complex64) -> String {
    if z.im >= 0.0 {
        format!("{:.10}+{:.10}i", z.re, z.im)
    } else {
        format!("{:.10}-{:.10}i", z.re, -z.im)
    }
}
