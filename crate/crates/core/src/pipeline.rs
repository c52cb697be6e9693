//! End-to-end runs: locus, base point, loops, group, verdict.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{differentiate, parse, tower_depth, Expr, ParseError};
use crate::locus::{
    asymptotic_values, branch_locus, find_critical_points, infinite_locus_evidence, BranchLocus, CriticalPoint,
    InfiniteLocusEvidence, LocusError, SearchDiagnostics, DEFAULT_INFINITY_THRESHOLD,
};
use crate::permgroup::{group_report, GroupReport, PartialPerm, PermError, DEFAULT_CLOSURE_CAP};
use crate::solve::{Tolerances, Window, WindowError};
use crate::tracker::{
    choose_base_point, find_roots, forbidden_set, loop_centers, monodromy_generators, track_loop_traced, Generator,
    GeneratorFailure, GeneratorKind, LoopOptions, LoopSpec, RootSet, TraceRecord, TrackError,
};
use crate::verdict::{decide, Evidence, Verdict};

pub const SCHEMA: &str = "galois-scope/1";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Window(#[from] WindowError),
    #[error("locus: {0}")]
    Locus(#[from] LocusError),
    #[error("tracker: {0}")]
    Track(#[from] TrackError),
    #[error("group: {0}")]
    Perm(#[from] PermError),
    #[error("loop index {index} out of range ({len} loops)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Parse(_) => 3,
            PipelineError::Window(_) | PipelineError::Config(_) => 4,
            PipelineError::Locus(_) => 5,
            PipelineError::Track(_) => 6,
            PipelineError::Perm(_) => 7,
            PipelineError::IndexOutOfRange { .. } => 8,
            PipelineError::Io(_) => 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisConfig {
    pub domain: Window,
    pub image: Window,
    pub tolerances: Tolerances,
    pub growth_steps: usize,
    pub infinity_threshold: usize,
    pub closure_cap: usize,
    pub loops: LoopOptions,
    /// Overrides the automatic base point.
    pub base: Option<Complex64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            domain: Window {
                re_min: -8.0,
                re_max: 8.0,
                im_min: -16.0,
                im_max: 16.0,
                grid_density: 4.0,
            },
            image: Window::square(8.0, 4.0),
            tolerances: Tolerances::default(),
            growth_steps: 3,
            infinity_threshold: DEFAULT_INFINITY_THRESHOLD,
            closure_cap: DEFAULT_CLOSURE_CAP,
            loops: LoopOptions::default(),
            base: None,
        }
    }
}

/// Locus and root set around the chosen base point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Setup {
    pub expression: String,
    pub derivative: String,
    pub tower_depth: usize,
    pub critical_points: Vec<CriticalPoint>,
    pub search: SearchDiagnostics,
    pub branch_locus: BranchLocus,
    pub asymptotic_values: Vec<Complex64>,
    pub base_point: Complex64,
    pub roots: RootSet,
    #[serde(skip)]
    pub expr: Expr,
}

impl Setup {
    pub fn forbidden(&self, tol: &Tolerances) -> Vec<Complex64> {
        forbidden_set(&self.branch_locus.values, &self.asymptotic_values, tol)
    }

    /// Loop for every center, in generator order.
    pub fn loop_specs(&self, cfg: &AnalysisConfig) -> Vec<(GeneratorKind, LoopSpec)> {
        let tol = &cfg.tolerances;
        let forbidden = self.forbidden(tol);
        loop_centers(&self.branch_locus.values, &self.asymptotic_values, &cfg.image, tol)
            .into_iter()
            .map(|(kind, c)| {
                (
                    kind,
                    LoopSpec::around(
                        self.base_point,
                        c,
                        &forbidden,
                        cfg.loops.segment_samples,
                        cfg.loops.circle_samples,
                    ),
                )
            })
            .collect()
    }
}

pub fn validate(cfg: &AnalysisConfig) -> Result<(), PipelineError> {
    cfg.domain.validate()?;
    cfg.image.validate()?;
    let t = &cfg.tolerances;
    for (name, v) in [
        ("tol-dedup", t.dedup),
        ("tol-cluster", t.cluster),
        ("tol-residual", t.residual),
        ("tol-order", t.order),
        ("tol-pole", t.pole),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(PipelineError::Config(format!("{name} must be positive, got {v}")));
        }
    }
    if cfg.growth_steps < 2 {
        return Err(PipelineError::Config("growth-steps must be at least 2".into()));
    }
    if cfg.closure_cap == 0 {
        return Err(PipelineError::Config("closure-cap must be positive".into()));
    }
    if cfg.loops.circle_samples < 3 || cfg.loops.segment_samples == 0 {
        return Err(PipelineError::Config("samples-circle >= 3 and samples-segment >= 1 required".into()));
    }
    Ok(())
}

/// Parses `source` and computes the locus and base root set.
pub fn setup(source: &str, cfg: &AnalysisConfig) -> Result<Setup, PipelineError> {
    validate(cfg)?;
    let f = parse(source)?;
    let tol = &cfg.tolerances;
    let search = find_critical_points(&f, &cfg.domain, tol)?;
    let locus = branch_locus(&search.points, tol.cluster)?;
    let asymptotic = asymptotic_values(&f, &cfg.domain, tol);
    let forbidden = forbidden_set(&locus.values, &asymptotic, tol);
    let base = match cfg.base {
        Some(b) => b,
        None => choose_base_point(&forbidden, &cfg.image)?,
    };
    let roots = find_roots(&f, base, &cfg.domain, tol)?;
    Ok(Setup {
        expression: f.to_string(),
        derivative: differentiate(&f).to_string(),
        tower_depth: tower_depth(&f),
        critical_points: search.points,
        search: search.diagnostics,
        branch_locus: locus,
        asymptotic_values: asymptotic,
        base_point: base,
        roots,
        expr: f,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorReport {
    pub kind: GeneratorKind,
    pub center: Complex64,
    pub radius: f64,
    pub cycles: PartialPerm,
    pub mapping: Vec<Option<usize>>,
    pub escaped: Vec<usize>,
    pub max_match_distance: f64,
    pub max_residual: f64,
    pub steps: usize,
    pub radius_retries: u32,
}

impl From<&Generator> for GeneratorReport {
    fn from(g: &Generator) -> Self {
        let t = &g.tracked;
        GeneratorReport {
            kind: g.kind,
            center: g.center,
            radius: t.loop_spec.radius,
            cycles: t.permutation(),
            mapping: t.mapping.clone(),
            escaped: t.escaped.clone(),
            max_match_distance: t.max_match_distance,
            max_residual: t.max_residual,
            steps: t.steps,
            radius_retries: t.radius_retries,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonodromyReport {
    pub schema: &'static str,
    pub config: AnalysisConfig,
    #[serde(flatten)]
    pub setup: Setup,
    pub generators: Vec<GeneratorReport>,
    pub failures: Vec<GeneratorFailure>,
    #[serde(skip)]
    pub raw: Vec<Generator>,
}

pub fn monodromy(source: &str, cfg: &AnalysisConfig) -> Result<MonodromyReport, PipelineError> {
    let s = setup(source, cfg)?;
    Ok(monodromy_from(s, cfg))
}

fn monodromy_from(s: Setup, cfg: &AnalysisConfig) -> MonodromyReport {
    let m = monodromy_generators(
        &s.expr,
        &s.roots,
        &s.branch_locus.values,
        &s.asymptotic_values,
        &cfg.image,
        &cfg.loops,
        &cfg.tolerances,
    );
    MonodromyReport {
        schema: SCHEMA,
        config: cfg.clone(),
        setup: s,
        generators: m.generators.iter().map(GeneratorReport::from).collect(),
        failures: m.failures,
        raw: m.generators,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    #[serde(flatten)]
    pub monodromy: MonodromyReport,
    pub growth: InfiniteLocusEvidence,
    pub root_counts: Vec<usize>,
    pub group: GroupReport,
    pub verdict: Verdict,
}

impl AnalysisReport {
    pub fn evidence(&self) -> Evidence {
        evidence_of(&self.monodromy, &self.growth, &self.root_counts, &self.group)
    }
}

fn evidence_of(
    mono: &MonodromyReport,
    growth: &InfiniteLocusEvidence,
    root_counts: &[usize],
    group: &GroupReport,
) -> Evidence {
    let failed = mono
        .failures
        .iter()
        .filter(|f| f.kind == GeneratorKind::Critical)
        .count();
    Evidence {
        locus: mono.setup.branch_locus.clone(),
        growth: growth.clone(),
        root_counts: root_counts.to_vec(),
        group: group.clone(),
        failed_generators: failed,
        tower_depth: mono.setup.tower_depth,
    }
}

/// Full analysis of `f(x) = a` for the expression `source`.
pub fn analyze(source: &str, cfg: &AnalysisConfig) -> Result<AnalysisReport, PipelineError> {
    let mono = monodromy(source, cfg)?;
    let s = &mono.setup;
    let tol = &cfg.tolerances;
    let growth = infinite_locus_evidence(&s.expr, &cfg.domain, cfg.growth_steps, tol, cfg.infinity_threshold)?;
    let mut root_counts = Vec::with_capacity(growth.windows.len());
    for w in &growth.windows {
        let n = match find_roots(&s.expr, s.base_point, w, tol) {
            Ok(rs) => rs.len(),
            Err(TrackError::EmptyRootSet(_)) => 0,
            Err(e) => return Err(e.into()),
        };
        root_counts.push(n);
    }
    // only loops around critical values enter the group
    let critical: Vec<PartialPerm> = mono
        .raw
        .iter()
        .filter(|g| g.kind == GeneratorKind::Critical)
        .map(|g| g.tracked.permutation())
        .collect();
    let group = group_report(s.roots.len(), &critical, cfg.closure_cap)?;
    let verdict = decide(&evidence_of(&mono, &growth, &root_counts, &group));
    Ok(AnalysisReport {
        monodromy: mono,
        growth,
        root_counts,
        group,
        verdict,
    })
}

/// Continuation records along loop `index`, in generator order.
pub fn trace(
    source: &str,
    cfg: &AnalysisConfig,
    index: usize,
) -> Result<(Setup, GeneratorKind, Vec<TraceRecord>), PipelineError> {
    let s = setup(source, cfg)?;
    let specs = s.loop_specs(cfg);
    let Some((kind, spec)) = specs.get(index).cloned() else {
        return Err(PipelineError::IndexOutOfRange {
            index,
            len: specs.len(),
        });
    };
    let (_, records) = track_loop_traced(&s.expr, &s.roots, &spec, &cfg.tolerances)?;
    Ok((s, kind, records))
}

/// One line per record: `t a_re a_im x0_re x0_im ...`, escaped roots as NaN.
pub fn format_trace(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let mut fields = vec![format!("{:.17e}", r.t), format!("{:.17e}", r.a.re), format!("{:.17e}", r.a.im)];
        for x in &r.roots {
            let z = x.unwrap_or(Complex64::new(f64::NAN, f64::NAN));
            fields.push(format!("{:.17e}", z.re));
            fields.push(format!("{:.17e}", z.im));
        }
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    out
}
