//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Tolerances and time budgets are pinned below.

mod common;

use std::collections::HashSet;
use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use common::c;
use galois_scope::permgroup::{orbits, ClosureSize, Perm};
use galois_scope::pipeline::{self, AnalysisConfig, AnalysisReport, MonodromyReport};
use galois_scope::solve::Window;
use galois_scope::tracker::{track_loop, LoopSpec};
use galois_scope::verdict::{Rule, Status};
use num_complex::Complex64;

const MATCH_TOL: f64 = 1e-8;
const LOCUS_ZERO_TOL: f64 = 1e-9;
const FD_TOL: f64 = 1e-5;
const FD_SAMPLES: usize = 1000;
const BUDGET_POWER: Duration = Duration::from_secs(1);
const BUDGET_EXP: Duration = Duration::from_secs(1);
const BUDGET_EXP_PLUS_X: Duration = Duration::from_secs(30);
const BUDGET_QUINTIC: Duration = Duration::from_secs(5);
const BUDGET_EXP_SQUARED: Duration = Duration::from_secs(10);

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed())
}

fn analyze(src: &str) -> Result<(AnalysisReport, Duration), String> {
    let (r, dt) = timed(|| pipeline::analyze(src, &AnalysisConfig::default()));
    r.map(|r| (r, dt)).map_err(|e| format!("{src}: {e}"))
}

fn cli(args: &[&str]) -> Result<(i32, Vec<u8>), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_galois-scope"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    Ok((o.status.code().unwrap_or(-1), o.stdout))
}

fn nearest(roots: &[Complex64], x: Complex64) -> usize {
    (0..roots.len())
        .min_by(|&i, &j| (roots[i] - x).norm().total_cmp(&(roots[j] - x).norm()))
        .unwrap()
}

fn brute_order(n: usize, gens: &[Perm]) -> usize {
    let id: Vec<usize> = (0..n).collect();
    let mut seen: HashSet<Vec<usize>> = HashSet::from([id.clone()]);
    let mut frontier = vec![id];
    while let Some(p) = frontier.pop() {
        for g in gens {
            let q: Vec<usize> = p.iter().map(|&i| g.apply(i)).collect();
            if seen.insert(q.clone()) {
                frontier.push(q);
            }
        }
    }
    seen.len()
}

fn cycle_length_law() -> Check {
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    for m in 1..=4usize {
        let src = format!("x^{}", m + 1);
        let (r, dt) = timed(|| pipeline::monodromy(&src, &AnalysisConfig::default()));
        let r = r.map_err(|e| e.to_string())?;
        ensure(r.generators.len() == 1, format!("{src}: {} generators", r.generators.len()))?;
        let g = &r.generators[0];
        let p = g.cycles.to_perm().ok_or(format!("{src}: escaped roots"))?;
        ensure(p.cycle_type() == vec![m + 1], format!("{src}: cycle type {:?}", p.cycle_type()))?;
        // oracle: counterclockwise turn of the roots by 2π/(m+1)
        let roots = &r.setup.roots.roots;
        let rot = Complex64::from_polar(1.0, 2.0 * PI / (m + 1) as f64);
        for (j, x) in roots.iter().enumerate() {
            ensure(p.apply(j) == nearest(roots, x * rot), format!("{src}: root {j} not rotated"))?;
        }
        ensure(g.max_match_distance < MATCH_TOL, format!("{src}: match {:e}", g.max_match_distance))?;
        ensure(dt < BUDGET_POWER, format!("{src}: {dt:?}"))?;
        worst = worst.max(g.max_match_distance);
        slowest = slowest.max(dt);
    }
    Ok(format!("m=1..4 single (m+1)-cycles, match <= {worst:.1e}, slowest {slowest:.2?}"))
}

fn exp_shift() -> Check {
    let cfg = AnalysisConfig {
        domain: Window::new(-8.0, 8.0, -15.0, 15.0, 4.0).unwrap(),
        ..AnalysisConfig::default()
    };
    let (r, dt) = timed(|| pipeline::monodromy("exp(x)", &cfg));
    let r: MonodromyReport = r.map_err(|e| e.to_string())?;
    ensure(r.generators.len() == 1, format!("{} generators", r.generators.len()))?;
    let g = &r.generators[0];
    let roots = &r.setup.roots.roots;
    let mut shifted = 0;
    for (j, img) in g.mapping.iter().enumerate() {
        if let Some(k) = img {
            let want = roots[j] + c(0.0, 2.0 * PI);
            ensure((roots[*k] - want).norm() < 1e-8, format!("root {j} -> {k}"))?;
            shifted += 1;
        }
    }
    ensure(g.escaped.len() == 1, format!("escaped {:?}", g.escaped))?;
    ensure(dt < BUDGET_EXP, format!("{dt:?}"))?;
    Ok(format!("{shifted} roots shifted by 2πi, escaped {:?}, {dt:.2?}", g.escaped))
}

fn flagship_unsolvable() -> Check {
    let (r, dt) = analyze("exp(x)+x")?;
    let (code, _) = cli(&["analyze", "exp(x)+x"])?;
    ensure(code == 1, format!("exit {code}"))?;
    ensure(r.verdict.rule == Rule::Inf, format!("rule {}", r.verdict.rule))?;
    let counts = &r.growth.counts;
    ensure(counts.len() >= 3, format!("counts {counts:?}"))?;
    ensure(counts.windows(2).all(|w| w[0] < w[1]), format!("counts {counts:?} not increasing"))?;
    ensure(*counts.last().unwrap() >= 8, format!("counts {counts:?} end below 8"))?;
    ensure(!r.monodromy.generators.is_empty(), "no generators")?;
    for g in &r.monodromy.generators {
        let clean = g.escaped.is_empty() && g.cycles.to_perm().is_some_and(|p| p.cycle_type() == vec![2]);
        ensure(clean, format!("generator {} is not a clean 2-cycle", g.cycles))?;
    }
    ensure(dt < BUDGET_EXP_PLUS_X, format!("{dt:?}"))?;
    Ok(format!(
        "exit 1 R-INF, counts {counts:?}, {} clean transpositions, {dt:.2?}",
        r.monodromy.generators.len()
    ))
}

fn finite_unsolvable() -> Check {
    let (r, dt) = analyze("x^5-5*x")?;
    let (code, _) = cli(&["analyze", "x^5-5*x"])?;
    ensure(code == 1, format!("exit {code}"))?;
    ensure(r.verdict.rule == Rule::FinUnsolvable, format!("rule {}", r.verdict.rule))?;
    ensure(r.group.closure_size == ClosureSize::Exact(120), format!("closure {:?}", r.group.closure_size))?;
    let gens: Vec<Perm> = r.monodromy.generators.iter().filter_map(|g| g.cycles.to_perm()).collect();
    ensure(gens.len() == 4, format!("{} clean generators", gens.len()))?;
    ensure(gens.iter().all(|p| p.cycle_type() == vec![2]), "not all transpositions")?;
    let oracle = brute_order(5, &gens);
    ensure(oracle == 120, format!("enumeration oracle {oracle}"))?;
    let sizes: Vec<Option<usize>> = r.group.derived_sizes.iter().map(ClosureSize::exact).collect();
    ensure(sizes == vec![Some(120), Some(60), Some(60)], format!("derived {sizes:?}"))?;
    ensure(dt < BUDGET_QUINTIC, format!("{dt:?}"))?;
    Ok(format!("exit 1 R-FIN-UNSOLVABLE, order 120 (oracle {oracle}), 120 -> 60 -> 60, {dt:.2?}"))
}

fn finite_solvable() -> Check {
    for src in ["x^2", "x^3-3*x"] {
        let (code, _) = cli(&["analyze", src])?;
        ensure(code == 0, format!("{src}: exit {code}"))?;
    }
    let (r, _) = analyze("x^3-3*x")?;
    ensure(r.verdict.status == Status::Solvable, format!("status {:?}", r.verdict.status))?;
    ensure(r.group.closure_size == ClosureSize::Exact(6), format!("closure {:?}", r.group.closure_size))?;
    let gens: Vec<Perm> = r.monodromy.generators.iter().filter_map(|g| g.cycles.to_perm()).collect();
    let oracle = brute_order(3, &gens);
    ensure(oracle == 6, format!("enumeration oracle {oracle}"))?;
    ensure(r.group.derived_length == Some(2), format!("derived length {:?}", r.group.derived_length))?;
    Ok("x^2 and x^3-3x exit 0, cubic order 6 (oracle 6), derived length 2".into())
}

fn imprimitivity_witness() -> Check {
    let (r, dt) = analyze("(exp(x)-1)^2")?;
    let locus = &r.monodromy.setup.branch_locus.values;
    ensure(locus.len() == 1 && locus[0].norm() < LOCUS_ZERO_TOL, format!("locus {locus:?}"))?;
    ensure(r.verdict.rule != Rule::Inf, "R-INF fired")?;
    let counts = &r.growth.counts;
    ensure(counts.windows(2).all(|w| w[0] == w[1]), format!("counts {counts:?}"))?;
    let w = r.verdict.decomposition_witness.clone().ok_or("no witness")?;
    ensure(w.len() > 1 && w.iter().all(|b| b.len() == 2), format!("witness {w:?}"))?;
    // oracle: x = log(1 ± s0) + 2πik, partners share k and differ in sign
    let roots = &r.monodromy.setup.roots.roots;
    let s0 = r.monodromy.setup.base_point.sqrt();
    let (lp, lm) = ((1.0 + s0).ln(), (1.0 - s0).ln());
    let branch = |x: Complex64| -> (bool, i64) {
        let plus = ((x.exp() - 1.0) - s0).norm() < ((x.exp() - 1.0) + s0).norm();
        let base = if plus { lp } else { lm };
        (plus, ((x.im - base.im) / (2.0 * PI)).round() as i64)
    };
    for b in &w {
        let (p0, k0) = branch(roots[b[0]]);
        let (p1, k1) = branch(roots[b[1]]);
        ensure(p0 != p1 && k0 == k1, format!("block {b:?} is not a closed-form pair"))?;
    }
    ensure(dt < BUDGET_EXP_SQUARED, format!("{dt:?}"))?;
    Ok(format!(
        "single value at 0, {} root pairs match the closed form, counts {counts:?}, {dt:.2?}",
        w.len()
    ))
}

fn homotopy_identity() -> Check {
    let cfg = AnalysisConfig::default();
    let mut worst: f64 = 0.0;
    let center = c(5.5, 6.5);
    for src in ["x^2", "x^3-3*x", "x^5-5*x", "exp(x)+x", "(exp(x)-1)^2"] {
        let s = pipeline::setup(src, &cfg).map_err(|e| format!("{src}: {e}"))?;
        let mut forbidden = s.forbidden(&cfg.tolerances);
        ensure(forbidden.iter().all(|p| (p - center).norm() > 1.0), format!("{src}: center too close"))?;
        forbidden.push(center);
        let spec = LoopSpec::around(s.base_point, center, &forbidden, 32, 64);
        let t = track_loop(&s.expr, &s.roots, &spec, &cfg.tolerances).map_err(|e| format!("{src}: {e}"))?;
        for (j, img) in t.mapping.iter().enumerate() {
            ensure(img.is_none() || *img == Some(j), format!("{src}: root {j} moved"))?;
        }
        ensure(t.max_match_distance < MATCH_TOL, format!("{src}: displacement {:e}", t.max_match_distance))?;
        worst = worst.max(t.max_match_distance);
    }
    Ok(format!("identity for 5 functions, displacement <= {worst:.1e}"))
}

fn transitivity() -> Check {
    let cfg = AnalysisConfig::default();
    for src in ["x^2", "x^3-3*x", "x^5-5*x"] {
        let m = pipeline::monodromy(src, &cfg).map_err(|e| e.to_string())?;
        let gens: Vec<Perm> = m.generators.iter().filter_map(|g| g.cycles.to_perm()).collect();
        ensure(gens.len() == m.generators.len(), format!("{src}: escapes"))?;
        let n = m.setup.roots.len();
        let o = orbits(n, &gens).map_err(|e| e.to_string())?;
        ensure(o.len() == 1, format!("{src}: orbits {o:?}"))?;
    }
    Ok("single orbit for x^2, x^3-3x, x^5-5x".into())
}

fn cycle_type_multiset(base: Option<Complex64>) -> Result<Vec<Vec<usize>>, String> {
    let cfg = AnalysisConfig {
        base,
        ..AnalysisConfig::default()
    };
    let m = pipeline::monodromy("x^5-5*x", &cfg).map_err(|e| e.to_string())?;
    ensure(m.failures.is_empty(), format!("failures from {base:?}"))?;
    let mut out: Vec<Vec<usize>> = m
        .generators
        .iter()
        .map(|g| g.cycles.to_perm().map(|p| p.cycle_type()).ok_or("escaped"))
        .collect::<Result<_, _>>()?;
    out.sort();
    Ok(out)
}

fn base_point_independence() -> Check {
    let a = cycle_type_multiset(None)?;
    let b = cycle_type_multiset(Some(c(3.0, 5.0)))?;
    ensure(a == b, format!("{a:?} vs {b:?}"))?;
    Ok(format!("automatic base and 3+5i give {a:?}"))
}

fn determinism() -> Check {
    let (_, one) = cli(&["analyze", "exp(x)+x", "--jobs", "1"])?;
    let (_, again) = cli(&["analyze", "exp(x)+x", "--jobs", "1"])?;
    let (_, four) = cli(&["analyze", "exp(x)+x", "--jobs", "4"])?;
    ensure(!one.is_empty(), "empty output")?;
    ensure(one == again, "two runs differ")?;
    ensure(one == four, "--jobs 4 differs")?;
    Ok(format!("{} identical bytes across runs and --jobs 1/4", one.len()))
}

fn derivative_correctness() -> Check {
    let (checked, worst) = common::finite_difference_suite(0x5eed, 1500);
    ensure(checked >= FD_SAMPLES, format!("only {checked} samples"))?;
    ensure(worst <= FD_TOL, format!("worst relative error {worst:e}"))?;
    Ok(format!("{checked} samples, worst relative error {worst:.1e}"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("cycle-length law", cycle_length_law),
        ("exp shift", exp_shift),
        ("flagship unsolvable", flagship_unsolvable),
        ("finite unsolvable", finite_unsolvable),
        ("finite solvable", finite_solvable),
        ("imprimitivity witness", imprimitivity_witness),
        ("homotopy identity", homotopy_identity),
        ("transitivity", transitivity),
        ("base-point independence", base_point_independence),
        ("determinism", determinism),
        ("derivative correctness", derivative_correctness),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
