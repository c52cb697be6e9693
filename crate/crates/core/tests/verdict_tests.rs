use galois_scope::locus::{BranchLocus, InfiniteLocusEvidence};
use galois_scope::permgroup::{group_report, ClosureSize, PartialPerm};
use galois_scope::pipeline::{self, AnalysisConfig};
use galois_scope::solve::Window;
use galois_scope::verdict::{decide, render_text, Confidence, Evidence, Rule, Status};
use proptest::prelude::*;

fn run(src: &str) -> pipeline::AnalysisReport {
    pipeline::analyze(src, &AnalysisConfig::default()).unwrap()
}

#[test]
fn polynomial_verdicts() {
    for (src, status, rule, order) in [
        ("x^2", Status::Solvable, Rule::FinSolvable, 2),
        ("x^3-3*x", Status::Solvable, Rule::FinSolvable, 6),
        ("x^4", Status::Solvable, Rule::FinSolvable, 4),
        ("x^5-5*x", Status::Unsolvable, Rule::FinUnsolvable, 120),
    ] {
        let r = run(src);
        assert_eq!(r.verdict.status, status, "{src}");
        assert_eq!(r.verdict.rule, rule, "{src}");
        assert_eq!(r.verdict.confidence, Confidence::Criterion, "{src}");
        assert_eq!(r.group.closure_size, ClosureSize::Exact(order), "{src}");
        assert!(r.monodromy.failures.is_empty(), "{src}");
    }
    let r = run("x^5-5*x");
    let sizes: Vec<Option<usize>> = r.group.derived_sizes.iter().map(ClosureSize::exact).collect();
    assert_eq!(sizes, vec![Some(120), Some(60), Some(60)]);
    assert_eq!(r.group.primitive, Some(true));
    assert!(r.verdict.decomposition_witness.is_none());
}

#[test]
fn exp_plus_x_is_unsolvable_by_growth() {
    let r = run("exp(x)+x");
    assert_eq!(r.verdict.status, Status::Unsolvable);
    assert_eq!(r.verdict.rule, Rule::Inf);
    assert_eq!(r.verdict.confidence, Confidence::Heuristic);
    assert!(r.growth.monotone_growth);
    assert!(r.group.has_finite_support_gen);
    assert_eq!(r.verdict.status.exit_code(), 1);
}

#[test]
fn exp_minus_one_squared_decomposes() {
    let r = run("(exp(x)-1)^2");
    assert_eq!(r.verdict.status, Status::Solvable);
    let w = r.verdict.decomposition_witness.clone().unwrap();
    assert!(w.iter().all(|b| b.len() == 2));
    assert_eq!(w.len() * 2, r.group.degree);
    let text = render_text(&r.verdict, &r.evidence());
    assert!(text.contains("decomposition witness"));
}

#[test]
fn exp_has_no_critical_values() {
    let r = run("exp(x)");
    assert!(r.monodromy.setup.branch_locus.values.is_empty());
    assert_eq!(r.verdict.status, Status::Solvable);
    assert_eq!(r.group.closure_size, ClosureSize::Exact(1));
}

#[test]
fn analysis_is_deterministic() {
    let a = serde_json::to_string(&run("x^5-5*x")).unwrap();
    let b = serde_json::to_string(&run("x^5-5*x")).unwrap();
    assert_eq!(a, b);
}

fn window() -> Window {
    Window::square(1.0, 1.0)
}

/// Rule conditions restated from the evidence fields.
fn holds(rule: Rule, ev: &Evidence) -> bool {
    let g = &ev.group;
    let clean = g.escaped_generators.is_empty();
    let finite = matches!(g.closure_size, ClosureSize::Exact(_));
    let rising = ev.root_counts.len() >= 2 && ev.root_counts.windows(2).all(|w| w[0] < w[1]);
    let flat = ev.growth.counts.iter().all(|&c| c == ev.growth.counts[0]);
    match rule {
        Rule::Inf => ev.growth.monotone_growth && g.has_finite_support_gen,
        Rule::Wielandt => {
            (!finite || rising) && g.primitive == Some(true) && g.has_finite_support_gen
        }
        Rule::FinUnsolvable => finite && clean && g.solvable == Some(false),
        Rule::FinSolvable => finite && clean && ev.failed_generators == 0 && g.solvable == Some(true) && flat,
        Rule::NoEvidence => true,
    }
}

fn evidence_strategy() -> impl Strategy<Value = Evidence> {
    let gens = (2usize..=5).prop_flat_map(|n| {
        let g = (Just((0..n).collect::<Vec<usize>>()).prop_shuffle(), proptest::option::of(0..n));
        (Just(n), proptest::collection::vec(g, 0..=3))
    });
    (
        gens,
        proptest::collection::vec(0usize..20, 1..4),
        any::<bool>(),
        proptest::collection::vec(0usize..20, 0..4),
        0usize..2,
        prop_oneof![Just(2usize), Just(1000)],
    )
        .prop_map(|((n, raw), counts, monotone, root_counts, failed, cap)| {
            let gens: Vec<PartialPerm> = raw
                .into_iter()
                .map(|(images, hole)| {
                    let mut m: Vec<Option<usize>> = images.into_iter().map(Some).collect();
                    if let Some(h) = hole {
                        m[h] = None;
                    }
                    PartialPerm::new(m).unwrap()
                })
                .collect();
            Evidence {
                locus: BranchLocus {
                    values: Vec::new(),
                    members: Vec::new(),
                    cluster_tol: 1e-6,
                    warnings: Vec::new(),
                },
                growth: InfiniteLocusEvidence {
                    windows: vec![window(); counts.len()],
                    counts,
                    monotone_growth: monotone,
                    threshold: 8,
                },
                root_counts,
                group: group_report(n, &gens, cap).unwrap(),
                failed_generators: failed,
                tower_depth: 0,
            }
        })
}

proptest! {
    #[test]
    fn first_holding_rule_decides(ev in evidence_strategy()) {
        let v = decide(&ev);
        let order: Vec<Rule> = v.rules.iter().map(|r| r.rule).collect();
        prop_assert_eq!(order, Rule::PRIORITY.to_vec());
        let want = Rule::PRIORITY.into_iter().find(|r| holds(*r, &ev)).unwrap();
        prop_assert_eq!(v.rule, want);
        let fired: Vec<Rule> = v.rules.iter().filter(|r| r.fired).map(|r| r.rule).collect();
        prop_assert_eq!(fired.contains(&Rule::NoEvidence), want == Rule::NoEvidence);
        let status = match want {
            Rule::FinSolvable => Status::Solvable,
            Rule::NoEvidence => Status::Inconclusive,
            _ => Status::Unsolvable,
        };
        prop_assert_eq!(v.status, status);
    }

    #[test]
    fn solvable_needs_clean_solvable_group(ev in evidence_strategy()) {
        let v = decide(&ev);
        if v.status == Status::Solvable {
            prop_assert!(ev.group.escaped_generators.is_empty());
            prop_assert_eq!(ev.group.solvable, Some(true));
            prop_assert_eq!(ev.failed_generators, 0);
        }
        if v.rule == Rule::FinUnsolvable {
            prop_assert_eq!(ev.group.solvable, Some(false));
        }
        if let Some(w) = &v.decomposition_witness {
            let mut all: Vec<usize> = w.iter().flatten().copied().collect();
            all.sort();
            prop_assert_eq!(all, (0..ev.group.degree).collect::<Vec<_>>());
            prop_assert!(w.len() > 1 && w.len() < ev.group.degree);
        }
    }
}
