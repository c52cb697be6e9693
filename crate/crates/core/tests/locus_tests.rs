mod common;

use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use common::{c, companion_roots, exp_plus_x_values, sort_lex};
use galois_scope::expr::parse;
use galois_scope::locus::{
    asymptotic_values, branch_locus, critical_order, find_critical_points, infinite_locus_evidence, CriticalPoint,
    LocusError,
};
use galois_scope::solve::{Tolerances, Window};
use num_complex::Complex64;
use proptest::prelude::*;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn default_domain() -> Window {
    Window::new(-8.0, 8.0, -16.0, 16.0, 4.0).unwrap()
}

#[test]
fn exp_plus_x_values_match_lattice() {
    let f = parse("exp(x)+x").unwrap();
    let s = find_critical_points(&f, &default_domain(), &tol()).unwrap();
    assert!(s.points.iter().all(|p| p.order == 1));
    let locus = branch_locus(&s.points, tol().cluster).unwrap();
    let mut want = exp_plus_x_values(&default_domain());
    sort_lex(&mut want);
    assert_eq!(locus.len(), want.len());
    for (got, want) in locus.values.iter().zip(&want) {
        assert!((got - want).norm() < 1e-9, "{got} vs {want}");
    }
}

#[test]
fn growth_counts_follow_lattice() {
    let f = parse("exp(x)+x").unwrap();
    let base = Window::new(-1.0, 1.0, -5.0, 5.0, 4.0).unwrap();
    let ev = infinite_locus_evidence(&f, &base, 3, &tol(), 8).unwrap();
    let oracle: Vec<usize> = ev.windows.iter().map(|w| exp_plus_x_values(w).len()).collect();
    assert_eq!(oracle, vec![2, 4, 4]);
    assert_eq!(ev.counts, oracle);
    assert!(!ev.monotone_growth);

    let ev = infinite_locus_evidence(&f, &default_domain(), 3, &tol(), 8).unwrap();
    let oracle: Vec<usize> = ev.windows.iter().map(|w| exp_plus_x_values(w).len()).collect();
    assert_eq!(ev.counts, oracle);
    assert!(ev.monotone_growth);
}

#[test]
fn polynomial_growth_is_flat() {
    let f = parse("x^5-5*x").unwrap();
    let ev = infinite_locus_evidence(&f, &default_domain(), 3, &tol(), 8).unwrap();
    assert_eq!(ev.counts, vec![4, 4, 4]);
    assert!(!ev.monotone_growth);
    assert!(matches!(
        infinite_locus_evidence(&f, &default_domain(), 1, &tol(), 8),
        Err(LocusError::TooFewGrowthSteps(1))
    ));
}

#[test]
fn quintic_values_match_companion_oracle() {
    // f' = 5(x^4 - 1)
    let mut crit = companion_roots(&[c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    let mut want: Vec<Complex64> = crit.iter().map(|x| x.powi(5) - 5.0 * x).collect();
    sort_lex(&mut want);
    sort_lex(&mut crit);
    let f = parse("x^5-5*x").unwrap();
    let s = find_critical_points(&f, &default_domain(), &tol()).unwrap();
    assert_eq!(s.points.len(), 4);
    for (p, x) in s.points.iter().zip(&crit) {
        assert!((p.location - x).norm() < 1e-9);
    }
    let locus = branch_locus(&s.points, tol().cluster).unwrap();
    for (got, want) in locus.values.iter().zip(&want) {
        assert!((got - want).norm() < 1e-9);
    }
    assert_eq!(s.diagnostics.argument_principle, Some(4));
}

#[test]
fn power_orders() {
    for m in 1..=4u32 {
        let f = parse(&format!("x^{}", m + 1)).unwrap();
        assert_eq!(critical_order(&f, c(0.0, 0.0), &tol()).unwrap(), m);
        let s = find_critical_points(&f, &Window::square(2.0, 4.0), &tol()).unwrap();
        assert_eq!(s.points.len(), 1, "x^{}", m + 1);
        assert_eq!(s.points[0].order, m);
    }
    assert!(matches!(
        critical_order(&parse("x^2").unwrap(), c(1.0, 0.0), &tol()),
        Err(LocusError::NotCritical { .. })
    ));
}

#[test]
fn constant_has_degenerate_derivative() {
    assert_eq!(
        find_critical_points(&parse("3").unwrap(), &default_domain(), &tol()),
        Err(LocusError::DegenerateDerivative)
    );
}

#[test]
fn exp_minus_one_squared_has_one_value() {
    let f = parse("(exp(x)-1)^2").unwrap();
    let s = find_critical_points(&f, &default_domain(), &tol()).unwrap();
    // preimages 2πik with |2πk| <= 16
    assert_eq!(s.points.len(), 5);
    for (k, p) in s.points.iter().enumerate() {
        assert_abs_diff_eq!(p.location.im, 2.0 * PI * (k as f64 - 2.0), epsilon = 1e-9);
    }
    let locus = branch_locus(&s.points, tol().cluster).unwrap();
    assert_eq!(locus.len(), 1);
    assert!(locus.values[0].norm() < 1e-9);
    assert_eq!(locus.members[0].len(), 5);
}

#[test]
fn asymptotic_value_examples() {
    let w = default_domain();
    assert_eq!(asymptotic_values(&parse("exp(x)").unwrap(), &w, &tol()), vec![c(0.0, 0.0)]);
    assert_eq!(asymptotic_values(&parse("(exp(x)-1)^2").unwrap(), &w, &tol()), vec![c(1.0, 0.0)]);
    assert!(asymptotic_values(&parse("exp(x)+x").unwrap(), &w, &tol()).is_empty());
    assert!(asymptotic_values(&parse("x^5-5*x").unwrap(), &w, &tol()).is_empty());
}

fn point(v: Complex64) -> CriticalPoint {
    CriticalPoint {
        location: v,
        order: 1,
        value: v,
        newton_residual: 0.0,
    }
}

proptest! {
    #[test]
    fn clusters_partition_and_separate(
        raw in proptest::collection::vec((-3i32..3, -3i32..3, 0u8..3), 0..30),
    ) {
        // values on a coarse lattice with sub-tolerance jitter
        let pts: Vec<CriticalPoint> = raw
            .iter()
            .map(|(a, b, j)| point(c(*a as f64 + 1e-9 * *j as f64, *b as f64)))
            .collect();
        let tol = 1e-6;
        let locus = branch_locus(&pts, tol).unwrap();
        let total: usize = locus.members.iter().map(Vec::len).sum();
        prop_assert_eq!(total, pts.len());
        for (i, a) in locus.values.iter().enumerate() {
            for b in &locus.values[i + 1..] {
                prop_assert!((a - b).norm() > tol * (1.0 + a.norm().max(b.norm())));
            }
        }
        let mut distinct: Vec<(i32, i32)> = raw.iter().map(|(a, b, _)| (*a, *b)).collect();
        distinct.sort();
        distinct.dedup();
        prop_assert_eq!(locus.len(), distinct.len());
    }
}
