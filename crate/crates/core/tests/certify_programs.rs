use sic_core::certify::{
    critical_visibility_report, depolarized_exclusion_table, discrimination_bound, discrimination_bound_distrust,
    discrimination_report, mdi_guessing_probability, probability_table, randomness_crossing, randomness_vs_visibility_curve,
    DistrustVector, ToleranceRegion,
};
use sic_core::povm::{exclusion_states, sic_povm, sic_states};
use sic_core::sdp::SolverOptions;
use sic_core::Error;

#[test]
fn visibility_values_and_audit() {
    let sic = sic_povm();
    let mut last = 0.0;
    for (n, want) in [(3, 0.7931), (6, 0.9571), (9, 1.0)] {
        let r = critical_visibility_report(&sic, n, &SolverOptions::default()).unwrap();
        assert!((r.value - want).abs() < 1e-3, "n = {n}: {}", r.value);
        assert!(r.audit_error < 1e-6, "n = {n}: audit {}", r.audit_error);
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        assert!(r.value >= last - 1e-8);
        last = r.value;
    }
    assert!(critical_visibility_report(&sic, 1, &SolverOptions::default()).is_err());
    assert!(critical_visibility_report(&sic, 10, &SolverOptions::default()).is_err());
}

#[test]
fn discrimination_values() {
    let s = sic_states();
    let mut last = 0.0;
    for (n, want) in [(2, 0.2073), (3, 0.2874), (9, 1.0 / 3.0)] {
        let v = discrimination_bound(&s, n).unwrap();
        assert!((v - want).abs() < 1e-3, "n = {n}: {v}");
        assert!(v <= 1.0 / 3.0 + 1e-8);
        assert!(v >= last);
        last = v;
    }
}

#[test]
fn discrimination_report_ranks_subsets() {
    let r = discrimination_report(&sic_states(), 3, &SolverOptions::default()).unwrap();
    assert_eq!(r.per_subset.len(), 84);
    let top = r.per_subset.iter().map(|s| s.value).fold(f64::MIN, f64::max);
    assert_eq!(top, r.value);
    assert!(r.per_subset.iter().any(|s| s.subset == r.best_subset && s.value == r.value));
    let low = r.per_subset.iter().map(|s| s.value).fold(f64::MAX, f64::min);
    assert!(top - low > 1e-4);
}

#[test]
fn seesaw_brackets() {
    let s = sic_states();
    let exact = discrimination_bound(&s, 3).unwrap();
    let none = discrimination_bound_distrust(&s, &DistrustVector::zero(9), 3, 2, 0).unwrap();
    assert!((none - exact).abs() < 1e-6);
    let loose = discrimination_bound_distrust(&s, &DistrustVector::measured(), 3, 2, 0).unwrap();
    assert!(loose >= exact - 1e-8);
    assert!(loose <= 1.0 / 3.0 + 1e-8);
    assert!(DistrustVector::new(vec![0.1; 8].into_iter().chain([1.5]).collect()).is_err());
}

#[test]
fn ideal_and_flat_randomness() {
    let states = exclusion_states();
    let ideal = depolarized_exclusion_table(1.0).unwrap();
    let (pg, r) = mdi_guessing_probability(&states, &ideal, 1, None).unwrap();
    assert!((r - 3.0).abs() < 1e-3, "{pg} {r}");
    let flat = vec![vec![1.0 / 9.0; 9]; 9];
    let (pg, r) = mdi_guessing_probability(&states, &flat, 1, None).unwrap();
    assert!((pg - 1.0).abs() < 1e-6 && r.abs() < 1e-5);
}

#[test]
fn randomness_at_quoted_visibility() {
    let states = exclusion_states();
    let t = depolarized_exclusion_table(0.9525).unwrap();
    let (_, r) = mdi_guessing_probability(&states, &t, 1, None).unwrap();
    assert!((r - 3f64.log2()).abs() < 0.02, "{r}");
}

#[test]
fn curve_is_monotone_with_endpoints() {
    let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let curve = randomness_vs_visibility_curve(&grid, 1).unwrap();
    assert!(curve[0].1.abs() < 1e-3);
    assert!((curve[10].1 - 3.0).abs() < 1e-3);
    for w in curve.windows(2) {
        assert!(w[1].1 >= w[0].1 - 1e-6, "{w:?}");
    }
    assert!(randomness_vs_visibility_curve(&[1.2], 1).is_err());
}

#[test]
fn crossing_of_one_trit() {
    let v = randomness_crossing(3f64.log2(), 0.9, 1.0, 1e-4, 1).unwrap();
    assert!((v - 0.9525).abs() < 2e-3, "{v}");
}

#[test]
fn tolerance_regions_only_help_the_adversary() {
    let states = exclusion_states();
    let t = depolarized_exclusion_table(0.97).unwrap();
    let (plain, _) = mdi_guessing_probability(&states, &t, 1, None).unwrap();
    let zero = ToleranceRegion::zero(9, 9);
    let (with_zero, _) = mdi_guessing_probability(&states, &t, 1, Some(&zero)).unwrap();
    assert!((plain - with_zero).abs() < 1e-6);
    let mut last = plain;
    for f in [0.01, 0.05, 0.1] {
        let region = ToleranceRegion::relative(&t, f).unwrap();
        let (pg, r) = mdi_guessing_probability(&states, &t, 1, Some(&region)).unwrap();
        assert!(pg >= last - 1e-6);
        assert!((r + pg.log2()).abs() < 1e-12);
        last = pg;
    }
}

#[test]
fn impossible_table_is_infeasible() {
    let states = exclusion_states();
    let mut t = probability_table(&states, &sic_povm());
    t[0] = vec![0.0; 9];
    t[0][0] = 1.0;
    match mdi_guessing_probability(&states, &t, 1, None) {
        Err(Error::InfeasibleData(_)) => {}
        other => panic!("expected infeasible data, got {other:?}"),
    }
}
