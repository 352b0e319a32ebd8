mod common;

use sic_core::linalg::{cr, CMatrix, HermitianView};
use sic_core::photonic::{build_sic_circuit, induced_povm};
use sic_core::povm::{
    self, depolarize, equiangular_states, exclusion_pair, exclusion_states, mub_bases, naimark_unitary,
    povm_fidelity, sic_povm, sic_states, zero_outcome_rule, DensityMatrix, Povm,
};

use common::{haar_unitary, rng};

#[test]
fn sic_frame_by_direct_summation() {
    let mut sum = CMatrix::zeros(3, 3);
    for psi in sic_states() {
        let a = psi.amplitudes();
        for i in 0..3 {
            for j in 0..3 {
                sum[(i, j)] += a[i] * a[j].conj() / 3.0;
            }
        }
    }
    assert!(sum.max_abs_diff(&CMatrix::identity(3)) < 1e-12);
}

#[test]
fn sic_pairwise_overlaps() {
    let s = sic_states();
    for j in 0..9 {
        for k in 0..9 {
            let want = if j == k { 1.0 } else { 0.25 };
            assert!((s[j].overlap(&s[k]) - want).abs() < 1e-10, "({j},{k})");
        }
    }
}

#[test]
fn sic_effects_on_their_own_states() {
    let p = sic_povm();
    for (a, psi) in sic_states().iter().enumerate() {
        assert!((p.effect(a).expectation(psi.amplitudes()) - 1.0 / 3.0).abs() < 1e-12);
        assert!((p.effect(a).trace() - 1.0 / 3.0).abs() < 1e-12);
    }
}

#[test]
fn naimark_second_row_entry() {
    let u = naimark_unitary().matrix;
    let want = 2f64.sqrt() / 6f64.sqrt();
    assert!((u[(1, 0)].norm() - want).abs() < 1e-12);
}

#[test]
fn naimark_induces_sic() {
    let induced = naimark_unitary().induced_povm().unwrap();
    assert!(povm_fidelity(&induced, &sic_povm()).unwrap() >= 1.0 - 1e-10);
    let circuit = induced_povm(&build_sic_circuit()).unwrap();
    for a in 0..9 {
        assert!(circuit.effect(a).matrix().max_abs_diff(induced.effect(a).matrix()) < 1e-10);
    }
}

#[test]
fn mub_overlaps() {
    let b = mub_bases();
    for (y, basis) in b.iter().enumerate() {
        for (z, other) in b.iter().enumerate() {
            for (i, e) in basis.iter().enumerate() {
                for (j, f) in other.iter().enumerate() {
                    let ov = e.overlap(f);
                    let want = if y != z { 1.0 / 3.0 } else if i == j { 1.0 } else { 0.0 };
                    assert!((ov - want).abs() < 1e-10);
                }
            }
        }
    }
    for (k, e) in b[0].iter().enumerate() {
        assert!((e.amplitudes()[k].norm() - 1.0).abs() < 1e-12);
    }
    assert!((b[1][0].overlap(&b[2][1]) - 1.0 / 3.0).abs() < 1e-10);
}

#[test]
fn equiangular_frames() {
    for n in 2..=8 {
        let s = equiangular_states(n).unwrap();
        let d = n - 1;
        let mut sum = CMatrix::zeros(d, d);
        for (y, a) in s.iter().enumerate() {
            sum += a.projector().matrix();
            for b in &s[..y] {
                assert!((a.overlap(b) - 1.0 / (d * d) as f64).abs() < 1e-10);
            }
        }
        let want = CMatrix::identity(d).scale_re(n as f64 / d as f64);
        assert!(sum.max_abs_diff(&want) < 1e-10, "n = {n}");
    }
    assert!(equiangular_states(1).is_err());
}

#[test]
fn equiangular_four_matches_closed_form_up_to_relabeling() {
    let s = equiangular_states(4).unwrap();
    let i = sic_core::linalg::c(0.0, 1.0);
    for a in 0..4u32 {
        let amp = vec![cr(1.0), i.powu(a), cr((-1f64).powi(a as i32))];
        let target = povm::Ket::new(amp).unwrap();
        let hits = s.iter().filter(|k| (k.overlap(&target) - 1.0).abs() < 1e-10).count();
        assert_eq!(hits, 1, "a = {a}");
    }
}

#[test]
fn exclusion_statistics() {
    let states = exclusion_states();
    let p = sic_povm();
    for (x, rho) in states.iter().enumerate() {
        assert!((rho.matrix().trace() - 1.0).abs() < 1e-12);
        let probs = p.probabilities(rho);
        for (a, q) in probs.iter().enumerate() {
            let want = if a == x { 0.0 } else { 1.0 / 8.0 };
            assert!((q - want).abs() < 1e-12);
        }
        let eig = sic_core::linalg::eig_hermitian(rho.matrix()).unwrap();
        for (l, want) in eig.values.iter().zip([0.0, 0.5, 0.5]) {
            assert!((l - want).abs() < 1e-10);
        }
    }
}

#[test]
fn first_exclusion_state_is_the_supplement_pair() {
    let (u, w) = exclusion_pair(0).unwrap();
    let e0 = povm::Ket::new(vec![cr(1.0), cr(0.0), cr(0.0)]).unwrap();
    let e1 = povm::Ket::new(vec![cr(0.0), cr(1.0), cr(1.0)]).unwrap();
    let mix = DensityMatrix::mixture(&[(0.5, &e0.density()), (0.5, &e1.density())]).unwrap();
    assert!((u.overlap(&e0) - 1.0).abs() < 1e-10 || (u.overlap(&e1) - 1.0).abs() < 1e-10);
    assert!(u.overlap(&w).abs() < 1e-12);
    assert!(mix.matrix().matrix().max_abs_diff(exclusion_states()[0].matrix().matrix()) < 1e-12);
}

#[test]
fn depolarized_purity_by_expansion() {
    let v: f64 = 0.5;
    let p = depolarize(&sic_povm(), v).unwrap();
    let want = v * v / 9.0 + 2.0 * v * (1.0 - v) / 27.0 + (1.0 - v).powi(2) / 27.0;
    for e in p.effects() {
        assert!((e.inner(e) - want).abs() < 1e-12);
        assert!((e.trace() - 1.0 / 3.0).abs() < 1e-12);
    }
    let flat = depolarize(&sic_povm(), 0.0).unwrap();
    for e in flat.effects() {
        assert!(e.matrix().max_abs_diff(&CMatrix::identity(3).scale_re(1.0 / 9.0)) < 1e-12);
    }
    assert!(depolarize(&sic_povm(), 1.5).is_err());
    assert!(depolarize(&sic_povm(), -0.1).is_err());
}

#[test]
fn fidelity_invariant_under_common_unitary() {
    let mut r = rng(3);
    let u = haar_unitary(3, &mut r);
    let rotate = |p: &Povm| {
        Povm::new(
            p.effects()
                .iter()
                .map(|e| HermitianView::symmetrized(&u.matmul(e.matrix()).unwrap().matmul(&u.adjoint()).unwrap()))
                .collect(),
        )
        .unwrap()
    };
    let a = sic_povm();
    let b = depolarize(&a, 0.9).unwrap();
    let f = povm_fidelity(&a, &b).unwrap();
    let g = povm_fidelity(&rotate(&a), &rotate(&b)).unwrap();
    assert!((f - g).abs() < 1e-10);
    assert!(f < 1.0 && f > 0.9);
}

#[test]
fn zero_outcome_rule_is_orthogonal_for_every_setting() {
    let states = sic_states();
    let bases = mub_bases();
    for (x, psi) in states.iter().enumerate() {
        for (y, basis) in bases.iter().enumerate() {
            let b = zero_outcome_rule(x + 1, y + 1).unwrap();
            assert!(psi.overlap(&basis[b]) < 1e-12, "x={x} y={y}");
        }
    }
}
