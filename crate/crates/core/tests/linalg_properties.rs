mod common;

use proptest::prelude::*;
use sic_core::linalg::{self, c, cr, eig_hermitian, kron, partial_trace, psd_project, sqrt_psd, CMatrix, HermitianView};
use sic_core::photonic::decomposition_unitaries;
use sic_core::povm::{self, equiangular_states, naimark_unitary};

use common::{gaussian, haar_unitary, random_hermitian, random_psd, rng};

#[test]
fn decomposition_p_is_unitary() {
    let p = &decomposition_unitaries()[0];
    let pp = p.matmul(&p.adjoint()).unwrap();
    assert!(pp.max_abs_diff(&CMatrix::identity(3)) < 1e-12);
}

#[test]
fn naimark_matrix_is_unitary() {
    let u = naimark_unitary().transfer();
    let uu = u.matmul(&u.adjoint()).unwrap();
    assert!(uu.max_abs_diff(&CMatrix::identity(9)) < 1e-12);
}

#[test]
fn matching_operator_top_eigenvalue() {
    let phis = equiangular_states(4).unwrap();
    for phi in &phis {
        let o = &phi.projector().matrix().scale_re(2.0) - &CMatrix::identity(3).scale_re(4.0 / 3.0);
        let eig = eig_hermitian(&HermitianView::new(o).unwrap()).unwrap();
        assert!((eig.values[2] - 2.0 / 3.0).abs() < 1e-10);
    }
}

#[test]
fn product_state_partial_trace() {
    let psi = povm::sic_states()[4].clone();
    let anc = CMatrix::outer(&[cr(1.0), cr(0.0), cr(0.0)]);
    let joint = kron(psi.projector().matrix(), &anc);
    let reduced = partial_trace(&joint, &[3, 3], &[0]).unwrap();
    assert!(reduced.max_abs_diff(psi.projector().matrix()) < 1e-12);
}

#[test]
fn nearest_psd_beats_other_psd_candidates() {
    let mut r = rng(11);
    for _ in 0..20 {
        let h = random_hermitian(4, &mut r);
        let p = psd_project(&h).unwrap();
        let best = (h.matrix() - p.matrix()).frobenius_norm();
        for _ in 0..20 {
            let q = random_psd(4, 4, &mut r).scale(0.1);
            let cand = HermitianView::symmetrized(&(p.matrix() + q.matrix()));
            assert!((h.matrix() - cand.matrix()).frobenius_norm() >= best - 1e-12);
        }
    }
}

#[test]
fn dimension_mismatches_are_errors() {
    let a = CMatrix::zeros(2, 3);
    assert!(linalg::matmul(&a, &a).is_err());
    assert!(linalg::frob_inner(&a, &CMatrix::zeros(3, 2)).is_err());
    assert!(partial_trace(&CMatrix::identity(6), &[2, 2], &[0]).is_err());
    assert!(sqrt_psd(&HermitianView::new(CMatrix::diag(&[cr(1.0), cr(-1e-6)])).unwrap()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn haar_unitaries_are_unitary(seed in any::<u64>(), d in 2usize..12) {
        let v = haar_unitary(d, &mut rng(seed));
        let vv = v.adjoint().matmul(&v).unwrap();
        prop_assert!(vv.max_abs_diff(&CMatrix::identity(d)) < 1e-10);
    }

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), d in 2usize..=36) {
        let h = random_hermitian(d, &mut rng(seed));
        let eig = eig_hermitian(&h).unwrap();
        prop_assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        let q = &eig.vectors;
        let lam = CMatrix::diag(&eig.values.iter().map(|&l| cr(l)).collect::<Vec<_>>());
        let back = q.matmul(&lam).unwrap().matmul(&q.adjoint()).unwrap();
        prop_assert!((&back - h.matrix()).frobenius_norm() <= 1e-9 * h.matrix().frobenius_norm().max(1.0));
        let qq = q.adjoint().matmul(q).unwrap();
        prop_assert!(qq.max_abs_diff(&CMatrix::identity(d)) < 1e-10);
        for k in 0..d {
            let v = q.col(k);
            let av = h.matrix().apply(&v).unwrap();
            let err = av.iter().zip(&v).map(|(x, y)| (x - y * eig.values[k]).norm()).fold(0.0, f64::max);
            prop_assert!(err < 1e-10 * h.matrix().max_abs().max(1.0) * d as f64);
        }
    }

    #[test]
    fn two_by_two_closed_form(a in -5.0f64..5.0, b in -5.0f64..5.0, re in -5.0f64..5.0, im in -5.0f64..5.0) {
        let h = HermitianView::new(CMatrix::from_rows(&[vec![cr(a), c(re, im)], vec![c(re, -im), cr(b)]])).unwrap();
        let eig = eig_hermitian(&h).unwrap();
        let mean = 0.5 * (a + b);
        let rad = (0.25 * (a - b).powi(2) + re * re + im * im).sqrt();
        prop_assert!((eig.values[0] - (mean - rad)).abs() < 1e-9);
        prop_assert!((eig.values[1] - (mean + rad)).abs() < 1e-9);
    }

    #[test]
    fn trace_is_cyclic(seed in any::<u64>(), d in 1usize..10) {
        let mut r = rng(seed);
        let a = gaussian(d, d, &mut r);
        let b = gaussian(d, d, &mut r);
        let ab = a.matmul(&b).unwrap().trace();
        let ba = b.matmul(&a).unwrap().trace();
        prop_assert!((ab - ba).norm() < 1e-11 * (1.0 + ab.norm()));
    }

    #[test]
    fn matmul_is_associative(seed in any::<u64>(), d in 1usize..10) {
        let mut r = rng(seed);
        let (a, b, m) = (gaussian(d, d, &mut r), gaussian(d, d, &mut r), gaussian(d, d, &mut r));
        let left = a.matmul(&b).unwrap().matmul(&m).unwrap();
        let right = a.matmul(&b.matmul(&m).unwrap()).unwrap();
        prop_assert!((&left - &right).frobenius_norm() < 1e-12 * (1.0 + left.frobenius_norm()));
    }

    #[test]
    fn sqrt_squares_back(seed in any::<u64>(), d in 1usize..12, rank in 1usize..12) {
        let h = random_psd(d, rank.min(d), &mut rng(seed));
        let s = sqrt_psd(&h).unwrap();
        let ss = s.matrix().matmul(s.matrix()).unwrap();
        prop_assert!(ss.max_abs_diff(h.matrix()) < 1e-9 * h.matrix().max_abs().max(1.0));
        prop_assert!(s.min_eigenvalue().unwrap() > -1e-10);
    }

    #[test]
    fn psd_projection_is_idempotent(seed in any::<u64>(), d in 1usize..10) {
        let h = random_hermitian(d, &mut rng(seed));
        let p = psd_project(&h).unwrap();
        prop_assert!(p.min_eigenvalue().unwrap() >= -1e-12);
        let pp = psd_project(&p).unwrap();
        prop_assert!(pp.matrix().max_abs_diff(p.matrix()) < 1e-12 * h.matrix().max_abs().max(1.0));
    }

    #[test]
    fn exported_results_are_finite(seed in any::<u64>(), d in 1usize..8) {
        let mut r = rng(seed);
        let a = gaussian(d, d, &mut r);
        prop_assert!(a.matmul(&a).unwrap().is_finite());
        prop_assert!(kron(&a, &a).is_finite());
        let h = random_psd(d, d, &mut r);
        prop_assert!(sqrt_psd(&h).unwrap().matrix().is_finite());
    }
}
