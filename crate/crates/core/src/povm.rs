//! States and measurements: the qutrit SIC family and its relatives.
//!
//! Outcome labels in this module are zero-based. The SIC outcomes follow the
//! row-major order of the standard 3x3 display of the nine vectors (row
//! `x0`, column `x1`, label `3*x0 + x1`); the four MUBs are indexed in their
//! usual display order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, cr, omega, CMatrix, HermitianView, C64, TOL};

/// Completeness tolerance for a valid [`Povm`].
pub const COMPLETENESS_TOL: f64 = 1e-9;
/// Positivity tolerance for effects and density matrices.
pub const PSD_TOL: f64 = 1e-10;

/// Normalised pure state. The global phase is fixed so that the first
/// non-negligible amplitude is real and positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KetData")]
pub struct Ket {
    amplitudes: Vec<C64>,
}

impl Ket {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let n = linalg::norm(&amplitudes);
        if !(n > 1e-300) || !n.is_finite() {
            return Err(Error::InvalidArgument("ket must have nonzero finite norm".into()));
        }
        let mut amplitudes: Vec<C64> = amplitudes.into_iter().map(|z| z / n).collect();
        if let Some(lead) = amplitudes.iter().copied().find(|z| z.norm() > 1e-12) {
            let phase = lead.conj() / lead.norm();
            for z in &mut amplitudes {
                *z *= phase;
            }
        }
        Ok(Self { amplitudes })
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = vec![cr(0.0); dim];
        v[k] = cr(1.0);
        Self { amplitudes: v }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Ket) -> C64 {
        linalg::inner(&self.amplitudes, &other.amplitudes)
    }

    /// `|<self|other>|^2`.
    pub fn overlap(&self, other: &Ket) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn projector(&self) -> HermitianView {
        HermitianView::projector(&self.amplitudes)
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            matrix: self.projector(),
        }
    }
}

/// Unit-trace positive semidefinite operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityData")]
pub struct DensityMatrix {
    matrix: HermitianView,
}

impl DensityMatrix {
    pub fn new(matrix: HermitianView) -> Result<Self> {
        let tr = matrix.trace();
        if (tr - 1.0).abs() > TOL.atol {
            return Err(Error::InvalidArgument(format!("density matrix trace {tr}, expected 1")));
        }
        let min = matrix.min_eigenvalue()?;
        if min < -PSD_TOL {
            return Err(Error::NotPsd(min));
        }
        Ok(Self { matrix })
    }

    /// Rescales a PSD operator to unit trace.
    pub fn from_unnormalized(matrix: HermitianView) -> Result<Self> {
        let tr = matrix.trace();
        if !(tr > 0.0) {
            return Err(Error::InvalidArgument("operator has non-positive trace".into()));
        }
        Self::new(matrix.scale(1.0 / tr))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: HermitianView::identity(dim).scale(1.0 / dim as f64),
        }
    }

    /// Convex combination of states with the given weights.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let mut acc = CMatrix::zeros(first.1.dim(), first.1.dim());
        for (w, rho) in parts {
            acc += &rho.matrix.matrix().scale_re(*w);
        }
        Self::new(HermitianView::symmetrized(&acc))
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &HermitianView {
        &self.matrix
    }

    pub fn expectation(&self, op: &HermitianView) -> f64 {
        self.matrix.inner(op)
    }
}

/// Ordered list of PSD effects summing to the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PovmData")]
pub struct Povm {
    effects: Vec<HermitianView>,
}

// Unvalidated wire forms; deserialisation goes through the checked constructors.
#[derive(Deserialize)]
struct KetData {
    amplitudes: Vec<C64>,
}

#[derive(Deserialize)]
struct DensityData {
    matrix: HermitianView,
}

#[derive(Deserialize)]
struct PovmData {
    effects: Vec<HermitianView>,
}

impl TryFrom<KetData> for Ket {
    type Error = Error;
    fn try_from(d: KetData) -> Result<Self> {
        Ket::new(d.amplitudes)
    }
}

impl TryFrom<DensityData> for DensityMatrix {
    type Error = Error;
    fn try_from(d: DensityData) -> Result<Self> {
        DensityMatrix::new(d.matrix)
    }
}

impl TryFrom<PovmData> for Povm {
    type Error = Error;
    fn try_from(d: PovmData) -> Result<Self> {
        Povm::new(d.effects)
    }
}

impl Povm {
    pub fn new(effects: Vec<HermitianView>) -> Result<Self> {
        let p = Self::from_effects_unchecked(effects)?;
        for (a, e) in p.effects.iter().enumerate() {
            let min = e.min_eigenvalue()?;
            if min < -PSD_TOL {
                return Err(Error::InvalidArgument(format!(
                    "effect {a} has negative eigenvalue {min:.3e}"
                )));
            }
        }
        let err = p.completeness_error();
        if err > COMPLETENESS_TOL {
            return Err(Error::InvalidArgument(format!(
                "effects sum to identity only within {err:.3e}"
            )));
        }
        Ok(p)
    }

    /// Skips positivity and completeness checks; only shapes are validated.
    pub fn from_effects_unchecked(effects: Vec<HermitianView>) -> Result<Self> {
        let dim = effects
            .first()
            .ok_or_else(|| Error::InvalidArgument("POVM needs at least one effect".into()))?
            .dim();
        if effects.iter().any(|e| e.dim() != dim) {
            return Err(Error::DimensionMismatch("POVM effects of different sizes".into()));
        }
        Ok(Self { effects })
    }

    /// Projective measurement onto the given orthonormal kets.
    pub fn from_basis(kets: &[Ket]) -> Result<Self> {
        Self::new(kets.iter().map(Ket::projector).collect())
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[HermitianView] {
        &self.effects
    }

    pub fn effect(&self, a: usize) -> &HermitianView {
        &self.effects[a]
    }

    /// Max entry of `sum_a E_a - 1`.
    pub fn completeness_error(&self) -> f64 {
        let mut sum = CMatrix::zeros(self.dim(), self.dim());
        for e in &self.effects {
            sum += e.matrix();
        }
        sum.max_abs_diff(&CMatrix::identity(self.dim()))
    }

    /// Outcome distribution `tr(rho E_a)`.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Vec<f64> {
        self.effects.iter().map(|e| rho.expectation(e)).collect()
    }

    pub fn probabilities_pure(&self, psi: &Ket) -> Vec<f64> {
        self.effects.iter().map(|e| e.expectation(psi.amplitudes())).collect()
    }
}

/// Naimark dilation of the SIC measurement as a 9x9 unitary. Rows at
/// `system_ports` hold the SIC vectors (scaled by `1/sqrt 3`) column by column.
#[derive(Debug, Clone)]
pub struct NaimarkUnitary {
    pub matrix: CMatrix,
    pub system_ports: [usize; 3],
}

impl NaimarkUnitary {
    /// Optical transfer matrix realising the dilation: `U^dagger`, so that
    /// output port `a` carries amplitude `<psi_a|psi>/sqrt 3`.
    pub fn transfer(&self) -> CMatrix {
        self.matrix.adjoint()
    }

    /// The measurement seen by a qutrit entering on `system_ports`.
    pub fn induced_povm(&self) -> Result<Povm> {
        let effects = (0..self.matrix.cols())
            .map(|a| {
                let col: Vec<C64> = self.system_ports.iter().map(|&p| self.matrix[(p, a)]).collect();
                HermitianView::projector(&col)
            })
            .collect();
        Povm::new(effects)
    }
}

fn unnormalized_sic_vectors() -> [[C64; 3]; 9] {
    let w = omega();
    let w2 = w * w;
    let (o, z) = (cr(1.0), cr(0.0));
    [
        [z, o, -o],
        [z, o, -w],
        [z, o, -w2],
        [-o, z, o],
        [-w, z, o],
        [-w2, z, o],
        [o, -o, z],
        [o, -w, z],
        [o, -w2, z],
    ]
}

/// The nine SIC kets, normalised, in row-major display order.
pub fn sic_states() -> Vec<Ket> {
    unnormalized_sic_vectors()
        .iter()
        .map(|v| Ket::new(v.to_vec()).expect("nonzero"))
        .collect()
}

/// `E_a = |psi_a><psi_a| / 3`.
pub fn sic_povm() -> Povm {
    let effects = sic_states().iter().map(|k| k.projector().scale(1.0 / 3.0)).collect();
    Povm::new(effects).expect("SIC POVM is valid")
}

pub fn naimark_unitary() -> NaimarkUnitary {
    let w = omega();
    let w2 = w * w;
    let (o, z) = (cr(1.0), cr(0.0));
    let r2 = cr(2f64.sqrt());
    let rows = vec![
        vec![z, z, z, -o, -w2, -w, o, w, w2],
        vec![r2, r2, r2, z, z, z, z, z, z],
        vec![o, w2, w, o, w, w2, z, z, z],
        vec![o, w, w2, z, z, z, -o, -w2, -w],
        vec![z, z, z, r2, r2, r2, z, z, z],
        vec![z, z, z, o, w2, w, o, w, w2],
        vec![-o, -w2, -w, o, w, w2, z, z, z],
        vec![z, z, z, z, z, z, r2, r2, r2],
        vec![o, w, w2, z, z, z, o, w2, w],
    ];
    NaimarkUnitary {
        matrix: CMatrix::from_rows(&rows).scale_re(1.0 / 6f64.sqrt()),
        system_ports: [0, 3, 6],
    }
}

/// Matrix whose columns are the basis vectors of MUB `y` (zero-based, 0..4).
pub fn mub_matrix(y: usize) -> Result<CMatrix> {
    let w = omega();
    let w2 = w * w;
    let o = cr(1.0);
    let s = 1.0 / 3f64.sqrt();
    let m = match y {
        0 => return Ok(CMatrix::identity(3)),
        1 => vec![vec![o, o, o], vec![o, w, w2], vec![o, w2, w]],
        2 => vec![vec![o, w, w], vec![w, o, w], vec![w, w, o]],
        3 => vec![vec![o, w2, w2], vec![w2, o, w2], vec![w2, w2, o]],
        _ => {
            return Err(Error::IndexOutOfRange {
                what: "MUB index",
                index: y + 1,
                max: 4,
            })
        }
    };
    Ok(CMatrix::from_rows(&m).scale_re(s))
}

/// The four mutually unbiased qutrit bases; `bases[y][a]` is outcome `a` of basis `y`.
pub fn mub_bases() -> Vec<Vec<Ket>> {
    (0..4)
        .map(|y| {
            let m = mub_matrix(y).expect("valid index");
            (0..3).map(|a| Ket::new(m.col(a)).expect("nonzero")).collect()
        })
        .collect()
}

/// `n` equiangular kets in dimension `n - 1`: columns of the `n`-point
/// Fourier matrix with its last row removed, renormalised. For `n = 4`
/// these are `(1, i^a, (-1)^a)/sqrt 3`.
pub fn equiangular_states(n: usize) -> Result<Vec<Ket>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("equiangular set needs n >= 2, got {n}")));
    }
    let d = n - 1;
    (0..n)
        .map(|k| {
            let amps = (0..d)
                .map(|j| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (j * k % n) as f64 / n as f64))
                .collect();
            Ket::new(amps)
        })
        .collect()
}

/// `rho_x = (1 - |psi_x><psi_x|)/2`: the state orthogonal to SIC vector `x`.
pub fn exclusion_states() -> Vec<DensityMatrix> {
    sic_states()
        .iter()
        .map(|k| {
            let m = &CMatrix::identity(3) - k.projector().matrix();
            DensityMatrix::new(HermitianView::symmetrized(&m.scale_re(0.5))).expect("valid state")
        })
        .collect()
}

/// The two orthogonal pure states whose equal mixture prepares `rho_x`
/// in the switching scheme used on hardware.
pub fn exclusion_pair(x: usize) -> Result<(Ket, Ket)> {
    if x >= 9 {
        return Err(Error::IndexOutOfRange {
            what: "SIC index",
            index: x + 1,
            max: 9,
        });
    }
    let w = omega();
    let phase = [cr(1.0), w, w * w][x % 3];
    let (o, z) = (cr(1.0), cr(0.0));
    let (a, b) = match x / 3 {
        0 => (vec![o, z, z], vec![z, o, phase]),
        1 => (vec![z, o, z], vec![phase, z, o]),
        _ => (vec![z, z, o], vec![o, phase, z]),
    };
    Ok((Ket::new(a)?, Ket::new(b)?))
}

/// Mixes each effect toward `tr(E_a) 1/d` with weight `1 - v`.
pub fn depolarize(p: &Povm, v: f64) -> Result<Povm> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidArgument(format!("visibility {v} outside [0, 1]")));
    }
    let d = p.dim();
    let effects = p
        .effects()
        .iter()
        .map(|e| {
            let noise = HermitianView::identity(d).scale((1.0 - v) * e.trace() / d as f64);
            e.scale(v).add(&noise)
        })
        .collect();
    Povm::from_effects_unchecked(effects)
}

/// Uhlmann fidelity `(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2` of two PSD operators.
pub fn uhlmann_fidelity(rho: &HermitianView, sigma: &HermitianView) -> Result<f64> {
    // Eigenvalues at rounding level are dropped; their square roots would
    // otherwise inject errors of order 1e-8.
    let e = linalg::eig_hermitian(rho)?;
    let floor = 1e-14 * e.values.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
    if e.values[0] < -1e-8 {
        return Err(Error::NotPsd(e.values[0]));
    }
    let sr = e.reconstruct_with(|l| if l > floor { l.sqrt() } else { 0.0 });
    let inner = HermitianView::symmetrized(&(&(sr.matrix() * sigma.matrix()) * sr.matrix()));
    let e = linalg::eig_hermitian(&inner)?;
    let floor = 1e-14 * e.values.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
    let t: f64 = e.values.iter().filter(|&&l| l > floor).map(|l| l.sqrt()).sum();
    Ok(t * t)
}

/// Fidelity between two measurements through their normalised per-outcome
/// effects: `(sum_j w_j sqrt F_j)^2` with `w_j = sqrt(tr E_j tr E'_j)/d`.
pub fn povm_fidelity(p: &Povm, q: &Povm) -> Result<f64> {
    if p.dim() != q.dim() || p.outcomes() != q.outcomes() {
        return Err(Error::DimensionMismatch(format!(
            "POVM shapes differ: {}x{} vs {}x{}",
            p.outcomes(),
            p.dim(),
            q.outcomes(),
            q.dim()
        )));
    }
    let d = p.dim() as f64;
    let mut acc = 0.0;
    for (e, f) in p.effects().iter().zip(q.effects()) {
        let (te, tf) = (e.trace(), f.trace());
        if te <= 1e-14 || tf <= 1e-14 {
            continue;
        }
        let w = (te * tf).sqrt() / d;
        let fj = uhlmann_fidelity(&e.scale(1.0 / te), &f.scale(1.0 / tf))?;
        acc += w * fj.min(1.0).sqrt();
    }
    Ok((acc * acc).clamp(0.0, 1.0))
}

/// SIC label `x` (1..=9) split into trits `(x0, x1)` with `x = 3 x0 + x1 + 1`.
pub fn sic_trits(x: usize) -> Result<(usize, usize)> {
    if !(1..=9).contains(&x) {
        return Err(Error::IndexOutOfRange {
            what: "SIC label",
            index: x,
            max: 9,
        });
    }
    Ok(((x - 1) / 3, (x - 1) % 3))
}

/// The outcome `a` of MUB `y` (1..=4) that can never fire on SIC state `x` (1..=9).
pub fn zero_outcome_rule(x: usize, y: usize) -> Result<usize> {
    let (x0, x1) = sic_trits(x)?;
    if !(1..=4).contains(&y) {
        return Err(Error::IndexOutOfRange {
            what: "MUB label",
            index: y,
            max: 4,
        });
    }
    let (y0, y1) = ((y - 1) / 2, (y - 1) % 2);
    Ok(if y0 == 0 {
        if y1 == 0 {
            x0
        } else {
            x1
        }
    } else if y1 == 0 {
        (x0 + x1) % 3
    } else {
        (x0 + 3 - x1) % 3
    })
}

/// Projector onto a ket given as raw amplitudes, scaled.
pub fn scaled_projector(v: &[C64], s: f64) -> HermitianView {
    HermitianView::projector(v).scale(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn sic_overlaps() {
        let s = sic_states();
        assert_close(s[0].overlap(&s[1]), 0.25, 1e-10);
        for j in 0..9 {
            assert_close(s[j].overlap(&s[j]), 1.0, 1e-12);
            for k in (j + 1)..9 {
                assert_close(s[j].overlap(&s[k]), 0.25, 1e-10);
            }
        }
    }

    #[test]
    fn sic_frame_sums_to_identity() {
        // Direct summation of (1/3)|psi><psi| over the raw vectors.
        let mut acc = CMatrix::zeros(3, 3);
        for v in unnormalized_sic_vectors() {
            acc += &CMatrix::outer(&v).scale_re(1.0 / 3.0 / 2.0);
        }
        assert!(acc.max_abs_diff(&CMatrix::identity(3)) < 1e-12);
    }

    #[test]
    fn sic_povm_effects() {
        let p = sic_povm();
        let s = sic_states();
        assert_eq!(p.outcomes(), 9);
        for (a, e) in p.effects().iter().enumerate() {
            assert_close(e.trace(), 1.0 / 3.0, 1e-12);
            let ev = linalg::eig_hermitian(e).unwrap().values;
            assert_close(ev[0], 0.0, 1e-12);
            assert_close(ev[1], 0.0, 1e-12);
            assert_close(e.expectation(s[a].amplitudes()), 1.0 / 3.0, 1e-12);
        }
        assert!(p.completeness_error() < 1e-12);
    }

    #[test]
    fn phase_convention() {
        for k in sic_states().iter().chain(mub_bases().iter().flatten()) {
            let lead = k.amplitudes().iter().find(|z| z.norm() > 1e-12).unwrap();
            assert!(lead.im.abs() < 1e-14 && lead.re > 0.0);
        }
    }

    #[test]
    fn naimark_matrix() {
        let u = naimark_unitary();
        let uu = u.matrix.adjoint().matmul(&u.matrix).unwrap();
        assert!(uu.max_abs_diff(&CMatrix::identity(9)) < 1e-12);
        let uu2 = &u.matrix * &u.matrix.adjoint();
        assert!(uu2.max_abs_diff(&CMatrix::identity(9)) < 1e-12);
        assert!((u.matrix[(1, 0)] - cr(2f64.sqrt() / 6f64.sqrt())).norm() < 1e-15);
        let fid = povm_fidelity(&u.induced_povm().unwrap(), &sic_povm()).unwrap();
        assert_close(fid, 1.0, 1e-10);
        // Restricted rows, renormalised, are the SIC kets up to phase.
        let s = sic_states();
        for a in 0..9 {
            let col: Vec<C64> = u.system_ports.iter().map(|&p| u.matrix[(p, a)]).collect();
            let k = Ket::new(col).unwrap();
            assert_close(k.overlap(&s[a]), 1.0, 1e-12);
        }
    }

    #[test]
    fn mub_structure() {
        let b = mub_bases();
        assert!(b[0]
            .iter()
            .enumerate()
            .all(|(a, k)| k.overlap(&Ket::basis(3, a)) > 1.0 - 1e-14));
        assert_close(b[1][0].overlap(&b[2][1]), 1.0 / 3.0, 1e-10);
        for y in 0..4 {
            for a in 0..3 {
                for a2 in 0..3 {
                    let want = if a == a2 { 1.0 } else { 0.0 };
                    assert_close(b[y][a].overlap(&b[y][a2]), want, 1e-10);
                }
                for y2 in (y + 1)..4 {
                    for a2 in 0..3 {
                        assert_close(b[y][a].overlap(&b[y2][a2]), 1.0 / 3.0, 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn equiangular_four() {
        let phi = equiangular_states(4).unwrap();
        for j in 0..4 {
            for k in 0..4 {
                if j != k {
                    assert_close(phi[j].overlap(&phi[k]), 1.0 / 9.0, 1e-12);
                }
            }
        }
        let mut sum = CMatrix::zeros(3, 3);
        for k in &phi {
            sum += k.projector().matrix();
        }
        assert!(sum.max_abs_diff(&CMatrix::identity(3).scale_re(4.0 / 3.0)) < 1e-12);
        let i = c(0.0, 1.0);
        for (a, k) in phi.iter().enumerate() {
            let want = Ket::new(vec![cr(1.0), i.powu(a as u32), cr((-1f64).powi(a as i32))]).unwrap();
            assert_close(k.overlap(&want), 1.0, 1e-12);
        }
    }

    #[test]
    fn equiangular_general() {
        for n in 2..9 {
            let phi = equiangular_states(n).unwrap();
            let d = (n - 1) as f64;
            let mut sum = CMatrix::zeros(n - 1, n - 1);
            for (j, k) in phi.iter().enumerate() {
                sum += k.projector().matrix();
                for k2 in &phi[j + 1..] {
                    assert_close(k.overlap(k2), 1.0 / (d * d), 1e-12);
                }
            }
            assert!(sum.max_abs_diff(&CMatrix::identity(n - 1).scale_re(n as f64 / d)) < 1e-12);
        }
        assert!(equiangular_states(1).is_err());
    }

    #[test]
    fn exclusion_states_structure() {
        let rhos = exclusion_states();
        let s = sic_states();
        let p = sic_povm();
        for (x, rho) in rhos.iter().enumerate() {
            assert_close(rho.matrix().trace(), 1.0, 1e-12);
            assert_close(rho.expectation(&s[x].projector()), 0.0, 1e-12);
            let ev = linalg::eig_hermitian(rho.matrix()).unwrap().values;
            for (got, want) in ev.iter().zip([0.0, 0.5, 0.5]) {
                assert_close(*got, want, 1e-12);
            }
            for (a, prob) in p.probabilities(rho).iter().enumerate() {
                assert_close(*prob, if a == x { 0.0 } else { 1.0 / 8.0 }, 1e-12);
            }
        }
    }

    #[test]
    fn exclusion_pairs_mix_to_exclusion_states() {
        let rhos = exclusion_states();
        for x in 0..9 {
            let (a, b) = exclusion_pair(x).unwrap();
            assert_close(a.overlap(&b), 0.0, 1e-14);
            let mix = DensityMatrix::mixture(&[(0.5, &a.density()), (0.5, &b.density())]).unwrap();
            assert!(mix.matrix().matrix().max_abs_diff(rhos[x].matrix().matrix()) < 1e-12);
        }
        assert!(exclusion_pair(9).is_err());
    }

    #[test]
    fn depolarize_cases() {
        let sic = sic_povm();
        let same = depolarize(&sic, 1.0).unwrap();
        assert_eq!(same, sic);
        let flat = depolarize(&sic, 0.0).unwrap();
        for e in flat.effects() {
            assert!(e.matrix().max_abs_diff(&CMatrix::identity(3).scale_re(1.0 / 9.0)) < 1e-14);
        }
        // tr(E^2) for v E + (1-v) 1/9 with E = P/3: v^2/9 + 2v(1-v)/27 + (1-v)^2/27.
        let half = depolarize(&sic, 0.5).unwrap();
        for e in half.effects() {
            assert_close(e.inner(e), 1.0 / 18.0, 1e-12);
            assert_close(e.trace(), 1.0 / 3.0, 1e-12);
        }
        assert!(half.completeness_error() < 1e-12);
        assert!(depolarize(&sic, 1.5).is_err());
        assert!(depolarize(&sic, -0.1).is_err());
    }

    #[test]
    fn depolarize_composes() {
        let sic = sic_povm();
        for (v1, v2) in [(0.9, 0.8), (0.5, 0.3), (1.0, 0.2)] {
            let twice = depolarize(&depolarize(&sic, v1).unwrap(), v2).unwrap();
            let once = depolarize(&sic, v1 * v2).unwrap();
            for (a, b) in twice.effects().iter().zip(once.effects()) {
                assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-10);
            }
        }
    }

    #[test]
    fn fidelity_self_and_monotone() {
        let sic = sic_povm();
        assert_close(povm_fidelity(&sic, &sic).unwrap(), 1.0, 1e-10);
        let mut last = 1.0 + 1e-12;
        for k in 0..=10 {
            let v = 1.0 - 0.01 * k as f64;
            let f = povm_fidelity(&sic, &depolarize(&sic, v).unwrap()).unwrap();
            assert!(f < last, "not decreasing at v={v}: {f} >= {last}");
            last = f;
        }
    }

    #[test]
    fn fidelity_matches_block_state_uhlmann() {
        // Two-outcome qubit POVMs; oracle is the Uhlmann fidelity between
        // sigma = (1/d) sum_j E_j (x) |j><j| computed on the 4x4 block states.
        let e0 = HermitianView::new(CMatrix::from_real_rows(&[&[0.7, 0.2], &[0.2, 0.4]])).unwrap();
        let e1 = HermitianView::symmetrized(&(&CMatrix::identity(2) - e0.matrix()));
        let f0 = HermitianView::new(CMatrix::from_rows(&[
            vec![cr(0.5), c(0.1, 0.15)],
            vec![c(0.1, -0.15), cr(0.6)],
        ]))
        .unwrap();
        let f1 = HermitianView::symmetrized(&(&CMatrix::identity(2) - f0.matrix()));
        let p = Povm::new(vec![e0.clone(), e1.clone()]).unwrap();
        let q = Povm::new(vec![f0.clone(), f1.clone()]).unwrap();

        let block = |a: &HermitianView, b: &HermitianView| {
            let mut m = CMatrix::zeros(4, 4);
            for i in 0..2 {
                for j in 0..2 {
                    m[(i, j)] = a.matrix()[(i, j)] * 0.5;
                    m[(2 + i, 2 + j)] = b.matrix()[(i, j)] * 0.5;
                }
            }
            HermitianView::symmetrized(&m)
        };
        let oracle = uhlmann_fidelity(&block(&e0, &e1), &block(&f0, &f1)).unwrap();
        assert_close(povm_fidelity(&p, &q).unwrap(), oracle, 1e-10);
        assert_close(povm_fidelity(&q, &p).unwrap(), oracle, 1e-10);
    }

    #[test]
    fn fidelity_shape_mismatch() {
        let b = Povm::from_basis(&mub_bases()[0]).unwrap();
        assert!(matches!(povm_fidelity(&b, &sic_povm()), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn zero_outcome_examples() {
        assert_eq!(zero_outcome_rule(1, 1).unwrap(), 0);
        let s = sic_states();
        assert_close(Ket::basis(3, 0).overlap(&s[0]), 0.0, 1e-14);
        // x = 5 -> (x0, x1) = (1, 1); y = 3 -> (y0, y1) = (1, 0).
        assert_eq!(zero_outcome_rule(5, 3).unwrap(), 2);
        assert!(zero_outcome_rule(0, 1).is_err());
        assert!(zero_outcome_rule(10, 1).is_err());
        assert!(zero_outcome_rule(1, 5).is_err());
    }

    #[test]
    fn zero_outcome_rule_exhaustive() {
        let s = sic_states();
        let b = mub_bases();
        for x in 1..=9 {
            for y in 1..=4 {
                let zeros: Vec<usize> = (0..3)
                    .filter(|&a| b[y - 1][a].overlap(&s[x - 1]) < 1e-20)
                    .collect();
                assert_eq!(zeros, vec![zero_outcome_rule(x, y).unwrap()], "x={x} y={y}");
                for a in 0..3 {
                    if a != zeros[0] {
                        assert_close(b[y - 1][a].overlap(&s[x - 1]), 0.5, 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_povm_rejected() {
        let half = HermitianView::identity(2).scale(0.5);
        assert!(Povm::new(vec![half.clone()]).is_err());
        let neg = HermitianView::new(CMatrix::diag(&[cr(1.5), cr(1.0)])).unwrap();
        let comp = HermitianView::new(CMatrix::diag(&[cr(-0.5), cr(0.0)])).unwrap();
        assert!(Povm::new(vec![neg, comp]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;

        /// Random POVM from a random isometry (columns of a QR factor).
        fn random_povm(seed: u64, outcomes: usize) -> Povm {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let big = outcomes.max(3);
            let g = CMatrix::from_fn(big, big, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let q = CMatrix::from_nalgebra(&g.to_nalgebra().qr().q());
            let effects = (0..outcomes)
                .map(|a| {
                    let row: Vec<C64> = (0..3).map(|j| q[(a, j)].conj()).collect();
                    HermitianView::projector(&row)
                })
                .collect::<Vec<_>>();
            // Rows of a unitary restricted to 3 columns form a 3-dim isometry
            // only if all rows are kept.
            Povm::new(effects).unwrap()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn fidelity_is_symmetric(s1 in any::<u64>(), s2 in any::<u64>()) {
                let p = random_povm(s1, 5);
                let q = random_povm(s2, 5);
                let a = povm_fidelity(&p, &q).unwrap();
                let b = povm_fidelity(&q, &p).unwrap();
                prop_assert!((a - b).abs() <= 1e-10, "{} vs {}", a, b);
                prop_assert!((0.0..=1.0).contains(&a));
            }

            #[test]
            fn depolarize_keeps_completeness(seed in any::<u64>(), v in 0.0f64..=1.0) {
                let p = random_povm(seed, 6);
                let d = depolarize(&p, v).unwrap();
                prop_assert!(d.completeness_error() <= 1e-9);
                for (e, f) in p.effects().iter().zip(d.effects()) {
                    prop_assert!((e.trace() - f.trace()).abs() <= 1e-12);
                    prop_assert!(f.min_eigenvalue().unwrap() >= -1e-10);
                }
            }
        }
    }
}
