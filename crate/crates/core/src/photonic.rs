//! Linear-optical circuit model for the nine-port measurement chip.
//!
//! A circuit acts on single-photon amplitudes across `width` spatial modes:
//! an input amplitude vector `x` leaves as `W x`. The measurement induced on
//! a qutrit injected into `input_ports` has effects `E_a = w_a w_a^dagger`
//! with `w_a` the complex conjugate of row `a` of `W` restricted to the
//! input ports.
//!
//! Visibility imperfections are modelled per Mach-Zehnder interferometer as
//! a reflectivity imbalance of its second beam splitter, which keeps every
//! transfer matrix unitary. Subspace unitaries are expanded into a
//! triangular MZI mesh before noise is applied.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, cr, omega, CMatrix, HermitianView, C64};
use crate::povm::{Ket, Povm};

/// Unitarity tolerance for stage payloads and compiled circuits.
pub const UNITARY_TOL: f64 = 1e-10;

/// Two-mode interferometer: `PS(phi) . BS(R) . PS(theta) . BS(1/2)` with the
/// phase shifters on mode 0 and `BS(R) = [[sqrt R, i sqrt(1-R)], [i sqrt(1-R), sqrt R]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MziSetting {
    pub internal_phase: f64,
    pub external_phase: f64,
    #[serde(default = "unit_visibility")]
    pub visibility: f64,
}

fn unit_visibility() -> f64 {
    1.0
}

impl MziSetting {
    pub fn new(internal_phase: f64, external_phase: f64) -> Self {
        Self {
            internal_phase,
            external_phase,
            visibility: 1.0,
        }
    }

    /// Both modes map back onto themselves.
    pub fn bar() -> Self {
        Self::new(std::f64::consts::PI, 0.0)
    }

    /// Modes are exchanged.
    pub fn cross() -> Self {
        Self::new(0.0, 0.0)
    }

    pub fn with_visibility(self, visibility: f64) -> Self {
        Self { visibility, ..self }
    }
}

fn beam_splitter(reflectivity: f64) -> [[C64; 2]; 2] {
    let r = cr(reflectivity.sqrt());
    let t = c(0.0, (1.0 - reflectivity).max(0.0).sqrt());
    [[r, t], [t, r]]
}

fn mul2(a: [[C64; 2]; 2], b: [[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let mut out = [[cr(0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn phase2(phi: f64) -> [[C64; 2]; 2] {
    [[C64::from_polar(1.0, phi), cr(0.0)], [cr(0.0), cr(1.0)]]
}

/// 2x2 transfer of one interferometer.
pub fn mzi_unitary(s: &MziSetting) -> Result<CMatrix> {
    if !(0.0..=1.0).contains(&s.visibility) {
        return Err(Error::InvalidArgument(format!(
            "visibility {} outside [0, 1]",
            s.visibility
        )));
    }
    let r2 = 0.5 * (1.0 + (1.0 - s.visibility * s.visibility).sqrt());
    let m = mul2(
        phase2(s.external_phase),
        mul2(beam_splitter(r2), mul2(phase2(s.internal_phase), beam_splitter(0.5))),
    );
    Ok(CMatrix::from_rows(&[m[0].to_vec(), m[1].to_vec()]))
}

fn check_ports(ports: &[usize], width: usize) -> Result<()> {
    for (i, &p) in ports.iter().enumerate() {
        if p >= width {
            return Err(Error::InvalidArgument(format!("port {p} outside width {width}")));
        }
        if ports[..i].contains(&p) {
            return Err(Error::InvalidArgument(format!("port {p} repeated")));
        }
    }
    Ok(())
}

/// Embeds a `k x k` unitary on the listed ports of a `width`-mode identity.
pub fn subspace_embed(u: &CMatrix, ports: &[usize], width: usize) -> Result<CMatrix> {
    if u.shape() != (ports.len(), ports.len()) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} block for {} ports",
            u.rows(),
            u.cols(),
            ports.len()
        )));
    }
    check_ports(ports, width)?;
    let mut m = CMatrix::identity(width);
    for (i, &pi) in ports.iter().enumerate() {
        for (j, &pj) in ports.iter().enumerate() {
            m[(pi, pj)] = u[(i, j)];
        }
    }
    Ok(m)
}

/// One primitive optical element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StageOp {
    SubspaceUnitary { ports: Vec<usize>, unitary: CMatrix },
    Mzi { ports: [usize; 2], setting: MziSetting },
    /// Mode `i` is routed to port `perm[i]`.
    PortPermutation { perm: Vec<usize> },
    PhaseLayer { ports: Vec<usize>, phases: Vec<f64> },
}

impl StageOp {
    fn validate(&self, width: usize) -> Result<()> {
        match self {
            StageOp::SubspaceUnitary { ports, unitary } => {
                check_ports(ports, width)?;
                if unitary.shape() != (ports.len(), ports.len()) {
                    return Err(Error::DimensionMismatch("subspace payload size".into()));
                }
                if !unitary.is_unitary(UNITARY_TOL) {
                    return Err(Error::InvalidArgument("subspace payload is not unitary".into()));
                }
            }
            StageOp::Mzi { ports, setting } => {
                check_ports(ports, width)?;
                if !(0.0..=1.0).contains(&setting.visibility) {
                    return Err(Error::InvalidArgument("MZI visibility outside [0, 1]".into()));
                }
            }
            StageOp::PortPermutation { perm } => {
                if perm.len() != width {
                    return Err(Error::DimensionMismatch(format!(
                        "permutation of length {} on width {width}",
                        perm.len()
                    )));
                }
                check_ports(perm, width)?;
            }
            StageOp::PhaseLayer { ports, phases } => {
                check_ports(ports, width)?;
                if ports.len() != phases.len() {
                    return Err(Error::DimensionMismatch("phase layer ports vs phases".into()));
                }
            }
        }
        Ok(())
    }

    /// Full-width transfer matrix with every interferometer visibility
    /// multiplied by `v`.
    fn matrix(&self, width: usize, v: f64) -> Result<CMatrix> {
        match self {
            StageOp::SubspaceUnitary { ports, unitary } => {
                if v >= 1.0 {
                    subspace_embed(unitary, ports, width)
                } else {
                    let local = reck_decompose(unitary)?.compose(v)?;
                    subspace_embed(&local, ports, width)
                }
            }
            StageOp::Mzi { ports, setting } => {
                let s = setting.with_visibility(setting.visibility * v);
                subspace_embed(&mzi_unitary(&s)?, ports, width)
            }
            StageOp::PortPermutation { perm } => {
                let mut m = CMatrix::zeros(width, width);
                for (i, &p) in perm.iter().enumerate() {
                    m[(p, i)] = cr(1.0);
                }
                Ok(m)
            }
            StageOp::PhaseLayer { ports, phases } => {
                let mut m = CMatrix::identity(width);
                for (&p, &ph) in ports.iter().zip(phases) {
                    m[(p, p)] = C64::from_polar(1.0, ph);
                }
                Ok(m)
            }
        }
    }
}

/// Labelled group of elements applied in the listed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitStage {
    pub label: String,
    pub ops: Vec<StageOp>,
}

impl CircuitStage {
    pub fn new(label: impl Into<String>, ops: Vec<StageOp>) -> Self {
        Self {
            label: label.into(),
            ops,
        }
    }

    fn matrix(&self, width: usize, v: f64) -> Result<CMatrix> {
        let mut m = CMatrix::identity(width);
        for op in &self.ops {
            m = op.matrix(width, v)?.matmul(&m)?;
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonicCircuit {
    pub width: usize,
    pub input_ports: Vec<usize>,
    pub ancilla_ports: Vec<usize>,
    pub stages: Vec<CircuitStage>,
}

impl PhotonicCircuit {
    /// Circuit with the given inputs; every other port starts in vacuum.
    pub fn new(width: usize, input_ports: Vec<usize>, stages: Vec<CircuitStage>) -> Result<Self> {
        let ancilla_ports = (0..width).filter(|p| !input_ports.contains(p)).collect();
        let circuit = Self {
            width,
            input_ports,
            ancilla_ports,
            stages,
        };
        circuit.validate()?;
        Ok(circuit)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_ports.is_empty() {
            return Err(Error::InvalidArgument("circuit has no input ports".into()));
        }
        check_ports(&self.input_ports, self.width)?;
        check_ports(&self.ancilla_ports, self.width)?;
        if self.input_ports.iter().any(|p| self.ancilla_ports.contains(p)) {
            return Err(Error::InvalidArgument("input and ancilla ports overlap".into()));
        }
        if self.input_ports.len() + self.ancilla_ports.len() != self.width {
            return Err(Error::InvalidArgument("input and ancilla ports do not cover the circuit".into()));
        }
        for stage in &self.stages {
            for op in &stage.ops {
                op.validate(self.width)?;
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn has_imperfect_mzi(&self) -> bool {
        self.stages.iter().flat_map(|s| &s.ops).any(|op| {
            matches!(op, StageOp::Mzi { setting, .. } if setting.visibility < 1.0)
        })
    }

    fn transfer(&self, v_map: &[f64]) -> Result<CMatrix> {
        self.validate()?;
        let mut w = CMatrix::identity(self.width);
        for (stage, &v) in self.stages.iter().zip(v_map) {
            w = stage.matrix(self.width, v)?.matmul(&w)?;
        }
        Ok(w)
    }
}

/// Product of all stage matrices, last stage leftmost.
pub fn compile_unitary(c: &PhotonicCircuit) -> Result<CMatrix> {
    if c.has_imperfect_mzi() {
        return Err(Error::InvalidArgument(
            "circuit has imperfect interferometers; use apply_visibility_noise".into(),
        ));
    }
    let w = c.transfer(&vec![1.0; c.stages.len()])?;
    if !w.is_unitary(UNITARY_TOL) {
        return Err(Error::InvalidArgument("compiled circuit is not unitary".into()));
    }
    Ok(w)
}

/// Measurement induced by transfer `w` on a state entering at `input_ports`.
pub fn induced_povm_from_transfer(w: &CMatrix, input_ports: &[usize]) -> Result<Povm> {
    let effects = (0..w.rows())
        .map(|a| {
            let row: Vec<C64> = input_ports.iter().map(|&p| w[(a, p)].conj()).collect();
            HermitianView::projector(&row)
        })
        .collect();
    Povm::new(effects)
}

pub fn induced_povm(c: &PhotonicCircuit) -> Result<Povm> {
    induced_povm_from_transfer(&compile_unitary(c)?, &c.input_ports)
}

/// Transfer of a circuit with imperfect interferometers.
#[derive(Debug, Clone)]
pub struct NoisyTransfer {
    pub matrix: CMatrix,
    pub input_ports: Vec<usize>,
}

impl NoisyTransfer {
    /// Renormalised detection probabilities on every output port.
    pub fn probabilities(&self, psi: &Ket) -> Result<Vec<f64>> {
        if psi.dim() != self.input_ports.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}-dimensional state on {} input ports",
                psi.dim(),
                self.input_ports.len()
            )));
        }
        let mut x = vec![cr(0.0); self.matrix.cols()];
        for (&p, &a) in self.input_ports.iter().zip(psi.amplitudes()) {
            x[p] = a;
        }
        let p: Vec<f64> = self.matrix.apply(&x)?.iter().map(|z| z.norm_sqr()).collect();
        let total: f64 = p.iter().sum();
        Ok(p.iter().map(|x| x / total).collect())
    }

    pub fn povm(&self) -> Result<Povm> {
        induced_povm_from_transfer(&self.matrix, &self.input_ports)
    }
}

/// Evaluates the circuit with stage `k` at visibility `v_map[k]`.
pub fn apply_visibility_noise(c: &PhotonicCircuit, v_map: &[f64]) -> Result<NoisyTransfer> {
    if v_map.len() != c.stages.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} visibilities for {} stages",
            v_map.len(),
            c.stages.len()
        )));
    }
    if let Some(v) = v_map.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidArgument(format!("visibility {v} outside [0, 1]")));
    }
    Ok(NoisyTransfer {
        matrix: c.transfer(v_map)?,
        input_ports: c.input_ports.clone(),
    })
}

/// Same visibility on every stage.
pub fn apply_uniform_visibility(c: &PhotonicCircuit, v: f64) -> Result<NoisyTransfer> {
    apply_visibility_noise(c, &vec![v; c.stages.len()])
}

/// Triangular mesh realising a unitary: an input phase layer followed by
/// interferometers on adjacent modes, in application order.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshDecomposition {
    pub dim: usize,
    pub input_phases: Vec<f64>,
    pub mzis: Vec<(usize, MziSetting)>,
}

impl MeshDecomposition {
    /// Rebuilds the unitary with every interferometer at visibility `v`.
    pub fn compose(&self, v: f64) -> Result<CMatrix> {
        let phases: Vec<C64> = self.input_phases.iter().map(|&p| C64::from_polar(1.0, p)).collect();
        let mut m = CMatrix::diag(&phases);
        for &(j, s) in &self.mzis {
            let t = subspace_embed(&mzi_unitary(&s.with_visibility(s.visibility * v))?, &[j, j + 1], self.dim)?;
            m = t.matmul(&m)?;
        }
        Ok(m)
    }
}

/// Decomposes `u` by nulling `u^dagger` row by row from the bottom, each
/// step mixing adjacent columns with one interferometer.
pub fn reck_decompose(u: &CMatrix) -> Result<MeshDecomposition> {
    if !u.is_square() || !u.is_unitary(1e-8) {
        return Err(Error::InvalidArgument("mesh decomposition needs a unitary".into()));
    }
    let n = u.rows();
    let mut a = u.adjoint();
    let mut applied = Vec::new();
    for r in (1..n).rev() {
        for j in 0..r {
            let (x, y) = (a[(r, j)], a[(r, j + 1)]);
            let theta = 2.0 * y.norm().atan2(x.norm());
            let phi = if x.norm() < 1e-300 || y.norm() < 1e-300 {
                0.0
            } else {
                (-y).arg() - x.arg()
            };
            let s = MziSetting::new(theta, phi);
            a = a.matmul(&subspace_embed(&mzi_unitary(&s)?, &[j, j + 1], n)?)?;
            applied.push((j, s));
        }
    }
    // a = u^dagger T_1 ... T_K is diagonal, so u = T_1 ... T_K a^dagger.
    let input_phases = (0..n).map(|k| -a[(k, k)].arg()).collect();
    applied.reverse();
    Ok(MeshDecomposition {
        dim: n,
        input_phases,
        mzis: applied,
    })
}

fn p_matrix() -> CMatrix {
    let w = omega();
    let o = cr(1.0);
    CMatrix::from_rows(&[vec![o, o, o], vec![w * w, w, o], vec![w, w * w, o]]).scale_re(1.0 / 3f64.sqrt())
}

/// The four 3x3 unitaries `P, Q1, Q2, Q3` of the SIC decomposition.
pub fn decomposition_unitaries() -> [CMatrix; 4] {
    let w = omega();
    let w2 = w * w;
    let (z, o) = (cr(0.0), cr(1.0));
    let i3 = c(0.0, 3f64.sqrt());
    let r2 = cr(2f64.sqrt());
    let s = 1.0 / 6f64.sqrt();
    let q1 = CMatrix::from_rows(&[vec![z, i3, -i3], vec![r2, r2, r2], vec![cr(2.0), -o, -o]]).scale_re(s);
    let q2 = CMatrix::from_rows(&[vec![-i3, z, i3], vec![r2, r2, r2], vec![-w2, w2 * 2.0, -w2]]).scale_re(s);
    let q3 = CMatrix::from_rows(&[vec![i3, -i3, z], vec![r2, r2, r2], vec![-w, -w, w * 2.0]]).scale_re(s);
    [p_matrix(), q1, q2, q3]
}

/// The nine-port SIC measurement as cascaded three-mode operations. The
/// qutrit enters on ports 0, 3, 6; output port `a` fires for SIC outcome `a`.
pub fn build_sic_circuit() -> PhotonicCircuit {
    let [p, q1, q2, q3] = decomposition_unitaries();
    let sub = |ports: &[usize], u: CMatrix| StageOp::SubspaceUnitary {
        ports: ports.to_vec(),
        unitary: u,
    };
    let transpose: Vec<usize> = (0..9).map(|k| 3 * (k % 3) + k / 3).collect();
    let relabel: Vec<usize> = (0..9).map(|k| 3 * (k % 3) + 2 - k / 3).collect();
    let stages = vec![
        CircuitStage::new("P_dagger", vec![sub(&[0, 3, 6], p.adjoint())]),
        CircuitStage::new(
            "Q_dagger",
            vec![
                sub(&[0, 1, 2], q1.adjoint()),
                sub(&[3, 4, 5], q2.adjoint()),
                sub(&[6, 7, 8], q3.adjoint()),
            ],
        ),
        CircuitStage::new("swap", vec![StageOp::PortPermutation { perm: transpose }]),
        CircuitStage::new(
            "P",
            vec![sub(&[0, 1, 2], p.clone()), sub(&[3, 4, 5], p.clone()), sub(&[6, 7, 8], p)],
        ),
        CircuitStage::new("relabel", vec![StageOp::PortPermutation { perm: relabel }]),
    ];
    PhotonicCircuit::new(9, vec![0, 3, 6], stages).expect("fixed construction is valid")
}

/// The same chip reprogrammed to measure MUB `y` (1..=4); outcome `a`
/// (zero-based) exits on port `a`.
pub fn build_mub_circuit(y: usize) -> Result<PhotonicCircuit> {
    if !(1..=4).contains(&y) {
        return Err(Error::IndexOutOfRange {
            what: "MUB label",
            index: y,
            max: 4,
        });
    }
    let inputs = [0usize, 3, 6];
    // MUB y >= 2 equals diag(1, t, t) F up to column phases, t = 1, w, w^2.
    let route = |targets: [usize; 3]| {
        let mut perm: Vec<usize> = (0..9).collect();
        let (mut spare, mut next) = (Vec::new(), 3usize);
        for (i, &p) in inputs.iter().enumerate() {
            perm[p] = targets[i];
        }
        for k in 0..9 {
            if !inputs.contains(&k) {
                spare.push(k);
            }
        }
        for k in spare {
            while targets.contains(&next) {
                next += 1;
            }
            perm[k] = next;
            next += 1;
        }
        StageOp::PortPermutation { perm }
    };
    let mut stages = Vec::new();
    if y >= 2 {
        let t = [0.0, 0.0, 2.0, -2.0][y - 1] * std::f64::consts::PI / 3.0;
        stages.push(CircuitStage::new(
            "phase",
            vec![StageOp::PhaseLayer {
                ports: vec![3, 6],
                phases: vec![-t, -t],
            }],
        ));
        stages.push(CircuitStage::new(
            "F_dagger",
            vec![StageOp::SubspaceUnitary {
                ports: inputs.to_vec(),
                unitary: p_fourier().adjoint(),
            }],
        ));
    }
    let targets = if y == 4 { [0, 2, 1] } else { [0, 1, 2] };
    stages.push(CircuitStage::new("route", vec![route(targets)]));
    PhotonicCircuit::new(9, inputs.to_vec(), stages)
}

fn p_fourier() -> CMatrix {
    crate::povm::mub_matrix(1).expect("valid index")
}

/// Prepares `psi` on ports 0..3 from a photon injected at port 0.
pub fn build_prep_circuit(psi: &Ket) -> Result<PhotonicCircuit> {
    if psi.dim() != 3 {
        return Err(Error::DimensionMismatch(format!("{}-dimensional ket", psi.dim())));
    }
    let a = psi.amplitudes();
    let m0 = a[0].norm().min(1.0);
    // The first interferometer sends |a0| to port 0, the second splits the
    // remainder between ports 1 and 2.
    let t1 = 2.0 * m0.asin();
    let t2 = 2.0 * a[1].norm().atan2(a[2].norm());
    let mzis = [
        ([0usize, 1usize], MziSetting::new(t1, 0.0)),
        ([1, 2], MziSetting::new(t2, 0.0)),
    ];
    let mut x = vec![cr(1.0), cr(0.0), cr(0.0)];
    for (ports, s) in &mzis {
        let m = subspace_embed(&mzi_unitary(s)?, ports, 3)?;
        x = m.apply(&x)?;
    }
    let phases = (0..3)
        .map(|k| if x[k].norm() > 1e-14 { a[k].arg() - x[k].arg() } else { 0.0 })
        .collect();
    let stages = vec![
        CircuitStage::new(
            "amplitudes",
            mzis.iter()
                .map(|&(ports, setting)| StageOp::Mzi { ports, setting })
                .collect(),
        ),
        CircuitStage::new(
            "phases",
            vec![StageOp::PhaseLayer {
                ports: vec![0, 1, 2],
                phases,
            }],
        ),
    ];
    PhotonicCircuit::new(3, vec![0], stages)
}

/// Multinomial sample of `n_total` events from `probabilities`.
pub fn sample_counts(probabilities: &[f64], n_total: u64, seed: u64) -> Result<Vec<u64>> {
    sample_counts_with(probabilities, n_total, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn sample_counts_with<R: rand::Rng + ?Sized>(
    probabilities: &[f64],
    n_total: u64,
    rng: &mut R,
) -> Result<Vec<u64>> {
    if let Some(p) = probabilities.iter().find(|&&p| p < -1e-9 || !p.is_finite()) {
        return Err(Error::InvalidArgument(format!("invalid probability {p}")));
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("probabilities sum to {total}")));
    }
    let mut counts = Vec::with_capacity(probabilities.len());
    let (mut left, mut mass) = (n_total, 1.0f64);
    for (k, &p) in probabilities.iter().enumerate() {
        let p = p.max(0.0);
        let n = if k + 1 == probabilities.len() || left == 0 {
            left
        } else if p >= mass {
            left
        } else {
            let q = (p / mass).clamp(0.0, 1.0);
            Binomial::new(left, q)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?
                .sample(rng)
        };
        counts.push(n);
        left -= n;
        mass -= p;
    }
    Ok(counts)
}

/// Multinomial sample whose total is itself Poisson with mean `mean_total`.
pub fn sample_counts_poisson(probabilities: &[f64], mean_total: f64, seed: u64) -> Result<Vec<u64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = if mean_total > 0.0 {
        Poisson::new(mean_total)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .sample(&mut rng) as u64
    } else {
        0
    };
    sample_counts_with(probabilities, n, &mut rng)
}
