//! Maximum-likelihood reconstruction of detectors (from known probe states)
//! and of states (from known measurement bases).

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certify::DistrustVector;
use crate::error::{Error, Result};
use crate::linalg::{c, inv_sqrt_psd, psd_project, CMatrix, HermitianView};
use crate::photonic::sample_counts_with;
use crate::povm::{self, DensityMatrix, Ket, Povm};
use crate::sdp::hermitian_basis;

/// Probe or measurement frames with a worse condition number are rejected.
pub const MAX_CONDITION: f64 = 1e8;

/// Probabilities below this are replaced by it inside the iteration.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Halvings of the relaxation parameter before a step is declared stationary.
const MAX_DILUTIONS: usize = 60;

/// Doublings of the relaxation parameter tried after a successful plain step.
const MAX_OVERRELAXATION: usize = 10;

/// Weight of the maximally mixed operator blended into the linear-inversion
/// start, so that no eigenvalue starts at exactly zero.
const START_HEDGE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    pub max_iterations: usize,
    pub rel_tol: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            rel_tol: 1e-10,
        }
    }
}

/// Condition number of the frame operator `sum_k vec(A_k) vec(A_k)^T` over
/// the real coordinates of Hermitian matrices. Infinite when the operators
/// do not span.
pub fn frame_condition(ops: &[&HermitianView]) -> f64 {
    let Some(first) = ops.first() else {
        return f64::INFINITY;
    };
    let basis = hermitian_basis(first.dim(), true);
    let n = basis.len();
    let coords: Vec<Vec<f64>> = ops
        .iter()
        .map(|a| basis.iter().map(|b| a.inner(&HermitianView::symmetrized(b))).collect())
        .collect();
    let frame = DMatrix::<f64>::from_fn(n, n, |i, j| coords.iter().map(|v| v[i] * v[j]).sum());
    let ev = SymmetricEigen::new(frame).eigenvalues;
    let (lo, hi) = ev.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &l| (lo.min(l), hi.max(l)));
    if lo <= hi * 1e-300 || lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

fn check_condition(cond: f64) -> Result<()> {
    if cond > MAX_CONDITION || !cond.is_finite() {
        Err(Error::SingularProbes(cond))
    } else {
        Ok(())
    }
}

/// Weighted least-squares Hermitian `X` with `tr(A_k X) = y_k`.
fn linear_inversion(ops: &[&HermitianView], weights: &[f64], y: &[f64]) -> Result<HermitianView> {
    let d = ops[0].dim();
    let basis = hermitian_basis(d, true);
    let n = basis.len();
    let coords: Vec<Vec<f64>> = ops
        .iter()
        .map(|a| basis.iter().map(|b| a.inner(&HermitianView::symmetrized(b))).collect())
        .collect();
    let frame = DMatrix::<f64>::from_fn(n, n, |i, j| {
        coords.iter().zip(weights).map(|(v, w)| w * v[i] * v[j]).sum()
    });
    let rhs = nalgebra::DVector::<f64>::from_fn(n, |i, _| {
        coords.iter().zip(weights).zip(y).map(|((v, w), y)| w * y * v[i]).sum()
    });
    let x = frame
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularProbes(f64::INFINITY))?;
    let mut out = CMatrix::zeros(d, d);
    for (b, xi) in basis.iter().zip(x.iter()) {
        out += &b.scale_re(*xi);
    }
    Ok(HermitianView::symmetrized(&out))
}

/// Known states sent into an unknown detector.
#[derive(Debug, Clone)]
pub struct ProbeSet {
    states: Vec<DensityMatrix>,
    condition: f64,
}

impl ProbeSet {
    pub fn new(states: Vec<DensityMatrix>) -> Result<Self> {
        let d = states
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty probe set".into()))?
            .dim();
        if states.iter().any(|s| s.dim() != d) {
            return Err(Error::DimensionMismatch("probe states of different dimension".into()));
        }
        let condition = frame_condition(&states.iter().map(DensityMatrix::matrix).collect::<Vec<_>>());
        check_condition(condition)?;
        Ok(Self { states, condition })
    }

    /// The nine SIC states.
    pub fn sic() -> Self {
        Self::new(povm::sic_states().iter().map(Ket::density).collect()).expect("SIC states span")
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn condition_number(&self) -> f64 {
        self.condition
    }
}

/// Known measurements applied to an unknown state, one POVM per setting.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    labels: Vec<String>,
    settings: Vec<Povm>,
    condition: f64,
}

impl MeasurementSet {
    pub fn new(labels: Vec<String>, settings: Vec<Povm>) -> Result<Self> {
        if settings.is_empty() || labels.len() != settings.len() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} settings",
                labels.len(),
                settings.len()
            )));
        }
        let d = settings[0].dim();
        if settings.iter().any(|p| p.dim() != d) {
            return Err(Error::DimensionMismatch("settings of different dimension".into()));
        }
        let ops: Vec<&HermitianView> = settings.iter().flat_map(|p| p.effects()).collect();
        let condition = frame_condition(&ops);
        check_condition(condition)?;
        Ok(Self {
            labels,
            settings,
            condition,
        })
    }

    /// Computational basis plus, for every pair `j < k`, the bases
    /// `{(|j> + |k>)/sqrt2, (|j> - |k>)/sqrt2, |l>}` and the same with `i|k>`.
    pub fn qutrit_default() -> Self {
        let mut labels = vec!["Z".to_string()];
        let mut settings = vec![Povm::from_basis(&(0..3).map(|k| Ket::basis(3, k)).collect::<Vec<_>>())
            .expect("computational basis")];
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for (j, k, l) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
            for (name, phase) in [("X", c(1.0, 0.0)), ("Y", c(0.0, 1.0))] {
                let ket = |s: f64| {
                    let mut a = vec![c(0.0, 0.0); 3];
                    a[j] = c(r, 0.0);
                    a[k] = phase * (s * r);
                    Ket::new(a).expect("normalised")
                };
                settings.push(Povm::from_basis(&[ket(1.0), ket(-1.0), Ket::basis(3, l)]).expect("orthonormal"));
                labels.push(format!("{name}{j}{k}"));
            }
        }
        Self::new(labels, settings).expect("complete set")
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn settings(&self) -> &[Povm] {
        &self.settings
    }

    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    /// Exact outcome probabilities of `rho` for every setting.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Vec<Vec<f64>> {
        self.settings.iter().map(|p| p.probabilities(rho)).collect()
    }
}

/// Raw counts, one row per setting (probe state or measurement basis).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    pub counts: Vec<Vec<u64>>,
}

impl CountTable {
    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::EmptyCounts("no settings".into()));
        }
        Ok(Self { counts })
    }

    pub fn settings(&self) -> usize {
        self.counts.len()
    }

    pub fn totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn frequencies(&self) -> Result<Frequencies> {
        let totals = self.totals();
        if let Some(s) = totals.iter().position(|&t| t == 0) {
            return Err(Error::EmptyCounts(format!("setting {s} has no counts")));
        }
        let rows = self
            .counts
            .iter()
            .zip(&totals)
            .map(|(r, &t)| r.iter().map(|&n| n as f64 / t as f64).collect())
            .collect();
        Frequencies::new(rows, totals.iter().map(|&t| t as f64).collect())
    }

    /// Multinomial resample of every row at its observed frequencies.
    pub fn resample(&self, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let counts = self
            .counts
            .iter()
            .map(|r| {
                let t: u64 = r.iter().sum();
                if t == 0 {
                    return Ok(vec![0; r.len()]);
                }
                let p: Vec<f64> = r.iter().map(|&n| n as f64 / t as f64).collect();
                sample_counts_with(&p, t, &mut rng)
            })
            .collect::<Result<_>>()?;
        Ok(Self { counts })
    }
}

/// Relative frequencies per setting with the number of trials behind each row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frequencies {
    pub rows: Vec<Vec<f64>>,
    pub totals: Vec<f64>,
}

impl Frequencies {
    pub fn new(rows: Vec<Vec<f64>>, totals: Vec<f64>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyCounts("no settings".into()));
        }
        if totals.len() != rows.len() {
            return Err(Error::DimensionMismatch(format!("{} totals for {} rows", totals.len(), rows.len())));
        }
        if totals.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::EmptyCounts("non-positive total".into()));
        }
        if rows.iter().flatten().any(|&f| !(f >= 0.0) || !f.is_finite()) {
            return Err(Error::InvalidArgument("frequencies must be finite and nonnegative".into()));
        }
        Ok(Self { rows, totals })
    }

    /// Exact probabilities treated as data with equal weight per setting.
    /// Rounding noise below `-PROBABILITY_FLOOR` is rejected, above it clipped.
    pub fn exact(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(|p| if p < 0.0 && p >= -PROBABILITY_FLOOR { 0.0 } else { p }).collect())
            .collect();
        Self::new(rows, vec![1.0; n])
    }

    fn weights(&self) -> Vec<f64> {
        let mean = self.totals.iter().sum::<f64>() / self.totals.len() as f64;
        self.totals.iter().map(|t| t / mean).collect()
    }
}

/// Iteration history shared by both reconstructions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MleTrace {
    /// Weighted log-likelihood after each accepted step, starting point first.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Steps that needed a diluted update to stay monotone.
    pub diluted_steps: usize,
}

#[derive(Debug, Clone)]
pub struct DetectorEstimate {
    pub povm: Povm,
    pub trace: MleTrace,
    pub condition: f64,
}

#[derive(Debug, Clone)]
pub struct StateEstimate {
    pub state: DensityMatrix,
    pub trace: MleTrace,
    pub condition: f64,
}

fn log_likelihood(freqs: &Frequencies, w: &[f64], probs: &[Vec<f64>]) -> f64 {
    freqs
        .rows
        .iter()
        .zip(probs)
        .zip(w)
        .map(|((f, p), w)| {
            w * f
                .iter()
                .zip(p)
                .filter(|(&f, _)| f > 0.0)
                .map(|(f, p)| f * p.max(PROBABILITY_FLOOR).ln())
                .sum::<f64>()
        })
        .sum()
}

/// `1 + t (R - 1)`: `t = 1` is the plain update, `t < 1` a diluted one and
/// `t > 1` an over-relaxed one. `R` is normalised so that it equals the
/// identity at a fixed point.
fn relax(r: &CMatrix, t: f64) -> CMatrix {
    let id = CMatrix::identity(r.rows());
    &id + &(r - &id).scale_re(t)
}

fn congruence(r: &CMatrix, a: &CMatrix) -> CMatrix {
    &(r * a) * r
}

/// Monotone fixed-point driver: `step(x, t)` returns the update of `x` with
/// relaxation `t` and its log-likelihood. The plain step is tried first;
/// on ascent, larger `t` is tried while the likelihood keeps improving, and
/// otherwise `t` is halved until the likelihood no longer drops.
fn run_monotone<S: Clone>(
    start: S,
    l0: f64,
    opts: &MleOptions,
    mut step: impl FnMut(&S, f64) -> Result<(S, f64)>,
) -> Result<(S, MleTrace)> {
    let mut cur = start;
    let mut l = l0;
    let mut trace = MleTrace {
        log_likelihood: vec![l0],
        iterations: 0,
        converged: false,
        diluted_steps: 0,
    };
    for _ in 0..opts.max_iterations {
        let mut accepted = None;
        let plain = step(&cur, 1.0)?;
        if plain.1 >= l {
            let mut best = plain;
            let mut t = 1.0;
            for _ in 0..MAX_OVERRELAXATION {
                t *= 2.0;
                let cand = step(&cur, t)?;
                if !(cand.1 > best.1) {
                    break;
                }
                best = cand;
            }
            accepted = Some(best);
        } else {
            trace.diluted_steps += 1;
            let mut t = 0.5;
            for _ in 0..MAX_DILUTIONS {
                let cand = step(&cur, t)?;
                if cand.1 >= l {
                    accepted = Some(cand);
                    break;
                }
                t *= 0.5;
            }
        }
        let Some((next, ln)) = accepted else {
            // No ascent direction at working precision.
            trace.converged = true;
            break;
        };
        trace.iterations += 1;
        trace.log_likelihood.push(ln);
        let change = (ln - l).abs() / l.abs().max(f64::MIN_POSITIVE);
        cur = next;
        l = ln;
        if change < opts.rel_tol {
            trace.converged = true;
            break;
        }
    }
    Ok((cur, trace))
}

/// Linear inversion clipped to PSD effects, made complete by congruence and
/// hedged towards `1/L`.
fn detector_start(freqs: &Frequencies, w: &[f64], probes: &ProbeSet, outcomes: usize) -> Result<Vec<CMatrix>> {
    let d = probes.states()[0].dim();
    let ops: Vec<&HermitianView> = probes.states().iter().map(DensityMatrix::matrix).collect();
    let flat = || vec![CMatrix::identity(d).scale_re(1.0 / outcomes as f64); outcomes];
    let mut effects = Vec::with_capacity(outcomes);
    for l in 0..outcomes {
        let y: Vec<f64> = freqs.rows.iter().map(|r| r[l]).collect();
        effects.push(psd_project(&linear_inversion(&ops, w, &y)?)?.into_matrix());
    }
    let mut sum = CMatrix::zeros(d, d);
    for e in &effects {
        sum += e;
    }
    let sum = HermitianView::symmetrized(&sum);
    if sum.min_eigenvalue()? <= 1e-12 * sum.max_eigenvalue()?.max(1e-300) {
        return Ok(flat());
    }
    let li = inv_sqrt_psd(&sum, 0.0)?;
    Ok(effects
        .iter()
        .zip(flat())
        .map(|(e, f)| &congruence(li.matrix(), e).scale_re(1.0 - START_HEDGE) + &f.scale_re(START_HEDGE))
        .collect())
}

fn state_start(freqs: &Frequencies, w: &[f64], set: &MeasurementSet) -> Result<CMatrix> {
    let d = set.settings()[0].dim();
    let mut ops = Vec::new();
    let mut weights = Vec::new();
    let mut y = Vec::new();
    for (s, p) in set.settings().iter().enumerate() {
        for (k, e) in p.effects().iter().enumerate() {
            ops.push(e);
            weights.push(w[s]);
            y.push(freqs.rows[s][k]);
        }
    }
    let mixed = CMatrix::identity(d).scale_re(1.0 / d as f64);
    let rho = psd_project(&linear_inversion(&ops, &weights, &y)?)?;
    let tr = rho.trace();
    if !(tr > 1e-12) {
        return Ok(mixed);
    }
    Ok(&rho.matrix().scale_re((1.0 - START_HEDGE) / tr) + &mixed.scale_re(START_HEDGE))
}

/// Detector reconstruction from probe-state frequencies `rows[m][l]`.
pub fn mle_detector(freqs: &Frequencies, probes: &ProbeSet, opts: &MleOptions) -> Result<DetectorEstimate> {
    if freqs.rows.len() != probes.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} count rows for {} probes",
            freqs.rows.len(),
            probes.len()
        )));
    }
    let outcomes = freqs.rows[0].len();
    if outcomes == 0 || freqs.rows.iter().any(|r| r.len() != outcomes) {
        return Err(Error::DimensionMismatch("ragged detector count table".into()));
    }
    let d = probes.states()[0].dim();
    let w = freqs.weights();
    let rhos: Vec<&CMatrix> = probes.states().iter().map(|s| s.matrix().matrix()).collect();
    let probs = |effects: &[CMatrix]| -> Vec<Vec<f64>> {
        rhos.iter()
            .map(|rho| effects.iter().map(|e| rho.frob_inner(e).expect("dims").re).collect())
            .collect()
    };
    let start = detector_start(freqs, &w, probes, outcomes)?;
    let l0 = log_likelihood(freqs, &w, &probs(&start));
    let total_w: f64 = w.iter().sum();

    let step = |cur: &Vec<CMatrix>, t: f64| -> Result<(Vec<CMatrix>, f64)> {
        let p = probs(cur);
        let rs: Vec<CMatrix> = (0..outcomes)
            .map(|l| {
                let mut r = CMatrix::zeros(d, d);
                for m in 0..rhos.len() {
                    let f = freqs.rows[m][l];
                    if f > 0.0 {
                        r += &rhos[m].scale_re(w[m] * f / p[m][l].max(PROBABILITY_FLOOR));
                    }
                }
                relax(&r.scale_re(d as f64 / total_w), t)
            })
            .collect();
        let mut lam2 = CMatrix::zeros(d, d);
        let raw: Vec<CMatrix> = rs.iter().zip(cur).map(|(r, e)| congruence(r, e)).collect();
        for m in &raw {
            lam2 += m;
        }
        let li = inv_sqrt_psd(&HermitianView::symmetrized(&lam2), 1e-300)?;
        let next: Vec<CMatrix> = raw
            .iter()
            .map(|m| HermitianView::symmetrized(&congruence(li.matrix(), m)).into_matrix())
            .collect();
        let ln = log_likelihood(freqs, &w, &probs(&next));
        Ok((next, ln))
    };
    let (effects, trace) = run_monotone(start, l0, opts, step)?;
    let povm = Povm::new(effects.iter().map(HermitianView::symmetrized).collect())?;
    Ok(DetectorEstimate {
        povm,
        trace,
        condition: probes.condition_number(),
    })
}

/// State reconstruction from frequencies `rows[s][k]` of the settings in `set`.
pub fn mle_state(freqs: &Frequencies, set: &MeasurementSet, opts: &MleOptions) -> Result<StateEstimate> {
    if freqs.rows.len() != set.settings().len() {
        return Err(Error::DimensionMismatch(format!(
            "{} count rows for {} settings",
            freqs.rows.len(),
            set.settings().len()
        )));
    }
    for (r, p) in freqs.rows.iter().zip(set.settings()) {
        if r.len() != p.outcomes() {
            return Err(Error::DimensionMismatch(format!(
                "{} outcomes recorded for a {}-outcome setting",
                r.len(),
                p.outcomes()
            )));
        }
    }
    let d = set.settings()[0].dim();
    let w = freqs.weights();
    let total_w: f64 = w.iter().sum();
    let probs = |rho: &CMatrix| -> Vec<Vec<f64>> {
        set.settings()
            .iter()
            .map(|p| p.effects().iter().map(|e| e.matrix().frob_inner(rho).expect("dims").re).collect())
            .collect()
    };
    let start = state_start(freqs, &w, set)?;
    let l0 = log_likelihood(freqs, &w, &probs(&start));

    let step = |rho: &CMatrix, t: f64| -> Result<(CMatrix, f64)> {
        let p = probs(rho);
        let mut r = CMatrix::zeros(d, d);
        for (s, setting) in set.settings().iter().enumerate() {
            for (k, e) in setting.effects().iter().enumerate() {
                let f = freqs.rows[s][k];
                if f > 0.0 {
                    r += &e.matrix().scale_re(w[s] * f / p[s][k].max(PROBABILITY_FLOOR));
                }
            }
        }
        let r = relax(&r.scale_re(1.0 / total_w), t);
        let next = congruence(&r, rho);
        let tr = next.trace().re;
        let next = HermitianView::symmetrized(&next.scale_re(1.0 / tr)).into_matrix();
        let ln = log_likelihood(freqs, &w, &probs(&next));
        Ok((next, ln))
    };
    let (rho, trace) = run_monotone(start, l0, opts, step)?;
    let state = DensityMatrix::from_unnormalized(HermitianView::symmetrized(&rho))?;
    Ok(StateEstimate {
        state,
        trace,
        condition: set.condition_number(),
    })
}

/// `<psi| rho |psi>`.
pub fn state_fidelity(rho: &DensityMatrix, target: &Ket) -> Result<f64> {
    if rho.dim() != target.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state of dim {} against target of dim {}",
            rho.dim(),
            target.dim()
        )));
    }
    Ok(rho.matrix().expectation(target.amplitudes()).clamp(0.0, 1.0))
}

/// Preparation infidelities `1 - F(rho_a, psi_a)` from per-state tomography data.
pub fn distrust_estimate(
    tables: &[Frequencies],
    targets: &[Ket],
    set: &MeasurementSet,
    opts: &MleOptions,
) -> Result<DistrustVector> {
    if tables.len() != targets.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} tables for {} target states",
            tables.len(),
            targets.len()
        )));
    }
    let eps = tables
        .iter()
        .zip(targets)
        .map(|(f, psi)| {
            let est = mle_state(f, set, opts)?;
            Ok((1.0 - state_fidelity(&est.state, psi)?).clamp(0.0, 1.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    DistrustVector::new(eps)
}
