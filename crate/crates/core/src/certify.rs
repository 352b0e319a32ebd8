//! Certification programs built on [`crate::sdp`]: simulability by
//! few-outcome measurements, state discrimination with exact or distrusted
//! preparations, and measurement-device-independent randomness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, eig_hermitian, CMatrix, HermitianView, C64};
use crate::povm::{self, DensityMatrix, Ket, Povm};
use crate::sdp::{self, Field, LinearForm, SdpProblem, SdpSolution, SdpStatus, SolverOptions};

/// Per-row normalisation tolerance for observed probability tables.
pub const ROW_SUM_TOL: f64 = 1e-6;

/// All `n`-element subsets of `0..m` in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetFamily {
    pub m: usize,
    pub n: usize,
    pub tuples: Vec<Vec<usize>>,
}

impl SubsetFamily {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if n == 0 || n > m {
            return Err(Error::InvalidArgument(format!("subset size {n} outside 1..={m}")));
        }
        let mut tuples = Vec::new();
        let mut cur: Vec<usize> = (0..n).collect();
        loop {
            tuples.push(cur.clone());
            let Some(i) = (0..n).rev().find(|&i| cur[i] < m - n + i) else {
                break;
            };
            cur[i] += 1;
            for j in (i + 1)..n {
                cur[j] = cur[j - 1] + 1;
            }
        }
        Ok(Self { m, n, tuples })
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

/// Fidelity slack per preparation: `<psi_a|rho_a|psi_a> >= 1 - eps_a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistrustVector {
    pub eps: Vec<f64>,
}

impl DistrustVector {
    pub fn new(eps: Vec<f64>) -> Result<Self> {
        if let Some(e) = eps.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::InvalidArgument(format!("distrust {e} outside [0, 1]")));
        }
        Ok(Self { eps })
    }

    pub fn zero(m: usize) -> Self {
        Self { eps: vec![0.0; m] }
    }

    /// Values measured on the nine chip ports.
    pub fn measured() -> Self {
        Self {
            eps: vec![0.0084, 0.002, 0.011, 0.008, 0.0061, 0.0115, 0.0058, 0.0089, 0.004],
        }
    }
}

/// Box radii `r[x][a]` around observed frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceRegion {
    pub radii: Vec<Vec<f64>>,
}

impl ToleranceRegion {
    pub fn new(radii: Vec<Vec<f64>>) -> Result<Self> {
        if radii.iter().flatten().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(Error::InvalidArgument("tolerance radii must be finite and nonnegative".into()));
        }
        Ok(Self { radii })
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        Self {
            radii: vec![vec![0.0; cols]; rows],
        }
    }

    /// `r = fraction * p(a|x)`.
    pub fn relative(observed: &[Vec<f64>], fraction: f64) -> Result<Self> {
        Self::new(
            observed
                .iter()
                .map(|row| row.iter().map(|p| fraction * p).collect())
                .collect(),
        )
    }

    /// `r = k sigma` with `sigma = sqrt(n_xa)/N_x` the Poisson spread of the
    /// relative frequency; `k_diag` applies when `a == x`.
    pub fn poissonian(counts: &[Vec<u64>], k_off: f64, k_diag: f64) -> Result<Self> {
        let mut radii = Vec::with_capacity(counts.len());
        for (x, row) in counts.iter().enumerate() {
            let total: u64 = row.iter().sum();
            if total == 0 {
                return Err(Error::EmptyCounts(format!("setting {}", x + 1)));
            }
            radii.push(
                row.iter()
                    .enumerate()
                    .map(|(a, &n)| {
                        let k = if a == x { k_diag } else { k_off };
                        k * (n as f64).sqrt() / total as f64
                    })
                    .collect(),
            );
        }
        Self::new(radii)
    }
}

/// Solver diagnostics attached to reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveStats {
    pub status: SdpStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub duality_gap: f64,
}

impl From<&SdpSolution> for SolveStats {
    fn from(s: &SdpSolution) -> Self {
        Self {
            status: s.status,
            iterations: s.iterations,
            primal_residual: s.primal_residual,
            duality_gap: s.duality_gap,
        }
    }
}

fn require_optimal(sol: SdpSolution, context: impl Into<String>) -> Result<SdpSolution> {
    match sol.status {
        SdpStatus::Optimal => Ok(sol),
        s => Err(Error::solver(context, format!("{s:?} after {} iterations", sol.iterations))),
    }
}

fn identity_over(d: usize, k: f64) -> CMatrix {
    CMatrix::identity(d).scale_re(k)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VisibilityReport {
    pub n: usize,
    pub value: f64,
    pub subsets: usize,
    pub solver: SolveStats,
    /// Max entry of `sum_T M_{a|T} - E_a^(v)` over all outcomes.
    pub audit_error: f64,
    /// The simulating weights `p(T)`, in subset order.
    pub weights: Vec<f64>,
}

/// Largest `v` such that the depolarised measurement is a classical mixture
/// of measurements with at most `n` nonzero outcomes.
pub fn critical_visibility(p: &Povm, n: usize) -> Result<f64> {
    critical_visibility_report(p, n, &SolverOptions::default()).map(|r| r.value)
}

/// Simulation program behind [`critical_visibility`], with the indices
/// needed to read its solution.
struct VisibilityProgram {
    prob: SdpProblem,
    v: usize,
    weights: Vec<usize>,
    /// `(subset, block)` pairs contributing to each outcome.
    blocks: Vec<Vec<(usize, usize)>>,
    subsets: usize,
}

fn visibility_program(p: &Povm, n: usize) -> Result<VisibilityProgram> {
    let m = p.outcomes();
    let d = p.dim();
    if n < 2 || n > m {
        return Err(Error::InvalidArgument(format!("outcome count {n} outside 2..={m}")));
    }
    let family = SubsetFamily::new(m, n)?;
    let mut prob = SdpProblem::new();
    let v = prob.add_scalar("v");
    let mut blocks: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m];
    let mut weights = Vec::with_capacity(family.len());
    for (t, tuple) in family.tuples.iter().enumerate() {
        let pt = prob.add_scalar(format!("p{t}"));
        weights.push(pt);
        let mut ids = Vec::with_capacity(n);
        for &a in tuple {
            let b = prob.add_block(format!("M{a}|{t}"), d, Field::Complex);
            blocks[a].push((t, b));
            ids.push((b, 1.0));
        }
        prob.add_matrix_equality(&ids, &[(pt, identity_over(d, -1.0))], &CMatrix::zeros(d, d))?;
    }
    for a in 0..m {
        let e = p.effect(a);
        let mixed = identity_over(d, e.trace() / d as f64);
        let ids: Vec<(usize, f64)> = blocks[a].iter().map(|&(_, b)| (b, 1.0)).collect();
        let coeff = &mixed - e.matrix();
        prob.add_matrix_equality(&ids, &[(v, coeff)], &mixed)?;
    }
    prob.add_leq(LinearForm::new().scalar(v, 1.0), 1.0);
    prob.set_objective(LinearForm::new().scalar(v, 1.0));
    Ok(VisibilityProgram {
        prob,
        v,
        weights,
        blocks,
        subsets: family.len(),
    })
}

/// The simulation SDP for `n` outcomes, as solved by [`critical_visibility`].
pub fn visibility_problem(p: &Povm, n: usize) -> Result<SdpProblem> {
    visibility_program(p, n).map(|v| v.prob)
}

pub fn critical_visibility_report(p: &Povm, n: usize, opts: &SolverOptions) -> Result<VisibilityReport> {
    let m = p.outcomes();
    let d = p.dim();
    let VisibilityProgram {
        prob,
        v,
        weights,
        blocks,
        subsets,
    } = visibility_program(p, n)?;
    let sol = require_optimal(sdp::solve_with(&prob, opts)?, format!("visibility, n = {n}"))?;
    let value = sol.scalar_values[v];
    let target = povm::depolarize(p, value.clamp(0.0, 1.0))?;
    let mut audit_error: f64 = 0.0;
    for a in 0..m {
        let mut sum = CMatrix::zeros(d, d);
        for &(_, b) in &blocks[a] {
            sum += &sol.block_values[b];
        }
        audit_error = audit_error.max(sum.max_abs_diff(target.effect(a).matrix()));
    }
    Ok(VisibilityReport {
        n,
        value,
        subsets,
        solver: SolveStats::from(&sol),
        audit_error,
        weights: weights.iter().map(|&s| sol.scalar_values[s]).collect(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubsetValue {
    pub subset: Vec<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscriminationReport {
    pub n: usize,
    pub value: f64,
    pub best_subset: Vec<usize>,
    pub per_subset: Vec<SubsetValue>,
}

fn discrimination_program(states: &[DensityMatrix], subset: &[usize]) -> Result<(SdpProblem, Vec<usize>)> {
    let m = states.len();
    let d = states
        .first()
        .ok_or_else(|| Error::InvalidArgument("no states".into()))?
        .dim();
    if let Some(&a) = subset.iter().find(|&&a| a >= m) {
        return Err(Error::IndexOutOfRange {
            what: "subset outcome",
            index: a,
            max: m,
        });
    }
    let mut prob = SdpProblem::new();
    let ids: Vec<usize> = subset
        .iter()
        .map(|a| prob.add_block(format!("E{a}"), d, Field::Complex))
        .collect();
    let unit: Vec<(usize, f64)> = ids.iter().map(|&b| (b, 1.0)).collect();
    prob.add_matrix_equality(&unit, &[], &CMatrix::identity(d))?;
    let mut obj = LinearForm::new();
    for (&a, &b) in subset.iter().zip(&ids) {
        obj = obj.block(b, states[a].matrix().matrix().scale_re(1.0 / m as f64));
    }
    prob.set_objective(obj);
    Ok((prob, ids))
}

/// The discrimination SDP restricted to the outcomes in `subset` (zero-based).
pub fn discrimination_problem(states: &[DensityMatrix], subset: &[usize]) -> Result<SdpProblem> {
    discrimination_program(states, subset).map(|p| p.0)
}

/// Best measurement supported on `subset` for equiprobable states:
/// returns the success probability and the effects (zero outside the subset).
pub fn discrimination_for_subset(
    states: &[DensityMatrix],
    subset: &[usize],
    opts: &SolverOptions,
) -> Result<(f64, Vec<HermitianView>)> {
    let m = states.len();
    let d = states
        .first()
        .ok_or_else(|| Error::InvalidArgument("no states".into()))?
        .dim();
    let (prob, ids) = discrimination_program(states, subset)?;
    let sol = require_optimal(sdp::solve_with(&prob, opts)?, format!("subset {subset:?}"))?;
    let mut effects = vec![HermitianView::symmetrized(&CMatrix::zeros(d, d)); m];
    for (&a, &b) in subset.iter().zip(&ids) {
        effects[a] = HermitianView::symmetrized(&sol.block_values[b]);
    }
    Ok((sol.objective_value, effects))
}

fn check_states(states: &[Ket]) -> Result<()> {
    let d = states
        .first()
        .ok_or_else(|| Error::InvalidArgument("no states".into()))?
        .dim();
    if states.iter().any(|k| k.dim() != d) {
        return Err(Error::DimensionMismatch("states of different dimension".into()));
    }
    Ok(())
}

/// Largest success probability for discriminating equiprobable `states`
/// with a measurement having at most `n` nonzero outcomes.
pub fn discrimination_bound(states: &[Ket], n: usize) -> Result<f64> {
    discrimination_report(states, n, &SolverOptions::default()).map(|r| r.value)
}

pub fn discrimination_report(states: &[Ket], n: usize, opts: &SolverOptions) -> Result<DiscriminationReport> {
    check_states(states)?;
    let m = states.len();
    if n < 2 || n > m {
        return Err(Error::InvalidArgument(format!("outcome count {n} outside 2..={m}")));
    }
    let family = SubsetFamily::new(m, n)?;
    let rhos: Vec<DensityMatrix> = states.iter().map(Ket::density).collect();
    let per_subset = family
        .tuples
        .par_iter()
        .map(|t| {
            discrimination_for_subset(&rhos, t, opts).map(|(value, _)| SubsetValue {
                subset: t.clone(),
                value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(best_of(n, per_subset))
}

fn best_of(n: usize, per_subset: Vec<SubsetValue>) -> DiscriminationReport {
    let best = per_subset
        .iter()
        .fold(&per_subset[0], |b, s| if s.value > b.value { s } else { b });
    DiscriminationReport {
        n,
        value: best.value,
        best_subset: best.subset.clone(),
        per_subset: per_subset.clone(),
    }
}

/// Settings of the alternating search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeesawOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_alternations: usize,
    pub improvement_tol: f64,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        Self {
            restarts: 50,
            seed: 0,
            max_alternations: 200,
            improvement_tol: 1e-7,
        }
    }
}

/// Best states within the fidelity constraints for fixed effects.
fn best_states(
    targets: &[Ket],
    eps: &[f64],
    effects: &[HermitianView],
    subset: &[usize],
    opts: &SolverOptions,
) -> Result<Vec<DensityMatrix>> {
    let m = targets.len();
    let d = targets[0].dim();
    let mut out: Vec<DensityMatrix> = targets.iter().map(Ket::density).collect();
    let mut prob = SdpProblem::new();
    let mut ids = Vec::new();
    let mut obj = LinearForm::new();
    for &a in subset {
        if eps[a] <= 0.0 {
            continue;
        }
        let b = prob.add_block(format!("rho{a}"), d, Field::Complex);
        ids.push((a, b));
        prob.add_constraint(LinearForm::new().block(b, CMatrix::identity(d)), 1.0);
        prob.add_geq(
            LinearForm::new().block(b, targets[a].projector().into_matrix()),
            1.0 - eps[a],
        );
        obj = obj.block(b, effects[a].matrix().scale_re(1.0 / m as f64));
    }
    if ids.is_empty() {
        return Ok(out);
    }
    prob.set_objective(obj);
    let sol = require_optimal(sdp::solve_with(&prob, opts)?, format!("states for subset {subset:?}"))?;
    for (a, b) in ids {
        let h = HermitianView::symmetrized(&sol.block_values[b]);
        out[a] = DensityMatrix::from_unnormalized(crate::linalg::psd_project(&h)?)?;
    }
    Ok(out)
}

fn perturbed_ket(target: &Ket, eps: f64, rng: &mut ChaCha8Rng) -> Result<Ket> {
    if eps <= 0.0 {
        return Ok(target.clone());
    }
    let d = target.dim();
    let normal = rand_distr::StandardNormal;
    let g: Vec<C64> = (0..d)
        .map(|_| c(rng.sample::<f64, _>(normal), rng.sample::<f64, _>(normal)))
        .collect();
    // Component of g orthogonal to the target.
    let ov = crate::linalg::inner(target.amplitudes(), &g);
    let raw: Vec<C64> = g.iter().zip(target.amplitudes()).map(|(gi, ti)| gi - ti * ov).collect();
    let chi = Ket::new(raw)?;
    let delta = eps * rng.random::<f64>().sqrt();
    let amps = target
        .amplitudes()
        .iter()
        .zip(chi.amplitudes())
        .map(|(t, x)| t * (1.0 - delta).sqrt() + x * delta.sqrt())
        .collect();
    Ket::new(amps)
}

fn seesaw_run(
    targets: &[Ket],
    eps: &[f64],
    subset: &[usize],
    start: Vec<DensityMatrix>,
    s: &SeesawOptions,
    opts: &SolverOptions,
) -> Result<f64> {
    let mut states = start;
    let mut best = f64::NEG_INFINITY;
    for _ in 0..s.max_alternations {
        let (_, effects) = discrimination_for_subset(&states, subset, opts)?;
        states = best_states(targets, eps, &effects, subset, opts)?;
        let value: f64 = subset
            .iter()
            .map(|&a| states[a].expectation(&effects[a]))
            .sum::<f64>()
            / targets.len() as f64;
        let improved = value - best;
        best = best.max(value);
        if improved < s.improvement_tol {
            break;
        }
    }
    Ok(best)
}

/// Seesaw lower bound on the success probability when preparation `a` is
/// only trusted up to fidelity `1 - eps_a`.
pub fn discrimination_bound_distrust(
    states: &[Ket],
    d: &DistrustVector,
    n: usize,
    restarts: usize,
    seed: u64,
) -> Result<f64> {
    let s = SeesawOptions {
        restarts,
        seed,
        ..SeesawOptions::default()
    };
    discrimination_distrust_report(states, d, n, &s, &SolverOptions::default()).map(|r| r.value)
}

pub fn discrimination_distrust_report(
    states: &[Ket],
    d: &DistrustVector,
    n: usize,
    s: &SeesawOptions,
    opts: &SolverOptions,
) -> Result<DiscriminationReport> {
    check_states(states)?;
    let m = states.len();
    if d.eps.len() != m {
        return Err(Error::DimensionMismatch(format!("{} distrust values for {m} states", d.eps.len())));
    }
    if s.restarts == 0 {
        return Err(Error::InvalidArgument("at least one restart is required".into()));
    }
    if n < 2 || n > m {
        return Err(Error::InvalidArgument(format!("outcome count {n} outside 2..={m}")));
    }
    let family = SubsetFamily::new(m, n)?;
    let jobs: Vec<(usize, usize)> = (0..family.len())
        .flat_map(|t| (0..s.restarts).map(move |r| (t, r)))
        .collect();
    let values = jobs
        .par_iter()
        .map(|&(t, r)| {
            let subset = &family.tuples[t];
            let start = if r == 0 {
                states.iter().map(Ket::density).collect()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
                rng.set_stream((t * s.restarts + r) as u64);
                states
                    .iter()
                    .zip(&d.eps)
                    .map(|(k, &e)| perturbed_ket(k, e, &mut rng).map(|k| k.density()))
                    .collect::<Result<Vec<_>>>()?
            };
            seesaw_run(states, &d.eps, subset, start, s, opts)
        })
        .collect::<Result<Vec<f64>>>()?;
    let per_subset = family
        .tuples
        .iter()
        .enumerate()
        .map(|(t, subset)| SubsetValue {
            subset: subset.clone(),
            value: values[t * s.restarts..(t + 1) * s.restarts]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max),
        })
        .collect();
    Ok(best_of(n, per_subset))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomnessReport {
    pub x_star: usize,
    pub guessing_probability: f64,
    pub bits: f64,
    pub solver: SolveStats,
}

/// `p(a|x) = tr(rho_x E_a)`.
pub fn probability_table(states: &[DensityMatrix], p: &Povm) -> Vec<Vec<f64>> {
    states.iter().map(|rho| p.probabilities(rho)).collect()
}

/// Guessing probability of an eavesdropper controlling the measurement,
/// given the probe states and the observed table `observed[x][a]`.
/// `x_star` is one-based.
pub fn mdi_guessing_probability(
    states: &[DensityMatrix],
    observed: &[Vec<f64>],
    x_star: usize,
    tol_region: Option<&ToleranceRegion>,
) -> Result<(f64, f64)> {
    mdi_report(states, observed, x_star, tol_region, &SolverOptions::default())
        .map(|r| (r.guessing_probability, r.bits))
}

pub fn mdi_report(
    states: &[DensityMatrix],
    observed: &[Vec<f64>],
    x_star: usize,
    tol_region: Option<&ToleranceRegion>,
    opts: &SolverOptions,
) -> Result<RandomnessReport> {
    let nx = states.len();
    if nx == 0 || observed.len() != nx {
        return Err(Error::DimensionMismatch(format!(
            "{} observed rows for {nx} states",
            observed.len()
        )));
    }
    if !(1..=nx).contains(&x_star) {
        return Err(Error::IndexOutOfRange {
            what: "x*",
            index: x_star,
            max: nx,
        });
    }
    let m = observed[0].len();
    if observed.iter().any(|r| r.len() != m) || m == 0 {
        return Err(Error::DimensionMismatch("ragged probability table".into()));
    }
    let d = states[0].dim();
    if let Some(reg) = tol_region {
        if reg.radii.len() != nx || reg.radii.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch("tolerance region shape".into()));
        }
    }
    for (x, row) in observed.iter().enumerate() {
        let slack: f64 = tol_region.map_or(0.0, |r| r.radii[x].iter().sum());
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > ROW_SUM_TOL + slack {
            return Err(Error::InvalidArgument(format!("row {} sums to {s}", x + 1)));
        }
    }

    // An outcome that never fires on rho_x forces every M_{a,e} onto ker rho_x.
    // Restricting to that face removes the constraints that are otherwise
    // satisfiable only on the boundary of the cone.
    let mut faces = Vec::with_capacity(m);
    for a in 0..m {
        let mut k = CMatrix::zeros(d, d);
        for x in 0..nx {
            let r = tol_region.map_or(0.0, |reg| reg.radii[x][a]);
            if observed[x][a] + r <= ZERO_PROBABILITY {
                k += states[x].matrix().matrix();
            }
        }
        faces.push(kernel_basis(&k)?);
    }

    let mut prob = SdpProblem::new();
    let mut blocks: Vec<Vec<Option<usize>>> = vec![vec![None; m]; m];
    for (a, row) in blocks.iter_mut().enumerate() {
        let k = faces[a].cols();
        if k == 0 {
            continue;
        }
        for (e, b) in row.iter_mut().enumerate() {
            *b = Some(prob.add_block(format!("M{a},{e}"), k, Field::Complex));
        }
    }
    let compress = |a: usize, h: &CMatrix| -> CMatrix { &(&faces[a].adjoint() * h) * &faces[a] };
    let pe: Vec<usize> = (0..m).map(|e| prob.add_scalar(format!("p{e}"))).collect();
    for x in 0..nx {
        for a in 0..m {
            let r = tol_region.map_or(0.0, |reg| reg.radii[x][a]);
            if observed[x][a] + r <= ZERO_PROBABILITY {
                continue;
            }
            let mut form = LinearForm::new();
            let rho_a = compress(a, states[x].matrix().matrix());
            for b in blocks[a].iter().flatten() {
                form = form.block(*b, rho_a.clone());
            }
            if r > 0.0 {
                prob.add_leq(form.clone(), observed[x][a] + r);
                prob.add_geq(form, observed[x][a] - r);
            } else {
                prob.add_constraint(form, observed[x][a]);
            }
        }
    }
    // sum_a M_{a,e} = p_e 1, one real equation per Hermitian basis element.
    for e in 0..m {
        for basis in sdp::hermitian_basis(d, true) {
            let mut form = LinearForm::new().scalar(pe[e], -basis.trace().re);
            for a in 0..m {
                if let Some(b) = blocks[a][e] {
                    form = form.block(b, compress(a, &basis));
                }
            }
            prob.add_constraint(form, 0.0);
        }
    }
    let mut norm = LinearForm::new();
    for &s in &pe {
        norm = norm.scalar(s, 1.0);
    }
    prob.add_constraint(norm, 1.0);
    let mut obj = LinearForm::new();
    for a in 0..m {
        if let Some(b) = blocks[a][a] {
            obj = obj.block(b, compress(a, states[x_star - 1].matrix().matrix()));
        }
    }
    prob.set_objective(obj);

    let sol = sdp::solve_with(&prob, opts)?;
    if sol.status == SdpStatus::Infeasible {
        return Err(Error::InfeasibleData(
            "no quantum model reproduces the observed table within the tolerance region".into(),
        ));
    }
    let sol = require_optimal(sol, format!("randomness, x* = {x_star}"))?;
    let pg = sol.objective_value.clamp(0.0, 1.0);
    Ok(RandomnessReport {
        x_star,
        guessing_probability: pg,
        bits: -pg.log2(),
        solver: SolveStats::from(&sol),
    })
}

/// Observed probabilities at or below this are treated as exact zeros.
const ZERO_PROBABILITY: f64 = 1e-12;

/// Orthonormal basis (as columns) of the kernel of a PSD matrix.
fn kernel_basis(k: &CMatrix) -> Result<CMatrix> {
    let d = k.rows();
    let e = eig_hermitian(&HermitianView::symmetrized(k))?;
    let top = e.values.last().copied().unwrap_or(0.0).max(0.0);
    let cols: Vec<usize> = (0..d).filter(|&i| e.values[i] <= 1e-10 * top.max(1.0)).collect();
    Ok(CMatrix::from_fn(d, cols.len(), |i, j| e.vectors[(i, cols[j])]))
}

/// Exclusion-game table for the SIC measurement at visibility `v`.
pub fn depolarized_exclusion_table(v: f64) -> Result<Vec<Vec<f64>>> {
    let p = povm::depolarize(&povm::sic_povm(), v)?;
    Ok(probability_table(&povm::exclusion_states(), &p))
}

/// Randomness `R(v)` of the depolarised SIC measurement probed with the
/// exclusion states, one solve per grid point.
pub fn randomness_vs_visibility_curve(grid: &[f64], x_star: usize) -> Result<Vec<(f64, f64)>> {
    let states = povm::exclusion_states();
    grid.par_iter()
        .map(|&v| {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("visibility {v} outside [0, 1]")));
            }
            let table = depolarized_exclusion_table(v)?;
            mdi_guessing_probability(&states, &table, x_star, None).map(|(_, r)| (v, r))
        })
        .collect()
}

/// Visibility at which `R(v)` crosses `target_bits`, by bisection on `[lo, hi]`.
pub fn randomness_crossing(target_bits: f64, lo: f64, hi: f64, tol: f64, x_star: usize) -> Result<f64> {
    let states = povm::exclusion_states();
    let r = |v: f64| -> Result<f64> {
        mdi_guessing_probability(&states, &depolarized_exclusion_table(v)?, x_star, None).map(|(_, r)| r)
    };
    let (mut lo, mut hi) = (lo, hi);
    let (rlo, rhi) = (r(lo)?, r(hi)?);
    if (rlo - target_bits) * (rhi - target_bits) > 0.0 {
        return Err(Error::InvalidArgument(format!(
            "no crossing of {target_bits} bits on [{lo}, {hi}]"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if r(mid)? < target_bits {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
