//! Small dense block semidefinite programs.
//!
//! Problems are stated in maximisation form over Hermitian (or real
//! symmetric) PSD blocks and free real scalars:
//!
//! ```text
//! maximise   sum_b <C_b, X_b> + f.u
//! subject to sum_b <A_ib, X_b> + B_i.u = b_i,   X_b >= 0
//! ```
//!
//! with `<A, X> = Re tr(A^dagger X)`. Complex blocks are embedded as real
//! blocks of twice the size and the real problem is solved by a
//! homogeneous self-dual interior-point method with Nesterov-Todd scaling
//! and Mehrotra predictor-corrector steps. Free scalars enter the Newton
//! system directly through a saddle-point solve.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Real,
    Complex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub name: String,
    pub dim: usize,
    pub field: Field,
}

/// `sum <C_b, X_b> + sum f_s u_s`; repeated blocks or scalars add up.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearForm {
    pub block_terms: Vec<(usize, CMatrix)>,
    pub scalar_terms: Vec<(usize, f64)>,
}

impl LinearForm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn block(mut self, b: usize, coeff: CMatrix) -> Self {
        self.block_terms.push((b, coeff));
        self
    }

    pub fn scalar(mut self, s: usize, coeff: f64) -> Self {
        self.scalar_terms.push((s, coeff));
        self
    }

    /// Value at the given block and scalar values.
    pub fn evaluate(&self, blocks: &[CMatrix], scalars: &[f64]) -> f64 {
        let mut v = 0.0;
        for (b, m) in &self.block_terms {
            v += m.frob_inner(&blocks[*b]).map(|z| z.re).unwrap_or(f64::NAN);
        }
        for (s, k) in &self.scalar_terms {
            v += k * scalars[*s];
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub form: LinearForm,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub blocks: Vec<BlockSpec>,
    pub scalars: Vec<String>,
    pub objective: LinearForm,
    pub constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_block(&mut self, name: impl Into<String>, dim: usize, field: Field) -> usize {
        self.blocks.push(BlockSpec {
            name: name.into(),
            dim,
            field,
        });
        self.blocks.len() - 1
    }

    pub fn add_scalar(&mut self, name: impl Into<String>) -> usize {
        self.scalars.push(name.into());
        self.scalars.len() - 1
    }

    pub fn set_objective(&mut self, form: LinearForm) {
        self.objective = form;
    }

    pub fn add_constraint(&mut self, form: LinearForm, rhs: f64) {
        self.constraints.push(Constraint { form, rhs });
    }

    /// `form <= rhs` through a fresh 1x1 slack block.
    pub fn add_leq(&mut self, form: LinearForm, rhs: f64) -> usize {
        let s = self.add_block(format!("slack{}", self.blocks.len()), 1, Field::Real);
        self.add_constraint(form.block(s, CMatrix::identity(1)), rhs);
        s
    }

    /// `form >= rhs` through a fresh 1x1 surplus block.
    pub fn add_geq(&mut self, form: LinearForm, rhs: f64) -> usize {
        let s = self.add_block(format!("surplus{}", self.blocks.len()), 1, Field::Real);
        self.add_constraint(form.block(s, CMatrix::identity(1).scale_re(-1.0)), rhs);
        s
    }

    /// `sum_b k_b X_b + sum_s u_s M_s = rhs` as a matrix identity, expanded
    /// over an orthonormal basis of Hermitian (or real symmetric, if every
    /// block involved is real) matrices.
    pub fn add_matrix_equality(
        &mut self,
        block_terms: &[(usize, f64)],
        scalar_terms: &[(usize, CMatrix)],
        rhs: &CMatrix,
    ) -> Result<()> {
        let d = rhs.rows();
        if !rhs.is_square() {
            return Err(Error::DimensionMismatch("matrix equality rhs must be square".into()));
        }
        for (b, _) in block_terms {
            let spec = self
                .blocks
                .get(*b)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown block {b}")))?;
            if spec.dim != d {
                return Err(Error::DimensionMismatch(format!(
                    "block {} has dim {}, equality has dim {d}",
                    spec.name, spec.dim
                )));
            }
        }
        if scalar_terms.iter().any(|(_, m)| m.shape() != (d, d)) {
            return Err(Error::DimensionMismatch("scalar coefficient matrix size".into()));
        }
        let complex = block_terms
            .iter()
            .any(|(b, _)| self.blocks[*b].field == Field::Complex)
            || block_terms.is_empty();
        for basis in hermitian_basis(d, complex) {
            let mut form = LinearForm::new();
            for (b, k) in block_terms {
                form = form.block(*b, basis.scale_re(*k));
            }
            for (s, m) in scalar_terms {
                form = form.scalar(*s, basis.frob_inner(m)?.re);
            }
            self.add_constraint(form, basis.frob_inner(rhs)?.re);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let check_form = |form: &LinearForm, what: &str| -> Result<()> {
            for (b, m) in &form.block_terms {
                let spec = self
                    .blocks
                    .get(*b)
                    .ok_or_else(|| Error::InvalidArgument(format!("{what}: unknown block {b}")))?;
                if m.shape() != (spec.dim, spec.dim) {
                    return Err(Error::DimensionMismatch(format!(
                        "{what}: coefficient for block {} is {}x{}, expected {d}x{d}",
                        spec.name,
                        m.rows(),
                        m.cols(),
                        d = spec.dim
                    )));
                }
                if m.hermitian_defect() > 1e-9 || !m.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "{what}: coefficient for block {} is not Hermitian",
                        spec.name
                    )));
                }
            }
            for (s, v) in &form.scalar_terms {
                if *s >= self.scalars.len() || !v.is_finite() {
                    return Err(Error::InvalidArgument(format!("{what}: bad scalar term {s}")));
                }
            }
            Ok(())
        };
        if self.blocks.iter().any(|b| b.dim == 0) {
            return Err(Error::InvalidArgument("zero-dimensional block".into()));
        }
        check_form(&self.objective, "objective")?;
        for (i, con) in self.constraints.iter().enumerate() {
            check_form(&con.form, &format!("constraint {i}"))?;
            if !con.rhs.is_finite() {
                return Err(Error::InvalidArgument(format!("constraint {i}: non-finite rhs")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }
}

/// Orthonormal basis of the `d x d` Hermitian (or real symmetric) matrices
/// under the Frobenius inner product.
pub fn hermitian_basis(d: usize, complex: bool) -> Vec<CMatrix> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::new();
    for j in 0..d {
        for k in j..d {
            let mut m = CMatrix::zeros(d, d);
            if j == k {
                m[(j, j)] = c(1.0, 0.0);
            } else {
                m[(j, k)] = c(r, 0.0);
                m[(k, j)] = c(r, 0.0);
            }
            out.push(m);
            if complex && j != k {
                let mut m = CMatrix::zeros(d, d);
                m[(j, k)] = c(0.0, -r);
                m[(k, j)] = c(0.0, r);
                out.push(m);
            }
        }
    }
    out
}

fn embed_real(m: &CMatrix) -> CMatrix {
    let d = m.rows();
    CMatrix::from_fn(2 * d, 2 * d, |i, j| {
        let z = m[(i % d, j % d)];
        let v = match (i < d, j < d) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        };
        c(v, 0.0)
    })
}

/// Replaces each complex block by its real `2d x 2d` embedding, with
/// coefficients halved so that every linear form keeps its value.
pub fn complex_to_real(p: &SdpProblem) -> SdpProblem {
    let map_form = |form: &LinearForm| LinearForm {
        block_terms: form
            .block_terms
            .iter()
            .map(|(b, m)| match p.blocks[*b].field {
                Field::Complex => (*b, embed_real(m).scale_re(0.5)),
                Field::Real => (*b, m.map(|z| c(z.re, 0.0))),
            })
            .collect(),
        scalar_terms: form.scalar_terms.clone(),
    };
    SdpProblem {
        blocks: p
            .blocks
            .iter()
            .map(|b| BlockSpec {
                name: b.name.clone(),
                dim: if b.field == Field::Complex { 2 * b.dim } else { b.dim },
                field: Field::Real,
            })
            .collect(),
        scalars: p.scalars.clone(),
        objective: map_form(&p.objective),
        constraints: p
            .constraints
            .iter()
            .map(|con| Constraint {
                form: map_form(&con.form),
                rhs: con.rhs,
            })
            .collect(),
    }
}

/// Inverse of the block embedding: `((X11 + X22) + i (X21 - X12)) / 2`.
pub fn real_block_to_complex(x: &CMatrix) -> CMatrix {
    let d = x.rows() / 2;
    CMatrix::from_fn(d, d, |i, j| {
        c(
            0.5 * (x[(i, j)].re + x[(i + d, j + d)].re),
            0.5 * (x[(i + d, j)].re - x[(i, j + d)].re),
        )
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    /// No point satisfies the constraints.
    Infeasible,
    /// The objective is unbounded above.
    Unbounded,
    MaxIterations,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub objective_value: f64,
    /// `b.y` for the final dual iterate; an upper bound on the optimum
    /// when the dual iterate is feasible.
    pub dual_bound: f64,
    pub block_values: Vec<CMatrix>,
    pub scalar_values: Vec<f64>,
    /// One multiplier per constraint; dual feasibility reads
    /// `sum_i y_i A_ib - C_b >= 0` and `B^T y = f`.
    pub duals: Vec<f64>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub duality_gap: f64,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }
}

/// Iterations without halving the worst residual before the solver gives up.
const STALL_ITERATIONS: usize = 12;

/// Fraction of the requested tolerance the dual residual and gap must reach,
/// leaving room for their effect on the objective.
const TARGET_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iterations: 100,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

pub fn solve(p: &SdpProblem, tol: f64) -> Result<SdpSolution> {
    solve_with(p, &SolverOptions::with_tol(tol))
}

pub fn solve_with(p: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    if !(opts.tol >= 1e-10) {
        return Err(Error::InvalidArgument(format!("tolerance {} below 1e-10", opts.tol)));
    }
    p.validate()?;
    let real = complex_to_real(p);
    let data = Data::from_problem(&real);
    let raw = match presolve(&data)? {
        Presolved::Inconsistent => RawSolution::infeasible(&data),
        Presolved::Rows(keep, scales) => {
            let reduced = data.restrict(&keep, &scales);
            let mut sol = Ipm::new(&reduced, opts).run()?;
            sol.expand_duals(&keep, &scales, data.rows.len());
            sol
        }
    };
    Ok(finish(p, &data, raw))
}

type Mat = DMatrix<f64>;

#[derive(Clone)]
struct Row {
    terms: Vec<(usize, Mat)>,
    scal: Vec<(usize, f64)>,
    rhs: f64,
    scale: f64,
}

/// Real minimisation form: min <C, X> + f.u s.t. A(X) + B u = b.
#[derive(Clone)]
struct Data {
    dims: Vec<usize>,
    c: Vec<Mat>,
    f: DVector<f64>,
    rows: Vec<Row>,
    /// Per block: (row, term index) pairs touching it.
    block_rows: Vec<Vec<(usize, usize)>>,
}

fn to_real_mat(m: &CMatrix) -> Mat {
    let n = m.rows();
    let mut out = Mat::from_fn(n, n, |i, j| m[(i, j)].re);
    symmetrize(&mut out);
    out
}

fn symmetrize(m: &mut Mat) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn inner(a: &Mat, b: &Mat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn merge_terms(terms: impl Iterator<Item = (usize, Mat)>) -> Vec<(usize, Mat)> {
    let mut out: Vec<(usize, Mat)> = Vec::new();
    for (b, m) in terms {
        match out.iter_mut().find(|(ob, _)| *ob == b) {
            Some((_, acc)) => *acc += m,
            None => out.push((b, m)),
        }
    }
    out.retain(|(_, m)| m.iter().any(|v| *v != 0.0));
    out
}

impl Data {
    fn from_problem(p: &SdpProblem) -> Self {
        let dims: Vec<usize> = p.blocks.iter().map(|b| b.dim).collect();
        let mut cm: Vec<Mat> = dims.iter().map(|&d| Mat::zeros(d, d)).collect();
        for (b, m) in &p.objective.block_terms {
            cm[*b] -= to_real_mat(m);
        }
        let mut f = DVector::zeros(p.scalars.len());
        for (s, v) in &p.objective.scalar_terms {
            f[*s] -= v;
        }
        let rows = p
            .constraints
            .iter()
            .map(|con| {
                let mut scal: Vec<(usize, f64)> = Vec::new();
                for &(s, v) in &con.form.scalar_terms {
                    match scal.iter_mut().find(|(o, _)| *o == s) {
                        Some((_, acc)) => *acc += v,
                        None => scal.push((s, v)),
                    }
                }
                scal.retain(|(_, v)| *v != 0.0);
                Row {
                    terms: merge_terms(con.form.block_terms.iter().map(|(b, m)| (*b, to_real_mat(m)))),
                    scal,
                    rhs: con.rhs,
                    scale: 1.0,
                }
            })
            .collect();
        let mut d = Data {
            dims,
            c: cm,
            f,
            rows,
            block_rows: Vec::new(),
        };
        d.index();
        d
    }

    fn index(&mut self) {
        self.block_rows = vec![Vec::new(); self.dims.len()];
        for (i, r) in self.rows.iter().enumerate() {
            for (t, (b, _)) in r.terms.iter().enumerate() {
                self.block_rows[*b].push((i, t));
            }
        }
    }

    fn restrict(&self, keep: &[usize], scales: &[f64]) -> Data {
        let scaled_row = |i: usize| {
            let r = &self.rows[i];
            let s = scales[i];
            Row {
                terms: r.terms.iter().map(|(b, m)| (*b, m * s)).collect(),
                scal: r.scal.iter().map(|(k, v)| (*k, v * s)).collect(),
                rhs: r.rhs * s,
                scale: s,
            }
        };
        let mut d = Data {
            dims: self.dims.clone(),
            c: self.c.clone(),
            f: self.f.clone(),
            rows: keep.iter().map(|&i| scaled_row(i)).collect(),
            block_rows: Vec::new(),
        };
        d.index();
        d
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    fn k(&self) -> usize {
        self.f.len()
    }

    fn b(&self) -> DVector<f64> {
        DVector::from_iterator(self.m(), self.rows.iter().map(|r| r.rhs))
    }

    fn a_op(&self, x: &[Mat]) -> DVector<f64> {
        DVector::from_iterator(
            self.m(),
            self.rows
                .iter()
                .map(|r| r.terms.iter().map(|(b, a)| inner(a, &x[*b])).sum::<f64>()),
        )
    }

    fn b_op(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.m(),
            self.rows.iter().map(|r| r.scal.iter().map(|(s, v)| v * u[*s]).sum::<f64>()),
        )
    }

    fn bt_op(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.k());
        for (i, r) in self.rows.iter().enumerate() {
            for (s, v) in &r.scal {
                out[*s] += v * y[i];
            }
        }
        out
    }

    fn at_op(&self, y: &DVector<f64>) -> Vec<Mat> {
        let mut out: Vec<Mat> = self.dims.iter().map(|&d| Mat::zeros(d, d)).collect();
        for (i, r) in self.rows.iter().enumerate() {
            if y[i] != 0.0 {
                for (b, a) in &r.terms {
                    out[*b] += a * y[i];
                }
            }
        }
        out
    }

    fn gram(&self) -> Mat {
        let m = self.m();
        let mut g = Mat::zeros(m, m);
        for list in &self.block_rows {
            for (p, &(i, ti)) in list.iter().enumerate() {
                for &(j, tj) in &list[p..] {
                    let v = inner(&self.rows[i].terms[ti].1, &self.rows[j].terms[tj].1);
                    g[(i, j)] += v;
                    if i != j {
                        g[(j, i)] += v;
                    }
                }
            }
        }
        let mut by_scalar: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.k()];
        for (i, r) in self.rows.iter().enumerate() {
            for (s, v) in &r.scal {
                by_scalar[*s].push((i, *v));
            }
        }
        for list in &by_scalar {
            for &(i, vi) in list {
                for &(j, vj) in list {
                    g[(i, j)] += vi * vj;
                }
            }
        }
        g
    }
}

enum Presolved {
    /// Kept row indices and the normalising factor of every row.
    Rows(Vec<usize>, Vec<f64>),
    Inconsistent,
}

/// Normalises rows and keeps a maximal linearly independent subset.
fn presolve(data: &Data) -> Result<Presolved> {
    let mut normed = data.clone();
    for r in &mut normed.rows {
        let n2: f64 = r.terms.iter().map(|(_, a)| inner(a, a)).sum::<f64>()
            + r.scal.iter().map(|(_, v)| v * v).sum::<f64>();
        let n = n2.sqrt();
        if n == 0.0 {
            if r.rhs.abs() > 1e-9 {
                return Ok(Presolved::Inconsistent);
            }
            r.scale = 0.0;
            continue;
        }
        r.scale = 1.0 / n;
    }
    let g = normed.gram();
    let scales: Vec<f64> = normed.rows.iter().map(|r| r.scale).collect();
    let rhs: Vec<f64> = normed.rows.iter().map(|r| r.rhs * r.scale).collect();
    let mut keep: Vec<usize> = Vec::new();
    let mut l: Vec<Vec<f64>> = Vec::new();
    for i in 0..normed.m() {
        if scales[i] == 0.0 {
            continue;
        }
        let gi = |j: usize| g[(i, j)] * scales[i] * scales[j];
        let mut lrow = Vec::with_capacity(keep.len() + 1);
        for (p, &kp) in keep.iter().enumerate() {
            let s: f64 = (0..p).map(|q| l[p][q] * lrow[q]).sum();
            lrow.push((gi(kp) - s) / l[p][p]);
        }
        let d = gi(i) - lrow.iter().map(|v| v * v).sum::<f64>();
        if d > 1e-10 {
            lrow.push(d.sqrt());
            l.push(lrow);
            keep.push(i);
        } else {
            // Coefficients of row i in terms of kept rows: L^T c = lrow.
            let n = keep.len();
            let mut coef = vec![0.0; n];
            for p in (0..n).rev() {
                let s: f64 = ((p + 1)..n).map(|q| l[q][p] * coef[q]).sum();
                coef[p] = (lrow[p] - s) / l[p][p];
            }
            let predicted: f64 = keep.iter().zip(&coef).map(|(&kp, cf)| cf * rhs[kp]).sum();
            if (predicted - rhs[i]).abs() > 1e-7 * (1.0 + rhs[i].abs()) {
                return Ok(Presolved::Inconsistent);
            }
        }
    }
    Ok(Presolved::Rows(keep, scales))
}

struct RawSolution {
    status: SdpStatus,
    x: Vec<Mat>,
    u: DVector<f64>,
    y: DVector<f64>,
    iterations: usize,
}

impl RawSolution {
    fn infeasible(data: &Data) -> Self {
        Self {
            status: SdpStatus::Infeasible,
            x: data.dims.iter().map(|&d| Mat::zeros(d, d)).collect(),
            u: DVector::zeros(data.k()),
            y: DVector::zeros(data.m()),
            iterations: 0,
        }
    }

    fn expand_duals(&mut self, keep: &[usize], scales: &[f64], m: usize) {
        let mut y = DVector::zeros(m);
        for (p, &i) in keep.iter().enumerate() {
            y[i] = self.y[p] * scales[i];
        }
        self.y = y;
    }
}

struct Scaling {
    g: Mat,
    ginv: Mat,
    w: Mat,
    d: DVector<f64>,
}

fn nt_scaling(x: &Mat, z: &Mat) -> Option<Scaling> {
    let n = x.nrows();
    let l = Cholesky::new(x.clone())?.l();
    let mut lzl = l.transpose() * z * &l;
    symmetrize(&mut lzl);
    let eig = SymmetricEigen::try_new(lzl, f64::EPSILON, 100 * n.max(4))?;
    let lam = eig.eigenvalues.map(|v| v.max(1e-300));
    let v = eig.eigenvectors;
    let lq = lam.map(|x| x.powf(-0.25));
    let g = &l * &v * Mat::from_diagonal(&lq);
    let linv = l.solve_lower_triangular(&Mat::identity(n, n))?;
    let ginv = Mat::from_diagonal(&lam.map(|x| x.powf(0.25))) * v.transpose() * linv;
    let mut w = &g * g.transpose();
    symmetrize(&mut w);
    Some(Scaling {
        g,
        ginv,
        w,
        d: lam.map(f64::sqrt),
    })
}

/// Largest `alpha <= cap` keeping `D + alpha dS` positive semidefinite.
fn max_step_scaled(d: &DVector<f64>, ds: &Mat, cap: f64) -> f64 {
    let n = d.len();
    let mut m = Mat::from_fn(n, n, |i, j| ds[(i, j)] / (d[i] * d[j]).sqrt());
    symmetrize(&mut m);
    let lmin = SymmetricEigen::try_new(m, f64::EPSILON, 100 * n.max(4))
        .map(|e| e.eigenvalues.min())
        .unwrap_or(f64::NEG_INFINITY);
    if lmin >= 0.0 {
        cap
    } else {
        (-1.0 / lmin).min(cap)
    }
}

fn ratio(v: f64, dv: f64, cap: f64) -> f64 {
    if dv < 0.0 {
        (-v / dv).min(cap)
    } else {
        cap
    }
}

struct Direction {
    dx: Vec<Mat>,
    dz: Vec<Mat>,
    dy: DVector<f64>,
    du: DVector<f64>,
    dtau: f64,
    dkappa: f64,
}

enum Factor {
    Chol(Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl Factor {
    fn new(mut n: Mat) -> Option<Self> {
        if let Some(ch) = Cholesky::new(n.clone()) {
            return Some(Factor::Chol(ch));
        }
        let reg = 1e-13 * n.diagonal().amax().max(1e-300);
        for i in 0..n.nrows() {
            n[(i, i)] += reg;
        }
        if let Some(ch) = Cholesky::new(n.clone()) {
            return Some(Factor::Chol(ch));
        }
        let lu = n.lu();
        if lu.is_invertible() {
            Some(Factor::Lu(lu))
        } else {
            None
        }
    }

    fn solve(&self, b: &Mat) -> Option<Mat> {
        match self {
            Factor::Chol(c) => Some(c.solve(b)),
            Factor::Lu(l) => l.solve(b),
        }
    }
}

/// Factorisation of the saddle system `[[M, B], [B^T, 0]]`.
struct Saddle {
    n: Factor,
    bm: Mat,
    s: Option<Factor>,
    nib: Mat,
    rho: f64,
}

impl Saddle {
    fn new(m: Mat, bm: Mat) -> Option<Self> {
        let rho = if bm.ncols() > 0 {
            (m.diagonal().amax().max(1.0)) / bm.iter().map(|v| v * v).fold(1e-300, f64::max)
        } else {
            0.0
        };
        let mut nmat = m;
        if bm.ncols() > 0 {
            nmat += rho * &bm * bm.transpose();
        }
        let n = Factor::new(nmat)?;
        let (s, nib) = if bm.ncols() > 0 {
            let nib = n.solve(&bm)?;
            let mut s = bm.transpose() * &nib;
            symmetrize(&mut s);
            (Some(Factor::new(s)?), nib)
        } else {
            (None, Mat::zeros(bm.nrows(), 0))
        };
        Some(Self { n, bm, s, nib, rho })
    }

    fn solve(&self, r1: &DVector<f64>, r2: &DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
        let mut r1 = r1.clone();
        if self.bm.ncols() > 0 {
            r1 += self.rho * &self.bm * r2;
        }
        let r1m = Mat::from_column_slice(r1.len(), 1, r1.as_slice());
        let y0 = self.n.solve(&r1m)?.column(0).into_owned();
        match &self.s {
            None => Some((y0, DVector::zeros(0))),
            Some(s) => {
                let rhs = self.bm.transpose() * &y0 - r2;
                let u = s
                    .solve(&Mat::from_column_slice(rhs.len(), 1, rhs.as_slice()))?
                    .column(0)
                    .into_owned();
                let y = y0 - &self.nib * &u;
                Some((y, u))
            }
        }
    }
}

struct Ipm<'a> {
    d: &'a Data,
    opts: SolverOptions,
    b: DVector<f64>,
    bmat: Mat,
    x: Vec<Mat>,
    z: Vec<Mat>,
    y: DVector<f64>,
    u: DVector<f64>,
    tau: f64,
    kappa: f64,
    nu: f64,
}

struct Residuals {
    rp: DVector<f64>,
    rd: Vec<Mat>,
    rf: DVector<f64>,
    rg: f64,
}

impl<'a> Ipm<'a> {
    fn new(d: &'a Data, opts: &SolverOptions) -> Self {
        let b = d.b();
        let mut bmat = Mat::zeros(d.m(), d.k());
        for (i, r) in d.rows.iter().enumerate() {
            for (s, v) in &r.scal {
                bmat[(i, *s)] += v;
            }
        }
        Self {
            d,
            opts: *opts,
            b,
            bmat,
            x: d.dims.iter().map(|&n| Mat::identity(n, n)).collect(),
            z: d.dims.iter().map(|&n| Mat::identity(n, n)).collect(),
            y: DVector::zeros(d.m()),
            u: DVector::zeros(d.k()),
            tau: 1.0,
            kappa: 1.0,
            nu: d.dims.iter().sum::<usize>() as f64 + 1.0,
        }
    }

    fn residuals(&self) -> Residuals {
        let d = self.d;
        let rp = d.a_op(&self.x) + d.b_op(&self.u) - &self.b * self.tau;
        let aty = d.at_op(&self.y);
        let rd = (0..d.dims.len())
            .map(|b| &d.c[b] * self.tau - &aty[b] - &self.z[b])
            .collect();
        let rf = d.bt_op(&self.y) - &d.f * self.tau;
        let rg = self.b.dot(&self.y) - self.primal_obj_raw() - self.kappa;
        Residuals { rp, rd, rf, rg }
    }

    fn primal_obj_raw(&self) -> f64 {
        self.d.c.iter().zip(&self.x).map(|(c, x)| inner(c, x)).sum::<f64>() + self.d.f.dot(&self.u)
    }

    fn mu(&self) -> f64 {
        (self.x.iter().zip(&self.z).map(|(x, z)| inner(x, z)).sum::<f64>() + self.tau * self.kappa) / self.nu
    }

    fn schur(&self, sc: &[Scaling]) -> Mat {
        let d = self.d;
        let m = d.m();
        let mut mm = Mat::zeros(m, m);
        for (b, list) in d.block_rows.iter().enumerate() {
            let w = &sc[b].w;
            let wa: Vec<Mat> = list.iter().map(|&(i, t)| w * &d.rows[i].terms[t].1 * w).collect();
            for (p, &(i, _)) in list.iter().enumerate() {
                for (q, &(j, tj)) in list.iter().enumerate().skip(p) {
                    let v = inner(&wa[p], &d.rows[j].terms[tj].1);
                    mm[(i, j)] += v;
                    if q != p {
                        mm[(j, i)] += v;
                    }
                }
            }
        }
        mm
    }

    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        sc: &[Scaling],
        saddle: &Saddle,
        res: &Residuals,
        k: &[Mat],
        s_kappa: f64,
        eta: f64,
    ) -> Option<Direction> {
        let d = self.d;
        let nb = d.dims.len();
        let wcw: Vec<Mat> = (0..nb).map(|b| &sc[b].w * &d.c[b] * &sc[b].w).collect();
        let wrw: Vec<Mat> = (0..nb).map(|b| &sc[b].w * &res.rd[b] * &sc[b].w).collect();
        let g = d.a_op(&wcw);
        let h1 = -&res.rp * eta - d.a_op(k) + d.a_op(&wrw) * eta;
        let (y1, u1) = saddle.solve(&h1, &(-&res.rf * eta))?;
        let (y2, u2) = saddle.solve(&(&self.b + &g), &d.f)?;
        let cw: f64 = (0..nb).map(|b| inner(&d.c[b], &wcw[b])).sum();
        let ck: f64 = (0..nb).map(|b| inner(&d.c[b], &k[b])).sum();
        let wr: f64 = (0..nb).map(|b| inner(&wcw[b], &res.rd[b])).sum();
        let bg = &self.b - &g;
        let num = -eta * res.rg + ck - eta * wr + s_kappa / self.tau - bg.dot(&y1) + d.f.dot(&u1);
        let den = bg.dot(&y2) - d.f.dot(&u2) + cw + self.kappa / self.tau;
        let dtau = num / den;
        if !dtau.is_finite() {
            return None;
        }
        let dy = y1 + &y2 * dtau;
        let du = u1 + &u2 * dtau;
        let aty = d.at_op(&dy);
        let mut dz = Vec::with_capacity(nb);
        let mut dx = Vec::with_capacity(nb);
        for b in 0..nb {
            let mut z = &d.c[b] * dtau - &aty[b] + &res.rd[b] * eta;
            symmetrize(&mut z);
            let mut x = &k[b] - &sc[b].w * &z * &sc[b].w;
            symmetrize(&mut x);
            dz.push(z);
            dx.push(x);
        }
        let dkappa = (s_kappa - self.kappa * dtau) / self.tau;
        Some(Direction {
            dx,
            dz,
            dy,
            du,
            dtau,
            dkappa,
        })
    }

    fn step_length(&self, sc: &[Scaling], dir: &Direction, scaled: &[(Mat, Mat)]) -> f64 {
        let mut a = ratio(self.tau, dir.dtau, 1e30).min(ratio(self.kappa, dir.dkappa, 1e30));
        for (b, (sx, sz)) in scaled.iter().enumerate() {
            a = a.min(max_step_scaled(&sc[b].d, sx, 1e30));
            a = a.min(max_step_scaled(&sc[b].d, sz, 1e30));
        }
        a
    }

    fn scaled(&self, sc: &[Scaling], dir: &Direction) -> Vec<(Mat, Mat)> {
        sc.iter()
            .enumerate()
            .map(|(b, s)| {
                let mut sx = &s.ginv * &dir.dx[b] * s.ginv.transpose();
                let mut sz = s.g.transpose() * &dir.dz[b] * &s.g;
                symmetrize(&mut sx);
                symmetrize(&mut sz);
                (sx, sz)
            })
            .collect()
    }

    fn apply(&mut self, dir: &Direction, alpha: f64) {
        for b in 0..self.x.len() {
            self.x[b] += &dir.dx[b] * alpha;
            self.z[b] += &dir.dz[b] * alpha;
            symmetrize(&mut self.x[b]);
            symmetrize(&mut self.z[b]);
        }
        self.y.axpy(alpha, &dir.dy, 1.0);
        self.u.axpy(alpha, &dir.du, 1.0);
        self.tau += alpha * dir.dtau;
        self.kappa += alpha * dir.dkappa;
    }

    /// Relative primal, dual and gap measures at the current iterate.
    fn measures(&self, res: &Residuals) -> (f64, f64, f64) {
        let t = self.tau;
        let bn = 1.0 + self.b.amax();
        let cn = 1.0 + self.d.c.iter().map(|c| c.amax()).fold(self.d.f.amax(), f64::max);
        let p = res.rp.amax() / t / bn;
        let dres = res.rd.iter().map(|m| m.amax()).fold(res.rf.amax(), f64::max) / t / cn;
        let (pobj, dobj) = self.objectives();
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs().max(dobj.abs()));
        (p, dres, gap)
    }

    /// Primal residual on the unscaled rows and the absolute objective gap,
    /// the quantities reported to the caller.
    fn absolute_measures(&self, res: &Residuals) -> (f64, f64) {
        let p = self
            .d
            .rows
            .iter()
            .zip(res.rp.iter())
            .map(|(r, v)| v.abs() / r.scale)
            .fold(0.0, f64::max)
            / self.tau;
        let (pobj, dobj) = self.objectives();
        (p, (pobj - dobj).abs())
    }

    fn objectives(&self) -> (f64, f64) {
        (self.primal_obj_raw() / self.tau, self.b.dot(&self.y) / self.tau)
    }

    fn certificates(&self, res: &Residuals) -> Option<SdpStatus> {
        let d = self.d;
        let by = self.b.dot(&self.y);
        if by > 0.0 {
            let aty = d.at_op(&self.y);
            let viol = (0..d.dims.len())
                .map(|b| (&aty[b] + &self.z[b]).amax())
                .fold(d.bt_op(&self.y).amax(), f64::max);
            if viol / by < 1e-8 && self.tau < 1e-6 * self.kappa.max(1.0) {
                return Some(SdpStatus::Infeasible);
            }
        }
        let cx = self.primal_obj_raw();
        if cx < 0.0 {
            let viol = (d.a_op(&self.x) + d.b_op(&self.u)).amax();
            if viol / -cx < 1e-8 && self.tau < 1e-6 * self.kappa.max(1.0) {
                return Some(SdpStatus::Unbounded);
            }
        }
        let _ = res;
        None
    }

    fn run(mut self) -> Result<RawSolution> {
        let tol = self.opts.tol;
        let strict = TARGET_MARGIN * tol;
        let mut status = SdpStatus::MaxIterations;
        let mut iterations = 0;
        let mut since_best = 0;
        let mut best: Option<(f64, Vec<Mat>, DVector<f64>, DVector<f64>, f64)> = None;
        // Last iterate meeting `tol` itself, returned if the stricter target stalls.
        let mut acceptable: Option<(Vec<Mat>, DVector<f64>, DVector<f64>, f64)> = None;
        for it in 0..self.opts.max_iterations {
            iterations = it;
            let res = self.residuals();
            let (p, dres, gap) = self.measures(&res);
            let worst = p.max(dres).max(gap);
            if best.as_ref().is_none_or(|b| worst < 0.5 * b.0) {
                since_best = it;
            }
            if best.as_ref().is_none_or(|b| worst < b.0) {
                best = Some((worst, self.x.clone(), self.u.clone(), self.y.clone(), self.tau));
            }
            if p <= tol && dres <= tol && gap <= tol {
                let (pa, ga) = self.absolute_measures(&res);
                if pa <= tol && ga <= tol {
                    if dres <= strict && gap <= strict {
                        status = SdpStatus::Optimal;
                        break;
                    }
                    acceptable = Some((self.x.clone(), self.u.clone(), self.y.clone(), self.tau));
                }
            }
            if it >= since_best + STALL_ITERATIONS {
                break;
            }
            if let Some(s) = self.certificates(&res) {
                status = s;
                break;
            }
            let sc: Option<Vec<Scaling>> = self.x.iter().zip(&self.z).map(|(x, z)| nt_scaling(x, z)).collect();
            let Some(sc) = sc else { break };
            let Some(saddle) = Saddle::new(self.schur(&sc), self.bmat.clone()) else {
                break;
            };
            let mu = self.mu();

            // Predictor.
            let kx: Vec<Mat> = self.x.iter().map(|x| -x).collect();
            let Some(aff) = self.direction(&sc, &saddle, &res, &kx, -self.tau * self.kappa, 1.0) else {
                break;
            };
            let aff_scaled = self.scaled(&sc, &aff);
            let alpha_a = self.step_length(&sc, &aff, &aff_scaled).min(1.0);
            let mu_aff = {
                let mut s = (self.tau + alpha_a * aff.dtau) * (self.kappa + alpha_a * aff.dkappa);
                for b in 0..self.x.len() {
                    let xa = &self.x[b] + &aff.dx[b] * alpha_a;
                    let za = &self.z[b] + &aff.dz[b] * alpha_a;
                    s += inner(&xa, &za);
                }
                s / self.nu
            };
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            // Corrector.
            let kc: Vec<Mat> = sc
                .iter()
                .zip(&aff_scaled)
                .map(|(s, (sx, sz))| {
                    let n = s.d.len();
                    let cross = sx * sz + sz * sx;
                    let rsc = Mat::from_fn(n, n, |i, j| {
                        let diag = if i == j { 2.0 * sigma * mu - 2.0 * s.d[i] * s.d[i] } else { 0.0 };
                        (diag - cross[(i, j)]) / (s.d[i] + s.d[j])
                    });
                    let mut k = &s.g * rsc * s.g.transpose();
                    symmetrize(&mut k);
                    k
                })
                .collect();
            let s_kappa = sigma * mu - self.tau * self.kappa - aff.dtau * aff.dkappa;
            let Some(dir) = self.direction(&sc, &saddle, &res, &kc, s_kappa, 1.0 - sigma) else {
                break;
            };
            let dir_scaled = self.scaled(&sc, &dir);
            let alpha = (0.99 * self.step_length(&sc, &dir, &dir_scaled)).min(1.0);
            if !(alpha > 1e-12) {
                break;
            }
            self.apply(&dir, alpha);
            // Keep the embedding well scaled.
            let s = self.tau.max(self.kappa);
            if !(1e-8..=1e8).contains(&s) {
                self.rescale(1.0 / s);
            }
        }
        if status == SdpStatus::Optimal || matches!(status, SdpStatus::Infeasible | SdpStatus::Unbounded) {
            let t = if status == SdpStatus::Optimal { self.tau } else { 1.0 };
            return Ok(RawSolution {
                status,
                x: self.x.iter().map(|x| x / t).collect(),
                u: &self.u / t,
                y: &self.y / t,
                iterations: iterations + 1,
            });
        }
        if let Some((x, u, y, t)) = acceptable {
            return Ok(RawSolution {
                status: SdpStatus::Optimal,
                x: x.iter().map(|m| m / t).collect(),
                u: u / t,
                y: y / t,
                iterations: iterations + 1,
            });
        }
        let (_, x, u, y, t) = best.expect("at least one iteration");
        Ok(RawSolution {
            status,
            x: x.iter().map(|m| m / t).collect(),
            u: u / t,
            y: y / t,
            iterations: iterations + 1,
        })
    }

    fn rescale(&mut self, s: f64) {
        for b in 0..self.x.len() {
            self.x[b] *= s;
            self.z[b] *= s;
        }
        self.y *= s;
        self.u *= s;
        self.tau *= s;
        self.kappa *= s;
    }
}

fn finish(p: &SdpProblem, data: &Data, raw: RawSolution) -> SdpSolution {
    let blocks: Vec<CMatrix> = p
        .blocks
        .iter()
        .zip(&raw.x)
        .map(|(spec, x)| {
            let m = CMatrix::from_fn(x.nrows(), x.ncols(), |i, j| c(x[(i, j)], 0.0));
            match spec.field {
                Field::Complex => real_block_to_complex(&m),
                Field::Real => m,
            }
        })
        .collect();
    let scalars: Vec<f64> = raw.u.iter().copied().collect();
    let objective_value = p.objective.evaluate(&blocks, &scalars);
    let primal_residual = p
        .constraints
        .iter()
        .map(|con| (con.form.evaluate(&blocks, &scalars) - con.rhs).abs())
        .fold(0.0, f64::max);
    // Max-form multipliers are the negated min-form ones.
    let duals: Vec<f64> = raw.y.iter().map(|v| -v).collect();
    let dual_bound: f64 = data.rows.iter().zip(&duals).map(|(r, y)| r.rhs * y).sum();
    let ydv = DVector::from_vec(duals.clone());
    let aty = data.at_op(&ydv);
    let mut dual_residual = (data.bt_op(&ydv) + &data.f).amax();
    for (b, m) in aty.iter().enumerate() {
        let s = m + &data.c[b];
        let mut s2 = s.clone();
        symmetrize(&mut s2);
        let n = s2.nrows();
        let lmin = SymmetricEigen::try_new(s2, f64::EPSILON, 100 * n.max(4))
            .map(|e| e.eigenvalues.min())
            .unwrap_or(f64::NEG_INFINITY);
        dual_residual = dual_residual.max((-lmin).max(0.0));
    }
    SdpSolution {
        status: raw.status,
        objective_value,
        dual_bound,
        block_values: blocks,
        scalar_values: scalars,
        duals,
        primal_residual,
        dual_residual,
        duality_gap: (dual_bound - objective_value).abs(),
        iterations: raw.iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cr, eig_hermitian, HermitianView};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let g = CMatrix::from_fn(n, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        (&g + &g.adjoint()).scale_re(0.5)
    }

    /// max t s.t. t 1 <= h, i.e. the smallest eigenvalue of h.
    fn min_eig_problem(h: &CMatrix, field: Field) -> SdpProblem {
        let n = h.rows();
        let mut p = SdpProblem::new();
        let s = p.add_block("s", n, field);
        let t = p.add_scalar("t");
        p.add_matrix_equality(&[(s, 1.0)], &[(t, CMatrix::identity(n))], h).unwrap();
        p.set_objective(LinearForm::new().scalar(t, 1.0));
        p
    }

    #[test]
    fn smallest_eigenvalue_of_diag() {
        let h = CMatrix::diag(&[cr(1.0), cr(2.0)]);
        let sol = solve(&min_eig_problem(&h, Field::Real), 1e-8).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.objective_value - 1.0).abs() < 1e-7, "{}", sol.objective_value);
        assert!((sol.scalar_values[0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn smallest_eigenvalue_complex() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [2, 3, 5] {
            let h = random_hermitian(n, &mut rng);
            let want = eig_hermitian(&HermitianView::new(h.clone()).unwrap()).unwrap().values[0];
            let sol = solve(&min_eig_problem(&h, Field::Complex), 1e-9).unwrap();
            assert_eq!(sol.status, SdpStatus::Optimal);
            assert!((sol.objective_value - want).abs() < 1e-7, "{} vs {want}", sol.objective_value);
            assert!(sol.dual_bound >= sol.objective_value - 1e-7);
        }
    }

    /// max tr(E X) over 0 <= X <= 1, tr X = 1.
    fn capped_state_problem(e: &CMatrix) -> SdpProblem {
        let n = e.rows();
        let mut p = SdpProblem::new();
        let x = p.add_block("x", n, Field::Complex);
        let y = p.add_block("y", n, Field::Complex);
        p.add_matrix_equality(&[(x, 1.0), (y, 1.0)], &[], &CMatrix::identity(n)).unwrap();
        p.add_constraint(LinearForm::new().block(x, CMatrix::identity(n)), 1.0);
        p.set_objective(LinearForm::new().block(x, e.clone()));
        p
    }

    #[test]
    fn capped_state_matches_largest_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let e = random_hermitian(3, &mut rng);
            let want = eig_hermitian(&HermitianView::new(e.clone()).unwrap()).unwrap().values[2];
            let sol = solve(&capped_state_problem(&e), 1e-8).unwrap();
            assert!(sol.is_optimal());
            assert!((sol.objective_value - want).abs() < 1e-7);
            assert!(sol.primal_residual < 1e-7);
            for b in &sol.block_values {
                let v = HermitianView::symmetrized(b);
                assert!(v.min_eigenvalue().unwrap() > -1e-8);
            }
        }
    }

    #[test]
    fn objective_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let e = random_hermitian(3, &mut rng);
        let a = solve(&capped_state_problem(&e), 1e-8).unwrap();
        let b = solve(&capped_state_problem(&e.scale_re(10.0)), 1e-8).unwrap();
        assert!((b.objective_value - 10.0 * a.objective_value).abs() < 10.0 * 1e-7);
    }

    #[test]
    fn infeasible_problem() {
        let mut p = SdpProblem::new();
        let x = p.add_block("x", 2, Field::Real);
        p.add_constraint(LinearForm::new().block(x, CMatrix::identity(2)), -1.0);
        let sol = solve(&p, 1e-8).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
    }

    #[test]
    fn inconsistent_duplicate_rows() {
        let mut p = SdpProblem::new();
        let x = p.add_block("x", 1, Field::Real);
        p.add_constraint(LinearForm::new().block(x, CMatrix::identity(1)), 1.0);
        p.add_constraint(LinearForm::new().block(x, CMatrix::identity(1).scale_re(2.0)), 3.0);
        assert_eq!(solve(&p, 1e-8).unwrap().status, SdpStatus::Infeasible);
    }

    #[test]
    fn consistent_duplicate_rows() {
        let mut p = SdpProblem::new();
        let x = p.add_block("x", 2, Field::Real);
        let tr = CMatrix::identity(2);
        p.add_constraint(LinearForm::new().block(x, tr.clone()), 1.0);
        p.add_constraint(LinearForm::new().block(x, tr.scale_re(3.0)), 3.0);
        p.set_objective(LinearForm::new().block(x, CMatrix::diag(&[cr(0.25), cr(0.75)])));
        let sol = solve(&p, 1e-8).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.objective_value - 0.75).abs() < 1e-7);
        assert!(sol.primal_residual < 1e-7);
    }

    #[test]
    fn unbounded_problem() {
        let mut p = SdpProblem::new();
        let x = p.add_block("x", 1, Field::Real);
        let y = p.add_block("y", 1, Field::Real);
        let one = CMatrix::identity(1);
        p.add_constraint(LinearForm::new().block(x, one.clone()).block(y, one.scale_re(-1.0)), 0.0);
        p.set_objective(LinearForm::new().block(x, one));
        assert_eq!(solve(&p, 1e-8).unwrap().status, SdpStatus::Unbounded);
    }

    #[test]
    fn free_scalar_only_rows() {
        // max t with t = 0.3 and s = 2 t through scalar-only rows.
        let mut p = SdpProblem::new();
        let x = p.add_block("x", 1, Field::Real);
        let t = p.add_scalar("t");
        let s = p.add_scalar("s");
        p.add_constraint(LinearForm::new().scalar(t, 1.0), 0.3);
        p.add_constraint(LinearForm::new().scalar(s, 1.0).scalar(t, -2.0), 0.0);
        p.add_constraint(LinearForm::new().block(x, CMatrix::identity(1)).scalar(s, 1.0), 1.0);
        p.set_objective(LinearForm::new().scalar(t, 1.0).scalar(s, 1.0));
        let sol = solve(&p, 1e-8).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.objective_value - 0.9).abs() < 1e-7);
        assert!((sol.block_values[x][(0, 0)].re - 0.4).abs() < 1e-7);
    }

    #[test]
    fn embedding_preserves_positivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let h = random_hermitian(3, &mut rng);
            let ev = eig_hermitian(&HermitianView::new(h.clone()).unwrap()).unwrap().values;
            let er = eig_hermitian(&HermitianView::new(embed_real(&h)).unwrap()).unwrap().values;
            // Each eigenvalue appears twice in the embedding.
            for k in 0..3 {
                assert!((er[2 * k] - ev[k]).abs() < 1e-12 && (er[2 * k + 1] - ev[k]).abs() < 1e-12);
            }
            assert!(real_block_to_complex(&embed_real(&h)).max_abs_diff(&h) < 1e-15);
        }
    }

    #[test]
    fn real_problem_embedding_only_doubles() {
        let p = min_eig_problem(&CMatrix::diag(&[cr(1.0), cr(2.0)]), Field::Real);
        assert_eq!(complex_to_real(&p), p);
        let pc = min_eig_problem(&CMatrix::diag(&[cr(1.0), cr(2.0)]), Field::Complex);
        assert_eq!(complex_to_real(&pc).blocks[0].dim, 4);
    }

    #[test]
    fn validation_and_json() {
        let mut p = min_eig_problem(&CMatrix::diag(&[cr(1.0), cr(2.0)]), Field::Complex);
        let back = SdpProblem::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, p);
        assert!(solve(&p, 1e-12).is_err());
        p.add_constraint(LinearForm::new().block(0, CMatrix::identity(3)), 1.0);
        assert!(matches!(p.validate(), Err(Error::DimensionMismatch(_))));
        let mut q = SdpProblem::new();
        let x = q.add_block("x", 2, Field::Complex);
        q.add_constraint(LinearForm::new().block(x, CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]])), 0.0);
        assert!(q.validate().is_err());
    }
}
