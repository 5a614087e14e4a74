//! Feasibility over a product of PSD cones intersected with an affine set.
//!
//! Variables are a list of Hermitian blocks `X_b`; constraints are real
//! linear functionals `Σ_b tr(C_b X_b) = t` with Hermitian coefficients. The
//! search alternates Dykstra-corrected projections onto the cones with the
//! closed-form least-norm projection onto the affine set. At doubling
//! iteration counts the current iterate is also "polished": its numerical
//! range fixes a face of the cone, the affine system is solved exactly on
//! that face, and the result is kept if it is feasible.

use nalgebra::{DMatrix, DVector};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{checked_svd, hermitian_basis, psd_sqrt, unvec_hermitian, vec_hermitian, ComplexMatrix, HermitianMatrix};

pub const DEFAULT_BUDGET: usize = 20_000;
pub const DEFAULT_CERT_TOL: f64 = 1e-7;

/// Relative singular-value cutoff for least-norm solves.
const RANK_CUTOFF: f64 = 1e-10;
const POLISH_THRESHOLDS: [f64; 3] = [1e-2, 1e-4, 1e-6];
const FIRST_POLISH: usize = 5;
/// Relative shift added before taking the square root that starts the
/// factored refinement, so that rank can grow.
const REFINE_INFLATION: f64 = 1e-4;
const REFINE_STEPS: usize = 400;
/// The refinement gives up once a window of this many steps fails to cut
/// the residual by `REFINE_STALL`.
const REFINE_WINDOW: usize = 25;
const REFINE_STALL: f64 = 0.5;

/// Linear map on Hermitian matrices, used for adjoints of constraint maps.
pub type HermitianMap<'a> = dyn Fn(&HermitianMatrix) -> HermitianMatrix + 'a;

/// `Σ_b tr(C_b X_b) = target`.
#[derive(Clone, Debug)]
pub struct AffineConstraint {
    pub terms: Vec<(usize, HermitianMatrix)>,
    pub target: f64,
}

#[derive(Clone, Debug, Default)]
pub struct FeasibilityProblem {
    dims: Vec<usize>,
    constraints: Vec<AffineConstraint>,
}

impl FeasibilityProblem {
    /// Problem with one PSD block of each listed dimension and no
    /// constraints yet.
    pub fn new(dims: Vec<usize>) -> Self {
        Self {
            dims,
            constraints: Vec::new(),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn constraints(&self) -> &[AffineConstraint] {
        &self.constraints
    }

    pub fn add_constraint(&mut self, constraint: AffineConstraint) {
        self.constraints.push(constraint);
    }

    /// Operator equation `Σ_b L_b(X_b) = rhs`, given the adjoint maps
    /// `L_b*`. One scalar constraint is added per element of an orthonormal
    /// Hermitian basis, so the constraint residual equals the Frobenius norm
    /// of the operator residual.
    pub fn add_operator_equation(
        &mut self,
        adjoints: &[(usize, &HermitianMap<'_>)],
        rhs: &HermitianMatrix,
    ) {
        for h in hermitian_basis(rhs.dim()) {
            let terms = adjoints.iter().map(|(b, adj)| (*b, adj(&h))).collect();
            self.constraints.push(AffineConstraint {
                terms,
                target: h.inner(rhs),
            });
        }
    }

    /// `Σ_{b∈blocks} X_b = 𝟙`.
    pub fn add_normalization(&mut self, blocks: &[usize]) {
        let Some(&first) = blocks.first() else {
            return;
        };
        let n = self.dims.get(first).copied().unwrap_or(0);
        let id = |h: &HermitianMatrix| h.clone();
        let adjoints: Vec<(usize, &HermitianMap<'_>)> =
            blocks.iter().map(|&b| (b, &id as &HermitianMap<'_>)).collect();
        self.add_operator_equation(&adjoints, &HermitianMatrix::identity(n));
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::IllFormedProblem("no variable blocks".into()));
        }
        if let Some(b) = self.dims.iter().position(|&d| d == 0) {
            return Err(Error::IllFormedProblem(format!("block {b} has dimension 0")));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if !c.target.is_finite() {
                return Err(Error::IllFormedProblem(format!("constraint {i} has a non-finite target")));
            }
            for (b, coef) in &c.terms {
                let Some(&d) = self.dims.get(*b) else {
                    return Err(Error::IllFormedProblem(format!(
                        "constraint {i} refers to block {b} of {}",
                        self.dims.len()
                    )));
                };
                if coef.dim() != d {
                    return Err(Error::IllFormedProblem(format!(
                        "constraint {i}: coefficient of dimension {} on block {b} of dimension {d}",
                        coef.dim()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Euclidean norm of the constraint violations at `solution`.
    pub fn residual(&self, solution: &[HermitianMatrix]) -> Result<f64> {
        self.validate()?;
        if solution.len() != self.dims.len()
            || solution.iter().zip(&self.dims).any(|(x, &d)| x.dim() != d)
        {
            return Err(Error::DimensionMismatch("solution does not match the block layout".into()));
        }
        let layout = Layout::new(&self.dims);
        let x = layout.flatten(solution);
        let (a, b) = layout.system(&self.constraints);
        Ok((&a * &x - &b).norm())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeasibilityStatus {
    Feasible,
    BudgetExhausted,
}

#[derive(Clone, Debug)]
pub struct FeasibilityOutcome {
    pub status: FeasibilityStatus,
    /// Present exactly when the status is feasible.
    pub solution: Option<Vec<HermitianMatrix>>,
    /// Constraint residual of the returned (or best) PSD iterate.
    pub residual: f64,
    pub iterations: usize,
    /// Least-squares residual of the affine system alone. No point, PSD or
    /// not, has a smaller residual, so a value above the tolerance refutes
    /// feasibility.
    pub lower_bound: f64,
}

impl FeasibilityOutcome {
    pub fn is_feasible(&self) -> bool {
        self.status == FeasibilityStatus::Feasible
    }

    /// Whether the affine system alone is inconsistent at `tol`.
    pub fn refuted(&self, tol: f64) -> bool {
        self.lower_bound > tol
    }
}

struct Layout {
    dims: Vec<usize>,
    offsets: Vec<usize>,
    len: usize,
}

impl Layout {
    fn new(dims: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(dims.len());
        let mut len = 0;
        for &d in dims {
            offsets.push(len);
            len += d * d;
        }
        Self {
            dims: dims.to_vec(),
            offsets,
            len,
        }
    }

    fn range(&self, b: usize) -> std::ops::Range<usize> {
        self.offsets[b]..self.offsets[b] + self.dims[b] * self.dims[b]
    }

    fn system(&self, constraints: &[AffineConstraint]) -> (DMatrix<f64>, DVector<f64>) {
        let mut a = DMatrix::zeros(constraints.len(), self.len);
        let mut b = DVector::zeros(constraints.len());
        let mut buf = Vec::new();
        for (i, c) in constraints.iter().enumerate() {
            b[i] = c.target;
            for (blk, coef) in &c.terms {
                buf.resize(self.dims[*blk] * self.dims[*blk], 0.0);
                vec_hermitian(coef.as_matrix(), &mut buf);
                for (k, col) in self.range(*blk).enumerate() {
                    a[(i, col)] += buf[k];
                }
            }
        }
        (a, b)
    }

    fn flatten(&self, blocks: &[HermitianMatrix]) -> DVector<f64> {
        let mut x = DVector::zeros(self.len);
        for (b, m) in blocks.iter().enumerate() {
            let r = self.range(b);
            vec_hermitian(m.as_matrix(), &mut x.as_mut_slice()[r]);
        }
        x
    }

    fn unflatten(&self, x: &DVector<f64>) -> Vec<HermitianMatrix> {
        (0..self.dims.len())
            .map(|b| unvec_hermitian(self.dims[b], &x.as_slice()[self.range(b)]))
            .collect()
    }

    fn project_psd(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.len);
        for b in 0..self.dims.len() {
            let r = self.range(b);
            let m = unvec_hermitian(self.dims[b], &x.as_slice()[r.clone()]);
            let p = if self.dims[b] == 1 {
                HermitianMatrix::diagonal(&[m[(0, 0)].re.max(0.0)])
            } else {
                crate::matrix::psd_project(&m)
            };
            vec_hermitian(p.as_matrix(), &mut out.as_mut_slice()[r]);
        }
        out
    }
}

/// Rank-revealing factorization of the constraint system: an orthonormal
/// basis `V` of the row space, the equivalent full-row-rank system
/// `(SVᵀ, Uᵀb)`, and the least-norm (least-squares) solution.
struct ReducedSystem {
    basis: DMatrix<f64>,
    rows: DMatrix<f64>,
    rhs: DVector<f64>,
    x0: DVector<f64>,
}

impl ReducedSystem {
    fn new(a: &DMatrix<f64>, b: &DVector<f64>) -> Self {
        let n = a.ncols();
        if a.nrows() == 0 || n == 0 {
            return Self {
                basis: DMatrix::zeros(n, 0),
                rows: DMatrix::zeros(0, n),
                rhs: DVector::zeros(0),
                x0: DVector::zeros(n),
            };
        }
        let svd = checked_svd(a);
        let smax = svd.singular_values.max();
        let s = &svd.singular_values;
        // singular values come out sorted in decreasing order
        let rank = s.iter().filter(|&&v| v > RANK_CUTOFF * smax && v > 0.0).count();
        let u = svd.u.as_ref().expect("requested left singular vectors").columns(0, rank).into_owned();
        let v_t = svd.v_t.as_ref().expect("requested right singular vectors").rows(0, rank).into_owned();
        let rhs = u.transpose() * b;
        let coords = DVector::from_fn(rank, |i, _| rhs[i] / s[i]);
        let x0 = v_t.transpose() * coords;
        let mut rows = v_t.clone();
        for i in 0..rank {
            rows.row_mut(i).scale_mut(s[i]);
        }
        Self {
            basis: v_t.transpose(),
            rows,
            rhs,
            x0,
        }
    }
}

/// Least-norm solution of `a·x = rhs` (least squares when inconsistent).
fn least_norm_solve(a: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    ReducedSystem::new(a, rhs).x0
}

/// Runs the alternating-projection search for at most `budget` iterations.
/// The outcome is feasible iff the returned PSD point meets every constraint
/// with residual at most `cert_tol`.
pub fn solve_feasibility(p: &FeasibilityProblem, budget: usize, cert_tol: f64) -> Result<FeasibilityOutcome> {
    p.validate()?;
    if !(cert_tol > 0.0 && cert_tol.is_finite()) {
        return Err(Error::InvalidParameter(format!("certificate tolerance {cert_tol} must be positive")));
    }
    let layout = Layout::new(&p.dims);
    let (a, b) = layout.system(&p.constraints);
    let reduced = ReducedSystem::new(&a, &b);
    let x0 = &reduced.x0;
    let lower_bound = (&a * x0 - &b).norm();
    if lower_bound > cert_tol {
        return Ok(FeasibilityOutcome {
            status: FeasibilityStatus::BudgetExhausted,
            solution: None,
            residual: lower_bound,
            iterations: 0,
            lower_bound,
        });
    }
    let basis = &reduced.basis;
    let project_affine = |x: &DVector<f64>| -> DVector<f64> {
        let d = x - x0;
        x - basis * (basis.transpose() * d)
    };
    let residual_of = |y: &DVector<f64>| (&a * y - &b).norm();

    let mut x = x0.clone();
    let mut correction = DVector::zeros(layout.len);
    let mut best = f64::INFINITY;
    let mut next_polish = FIRST_POLISH;
    for it in 0..=budget {
        let shifted = &x + &correction;
        let y = layout.project_psd(&shifted);
        correction = shifted - &y;
        let res = residual_of(&y);
        best = best.min(res);
        if res <= cert_tol {
            let (y, res) = match polish(&layout, &a, &b, &y) {
                Some((z, r)) if r < res => (z, r),
                _ => (y, res),
            };
            return Ok(feasible(&layout, &y, res, it, lower_bound));
        }
        if it == next_polish {
            next_polish *= 2;
            if let Some((z, r)) = polish(&layout, &a, &b, &y) {
                best = best.min(r);
                if r <= cert_tol {
                    return Ok(feasible(&layout, &z, r, it, lower_bound));
                }
            }
            if let Some(z) = refine_factored(&layout, &reduced, &y, cert_tol) {
                let r = residual_of(&z);
                best = best.min(r);
                if r <= cert_tol {
                    return Ok(feasible(&layout, &z, r, it, lower_bound));
                }
                // the refined point usually exposes the face of the solution
                if let Some((w, r)) = polish(&layout, &a, &b, &z) {
                    best = best.min(r);
                    if r <= cert_tol {
                        return Ok(feasible(&layout, &w, r, it, lower_bound));
                    }
                }
            }
        }
        x = project_affine(&y);
    }
    Ok(FeasibilityOutcome {
        status: FeasibilityStatus::BudgetExhausted,
        solution: None,
        residual: best,
        iterations: budget,
        lower_bound,
    })
}

fn feasible(layout: &Layout, y: &DVector<f64>, residual: f64, iterations: usize, lower_bound: f64) -> FeasibilityOutcome {
    FeasibilityOutcome {
        status: FeasibilityStatus::Feasible,
        solution: Some(layout.unflatten(y)),
        residual,
        iterations,
        lower_bound,
    }
}

/// Solves the affine system exactly on the face of the cone spanned by the
/// dominant eigenvectors of `y`, for a few eigenvalue thresholds, and
/// returns the best PSD candidate found.
fn polish(layout: &Layout, a: &DMatrix<f64>, b: &DVector<f64>, y: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
    let blocks = layout.unflatten(y);
    let eigs: Vec<_> = blocks.iter().map(|m| m.eig()).collect();
    let lmax = eigs.iter().map(|e| e.max()).fold(0.0f64, f64::max).max(1.0);
    let mut best: Option<(DVector<f64>, f64)> = None;
    let mut buf = Vec::new();
    for t in POLISH_THRESHOLDS {
        let cut = t * lmax;
        let frames: Vec<_> = eigs
            .iter()
            .map(|e| {
                let k = e.eigenvalues.iter().filter(|&&l| l > cut).count();
                e.eigenvectors.columns(0, k).into_owned()
            })
            .collect();
        let reduced = Layout::new(&frames.iter().map(|u| u.ncols()).collect::<Vec<_>>());
        if reduced.len == 0 {
            continue;
        }
        let mut ar = DMatrix::zeros(a.nrows(), reduced.len);
        for (blk, u) in frames.iter().enumerate() {
            let k = u.ncols();
            if k == 0 {
                continue;
            }
            let n = layout.dims[blk];
            let cols = layout.range(blk);
            buf.resize(k * k, 0.0);
            for i in 0..a.nrows() {
                let row = a.row(i);
                let coords: Vec<f64> = cols.clone().map(|c| row[c]).collect();
                if coords.iter().all(|&v| v == 0.0) {
                    continue;
                }
                let c = unvec_hermitian(n, &coords);
                let cr = u.adjoint() * c.as_matrix() * u;
                vec_hermitian(&cr, &mut buf);
                for (j, col) in reduced.range(blk).enumerate() {
                    ar[(i, col)] = buf[j];
                }
            }
        }
        let start = reduced.flatten(
            &blocks
                .iter()
                .zip(&frames)
                .map(|(m, u)| HermitianMatrix::hermitian_part(&(u.adjoint() * m.as_matrix() * u)))
                .collect::<Vec<_>>(),
        );
        let step = least_norm_solve(&ar, &(b - &ar * &start));
        let candidate = reduced.project_psd(&(start + step));
        let lifted: Vec<HermitianMatrix> = reduced
            .unflatten(&candidate)
            .iter()
            .zip(&frames)
            .map(|(m, u)| HermitianMatrix::hermitian_part(&(u * m.as_matrix() * u.adjoint())))
            .collect();
        let full = layout.flatten(&lifted);
        let r = (a * &full - b).norm();
        if best.as_ref().map_or(true, |(_, rb)| r < *rb) {
            best = Some((full, r));
        }
    }
    best
}

/// Gauss-Newton refinement in factored form `X_b = L_b L_b†`.
///
/// Alternating projections converge slowly when every solution lies on the
/// boundary of the cone. Starting from a slightly inflated square root of
/// the current iterate, minimum-norm Levenberg-Marquardt steps on
/// `‖A·vec(LL†) − b‖` usually land on such a boundary solution in a few
/// dozen steps; positivity holds by construction.
fn refine_factored(
    layout: &Layout,
    system: &ReducedSystem,
    start: &DVector<f64>,
    cert_tol: f64,
) -> Option<DVector<f64>> {
    let m = system.rows.nrows();
    let nblocks = layout.dims.len();
    // coefficient matrices of each reduced row on each block
    let coefs: Vec<Vec<Option<ComplexMatrix>>> = (0..m)
        .map(|i| {
            (0..nblocks)
                .map(|blk| {
                    let coords: Vec<f64> = layout.range(blk).map(|c| system.rows[(i, c)]).collect();
                    (!coords.iter().all(|v| v.abs() < 1e-300))
                        .then(|| unvec_hermitian(layout.dims[blk], &coords).into_matrix())
                })
                .collect()
        })
        .collect();
    let params: Vec<usize> = layout.dims.iter().map(|d| 2 * d * d).collect();
    let total: usize = params.iter().sum();
    let blocks = layout.unflatten(start);
    let lmax = blocks.iter().map(|b| b.eig().max()).fold(0.0f64, f64::max).max(1.0);
    let mut factors: Vec<ComplexMatrix> = blocks
        .iter()
        .map(|b| {
            let inflated = b.add_scaled(&HermitianMatrix::identity(b.dim()), REFINE_INFLATION * lmax);
            psd_sqrt(&inflated).into_matrix()
        })
        .collect();
    let evaluate = |factors: &[ComplexMatrix]| -> (DVector<f64>, DVector<f64>) {
        let x = layout.flatten(
            &factors
                .iter()
                .map(|l| HermitianMatrix::hermitian_part(&(l * l.adjoint())))
                .collect::<Vec<_>>(),
        );
        let r = &system.rows * &x - &system.rhs;
        (x, r)
    };
    let (mut x, mut r) = evaluate(&factors);
    let target = 1e-4 * cert_tol;
    let mut mu = -1.0;
    let mut checkpoint = r.norm();
    for step in 0..REFINE_STEPS {
        if r.norm() <= target {
            break;
        }
        if step > 0 && step % REFINE_WINDOW == 0 {
            if r.norm() > REFINE_STALL * checkpoint {
                break;
            }
            checkpoint = r.norm();
        }
        // ∂/∂Re L_pq tr(C LL†) = 2 Re (CL)_pq, ∂/∂Im L_pq = 2 Im (CL)_pq
        let mut jac = DMatrix::zeros(m, total);
        for (i, row) in coefs.iter().enumerate() {
            let mut offset = 0;
            for (blk, c) in row.iter().enumerate() {
                if let Some(c) = c {
                    let cl = c * &factors[blk];
                    for (k, z) in cl.iter().enumerate() {
                        jac[(i, offset + 2 * k)] = 2.0 * z.re;
                        jac[(i, offset + 2 * k + 1)] = 2.0 * z.im;
                    }
                }
                offset += params[blk];
            }
        }
        let gram = &jac * jac.transpose();
        if mu < 0.0 {
            mu = 1e-6 * gram.trace() / m.max(1) as f64;
        }
        let mut improved = false;
        for _ in 0..8 {
            let shifted = &gram + DMatrix::identity(m, m) * mu;
            let Some(chol) = shifted.cholesky() else {
                mu *= 10.0;
                continue;
            };
            let step = -(jac.transpose() * chol.solve(&r));
            let mut offset = 0;
            let trial: Vec<ComplexMatrix> = factors
                .iter()
                .enumerate()
                .map(|(blk, l)| {
                    let mut l = l.clone();
                    for (k, z) in l.iter_mut().enumerate() {
                        *z += Complex64::new(step[offset + 2 * k], step[offset + 2 * k + 1]);
                    }
                    offset += params[blk];
                    l
                })
                .collect();
            let (tx, tr) = evaluate(&trial);
            if tr.norm() < r.norm() {
                factors = trial;
                x = tx;
                r = tr;
                mu = (mu / 3.0).max(1e-15);
                improved = true;
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
    }
    Some(x)
}
