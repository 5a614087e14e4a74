//! Post-processing preorder between observables and extremality tests.

use crate::dilation::minimal_naimark;
use crate::error::{Error, Result};
use crate::matrix::{gram_rank, hermitian_basis, ComplexMatrix, HermitianMatrix};
use crate::observables::{Povm, Relabeling, ZERO_EFFECT_TOL};
use crate::oracle::refute_post_processing;
use crate::realization::feasibility::{
    solve_feasibility, AffineConstraint, FeasibilityProblem, HermitianMap, DEFAULT_BUDGET, DEFAULT_CERT_TOL,
};

/// Absolute singular-value cutoff when counting independent operators.
pub const EXTREMALITY_TOL: f64 = 1e-9;
/// Smallest-eigenvalue threshold of the real Gram matrix of the effects.
pub const NULL_SPACE_TOL: f64 = 1e-9;

/// Column-stochastic matrix `p(k|j)`: rows follow the outcomes of the
/// post-processed observable, columns the outcomes of the source.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl StochasticMatrix {
    /// Row-major entries; checks nonnegativity and unit column sums up to
    /// `tol`.
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>, tol: f64) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::InvalidStochasticMatrix(format!(
                "{} entries do not fill a {rows}×{cols} matrix",
                entries.len()
            )));
        }
        if let Some(x) = entries.iter().find(|x| !x.is_finite() || **x < -tol) {
            return Err(Error::InvalidStochasticMatrix(format!("entry {x} is negative")));
        }
        let m = Self { rows, cols, entries };
        for j in 0..cols {
            let s = m.column_sum(j);
            if (s - 1.0).abs() > tol {
                return Err(Error::InvalidStochasticMatrix(format!("column {j} sums to {s}")));
            }
        }
        Ok(m)
    }

    pub fn from_columns(columns: &[Vec<f64>], tol: f64) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::InvalidStochasticMatrix("ragged columns".into()));
        }
        let entries = (0..rows)
            .flat_map(|k| columns.iter().map(move |c| c[k]))
            .collect();
        Self::new(rows, cols, entries, tol)
    }

    pub fn identity(n: usize) -> Self {
        let entries = (0..n * n).map(|i| if i / n == i % n { 1.0 } else { 0.0 }).collect();
        Self { rows: n, cols: n, entries }
    }

    /// 0/1 matrix of `f`, with columns in the order of `source` and rows in
    /// the order of `target`.
    pub fn from_relabeling(f: &Relabeling, source: &[usize], target: &[usize]) -> Result<Self> {
        let mut entries = vec![0.0; source.len() * target.len()];
        for (j, &x) in source.iter().enumerate() {
            let y = f.get(x).ok_or(Error::IncompleteRelabeling(x))?;
            let k = target
                .iter()
                .position(|&t| t == y)
                .ok_or(Error::IncompleteRelabeling(x))?;
            entries[k * source.len() + j] = 1.0;
        }
        Self::new(target.len(), source.len(), entries, 0.0)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.entries[k * self.cols + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        (0..self.rows).map(|k| self.get(k, j)).sum()
    }

    /// Matrix product `self · inner`: first `inner`, then `self`.
    pub fn compose(&self, inner: &StochasticMatrix) -> Result<StochasticMatrix> {
        if self.cols != inner.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose {}×{} after {}×{}",
                self.rows, self.cols, inner.rows, inner.cols
            )));
        }
        let entries = (0..self.rows)
            .flat_map(|k| {
                (0..inner.cols)
                    .map(move |j| (0..self.cols).map(|m| self.get(k, m) * inner.get(m, j)).sum())
            })
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: inner.cols,
            entries,
        })
    }

    /// Post-processed observable `A^p(k) = Σ_j p(k|j)A(j)` with outcomes
    /// `0..rows`.
    pub fn apply(&self, a: &Povm) -> Result<Povm> {
        if a.len() != self.cols {
            return Err(Error::OutcomeMismatch);
        }
        let effects = (0..self.rows)
            .map(|k| {
                a.effects()
                    .iter()
                    .enumerate()
                    .fold(HermitianMatrix::zeros(a.dim()), |acc, (j, e)| acc.add_scaled(e, self.get(k, j)))
            })
            .collect();
        Ok(Povm::from_parts(a.dim(), (0..self.rows).collect(), effects))
    }
}

/// Knobs shared by the searches in this module and in realization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub budget: usize,
    pub cert_tol: f64,
    /// Grid resolution for the brute-force refutation oracles; `None`
    /// leaves them off.
    pub grid: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            cert_tol: DEFAULT_CERT_TOL,
            grid: None,
        }
    }
}

/// Result of a one-directional post-processing search.
#[derive(Clone, Debug)]
pub struct PostProcessingSearch {
    pub witness: Option<StochasticMatrix>,
    pub residual: f64,
    pub iterations: usize,
    /// Set when no stochastic matrix can satisfy the equations: the linear
    /// system is inconsistent, a [`SeparatingTest`] was found, or the grid
    /// oracle rules it out.
    pub refuted: bool,
}

/// `(Σ_k ‖B(k) − Σ_j p(k|j)A(j)‖_F²)^{1/2}`.
pub fn post_processing_residual(b: &Povm, a: &Povm, p: &StochasticMatrix) -> Result<f64> {
    if b.dim() != a.dim() {
        return Err(Error::DimensionMismatch(format!("dimensions {} and {}", b.dim(), a.dim())));
    }
    if p.rows() != b.len() || p.cols() != a.len() {
        return Err(Error::OutcomeMismatch);
    }
    let image = p.apply(a)?;
    Ok(image
        .effects()
        .iter()
        .zip(b.effects())
        .map(|(x, y)| x.distance(y).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Searches for `p` with `B(k) = Σ_j p(k|j)A(j)`.
pub fn search_post_processing(b: &Povm, a: &Povm, opts: &SolverOptions) -> Result<PostProcessingSearch> {
    if b.dim() != a.dim() {
        return Err(Error::DimensionMismatch(format!(
            "target acts on dimension {}, source on {}",
            b.dim(),
            a.dim()
        )));
    }
    let (mb, ma) = (b.len(), a.len());
    let mut problem = FeasibilityProblem::new(vec![1; mb * ma]);
    let adjoints: Vec<Box<HermitianMap<'static>>> = a
        .effects()
        .iter()
        .map(|e| {
            let e = e.clone();
            Box::new(move |h: &HermitianMatrix| HermitianMatrix::diagonal(&[h.inner(&e)]))
                as Box<HermitianMap<'static>>
        })
        .collect();
    for (k, bk) in b.effects().iter().enumerate() {
        let terms: Vec<(usize, &HermitianMap<'_>)> =
            (0..ma).map(|j| (k * ma + j, adjoints[j].as_ref())).collect();
        problem.add_operator_equation(&terms, bk);
    }
    for j in 0..ma {
        let column: Vec<usize> = (0..mb).map(|k| k * ma + j).collect();
        problem.add_normalization(&column);
    }
    let out = solve_feasibility(&problem, opts.budget, opts.cert_tol)?;
    let mut refuted = out.refuted(opts.cert_tol);
    let witness = match &out.solution {
        Some(sol) => {
            let entries = sol.iter().map(|x| x[(0, 0)].re).collect();
            Some(StochasticMatrix::new(mb, ma, entries, opts.cert_tol)?)
        }
        None => None,
    };
    if witness.is_none() && !refuted {
        refuted = separating_test(b, a, opts)?.is_some();
    }
    if witness.is_none() && !refuted {
        if let Some(res) = opts.grid {
            refuted = refute_post_processing(b, a, res, opts.cert_tol).is_some_and(|v| v.refuted);
        }
    }
    Ok(PostProcessingSearch {
        witness,
        residual: out.residual,
        iterations: out.iterations,
        refuted,
    })
}

/// Dual certificate that no `p` exists: Hermitian `Y_k` and reals `z_j`
/// with `s_kj = tr(Y_k A(j)) + z_j ≥ 0` for all `k, j` and
/// `Σ_k tr(Y_k B(k)) + Σ_j z_j = −1`.
#[derive(Clone, Debug)]
pub struct SeparatingTest {
    pub weights: Vec<HermitianMatrix>,
    pub offsets: Vec<f64>,
    /// `−(Σ_k tr(Y_k B(k)) + Σ_j z_j) − slack`; positive for a valid
    /// certificate.
    pub margin: f64,
}

/// Searches for a [`SeparatingTest`] and keeps it only if it rules out every
/// nonnegative `p` whose residual is within `opts.cert_tol`.
///
/// For such `p`, `Σ_kj p_kj s_kj = Σ_k tr(Y_k B(k)) + Σ_j z_j + ⟨y, r⟩`
/// with `r` the residual vector, while `Σ_kj p_kj ≤ m_A + √m_A·tol`. So
/// `min s ≥ −δ` and `⟨y, b⟩ + δ(m_A + √m_A·tol) + ‖y‖·tol < 0` exclude it.
pub fn separating_test(b: &Povm, a: &Povm, opts: &SolverOptions) -> Result<Option<SeparatingTest>> {
    if b.dim() != a.dim() {
        return Err(Error::DimensionMismatch(format!(
            "target acts on dimension {}, source on {}",
            b.dim(),
            a.dim()
        )));
    }
    let (mb, ma) = (b.len(), a.len());
    let basis = hermitian_basis(a.dim());
    let nc = basis.len();
    // blocks: [Y⁺_kc, Y⁻_kc] for k, c; then [z⁺_j, z⁻_j]; then s_kj
    let y_var = |k: usize, c: usize, sign: usize| 2 * (k * nc + c) + sign;
    let z_var = |j: usize, sign: usize| 2 * (mb * nc + j) + sign;
    let s_var = |k: usize, j: usize| 2 * (mb * nc + ma) + k * ma + j;
    let one = HermitianMatrix::identity(1);
    let mut problem = FeasibilityProblem::new(vec![1; 2 * (mb * nc + ma) + mb * ma]);
    for k in 0..mb {
        for j in 0..ma {
            let mut terms = Vec::new();
            for (c, e) in basis.iter().enumerate() {
                let w = e.inner(&a.effects()[j]);
                terms.push((y_var(k, c, 0), one.scale(w)));
                terms.push((y_var(k, c, 1), one.scale(-w)));
            }
            terms.push((z_var(j, 0), one.clone()));
            terms.push((z_var(j, 1), one.scale(-1.0)));
            terms.push((s_var(k, j), one.scale(-1.0)));
            problem.add_constraint(AffineConstraint { terms, target: 0.0 });
        }
    }
    let mut terms = Vec::new();
    for (k, bk) in b.effects().iter().enumerate() {
        for (c, e) in basis.iter().enumerate() {
            let w = e.inner(bk);
            terms.push((y_var(k, c, 0), one.scale(w)));
            terms.push((y_var(k, c, 1), one.scale(-w)));
        }
    }
    for j in 0..ma {
        terms.push((z_var(j, 0), one.clone()));
        terms.push((z_var(j, 1), one.scale(-1.0)));
    }
    problem.add_constraint(AffineConstraint { terms, target: -1.0 });

    let out = solve_feasibility(&problem, opts.budget, opts.cert_tol)?;
    let Some(sol) = out.solution else {
        return Ok(None);
    };
    let value = |i: usize| sol[i][(0, 0)].re;
    let weights: Vec<HermitianMatrix> = (0..mb)
        .map(|k| {
            basis
                .iter()
                .enumerate()
                .fold(HermitianMatrix::zeros(a.dim()), |acc, (c, e)| {
                    acc.add_scaled(e, value(y_var(k, c, 0)) - value(y_var(k, c, 1)))
                })
        })
        .collect();
    let offsets: Vec<f64> = (0..ma).map(|j| value(z_var(j, 0)) - value(z_var(j, 1))).collect();
    // re-derive everything from (Y, z) alone
    let mut delta: f64 = 0.0;
    for y in &weights {
        for (j, e) in a.effects().iter().enumerate() {
            delta = delta.max(-(y.inner(e) + offsets[j]));
        }
    }
    let objective: f64 = weights.iter().zip(b.effects()).map(|(y, e)| y.inner(e)).sum::<f64>() + offsets.iter().sum::<f64>();
    let norm = (weights.iter().map(|y| y.inner(y)).sum::<f64>() + offsets.iter().map(|z| z * z).sum::<f64>()).sqrt();
    let tol = opts.cert_tol;
    let slack = delta * (ma as f64 + (ma as f64).sqrt() * tol) + norm * tol;
    let margin = -objective - slack;
    Ok((margin > 0.0).then_some(SeparatingTest {
        weights,
        offsets,
        margin,
    }))
}

/// Stochastic `p` with `B = A^p`, if the search certifies one.
pub fn find_post_processing(b: &Povm, a: &Povm) -> Result<Option<StochasticMatrix>> {
    Ok(search_post_processing(b, a, &SolverOptions::default())?.witness)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    /// `A ≾ B` only.
    Below,
    /// `B ≾ A` only.
    Above,
    Equivalent,
    Incomparable,
    Undecided,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Below => "below",
            Relation::Above => "above",
            Relation::Equivalent => "equivalent",
            Relation::Incomparable => "incomparable",
            Relation::Undecided => "undecided",
        }
    }
}

/// Outcome of [`compare`]. `forward` witnesses `A = B^p`, `backward`
/// witnesses `B = A^p`.
#[derive(Clone, Debug)]
pub struct OrderVerdict {
    pub relation: Relation,
    pub forward: Option<StochasticMatrix>,
    pub backward: Option<StochasticMatrix>,
    pub forward_residual: f64,
    pub backward_residual: f64,
}

pub fn compare(a: &Povm, b: &Povm) -> Result<OrderVerdict> {
    compare_with(a, b, &SolverOptions::default())
}

pub fn compare_with(a: &Povm, b: &Povm, opts: &SolverOptions) -> Result<OrderVerdict> {
    let fwd = search_post_processing(a, b, opts)?;
    let bwd = search_post_processing(b, a, opts)?;
    let relation = match (
        fwd.witness.is_some(),
        fwd.refuted,
        bwd.witness.is_some(),
        bwd.refuted,
    ) {
        (true, _, true, _) => Relation::Equivalent,
        (true, _, false, true) => Relation::Below,
        (false, true, true, _) => Relation::Above,
        (false, true, false, true) => Relation::Incomparable,
        _ => Relation::Undecided,
    };
    Ok(OrderVerdict {
        relation,
        forward: fwd.witness,
        backward: bwd.witness,
        forward_residual: fwd.residual,
        backward_residual: bwd.residual,
    })
}

/// Extremality via linear independence of `{|d_{j,k}⟩⟨d_{j,l}|}` built from
/// the minimal dilation's spectral vectors.
pub fn is_extreme(a: &Povm) -> bool {
    let Ok(dil) = minimal_naimark(a) else {
        return false;
    };
    let mut ops: Vec<ComplexMatrix> = Vec::new();
    let mut expected = 0;
    for idx in 0..a.len() {
        let vs = dil.spectral_vectors(idx).unwrap_or_default();
        expected += vs.len() * vs.len();
        for vk in &vs {
            for vl in &vs {
                ops.push(vk * vl.adjoint());
            }
        }
    }
    gram_rank(&ops, EXTREMALITY_TOL) == expected
}

/// For linearly dependent effects, a pair `A₊ ≠ A₋` with
/// `A = ½A₊ + ½A₋`, from a real null vector `c` of the effects:
/// `A±(j) = (1 ± c_j/c)A(j)` with `c = Σ_j |c_j|`.
pub fn extremality_counterexample(a: &Povm) -> Option<(Povm, Povm)> {
    let live: Vec<usize> = (0..a.len())
        .filter(|&j| a.effects()[j].norm() > ZERO_EFFECT_TOL)
        .collect();
    let n = live.len();
    if n < 2 {
        return None;
    }
    let gram = nalgebra::DMatrix::from_fn(n, n, |i, j| a.effects()[live[i]].inner(&a.effects()[live[j]]));
    let eig = nalgebra::SymmetricEigen::new(gram);
    let (imin, &lmin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))?;
    if lmin > NULL_SPACE_TOL {
        return None;
    }
    let mut c: Vec<f64> = eig.eigenvectors.column(imin).iter().copied().collect();
    let big = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = c.iter().find(|x| x.abs() > 1e-12 * big) {
        if *first < 0.0 {
            c.iter_mut().for_each(|x| *x = -*x);
        }
    }
    let total: f64 = c.iter().map(|x| x.abs()).sum();
    let mut plus = a.effects().to_vec();
    let mut minus = a.effects().to_vec();
    for (i, &j) in live.iter().enumerate() {
        let r = c[i] / total;
        plus[j] = a.effects()[j].scale(1.0 + r);
        minus[j] = a.effects()[j].scale(1.0 - r);
    }
    Some((
        Povm::from_parts(a.dim(), a.outcomes().to_vec(), plus),
        Povm::from_parts(a.dim(), a.outcomes().to_vec(), minus),
    ))
}
