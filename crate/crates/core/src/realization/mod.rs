//! Sequential realizations: observables `B = Λ_A*∘B′` and channels
//! `Λ = Γ∘Λ_A`, channel equivalence certificates, and sequential joint
//! observables.
//!
//! Both searches restrict the unknown to the block structure that the
//! known channels already have. If `Λ₁` maps into block-diagonal operators,
//! any solution `Γ` may be replaced by `Γ∘𝔼`, with `𝔼` the pinching onto
//! those blocks, and the same holds on the output side for the target
//! channel; the reduced problems therefore have the same solutions.

pub mod feasibility;

use std::collections::BTreeMap;

use crate::analysis::SolverOptions;
use crate::channels::{Channel, CHOI_CUTOFF};
use crate::dilation::{minimal_naimark, NaimarkDilation};
use crate::error::{Error, Result};
use crate::matrix::{basis_vector, c64, hermitian_basis, kron, ComplexMatrix, ComplexVector, HermitianMatrix};
use crate::random::{gaussian_vector, rng_from_seed};
use crate::observables::{Instrument, Povm};
use crate::oracle::refute_channel_factorization;

pub use feasibility::{
    solve_feasibility, AffineConstraint, FeasibilityOutcome, FeasibilityProblem, FeasibilityStatus, HermitianMap,
    DEFAULT_BUDGET, DEFAULT_CERT_TOL,
};

/// Entries below this magnitude do not link output indices into a block.
const BLOCK_TOL: f64 = 1e-12;
/// Relative eigenvalue threshold for kernels when exposing faces.
const FACE_TOL: f64 = 1e-9;
const FACE_SEED: u64 = 0x5eed;

type Adjoint<'a> = &'a dyn Fn(&HermitianMatrix) -> HermitianMatrix;

/// Result of a realization search.
#[derive(Clone, Debug)]
pub struct Realization<T> {
    pub status: FeasibilityStatus,
    pub witness: Option<T>,
    /// Frobenius residual of the witness, or of the best iterate when none
    /// was found.
    pub residual: f64,
    pub iterations: usize,
    /// Set when infeasibility is proven: the linear constraints alone are
    /// inconsistent, or the grid oracle (if enabled) rules out a solution.
    pub refuted: bool,
}

impl<T> Realization<T> {
    pub fn is_feasible(&self) -> bool {
        self.status == FeasibilityStatus::Feasible
    }
}

fn check_same_dim(what: &str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!("{what}: dimensions {a} and {b}")));
    }
    Ok(())
}

/// Observable `B′` on the minimal dilation space of `A` with
/// `Λ_A*∘B′ = B`, if the search certifies one.
pub fn realize_observable_after(a: &Povm, b: &Povm) -> Result<Option<Povm>> {
    Ok(realize_observable_after_with(a, b, &SolverOptions::default())?.witness)
}

pub fn realize_observable_after_with(a: &Povm, b: &Povm, opts: &SolverOptions) -> Result<Realization<Povm>> {
    check_same_dim("realize_observable_after", a.dim(), b.dim())?;
    let dil = minimal_naimark(a)?;
    let reduced = realize_in_commutant(&dil, b, opts)?;
    if reduced.is_feasible() || reduced.refuted {
        return Ok(reduced);
    }
    let full = realize_on_full_space(&dil, b, opts)?;
    Ok(if full.is_feasible() { full } else { reduced })
}

/// Search over `B′(k) = ⊕_j X_{k,j}` block-diagonal in the dilation blocks.
fn realize_in_commutant(dil: &NaimarkDilation, b: &Povm, opts: &SolverOptions) -> Result<Realization<Povm>> {
    let blocks: Vec<_> = dil
        .blocks()
        .expect("minimal dilations are in block form")
        .iter()
        .filter(|r| !r.is_empty())
        .cloned()
        .collect();
    let nb = blocks.len();
    let frames: Vec<ComplexMatrix> = blocks.iter().map(|r| dil.isometry().rows(r.start, r.len()).into_owned()).collect();
    let dims: Vec<usize> = (0..b.len()).flat_map(|_| blocks.iter().map(|r| r.len())).collect();
    let mut problem = FeasibilityProblem::new(dims);
    // Λ_A*(X) = Σ_j D_j† X_j D_j, adjoint H ↦ D_j H D_j†
    let adjoints: Vec<Box<HermitianMap<'static>>> = frames
        .iter()
        .map(|d| {
            let d = d.clone();
            Box::new(move |h: &HermitianMatrix| h.conjugate_by(&d)) as Box<HermitianMap<'static>>
        })
        .collect();
    for (k, bk) in b.effects().iter().enumerate() {
        let terms: Vec<(usize, Adjoint)> = (0..nb).map(|j| (k * nb + j, adjoints[j].as_ref())).collect();
        problem.add_operator_equation(&terms, bk);
    }
    for j in 0..nb {
        problem.add_normalization(&(0..b.len()).map(|k| k * nb + j).collect::<Vec<_>>());
    }
    let out = solve_feasibility(&problem, opts.budget, opts.cert_tol)?;
    let m = dil.dil_dim();
    let witness = out.solution.as_ref().map(|sol| {
        let effects = (0..b.len())
            .map(|k| {
                let mut x = ComplexMatrix::zeros(m, m);
                for (j, r) in blocks.iter().enumerate() {
                    x.view_mut((r.start, r.start), (r.len(), r.len()))
                        .copy_from(sol[k * nb + j].as_matrix());
                }
                HermitianMatrix::hermitian_part(&x)
            })
            .collect();
        Povm::from_parts(m, b.outcomes().to_vec(), effects)
    });
    Ok(Realization {
        status: out.status,
        witness,
        residual: out.residual,
        iterations: out.iterations,
        refuted: out.refuted(opts.cert_tol),
    })
}

fn realize_on_full_space(dil: &NaimarkDilation, b: &Povm, opts: &SolverOptions) -> Result<Realization<Povm>> {
    let m = dil.dil_dim();
    let channel = dil.least_disturbing_channel();
    let mut problem = FeasibilityProblem::new(vec![m; b.len()]);
    let adjoint = |h: &HermitianMatrix| channel.apply_hermitian(h);
    for (k, bk) in b.effects().iter().enumerate() {
        problem.add_operator_equation(&[(k, &adjoint)], bk);
    }
    problem.add_normalization(&(0..b.len()).collect::<Vec<_>>());
    let out = solve_feasibility(&problem, opts.budget, opts.cert_tol)?;
    let witness = out
        .solution
        .map(|sol| Povm::from_parts(m, b.outcomes().to_vec(), sol));
    Ok(Realization {
        status: out.status,
        witness,
        residual: out.residual,
        iterations: out.iterations,
        refuted: out.lower_bound > opts.cert_tol,
    })
}

/// Index sets of the finest block-diagonal structure shared by all outputs
/// of `lambda`: two output indices are linked when some `Λ(|a⟩⟨b|)` has a
/// nonzero entry between them.
pub fn output_blocks(lambda: &Channel) -> Vec<Vec<usize>> {
    let n = lambda.out_dim();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        parent[x] = r;
        r
    }
    for a in 0..lambda.in_dim() {
        for b in 0..lambda.in_dim() {
            let y = lambda.apply_operator(&crate::matrix::matrix_unit(lambda.in_dim(), a, b));
            for i in 0..n {
                for j in i + 1..n {
                    if y[(i, j)].norm() > BLOCK_TOL {
                        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                        if ri != rj {
                            parent[ri.max(rj)] = ri.min(rj);
                        }
                    }
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

fn restrict(m: &ComplexMatrix, idx: &[usize]) -> HermitianMatrix {
    HermitianMatrix::hermitian_part(&ComplexMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])]))
}

/// Frobenius norm of `Γ∘Λ₁ − Λ` summed over an orthonormal Hermitian basis
/// of the input.
pub fn factorization_residual(gamma: &Channel, lambda1: &Channel, lambda: &Channel) -> Result<f64> {
    let composed = crate::channels::compose(gamma, lambda1)?;
    check_same_dim("factorization_residual", composed.out_dim(), lambda.out_dim())?;
    check_same_dim("factorization_residual", composed.in_dim(), lambda.in_dim())?;
    Ok(hermitian_basis(lambda.in_dim())
        .iter()
        .map(|x| composed.apply_hermitian(x).distance(&lambda.apply_hermitian(x)).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Choi-block formulation of `Γ∘Λ₁ = Λ`: one PSD variable per pair of an
/// input block `j` of `Λ₁` and an output block `k` of `Λ`, written as
/// `C_jk = U_jk Z_jk U_jk†` with `U_jk` an isometry onto the allowed face.
struct ChannelProblem {
    problem: FeasibilityProblem,
    ins: Vec<Vec<usize>>,
    outs: Vec<Vec<usize>>,
    /// Per block pair: variable index and face isometry, `None` when the
    /// face is trivial.
    frames: Vec<Option<(usize, ComplexMatrix)>>,
}

impl ChannelProblem {
    /// With `reduce`, each block is confined to the face exposed by pure
    /// inputs: for `ψ` and any `v` in the kernel of `Λ(ψψ†)`, every solution
    /// has `⟨v|Γ(Λ₁(ψψ†))|v⟩ = 0`, so its Choi matrix is orthogonal to
    /// `conj(Λ₁(ψψ†)) ⊗ |v⟩⟨v|`. Without it the faces are whole blocks.
    fn new(lambda1: &Channel, lambda: &Channel, reduce: bool) -> Option<Self> {
        let din = lambda1.in_dim();
        let ins = output_blocks(lambda1);
        let outs = output_blocks(lambda);
        let exposing = reduce.then(|| exposing_operators(lambda1, lambda, &ins, &outs));
        let mut frames = Vec::with_capacity(ins.len() * outs.len());
        let mut dims = Vec::new();
        for (j, bj) in ins.iter().enumerate() {
            for (k, bk) in outs.iter().enumerate() {
                let n = bj.len() * bk.len();
                let u = match &exposing {
                    Some(w) => {
                        let eig = w[j * outs.len() + k].eig();
                        let cut = FACE_TOL * eig.max().max(1.0);
                        let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] <= cut).collect();
                        ComplexMatrix::from_fn(n, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])])
                    }
                    None => ComplexMatrix::identity(n, n),
                };
                if u.ncols() == 0 {
                    frames.push(None);
                } else {
                    frames.push(Some((dims.len(), u.clone())));
                    dims.push(u.ncols());
                }
            }
        }
        if dims.is_empty() {
            return None;
        }
        let mut problem = FeasibilityProblem::new(dims);
        let pairs = |frames: &[Option<(usize, ComplexMatrix)>], j: usize| -> Vec<(usize, usize, ComplexMatrix)> {
            (0..outs.len())
                .filter_map(|k| frames[j * outs.len() + k].as_ref().map(|(v, u)| (k, *v, u.clone())))
                .collect()
        };

        // ⟨F, Γ(Y)⟩ = ⟨Yᵀ ⊗ F, C⟩ on every block pair
        for x in hermitian_basis(din) {
            let y = lambda1.apply_operator(x.as_matrix());
            let t = lambda.apply_operator(x.as_matrix());
            type Map = Box<HermitianMap<'static>>;
            let mut maps: Vec<Vec<(usize, Map)>> = (0..outs.len()).map(|_| Vec::new()).collect();
            for (j, bj) in ins.iter().enumerate() {
                let ytj = restrict(&y, bj).as_matrix().transpose();
                for (k, var, u) in pairs(&frames, j) {
                    let ytj = ytj.clone();
                    let map: Map =
                        Box::new(move |f: &HermitianMatrix| HermitianMatrix::hermitian_part(&kron(&ytj, f.as_matrix())).conjugate_by(&u.adjoint()));
                    maps[k].push((var, map));
                }
            }
            for (k, bk) in outs.iter().enumerate() {
                let terms: Vec<(usize, Adjoint)> = maps[k].iter().map(|(v, m)| (*v, m.as_ref())).collect();
                problem.add_operator_equation(&terms, &restrict(&t, bk));
            }
        }
        // trace preservation: Σ_k ⟨G ⊗ 𝟙, C_jk⟩ = tr G
        for (j, bj) in ins.iter().enumerate() {
            let maps: Vec<(usize, Box<HermitianMap<'static>>)> = pairs(&frames, j)
                .into_iter()
                .map(|(k, var, u)| {
                    let id = ComplexMatrix::identity(outs[k].len(), outs[k].len());
                    let map: Box<HermitianMap<'static>> =
                        Box::new(move |g: &HermitianMatrix| HermitianMatrix::hermitian_part(&kron(g.as_matrix(), &id)).conjugate_by(&u.adjoint()));
                    (var, map)
                })
                .collect();
            let terms: Vec<(usize, Adjoint)> = maps.iter().map(|(v, m)| (*v, m.as_ref())).collect();
            problem.add_operator_equation(&terms, &HermitianMatrix::identity(bj.len()));
        }
        Some(Self {
            problem,
            ins,
            outs,
            frames,
        })
    }

    /// Choi matrix of `Γ` on the full output space of `Λ₁`.
    fn choi(&self, sol: &[HermitianMatrix], m: usize, dout: usize) -> ComplexMatrix {
        let mut choi = ComplexMatrix::zeros(m * dout, m * dout);
        for (j, bj) in self.ins.iter().enumerate() {
            for (k, bk) in self.outs.iter().enumerate() {
                let Some((var, u)) = &self.frames[j * self.outs.len() + k] else {
                    continue;
                };
                let c = u * sol[*var].as_matrix() * u.adjoint();
                let s = bk.len();
                for r in 0..c.nrows() {
                    for q in 0..c.ncols() {
                        let gr = bj[r / s] * dout + bk[r % s];
                        let gq = bj[q / s] * dout + bk[q % s];
                        choi[(gr, gq)] = c[(r, q)];
                    }
                }
            }
        }
        choi
    }
}

/// Pure inputs used to expose faces: basis states, their pairwise
/// superpositions, and a few seeded random states.
fn probe_states(din: usize) -> Vec<ComplexVector> {
    let mut states = Vec::new();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for a in 0..din {
        states.push(basis_vector(din, a));
        for b in a + 1..din {
            for phase in [c64(s, 0.0), c64(0.0, s)] {
                let mut v = ComplexVector::zeros(din);
                v[a] = c64(s, 0.0);
                v[b] = phase;
                states.push(v);
            }
        }
    }
    let mut rng = rng_from_seed(FACE_SEED);
    for _ in 0..din + 2 {
        let g = gaussian_vector(din, &mut rng);
        let norm = g.norm();
        states.push(g / c64(norm, 0.0));
    }
    states
}

/// `W_jk = Σ_ψ conj(Λ₁(ψψ†)_j) ⊗ P_ker(Λ(ψψ†)_k)`, indexed like the block
/// pairs.
fn exposing_operators(lambda1: &Channel, lambda: &Channel, ins: &[Vec<usize>], outs: &[Vec<usize>]) -> Vec<HermitianMatrix> {
    let mut w: Vec<ComplexMatrix> = ins
        .iter()
        .flat_map(|bj| outs.iter().map(move |bk| ComplexMatrix::zeros(bj.len() * bk.len(), bj.len() * bk.len())))
        .collect();
    for psi in probe_states(lambda1.in_dim()) {
        let rho = &psi * psi.adjoint();
        let y = lambda1.apply_operator(&rho);
        let t = lambda.apply_operator(&rho);
        let kernels: Vec<ComplexMatrix> = outs
            .iter()
            .map(|bk| {
                let eig = restrict(&t, bk).eig();
                let cut = FACE_TOL * eig.max().max(1.0);
                (0..bk.len())
                    .filter(|&i| eig.eigenvalues[i] <= cut)
                    .fold(ComplexMatrix::zeros(bk.len(), bk.len()), |acc, i| {
                        let v = eig.eigenvectors.column(i);
                        acc + v * v.adjoint()
                    })
            })
            .collect();
        for (j, bj) in ins.iter().enumerate() {
            let yj = restrict(&y, bj).as_matrix().map(|z| z.conj());
            for (k, kernel) in kernels.iter().enumerate() {
                w[j * outs.len() + k] += kron(&yj, kernel);
            }
        }
    }
    w.iter().map(HermitianMatrix::hermitian_part).collect()
}

/// Channel `Γ` with `Λ = Γ∘Λ₁`, searched over Choi matrices.
pub fn realize_channel_through(lambda1: &Channel, lambda: &Channel, opts: &SolverOptions) -> Result<Realization<Channel>> {
    check_same_dim("realize_channel_through", lambda1.in_dim(), lambda.in_dim())?;
    // the face-reduced search is cheap and settles most instances; the full
    // block search is the fallback and the only source of refutations
    if let Some(reduced) = ChannelProblem::new(lambda1, lambda, true) {
        let found = solve_channel_problem(&reduced, lambda1, lambda, opts)?;
        if found.witness.is_some() {
            return Ok(found);
        }
    }
    let full = ChannelProblem::new(lambda1, lambda, false).expect("unreduced blocks are nonempty");
    let mut result = solve_channel_problem(&full, lambda1, lambda, opts)?;
    if result.witness.is_none() && !result.refuted {
        if let Some(res) = opts.grid {
            result.refuted = refute_channel_factorization(lambda1, lambda, res, opts.cert_tol).is_some_and(|v| v.refuted);
        }
    }
    Ok(result)
}

fn solve_channel_problem(
    cp: &ChannelProblem,
    lambda1: &Channel,
    lambda: &Channel,
    opts: &SolverOptions,
) -> Result<Realization<Channel>> {
    let out = solve_feasibility(&cp.problem, opts.budget, opts.cert_tol)?;
    let mut result = Realization {
        status: out.status,
        witness: None,
        residual: out.residual,
        iterations: out.iterations,
        refuted: out.refuted(opts.cert_tol),
    };
    if let Some(sol) = out.solution {
        let choi = cp.choi(&sol, lambda1.out_dim(), lambda.out_dim());
        let gamma = Channel::from_choi(
            lambda1.out_dim(),
            lambda.out_dim(),
            &HermitianMatrix::hermitian_part(&choi),
            CHOI_CUTOFF,
        )?;
        let residual = factorization_residual(&gamma, lambda1, lambda)?;
        if residual <= opts.cert_tol {
            result.witness = Some(gamma);
            result.residual = residual;
        } else {
            // the reconstructed channel drifted past the tolerance
            result.status = FeasibilityStatus::BudgetExhausted;
        }
    }
    Ok(result)
}

/// Channel `Γ` on the minimal dilation space of `A` with `Λ = Γ∘Λ_A`.
pub fn realize_channel_after(a: &Povm, lambda: &Channel) -> Result<Option<Channel>> {
    Ok(realize_channel_after_with(a, lambda, &SolverOptions::default())?.witness)
}

pub fn realize_channel_after_with(a: &Povm, lambda: &Channel, opts: &SolverOptions) -> Result<Realization<Channel>> {
    check_same_dim("realize_channel_after", a.dim(), lambda.in_dim())?;
    let dil = minimal_naimark(a)?;
    realize_channel_through(&dil.least_disturbing_channel(), lambda, opts)
}

/// Searches in both directions between two channels.
#[derive(Clone, Debug)]
pub struct EquivalenceSearch {
    /// `Λ₂ = Γ₁₂∘Λ₁`.
    pub forward: Realization<Channel>,
    /// `Λ₁ = Γ₂₁∘Λ₂`.
    pub backward: Realization<Channel>,
}

impl EquivalenceSearch {
    pub fn witnesses(&self) -> Option<(Channel, Channel)> {
        Some((self.forward.witness.clone()?, self.backward.witness.clone()?))
    }
}

pub fn certify_equivalence(l1: &Channel, l2: &Channel) -> Result<Option<(Channel, Channel)>> {
    Ok(certify_equivalence_with(l1, l2, &SolverOptions::default())?.witnesses())
}

pub fn certify_equivalence_with(l1: &Channel, l2: &Channel, opts: &SolverOptions) -> Result<EquivalenceSearch> {
    check_same_dim("certify_equivalence", l1.in_dim(), l2.in_dim())?;
    Ok(EquivalenceSearch {
        forward: realize_channel_through(l1, l2, opts)?,
        backward: realize_channel_through(l2, l1, opts)?,
    })
}

/// `Γ` restricted to inputs supported on `indices`: `σ ↦ Γ(ισι†)`.
pub fn restrict_input(gamma: &Channel, indices: &[usize]) -> Result<Channel> {
    if indices.is_empty() || indices.iter().any(|&i| i >= gamma.in_dim()) {
        return Err(Error::InvalidParameter(format!("indices {indices:?} out of range")));
    }
    let iota = ComplexMatrix::from_fn(gamma.in_dim(), indices.len(), |r, c| {
        if indices[c] == r {
            crate::matrix::c64(1.0, 0.0)
        } else {
            crate::matrix::c64(0.0, 0.0)
        }
    });
    let kraus = gamma.kraus().iter().map(|k| k * &iota).collect();
    Channel::new(kraus)
}

/// Observable on `Ω_A × Ω_C`; the effect of `(first[i], second[j])` sits at
/// position `i·|Ω_C| + j` of the underlying [`Povm`].
#[derive(Clone, Debug, PartialEq)]
pub struct JointObservable {
    first: Vec<usize>,
    second: Vec<usize>,
    povm: Povm,
}

impl JointObservable {
    pub fn new(first: Vec<usize>, second: Vec<usize>, effects: Vec<HermitianMatrix>) -> Result<Self> {
        if effects.len() != first.len() * second.len() {
            return Err(Error::OutcomeMismatch);
        }
        let povm = Povm::new((0..effects.len()).collect(), effects)?;
        Ok(Self { first, second, povm })
    }

    pub fn first_outcomes(&self) -> &[usize] {
        &self.first
    }

    pub fn second_outcomes(&self) -> &[usize] {
        &self.second
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    pub fn effect(&self, i: usize, j: usize) -> Option<&HermitianMatrix> {
        let a = self.first.iter().position(|&x| x == i)?;
        let b = self.second.iter().position(|&x| x == j)?;
        Some(&self.povm.effects()[a * self.second.len() + b])
    }
}

/// `G(i,j) = Σ_n K_{i,n}† C(j) K_{i,n}`: measure with the instrument, then
/// measure `C` on its output.
pub fn sequential_joint(instrument: &Instrument, c: &Povm) -> Result<JointObservable> {
    check_same_dim("sequential_joint", instrument.out_dim(), c.dim())?;
    let mut effects = Vec::with_capacity(instrument.operations().len() * c.len());
    for ops in instrument.operations() {
        for cj in c.effects() {
            let g = ops.iter().fold(HermitianMatrix::zeros(instrument.in_dim()), |acc, k| {
                acc.add_scaled(&HermitianMatrix::hermitian_part(&(k.adjoint() * cj.as_matrix() * k)), 1.0)
            });
            effects.push(g);
        }
    }
    let povm = Povm::from_parts(instrument.in_dim(), (0..effects.len()).collect(), effects);
    Ok(JointObservable {
        first: instrument.outcomes().to_vec(),
        second: c.outcomes().to_vec(),
        povm,
    })
}

/// Row and column sums of a joint observable.
pub fn margins(g: &JointObservable) -> (Povm, Povm) {
    let (n1, n2) = (g.first.len(), g.second.len());
    let dim = g.povm.dim();
    let e = g.povm.effects();
    let sum = |idx: &mut dyn Iterator<Item = usize>| {
        idx.fold(HermitianMatrix::zeros(dim), |acc, i| acc.add_scaled(&e[i], 1.0))
    };
    let first = (0..n1).map(|i| sum(&mut (0..n2).map(|j| i * n2 + j))).collect();
    let second = (0..n2).map(|j| sum(&mut (0..n1).map(|i| i * n2 + j))).collect();
    (
        Povm::from_parts(dim, g.first.clone(), first),
        Povm::from_parts(dim, g.second.clone(), second),
    )
}
