//! Discrete observables (POVMs), states, relabelings and instruments.

use std::collections::BTreeMap;

use crate::channels::Channel;
use crate::error::{Error, Result};
use crate::matrix::{
    c64, psd_sqrt, scale_of, ComplexMatrix, ComplexVector, HermitianMatrix,
};

/// Tolerance for positivity and normalization checks on effects.
pub const POVM_TOL: f64 = 1e-9;
/// Trace-normalized Frobenius distance below which two effects count as
/// proportional.
pub const PROPORTIONALITY_TOL: f64 = 1e-8;
/// Effects with trace at or below this are treated as zero.
pub const ZERO_EFFECT_TOL: f64 = 1e-10;

/// Finite family of positive effects summing to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    dim: usize,
    outcomes: Vec<usize>,
    effects: Vec<HermitianMatrix>,
}

/// Validates an outcome-labeled effect list.
pub fn validate_povm(
    outcomes: Vec<usize>,
    effects: Vec<HermitianMatrix>,
    tol: f64,
) -> Result<Povm> {
    let Some(first) = effects.first() else {
        return Err(Error::EmptyObservable);
    };
    let dim = first.dim();
    if outcomes.len() != effects.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} outcome labels for {} effects",
            outcomes.len(),
            effects.len()
        )));
    }
    let mut seen = std::collections::BTreeSet::new();
    for &j in &outcomes {
        if !seen.insert(j) {
            return Err(Error::DuplicateOutcome(j));
        }
    }
    let mut sum = HermitianMatrix::zeros(dim);
    for (&j, e) in outcomes.iter().zip(&effects) {
        if e.dim() != dim {
            return Err(Error::DimensionMismatch(format!(
                "effect {j} is {0}x{0}, expected {dim}x{dim}",
                e.dim()
            )));
        }
        let eig = e.eig();
        if eig.min() < -tol * scale_of(eig.max()) {
            return Err(Error::NotPsd {
                outcome: Some(j),
                min_eigenvalue: eig.min(),
            });
        }
        sum = sum.add_scaled(e, 1.0);
    }
    let deficit = sum.distance(&HermitianMatrix::identity(dim));
    if deficit > tol * (dim as f64).sqrt().max(1.0) {
        return Err(Error::NotNormalized { deficit });
    }
    Ok(Povm {
        dim,
        outcomes,
        effects,
    })
}

impl Povm {
    /// Validates with [`POVM_TOL`].
    pub fn new(outcomes: Vec<usize>, effects: Vec<HermitianMatrix>) -> Result<Self> {
        validate_povm(outcomes, effects, POVM_TOL)
    }

    /// Labels the effects `0, 1, …`.
    pub fn from_effects(effects: Vec<HermitianMatrix>) -> Result<Self> {
        Self::new((0..effects.len()).collect(), effects)
    }

    /// Trusted constructor for effects that are normalized by construction.
    pub(crate) fn from_parts(dim: usize, outcomes: Vec<usize>, effects: Vec<HermitianMatrix>) -> Self {
        debug_assert_eq!(outcomes.len(), effects.len());
        Self {
            dim,
            outcomes,
            effects,
        }
    }

    /// Single-outcome observable `{𝟙}`.
    pub fn unit(dim: usize) -> Self {
        Self::from_parts(dim, vec![0], vec![HermitianMatrix::identity(dim)])
    }

    /// Trivial observable `B(k) = p(k)𝟙`.
    pub fn trivial(dim: usize, probabilities: &[f64]) -> Result<Self> {
        Self::from_effects(
            probabilities
                .iter()
                .map(|&p| HermitianMatrix::identity(dim).scale(p))
                .collect(),
        )
    }

    /// Sharp observable measuring in the computational basis.
    pub fn computational(dim: usize) -> Self {
        let effects = (0..dim)
            .map(|k| {
                let mut d = vec![0.0; dim];
                d[k] = 1.0;
                HermitianMatrix::diagonal(&d)
            })
            .collect();
        Self::from_parts(dim, (0..dim).collect(), effects)
    }

    /// Sharp observable whose outcome `k` projects onto column `k` of `basis`.
    pub fn from_basis(basis: &ComplexMatrix) -> Result<Self> {
        let effects = basis
            .column_iter()
            .map(|c| HermitianMatrix::outer(&c.into_owned()))
            .collect();
        Self::from_effects(effects)
    }

    /// Qubit trine: `A(j) = (2/3)|φ_j⟩⟨φ_j|`, `φ_j` at 120° on the real
    /// great circle of the Bloch sphere.
    pub fn trine() -> Self {
        let effects = (0..3)
            .map(|j| {
                let half = std::f64::consts::PI * j as f64 / 3.0;
                let v = ComplexVector::from_vec(vec![c64(half.cos(), 0.0), c64(half.sin(), 0.0)]);
                HermitianMatrix::outer(&v).scale(2.0 / 3.0)
            })
            .collect();
        Self::from_parts(2, vec![0, 1, 2], effects)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn outcomes(&self) -> &[usize] {
        &self.outcomes
    }

    pub fn effects(&self) -> &[HermitianMatrix] {
        &self.effects
    }

    pub fn effect(&self, outcome: usize) -> Option<&HermitianMatrix> {
        self.index_of(outcome).map(|i| &self.effects[i])
    }

    pub fn index_of(&self, outcome: usize) -> Option<usize> {
        self.outcomes.iter().position(|&j| j == outcome)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &HermitianMatrix)> {
        self.outcomes.iter().copied().zip(self.effects.iter())
    }

    /// Every effect is a projection within `tol`.
    pub fn is_sharp(&self, tol: f64) -> bool {
        self.effects.iter().all(|e| e.is_projection(tol))
    }

    /// Same outcomes with effects `U A(j) U†`.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Self {
        Self::from_parts(
            self.dim,
            self.outcomes.clone(),
            self.effects.iter().map(|e| e.conjugate_by(u)).collect(),
        )
    }

    /// Largest Frobenius distance between matching effects; `None` if the
    /// outcome sets differ.
    pub fn distance(&self, other: &Povm) -> Option<f64> {
        if self.outcomes != other.outcomes || self.dim != other.dim {
            return None;
        }
        Some(
            self.effects
                .iter()
                .zip(&other.effects)
                .map(|(a, b)| a.distance(b))
                .fold(0.0, f64::max),
        )
    }
}

/// Positive trace-one operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(HermitianMatrix);

impl DensityMatrix {
    pub fn new(m: HermitianMatrix) -> Result<Self> {
        Self::with_tol(m, POVM_TOL)
    }

    pub fn with_tol(m: HermitianMatrix, tol: f64) -> Result<Self> {
        let t = m.trace();
        if (t - 1.0).abs() > tol {
            return Err(Error::NotAState(format!("trace {t}")));
        }
        let eig = m.eig();
        if eig.min() < -tol {
            return Err(Error::NotAState(format!(
                "negative eigenvalue {:.3e}",
                eig.min()
            )));
        }
        Ok(Self(m))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(HermitianMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    /// `|ψ⟩⟨ψ|` for a unit vector `ψ`.
    pub fn pure(psi: &ComplexVector) -> Result<Self> {
        Self::new(HermitianMatrix::outer(psi))
    }

    pub(crate) fn from_hermitian_unchecked(m: HermitianMatrix) -> Self {
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.0
    }

    /// Convex combination `t·self + (1−t)·other`.
    pub fn mix(&self, other: &DensityMatrix, t: f64) -> Self {
        Self(self.0.scale(t).add_scaled(&other.0, 1.0 - t))
    }
}

/// Outcome relabeling `f: Ω_A → Ω_B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relabeling {
    map: BTreeMap<usize, usize>,
}

impl Relabeling {
    pub fn new(map: BTreeMap<usize, usize>) -> Self {
        Self { map }
    }

    pub fn identity(outcomes: &[usize]) -> Self {
        Self::new(outcomes.iter().map(|&j| (j, j)).collect())
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self::new(pairs.into_iter().collect())
    }

    pub fn get(&self, source: usize) -> Option<usize> {
        self.map.get(&source).copied()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.map.iter().map(|(&a, &b)| (a, b))
    }

    /// Sorted, deduplicated image.
    pub fn targets(&self) -> Vec<usize> {
        let mut t: Vec<usize> = self.map.values().copied().collect();
        t.sort_unstable();
        t.dedup();
        t
    }

    pub fn is_total_on(&self, outcomes: &[usize]) -> bool {
        outcomes.iter().all(|j| self.map.contains_key(j))
    }
}

/// Probabilities `p(j) = tr(ϱ A(j))`, in outcome order.
pub fn outcome_distribution(a: &Povm, rho: &DensityMatrix) -> Result<Vec<f64>> {
    if a.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "observable on dimension {}, state on dimension {}",
            a.dim(),
            rho.dim()
        )));
    }
    Ok(a.effects().iter().map(|e| e.inner(rho.matrix())).collect())
}

/// `B(k) = Σ_{j ∈ f⁻¹(k)} A(j)`; outcomes of `B` are the sorted image of `f`.
pub fn relabel(a: &Povm, f: &Relabeling) -> Result<Povm> {
    if let Some(&missing) = a.outcomes().iter().find(|&&j| f.get(j).is_none()) {
        return Err(Error::IncompleteRelabeling(missing));
    }
    let targets: Vec<usize> = {
        let mut t: Vec<usize> = a.outcomes().iter().filter_map(|&j| f.get(j)).collect();
        t.sort_unstable();
        t.dedup();
        t
    };
    let mut effects = vec![HermitianMatrix::zeros(a.dim()); targets.len()];
    for (j, e) in a.iter() {
        let k = f.get(j).expect("checked above");
        let slot = targets.binary_search(&k).expect("target collected above");
        effects[slot] = effects[slot].add_scaled(e, 1.0);
    }
    Ok(Povm::from_parts(a.dim(), targets, effects))
}

fn normalized(e: &HermitianMatrix) -> HermitianMatrix {
    e.scale(1.0 / e.trace())
}

fn proportional(a: &HermitianMatrix, b: &HermitianMatrix, tol: f64) -> bool {
    normalized(a).distance(&normalized(b)) <= tol
}

/// Merges proportional effects into the minimally sufficient representative.
///
/// Zero effects are folded into the class of the first kept outcome so the
/// returned relabeling stays total; each class is labeled by its smallest
/// member.
pub fn minimal_sufficient_reduction(a: &Povm) -> (Povm, Relabeling) {
    minimal_sufficient_reduction_with_tol(a, PROPORTIONALITY_TOL)
}

pub fn minimal_sufficient_reduction_with_tol(a: &Povm, tol: f64) -> (Povm, Relabeling) {
    let kept: Vec<usize> = (0..a.len())
        .filter(|&i| a.effects()[i].trace() > ZERO_EFFECT_TOL)
        .collect();
    // union-find over kept indices
    let mut parent: Vec<usize> = (0..a.len()).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (x, &i) in kept.iter().enumerate() {
        for &j in &kept[x + 1..] {
            if proportional(&a.effects()[i], &a.effects()[j], tol) {
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut class_label: BTreeMap<usize, usize> = BTreeMap::new();
    for &i in &kept {
        let r = root(&mut parent, i);
        let label = a.outcomes()[i];
        class_label
            .entry(r)
            .and_modify(|l| *l = (*l).min(label))
            .or_insert(label);
    }
    let fallback = class_label.values().copied().min();
    let mut map = BTreeMap::new();
    for i in 0..a.len() {
        let target = if kept.contains(&i) {
            class_label[&root(&mut parent, i)]
        } else {
            // an all-zero observable cannot occur, but keep the map total anyway
            fallback.unwrap_or(a.outcomes()[i])
        };
        map.insert(a.outcomes()[i], target);
    }
    let f = Relabeling::new(map);
    let reduced = relabel(a, &f).expect("relabeling is total by construction");
    (reduced, f)
}

/// Non-vanishing and no two effects are positive multiples of each other.
pub fn is_minimally_sufficient(a: &Povm) -> bool {
    is_minimally_sufficient_with_tol(a, PROPORTIONALITY_TOL)
}

pub fn is_minimally_sufficient_with_tol(a: &Povm, tol: f64) -> bool {
    let effects = a.effects();
    if effects.iter().any(|e| e.trace() <= ZERO_EFFECT_TOL) {
        return false;
    }
    for i in 0..effects.len() {
        for j in i + 1..effects.len() {
            if proportional(&effects[i], &effects[j], tol) {
                return false;
            }
        }
    }
    true
}

/// Convex mixture `tA + (1−t)B` over a shared outcome set.
pub fn mix(a: &Povm, b: &Povm, t: f64) -> Result<Povm> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!("mixing weight {t} outside [0, 1]")));
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "mixing observables on dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    if a.outcomes() != b.outcomes() {
        return Err(Error::OutcomeMismatch);
    }
    let effects = a
        .effects()
        .iter()
        .zip(b.effects())
        .map(|(x, y)| x.scale(t).add_scaled(y, 1.0 - t))
        .collect();
    Ok(Povm::from_parts(a.dim(), a.outcomes().to_vec(), effects))
}

/// Every effect is a multiple of the identity within `tol`.
pub fn is_trivial(a: &Povm) -> bool {
    is_trivial_with_tol(a, POVM_TOL)
}

pub fn is_trivial_with_tol(a: &Povm, tol: f64) -> bool {
    let d = a.dim() as f64;
    a.effects().iter().all(|e| {
        let scalar = HermitianMatrix::identity(a.dim()).scale(e.trace() / d);
        e.distance(&scalar) <= tol
    })
}

/// Outcome-indexed family of CP maps in Kraus form summing to a channel.
#[derive(Clone, Debug)]
pub struct Instrument {
    outcomes: Vec<usize>,
    operations: Vec<Vec<ComplexMatrix>>,
    in_dim: usize,
    out_dim: usize,
}

impl Instrument {
    pub fn new(
        outcomes: Vec<usize>,
        operations: Vec<Vec<ComplexMatrix>>,
        in_dim: usize,
        out_dim: usize,
    ) -> Result<Self> {
        if outcomes.len() != operations.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} outcomes for {} operations",
                outcomes.len(),
                operations.len()
            )));
        }
        for k in operations.iter().flatten() {
            if k.nrows() != out_dim || k.ncols() != in_dim {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator is {}x{}, expected {out_dim}x{in_dim}",
                    k.nrows(),
                    k.ncols()
                )));
            }
        }
        let inst = Self {
            outcomes,
            operations,
            in_dim,
            out_dim,
        };
        let deficit = inst
            .total_effect()
            .distance(&HermitianMatrix::identity(in_dim));
        if deficit > POVM_TOL * (in_dim as f64).sqrt().max(1.0) {
            return Err(Error::NotTracePreserving { deficit });
        }
        Ok(inst)
    }

    pub(crate) fn from_parts(
        outcomes: Vec<usize>,
        operations: Vec<Vec<ComplexMatrix>>,
        in_dim: usize,
        out_dim: usize,
    ) -> Self {
        Self {
            outcomes,
            operations,
            in_dim,
            out_dim,
        }
    }

    pub fn outcomes(&self) -> &[usize] {
        &self.outcomes
    }

    pub fn operations(&self) -> &[Vec<ComplexMatrix>] {
        &self.operations
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    fn total_effect(&self) -> HermitianMatrix {
        self.operations
            .iter()
            .flatten()
            .fold(HermitianMatrix::zeros(self.in_dim), |acc, k| {
                acc.add_scaled(&HermitianMatrix::hermitian_part(&(k.adjoint() * k)), 1.0)
            })
    }

    /// Induced observable `A(j) = Σ_n K_{j,n}† K_{j,n}`.
    pub fn povm(&self) -> Povm {
        let effects = self
            .operations
            .iter()
            .map(|ks| {
                ks.iter().fold(HermitianMatrix::zeros(self.in_dim), |acc, k| {
                    acc.add_scaled(&HermitianMatrix::hermitian_part(&(k.adjoint() * k)), 1.0)
                })
            })
            .collect();
        Povm::from_parts(self.in_dim, self.outcomes.clone(), effects)
    }

    /// Total channel `Σ_j I(j, ·)`.
    pub fn channel(&self) -> Channel {
        let kraus: Vec<ComplexMatrix> = self.operations.iter().flatten().cloned().collect();
        if kraus.is_empty() {
            // unreachable for a normalized instrument; keep the channel well formed
            return Channel::from_parts(self.in_dim, self.out_dim, vec![ComplexMatrix::zeros(self.out_dim, self.in_dim)]);
        }
        Channel::from_parts(self.in_dim, self.out_dim, kraus)
    }

    /// Unnormalized post-measurement state for the outcome at `index`.
    pub fn apply_outcome(&self, index: usize, rho: &DensityMatrix) -> Result<HermitianMatrix> {
        if rho.dim() != self.in_dim {
            return Err(Error::DimensionMismatch(format!(
                "instrument input dimension {}, state dimension {}",
                self.in_dim,
                rho.dim()
            )));
        }
        Ok(self.operations[index].iter().fold(
            HermitianMatrix::zeros(self.out_dim),
            |acc, k| acc.add_scaled(&rho.matrix().conjugate_by(k), 1.0),
        ))
    }
}

/// Lüders instrument `ϱ ↦ √A(j) ϱ √A(j)`.
pub fn luders_instrument(a: &Povm) -> Instrument {
    let operations = a
        .effects()
        .iter()
        .map(|e| vec![psd_sqrt(e).into_matrix()])
        .collect();
    Instrument::from_parts(a.outcomes().to_vec(), operations, a.dim(), a.dim())
}
