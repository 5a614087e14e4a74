//! Test-side oracles. These recompute quantities straight from matrices and
//! Kraus operators so that checks do not lean on the library code under test.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use povm_forge::matrix::{ComplexMatrix, HermitianMatrix};
use povm_forge::observables::Povm;
use povm_forge::random::{random_povm, random_unitary};
use povm_forge::Channel;
use rand::Rng;

pub fn unit(n: usize, a: usize, b: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    m[(a, b)] = Complex64::new(1.0, 0.0);
    m
}

pub fn apply(kraus: &[ComplexMatrix], x: &ComplexMatrix) -> ComplexMatrix {
    let (rows, _) = kraus[0].shape();
    kraus.iter().fold(ComplexMatrix::zeros(rows, rows), |acc, k| acc + k * x * k.adjoint())
}

pub fn dual(kraus: &[ComplexMatrix], b: &ComplexMatrix) -> ComplexMatrix {
    let (_, cols) = kraus[0].shape();
    kraus.iter().fold(ComplexMatrix::zeros(cols, cols), |acc, k| acc + k.adjoint() * b * k)
}

/// `(Σ_ab ‖f(E_ab) − g(E_ab)‖_F²)^{1/2}` over matrix units of dimension `n`.
pub fn map_distance(
    n: usize,
    f: impl Fn(&ComplexMatrix) -> ComplexMatrix,
    g: impl Fn(&ComplexMatrix) -> ComplexMatrix,
) -> f64 {
    let mut total = 0.0;
    for a in 0..n {
        for b in 0..n {
            let e = unit(n, a, b);
            total += (f(&e) - g(&e)).norm_squared();
        }
    }
    total.sqrt()
}

/// Numerical rank from singular values, relative cutoff.
pub fn rank(m: &ComplexMatrix, tol: f64) -> usize {
    let s = m.clone().svd(false, false).singular_values;
    let top = s.iter().cloned().fold(0.0, f64::max);
    s.iter().filter(|&&x| x > tol * top.max(1.0)).count()
}

pub fn is_projection(m: &ComplexMatrix, tol: f64) -> bool {
    (m * m - m).norm() <= tol && (m - m.adjoint()).norm() <= tol
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    nalgebra::SymmetricEigen::new(h).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Groups effects with equal normalizations `E/tr E`, drops zero effects,
/// and sums each group.
pub fn reduce_oracle(effects: &[ComplexMatrix], tol: f64) -> Vec<ComplexMatrix> {
    let mut groups: Vec<(ComplexMatrix, ComplexMatrix)> = Vec::new();
    for e in effects {
        let t = e.trace().re;
        if t <= 1e-12 {
            continue;
        }
        let shape = e / Complex64::new(t, 0.0);
        match groups.iter_mut().find(|(s, _)| (s - &shape).norm() <= tol) {
            Some((_, sum)) => *sum += e,
            None => groups.push((shape, e.clone())),
        }
    }
    groups.into_iter().map(|(_, s)| s).collect()
}

/// Rank of the real span of complex matrices, via SVD of their stacked real
/// and imaginary parts.
pub fn real_span_rank(ops: &[ComplexMatrix], tol: f64) -> usize {
    if ops.is_empty() {
        return 0;
    }
    let len = ops[0].len();
    let m = DMatrix::from_fn(2 * len, ops.len(), |i, j| {
        let z = ops[j][i % len];
        if i < len {
            z.re
        } else {
            z.im
        }
    });
    m.svd(false, false).singular_values.iter().filter(|&&s| s > tol).count()
}

/// Observable of dimension `dim` with `n` outcomes, each of rank ≤ `dim`,
/// conditioned on a minimal dilation of dimension at most `max_dil`.
pub fn small_povm<R: Rng>(dim: usize, n: usize, max_dil: usize, rng: &mut R) -> Povm {
    loop {
        let a = random_povm(dim, n, rng).unwrap();
        let total: usize = a.effects().iter().map(|e| rank(e.as_matrix(), 1e-10)).sum();
        if total <= max_dil {
            return a;
        }
    }
}

/// Effects of `a` split into `pieces` proportional parts and shuffled.
pub fn split_and_shuffle<R: Rng>(a: &Povm, max_pieces: usize, rng: &mut R) -> Povm {
    let mut effects = Vec::new();
    for e in a.effects() {
        let pieces = rng.random_range(1..=max_pieces);
        let w: Vec<f64> = (0..pieces).map(|_| rng.random_range(0.1..1.0)).collect();
        let s: f64 = w.iter().sum();
        for x in w {
            effects.push(e.scale(x / s));
        }
    }
    for i in (1..effects.len()).rev() {
        let j = rng.random_range(0..=i);
        effects.swap(i, j);
    }
    Povm::from_effects(effects).unwrap()
}

pub fn hermitian(m: ComplexMatrix) -> HermitianMatrix {
    HermitianMatrix::hermitian_part(&m)
}

/// `ϱ ↦ Σ_n p_n V_nϱV_n†` with `V_n` taken from disjoint column blocks of a
/// random unitary on `ℂ^{big}`.
pub fn certificate_channel<R: Rng>(d: usize, count: usize, big: usize, rng: &mut R) -> (Vec<f64>, Vec<ComplexMatrix>, Channel) {
    let u = random_unitary(big, rng);
    let isometries: Vec<ComplexMatrix> = (0..count).map(|n| u.columns(n * d, d).into_owned()).collect();
    let w: Vec<f64> = (0..count).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    let weights: Vec<f64> = w.into_iter().map(|x| x / s).collect();
    let kraus = weights
        .iter()
        .zip(&isometries)
        .map(|(p, v)| v * Complex64::new(p.sqrt(), 0.0))
        .collect();
    let ch = Channel::new(kraus).unwrap();
    (weights, isometries, ch)
}
