//! Seeded generators for test instances: unitaries, states, observables.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::{c64, psd_inv_sqrt, ComplexMatrix, ComplexVector, HermitianMatrix};
use crate::observables::{DensityMatrix, Povm};

/// Deterministic generator used across the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

pub fn gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexVector {
    gaussian_matrix(dim, 1, rng).column(0).into_owned()
}

/// Random Hermitian matrix from the Gaussian unitary ensemble.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermitianMatrix {
    HermitianMatrix::hermitian_part(&gaussian_matrix(dim, dim, rng))
}

/// Isometry `ℂ^cols → ℂ^rows` with Haar-distributed range (`rows ≥ cols`).
pub fn random_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    assert!(rows >= cols, "an isometry cannot reduce dimension");
    let g = gaussian_matrix(rows, cols, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // fix the phases so the distribution is Haar rather than QR-biased
    for k in 0..cols {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        let col = q.column(k) * phase;
        q.set_column(k, &col);
    }
    q
}

pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    random_isometry(dim, dim, rng)
}

/// Random mixed state of full rank (Hilbert–Schmidt measure).
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    let g = gaussian_matrix(dim, dim, rng);
    let rho = HermitianMatrix::hermitian_part(&(&g * g.adjoint()));
    let t = rho.trace();
    DensityMatrix::new(rho.scale(1.0 / t)).expect("normalized Gram matrix is a state")
}

pub fn random_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    let v = gaussian_vector(dim, rng);
    let v = &v / c64(v.norm(), 0.0);
    DensityMatrix::new(HermitianMatrix::outer(&v)).expect("unit vector projector is a state")
}

/// Random observable whose effect for outcome `j` has rank `ranks[j]`
/// (generically). Built as `S^{-1/2} G_j S^{-1/2}` with `G_j` a sum of
/// `ranks[j]` Gaussian rank-one operators and `S = Σ_j G_j`.
pub fn random_povm_with_ranks<R: Rng + ?Sized>(
    dim: usize,
    ranks: &[usize],
    rng: &mut R,
) -> Result<Povm> {
    if ranks.is_empty() {
        return Err(Error::EmptyObservable);
    }
    let total: usize = ranks.iter().sum();
    if total < dim || ranks.iter().any(|&r| r == 0 || r > dim) {
        return Err(Error::InvalidParameter(format!(
            "ranks {ranks:?} cannot build an observable on dimension {dim}"
        )));
    }
    let grams: Vec<HermitianMatrix> = ranks
        .iter()
        .map(|&r| {
            let g = gaussian_matrix(dim, r, rng);
            HermitianMatrix::hermitian_part(&(&g * g.adjoint()))
        })
        .collect();
    let sum = grams
        .iter()
        .fold(HermitianMatrix::zeros(dim), |acc, g| acc.add_scaled(g, 1.0));
    let inv = psd_inv_sqrt(&sum, 1e-12);
    let effects = grams.iter().map(|g| g.conjugate_by(&inv)).collect();
    Povm::from_effects(effects)
}

/// Random observable with `n_outcomes` outcomes and random effect ranks.
pub fn random_povm<R: Rng + ?Sized>(dim: usize, n_outcomes: usize, rng: &mut R) -> Result<Povm> {
    if n_outcomes == 0 {
        return Err(Error::EmptyObservable);
    }
    loop {
        let ranks: Vec<usize> = (0..n_outcomes).map(|_| rng.random_range(1..=dim)).collect();
        if ranks.iter().sum::<usize>() >= dim {
            return random_povm_with_ranks(dim, &ranks, rng);
        }
    }
}

/// Sharp observable diagonal in a Haar-random basis; outcome `j` gets the
/// projection onto the basis vectors with indices in `parts[j]`.
pub fn random_sharp_povm<R: Rng + ?Sized>(parts: &[usize], rng: &mut R) -> Result<Povm> {
    let dim: usize = parts.iter().sum();
    let u = random_unitary(dim, rng);
    let mut start = 0;
    let effects = parts
        .iter()
        .map(|&len| {
            let cols = u.columns(start, len).into_owned();
            start += len;
            HermitianMatrix::hermitian_part(&(&cols * cols.adjoint()))
        })
        .collect();
    Povm::from_effects(effects)
}

/// Column-stochastic matrix with `rows × cols` entries, each column drawn
/// uniformly from the simplex.
pub fn random_stochastic<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..cols)
        .map(|_| {
            let w: Vec<f64> = (0..rows)
                .map(|_| -rng.random::<f64>().max(1e-300).ln())
                .collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| x / s).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isometry_is_isometric() {
        let mut rng = rng_from_seed(7);
        let v = random_isometry(5, 3, &mut rng);
        let gram = v.adjoint() * &v;
        assert!((gram - ComplexMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn random_povm_has_requested_ranks() {
        let mut rng = rng_from_seed(3);
        let a = random_povm_with_ranks(3, &[1, 2, 3], &mut rng).unwrap();
        let ranks: Vec<usize> = a
            .effects()
            .iter()
            .map(|e| crate::matrix::rank_eps(e, 1e-10).unwrap())
            .collect();
        assert_eq!(ranks, vec![1, 2, 3]);
    }

    #[test]
    fn generators_are_seed_deterministic() {
        let a = random_povm(3, 4, &mut rng_from_seed(11)).unwrap();
        let b = random_povm(3, 4, &mut rng_from_seed(11)).unwrap();
        assert_eq!(a, b);
    }
}
