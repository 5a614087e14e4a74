//! Brute-force grid refutations for qubit-scale negatives.
//!
//! Both oracles minimize a residual over a finite grid that covers the
//! feasible set with a known radius `h`, then use a Lipschitz bound `L` on
//! the residual: if the grid minimum exceeds `L·h + tol`, no point of the
//! feasible set reaches residual `tol`. They share no code with the
//! alternating-projection engine.

use crate::channels::Channel;
use crate::matrix::{c64, hermitian_basis, ComplexMatrix, HermitianMatrix};
use crate::observables::Povm;

/// Default grid resolution for the channel oracle.
pub const DEFAULT_CHANNEL_GRID: usize = 6;
/// Upper bound on residual evaluations before an oracle declines to run.
pub const MAX_EVALUATIONS: usize = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridVerdict {
    pub min_residual: f64,
    /// `L·h`: how far the true minimum can lie below the grid minimum.
    pub slack: f64,
    pub evaluations: usize,
    pub refuted: bool,
}

/// All vectors of `parts` nonnegative integers summing to `n`.
fn compositions(n: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(n - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Grid search over column-stochastic `p` with entries in `(1/n)ℤ` for the
/// equation `B(k) = Σ_j p(k|j)A(j)`. Declines (returns `None`) when the grid
/// would be too large.
pub fn refute_post_processing(b: &Povm, a: &Povm, resolution: usize, tol: f64) -> Option<GridVerdict> {
    if resolution == 0 || b.dim() != a.dim() {
        return None;
    }
    let (mb, ma) = (b.len(), a.len());
    let per_column = binomial(resolution + mb - 1, mb - 1);
    let total = per_column.powi(ma as i32);
    if total > MAX_EVALUATIONS as f64 {
        return None;
    }
    let columns: Vec<Vec<f64>> = compositions(resolution, mb)
        .into_iter()
        .map(|c| c.into_iter().map(|x| x as f64 / resolution as f64).collect())
        .collect();

    // residual² = Σ_k [pₖᵀ G pₖ − 2 hₖ·pₖ] + Σ_k ‖B(k)‖²
    let g: Vec<Vec<f64>> = a
        .effects()
        .iter()
        .map(|x| a.effects().iter().map(|y| x.inner(y)).collect())
        .collect();
    let h: Vec<Vec<f64>> = b
        .effects()
        .iter()
        .map(|bk| a.effects().iter().map(|aj| bk.inner(aj)).collect())
        .collect();
    let konst: f64 = b.effects().iter().map(|e| e.inner(e)).sum();

    let mut idx = vec![0usize; ma];
    let mut best = f64::INFINITY;
    let mut evaluations = 0;
    loop {
        let mut r2 = konst;
        for k in 0..mb {
            for j in 0..ma {
                let pkj = columns[idx[j]][k];
                if pkj == 0.0 {
                    continue;
                }
                r2 -= 2.0 * h[k][j] * pkj;
                for l in 0..ma {
                    r2 += pkj * g[j][l] * columns[idx[l]][k];
                }
            }
        }
        best = best.min(r2.max(0.0));
        evaluations += 1;
        // odometer over column choices
        let mut pos = 0;
        loop {
            if pos == ma {
                let min_residual = best.sqrt();
                // rounding each column to the grid moves each entry by < 1/n
                let h_cover = ((ma * mb) as f64).sqrt() / resolution as f64;
                let lipschitz = a.effects().iter().map(|e| e.inner(e)).sum::<f64>().sqrt();
                let slack = lipschitz * h_cover;
                return Some(GridVerdict {
                    min_residual,
                    slack,
                    evaluations,
                    refuted: min_residual > slack + tol,
                });
            }
            idx[pos] += 1;
            if idx[pos] < columns.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

fn pauli() -> [ComplexMatrix; 3] {
    let z = c64(0.0, 0.0);
    let o = c64(1.0, 0.0);
    let i = c64(0.0, 1.0);
    [
        ComplexMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        ComplexMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        ComplexMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    ]
}

/// Bloch vectors `k/res` for `k ∈ [−res, res]³`, pulled back into the unit
/// ball. Every point of the ball is within `√3/(2·res)` of the grid.
fn bloch_grid(res: usize) -> Vec<[f64; 3]> {
    let r = res as i64;
    let mut out = Vec::new();
    for x in -r..=r {
        for y in -r..=r {
            for z in -r..=r {
                let v = [x as f64 / res as f64, y as f64 / res as f64, z as f64 / res as f64];
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                out.push(if n > 1.0 { v.map(|c| c / n) } else { v });
            }
        }
    }
    out
}

/// Grid refutation of `Λ₂ = Γ∘Λ₁` when `Λ₁` has diagonal outputs (so only
/// the states `σ_i = Γ(|i⟩⟨i|)` matter) on at most two indices and `Λ₂`
/// outputs a qubit. Declines (returns `None`) outside that class.
pub fn refute_channel_factorization(
    lambda1: &Channel,
    lambda2: &Channel,
    resolution: usize,
    tol: f64,
) -> Option<GridVerdict> {
    if resolution == 0 || lambda1.in_dim() != lambda2.in_dim() || lambda2.out_dim() != 2 {
        return None;
    }
    let basis = hermitian_basis(lambda1.in_dim());
    let images: Vec<ComplexMatrix> = basis.iter().map(|x| lambda1.apply_operator(x.as_matrix())).collect();
    let m = lambda1.out_dim();
    for y in &images {
        for r in 0..m {
            for c in 0..m {
                if r != c && y[(r, c)].norm() > 1e-12 {
                    return None;
                }
            }
        }
    }
    let used: Vec<usize> = (0..m)
        .filter(|&i| images.iter().any(|y| y[(i, i)].norm() > 1e-12))
        .collect();
    if used.is_empty() || used.len() > 2 {
        return None;
    }
    let n = used.len();
    let points = bloch_grid(resolution);
    if (points.len() as f64).powi(n as i32) > MAX_EVALUATIONS as f64 {
        return None;
    }
    // residual² = Σ_X ‖Σ_i c_i(X)σ_i − T(X)‖² expanded as a quadratic form in
    // the σ_i, with σ = (𝟙 + r·σ⃗)/2
    let coeffs: Vec<Vec<f64>> = images.iter().map(|y| used.iter().map(|&i| y[(i, i)].re).collect()).collect();
    let targets: Vec<HermitianMatrix> = basis.iter().map(|x| lambda2.apply_hermitian(x)).collect();
    let mut q = vec![vec![0.0; n]; n];
    let mut w = vec![HermitianMatrix::zeros(2); n];
    let mut konst = 0.0;
    for (c, t) in coeffs.iter().zip(&targets) {
        for i in 0..n {
            for l in 0..n {
                q[i][l] += c[i] * c[l];
            }
            w[i] = w[i].add_scaled(t, c[i]);
        }
        konst += t.inner(t);
    }
    let paulis = pauli();
    let w_tr: Vec<f64> = w.iter().map(|x| x.trace()).collect();
    let w_vec: Vec<[f64; 3]> = w
        .iter()
        .map(|x| {
            let mut v = [0.0; 3];
            for (a, s) in paulis.iter().enumerate() {
                v[a] = (x.as_matrix() * s).trace().re;
            }
            v
        })
        .collect();
    let dot = |x: &[f64; 3], y: &[f64; 3]| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
    let linear = |i: usize, r: &[f64; 3]| (w_tr[i] + dot(&w_vec[i], r)) / 2.0;
    let overlap = |r: &[f64; 3], s: &[f64; 3]| (1.0 + dot(r, s)) / 2.0;

    let mut best = f64::INFINITY;
    let mut evaluations = 0;
    match n {
        1 => {
            for r in &points {
                let v = q[0][0] * overlap(r, r) - 2.0 * linear(0, r) + konst;
                best = best.min(v);
                evaluations += 1;
            }
        }
        _ => {
            for r in &points {
                let part = q[0][0] * overlap(r, r) - 2.0 * linear(0, r) + konst;
                for s in &points {
                    let v = part + q[1][1] * overlap(s, s) + 2.0 * q[0][1] * overlap(r, s) - 2.0 * linear(1, s);
                    best = best.min(v);
                    evaluations += 1;
                }
            }
        }
    }
    let min_residual = best.max(0.0).sqrt();
    // ‖δσ‖_F = ‖δr‖/√2 per state; Cauchy–Schwarz over X and i
    let cover = 3f64.sqrt() / (2.0 * resolution as f64) / 2f64.sqrt() * (n as f64).sqrt();
    let lipschitz = coeffs.iter().flatten().map(|c| c * c).sum::<f64>().sqrt();
    let slack = lipschitz * cover;
    Some(GridVerdict {
        min_residual,
        slack,
        evaluations,
        refuted: min_residual > slack + tol,
    })
}
