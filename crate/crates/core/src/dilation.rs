//! Naimark dilations and least-disturbing channels.
//!
//! The minimal dilation is laid out block by block: outcome `j` owns a
//! contiguous block `ℂ^{r_j}` of the dilation space, in outcome order, and
//! inside a block the basis follows descending eigenvalues of `A(j)`.

use std::ops::Range;

use crate::channels::Channel;
use crate::error::{Error, Result};
use crate::matrix::{
    c64, gram_rank, rank_eps, ComplexMatrix, ComplexVector, HermitianMatrix,
};
use crate::observables::{minimal_sufficient_reduction, Instrument, Povm};

/// Relative eigenvalue cutoff deciding the block ranks `r_j`.
pub const RANK_TOL: f64 = 1e-10;
/// Tolerance on the dilation identities checked by [`NaimarkDilation::new`].
pub const DILATION_TOL: f64 = 1e-9;

/// Projection-valued measure `P` on `ℳ` together with an isometry
/// `J: ℋ → ℳ`, dilating `A(j) = J†P(j)J`.
#[derive(Clone, Debug)]
pub struct NaimarkDilation {
    pvm: Povm,
    isometry: ComplexMatrix,
    blocks: Option<Vec<Range<usize>>>,
}

impl NaimarkDilation {
    /// Checks that `J` is an isometry and that `P` is a projection-valued
    /// measure on the dilation space.
    pub fn new(pvm: Povm, isometry: ComplexMatrix) -> Result<Self> {
        let (m, d) = isometry.shape();
        if pvm.dim() != m {
            return Err(Error::InvalidDilation(format!(
                "PVM acts on dimension {}, isometry maps into dimension {m}",
                pvm.dim()
            )));
        }
        let defect = (isometry.adjoint() * &isometry - ComplexMatrix::identity(d, d)).norm();
        if defect > DILATION_TOL {
            return Err(Error::InvalidDilation(format!("J†J deviates from 𝟙 by {defect:.3e}")));
        }
        if let Some((j, _)) = pvm.iter().find(|(_, p)| !p.is_projection(DILATION_TOL)) {
            return Err(Error::InvalidDilation(format!("P({j}) is not a projection")));
        }
        let blocks = coordinate_blocks(&pvm);
        Ok(Self {
            pvm,
            isometry,
            blocks,
        })
    }

    /// Dimension of `ℳ`.
    pub fn dil_dim(&self) -> usize {
        self.isometry.nrows()
    }

    /// Dimension of `ℋ`.
    pub fn input_dim(&self) -> usize {
        self.isometry.ncols()
    }

    pub fn pvm(&self) -> &Povm {
        &self.pvm
    }

    pub fn isometry(&self) -> &ComplexMatrix {
        &self.isometry
    }

    /// Index ranges of the per-outcome blocks when every `P(j)` is a
    /// coordinate projection onto consecutive basis vectors.
    pub fn blocks(&self) -> Option<&[Range<usize>]> {
        self.blocks.as_deref()
    }

    /// The dilated observable `J†P(j)J`.
    pub fn observable(&self) -> Povm {
        let effects = self
            .pvm
            .effects()
            .iter()
            .map(|p| HermitianMatrix::hermitian_part(&(self.isometry.adjoint() * p.as_matrix() * &self.isometry)))
            .collect();
        Povm::from_parts(self.input_dim(), self.pvm.outcomes().to_vec(), effects)
    }

    /// `dim span{P(j)Jφ}`; equals [`dil_dim`](Self::dil_dim) for a minimal
    /// dilation.
    pub fn span_rank(&self, tol: f64) -> usize {
        let d = self.input_dim();
        let vectors: Vec<ComplexMatrix> = self
            .pvm
            .effects()
            .iter()
            .flat_map(|p| {
                let pj = p.as_matrix() * &self.isometry;
                (0..d).map(move |a| pj.column(a).into_owned())
            })
            .map(|v| ComplexMatrix::from_column_slice(v.len(), 1, v.as_slice()))
            .collect();
        gram_rank(&vectors, tol)
    }

    pub fn is_minimal(&self, tol: f64) -> bool {
        self.span_rank(tol) == self.dil_dim()
    }

    /// Kraus operators `P(j)J`, one per outcome.
    pub fn kraus_operators(&self) -> Vec<ComplexMatrix> {
        self.pvm
            .effects()
            .iter()
            .map(|p| p.as_matrix() * &self.isometry)
            .collect()
    }

    /// `ϱ ↦ Σ_j P(j)JϱJ†P(j)`.
    pub fn least_disturbing_channel(&self) -> Channel {
        Channel::from_parts(self.input_dim(), self.dil_dim(), self.kraus_operators())
    }

    /// Instrument assigning outcome `j` the single Kraus operator `P(j)J`.
    pub fn instrument(&self) -> Instrument {
        let operations = self.kraus_operators().into_iter().map(|k| vec![k]).collect();
        Instrument::from_parts(
            self.pvm.outcomes().to_vec(),
            operations,
            self.input_dim(),
            self.dil_dim(),
        )
    }

    /// Lüders channel `𝔼_P(σ) = Σ_j P(j)σP(j)` on the dilation space.
    pub fn pinching(&self) -> Channel {
        Channel::from_parts(
            self.dil_dim(),
            self.dil_dim(),
            self.pvm.effects().iter().map(|p| p.as_matrix().clone()).collect(),
        )
    }

    /// Vectors `d_{j,k} = J†e_{j,k}` for outcome index `j` in a block
    /// layout (`A(j) = Σ_k |d_{j,k}⟩⟨d_{j,k}|`).
    pub fn spectral_vectors(&self, index: usize) -> Option<Vec<ComplexVector>> {
        let range = self.blocks.as_ref()?.get(index)?.clone();
        Some(range.map(|r| self.isometry.row(r).adjoint()).collect())
    }

    /// Non-minimal dilation `ℳ ⊕ ℂ^extra` where the extra dimensions are
    /// added to the projection of the outcome at `index`; `J′ = J ⊕ 0`.
    pub fn padded(&self, extra: usize, index: usize) -> Result<Self> {
        if index >= self.pvm.len() {
            return Err(Error::InvalidParameter(format!("outcome index {index} out of range")));
        }
        let m = self.dil_dim();
        let big = m + extra;
        let effects = self
            .pvm
            .effects()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut q = ComplexMatrix::zeros(big, big);
                q.view_mut((0, 0), (m, m)).copy_from(p.as_matrix());
                if i == index {
                    for k in m..big {
                        q[(k, k)] = c64(1.0, 0.0);
                    }
                }
                HermitianMatrix::hermitian_part(&q)
            })
            .collect();
        let mut j = ComplexMatrix::zeros(big, self.input_dim());
        j.view_mut((0, 0), (m, self.input_dim())).copy_from(&self.isometry);
        Self::new(
            Povm::from_parts(big, self.pvm.outcomes().to_vec(), effects),
            j,
        )
    }
}

fn coordinate_blocks(pvm: &Povm) -> Option<Vec<Range<usize>>> {
    let m = pvm.dim();
    let mut owner = vec![None; m];
    for (idx, p) in pvm.effects().iter().enumerate() {
        for r in 0..m {
            for c in 0..m {
                let z = p[(r, c)];
                let expected = if r == c && z.re > 0.5 { 1.0 } else { 0.0 };
                if (z - c64(expected, 0.0)).norm() > DILATION_TOL {
                    return None;
                }
            }
            if p[(r, r)].re > 0.5 {
                owner[r] = Some(idx);
            }
        }
    }
    let mut blocks = Vec::with_capacity(pvm.len());
    let mut pos = 0;
    for idx in 0..pvm.len() {
        let start = pos;
        while pos < m && owner[pos] == Some(idx) {
            pos += 1;
        }
        blocks.push(start..pos);
    }
    (pos == m).then_some(blocks)
}

/// Minimal Naimark dilation in block form: `ℳ = ⊕_j ℂ^{r_j}`,
/// `Jψ = Σ_{j,k} ⟨d_{j,k}|ψ⟩ e_{j,k}` with `d_{j,k} = √λ_{j,k} v_{j,k}` from
/// the spectral decomposition of each effect. Zero effects get empty blocks.
pub fn minimal_naimark(a: &Povm) -> Result<NaimarkDilation> {
    let d = a.dim();
    let mut rows: Vec<ComplexVector> = Vec::new();
    let mut blocks = Vec::with_capacity(a.len());
    for (j, e) in a.iter() {
        let eig = e.eig();
        rank_eps(e, RANK_TOL).map_err(|err| match err {
            Error::NotPsd { min_eigenvalue, .. } => Error::NotPsd {
                outcome: Some(j),
                min_eigenvalue,
            },
            other => other,
        })?;
        let r = eig.count_above(RANK_TOL);
        let start = rows.len();
        for k in 0..r {
            rows.push(eig.vector(k) * c64(eig.eigenvalues[k].sqrt(), 0.0));
        }
        blocks.push(start..rows.len());
    }
    let m = rows.len();
    // row (j,k) of J is ⟨d_{j,k}|
    let mut isometry = ComplexMatrix::zeros(m, d);
    for (r, dvec) in rows.iter().enumerate() {
        isometry.row_mut(r).copy_from(&dvec.adjoint());
    }
    let effects = blocks
        .iter()
        .map(|range| {
            let mut diag = vec![0.0; m];
            diag[range.clone()].iter_mut().for_each(|x| *x = 1.0);
            HermitianMatrix::diagonal(&diag)
        })
        .collect();
    let pvm = Povm::from_parts(m, a.outcomes().to_vec(), effects);
    Ok(NaimarkDilation {
        pvm,
        isometry,
        blocks: Some(blocks),
    })
}

/// Least-disturbing channel `Λ_A` and its instrument, from the minimal
/// dilation.
pub fn least_disturbing(a: &Povm) -> Result<(Channel, Instrument)> {
    let dil = minimal_naimark(a)?;
    Ok((dil.least_disturbing_channel(), dil.instrument()))
}

/// `ϱ ↦ Σ_j P′(j)J′ϱJ′†P′(j)` for an arbitrary (validated) dilation.
pub fn least_disturbing_from(dilation: &NaimarkDilation) -> Channel {
    dilation.least_disturbing_channel()
}

/// `Σ_k rank Ã(k)` for the minimally sufficient representative `Ã`.
pub fn minimal_output_dimension(a: &Povm) -> usize {
    let (reduced, _) = minimal_sufficient_reduction(a);
    reduced
        .effects()
        .iter()
        .map(|e| e.eig().count_above(RANK_TOL))
        .sum()
}
