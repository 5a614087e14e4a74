//! Channels in Kraus form.
//!
//! Kraus lists are never canonicalized: two channels are compared as maps,
//! on the matrix-unit basis of the input space.

use crate::error::{Error, Result};
use crate::matrix::{
    c64, matrix_unit, psd_inv_sqrt, range_projection, ComplexMatrix, HermitianMatrix, EIG_TOL,
    ZERO,
};
use crate::observables::{DensityMatrix, Povm};
use crate::random::{gaussian_matrix, rng_from_seed};

/// Tolerance for the trace-preservation check on Kraus lists.
pub const CHANNEL_TOL: f64 = 1e-9;
/// Tolerance for deciding that a conjugate channel has constant output.
pub const SWAP_TOL: f64 = 1e-8;
/// Eigenvalues of a Choi matrix below this are discarded when extracting
/// Kraus operators.
pub const CHOI_CUTOFF: f64 = 1e-10;

/// Completely positive trace-preserving map `ℒ(ℂ^in) → ℒ(ℂ^out)`.
#[derive(Clone, Debug)]
pub struct Channel {
    in_dim: usize,
    out_dim: usize,
    kraus: Vec<ComplexMatrix>,
}

impl Channel {
    /// Validates `Σ K_n† K_n = 𝟙` with [`CHANNEL_TOL`].
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        Self::with_tol(kraus, CHANNEL_TOL)
    }

    pub fn with_tol(kraus: Vec<ComplexMatrix>, tol: f64) -> Result<Self> {
        let Some(first) = kraus.first() else {
            return Err(Error::InvalidParameter("a channel needs at least one Kraus operator".into()));
        };
        let (out_dim, in_dim) = first.shape();
        if let Some(k) = kraus.iter().find(|k| k.shape() != (out_dim, in_dim)) {
            return Err(Error::DimensionMismatch(format!(
                "Kraus operators of shapes {out_dim}x{in_dim} and {}x{}",
                k.nrows(),
                k.ncols()
            )));
        }
        let ch = Self {
            in_dim,
            out_dim,
            kraus,
        };
        let deficit = ch.trace_deficit();
        if deficit > tol * (in_dim as f64).sqrt().max(1.0) {
            return Err(Error::NotTracePreserving { deficit });
        }
        Ok(ch)
    }

    pub(crate) fn from_parts(in_dim: usize, out_dim: usize, kraus: Vec<ComplexMatrix>) -> Self {
        Self {
            in_dim,
            out_dim,
            kraus,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_parts(dim, dim, vec![ComplexMatrix::identity(dim, dim)])
    }

    /// `ϱ ↦ VϱV†` for an isometry `V`.
    pub fn isometric(v: ComplexMatrix) -> Result<Self> {
        Self::new(vec![v])
    }

    /// `ϱ ↦ tr(ϱ)σ`.
    pub fn constant(in_dim: usize, sigma: &DensityMatrix) -> Self {
        let out_dim = sigma.dim();
        let eig = sigma.matrix().eig();
        let mut kraus = Vec::new();
        for (k, &p) in eig.eigenvalues.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let v = eig.vector(k) * c64(p.sqrt(), 0.0);
            for a in 0..in_dim {
                let mut op = ComplexMatrix::zeros(out_dim, in_dim);
                op.set_column(a, &v);
                kraus.push(op);
            }
        }
        Self::from_parts(in_dim, out_dim, kraus)
    }

    /// Completely depolarizing channel onto the maximally mixed state.
    pub fn depolarizing(dim: usize) -> Self {
        Self::constant(dim, &DensityMatrix::maximally_mixed(dim))
    }

    /// `ϱ ↦ Σ_j √A(j) ϱ √A(j)`.
    pub fn luders(a: &Povm) -> Self {
        crate::observables::luders_instrument(a).channel()
    }

    /// `τ ↦ Σ_n V_n† τ V_n + tr((𝟙 − Σ_n V_n V_n†) τ) 𝟙/d` for isometries
    /// with mutually orthogonal ranges; a left inverse of any channel
    /// `ϱ ↦ Σ_n p_n V_n ϱ V_n†`.
    pub fn recovery(isometries: &[ComplexMatrix]) -> Result<Self> {
        let Some(first) = isometries.first() else {
            return Err(Error::InvalidParameter("recovery needs at least one isometry".into()));
        };
        let (big, small) = first.shape();
        let mut covered = ComplexMatrix::zeros(big, big);
        let mut kraus = Vec::new();
        for v in isometries {
            if v.shape() != (big, small) {
                return Err(Error::DimensionMismatch("isometries of different shapes".into()));
            }
            covered += v * v.adjoint();
            kraus.push(v.adjoint());
        }
        let rest = HermitianMatrix::identity(big).add_scaled(&HermitianMatrix::hermitian_part(&covered), -1.0);
        // eigenvalues of the complement are 0 or 1
        let q = rest.eig().range_basis(0.5);
        let w = (1.0 / small as f64).sqrt();
        for c in q.column_iter() {
            for i in 0..small {
                let mut op = ComplexMatrix::zeros(small, big);
                op.row_mut(i).copy_from(&(c.adjoint() * c64(w, 0.0)));
                kraus.push(op);
            }
        }
        Self::new(kraus)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// `‖Σ K_n† K_n − 𝟙‖_F`.
    pub fn trace_deficit(&self) -> f64 {
        let mut s = ComplexMatrix::zeros(self.in_dim, self.in_dim);
        for k in &self.kraus {
            s += k.adjoint() * k;
        }
        (s - ComplexMatrix::identity(self.in_dim, self.in_dim)).norm()
    }

    /// Linear extension `X ↦ Σ K_n X K_n†` to arbitrary operators.
    pub fn apply_operator(&self, x: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(x.shape(), (self.in_dim, self.in_dim), "input operator shape");
        let mut out = ComplexMatrix::zeros(self.out_dim, self.out_dim);
        for k in &self.kraus {
            out += k * x * k.adjoint();
        }
        out
    }

    /// Heisenberg picture `B ↦ Σ K_n† B K_n` on arbitrary operators.
    pub fn dual_apply_operator(&self, b: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(b.shape(), (self.out_dim, self.out_dim), "output operator shape");
        let mut out = ComplexMatrix::zeros(self.in_dim, self.in_dim);
        for k in &self.kraus {
            out += k.adjoint() * b * k;
        }
        out
    }

    pub fn apply_hermitian(&self, x: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix::hermitian_part(&self.apply_operator(x))
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.in_dim {
            return Err(Error::DimensionMismatch(format!(
                "channel input dimension {}, state dimension {}",
                self.in_dim,
                rho.dim()
            )));
        }
        Ok(DensityMatrix::from_hermitian_unchecked(
            self.apply_hermitian(rho.matrix()),
        ))
    }

    pub fn dual_apply(&self, b: &HermitianMatrix) -> Result<HermitianMatrix> {
        if b.dim() != self.out_dim {
            return Err(Error::DimensionMismatch(format!(
                "channel output dimension {}, operator dimension {}",
                self.out_dim,
                b.dim()
            )));
        }
        Ok(HermitianMatrix::hermitian_part(&self.dual_apply_operator(b)))
    }

    /// Choi matrix `Σ_{ab} |a⟩⟨b| ⊗ Λ(|a⟩⟨b|)`, input factor first.
    pub fn choi(&self) -> HermitianMatrix {
        let (din, dout) = (self.in_dim, self.out_dim);
        let mut c = ComplexMatrix::zeros(din * dout, din * dout);
        for k in &self.kraus {
            // column-stacked vectorization: v[a·dout + i] = K[i, a]
            let v = ComplexMatrix::from_fn(din * dout, 1, |r, _| k[(r % dout, r / dout)]);
            c += &v * v.adjoint();
        }
        HermitianMatrix::hermitian_part(&c)
    }

    /// Kraus form from a Choi matrix. Eigenvalues below `cutoff` are clipped
    /// and the operators renormalized so trace preservation holds exactly.
    pub fn from_choi(in_dim: usize, out_dim: usize, choi: &HermitianMatrix, cutoff: f64) -> Result<Self> {
        if choi.dim() != in_dim * out_dim {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix of dimension {} for a {in_dim}→{out_dim} channel",
                choi.dim()
            )));
        }
        let eig = choi.eig();
        let scale = eig.max().max(1.0);
        let mut kraus = Vec::new();
        for (n, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda <= cutoff * scale {
                continue;
            }
            let v = eig.vector(n) * c64(lambda.sqrt(), 0.0);
            kraus.push(ComplexMatrix::from_fn(out_dim, in_dim, |i, a| v[a * out_dim + i]));
        }
        if kraus.is_empty() {
            return Err(Error::SingularNormalizer { min_eigenvalue: eig.max() });
        }
        normalize_kraus(in_dim, out_dim, kraus)
    }

    /// Largest Frobenius deviation `‖Λ(E_ab) − Γ(E_ab)‖` over matrix units.
    pub fn max_deviation(&self, other: &Channel) -> f64 {
        assert_eq!(self.in_dim, other.in_dim, "comparing channels with different inputs");
        assert_eq!(self.out_dim, other.out_dim, "comparing channels with different outputs");
        let mut worst: f64 = 0.0;
        for a in 0..self.in_dim {
            for b in 0..self.in_dim {
                let e = matrix_unit(self.in_dim, a, b);
                worst = worst.max((self.apply_operator(&e) - other.apply_operator(&e)).norm());
            }
        }
        worst
    }

    pub fn approx_eq(&self, other: &Channel, tol: f64) -> bool {
        self.in_dim == other.in_dim
            && self.out_dim == other.out_dim
            && self.max_deviation(other) <= tol
    }

    /// Stinespring isometry `Vφ = Σ_n K_n φ ⊗ e_n`.
    pub fn stinespring(&self) -> StinespringDilation {
        let env = self.kraus.len();
        let mut v = ComplexMatrix::zeros(self.out_dim * env, self.in_dim);
        for (n, k) in self.kraus.iter().enumerate() {
            for i in 0..self.out_dim {
                for a in 0..self.in_dim {
                    v[(i * env + n, a)] = k[(i, a)];
                }
            }
        }
        StinespringDilation {
            out_dim: self.out_dim,
            env_dim: env,
            isometry: v,
        }
    }
}

fn normalize_kraus(in_dim: usize, out_dim: usize, kraus: Vec<ComplexMatrix>) -> Result<Channel> {
    let mut s = ComplexMatrix::zeros(in_dim, in_dim);
    for k in &kraus {
        s += k.adjoint() * k;
    }
    let s = HermitianMatrix::hermitian_part(&s);
    let min = s.eig().min();
    if min < 1e-12 {
        return Err(Error::SingularNormalizer { min_eigenvalue: min });
    }
    let inv = psd_inv_sqrt(&s, 0.0);
    let kraus = kraus.into_iter().map(|k| k * inv.as_matrix()).collect();
    Ok(Channel::from_parts(in_dim, out_dim, kraus))
}

/// Stinespring dilation `Λ*(B) = V†(B ⊗ 𝟙_env)V`.
#[derive(Clone, Debug)]
pub struct StinespringDilation {
    out_dim: usize,
    pub env_dim: usize,
    /// `(out_dim·env_dim) × in_dim`, output factor first.
    pub isometry: ComplexMatrix,
}

impl StinespringDilation {
    pub fn dual_apply(&self, b: &ComplexMatrix) -> ComplexMatrix {
        let lifted = b.kronecker(&ComplexMatrix::identity(self.env_dim, self.env_dim));
        self.isometry.adjoint() * lifted * &self.isometry
    }

    /// Environment output `tr_out[VϱV†]`.
    pub fn environment_output(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let full = &self.isometry * x * self.isometry.adjoint();
        let env = self.env_dim;
        ComplexMatrix::from_fn(env, env, |m, n| {
            (0..self.out_dim).fold(ZERO, |acc, i| acc + full[(i * env + m, i * env + n)])
        })
    }
}

/// Sequential composition `Γ∘Λ`, Kraus set `{G_m K_n}`.
pub fn compose(gamma: &Channel, lambda: &Channel) -> Result<Channel> {
    if lambda.out_dim != gamma.in_dim {
        return Err(Error::DimensionMismatch(format!(
            "composing a channel from dimension {} after one into dimension {}",
            gamma.in_dim, lambda.out_dim
        )));
    }
    let kraus = gamma
        .kraus
        .iter()
        .flat_map(|g| lambda.kraus.iter().map(move |k| g * k))
        .collect();
    Ok(Channel::from_parts(lambda.in_dim, gamma.out_dim, kraus))
}

/// Conjugate (complementary) channel from the Stinespring dilation built
/// from the Kraus list; output dimension equals the number of Kraus
/// operators.
pub fn conjugate_channel(lambda: &Channel) -> Channel {
    let env = lambda.kraus.len();
    let kraus = (0..lambda.out_dim)
        .map(|i| ComplexMatrix::from_fn(env, lambda.in_dim, |n, a| lambda.kraus[n][(i, a)]))
        .collect();
    Channel::from_parts(lambda.in_dim, env, kraus)
}

/// Smallest projection `R` with `Λ*(R) = 𝟙`: the projection onto the span
/// of the Kraus ranges.
pub fn support_projection(lambda: &Channel) -> HermitianMatrix {
    let mut s = ComplexMatrix::zeros(lambda.out_dim, lambda.out_dim);
    for k in &lambda.kraus {
        s += k * k.adjoint();
    }
    range_projection(&HermitianMatrix::hermitian_part(&s), EIG_TOL)
}

/// Witness that `Λ(ϱ) = Σ_n p_n V_n ϱ V_n†` with `V_n† V_m = δ_{nm}𝟙`.
#[derive(Clone, Debug)]
pub struct IdentityEquivalenceCertificate {
    pub weights: Vec<f64>,
    pub isometries: Vec<ComplexMatrix>,
}

impl IdentityEquivalenceCertificate {
    /// Rebuilds the channel `Σ_n p_n V_n ϱ V_n†`.
    pub fn channel(&self) -> Channel {
        let v0 = &self.isometries[0];
        let kraus = self
            .weights
            .iter()
            .zip(&self.isometries)
            .map(|(&p, v)| v * c64(p.sqrt(), 0.0))
            .collect();
        Channel::from_parts(v0.ncols(), v0.nrows(), kraus)
    }

    /// Channel `Γ` with `Γ∘Λ = id`.
    pub fn recovery(&self) -> Result<Channel> {
        Channel::recovery(&self.isometries)
    }

    /// `max_{n,m} ‖V_n†V_m − δ_{nm}𝟙‖_F`.
    pub fn orthogonality_defect(&self) -> f64 {
        let d = self.isometries[0].ncols();
        let mut worst: f64 = 0.0;
        for (n, vn) in self.isometries.iter().enumerate() {
            for (m, vm) in self.isometries.iter().enumerate() {
                let mut g = vn.adjoint() * vm;
                if n == m {
                    g -= ComplexMatrix::identity(d, d);
                }
                worst = worst.max(g.norm());
            }
        }
        worst
    }
}

/// Decides whether `Λ ≃ id` by checking that the conjugate channel has
/// constant output `σ`; on success extracts `p_n, V_n` from the spectral
/// decomposition of `σ` as `V_n = p_n^{-1/2} Σ_m ⟨b_n|e_m⟩ K_m`.
pub fn is_identity_equivalent(lambda: &Channel) -> Option<IdentityEquivalenceCertificate> {
    is_identity_equivalent_with_tol(lambda, SWAP_TOL)
}

pub fn is_identity_equivalent_with_tol(
    lambda: &Channel,
    tol: f64,
) -> Option<IdentityEquivalenceCertificate> {
    let comp = conjugate_channel(lambda);
    let d = lambda.in_dim;
    let sigma = comp.apply_operator(&matrix_unit(d, 0, 0));
    for a in 0..d {
        for b in 0..d {
            let mut out = comp.apply_operator(&matrix_unit(d, a, b));
            if a == b {
                out -= &sigma;
            }
            if out.norm() > tol {
                return None;
            }
        }
    }
    let sigma = HermitianMatrix::hermitian_part(&sigma);
    let eig = sigma.eig();
    let mut weights = Vec::new();
    let mut isometries = Vec::new();
    for (n, &p) in eig.eigenvalues.iter().enumerate() {
        if p <= tol {
            continue;
        }
        let b = eig.vector(n);
        let mut v = ComplexMatrix::zeros(lambda.out_dim, d);
        for (m, k) in lambda.kraus.iter().enumerate() {
            v += k * b[m].conj();
        }
        weights.push(p);
        isometries.push(v * c64(1.0 / p.sqrt(), 0.0));
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|p| *p /= total);
    Some(IdentityEquivalenceCertificate {
        weights,
        isometries,
    })
}

/// Random channel from Gaussian Kraus operators, `K_n ← K_n S^{-1/2}` with
/// `S = Σ K_n†K_n`.
pub fn random_channel(in_dim: usize, out_dim: usize, n_kraus: usize, seed: u64) -> Result<Channel> {
    if n_kraus == 0 {
        return Err(Error::InvalidParameter("n_kraus must be at least 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let kraus = (0..n_kraus)
        .map(|_| gaussian_matrix(out_dim, in_dim, &mut rng))
        .collect();
    normalize_kraus(in_dim, out_dim, kraus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{basis_vector, real_matrix};
    use crate::random::{random_hermitian, random_isometry, random_state};

    fn plus() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::pure(&crate::matrix::ComplexVector::from_vec(vec![c64(s, 0.0), c64(s, 0.0)])).unwrap()
    }

    #[test]
    fn apply_examples() {
        let rho = plus();
        let id = Channel::identity(2);
        assert!(id.apply(&rho).unwrap().matrix().distance(rho.matrix()) < 1e-15);

        let sigma0 = DensityMatrix::pure(&basis_vector(3, 1)).unwrap();
        let swap = Channel::constant(2, &sigma0);
        assert!(swap.trace_deficit() < 1e-14);
        for input in [rho.clone(), DensityMatrix::maximally_mixed(2)] {
            assert!(swap.apply(&input).unwrap().matrix().distance(sigma0.matrix()) < 1e-14);
        }

        let luders = Channel::luders(&Povm::computational(2));
        let out = luders.apply(&rho).unwrap();
        assert!(out.matrix().distance(&HermitianMatrix::identity(2).scale(0.5)) < 1e-15);
        assert!(matches!(luders.apply(&DensityMatrix::maximally_mixed(3)), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn dual_examples() {
        let ch = random_channel(3, 2, 2, 5).unwrap();
        let unit = ch.dual_apply(&HermitianMatrix::identity(2)).unwrap();
        assert!(unit.distance(&HermitianMatrix::identity(3)) < 1e-12);

        let b = HermitianMatrix::new(real_matrix(2, 2, &[0.3, 0.1, 0.1, -0.2])).unwrap();
        assert!(Channel::identity(2).dual_apply(&b).unwrap().distance(&b) < 1e-15);

        let luders = Channel::luders(&Povm::computational(2));
        let out = luders.dual_apply(plus().matrix()).unwrap();
        assert!(out.distance(&HermitianMatrix::identity(2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn duality_pairing() {
        let mut rng = rng_from_seed(1);
        for seed in 0..10 {
            let ch = random_channel(3, 4, 3, seed).unwrap();
            let rho = random_state(3, &mut rng);
            let b = random_hermitian(4, &mut rng);
            let lhs = ch.apply(&rho).unwrap().matrix().inner(&b);
            let rhs = rho.matrix().inner(&ch.dual_apply(&b).unwrap());
            assert!((lhs - rhs).abs() < 1e-9);
        }
    }

    #[test]
    fn compose_examples() {
        let ch = random_channel(2, 3, 2, 9).unwrap();
        let left = compose(&Channel::identity(3), &ch).unwrap();
        let right = compose(&ch, &Channel::identity(2)).unwrap();
        assert!(left.approx_eq(&ch, 1e-13));
        assert!(right.approx_eq(&ch, 1e-13));

        let l = Channel::luders(&Povm::computational(2));
        assert!(compose(&l, &l).unwrap().approx_eq(&l, 1e-15));
        assert!(matches!(compose(&ch, &ch), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn compose_agrees_with_sequential_application() {
        let mut rng = rng_from_seed(2);
        let a = random_channel(2, 3, 2, 1).unwrap();
        let b = random_channel(3, 2, 3, 2).unwrap();
        let rho = random_state(2, &mut rng);
        let seq = b.apply(&a.apply(&rho).unwrap()).unwrap();
        let direct = compose(&b, &a).unwrap().apply(&rho).unwrap();
        assert!(seq.matrix().distance(direct.matrix()) < 1e-13);
    }

    #[test]
    fn conjugate_channel_examples() {
        let c = conjugate_channel(&Channel::identity(2));
        assert_eq!(c.out_dim(), 1);
        assert!((c.apply(&plus()).unwrap().matrix()[(0, 0)].re - 1.0).abs() < 1e-15);

        let u = random_isometry(3, 3, &mut rng_from_seed(4));
        let c = conjugate_channel(&Channel::isometric(u).unwrap());
        assert_eq!(c.out_dim(), 1);

        let c = conjugate_channel(&Channel::luders(&Povm::computational(2)));
        let rho = random_state(2, &mut rng_from_seed(5));
        let out = c.apply(&rho).unwrap();
        let expected = HermitianMatrix::diagonal(&[rho.matrix()[(0, 0)].re, rho.matrix()[(1, 1)].re]);
        assert!(out.matrix().distance(&expected) < 1e-14);
    }

    #[test]
    fn conjugate_matches_stinespring_environment() {
        let ch = random_channel(2, 3, 3, 12).unwrap();
        let st = ch.stinespring();
        let iso = st.isometry.adjoint() * &st.isometry;
        assert!((iso - ComplexMatrix::identity(2, 2)).norm() < 1e-12);
        let comp = conjugate_channel(&ch);
        for a in 0..2 {
            for b in 0..2 {
                let e = matrix_unit(2, a, b);
                assert!((comp.apply_operator(&e) - st.environment_output(&e)).norm() < 1e-13);
            }
        }
        let b = random_hermitian(3, &mut rng_from_seed(3));
        assert!((st.dual_apply(&b) - ch.dual_apply_operator(&b)).norm() < 1e-12);
    }

    #[test]
    fn support_projection_examples() {
        assert!(support_projection(&Channel::identity(2)).distance(&HermitianMatrix::identity(2)) < 1e-12);
        let zero = DensityMatrix::pure(&basis_vector(2, 0)).unwrap();
        let prep = Channel::constant(2, &zero);
        assert!(support_projection(&prep).distance(&HermitianMatrix::diagonal(&[1.0, 0.0])) < 1e-12);
    }

    #[test]
    fn identity_equivalence_examples() {
        let cert = is_identity_equivalent(&Channel::identity(2)).unwrap();
        assert_eq!(cert.weights.len(), 1);
        assert!((cert.weights[0] - 1.0).abs() < 1e-12);
        assert!((cert.isometries[0].adjoint() * &cert.isometries[0] - ComplexMatrix::identity(2, 2)).norm() < 1e-12);

        let v = random_isometry(4, 2, &mut rng_from_seed(8));
        let cert = is_identity_equivalent(&Channel::isometric(v.clone()).unwrap()).unwrap();
        assert_eq!(cert.weights.len(), 1);
        assert!(cert.channel().approx_eq(&Channel::isometric(v).unwrap(), 1e-12));

        assert!(is_identity_equivalent(&Channel::depolarizing(2)).is_none());
        assert!(is_identity_equivalent(&Channel::luders(&Povm::computational(2))).is_none());
    }

    #[test]
    fn certificate_round_trip() {
        let mut rng = rng_from_seed(21);
        let u = random_isometry(6, 6, &mut rng);
        let isos: Vec<ComplexMatrix> = (0..3).map(|n| u.columns(2 * n, 2).into_owned()).collect();
        let weights = [0.5, 0.3, 0.2];
        let kraus = isos
            .iter()
            .zip(weights)
            .map(|(v, p)| v * c64(f64::sqrt(p), 0.0))
            .collect();
        let ch = Channel::new(kraus).unwrap();
        let cert = is_identity_equivalent(&ch).unwrap();
        assert!(cert.orthogonality_defect() < 1e-10);
        let rebuilt = cert.channel();
        assert!(rebuilt.approx_eq(&ch, 1e-10));
        let again = is_identity_equivalent(&rebuilt).unwrap();
        let mut w1 = cert.weights.clone();
        let mut w2 = again.weights.clone();
        w1.sort_by(f64::total_cmp);
        w2.sort_by(f64::total_cmp);
        for (a, b) in w1.iter().zip(&w2) {
            assert!((a - b).abs() < 1e-10);
        }
        let gamma = cert.recovery().unwrap();
        assert!(compose(&gamma, &ch).unwrap().approx_eq(&Channel::identity(2), 1e-10));
    }

    #[test]
    fn random_channel_examples() {
        let u = random_channel(3, 3, 1, 4).unwrap();
        let k = &u.kraus()[0];
        assert!((k.adjoint() * k - ComplexMatrix::identity(3, 3)).norm() < 1e-12);
        assert!((k * k.adjoint() - ComplexMatrix::identity(3, 3)).norm() < 1e-12);

        let a = random_channel(2, 3, 2, 99).unwrap();
        let b = random_channel(2, 3, 2, 99).unwrap();
        assert_eq!(a.kraus(), b.kraus());
        assert!(a.trace_deficit() < 1e-10);

        assert!(matches!(random_channel(4, 1, 2, 0), Err(Error::SingularNormalizer { .. })));
        assert!(matches!(random_channel(2, 2, 0, 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn choi_round_trip() {
        let ch = random_channel(2, 3, 2, 17).unwrap();
        let back = Channel::from_choi(2, 3, &ch.choi(), CHOI_CUTOFF).unwrap();
        assert!(back.approx_eq(&ch, 1e-10));
        assert!((ch.choi().trace() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_trace_preserving_kraus() {
        let err = Channel::new(vec![ComplexMatrix::identity(2, 2).scale(0.9)]);
        assert!(matches!(err, Err(Error::NotTracePreserving { .. })));
    }
}
