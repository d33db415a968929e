//! Dense complex matrix algebra for up to four qubits: products, tensor
//! products, a Hermitian eigensolver, PSD square roots, trace norm, and
//! quantum fidelity.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported matrix dimension (four qubits).
pub const MAX_DIM: usize = 16;

/// Hermiticity tolerance accepted by the eigensolver and the trace norm.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Entrywise hermiticity and trace tolerance enforced on density matrices.
pub const DENSITY_TOL: f64 = 1e-12;

/// Eigenvalues above this floor are treated as non-negative rounding noise.
pub const EIGENVALUE_FLOOR: f64 = -1e-10;

const JACOBI_OFF_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 64;
const PURITY_TOL: f64 = 1e-12;

pub(crate) const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

fn check_dim(dim: usize) -> Result<()> {
    if (2..=MAX_DIM).contains(&dim) && dim.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::BadDimension(dim))
    }
}

/// Square complex matrix in row-major order.
///
/// Qubit 0 is the most significant index: for a two-qubit operator the row
/// index reads as `q0 q1` in binary, matching top-to-bottom wire order.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        check_dim(dim)?;
        if entries.len() != dim * dim {
            return Err(Error::BadEntryCount(entries.len(), dim));
        }
        Ok(Self { dim, entries })
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, entries: vec![C_ZERO; dim * dim] })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.set(i, i, C_ONE);
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.entries[row * self.dim + col] = value;
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self { dim: self.dim, entries })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self { dim: self.dim, entries })
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let entries = self.entries.iter().map(|a| a * factor).collect();
        Self { dim: self.dim, entries }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        let d = self.dim;
        let mut out = Self::zeros(d)?;
        for i in 0..d {
            for k in 0..d {
                let aik = self.get(i, k);
                if aik == C_ZERO {
                    continue;
                }
                for j in 0..d {
                    let v = out.get(i, j) + aik * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn dagger(&self) -> Self {
        let d = self.dim;
        let mut out = Self { dim: d, entries: vec![C_ZERO; d * d] };
        for i in 0..d {
            for j in 0..d {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Largest entrywise deviation from `M = M†`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Largest entrywise absolute difference. Panics on mismatched dims.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "max_abs_diff needs equal dims");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Kronecker product with `self` on the more-significant qubit positions.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let dim = self.dim * other.dim;
        if dim > MAX_DIM {
            return Err(Error::TensorTooLarge(dim));
        }
        let mut out = Self { dim, entries: vec![C_ZERO; dim * dim] };
        for ia in 0..self.dim {
            for ja in 0..self.dim {
                let a = self.get(ia, ja);
                if a == C_ZERO {
                    continue;
                }
                for ib in 0..other.dim {
                    for jb in 0..other.dim {
                        out.set(
                            ia * other.dim + ib,
                            ja * other.dim + jb,
                            a * other.get(ib, jb),
                        );
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Normalised complex amplitude vector over 1 to 4 qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amps: Vec<Complex64>,
}

impl PureState {
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        check_dim(amps.len())?;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > DENSITY_TOL {
            return Err(Error::BadNorm(norm));
        }
        Ok(Self { amps })
    }

    /// Computational basis state `|index⟩` on `n_qubits` qubits.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        check_dim(dim)?;
        if index >= dim {
            return Err(Error::BasisOutOfRange { index, dim });
        }
        let mut amps = vec![C_ZERO; dim];
        amps[index] = C_ONE;
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Tensor product with `self` on the more-significant qubit positions.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let dim = self.amps.len() * other.amps.len();
        if dim > MAX_DIM {
            return Err(Error::TensorTooLarge(dim));
        }
        let mut amps = Vec::with_capacity(dim);
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(Self { amps })
    }

    /// Outer product `|ψ⟩⟨ψ|`.
    pub fn density(&self) -> DensityMatrix {
        let d = self.amps.len();
        let mut m = ComplexMatrix { dim: d, entries: vec![C_ZERO; d * d] };
        for i in 0..d {
            for j in 0..d {
                m.set(i, j, self.amps[i] * self.amps[j].conj());
            }
        }
        DensityMatrix::new_unchecked(m)
    }
}

/// Hermitian, trace-1, positive-semidefinite operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates hermiticity and unit trace within 1e-12 and positivity of
    /// the spectrum down to the −1e-10 floor.
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        let defect = mat.hermiticity_defect();
        if defect > DENSITY_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let tr = mat.trace();
        if (tr - C_ONE).norm() > DENSITY_TOL {
            return Err(Error::BadTrace(tr.re));
        }
        let (vals, _) = hermitian_eigen(&mat)?;
        if let Some(&low) = vals.last() {
            if low < EIGENVALUE_FLOOR {
                return Err(Error::NotPositive(low));
            }
        }
        Ok(Self { mat })
    }

    /// Skips validation; callers guarantee the invariants by construction.
    pub(crate) fn new_unchecked(mat: ComplexMatrix) -> Self {
        Self { mat }
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        let m = ComplexMatrix::identity(dim)?;
        Ok(Self::new_unchecked(m.scale(Complex64::new(1.0 / dim as f64, 0.0))))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn n_qubits(&self) -> usize {
        self.mat.n_qubits()
    }

    /// `tr(ρ²)`; 1 exactly when the state is pure.
    pub fn purity(&self) -> f64 {
        // tr(ρ²) = Σ_ij ρ_ij ρ_ji = Σ_ij |ρ_ij|² for Hermitian ρ.
        self.mat.entries().iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Kronecker product with `a` on the more-significant qubit positions.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.tensor(b)
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching unitary of
/// column eigenvectors, so that `m = V diag(λ) V†`.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let defect = m.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let dim = m.dim();
    let mut a = m.clone();
    // Symmetrise sub-tolerance asymmetry so rotations stay exactly Hermitian.
    for i in 0..dim {
        for j in (i + 1)..dim {
            let v = (a.get(i, j) + a.get(j, i).conj()).scale(0.5);
            a.set(i, j, v);
            a.set(j, i, v.conj());
        }
        let d = a.get(i, i);
        a.set(i, i, Complex64::new(d.re, 0.0));
    }
    let mut v = ComplexMatrix::identity(dim)?;

    let off_mass = |a: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for p in 0..dim {
            for q in 0..dim {
                if p != q {
                    s += a.get(p, q).norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_mass(&a) < JACOBI_OFF_TOL {
            converged = true;
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = a.get(p, q);
                let r = apq.norm();
                if r < 1e-300 {
                    continue;
                }
                let phase = apq / r;
                let tau = (a.get(q, q).re - a.get(p, p).re) / (2.0 * r);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let s_phase = phase.scale(s);
                // a ← a · J, with J the plane rotation on columns (p, q).
                for k in 0..dim {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, akp.scale(c) - s_phase.conj() * akq);
                    a.set(k, q, s_phase * akp + akq.scale(c));
                }
                // a ← J† · a.
                for k in 0..dim {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, apk.scale(c) - s_phase * aqk);
                    a.set(q, k, s_phase.conj() * apk + aqk.scale(c));
                }
                // Accumulate the eigenvector basis the same way as columns.
                for k in 0..dim {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp.scale(c) - s_phase.conj() * vkq);
                    v.set(k, q, s_phase * vkp + vkq.scale(c));
                }
            }
        }
    }
    if !converged && off_mass(&a) >= JACOBI_OFF_TOL {
        return Err(Error::NoConvergence);
    }

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| {
        a.get(j, j).re.partial_cmp(&a.get(i, i).re).expect("eigenvalues are finite")
    });
    let vals: Vec<f64> = order.iter().map(|&i| a.get(i, i).re).collect();
    let mut vecs = ComplexMatrix::zeros(dim)?;
    for (col, &src) in order.iter().enumerate() {
        for k in 0..dim {
            vecs.set(k, col, v.get(k, src));
        }
    }
    Ok((vals, vecs))
}

/// Positive-semidefinite square root `√ρ`.
///
/// Eigenvalues in `[−1e-10, 0)` are clamped to zero; anything lower is an
/// error.
pub fn psd_sqrt(rho: &DensityMatrix) -> Result<ComplexMatrix> {
    let (vals, vecs) = hermitian_eigen(rho.matrix())?;
    let dim = rho.dim();
    let mut roots = Vec::with_capacity(dim);
    for &l in &vals {
        if l < EIGENVALUE_FLOOR {
            return Err(Error::NotPositive(l));
        }
        roots.push(l.max(0.0).sqrt());
    }
    let mut out = ComplexMatrix::zeros(dim)?;
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = C_ZERO;
            for (k, &r) in roots.iter().enumerate() {
                acc += vecs.get(i, k) * vecs.get(j, k).conj() * r;
            }
            out.set(i, j, acc);
        }
    }
    Ok(out)
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    let (vals, _) = hermitian_eigen(m)?;
    Ok(vals.iter().map(|l| l.abs()).sum())
}

/// Quantum fidelity `F(ρ_a, ρ_b) = (tr √(√ρ_a ρ_b √ρ_a))²`.
///
/// When either argument is pure this reduces to `tr(ρ_a ρ_b)`, which is used
/// as a fast path.
pub fn fidelity(rho_a: &DensityMatrix, rho_b: &DensityMatrix) -> Result<f64> {
    if rho_a.dim() != rho_b.dim() {
        return Err(Error::DimensionMismatch(rho_a.dim(), rho_b.dim()));
    }
    if rho_a.purity() > 1.0 - PURITY_TOL || rho_b.purity() > 1.0 - PURITY_TOL {
        let f = rho_a
            .matrix()
            .matmul(rho_b.matrix())
            .expect("dims already checked")
            .trace()
            .re;
        return Ok(f.clamp(0.0, 1.0));
    }
    fidelity_general(rho_a, rho_b)
}

fn fidelity_general(rho_a: &DensityMatrix, rho_b: &DensityMatrix) -> Result<f64> {
    let s = psd_sqrt(rho_a)?;
    let mut inner = s.matmul(rho_b.matrix())?.matmul(&s)?;
    // Exactly Hermitian in exact arithmetic; symmetrise the rounding error.
    let sym = inner.add(&inner.dagger())?.scale(Complex64::new(0.5, 0.0));
    inner = sym;
    let (vals, _) = hermitian_eigen(&inner)?;
    let root_sum: f64 = vals.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0))
}

/// Overlap `⟨ψ|ρ|ψ⟩`: the probability of projecting `ρ` onto `ψ`.
pub fn fidelity_pure(psi: &PureState, rho: &DensityMatrix) -> Result<f64> {
    if psi.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(psi.dim(), rho.dim()));
    }
    let d = psi.dim();
    let amps = psi.amplitudes();
    let mut acc = C_ZERO;
    for i in 0..d {
        for j in 0..d {
            acc += amps[i].conj() * rho.matrix().get(i, j) * amps[j];
        }
    }
    Ok(acc.re.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{RngExt, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mat2(rows: [[Complex64; 2]; 2]) -> ComplexMatrix {
        ComplexMatrix::new(2, rows.concat()).unwrap()
    }

    fn real2(rows: [[f64; 2]; 2]) -> ComplexMatrix {
        mat2([
            [c(rows[0][0], 0.0), c(rows[0][1], 0.0)],
            [c(rows[1][0], 0.0), c(rows[1][1], 0.0)],
        ])
    }

    fn pauli_x() -> ComplexMatrix {
        real2([[0.0, 1.0], [1.0, 0.0]])
    }

    fn pauli_z() -> ComplexMatrix {
        real2([[1.0, 0.0], [0.0, -1.0]])
    }

    /// The copy Eve stores in the two-qubit attack at its 89.2% channel
    /// fidelity operating point.
    fn eve_copy() -> ComplexMatrix {
        real2([[0.810, 0.307], [0.307, 0.190]])
    }

    #[test]
    fn dimensions_outside_two_to_sixteen_rejected() {
        assert!(ComplexMatrix::zeros(1).is_err());
        assert!(ComplexMatrix::zeros(3).is_err());
        assert!(ComplexMatrix::zeros(32).is_err());
        assert!(ComplexMatrix::new(2, vec![C_ZERO; 3]).is_err());
        for d in [2, 4, 8, 16] {
            assert!(ComplexMatrix::zeros(d).is_ok());
        }
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let i2 = ComplexMatrix::identity(2).unwrap();
        let i4 = ComplexMatrix::identity(4).unwrap();
        assert_eq!(i2.tensor(&i2).unwrap(), i4);
    }

    #[test]
    fn tensor_orders_first_factor_most_significant() {
        let p0 = real2([[1.0, 0.0], [0.0, 0.0]]);
        let p1 = real2([[0.0, 0.0], [0.0, 1.0]]);
        let t = p0.tensor(&p1).unwrap();
        // diag(1,0) ⊗ diag(0,1) puts the single 1 at basis index 0b01.
        for i in 0..4 {
            let expect = if i == 1 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(t.get(i, i).re, expect, epsilon = 0.0);
        }
    }

    #[test]
    fn tensor_overflow_rejected() {
        let i4 = ComplexMatrix::identity(4).unwrap();
        let i8 = ComplexMatrix::identity(8).unwrap();
        assert!(matches!(i4.tensor(&i8), Err(Error::TensorTooLarge(32))));
    }

    #[test]
    fn double_bit_flip_conjugation_moves_projector() {
        let xx = pauli_x().tensor(&pauli_x()).unwrap();
        let zero = PureState::basis(2, 0).unwrap().density();
        let flipped = xx.matmul(zero.matrix()).unwrap().matmul(&xx.dagger()).unwrap();
        let three = PureState::basis(2, 3).unwrap().density();
        assert!(flipped.max_abs_diff(three.matrix()) < 1e-15);
    }

    #[test]
    fn eigen_diagonal_input_descending() {
        let m = real2([[1.0, 0.0], [0.0, 3.0]]);
        let (vals, vecs) = hermitian_eigen(&m).unwrap();
        assert_abs_diff_eq!(vals[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 1.0, epsilon = 1e-12);
        // Eigenvector of λ=3 is |1⟩ up to phase.
        assert_abs_diff_eq!(vecs.get(1, 0).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eigen_pauli_x_spectrum() {
        let (vals, _) = hermitian_eigen(&pauli_x()).unwrap();
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn eigen_rejects_non_hermitian() {
        let m = real2([[0.0, 1.0], [0.0, 0.0]]);
        assert!(matches!(hermitian_eigen(&m), Err(Error::NotHermitian(_))));
    }

    fn reconstruct(vals: &[f64], vecs: &ComplexMatrix) -> ComplexMatrix {
        let d = vecs.dim();
        let mut out = ComplexMatrix::zeros(d).unwrap();
        for i in 0..d {
            for j in 0..d {
                let mut acc = C_ZERO;
                for (k, &l) in vals.iter().enumerate() {
                    acc += vecs.get(i, k) * vecs.get(j, k).conj() * l;
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    #[test]
    fn eigen_eve_copy_matches_quadratic_roots() {
        let m = eve_copy();
        let (vals, vecs) = hermitian_eigen(&m).unwrap();
        // Closed-form roots of λ² − tr λ + det = 0.
        let tr = 1.0_f64;
        let det = 0.810 * 0.190 - 0.307 * 0.307;
        let disc = (tr * tr - 4.0 * det).sqrt();
        assert_abs_diff_eq!(vals[0], (tr + disc) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], (tr - disc) / 2.0, epsilon = 1e-12);
        assert!(reconstruct(&vals, &vecs).max_abs_diff(&m) < 1e-9);
        let vdag_v = vecs.dagger().matmul(&vecs).unwrap();
        assert!(vdag_v.max_abs_diff(&ComplexMatrix::identity(2).unwrap()) < 1e-9);
    }

    fn random_hermitian(dim: usize, rng: &mut impl RngExt) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(dim).unwrap();
        for i in 0..dim {
            m.set(i, i, c(rng.random_range(-1.0..1.0), 0.0));
            for j in (i + 1)..dim {
                let v = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                m.set(i, j, v);
                m.set(j, i, v.conj());
            }
        }
        m
    }

    fn random_density(dim: usize, rng: &mut impl RngExt) -> DensityMatrix {
        loop {
            let mut a = ComplexMatrix::zeros(dim).unwrap();
            for i in 0..dim {
                for j in 0..dim {
                    a.set(i, j, c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
                }
            }
            let aa = a.matmul(&a.dagger()).unwrap();
            let tr = aa.trace().re;
            if tr > 1e-6 {
                return DensityMatrix::new_unchecked(aa.scale(c(1.0 / tr, 0.0)));
            }
        }
    }

    #[test]
    fn eigen_reconstructs_random_matrices_every_dim() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for dim in [2, 4, 8, 16] {
            for _ in 0..25 {
                let m = random_hermitian(dim, &mut rng);
                let (vals, vecs) = hermitian_eigen(&m).unwrap();
                assert!(reconstruct(&vals, &vecs).max_abs_diff(&m) < 1e-9);
                let idn = ComplexMatrix::identity(dim).unwrap();
                assert!(vecs.dagger().matmul(&vecs).unwrap().max_abs_diff(&idn) < 1e-9);
                for w in vals.windows(2) {
                    assert!(w[0] >= w[1]);
                }
            }
        }
    }

    #[test]
    fn psd_sqrt_diagonal_cases() {
        let rho = DensityMatrix::new(real2([[1.0, 0.0], [0.0, 0.0]])).unwrap();
        let s = psd_sqrt(&rho).unwrap();
        assert!(s.max_abs_diff(&real2([[1.0, 0.0], [0.0, 0.0]])) < 1e-12);

        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        let s = psd_sqrt(&mixed).unwrap();
        let expect = ComplexMatrix::identity(2).unwrap().scale(c(0.5_f64.sqrt(), 0.0));
        assert!(s.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn psd_sqrt_squares_back_to_eve_copy() {
        let rho = DensityMatrix::new(eve_copy()).unwrap();
        let s = psd_sqrt(&rho).unwrap();
        assert!(s.matmul(&s).unwrap().max_abs_diff(&eve_copy()) < 1e-9);
    }

    #[test]
    fn psd_sqrt_rejects_negative_spectrum() {
        let m = real2([[1.5, 0.0], [0.0, -0.5]]);
        let rho = DensityMatrix::new_unchecked(m);
        assert!(matches!(psd_sqrt(&rho), Err(Error::NotPositive(_))));
    }

    #[test]
    fn trace_norm_known_values() {
        assert_abs_diff_eq!(trace_norm(&pauli_z()).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            trace_norm(&ComplexMatrix::zeros(4).unwrap()).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn trace_norm_of_copy_difference_matches_closed_form() {
        let rho0 = eve_copy();
        let x = pauli_x();
        let rho1 = x.matmul(&rho0).unwrap().matmul(&x).unwrap();
        let delta = rho0.sub(&rho1).unwrap();
        // Traceless Hermitian [[a, b], [b̄, −a]] has eigenvalues ±√(a²+|b|²).
        let a = delta.get(0, 0).re;
        let b = delta.get(0, 1);
        let expect = 2.0 * (a * a + b.norm_sqr()).sqrt();
        assert_abs_diff_eq!(trace_norm(&delta).unwrap(), expect, epsilon = 1e-12);
        assert_abs_diff_eq!(expect, 1.24, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_self_is_one() {
        let rho = DensityMatrix::new(eve_copy()).unwrap();
        assert_abs_diff_eq!(fidelity(&rho, &rho).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn fidelity_orthogonal_pure_states_is_zero() {
        let zero = PureState::basis(1, 0).unwrap().density();
        let one = PureState::basis(1, 1).unwrap().density();
        assert_abs_diff_eq!(fidelity(&zero, &one).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_pure_against_maximally_mixed_is_half() {
        let zero = PureState::basis(1, 0).unwrap().density();
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        assert_abs_diff_eq!(fidelity(&zero, &mixed).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_pure_reads_projection_probability() {
        let inv = 0.5_f64.sqrt();
        let plus = PureState::new(vec![c(inv, 0.0), c(inv, 0.0)]).unwrap();
        assert_abs_diff_eq!(fidelity_pure(&plus, &plus.density()).unwrap(), 1.0, epsilon = 1e-12);

        let rho = DensityMatrix::new(eve_copy()).unwrap();
        let zero = PureState::basis(1, 0).unwrap();
        let one = PureState::basis(1, 1).unwrap();
        assert_abs_diff_eq!(fidelity_pure(&zero, &rho).unwrap(), 0.810, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity_pure(&one, &rho).unwrap(), 0.190, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_fast_path_matches_general_formula() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        for _ in 0..20 {
            let mixed = random_density(4, &mut rng);
            let idx = rng.random_range(0..4);
            let pure = PureState::basis(2, idx).unwrap().density();
            let fast = fidelity(&pure, &mixed).unwrap();
            let general = fidelity_general(&pure, &mixed).unwrap();
            assert_abs_diff_eq!(fast, general, epsilon = 1e-9);
        }
    }

    #[test]
    fn density_validation_rejects_bad_inputs() {
        let skew = mat2([[c(0.5, 0.0), c(0.2, 0.1)], [c(0.2, 0.1), c(0.5, 0.0)]]);
        assert!(matches!(DensityMatrix::new(skew), Err(Error::NotHermitian(_))));

        let traceful = real2([[0.9, 0.0], [0.0, 0.9]]);
        assert!(matches!(DensityMatrix::new(traceful), Err(Error::BadTrace(_))));

        let indefinite = real2([[1.5, 0.0], [0.0, -0.5]]);
        assert!(matches!(DensityMatrix::new(indefinite), Err(Error::NotPositive(_))));
    }

    #[test]
    fn hundred_random_psd_roots_square_back() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(23);
        for i in 0..100 {
            let dim = [2, 4, 8, 16][i % 4];
            let rho = random_density(dim, &mut rng);
            let s = psd_sqrt(&rho).unwrap();
            assert!(s.matmul(&s).unwrap().max_abs_diff(rho.matrix()) < 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn fidelity_symmetric_and_bounded(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let rho = random_density(4, &mut rng);
            let sigma = random_density(4, &mut rng);
            let fab = fidelity(&rho, &sigma).unwrap();
            let fba = fidelity(&sigma, &rho).unwrap();
            prop_assert!((0.0..=1.0).contains(&fab));
            prop_assert!((fab - fba).abs() < 1e-9);
        }

        #[test]
        fn state_distance_never_exceeds_two(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let rho = random_density(8, &mut rng);
            let sigma = random_density(8, &mut rng);
            let d = rho.matrix().sub(sigma.matrix()).unwrap();
            prop_assert!(trace_norm(&d).unwrap() <= 2.0 + 1e-9);
        }
    }
}
