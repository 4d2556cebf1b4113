//! Dense complex Hermitian operators and spectral matrix functions.
//!
//! Every matrix function used elsewhere in the crate (base-2 exponentials and
//! logarithms, square roots) is evaluated spectrally: decompose, map the
//! eigenvalues, reconstruct.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{CoreError, Result};

/// Largest entrywise asymmetry `|A_ij - conj(A_ji)|` absorbed by symmetrization.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Largest imaginary part tolerated in the trace of a product of Hermitian operators.
pub const TRACE_IMAG_TOL: f64 = 1e-9;

pub type C64 = Complex64;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense `d x d` complex Hermitian matrix.
#[derive(Clone, PartialEq)]
pub struct HermitianOperator {
    mat: DMatrix<C64>,
}

impl fmt::Debug for HermitianOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HermitianOperator(d={}) {}", self.dim(), self.mat)
    }
}

impl HermitianOperator {
    /// Validates Hermiticity and symmetrizes away residual noise below [`HERMITIAN_TOL`].
    pub fn new(mat: DMatrix<C64>) -> Result<Self> {
        let (rows, cols) = mat.shape();
        if rows != cols {
            return Err(CoreError::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(CoreError::EmptyOperator);
        }
        let asymmetry = asymmetry(&mat);
        if !(asymmetry <= HERMITIAN_TOL) {
            return Err(CoreError::NotHermitian { asymmetry });
        }
        Ok(Self::symmetrized(mat))
    }

    /// Builds from row-major entries.
    pub fn from_row_slice(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(CoreError::DimensionMismatch { expected: dim * dim, found: entries.len() });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    /// Forces exact Hermiticity without a tolerance check. Only for matrices that
    /// are Hermitian by construction (spectral reconstructions, sums of Hermitian terms).
    pub(crate) fn symmetrized(mat: DMatrix<C64>) -> Self {
        let adj = mat.adjoint();
        Self { mat: (mat + adj) * c(0.5, 0.0) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { mat: DMatrix::identity(dim, dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { mat: DMatrix::zeros(dim, dim) }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let v = DVector::from_iterator(diag.len(), diag.iter().map(|&x| c(x, 0.0)));
        Self { mat: DMatrix::from_diagonal(&v) }
    }

    /// Projector `|i><i|` onto a computational basis vector.
    pub fn basis_projector(dim: usize, i: usize) -> Self {
        let mut mat = DMatrix::zeros(dim, dim);
        mat[(i, i)] = c(1.0, 0.0);
        Self { mat }
    }

    /// Outer product `|v><v|`.
    pub fn projector(v: &[C64]) -> Self {
        let v = DVector::from_column_slice(v);
        Self::symmetrized(&v * v.adjoint())
    }

    pub fn pauli_x() -> Self {
        Self { mat: DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]) }
    }

    pub fn pauli_y() -> Self {
        Self { mat: DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]) }
    }

    pub fn pauli_z() -> Self {
        Self::from_real_diagonal(&[1.0, -1.0])
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn real_diagonal(&self) -> Vec<f64> {
        self.mat.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn trace(&self) -> f64 {
        self.mat.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| i == j || self.mat[(i, j)] == C64::default()))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { mat: &self.mat * c(s, 0.0) }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self { mat: &self.mat + &other.mat })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self { mat: &self.mat - &other.mat })
    }

    /// `self + sum_k coeffs[k] * terms[k]`.
    pub fn add_combination(&self, coeffs: &[f64], terms: &[HermitianOperator]) -> Result<Self> {
        if coeffs.len() != terms.len() {
            return Err(CoreError::DimensionMismatch { expected: terms.len(), found: coeffs.len() });
        }
        let mut mat = self.mat.clone();
        for (&a, t) in coeffs.iter().zip(terms) {
            self.check_dim(t)?;
            mat.zip_apply(&t.mat, |x, y| *x += y * a);
        }
        Ok(Self { mat })
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        self.eigh().eigenvalues().iter().fold(0.0_f64, |m, w| m.max(w.abs()))
    }

    /// Frobenius norm of `self - other`.
    pub fn distance(&self, other: &Self) -> f64 {
        (&self.mat - &other.mat).norm()
    }

    pub(crate) fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(CoreError::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }

    pub fn eigh(&self) -> Spectrum {
        eigh(self)
    }

    pub fn matrix_fn(&self, g: impl Fn(f64) -> f64) -> Result<Self> {
        matrix_fn(self, g)
    }

    /// `2^H`.
    pub fn exp2(&self) -> Self {
        self.eigh().map(f64::exp2)
    }

    /// Base-2 logarithm; fails on any nonpositive eigenvalue.
    pub fn log2(&self) -> Result<Self> {
        matrix_fn(self, |w| if w > 0.0 { w.log2() } else { f64::NAN })
    }
}

fn asymmetry(mat: &DMatrix<C64>) -> f64 {
    let d = mat.nrows();
    let mut worst = 0.0_f64;
    for i in 0..d {
        for j in i..d {
            let diff = (mat[(i, j)] - mat[(j, i)].conj()).norm();
            if diff.is_nan() {
                return f64::NAN;
            }
            worst = worst.max(diff);
        }
    }
    worst
}

/// Eigen-decomposition with eigenvalues in ascending order.
#[derive(Clone, Debug)]
pub struct Spectrum {
    values: Vec<f64>,
    vectors: DMatrix<C64>,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    /// Orthonormal eigenvectors as columns, ordered like [`Spectrum::eigenvalues`].
    pub fn eigenvectors(&self) -> &DMatrix<C64> {
        &self.vectors
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.values.last().expect("spectrum of a d >= 1 operator")
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.values[0]
    }

    /// `V diag(g(w)) V^dagger`, no domain check.
    pub fn map(&self, g: impl Fn(f64) -> f64) -> HermitianOperator {
        let mut scaled = self.vectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= c(g(self.values[k]), 0.0);
        }
        HermitianOperator::symmetrized(scaled * self.vectors.adjoint())
    }

    pub fn reconstruct(&self) -> HermitianOperator {
        self.map(|w| w)
    }

    /// `<v_k| A |v_k>` for every eigenvector.
    pub fn diagonal_in_eigenbasis(&self, a: &HermitianOperator) -> Vec<f64> {
        let av = a.matrix() * &self.vectors;
        (0..self.values.len()).map(|k| self.vectors.column(k).dotc(&av.column(k)).re).collect()
    }
}

pub fn eigh(h: &HermitianOperator) -> Spectrum {
    let d = h.dim();
    let eig = SymmetricEigen::new(h.mat.clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
    Spectrum { values, vectors }
}

/// `V diag(g(w)) V^dagger`; a non-finite `g(w)` is reported as a domain error.
pub fn matrix_fn(h: &HermitianOperator, g: impl Fn(f64) -> f64) -> Result<HermitianOperator> {
    let spec = eigh(h);
    if let Some(&eigenvalue) = spec.values.iter().find(|&&w| !g(w).is_finite()) {
        return Err(CoreError::Domain { eigenvalue });
    }
    Ok(spec.map(g))
}

/// Kronecker product `A ⊗ B`.
pub fn tensor(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    HermitianOperator { mat: a.mat.kronecker(&b.mat) }
}

/// `tr(AB)` for Hermitian `A`, `B`; the result is real up to rounding.
pub fn trace_product(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    a.check_dim(b)?;
    let z = trace_product_complex(a.matrix(), b.matrix());
    if z.im.abs() > TRACE_IMAG_TOL {
        return Err(CoreError::ImaginaryTrace { residue: z.im });
    }
    Ok(z.re)
}

pub(crate) fn trace_product_complex(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    // tr(AB) = sum_ij A_ij B_ji
    let d = a.nrows();
    let mut acc = C64::default();
    for i in 0..d {
        for j in 0..d {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Single-qubit Pauli factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn operator(self) -> HermitianOperator {
        match self {
            Pauli::I => HermitianOperator::identity(2),
            Pauli::X => HermitianOperator::pauli_x(),
            Pauli::Y => HermitianOperator::pauli_y(),
            Pauli::Z => HermitianOperator::pauli_z(),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn from_char(ch: char) -> Option<Self> {
        match ch.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// Tensor product of single-qubit Paulis, e.g. `"XZY"`; qubit 0 is the leftmost factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn new(factors: Vec<Pauli>) -> Result<Self> {
        if factors.is_empty() {
            return Err(CoreError::InvalidPauli { label: String::new() });
        }
        Ok(Self(factors))
    }

    pub fn factors(&self) -> &[Pauli] {
        &self.0
    }

    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }

    pub fn label(&self) -> String {
        self.0.iter().map(|p| p.symbol()).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    /// Only `I` and `Z` factors, i.e. diagonal in the computational basis.
    pub fn is_diagonal(&self) -> bool {
        self.0.iter().all(|&p| matches!(p, Pauli::I | Pauli::Z))
    }

    /// Left fold of Kronecker products.
    pub fn operator(&self) -> HermitianOperator {
        let mut it = self.0.iter();
        let first = it.next().expect("nonempty Pauli string").operator();
        it.fold(first, |acc, p| tensor(&acc, &p.operator()))
    }

    /// All `4^n` strings on `n` qubits in lexicographic `I < X < Y < Z` order.
    pub fn all(n_qubits: usize) -> Vec<PauliString> {
        let total = 4usize.pow(n_qubits as u32);
        (0..total)
            .map(|mut idx| {
                let mut factors = vec![Pauli::I; n_qubits];
                for slot in factors.iter_mut().rev() {
                    *slot = Pauli::ALL[idx % 4];
                    idx /= 4;
                }
                PauliString(factors)
            })
            .collect()
    }
}

impl FromStr for PauliString {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        let factors: Option<Vec<Pauli>> = s.trim().chars().map(Pauli::from_char).collect();
        match factors {
            Some(f) if !f.is_empty() => Ok(Self(f)),
            _ => Err(CoreError::InvalidPauli { label: s.to_string() }),
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pauli(s: &str) -> HermitianOperator {
        s.parse::<PauliString>().unwrap().operator()
    }

    fn random_hermitian(d: usize, entries: &[f64]) -> HermitianOperator {
        let mut m = DMatrix::zeros(d, d);
        let mut it = entries.iter().cycle();
        for i in 0..d {
            m[(i, i)] = c(*it.next().unwrap(), 0.0);
            for j in i + 1..d {
                let z = c(*it.next().unwrap(), *it.next().unwrap());
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        HermitianOperator::new(m).unwrap()
    }

    #[test]
    fn eigh_pauli_x() {
        let s = pauli("X").eigh();
        assert_abs_diff_eq!(s.eigenvalues()[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.eigenvalues()[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eigh_identity_and_diagonal() {
        let s = HermitianOperator::identity(4).eigh();
        assert!(s.eigenvalues().iter().all(|&w| (w - 1.0).abs() < 1e-14));

        let s = HermitianOperator::from_real_diagonal(&[0.2, 0.8]).eigh();
        assert_abs_diff_eq!(s.eigenvalues()[0], 0.2, epsilon = 1e-14);
        assert_abs_diff_eq!(s.eigenvalues()[1], 0.8, epsilon = 1e-14);
        let v = s.eigenvectors();
        assert_abs_diff_eq!(v[(0, 0)].norm(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v[(1, 1)].norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn non_hermitian_is_rejected_with_norm() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        match HermitianOperator::new(m) {
            Err(CoreError::NotHermitian { asymmetry }) => assert_abs_diff_eq!(asymmetry, 0.5),
            other => panic!("unexpected {other:?}"),
        }
        let noisy = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 1e-14), c(0.5, 0.0), c(1.0, 0.0)]);
        let h = HermitianOperator::new(noisy).unwrap();
        assert_eq!(h.entry(0, 1), h.entry(1, 0).conj());
    }

    #[test]
    fn matrix_fn_examples() {
        let z = HermitianOperator::zeros(3).exp2();
        assert!(z.distance(&HermitianOperator::identity(3)) < 1e-14);

        let half = HermitianOperator::identity(2).scale(0.5);
        let l = half.log2().unwrap();
        assert!(l.distance(&HermitianOperator::identity(2).scale(-1.0)) < 1e-14);

        let d = HermitianOperator::from_real_diagonal(&[0.3, 0.7]);
        assert!(d.log2().unwrap().exp2().distance(&d) < 1e-12);
    }

    #[test]
    fn log_of_singular_operator_names_eigenvalue() {
        let d = HermitianOperator::from_real_diagonal(&[0.0, 1.0]);
        assert_eq!(d.log2().unwrap_err(), CoreError::Domain { eigenvalue: 0.0 });
    }

    #[test]
    fn tensor_examples() {
        let zz = tensor(&pauli("Z"), &pauli("Z"));
        assert!(zz.distance(&HermitianOperator::from_real_diagonal(&[1.0, -1.0, -1.0, 1.0])) == 0.0);
        let ii = tensor(&HermitianOperator::identity(2), &HermitianOperator::identity(2));
        assert!(ii.distance(&HermitianOperator::identity(4)) == 0.0);

        // XX |01> = |10>
        let xx = pauli("XX");
        let ket01 = DVector::from_column_slice(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let out = xx.matrix() * ket01;
        assert_eq!(out[2], c(1.0, 0.0));
        assert_eq!(out.iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn trace_product_examples() {
        let id4 = HermitianOperator::identity(4);
        assert_abs_diff_eq!(trace_product(&id4, &id4.scale(0.25)).unwrap(), 1.0, epsilon = 1e-15);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi_minus = HermitianOperator::projector(&[c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)]);
        assert_abs_diff_eq!(trace_product(&psi_minus, &pauli("ZZ")).unwrap(), -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(trace_product(&psi_minus, &pauli("XX")).unwrap(), -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(trace_product(&psi_minus, &pauli("YY")).unwrap(), -1.0, epsilon = 1e-14);
    }

    #[test]
    fn trace_product_dimension_mismatch() {
        let err = trace_product(&HermitianOperator::identity(2), &HermitianOperator::identity(4)).unwrap_err();
        assert!(matches!(err, CoreError::DimensionMismatch { .. }));
    }

    #[test]
    fn pauli_strings_are_involutory() {
        for p in PauliString::all(2) {
            let op = p.operator();
            let sq = op.matrix() * op.matrix();
            assert!((sq - DMatrix::<C64>::identity(4, 4)).norm() < 1e-15, "{p}");
        }
        assert_eq!(PauliString::all(3).len(), 64);
        assert!("XQ".parse::<PauliString>().is_err());
        assert!("".parse::<PauliString>().is_err());
    }

    #[test]
    fn pauli_tensor_associativity() {
        let (x, y, z) = (pauli("X"), pauli("Y"), pauli("Z"));
        let left = tensor(&tensor(&x, &y), &z);
        let right = tensor(&x, &tensor(&y, &z));
        assert_eq!(left, right);
        assert_eq!(left, pauli("XYZ"));
    }

    proptest! {
        #[test]
        fn eigh_reconstructs(d in 1usize..7, entries in prop::collection::vec(-2.0f64..2.0, 60)) {
            let h = random_hermitian(d, &entries);
            let s = h.eigh();
            prop_assert!(s.reconstruct().distance(&h) <= 1e-10);
            let v = s.eigenvectors();
            let gram = v.adjoint() * v;
            prop_assert!((gram - DMatrix::<C64>::identity(d, d)).norm() <= 1e-10);
            prop_assert!(s.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn identity_function_roundtrip(d in 1usize..7, entries in prop::collection::vec(-2.0f64..2.0, 60)) {
            let h = random_hermitian(d, &entries);
            prop_assert!(h.matrix_fn(|w| w).unwrap().distance(&h) <= 1e-12);
        }

        #[test]
        fn trace_product_symmetric(d in 1usize..6, a in prop::collection::vec(-2.0f64..2.0, 40), b in prop::collection::vec(-2.0f64..2.0, 40)) {
            let (ha, hb) = (random_hermitian(d, &a), random_hermitian(d, &b));
            let ab = trace_product(&ha, &hb).unwrap();
            let ba = trace_product(&hb, &ha).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-12);
        }
    }
}
