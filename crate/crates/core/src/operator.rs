//! Hermitian-operator calculus on `C^n`.
//!
//! The coefficients `A1 <= 0` and `A2 >= 0` of the two-ray expression are
//! modelled as Hermitian matrices with a cached eigendecomposition. Every
//! derived object (square roots, kernel projectors, the propagator
//! `exp(-(A - lambda) tau)`) is evaluated in that eigenbasis.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const DEFAULT_HERMITICITY_TOL: f64 = 1e-12;
pub const DEFAULT_SIGN_TOL: f64 = 1e-10;
pub const DEFAULT_UNITARITY_TOL: f64 = 1e-10;
pub const DEFAULT_KER_TOL: f64 = 1e-10;
pub const DEFAULT_EXPONENT_CAP: f64 = 700.0;
/// Singular values above `1 - INTERSECTION_CUTOFF` count as "fully inside".
pub const INTERSECTION_CUTOFF: f64 = 1e-10;

fn max_entry_deviation(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Frobenius norm of `a - b` relative to `max(1, |b|_F)`.
fn relative_frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    NonPositive,
    NonNegative,
}

impl Sign {
    fn label(self) -> &'static str {
        match self {
            Sign::NonPositive => "nonpositive",
            Sign::NonNegative => "nonnegative",
        }
    }
}

/// A self-adjoint matrix together with its ascending eigendecomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    entries: CMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
    hermiticity_tol: f64,
}

impl HermitianOperator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        Self::with_tol(entries, DEFAULT_HERMITICITY_TOL)
    }

    pub fn with_tol(entries: CMatrix, hermiticity_tol: f64) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(Error::DegenerateInput("dimension 0".into()));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let adjoint = entries.adjoint();
        let deviation = max_entry_deviation(&entries, &adjoint);
        if deviation > hermiticity_tol {
            return Err(Error::NonHermitian {
                deviation,
                tol: hermiticity_tol,
            });
        }
        let symmetric = (&entries + &adjoint).scale(0.5);
        let eig = SymmetricEigen::new(symmetric);
        let mut order: Vec<usize> = (0..rows).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let eigenvectors = CMatrix::from_fn(rows, rows, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(Self {
            entries,
            eigenvalues,
            eigenvectors,
            hermiticity_tol,
        })
    }

    pub fn from_diagonal(diagonal: &[f64]) -> Result<Self> {
        let n = diagonal.len();
        let entries = CMatrix::from_fn(n, n, |r, c| {
            if r == c {
                Complex64::new(diagonal[r], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self::new(entries)
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::from_diagonal(&vec![0.0; dim])
    }

    /// Builds an operator from known eigendata; `vectors` must be unitary.
    fn from_eigen(values: Vec<f64>, vectors: CMatrix, hermiticity_tol: f64) -> Self {
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        let eigenvectors = CMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
        let entries = reconstruct(&eigenvalues, &eigenvectors);
        Self {
            entries,
            eigenvalues,
            eigenvectors,
            hermiticity_tol,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    /// Ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal columns, ordered like [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn hermiticity_tol(&self) -> f64 {
        self.hermiticity_tol
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn reconstruction_error(&self) -> f64 {
        relative_frobenius(&reconstruct(&self.eigenvalues, &self.eigenvectors), &self.entries)
    }

    pub fn orthonormality_error(&self) -> f64 {
        let n = self.dim();
        max_entry_deviation(
            &(self.eigenvectors.adjoint() * &self.eigenvectors),
            &CMatrix::identity(n, n),
        )
    }

    pub fn apply(&self, x: &CVector) -> CVector {
        &self.entries * x
    }

    /// Real part of `(A x, x)`.
    pub fn quadratic_form(&self, x: &CVector) -> f64 {
        self.apply(x).dotc(x).re
    }

    /// Absolute kernel threshold: `ker_tol` scaled by `max(1, spectral radius)`.
    pub fn kernel_threshold(&self, ker_tol: f64) -> f64 {
        ker_tol * self.spectral_radius().max(1.0)
    }

    pub fn check_sign(&self, sign: Sign, sign_tol: f64) -> Result<()> {
        for &v in &self.eigenvalues {
            let bad = match sign {
                Sign::NonPositive => v > sign_tol,
                Sign::NonNegative => v < -sign_tol,
            };
            if bad {
                return Err(Error::SignViolation {
                    eigenvalue: v,
                    sign: sign.label(),
                });
            }
        }
        Ok(())
    }
}

fn reconstruct(values: &[f64], vectors: &CMatrix) -> CMatrix {
    let mut scaled = vectors.clone();
    for (c, &v) in values.iter().enumerate() {
        scaled.column_mut(c).scale_mut(v);
    }
    scaled * vectors.adjoint()
}

pub fn spectral_decompose(op: &CMatrix) -> Result<HermitianOperator> {
    HermitianOperator::new(op.clone())
}

/// An orthogonal projector and its rank.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: CMatrix,
    rank: usize,
}

impl Projector {
    /// Projector onto the span of the orthonormal columns of `basis`.
    pub fn from_basis(dim: usize, basis: &CMatrix) -> Self {
        let matrix = if basis.ncols() == 0 {
            CMatrix::zeros(dim, dim)
        } else {
            basis * basis.adjoint()
        };
        Self {
            matrix,
            rank: basis.ncols(),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, x: &CVector) -> CVector {
        &self.matrix * x
    }

    /// `|(I - P) x|`.
    pub fn distance(&self, x: &CVector) -> f64 {
        (x - self.apply(x)).norm()
    }
}

/// Projector onto the eigenvectors of `op` with `|eigenvalue| <= ker_tol`.
pub fn kernel_projector(op: &HermitianOperator, ker_tol: f64) -> Projector {
    assert!(ker_tol > 0.0, "ker_tol must be positive");
    let cols: Vec<usize> = (0..op.dim())
        .filter(|&i| op.eigenvalues[i].abs() <= ker_tol)
        .collect();
    let basis = op.eigenvectors.select_columns(&cols);
    Projector::from_basis(op.dim(), &basis)
}

/// `(-A)^{1/2}` for a nonpositive operator, `A^{1/2}` for a nonnegative one.
pub fn signed_sqrt(op: &HermitianOperator, sign: Sign, sign_tol: f64) -> Result<HermitianOperator> {
    op.check_sign(sign, sign_tol)?;
    let values = op
        .eigenvalues
        .iter()
        .map(|&v| {
            let v = match sign {
                Sign::NonPositive => -v,
                Sign::NonNegative => v,
            };
            v.max(0.0).sqrt()
        })
        .collect();
    Ok(HermitianOperator::from_eigen(
        values,
        op.eigenvectors.clone(),
        op.hermiticity_tol,
    ))
}

pub fn propagator(op: &HermitianOperator, lambda: Complex64, tau: f64) -> Result<CMatrix> {
    propagator_with_cap(op, lambda, tau, DEFAULT_EXPONENT_CAP)
}

/// `exp(-(A - lambda) tau)` evaluated through the eigendecomposition.
pub fn propagator_with_cap(
    op: &HermitianOperator,
    lambda: Complex64,
    tau: f64,
    cap: f64,
) -> Result<CMatrix> {
    let n = op.dim();
    let mut scaled = op.eigenvectors.clone();
    for c in 0..n {
        let exponent = -(Complex64::new(op.eigenvalues[c], 0.0) - lambda) * tau;
        if exponent.re > cap {
            return Err(Error::Overflow {
                exponent: exponent.re,
                cap,
            });
        }
        let factor = exponent.exp();
        scaled.column_mut(c).iter_mut().for_each(|z| *z *= factor);
    }
    Ok(scaled * op.eigenvectors.adjoint())
}

/// The extension parameter `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMap {
    entries: CMatrix,
    unitarity_tol: f64,
}

impl UnitaryMap {
    pub fn new(entries: CMatrix) -> Result<Self> {
        Self::with_tol(entries, DEFAULT_UNITARITY_TOL)
    }

    pub fn with_tol(entries: CMatrix, unitarity_tol: f64) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(Error::DegenerateInput("dimension 0".into()));
        }
        let deviation = max_entry_deviation(
            &(entries.adjoint() * &entries),
            &CMatrix::identity(rows, rows),
        );
        if !(deviation <= unitarity_tol) {
            return Err(Error::NotUnitary {
                deviation,
                tol: unitarity_tol,
            });
        }
        Ok(Self {
            entries,
            unitarity_tol,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: CMatrix::identity(dim, dim),
            unitarity_tol: DEFAULT_UNITARITY_TOL,
        }
    }

    /// `e^{i phi} E`.
    pub fn phase(dim: usize, phi: f64) -> Self {
        Self {
            entries: CMatrix::identity(dim, dim) * Complex64::from_polar(1.0, phi),
            unitarity_tol: DEFAULT_UNITARITY_TOL,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
            unitarity_tol: self.unitarity_tol,
        }
    }

    pub fn apply(&self, x: &CVector) -> CVector {
        &self.entries * x
    }
}

/// `A1 <= 0` on the left ray and `A2 >= 0` on the right ray.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedCoefficientPair {
    a1: HermitianOperator,
    a2: HermitianOperator,
    sign_tol: f64,
}

impl SignedCoefficientPair {
    pub fn new(a1: HermitianOperator, a2: HermitianOperator) -> Result<Self> {
        Self::with_tol(a1, a2, DEFAULT_SIGN_TOL)
    }

    pub fn with_tol(a1: HermitianOperator, a2: HermitianOperator, sign_tol: f64) -> Result<Self> {
        if a1.dim() != a2.dim() {
            return Err(Error::DimensionMismatch {
                expected: a1.dim(),
                found: a2.dim(),
            });
        }
        a1.check_sign(Sign::NonPositive, sign_tol)?;
        a2.check_sign(Sign::NonNegative, sign_tol)?;
        Ok(Self { a1, a2, sign_tol })
    }

    pub fn a1(&self) -> &HermitianOperator {
        &self.a1
    }

    pub fn a2(&self) -> &HermitianOperator {
        &self.a2
    }

    pub fn sign_tol(&self) -> f64 {
        self.sign_tol
    }

    pub fn dim(&self) -> usize {
        self.a1.dim()
    }
}

/// Orthonormal basis of `{x : |M x| = |x|}` restricted to the top singular
/// space of a contraction `M`, i.e. right singular vectors with
/// `sigma > 1 - INTERSECTION_CUTOFF`.
pub fn unit_singular_subspace(m: &CMatrix) -> CMatrix {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1.0 - INTERSECTION_CUTOFF)
        .collect();
    let mut basis = CMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        basis.set_column(c, &v_t.row(i).adjoint());
    }
    basis
}

#[derive(Debug, Clone, PartialEq)]
pub struct Admissibility {
    /// Orthonormal basis of `K = ran P1 ∩ W^{-1} ran P2`, one column per vector.
    pub basis: CMatrix,
    pub rank_p1: usize,
    pub rank_p2: usize,
    pub maps_kernel_onto: bool,
}

impl Admissibility {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

pub fn check_admissible_w(w: &UnitaryMap, p1: &Projector, p2: &Projector) -> Result<Admissibility> {
    let n = w.dim();
    for found in [p1.dim(), p2.dim()] {
        if found != n {
            return Err(Error::DimensionMismatch { expected: n, found });
        }
    }
    let product = p2.matrix() * w.entries() * p1.matrix();
    let basis = unit_singular_subspace(&product);
    let k = basis.ncols();
    Ok(Admissibility {
        basis,
        rank_p1: p1.rank(),
        rank_p2: p2.rank(),
        maps_kernel_onto: k == p1.rank() && k == p2.rank(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diag(d: &[f64]) -> HermitianOperator {
        HermitianOperator::from_diagonal(d).unwrap()
    }

    #[test]
    fn decompose_diagonal_and_identity() {
        assert_eq!(diag(&[0.0, -1.0]).eigenvalues(), &[-1.0, 0.0]);
        let id = spectral_decompose(&CMatrix::identity(3, 3)).unwrap();
        for v in id.eigenvalues() {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn decompose_rejects_bad_input() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = c(1e-6, 0.0);
        assert!(matches!(spectral_decompose(&m), Err(Error::NonHermitian { .. })));
        assert!(matches!(
            spectral_decompose(&CMatrix::zeros(0, 0)),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn complex_hermitian_reconstructs() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)],
        );
        let op = spectral_decompose(&m).unwrap();
        assert!((op.eigenvalues()[0] - 1.0).abs() < 1e-12);
        assert!((op.eigenvalues()[1] - 3.0).abs() < 1e-12);
        assert!(op.reconstruction_error() < 1e-12);
        assert!(op.orthonormality_error() < 1e-12);
    }

    #[test]
    fn kernel_projector_examples() {
        let p = kernel_projector(&diag(&[0.0, 2.0]), 1e-10);
        assert_eq!(p.rank(), 1);
        assert!((p.matrix()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(p.matrix()[(1, 1)].norm() < 1e-15);

        let p = kernel_projector(&HermitianOperator::zeros(2).unwrap(), 1e-10);
        assert_eq!(p.rank(), 2);
        assert!((p.matrix() - CMatrix::identity(2, 2)).norm() < 1e-15);

        let p = kernel_projector(&diag(&[1e-14, 1.0]), 1e-10);
        assert_eq!(p.rank(), 1);
        assert!((p.matrix()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn signed_sqrt_examples() {
        let r = signed_sqrt(&diag(&[0.0, -4.0]), Sign::NonPositive, 1e-10).unwrap();
        assert!((r.entries()[(0, 0)]).norm() < 1e-15);
        assert!((r.entries()[(1, 1)] - c(2.0, 0.0)).norm() < 1e-14);
        let r = signed_sqrt(&diag(&[0.0, 9.0]), Sign::NonNegative, 1e-10).unwrap();
        assert!((r.entries()[(1, 1)] - c(3.0, 0.0)).norm() < 1e-14);
        assert!(matches!(
            signed_sqrt(&diag(&[-1.0, 9.0]), Sign::NonNegative, 1e-10),
            Err(Error::SignViolation { .. })
        ));
    }

    #[test]
    fn signed_sqrt_clamps_roundoff() {
        let r = signed_sqrt(&diag(&[-1e-13, 4.0]), Sign::NonNegative, 1e-10).unwrap();
        assert_eq!(r.eigenvalues()[0], 0.0);
    }

    #[test]
    fn propagator_scalar_cases() {
        let p = propagator(&diag(&[0.0]), c(0.0, 0.0), 5.0).unwrap();
        assert!((p[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        let p = propagator(&diag(&[2.0]), c(0.0, 0.0), 1.0).unwrap();
        assert!((p[(0, 0)].re - 0.135335283236613).abs() < 1e-12);
    }

    #[test]
    fn propagator_overflow() {
        let r = propagator(&diag(&[-10.0]), c(0.0, 0.0), 100.0);
        assert!(matches!(r, Err(Error::Overflow { .. })));
    }

    #[test]
    fn admissible_examples() {
        let zero = HermitianOperator::zeros(1).unwrap();
        let p = kernel_projector(&zero, 1e-10);
        let w = UnitaryMap::phase(1, PI / 2.0);
        let adm = check_admissible_w(&w, &p, &p).unwrap();
        assert_eq!(adm.dim(), 1);
        assert!(adm.maps_kernel_onto);

        let p1 = kernel_projector(&diag(&[0.0, -1.0]), 1e-10);
        let p2 = kernel_projector(&diag(&[0.0, 2.0]), 1e-10);
        let adm = check_admissible_w(&UnitaryMap::identity(2), &p1, &p2).unwrap();
        assert_eq!(adm.dim(), 1);
        assert!((adm.basis[(0, 0)].norm() - 1.0).abs() < 1e-12);
        assert!(adm.maps_kernel_onto);

        let swap = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let adm = check_admissible_w(&UnitaryMap::new(swap).unwrap(), &p1, &p2).unwrap();
        assert_eq!(adm.dim(), 0);
        assert!(!adm.maps_kernel_onto);
    }

    #[test]
    fn admissible_dimension_mismatch() {
        let p1 = kernel_projector(&diag(&[0.0, -1.0]), 1e-10);
        let p2 = kernel_projector(&diag(&[0.0]), 1e-10);
        assert!(matches!(
            check_admissible_w(&UnitaryMap::identity(2), &p1, &p2),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn coefficient_pair_signs() {
        assert!(SignedCoefficientPair::new(diag(&[0.0, -1.0]), diag(&[0.0, 2.0])).is_ok());
        assert!(matches!(
            SignedCoefficientPair::new(diag(&[0.0, 1.0]), diag(&[0.0, 2.0])),
            Err(Error::SignViolation { .. })
        ));
        assert!(matches!(
            SignedCoefficientPair::new(diag(&[0.0]), diag(&[0.0, 2.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn unitary_rejects_non_unitary() {
        let m = CMatrix::identity(2, 2) * c(1.1, 0.0);
        assert!(matches!(UnitaryMap::new(m), Err(Error::NotUnitary { .. })));
    }
}
