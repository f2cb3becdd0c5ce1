//! Small reference configurations and random generators for them.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::Result;
use crate::extension::{build_extension, random_vector, ExtensionSpec};
use crate::operator::{CMatrix, HermitianOperator, SignedCoefficientPair, UnitaryMap};

/// Scalar model: `A1 = A2 = 0`, `W = e^{i phi}`.
pub fn s1(phi: f64, a: f64, b: f64) -> ExtensionSpec {
    let zero = HermitianOperator::from_diagonal(&[0.0]).expect("1x1 diagonal");
    let pair = SignedCoefficientPair::new(zero.clone(), zero).expect("zero has both signs");
    build_extension(pair, UnitaryMap::phase(1, phi), a, b).expect("scalar model is admissible")
}

/// `A1 = diag(0, -1)`, `A2 = diag(0, 2)`, `W = I` on `[0, 1]`.
pub fn s2() -> ExtensionSpec {
    let pair = SignedCoefficientPair::new(
        HermitianOperator::from_diagonal(&[0.0, -1.0]).expect("diagonal"),
        HermitianOperator::from_diagonal(&[0.0, 2.0]).expect("diagonal"),
    )
    .expect("signs hold");
    build_extension(pair, UnitaryMap::identity(2), 0.0, 1.0).expect("identity coupling is admissible")
}

/// Haar-like random unitary from the QR factor of a complex Gaussian-ish matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let m = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let qr = m.qr();
    let q = qr.q();
    let r = qr.r();
    // Fix column phases so the factorization is unique.
    let phases: Vec<Complex64> = (0..dim)
        .map(|i| {
            let d = r[(i, i)];
            if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) }
        })
        .collect();
    CMatrix::from_fn(dim, dim, |i, j| q[(i, j)] * phases[j])
}

/// Hermitian `U diag(values) U*`.
pub fn rotated_diagonal(u: &CMatrix, values: &[f64]) -> Result<HermitianOperator> {
    let d = CMatrix::from_diagonal(&crate::operator::CVector::from_iterator(
        values.len(),
        values.iter().map(|&v| Complex64::new(v, 0.0)),
    ));
    HermitianOperator::new(u * d * u.adjoint())
}

/// Random configuration with `ker A1` of dimension `rank1` and `ker A2` of
/// dimension `rank2`. `W` maps the first `min(rank1, rank2)` kernel
/// directions of `A1` onto kernel directions of `A2`, so
/// `dim K = min(rank1, rank2)`.
pub fn random_spec<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank1: usize, rank2: usize) -> Result<ExtensionSpec> {
    assert!(rank1 <= dim && rank2 <= dim);
    let u = random_unitary(rng, dim);
    let v = random_unitary(rng, dim);
    let d1: Vec<f64> = (0..dim)
        .map(|i| if i < rank1 { 0.0 } else { -rng.random_range(0.5..3.0) })
        .collect();
    let d2: Vec<f64> = (0..dim)
        .map(|i| if i < rank2 { 0.0 } else { rng.random_range(0.5..3.0) })
        .collect();
    let pair = SignedCoefficientPair::new(rotated_diagonal(&u, &d1)?, rotated_diagonal(&v, &d2)?)?;
    let phases = random_vector(rng, dim).map(|z| if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) });
    let w = &v * CMatrix::from_diagonal(&phases) * u.adjoint();
    let w = UnitaryMap::with_tol(w, 1e-9)?;
    let a: f64 = rng.random_range(-2.0..0.0);
    let b: f64 = a + rng.random_range(0.1..2.0);
    build_extension(pair, w, a, b)
}
