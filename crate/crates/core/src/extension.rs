//! The extensions `L_W` generated by `l(u) = (u1' + A1 u1, u2' + A2 u2)` and
//! the interface condition `u2(b) = W u1(a)`, `u1(a) ∈ ker A1`, `u2(b) ∈ ker A2`.
//!
//! Only the restriction of `W` to the admissible subspace
//! `K = ker A1 ∩ W^{-1} ker A2` affects the domain; the full `W` is kept for
//! reporting and for the boundary-condition residual.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::boundary::{gamma_from_traces, DECAY_TOL};
use crate::error::{Error, Result};
use crate::operator::{
    check_admissible_w, kernel_projector, signed_sqrt, Admissibility, CMatrix, CVector, HermitianOperator,
    Projector, Sign, SignedCoefficientPair, UnitaryMap, DEFAULT_KER_TOL,
};
use crate::ray::{differentiate, trace, RayFunction, Side, TwoRayFunction};

/// `|l u|^2 - |l+ u|^2 = NORMALITY_FACTOR * [(A1 u1(a), u1(a)) - (A2 u2(b), u2(b))]`.
pub const NORMALITY_FACTOR: f64 = 2.0;
pub const DEFAULT_DOMAIN_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct ExtensionSpec {
    coeffs: SignedCoefficientPair,
    w: UnitaryMap,
    a: f64,
    b: f64,
    ker_tol: f64,
    p1: Projector,
    p2: Projector,
    admissible: Admissibility,
    p_k: Projector,
    sqrt_neg_a1: HermitianOperator,
    sqrt_a2: HermitianOperator,
}

pub fn build_extension(coeffs: SignedCoefficientPair, w: UnitaryMap, a: f64, b: f64) -> Result<ExtensionSpec> {
    build_extension_with_tol(coeffs, w, a, b, DEFAULT_KER_TOL)
}

/// `ker_tol` is relative to `max(1, spectral radius)` of each coefficient.
pub fn build_extension_with_tol(
    coeffs: SignedCoefficientPair,
    w: UnitaryMap,
    a: f64,
    b: f64,
    ker_tol: f64,
) -> Result<ExtensionSpec> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInterval { a, b });
    }
    if w.dim() != coeffs.dim() {
        return Err(Error::DimensionMismatch {
            expected: coeffs.dim(),
            found: w.dim(),
        });
    }
    let sqrt_neg_a1 = signed_sqrt(coeffs.a1(), Sign::NonPositive, coeffs.sign_tol())?;
    let sqrt_a2 = signed_sqrt(coeffs.a2(), Sign::NonNegative, coeffs.sign_tol())?;
    let p1 = kernel_projector(coeffs.a1(), coeffs.a1().kernel_threshold(ker_tol));
    let p2 = kernel_projector(coeffs.a2(), coeffs.a2().kernel_threshold(ker_tol));
    let admissible = check_admissible_w(&w, &p1, &p2)?;
    let p_k = Projector::from_basis(w.dim(), &admissible.basis);
    Ok(ExtensionSpec {
        coeffs,
        w,
        a,
        b,
        ker_tol,
        p1,
        p2,
        admissible,
        p_k,
        sqrt_neg_a1,
        sqrt_a2,
    })
}

impl ExtensionSpec {
    pub fn dim(&self) -> usize {
        self.w.dim()
    }

    pub fn coeffs(&self) -> &SignedCoefficientPair {
        &self.coeffs
    }

    pub fn a1(&self) -> &HermitianOperator {
        self.coeffs.a1()
    }

    pub fn a2(&self) -> &HermitianOperator {
        self.coeffs.a2()
    }

    pub fn w(&self) -> &UnitaryMap {
        &self.w
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn ker_tol(&self) -> f64 {
        self.ker_tol
    }

    pub fn p1(&self) -> &Projector {
        &self.p1
    }

    pub fn p2(&self) -> &Projector {
        &self.p2
    }

    pub fn admissibility(&self) -> &Admissibility {
        &self.admissible
    }

    /// Orthonormal basis of `K`, one column per vector.
    pub fn k_basis(&self) -> &CMatrix {
        &self.admissible.basis
    }

    pub fn k_projector(&self) -> &Projector {
        &self.p_k
    }

    pub fn k_dim(&self) -> usize {
        self.admissible.dim()
    }

    pub fn sqrt_neg_a1(&self) -> &HermitianOperator {
        &self.sqrt_neg_a1
    }

    pub fn sqrt_a2(&self) -> &HermitianOperator {
        &self.sqrt_a2
    }

    /// `dim ker A1 = dim ker A2 > 0`, necessary for a normal extension to exist.
    pub fn normal_extension_possible(&self) -> bool {
        self.p1.rank() == self.p2.rank() && self.p1.rank() > 0
    }

    /// One coefficient is injective, so `L0` admits no proper normal extension.
    pub fn maximal_normal(&self) -> bool {
        self.p1.rank() == 0 || self.p2.rank() == 0
    }

    pub fn check_grids(&self, u: &TwoRayFunction) -> Result<()> {
        if u.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: u.dim(),
            });
        }
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs()));
        if !close(u.left.endpoint(), self.a) || !close(u.right.endpoint(), self.b) {
            return Err(Error::GridMismatch(format!(
                "rays end at ({}, {}), extension expects ({}, {})",
                u.left.endpoint(),
                u.right.endpoint(),
                self.a,
                self.b
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `l(u) = (u1' + A1 u1, u2' + A2 u2)`.
    Direct,
    /// `l+(v) = (-v1' + A1 v1, -v2' + A2 v2)`.
    Adjoint,
}

fn apply_ray(u: &RayFunction, op: &HermitianOperator, variant: Variant) -> Result<RayFunction> {
    let du = differentiate(u)?;
    let au = u.apply_matrix(op.entries())?;
    let sign = match variant {
        Variant::Direct => 1.0,
        Variant::Adjoint => -1.0,
    };
    du.combine(Complex64::new(sign, 0.0), &au, Complex64::new(1.0, 0.0))
}

pub fn apply_expression(spec: &ExtensionSpec, u: &TwoRayFunction, variant: Variant) -> Result<TwoRayFunction> {
    spec.check_grids(u)?;
    TwoRayFunction::new(
        apply_ray(&u.left, spec.a1(), variant)?,
        apply_ray(&u.right, spec.a2(), variant)?,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainViolation {
    Grid,
    Decay,
    LeftKernel,
    RightKernel,
    Coupling,
}

impl fmt::Display for DomainViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainViolation::Grid => "grid",
            DomainViolation::Decay => "decay",
            DomainViolation::LeftKernel => "left kernel",
            DomainViolation::RightKernel => "right kernel",
            DomainViolation::Coupling => "coupling",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainReport {
    pub in_domain: bool,
    pub reasons: Vec<DomainViolation>,
    pub far_end_magnitude: f64,
    pub left_kernel_distance: f64,
    pub right_kernel_distance: f64,
    pub coupling_distance: f64,
}

pub fn domain_check(spec: &ExtensionSpec, u: &TwoRayFunction, tol: f64) -> DomainReport {
    let mut reasons = Vec::new();
    if spec.check_grids(u).is_err() {
        return DomainReport {
            in_domain: false,
            reasons: vec![DomainViolation::Grid],
            far_end_magnitude: f64::NAN,
            left_kernel_distance: f64::NAN,
            right_kernel_distance: f64::NAN,
            coupling_distance: f64::NAN,
        };
    }
    let far = u.far_magnitude();
    if !(far <= tol) {
        reasons.push(DomainViolation::Decay);
    }
    let (u1_a, u2_b) = trace(u);
    let left = spec.p1.distance(&u1_a);
    let right = spec.p2.distance(&u2_b);
    let coupling = (&u2_b - spec.w.apply(&u1_a)).norm();
    if !(left <= tol) {
        reasons.push(DomainViolation::LeftKernel);
    }
    if !(right <= tol) {
        reasons.push(DomainViolation::RightKernel);
    }
    if !(coupling <= tol) {
        reasons.push(DomainViolation::Coupling);
    }
    DomainReport {
        in_domain: reasons.is_empty(),
        reasons,
        far_end_magnitude: far,
        left_kernel_distance: left,
        right_kernel_distance: right,
        coupling_distance: coupling,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalityReport {
    /// `|l u|^2 - |l+ u|^2` by quadrature.
    pub lhs_sq_diff: f64,
    /// `(A1 u1(a), u1(a)) - (A2 u2(b), u2(b))`.
    pub boundary_formula: f64,
    /// `-|(-A1)^{1/2} u1(a)|^2 - |A2^{1/2} u2(b)|^2`, equal to `boundary_formula`.
    pub square_root_form: f64,
    pub factor: f64,
    /// `|lhs_sq_diff - factor * boundary_formula|`.
    pub residual: f64,
}

pub fn normality_residual(spec: &ExtensionSpec, u: &TwoRayFunction) -> Result<NormalityReport> {
    spec.check_grids(u)?;
    u.require_decay(DECAY_TOL)?;
    let lu = apply_expression(spec, u, Variant::Direct)?;
    let lpu = apply_expression(spec, u, Variant::Adjoint)?;
    let lhs_sq_diff = lu.norm_sq() - lpu.norm_sq();
    let (u1_a, u2_b) = trace(u);
    let boundary_formula = spec.a1().quadratic_form(&u1_a) - spec.a2().quadratic_form(&u2_b);
    let square_root_form =
        -spec.sqrt_neg_a1.apply(&u1_a).norm_squared() - spec.sqrt_a2.apply(&u2_b).norm_squared();
    Ok(NormalityReport {
        lhs_sq_diff,
        boundary_formula,
        square_root_form,
        factor: NORMALITY_FACTOR,
        residual: (lhs_sq_diff - NORMALITY_FACTOR * boundary_formula).abs(),
    })
}

/// `|(W - E) Y1 + i (W + E) Y2|` from the traces, which equals `√2 |u2(b) - W u1(a)|`.
pub fn selfadjoint_bc_residual_traces(w: &UnitaryMap, u1_a: &CVector, u2_b: &CVector) -> f64 {
    let data = gamma_from_traces(u1_a, u2_b);
    let e = CMatrix::identity(w.dim(), w.dim());
    let minus = w.entries() - &e;
    let plus = w.entries() + &e;
    (minus * &data.y1 + (plus * &data.y2) * Complex64::new(0.0, 1.0)).norm()
}

pub fn selfadjoint_bc_residual(spec: &ExtensionSpec, u: &TwoRayFunction) -> f64 {
    let (u1_a, u2_b) = trace(u);
    selfadjoint_bc_residual_traces(&spec.w, &u1_a, &u2_b)
}

/// `|(l u, v) - (u, l+ v)|` by quadrature.
pub fn adjoint_green_form(spec: &ExtensionSpec, u: &TwoRayFunction, v: &TwoRayFunction) -> Result<f64> {
    u.check_compatible(v)?;
    u.require_decay(DECAY_TOL)?;
    v.require_decay(DECAY_TOL)?;
    let lu = apply_expression(spec, u, Variant::Direct)?;
    let lpv = apply_expression(spec, v, Variant::Adjoint)?;
    Ok((lu.inner(v)? - u.inner(&lpv)?).norm())
}

/// Which adjoint-domain description to sample from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjointDomain {
    /// `v1(a) = W* v2(b)` with both traces in the kernels.
    Stated,
    /// Only `P_K (v1(a) - W* v2(b)) = 0` is imposed.
    KRelaxed,
}

pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVector {
    CVector::from_iterator(
        dim,
        (0..dim).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))),
    )
}

/// Random vector in the span of the orthonormal columns of `basis`.
pub fn random_in_span<R: Rng + ?Sized>(rng: &mut R, basis: &CMatrix) -> CVector {
    let coeffs = random_vector(rng, basis.ncols());
    if basis.ncols() == 0 {
        CVector::zeros(basis.nrows())
    } else {
        basis * coeffs
    }
}

/// Smooth decaying profile with prescribed traces: on each ray
/// `e^{-r|t - endpoint|} (trace + (1 - e^{-|t - endpoint|}) d)` with random
/// rate `r ∈ [0.75, 2]` and random interior direction `d`.
pub fn profile_with_traces<R: Rng + ?Sized>(
    rng: &mut R,
    a: f64,
    b: f64,
    u1_a: &CVector,
    u2_b: &CVector,
    length: f64,
    m: usize,
) -> Result<TwoRayFunction> {
    let dim = u1_a.len();
    let mut ray = |side: Side, endpoint: f64, value: &CVector| -> Result<RayFunction> {
        let rate: f64 = rng.random_range(0.75..2.0);
        let d = random_vector(rng, dim);
        RayFunction::make_uniform(side, endpoint, length, m, |t| {
            let x = (t - endpoint).abs();
            let envelope = Complex64::new((-rate * x).exp(), 0.0);
            (value + &d * Complex64::new(1.0 - (-x).exp(), 0.0)) * envelope
        })
    };
    let left = ray(Side::Left, a, u1_a)?;
    let right = ray(Side::Right, b, u2_b)?;
    TwoRayFunction::new(left, right)
}

/// A random element of the domain of `L_W` (up to truncation).
pub fn random_domain_function<R: Rng + ?Sized>(
    spec: &ExtensionSpec,
    rng: &mut R,
    length: f64,
    m: usize,
) -> Result<TwoRayFunction> {
    let u1_a = random_in_span(rng, spec.k_basis());
    let u2_b = spec.w.apply(&u1_a);
    profile_with_traces(rng, spec.a, spec.b, &u1_a, &u2_b, length, m)
}

/// A random element of the adjoint domain under the requested description.
pub fn random_adjoint_function<R: Rng + ?Sized>(
    spec: &ExtensionSpec,
    rng: &mut R,
    domain: AdjointDomain,
    length: f64,
    m: usize,
) -> Result<TwoRayFunction> {
    let (v1_a, v2_b) = match domain {
        AdjointDomain::Stated => {
            let v1_a = random_in_span(rng, spec.k_basis());
            (v1_a.clone(), spec.w.apply(&v1_a))
        }
        AdjointDomain::KRelaxed => {
            let v2_b = random_vector(rng, spec.dim());
            let z = random_vector(rng, spec.dim());
            let off_k = &z - spec.p_k.apply(&z);
            (spec.w.adjoint().apply(&v2_b) + off_k, v2_b)
        }
    };
    profile_with_traces(rng, spec.a, spec.b, &v1_a, &v2_b, length, m)
}
