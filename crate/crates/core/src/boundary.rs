//! Space of boundary values for `M0`, the minimal operator of `-i d/dt` on
//! the two rays.
//!
//! `Y1(u) = (u2(b) + u1(a)) / (i√2)` and `Y2(u) = (u2(b) - u1(a)) / √2`.
//! Evaluating both sides of the abstract Green identity with these maps
//! gives `rhs = -lhs`, so the identity holds with the roles of `Y1` and `Y2`
//! exchanged. Which form is used is decided once per process by a
//! self-test on the witness family and surfaced through [`sign_calibration`].

use std::f64::consts::SQRT_2;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::CVector;
use crate::ray::{differentiate, quad_inner, trace, RayFunction, Side, TwoRayFunction};

/// Far-end magnitude above which truncated rays are not trusted.
pub const DECAY_TOL: f64 = 1e-8;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub y1: CVector,
    pub y2: CVector,
}

pub fn gamma_from_traces(u1_a: &CVector, u2_b: &CVector) -> BoundaryData {
    let y1 = (u2_b + u1_a) / (I * SQRT_2);
    let y2 = (u2_b - u1_a) / Complex64::new(SQRT_2, 0.0);
    BoundaryData { y1, y2 }
}

pub fn gamma_maps(u: &TwoRayFunction) -> BoundaryData {
    let (u1_a, u2_b) = trace(u);
    gamma_from_traces(&u1_a, &u2_b)
}

/// Which bilinear form of the boundary data balances `(M u, v) - (u, M v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    /// `(Y1 u, Y2 v) - (Y2 u, Y1 v)`.
    Direct,
    /// `(Y2 u, Y1 v) - (Y1 u, Y2 v)`.
    Exchanged,
}

impl SignConvention {
    pub fn rhs(self, u: &BoundaryData, v: &BoundaryData) -> Complex64 {
        let direct = v.y2.dotc(&u.y1) - v.y1.dotc(&u.y2);
        match self {
            SignConvention::Direct => direct,
            SignConvention::Exchanged => -direct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignCalibration {
    pub convention: SignConvention,
    pub residual_direct: f64,
    pub residual_exchanged: f64,
}

/// Runs the witness self-test once and caches the outcome.
pub fn sign_calibration() -> SignCalibration {
    static CALIBRATION: OnceLock<SignCalibration> = OnceLock::new();
    *CALIBRATION.get_or_init(calibrate)
}

pub fn sign_convention() -> SignConvention {
    sign_calibration().convention
}

fn calibrate() -> SignCalibration {
    let c = Complex64::new;
    let pairs = [
        ([c(1.0, 0.0), c(0.0, -0.5)], [c(0.3, 0.7), c(-1.0, 0.2)]),
        ([c(-0.4, 1.1), c(0.9, 0.0)], [c(0.0, 1.0), c(0.5, -0.5)]),
    ];
    let witnesses: Vec<TwoRayFunction> = pairs
        .iter()
        .map(|(f, g)| {
            let f = CVector::from_column_slice(f);
            let g = CVector::from_column_slice(g);
            boundary_witness(&f, &g, 0.0, 1.0, 30.0, 6001).expect("witness grid is valid")
        })
        .collect();
    let mut direct = 0.0_f64;
    let mut exchanged = 0.0_f64;
    for u in &witnesses {
        for v in &witnesses {
            let sides = green_sides(u, v).expect("witnesses decay");
            let rhs = SignConvention::Direct.rhs(&sides.gamma_u, &sides.gamma_v);
            direct = direct.max((sides.lhs - rhs).norm());
            exchanged = exchanged.max((sides.lhs + rhs).norm());
        }
    }
    SignCalibration {
        convention: if direct <= exchanged {
            SignConvention::Direct
        } else {
            SignConvention::Exchanged
        },
        residual_direct: direct,
        residual_exchanged: exchanged,
    }
}

/// Both sides of the Green identity before a convention is applied.
#[derive(Debug, Clone)]
pub struct GreenSides {
    /// `(M u, v) - (u, M v)` by quadrature.
    pub lhs: Complex64,
    pub gamma_u: BoundaryData,
    pub gamma_v: BoundaryData,
}

fn apply_m(u: &RayFunction) -> Result<RayFunction> {
    Ok(differentiate(u)?.scale(-I))
}

pub fn green_sides(u: &TwoRayFunction, v: &TwoRayFunction) -> Result<GreenSides> {
    u.check_compatible(v)?;
    u.require_decay(DECAY_TOL)?;
    v.require_decay(DECAY_TOL)?;
    let mut lhs = Complex64::new(0.0, 0.0);
    for (x, y) in [(&u.left, &v.left), (&u.right, &v.right)] {
        lhs += quad_inner(&apply_m(x)?, y)? - quad_inner(x, &apply_m(y)?)?;
    }
    Ok(GreenSides {
        lhs,
        gamma_u: gamma_maps(u),
        gamma_v: gamma_maps(v),
    })
}

pub fn greens_residual(u: &TwoRayFunction, v: &TwoRayFunction) -> Result<f64> {
    greens_residual_with(u, v, sign_convention())
}

pub fn greens_residual_with(u: &TwoRayFunction, v: &TwoRayFunction, convention: SignConvention) -> Result<f64> {
    let sides = green_sides(u, v)?;
    Ok((sides.lhs - convention.rhs(&sides.gamma_u, &sides.gamma_v)).norm())
}

/// The surjectivity witness: unit-rate exponentials with traces
/// `u1(a) = (i f - g)/√2`, `u2(b) = (i f + g)/√2`, so that `Y1 u = f`, `Y2 u = g`.
pub fn boundary_witness(f: &CVector, g: &CVector, a: f64, b: f64, length: f64, m: usize) -> Result<TwoRayFunction> {
    if f.len() != g.len() {
        return Err(Error::DimensionMismatch {
            expected: f.len(),
            found: g.len(),
        });
    }
    let s = Complex64::new(SQRT_2, 0.0);
    let left_trace = (f * I - g) / s;
    let right_trace = (f * I + g) / s;
    let left = RayFunction::make_uniform(Side::Left, a, length, m, |t| {
        &left_trace * Complex64::new((t - a).exp(), 0.0)
    })?;
    let right = RayFunction::make_uniform(Side::Right, b, length, m, |t| {
        &right_trace * Complex64::new((b - t).exp(), 0.0)
    })?;
    TwoRayFunction::new(left, right)
}
