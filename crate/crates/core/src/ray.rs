//! Vector-valued functions sampled on truncated rays.
//!
//! The left ray `(-inf, a)` is represented by `[a - T, a]` and the right ray
//! `(b, inf)` by `[b, b + T]`, each on a uniform grid that includes the
//! finite endpoint. Values are stored row-major, one row of `dim` complex
//! numbers per node.

use std::fmt;
use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{CMatrix, CVector};

/// Default grid density: `m = NODES_PER_UNIT * T + 1`.
pub const NODES_PER_UNIT: f64 = 400.0;
pub const DEFAULT_TRUNCATION: f64 = 40.0;

pub fn default_nodes(length: f64) -> usize {
    (NODES_PER_UNIT * length).round() as usize + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

pub fn uniform_nodes(side: Side, endpoint: f64, length: f64, m: usize) -> Result<Vec<f64>> {
    if !(length > 0.0) || !length.is_finite() || !endpoint.is_finite() {
        return Err(Error::BadGrid(format!("truncation length {length} must be positive")));
    }
    if m < 3 {
        return Err(Error::BadGrid(format!("need at least 3 nodes, got {m}")));
    }
    let h = length / (m - 1) as f64;
    Ok(match side {
        // Built from the endpoint so that it is hit exactly.
        Side::Left => (0..m).map(|k| endpoint - (m - 1 - k) as f64 * h).collect(),
        Side::Right => (0..m).map(|k| endpoint + k as f64 * h).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayFunction {
    side: Side,
    endpoint: f64,
    length: f64,
    nodes: Vec<f64>,
    dim: usize,
    values: Vec<Complex64>,
}

impl RayFunction {
    pub fn make_uniform<F>(side: Side, endpoint: f64, length: f64, m: usize, sampler: F) -> Result<Self>
    where
        F: Fn(f64) -> CVector,
    {
        let nodes = uniform_nodes(side, endpoint, length, m)?;
        let mut values = Vec::new();
        let mut dim = None;
        for &t in &nodes {
            let v = sampler(t);
            match dim {
                None => dim = Some(v.len()),
                Some(d) if d != v.len() => {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: v.len(),
                    })
                }
                _ => {}
            }
            values.extend(v.iter().copied());
        }
        let dim = dim.unwrap_or(0);
        if dim == 0 {
            return Err(Error::DegenerateInput("sampler returned empty vectors".into()));
        }
        Self::from_parts(side, endpoint, length, nodes, dim, values)
    }

    /// Wraps row-major samples on the uniform grid of the given ray.
    pub fn from_values(
        side: Side,
        endpoint: f64,
        length: f64,
        m: usize,
        dim: usize,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        let nodes = uniform_nodes(side, endpoint, length, m)?;
        Self::from_parts(side, endpoint, length, nodes, dim, values)
    }

    pub fn zeros(side: Side, endpoint: f64, length: f64, m: usize, dim: usize) -> Result<Self> {
        Self::from_values(side, endpoint, length, m, dim, vec![Complex64::new(0.0, 0.0); m * dim])
    }

    fn from_parts(
        side: Side,
        endpoint: f64,
        length: f64,
        nodes: Vec<f64>,
        dim: usize,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DegenerateInput("dimension 0".into()));
        }
        if values.len() != nodes.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: nodes.len() * dim,
                found: values.len(),
            });
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            side,
            endpoint,
            length,
            nodes,
            dim,
            values,
        })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn endpoint(&self) -> f64 {
        self.endpoint
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> f64 {
        self.length / (self.len() - 1) as f64
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> &[Complex64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn value_vec(&self, i: usize) -> CVector {
        CVector::from_column_slice(self.value(i))
    }

    /// Index of the finite endpoint (`a` or `b`).
    pub fn endpoint_index(&self) -> usize {
        match self.side {
            Side::Left => self.len() - 1,
            Side::Right => 0,
        }
    }

    /// Index of the truncated far end.
    pub fn far_index(&self) -> usize {
        match self.side {
            Side::Left => 0,
            Side::Right => self.len() - 1,
        }
    }

    pub fn endpoint_value(&self) -> CVector {
        self.value_vec(self.endpoint_index())
    }

    pub fn far_magnitude(&self) -> f64 {
        self.value_vec(self.far_index()).norm()
    }

    /// Errors with `TruncationUnsound` when `|u|` at the far end exceeds `tol`.
    pub fn require_decay(&self, tol: f64) -> Result<()> {
        let magnitude = self.far_magnitude();
        if magnitude > tol {
            return Err(Error::TruncationUnsound {
                side: self.side,
                magnitude,
            });
        }
        Ok(())
    }

    pub fn check_compatible(&self, other: &RayFunction) -> Result<()> {
        if self.side != other.side {
            return Err(Error::GridMismatch(format!("{} ray vs {} ray", self.side, other.side)));
        }
        if self.len() != other.len() {
            return Err(Error::GridMismatch(format!("{} nodes vs {}", self.len(), other.len())));
        }
        let scale = 1.0 + self.endpoint.abs().max(self.length);
        if (self.endpoint - other.endpoint).abs() > 1e-12 * scale
            || (self.length - other.length).abs() > 1e-12 * scale
        {
            return Err(Error::GridMismatch("endpoint or truncation length differs".into()));
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    /// Same grid, values produced nodewise by `f(t, u(t))`.
    pub fn map_nodes<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(f64, &[Complex64]) -> CVector,
    {
        let mut values = Vec::with_capacity(self.values.len());
        for (i, &t) in self.nodes.iter().enumerate() {
            let v = f(t, self.value(i));
            if v.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: v.len(),
                });
            }
            values.extend(v.iter().copied());
        }
        Self::from_parts(self.side, self.endpoint, self.length, self.nodes.clone(), self.dim, values)
    }

    /// Nodewise `M u(t)`.
    pub fn apply_matrix(&self, m: &CMatrix) -> Result<Self> {
        if m.ncols() != self.dim || m.nrows() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: m.ncols(),
            });
        }
        self.map_nodes(|_, v| m * CVector::from_column_slice(v))
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: Complex64, other: &RayFunction, beta: Complex64) -> Result<Self> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| alpha * x + beta * y)
            .collect();
        Self::from_parts(self.side, self.endpoint, self.length, self.nodes.clone(), self.dim, values)
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        Self {
            values: self.values.iter().map(|x| alpha * x).collect(),
            ..self.clone()
        }
    }

    pub fn norm_sq(&self) -> f64 {
        quad_inner(self, self).expect("a function is compatible with itself").re
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().max(0.0).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// CSV layout: a `ray,endpoint,T` metadata block followed by the table
    /// `t,re_1,im_1,...,re_dim,im_dim`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(writer);
        let csv_err = |e: csv::Error| Error::Csv(e.to_string());
        w.write_record(["ray", "endpoint", "T"]).map_err(csv_err)?;
        w.write_record([self.side.to_string(), self.endpoint.to_string(), self.length.to_string()])
            .map_err(csv_err)?;
        let mut header = vec!["t".to_string()];
        for j in 1..=self.dim {
            header.push(format!("re_{j}"));
            header.push(format!("im_{j}"));
        }
        w.write_record(&header).map_err(csv_err)?;
        for (i, t) in self.nodes.iter().enumerate() {
            let mut row = vec![t.to_string()];
            for z in self.value(i) {
                row.push(z.re.to_string());
                row.push(z.im.to_string());
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .flexible(true)
            .has_headers(false)
            .from_reader(reader);
        let records: Vec<csv::StringRecord> = r
            .records()
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Csv(e.to_string()))?;
        if records.len() < 6 {
            return Err(Error::Csv("too few rows".into()));
        }
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Csv(format!("not a number: {s:?}")))
        };
        let side = match records[1].get(0).map(str::trim) {
            Some("left") => Side::Left,
            Some("right") => Side::Right,
            other => return Err(Error::Csv(format!("unknown ray {other:?}"))),
        };
        let endpoint = num(records[1].get(1).unwrap_or(""))?;
        let length = num(records[1].get(2).unwrap_or(""))?;
        let width = records[2].len();
        if width < 3 || width.is_multiple_of(2) {
            return Err(Error::Csv("table header must be t plus re/im pairs".into()));
        }
        let dim = (width - 1) / 2;
        let rows = &records[3..];
        let mut values = Vec::with_capacity(rows.len() * dim);
        let mut nodes = Vec::with_capacity(rows.len());
        for row in rows {
            if row.len() != width {
                return Err(Error::Csv("ragged row".into()));
            }
            nodes.push(num(&row[0])?);
            for j in 0..dim {
                values.push(Complex64::new(num(&row[1 + 2 * j])?, num(&row[2 + 2 * j])?));
            }
        }
        let expected = uniform_nodes(side, endpoint, length, nodes.len())?;
        let h = length / (nodes.len() - 1) as f64;
        if nodes.iter().zip(&expected).any(|(x, y)| (x - y).abs() > 1e-9 * h.max(1e-300) + 1e-12) {
            return Err(Error::BadGrid("nodes are not the uniform grid of the declared ray".into()));
        }
        Self::from_parts(side, endpoint, length, expected, dim, values)
    }
}

/// Composite Simpson weights for `m` uniform nodes with spacing `h`. An odd
/// number of intervals closes with Simpson's 3/8 rule on the last three.
pub fn simpson_weights(m: usize, h: f64) -> Vec<f64> {
    assert!(m >= 3, "Simpson weights need at least 3 nodes");
    let mut w = vec![0.0; m];
    let intervals = m - 1;
    let simpson_intervals = if intervals.is_multiple_of(2) { intervals } else { intervals - 3 };
    for k in (0..simpson_intervals).step_by(2) {
        w[k] += h / 3.0;
        w[k + 1] += 4.0 * h / 3.0;
        w[k + 2] += h / 3.0;
    }
    if simpson_intervals < intervals {
        let k = simpson_intervals;
        let c = 3.0 * h / 8.0;
        w[k] += c;
        w[k + 1] += 3.0 * c;
        w[k + 2] += 3.0 * c;
        w[k + 3] += c;
    }
    w
}

/// `∫ (u(t), v(t)) dt` over the truncated ray, linear in `u`, conjugate-linear in `v`.
pub fn quad_inner(u: &RayFunction, v: &RayFunction) -> Result<Complex64> {
    u.check_compatible(v)?;
    let weights = simpson_weights(u.len(), u.step());
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, w) in weights.iter().enumerate() {
        let local: Complex64 = u
            .value(i)
            .iter()
            .zip(v.value(i))
            .map(|(x, y)| x * y.conj())
            .sum();
        acc += local * w;
    }
    Ok(acc)
}

/// Fourth-order finite-difference derivative.
pub fn differentiate(u: &RayFunction) -> Result<RayFunction> {
    let m = u.len();
    if m < 5 {
        return Err(Error::GridTooCoarse { needed: 5, found: m });
    }
    let d = u.dim();
    let inv = 1.0 / (12.0 * u.step());
    let f = |i: usize, j: usize| u.values[i * d + j];
    let mut out = vec![Complex64::new(0.0, 0.0); m * d];
    for j in 0..d {
        out[j] = (-25.0 * f(0, j) + 48.0 * f(1, j) - 36.0 * f(2, j) + 16.0 * f(3, j) - 3.0 * f(4, j)) * inv;
        out[d + j] = (-3.0 * f(0, j) - 10.0 * f(1, j) + 18.0 * f(2, j) - 6.0 * f(3, j) + f(4, j)) * inv;
        for i in 2..m - 2 {
            out[i * d + j] = (f(i - 2, j) - 8.0 * f(i - 1, j) + 8.0 * f(i + 1, j) - f(i + 2, j)) * inv;
        }
        let (a, b, c, e, g) = (m - 1, m - 2, m - 3, m - 4, m - 5);
        out[b * d + j] = (3.0 * f(a, j) + 10.0 * f(b, j) - 18.0 * f(c, j) + 6.0 * f(e, j) - f(g, j)) * inv;
        out[a * d + j] = (25.0 * f(a, j) - 48.0 * f(b, j) + 36.0 * f(c, j) - 16.0 * f(e, j) + 3.0 * f(g, j)) * inv;
    }
    RayFunction::from_parts(u.side, u.endpoint, u.length, u.nodes.clone(), d, out)
}

/// `u = (u1, u2)` on the left and right rays.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoRayFunction {
    pub left: RayFunction,
    pub right: RayFunction,
}

impl TwoRayFunction {
    pub fn new(left: RayFunction, right: RayFunction) -> Result<Self> {
        if left.side() != Side::Left || right.side() != Side::Right {
            return Err(Error::GridMismatch("components must be (left, right)".into()));
        }
        if left.dim() != right.dim() {
            return Err(Error::DimensionMismatch {
                expected: left.dim(),
                found: right.dim(),
            });
        }
        Ok(Self { left, right })
    }

    pub fn zeros(a: f64, b: f64, length: f64, m: usize, dim: usize) -> Result<Self> {
        Self::new(
            RayFunction::zeros(Side::Left, a, length, m, dim)?,
            RayFunction::zeros(Side::Right, b, length, m, dim)?,
        )
    }

    pub fn dim(&self) -> usize {
        self.left.dim()
    }

    pub fn check_compatible(&self, other: &TwoRayFunction) -> Result<()> {
        self.left.check_compatible(&other.left)?;
        self.right.check_compatible(&other.right)
    }

    pub fn combine(&self, alpha: Complex64, other: &TwoRayFunction, beta: Complex64) -> Result<Self> {
        Ok(Self {
            left: self.left.combine(alpha, &other.left, beta)?,
            right: self.right.combine(alpha, &other.right, beta)?,
        })
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        Self {
            left: self.left.scale(alpha),
            right: self.right.scale(alpha),
        }
    }

    pub fn inner(&self, other: &TwoRayFunction) -> Result<Complex64> {
        Ok(quad_inner(&self.left, &other.left)? + quad_inner(&self.right, &other.right)?)
    }

    pub fn norm_sq(&self) -> f64 {
        self.left.norm_sq() + self.right.norm_sq()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().max(0.0).sqrt()
    }

    pub fn require_decay(&self, tol: f64) -> Result<()> {
        self.left.require_decay(tol)?;
        self.right.require_decay(tol)
    }

    pub fn far_magnitude(&self) -> f64 {
        self.left.far_magnitude().max(self.right.far_magnitude())
    }
}

/// `(u1(a), u2(b))`.
pub fn trace(u: &TwoRayFunction) -> (CVector, CVector) {
    (u.left.endpoint_value(), u.right.endpoint_value())
}
