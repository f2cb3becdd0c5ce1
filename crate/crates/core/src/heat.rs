//! Sign-changing heat equation `u_t - sgn(t) u_xx = f` for `t < -1` and
//! `t > 1`, `x ∈ [0, 1]`, with `u(1, x) = e^{i phi} u(-1, x)`.
//!
//! The x-boundary conditions are taken as Neumann, `u_x(t, 0) = u_x(t, 1) = 0`.
//! Expanding in `{1, √2 cos(n pi x)}` turns the problem into a two-ray model
//! with `A1 = diag(-(n pi)^2)`, `A2 = diag((n pi)^2)` and `W = e^{i phi} I`,
//! whose only admissible direction is the constant mode.

use std::f64::consts::{PI, SQRT_2};
use std::io::Read;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::{build_extension, ExtensionSpec};
use crate::operator::{HermitianOperator, SignedCoefficientPair, UnitaryMap};
use crate::spectral::report::{probe_report, ProbeReport, ProbeSettings};
use crate::ray::{simpson_weights, RayFunction, Side, TwoRayFunction, DEFAULT_TRUNCATION};

pub const HEAT_A: f64 = -1.0;
pub const HEAT_B: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatConfig {
    pub modes: usize,
    pub phi: f64,
    pub length: f64,
    pub nodes: usize,
}

impl HeatConfig {
    pub fn new(modes: usize, phi: f64) -> Result<Self> {
        let config = Self {
            modes,
            phi,
            length: DEFAULT_TRUNCATION,
            nodes: crate::ray::default_nodes(DEFAULT_TRUNCATION),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes == 0 {
            return Err(Error::DegenerateInput("at least one cosine mode is required".into()));
        }
        if !(0.0..2.0 * PI).contains(&self.phi) {
            return Err(Error::DegenerateInput(format!("phi = {} is outside [0, 2pi)", self.phi)));
        }
        if !(self.length > 0.0) || self.nodes < 5 {
            return Err(Error::BadGrid(format!("length {} with {} nodes", self.length, self.nodes)));
        }
        Ok(())
    }
}

/// Neumann eigenvalue `(n pi)^2` of `-d^2/dx^2` on `[0, 1]`.
pub fn neumann_eigenvalue(n: usize) -> f64 {
    let k = n as f64 * PI;
    k * k
}

/// Orthonormal Neumann eigenfunction: `1` for `n = 0`, `√2 cos(n pi x)` otherwise.
pub fn cosine_mode(n: usize, x: f64) -> f64 {
    if n == 0 {
        1.0
    } else {
        SQRT_2 * (n as f64 * PI * x).cos()
    }
}

pub fn cosine_reduce(config: &HeatConfig) -> Result<ExtensionSpec> {
    config.validate()?;
    let positive: Vec<f64> = (0..config.modes).map(neumann_eigenvalue).collect();
    let negative: Vec<f64> = positive.iter().map(|&v| if v == 0.0 { 0.0 } else { -v }).collect();
    let pair = SignedCoefficientPair::new(
        HermitianOperator::from_diagonal(&negative)?,
        HermitianOperator::from_diagonal(&positive)?,
    )?;
    build_extension(pair, UnitaryMap::phase(config.modes, config.phi), HEAT_A, HEAT_B)
}

/// Samples of a source `f(t, x)` on a tensor grid: `times` on the two rays
/// (left ray first, each in increasing order) and a uniform `x` grid on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSamples {
    pub left_times: Vec<f64>,
    pub right_times: Vec<f64>,
    pub xs: Vec<f64>,
    /// `values[ti][xi]`, left-ray rows followed by right-ray rows.
    pub values: Vec<Vec<Complex64>>,
}

impl SourceSamples {
    pub fn from_fn<F: Fn(f64, f64) -> Complex64>(config: &HeatConfig, x_points: usize, f: F) -> Result<Self> {
        let left = crate::ray::uniform_nodes(Side::Left, HEAT_A, config.length, config.nodes)?;
        let right = crate::ray::uniform_nodes(Side::Right, HEAT_B, config.length, config.nodes)?;
        if x_points < 2 {
            return Err(Error::BadGrid("x grid needs at least two points".into()));
        }
        let xs: Vec<f64> = (0..x_points).map(|i| i as f64 / (x_points - 1) as f64).collect();
        let values = left
            .iter()
            .chain(right.iter())
            .map(|&t| xs.iter().map(|&x| f(t, x)).collect())
            .collect();
        Ok(Self {
            left_times: left,
            right_times: right,
            xs,
            values,
        })
    }

    /// Reads rows `t,x,re_f,im_f` with a header line. Rows with `t <= a` belong to
    /// the left ray and rows with `t >= b` to the right ray.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut rows: Vec<(f64, f64, Complex64)> = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| Error::Csv(e.to_string()))?;
            if record.len() != 4 {
                return Err(Error::Csv(format!("expected 4 columns, found {}", record.len())));
            }
            let mut num = [0.0; 4];
            for (slot, field) in num.iter_mut().zip(record.iter()) {
                *slot = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Csv(format!("not a number: {field:?}")))?;
            }
            rows.push((num[0], num[1], Complex64::new(num[2], num[3])));
        }
        let mut times: Vec<f64> = rows.iter().map(|r| r.0).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let mut xs: Vec<f64> = rows.iter().map(|r| r.1).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        if times.len() * xs.len() != rows.len() {
            return Err(Error::Csv("samples do not form a complete (t, x) grid".into()));
        }
        let mut values = vec![vec![Complex64::new(0.0, 0.0); xs.len()]; times.len()];
        for (t, x, v) in rows {
            let ti = times.binary_search_by(|p| p.total_cmp(&t)).expect("collected above");
            let xi = xs.binary_search_by(|p| p.total_cmp(&x)).expect("collected above");
            values[ti][xi] = v;
        }
        let left_times: Vec<f64> = times.iter().copied().filter(|&t| t <= HEAT_A).collect();
        let right_times: Vec<f64> = times.iter().copied().filter(|&t| t >= HEAT_B).collect();
        if left_times.len() + right_times.len() != times.len() {
            return Err(Error::GridMismatch(format!(
                "source times must lie outside ({HEAT_A}, {HEAT_B})"
            )));
        }
        Ok(Self {
            left_times,
            right_times,
            xs,
            values,
        })
    }
}

fn uniform_step(points: &[f64], what: &str) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::BadGrid(format!("{what} grid has fewer than two points")));
    }
    let h = (points[points.len() - 1] - points[0]) / (points.len() - 1) as f64;
    for (i, &p) in points.iter().enumerate() {
        if (p - (points[0] + i as f64 * h)).abs() > 1e-9 * (1.0 + p.abs()) {
            return Err(Error::BadGrid(format!("{what} grid is not uniform")));
        }
    }
    Ok(h)
}

/// Cosine coefficients of the source on every time node, by composite
/// Simpson quadrature in `x`.
pub fn project_source(config: &HeatConfig, samples: &SourceSamples) -> Result<TwoRayFunction> {
    config.validate()?;
    let n = config.modes;
    let xs = &samples.xs;
    if xs.len() < 4 * n {
        return Err(Error::GridTooCoarse {
            needed: 4 * n,
            found: xs.len(),
        });
    }
    let hx = uniform_step(xs, "x")?;
    if xs[0].abs() > 1e-12 || (xs[xs.len() - 1] - 1.0).abs() > 1e-12 {
        return Err(Error::BadGrid("x grid must span [0, 1]".into()));
    }
    let weights = simpson_weights(xs.len(), hx);
    let basis: Vec<Vec<f64>> = (0..n)
        .map(|k| xs.iter().zip(&weights).map(|(&x, &w)| w * cosine_mode(k, x)).collect())
        .collect();
    let project = |row: &[Complex64]| -> Vec<Complex64> {
        basis
            .iter()
            .map(|wb| row.iter().zip(wb).map(|(v, &w)| v * w).sum())
            .collect()
    };
    let rows_for = |range: std::ops::Range<usize>| -> Vec<Complex64> {
        samples.values[range].iter().flat_map(|row| project(row)).collect()
    };
    let nl = samples.left_times.len();
    let nr = samples.right_times.len();
    let hl = uniform_step(&samples.left_times, "left time")?;
    let hr = uniform_step(&samples.right_times, "right time")?;
    let ll = hl * (nl - 1) as f64;
    let lr = hr * (nr - 1) as f64;
    if (samples.left_times[nl - 1] - HEAT_A).abs() > 1e-9 || (samples.right_times[0] - HEAT_B).abs() > 1e-9 {
        return Err(Error::GridMismatch("time grids must start at the interface points".into()));
    }
    let left = RayFunction::from_values(Side::Left, HEAT_A, ll, nl, n, rows_for(0..nl))?;
    let right = RayFunction::from_values(Side::Right, HEAT_B, lr, nr, n, rows_for(nl..nl + nr))?;
    TwoRayFunction::new(left, right)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatReport {
    pub config: HeatConfig,
    pub admissible_dim: usize,
    pub probe: ProbeReport,
}

impl HeatReport {
    pub fn passed(&self) -> bool {
        self.probe.passed()
    }
}

/// Runs the bundled spectral probe on the reduced model. Probes are drawn
/// in the constant mode, which carries the resolvent norm; the stiff higher
/// modes only see their own bounded resolvents.
pub fn heat_probe(config: &HeatConfig, settings: &ProbeSettings) -> Result<HeatReport> {
    let spec = cosine_reduce(config)?;
    let probe = probe_report(&spec, settings)?;
    Ok(HeatReport {
        config: *config,
        admissible_dim: spec.k_dim(),
        probe,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduce_eigenvalues() {
        let spec = cosine_reduce(&HeatConfig::new(4, 1.0).unwrap()).unwrap();
        let expected = [0.0, PI * PI, 4.0 * PI * PI, 9.0 * PI * PI];
        for (v, e) in spec.a2().eigenvalues().iter().zip(expected) {
            assert!((v - e).abs() < 1e-12);
        }
        assert!((expected[1] - 9.8696).abs() < 1e-4);
        assert!((expected[2] - 39.478).abs() < 1e-3);
        assert!((expected[3] - 88.826).abs() < 1e-3);
        assert_eq!(spec.k_dim(), 1);
        assert!(spec.normal_extension_possible());
    }

    #[test]
    fn reduce_single_mode_is_scalar() {
        let spec = cosine_reduce(&HeatConfig::new(1, 0.3).unwrap()).unwrap();
        assert_eq!(spec.a1().entries()[(0, 0)], Complex64::new(0.0, 0.0));
        assert!(spec.a1().entries()[(0, 0)].re.is_sign_positive());
        assert_eq!(spec.w().entries()[(0, 0)], Complex64::from_polar(1.0, 0.3));
    }

    #[test]
    fn rejects_bad_config() {
        assert!(HeatConfig::new(0, 1.0).is_err());
        assert!(HeatConfig::new(2, 2.0 * PI).is_err());
        assert!(HeatConfig::new(2, -0.1).is_err());
    }

    fn small_config(modes: usize) -> HeatConfig {
        HeatConfig {
            modes,
            phi: 0.5,
            length: 4.0,
            nodes: 41,
        }
    }

    #[test]
    fn project_constant_and_first_cosine() {
        let config = small_config(3);
        let g = |t: f64| Complex64::new((-(t * t) / 8.0).exp(), 0.1 * t);
        let s = SourceSamples::from_fn(&config, 201, |t, _| g(t)).unwrap();
        let u = project_source(&config, &s).unwrap();
        for i in 0..u.left.len() {
            let v = u.left.value(i);
            assert!((v[0] - g(u.left.nodes()[i])).norm() < 1e-12);
            assert!(v[1].norm() < 1e-12 && v[2].norm() < 1e-12);
        }
        let s = SourceSamples::from_fn(&config, 201, |t, x| g(t) * cosine_mode(1, x)).unwrap();
        let u = project_source(&config, &s).unwrap();
        for i in 0..u.right.len() {
            let v = u.right.value(i);
            assert!(v[0].norm() < 1e-9 && v[2].norm() < 1e-9);
            assert!((v[1] - g(u.right.nodes()[i])).norm() < 1e-9);
        }
    }

    #[test]
    fn coarse_x_grid_rejected() {
        let config = small_config(8);
        let s = SourceSamples::from_fn(&config, 31, |_, _| Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(
            project_source(&config, &s),
            Err(Error::GridTooCoarse { needed: 32, found: 31 })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let config = small_config(2);
        let mut text = String::from("t,x,re_f,im_f\n");
        let left = crate::ray::uniform_nodes(Side::Left, HEAT_A, config.length, config.nodes).unwrap();
        let right = crate::ray::uniform_nodes(Side::Right, HEAT_B, config.length, config.nodes).unwrap();
        for &t in left.iter().chain(&right) {
            for k in 0..9 {
                let x = k as f64 / 8.0;
                text.push_str(&format!("{t},{x},{},{}\n", (-t * t).exp(), x));
            }
        }
        let s = SourceSamples::read_csv(text.as_bytes()).unwrap();
        assert_eq!(s.left_times.len(), config.nodes);
        assert_eq!(s.xs.len(), 9);
        let u = project_source(&config, &s).unwrap();
        assert_eq!(u.left.len(), config.nodes);
        assert!((u.right.value(0)[0].re - (-1.0f64).exp()).abs() < 1e-12);
    }
}
