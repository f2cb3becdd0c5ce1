//! A bundled spectral probe: point-spectrum scan, on-axis divergence and an
//! off-axis resolvent sweep, with pass/fail checks against closed forms.

use num_complex::Complex64;
use serde::Serialize;

use super::{
    counterexample_divergence, divergence_closed_form, eigen_scan, fit_slope, resolvent_norm_sweep, DivergenceRow,
    LambdaGrid, ProbeGrid, ProbeSpace, SweepOptions, SweepRow,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::extension::ExtensionSpec;
use crate::operator::CVector;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

impl Assertion {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= threshold,
            value,
            threshold,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            passed: value >= threshold,
            value,
            threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSettings {
    pub scan: LambdaGrid,
    pub lambda_i: f64,
    /// Lengths compared against the closed-form truncated norm.
    pub divergence_lengths: Vec<f64>,
    /// Lengths used for the slope fit.
    pub slope_lengths: Vec<f64>,
    pub sweep: Vec<Complex64>,
    /// `(near, far)` real parts whose estimate ratio is checked.
    pub blow_up_pair: (f64, f64),
    pub probe_count: usize,
    pub probe_space: ProbeSpace,
    pub grid: ProbeGrid,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        let c = Complex64::new;
        Self {
            scan: LambdaGrid::square(2.0, 41),
            lambda_i: 0.7,
            divergence_lengths: vec![10.0, 100.0],
            slope_lengths: vec![20.0, 40.0, 80.0],
            sweep: vec![
                c(1.0, 0.0),
                c(-1.0, 0.0),
                c(0.5, 0.0),
                c(-0.5, 0.0),
                c(2.0, 0.0),
                c(1.0, 3.0),
                c(0.25, 0.0),
                c(0.125, 0.0),
                c(0.1, 0.0),
            ],
            blow_up_pair: (0.1, 1.0),
            probe_count: 8,
            probe_space: ProbeSpace::Admissible,
            grid: ProbeGrid::default(),
            seed: 42,
            execution: Execution::default(),
        }
    }
}

pub const RESIDUAL_TOL: f64 = 1e-5;
pub const NORM_REL_TOL: f64 = 0.25;
pub const BLOW_UP_RATIO: f64 = 8.0;
pub const SLOPE_TOL: f64 = 0.01;

/// Allowed deviation of the truncated norm from its closed form at length `t`.
pub fn divergence_tolerance(length: f64) -> f64 {
    1e-6 * length.max(10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub scan_points: usize,
    pub eigenfunctions_found: usize,
    pub divergence: Vec<DivergenceRow>,
    pub slope_rows: Vec<DivergenceRow>,
    pub slope: f64,
    pub sweep: Vec<SweepRow>,
    pub assertions: Vec<Assertion>,
}

impl ProbeReport {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

/// First admissible direction, normalized.
pub fn kernel_direction(spec: &ExtensionSpec) -> Result<CVector> {
    if spec.k_dim() == 0 {
        return Err(Error::NotInKernel { distance: f64::INFINITY });
    }
    let v = spec.k_basis().column(0).into_owned();
    let norm = v.norm();
    Ok(v / Complex64::new(norm, 0.0))
}

pub fn probe_report(spec: &ExtensionSpec, settings: &ProbeSettings) -> Result<ProbeReport> {
    let mut assertions = Vec::new();

    let points = settings.scan.points();
    let verdicts = eigen_scan(spec, &points, settings.execution);
    let found = verdicts.iter().filter(|v| v.eigenfunction_exists).count();
    assertions.push(Assertion::at_most("eigenfunctions_found", found as f64, 0.0));

    let fstar = kernel_direction(spec)?;
    let divergence = counterexample_divergence(spec, settings.lambda_i, &fstar, &settings.divergence_lengths)?;
    for row in &divergence {
        let err = (row.norm_sq - divergence_closed_form(row.length)).abs();
        assertions.push(Assertion::at_most(
            format!("divergence_closed_form_T{}", row.length),
            err,
            divergence_tolerance(row.length),
        ));
    }
    let slope_rows = counterexample_divergence(spec, settings.lambda_i, &fstar, &settings.slope_lengths)?;
    let slope = fit_slope(&slope_rows);
    assertions.push(Assertion::at_most("divergence_slope_deviation", (slope - 1.0).abs(), SLOPE_TOL));

    let options = SweepOptions {
        probe_count: settings.probe_count,
        probe_space: settings.probe_space,
        seed: settings.seed,
        grid: settings.grid,
        execution: settings.execution,
    };
    let sweep = resolvent_norm_sweep(spec, &settings.sweep, &options)?;
    for row in &sweep {
        let tag = format!("{}{:+}i", row.lambda[0], row.lambda[1]);
        assertions.push(Assertion::at_most(format!("obstructed_probes_{tag}"), row.obstructed_count as f64, 0.0));
        assertions.push(Assertion::at_most(format!("resolve_residual_{tag}"), row.max_residual, RESIDUAL_TOL));
        let oracle = 1.0 / row.lambda[0].abs();
        let rel = ((row.norm_estimate - oracle) / oracle).abs();
        assertions.push(Assertion::at_most(
            format!("norm_vs_inverse_distance_{tag}"),
            if rel.is_nan() { f64::INFINITY } else { rel },
            NORM_REL_TOL,
        ));
    }
    let estimate_at = |re: f64| {
        sweep
            .iter()
            .find(|r| r.lambda[0] == re && r.lambda[1] == 0.0)
            .map(|r| r.norm_estimate)
    };
    let (near, far) = settings.blow_up_pair;
    if let (Some(n), Some(f)) = (estimate_at(near), estimate_at(far)) {
        let ratio = n / f;
        assertions.push(Assertion::at_least(
            format!("blow_up_ratio_{near}_vs_{far}"),
            if ratio.is_nan() { 0.0 } else { ratio },
            BLOW_UP_RATIO,
        ));
    }

    Ok(ProbeReport {
        scan_points: points.len(),
        eigenfunctions_found: found,
        divergence,
        slope_rows,
        slope,
        sweep,
        assertions,
    })
}
