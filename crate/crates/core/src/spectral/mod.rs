//! Spectrum probing for `L_W`.
//!
//! * [`eigen_classify`] decides whether `L_W u = lambda u` has an `L2`
//!   solution by comparing decay exponents of the homogeneous modes.
//! * [`resolve`] solves `(L_W - lambda) u = f` off the imaginary axis by
//!   integrating every eigenmode in its stable direction, then fixing the
//!   free boundary constants against the interface conditions.
//! * [`counterexample_divergence`] reproduces the on-axis right-hand side
//!   whose only candidate solution has linearly growing truncated norm.

pub mod report;
pub mod vconst;

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::boundary::DECAY_TOL;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::extension::{apply_expression, random_in_span, random_vector, ExtensionSpec, Variant};
use crate::operator::{unit_singular_subspace, CMatrix, CVector, HermitianOperator, Projector};
use crate::ray::{default_nodes, RayFunction, Side, TwoRayFunction};
use vconst::{sweep, Direction};

/// `|Re lambda|` below which a point counts as on the imaginary axis.
pub const AXIS_TOL: f64 = 1e-12;
/// Relative size (to `|f|`) above which a forced trace is an obstruction.
pub const OBSTRUCTION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComponentDecay {
    pub side: Side,
    /// `alpha` (left, eigenvalue of `A1` on `K`) or `beta` (right, of `A2` on `W K`).
    pub eigenvalue: f64,
    /// `Re lambda - alpha` on the left, `beta - Re lambda` on the right.
    pub exponent: f64,
    pub decay_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralVerdict {
    pub lambda: [f64; 2],
    pub per_component: Vec<ComponentDecay>,
    pub eigenfunction_exists: bool,
    pub forcing: String,
}

/// Eigenvalues of the compression `B^H A B`; values within the kernel
/// threshold of `op` are snapped to zero.
fn compressed_spectrum(op: &HermitianOperator, basis: &CMatrix, threshold: f64) -> (Vec<f64>, CMatrix) {
    let compressed = basis.adjoint() * op.entries() * basis;
    let h = HermitianOperator::with_tol(compressed, f64::INFINITY).expect("compression is square");
    let values = h
        .eigenvalues()
        .iter()
        .map(|&v| if v.abs() <= threshold { 0.0 } else { v })
        .collect();
    (values, h.eigenvectors().clone())
}

pub fn eigen_classify(spec: &ExtensionSpec, lambda: Complex64) -> SpectralVerdict {
    let k = spec.k_dim();
    let lr = lambda.re;
    if k == 0 {
        return SpectralVerdict {
            lambda: [lambda.re, lambda.im],
            per_component: Vec::new(),
            eigenfunction_exists: false,
            forcing: "admissible subspace K is trivial; the only admissible trace is 0".into(),
        };
    }
    let basis = spec.k_basis();
    let w_basis = spec.w().entries() * basis;
    let thr1 = spec.a1().kernel_threshold(spec.ker_tol());
    let thr2 = spec.a2().kernel_threshold(spec.ker_tol());
    let (alphas, y) = compressed_spectrum(spec.a1(), basis, thr1);
    let (betas, z) = compressed_spectrum(spec.a2(), &w_basis, thr2);

    let mut per_component = Vec::with_capacity(2 * k);
    let mut left_cols = Vec::new();
    for (i, &alpha) in alphas.iter().enumerate() {
        let exponent = lr - alpha;
        let decay_ok = exponent > 0.0;
        if decay_ok {
            left_cols.push(i);
        }
        per_component.push(ComponentDecay {
            side: Side::Left,
            eigenvalue: alpha,
            exponent,
            decay_ok,
        });
    }
    let mut right_cols = Vec::new();
    for (i, &beta) in betas.iter().enumerate() {
        let exponent = beta - lr;
        let decay_ok = exponent > 0.0;
        if decay_ok {
            right_cols.push(i);
        }
        per_component.push(ComponentDecay {
            side: Side::Right,
            eigenvalue: beta,
            exponent,
            decay_ok,
        });
    }
    // Coordinates in the K basis of traces decaying on each ray; W K and K
    // share coordinates.
    let left = Projector::from_basis(k, &y.select_columns(&left_cols));
    let right = Projector::from_basis(k, &z.select_columns(&right_cols));
    let both = unit_singular_subspace(&(right.matrix() * left.matrix()));
    let eigenfunction_exists = both.ncols() > 0;
    let forcing = if eigenfunction_exists {
        format!("{} admissible trace direction(s) decay on both rays", both.ncols())
    } else if left_cols.is_empty() && right_cols.is_empty() {
        "no admissible trace decays on either ray (neutral or growing exponents)".into()
    } else if left_cols.is_empty() {
        "left-ray decay requires Re lambda above the kernel eigenvalues; no admissible trace decays on the left".into()
    } else if right_cols.is_empty() {
        "right-ray decay requires Re lambda below the kernel eigenvalues; no admissible trace decays on the right".into()
    } else {
        "left- and right-decaying admissible traces intersect only in 0".into()
    };
    SpectralVerdict {
        lambda: [lambda.re, lambda.im],
        per_component,
        eigenfunction_exists,
        forcing,
    }
}

/// Rectangular grid of `n_re x n_im` points, row-major in the imaginary part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct LambdaGrid {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub n_re: usize,
    pub n_im: usize,
}

impl LambdaGrid {
    pub fn square(half_width: f64, n: usize) -> Self {
        Self {
            re_min: -half_width,
            re_max: half_width,
            im_min: -half_width,
            im_max: half_width,
            n_re: n,
            n_im: n,
        }
    }

    pub fn points(&self) -> Vec<Complex64> {
        let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            if n <= 1 {
                vec![lo]
            } else {
                (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
            }
        };
        let re = axis(self.re_min, self.re_max, self.n_re);
        let im = axis(self.im_min, self.im_max, self.n_im);
        im.iter()
            .flat_map(|&y| re.iter().map(move |&x| Complex64::new(x, y)))
            .collect()
    }
}

pub fn eigen_scan(spec: &ExtensionSpec, points: &[Complex64], execution: Execution) -> Vec<SpectralVerdict> {
    execution.map(points, |_, &lambda| eigen_classify(spec, lambda))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Obstruction {
    pub side: Side,
    pub eigenvalue: f64,
    pub forced_trace_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventRecord {
    pub lambda: Complex64,
    pub solution: Option<TwoRayFunction>,
    pub obstruction: Vec<Obstruction>,
    /// `|(l - lambda) u - f| / |f|`; `NaN` when obstructed.
    pub residual: f64,
    pub solution_norm: f64,
}

impl ResolventRecord {
    pub fn is_solved(&self) -> bool {
        self.solution.is_some()
    }
}

/// One eigenmode on one ray: the particular solution at every node and,
/// for a free mode, the homogeneous decay rate.
struct ModeSolution {
    eigenvalue: f64,
    particular: Vec<Complex64>,
    /// `Some(kappa)` when the endpoint constant is free: the homogeneous
    /// part is `e^{kappa |t - endpoint|} x`.
    free: Option<Complex64>,
    /// Value of the particular part at the finite endpoint.
    trace: Complex64,
}

fn mode_coefficients(f: &RayFunction, v: &CMatrix, k: usize) -> Vec<Complex64> {
    let col = v.column(k);
    (0..f.len())
        .map(|i| col.iter().zip(f.value(i)).map(|(a, x)| a.conj() * x).sum())
        .collect()
}

fn solve_ray(f: &RayFunction, op: &HermitianOperator, lambda: Complex64) -> Vec<ModeSolution> {
    let h = f.step();
    let lr = lambda.re;
    (0..op.dim())
        .map(|k| {
            let eigenvalue = op.eigenvalues()[k];
            let phi = mode_coefficients(f, op.eigenvectors(), k);
            let mu = Complex64::new(eigenvalue, 0.0) - lambda;
            match f.side() {
                Side::Left if lr > eigenvalue => {
                    // c(t) = e^{mu |t-a|} x - ∫_t^a e^{mu (s-t)} phi(s) ds
                    let y = sweep(&phi, h, mu, Direction::Backward);
                    ModeSolution {
                        eigenvalue,
                        particular: y.into_iter().map(|v| -v).collect(),
                        free: Some(mu),
                        trace: Complex64::new(0.0, 0.0),
                    }
                }
                Side::Left => {
                    // c(t) = ∫_{-inf}^t e^{-mu (t-s)} phi(s) ds
                    let y = sweep(&phi, h, -mu, Direction::Forward);
                    let trace = y[y.len() - 1];
                    ModeSolution {
                        eigenvalue,
                        particular: y,
                        free: None,
                        trace,
                    }
                }
                Side::Right if eigenvalue > lr => {
                    // c(t) = e^{-mu (t-b)} x + ∫_b^t e^{-mu (t-s)} phi(s) ds
                    let y = sweep(&phi, h, -mu, Direction::Forward);
                    ModeSolution {
                        eigenvalue,
                        particular: y,
                        free: Some(-mu),
                        trace: Complex64::new(0.0, 0.0),
                    }
                }
                Side::Right => {
                    // c(t) = -∫_t^inf e^{mu (s-t)} phi(s) ds
                    let y: Vec<Complex64> = sweep(&phi, h, mu, Direction::Backward).into_iter().map(|v| -v).collect();
                    let trace = y[0];
                    ModeSolution {
                        eigenvalue,
                        particular: y,
                        free: None,
                        trace,
                    }
                }
            }
        })
        .collect()
}

fn assemble_ray(
    f: &RayFunction,
    op: &HermitianOperator,
    modes: &[ModeSolution],
    constants: &[Complex64],
) -> Result<RayFunction> {
    let n = op.dim();
    let m = f.len();
    let endpoint = f.endpoint();
    let mut values = vec![Complex64::new(0.0, 0.0); m * n];
    for (k, mode) in modes.iter().enumerate() {
        let v = op.eigenvectors().column(k);
        for (i, &t) in f.nodes().iter().enumerate() {
            let mut coeff = mode.particular[i];
            if let Some(kappa) = mode.free {
                coeff += (kappa * (t - endpoint).abs()).exp() * constants[k];
            }
            if coeff == Complex64::new(0.0, 0.0) {
                continue;
            }
            for r in 0..n {
                values[i * n + r] += v[r] * coeff;
            }
        }
    }
    RayFunction::from_values(f.side(), endpoint, f.length(), m, n, values)
}

pub fn resolve(spec: &ExtensionSpec, lambda: Complex64, f: &TwoRayFunction) -> Result<ResolventRecord> {
    if lambda.re.abs() < AXIS_TOL {
        return Err(Error::OnAxis {
            re: lambda.re,
            im: lambda.im,
        });
    }
    spec.check_grids(f)?;
    f.require_decay(DECAY_TOL)?;
    let n = spec.dim();
    let f_norm = f.norm();
    let left_modes = solve_ray(&f.left, spec.a1(), lambda);
    let right_modes = solve_ray(&f.right, spec.a2(), lambda);

    let v1 = spec.a1().eigenvectors();
    let v2 = spec.a2().eigenvectors();
    let free_left: Vec<usize> = (0..n).filter(|&k| left_modes[k].free.is_some()).collect();
    let free_right: Vec<usize> = (0..n).filter(|&k| right_modes[k].free.is_some()).collect();
    let forced_trace = |modes: &[ModeSolution], v: &CMatrix| -> CVector {
        let mut g = CVector::zeros(n);
        for (k, mode) in modes.iter().enumerate() {
            if mode.free.is_none() {
                g += v.column(k) * mode.trace;
            }
        }
        g
    };
    let g1 = forced_trace(&left_modes, v1);
    let g2 = forced_trace(&right_modes, v2);

    // Unknowns: free left constants then free right constants.
    // Rows: (I - P1) u1(a) = 0, (I - P2) u2(b) = 0, u2(b) - W u1(a) = 0.
    let id = CMatrix::identity(n, n);
    let q1 = &id - spec.p1().matrix();
    let q2 = &id - spec.p2().matrix();
    let w = spec.w().entries();
    let v1f = v1.select_columns(&free_left);
    let v2f = v2.select_columns(&free_right);
    let unknowns = free_left.len() + free_right.len();
    let mut system = CMatrix::zeros(3 * n, unknowns);
    let mut rhs = CVector::zeros(3 * n);
    if !free_left.is_empty() {
        system.view_mut((0, 0), (n, free_left.len())).copy_from(&(&q1 * &v1f));
        system.view_mut((2 * n, 0), (n, free_left.len())).copy_from(&(-(w * &v1f)));
    }
    if !free_right.is_empty() {
        let c0 = free_left.len();
        system.view_mut((n, c0), (n, free_right.len())).copy_from(&(&q2 * &v2f));
        system.view_mut((2 * n, c0), (n, free_right.len())).copy_from(&v2f);
    }
    rhs.rows_mut(0, n).copy_from(&(-(&q1 * &g1)));
    rhs.rows_mut(n, n).copy_from(&(-(&q2 * &g2)));
    rhs.rows_mut(2 * n, n).copy_from(&(w * &g1 - &g2));

    let x = if unknowns == 0 {
        CVector::zeros(0)
    } else {
        system
            .clone()
            .svd(true, true)
            .solve(&rhs, 1e-13)
            .expect("both factors were computed")
    };
    let mismatch = (&system * &x - &rhs).norm();
    let threshold = OBSTRUCTION_TOL * f_norm;
    if mismatch > threshold {
        return Ok(ResolventRecord {
            lambda,
            solution: None,
            obstruction: certificates(spec, &left_modes, &right_modes, threshold),
            residual: f64::NAN,
            solution_norm: f64::NAN,
        });
    }

    let mut c1 = vec![Complex64::new(0.0, 0.0); n];
    let mut c2 = vec![Complex64::new(0.0, 0.0); n];
    for (j, &k) in free_left.iter().enumerate() {
        c1[k] = x[j];
    }
    for (j, &k) in free_right.iter().enumerate() {
        c2[k] = x[free_left.len() + j];
    }
    let solution = TwoRayFunction::new(
        assemble_ray(&f.left, spec.a1(), &left_modes, &c1)?,
        assemble_ray(&f.right, spec.a2(), &right_modes, &c2)?,
    )?;
    let lu = apply_expression(spec, &solution, Variant::Direct)?;
    let defect = lu
        .combine(Complex64::new(1.0, 0.0), &solution, -lambda)?
        .combine(Complex64::new(1.0, 0.0), f, Complex64::new(-1.0, 0.0))?;
    let residual = if f_norm > 0.0 {
        defect.norm() / f_norm
    } else {
        defect.norm()
    };
    let solution_norm = solution.norm();
    Ok(ResolventRecord {
        lambda,
        solution: Some(solution),
        obstruction: Vec::new(),
        residual,
        solution_norm,
    })
}

/// Forced traces that cannot be reconciled with the interface conditions.
/// Non-kernel modes are listed first; if none exceed the threshold the
/// conflict sits in the kernel coupling and those modes are listed instead.
fn certificates(
    spec: &ExtensionSpec,
    left: &[ModeSolution],
    right: &[ModeSolution],
    threshold: f64,
) -> Vec<Obstruction> {
    let thr1 = spec.a1().kernel_threshold(spec.ker_tol());
    let thr2 = spec.a2().kernel_threshold(spec.ker_tol());
    fn forced(side: Side, modes: &[ModeSolution], thr: f64, kernel: bool, threshold: f64) -> Vec<Obstruction> {
        modes
            .iter()
            .filter(|m| m.free.is_none() && (m.eigenvalue.abs() <= thr) == kernel && m.trace.norm() > threshold)
            .map(|m| Obstruction {
                side,
                eigenvalue: m.eigenvalue,
                forced_trace_norm: m.trace.norm(),
            })
            .collect()
    }
    let mut out = forced(Side::Left, left, thr1, false, threshold);
    out.extend(forced(Side::Right, right, thr2, false, threshold));
    if out.is_empty() {
        out = forced(Side::Left, left, thr1, true, threshold);
        out.extend(forced(Side::Right, right, thr2, true, threshold));
    }
    if out.is_empty() {
        // Mismatch from the combined constraint only: report the largest forced trace.
        out = forced(Side::Left, left, thr1, false, 0.0);
        out.extend(forced(Side::Left, left, thr1, true, 0.0));
        out.extend(forced(Side::Right, right, thr2, false, 0.0));
        out.extend(forced(Side::Right, right, thr2, true, 0.0));
        out.sort_by(|x, y| y.forced_trace_norm.total_cmp(&x.forced_trace_norm));
        out.truncate(1);
    }
    out
}

/// How probe grids are sized for a given `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct ProbeGrid {
    /// Lower bound on the truncation length.
    pub min_length: f64,
    /// Truncation length in units of the slowest decay length `1 / |Re lambda|`.
    pub decay_lengths: f64,
    /// Grid spacing.
    pub step: f64,
}

impl Default for ProbeGrid {
    fn default() -> Self {
        Self {
            min_length: 40.0,
            decay_lengths: 25.0,
            step: 0.01,
        }
    }
}

impl ProbeGrid {
    /// Truncation length long enough for the slowest mode to decay: every
    /// homogeneous mode decays at rate `|Re lambda - e|` for an eigenvalue `e`
    /// of `A1` or `A2`, and the admissible modes at rate `|Re lambda|`.
    pub fn length_for(&self, spec: &ExtensionSpec, lambda: Complex64) -> f64 {
        self.min_length.max(self.decay_lengths / spectral_gap(spec, lambda))
    }

    pub fn nodes_for(&self, length: f64) -> usize {
        (length / self.step).ceil() as usize + 1
    }
}

/// `min(|Re lambda|, |Re lambda - e|)` over eigenvalues `e` of both coefficients.
pub fn spectral_gap(spec: &ExtensionSpec, lambda: Complex64) -> f64 {
    spec.a1()
        .eigenvalues()
        .iter()
        .chain(spec.a2().eigenvalues())
        .map(|&e| (lambda.re - e).abs())
        .fold(lambda.re.abs(), f64::min)
}

/// Where probe directions are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeSpace {
    /// Uniformly random directions in `H` on each ray.
    #[default]
    Full,
    /// Left directions in `K`, right directions in `W K`. Falls back to
    /// `Full` when `K` is trivial.
    Admissible,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub probe_count: usize,
    pub probe_space: ProbeSpace,
    pub seed: u64,
    pub grid: ProbeGrid,
    pub execution: Execution,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            probe_count: 8,
            probe_space: ProbeSpace::Full,
            seed: 42,
            grid: ProbeGrid::default(),
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: [f64; 2],
    /// Largest solution norm over unobstructed unit probes; `NaN` if none solved.
    pub norm_estimate: f64,
    pub obstructed_count: usize,
    pub probes: usize,
    pub max_residual: f64,
}

/// Unit-norm wave packet `e^{i Im(lambda) t}` times half-Gaussian envelopes
/// anchored at the ray endpoints; which rays carry mass and the envelope
/// width are randomized.
pub fn random_probe<R: Rng + ?Sized>(
    spec: &ExtensionSpec,
    rng: &mut R,
    space: ProbeSpace,
    lambda: Complex64,
    length: f64,
    m: usize,
) -> Result<TwoRayFunction> {
    let n = spec.dim();
    let sigma = length / 7.0 * rng.random_range(0.8..1.0);
    let placement: u32 = rng.random_range(0..3);
    let mut draw = |right: bool| match space {
        ProbeSpace::Admissible if spec.k_dim() > 0 => {
            let x = random_in_span(rng, spec.k_basis());
            if right {
                spec.w().apply(&x)
            } else {
                x
            }
        }
        _ => random_vector(rng, n),
    };
    let c1 = if placement == 1 { CVector::zeros(n) } else { draw(false) };
    let c2 = if placement == 0 { CVector::zeros(n) } else { draw(true) };
    let (a, b) = (spec.a(), spec.b());
    let packet = |x: f64, t: f64| Complex64::from_polar((-x * x / (2.0 * sigma * sigma)).exp(), lambda.im * t);
    let left = RayFunction::make_uniform(Side::Left, a, length, m, |t| &c1 * packet(a - t, t))?;
    let right = RayFunction::make_uniform(Side::Right, b, length, m, |t| &c2 * packet(t - b, t))?;
    let f = TwoRayFunction::new(left, right)?;
    let norm = f.norm();
    Ok(f.scale(Complex64::new(1.0 / norm, 0.0)))
}

fn probe_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn resolvent_norm_sweep(spec: &ExtensionSpec, lambdas: &[Complex64], options: &SweepOptions) -> Result<Vec<SweepRow>> {
    if let Some(l) = lambdas.iter().find(|l| l.re.abs() < AXIS_TOL) {
        return Err(Error::OnAxis { re: l.re, im: l.im });
    }
    options
        .execution
        .map(lambdas, |index, &lambda| -> Result<SweepRow> {
            let mut rng = ChaCha8Rng::seed_from_u64(probe_seed(options.seed, index));
            let length = options.grid.length_for(spec, lambda);
            let m = options.grid.nodes_for(length);
            let mut best = f64::NAN;
            let mut obstructed = 0;
            let mut max_residual: f64 = 0.0;
            for _ in 0..options.probe_count {
                let f = random_probe(spec, &mut rng, options.probe_space, lambda, length, m)?;
                let record = resolve(spec, lambda, &f)?;
                if record.is_solved() {
                    best = if best.is_nan() { record.solution_norm } else { best.max(record.solution_norm) };
                    max_residual = max_residual.max(record.residual);
                } else {
                    obstructed += 1;
                }
            }
            Ok(SweepRow {
                lambda: [lambda.re, lambda.im],
                norm_estimate: best,
                obstructed_count: obstructed,
                probes: options.probe_count,
                max_residual,
            })
        })
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceRow {
    pub length: f64,
    pub norm_sq: f64,
}

/// `∫_0^T (1 - e^{-x})^2 dx`.
pub fn divergence_closed_form(length: f64) -> f64 {
    length - 2.0 + 2.0 * (-length).exp() + 0.5 - 0.5 * (-2.0 * length).exp()
}

/// Right-hand side `f1(t) = e^{i lambda_i t} e^{t-a} f*`, `f2 = 0` at
/// `lambda = i lambda_i`. Right-ray integrability forces `u2(b) = 0`, hence
/// `u1(a) = W* u2(b) = 0`, and the left candidate is integrated backward
/// from `a`. Returns its squared norm on `[a - T, a]` for each `T`.
pub fn counterexample_divergence(
    spec: &ExtensionSpec,
    lambda_i: f64,
    fstar: &CVector,
    lengths: &[f64],
) -> Result<Vec<DivergenceRow>> {
    if fstar.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: fstar.len(),
        });
    }
    let norm = fstar.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotUnitVector { norm });
    }
    let distance = spec.k_projector().distance(fstar);
    if spec.k_dim() == 0 || distance > 1e-8 {
        return Err(Error::NotInKernel { distance });
    }
    let a = spec.a();
    let lambda = Complex64::new(0.0, lambda_i);
    lengths
        .iter()
        .map(|&length| {
            let m = default_nodes(length);
            let f1 = RayFunction::make_uniform(Side::Left, a, length, m, |t| {
                fstar * Complex64::from_polar((t - a).exp(), lambda_i * t)
            })?;
            let op = spec.a1();
            let modes: Vec<ModeSolution> = (0..op.dim())
                .map(|k| {
                    let eigenvalue = op.eigenvalues()[k];
                    let phi = mode_coefficients(&f1, op.eigenvectors(), k);
                    let mu = Complex64::new(eigenvalue, 0.0) - lambda;
                    // A1 <= 0, so the backward sweep from a is never growing.
                    let y = sweep(&phi, f1.step(), mu, Direction::Backward);
                    ModeSolution {
                        eigenvalue,
                        particular: y.into_iter().map(|v| -v).collect(),
                        free: None,
                        trace: Complex64::new(0.0, 0.0),
                    }
                })
                .collect();
            let u1 = assemble_ray(&f1, op, &modes, &vec![Complex64::new(0.0, 0.0); op.dim()])?;
            Ok(DivergenceRow {
                length,
                norm_sq: u1.norm_sq(),
            })
        })
        .collect()
}

/// Least-squares slope of `norm_sq` against `T`.
pub fn fit_slope(rows: &[DivergenceRow]) -> f64 {
    let n = rows.len() as f64;
    let mx = rows.iter().map(|r| r.length).sum::<f64>() / n;
    let my = rows.iter().map(|r| r.norm_sq).sum::<f64>() / n;
    let sxy: f64 = rows.iter().map(|r| (r.length - mx) * (r.norm_sq - my)).sum();
    let sxx: f64 = rows.iter().map(|r| (r.length - mx).powi(2)).sum();
    sxy / sxx
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Csv(e.to_string());
    w.write_record(["re_lambda", "im_lambda", "norm_estimate", "obstructed_count"]).map_err(err)?;
    for r in rows {
        w.write_record([
            r.lambda[0].to_string(),
            r.lambda[1].to_string(),
            r.norm_estimate.to_string(),
            r.obstructed_count.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}

pub fn write_divergence_csv<W: Write>(rows: &[DivergenceRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Csv(e.to_string());
    w.write_record(["T", "norm_sq"]).map_err(err)?;
    for r in rows {
        w.write_record([r.length.to_string(), r.norm_sq.to_string()]).map_err(err)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}

/// The problem seen through `t -> -t`: rays swap, `A1 -> -A2`, `A2 -> -A1`,
/// `W -> W*`, and `(L_W - lambda) u = f` becomes `(L' - (-lambda)) u' = -f'`.
pub fn mirror_spec(spec: &ExtensionSpec) -> Result<ExtensionSpec> {
    use crate::operator::SignedCoefficientPair;
    let neg = |op: &HermitianOperator| HermitianOperator::new(-op.entries().clone());
    let pair = SignedCoefficientPair::with_tol(neg(spec.a2())?, neg(spec.a1())?, spec.coeffs().sign_tol())?;
    crate::extension::build_extension_with_tol(pair, spec.w().adjoint(), -spec.b(), -spec.a(), spec.ker_tol())
}

/// `t -> -t` on a two-ray function, moving each ray to the other side.
pub fn mirror_function(u: &TwoRayFunction) -> Result<TwoRayFunction> {
    let flip = |r: &RayFunction, side: Side| -> Result<RayFunction> {
        let m = r.len();
        let n = r.dim();
        let mut values = Vec::with_capacity(m * n);
        for i in (0..m).rev() {
            values.extend_from_slice(r.value(i));
        }
        RayFunction::from_values(side, -r.endpoint(), r.length(), m, n, values)
    };
    TwoRayFunction::new(flip(&u.right, Side::Left)?, flip(&u.left, Side::Right)?)
}
