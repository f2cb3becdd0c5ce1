//! Scenario runner behind the `tworay` binary.
//!
//! A scenario is one JSON document naming a model, numerics and command
//! parameters. Running it writes `report.json` plus command-specific CSV
//! tables into the output directory.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use tworay_core::boundary::{boundary_witness, gamma_maps, greens_residual, sign_calibration, SignCalibration};
use tworay_core::exec::Execution;
use tworay_core::extension::{
    build_extension_with_tol, normality_residual, profile_with_traces, random_domain_function, random_vector,
    selfadjoint_bc_residual_traces, ExtensionSpec, NORMALITY_FACTOR,
};
use tworay_core::heat::{cosine_reduce, heat_probe, HeatConfig};
use tworay_core::operator::{CMatrix, CVector, HermitianOperator, SignedCoefficientPair, UnitaryMap};
use tworay_core::spectral::report::{divergence_tolerance, kernel_direction, Assertion, ProbeSettings, SLOPE_TOL};
use tworay_core::spectral::{
    counterexample_divergence, divergence_closed_form, eigen_scan, fit_slope, resolvent_norm_sweep,
    write_divergence_csv, write_sweep_csv, LambdaGrid, ProbeGrid, ProbeSpace, SweepOptions,
};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    VerifyGreen,
    CheckNormality,
    ProbePointSpectrum,
    ResolventSweep,
    Counterexample,
    HeatDemo,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::VerifyGreen,
        Command::CheckNormality,
        Command::ProbePointSpectrum,
        Command::ResolventSweep,
        Command::Counterexample,
        Command::HeatDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyGreen => "verify-green",
            Command::CheckNormality => "check-normality",
            Command::ProbePointSpectrum => "probe-point-spectrum",
            Command::ResolventSweep => "resolvent-sweep",
            Command::Counterexample => "counterexample",
            Command::HeatDemo => "heat-demo",
        }
    }

    fn reference(self) -> &'static str {
        match self {
            Command::VerifyGreen => "Theorem 2.3",
            Command::CheckNormality => "Theorem 2.5",
            Command::ProbePointSpectrum => "Theorem 3.1",
            Command::ResolventSweep => "Theorem 3.2",
            Command::Counterexample => "Theorem 3.2",
            Command::HeatDemo => "Example 3.3",
        }
    }

    fn summary(self) -> &'static str {
        match self {
            Command::VerifyGreen => "boundary maps, surjectivity witness and Green identity",
            Command::CheckNormality => "norm equality on the domain and the interface condition",
            Command::ProbePointSpectrum => "decay classification of eigenfunction candidates on a lambda grid",
            Command::ResolventSweep => "resolvent norm estimates off the imaginary axis",
            Command::Counterexample => "truncated norm growth of the on-axis candidate solution",
            Command::HeatDemo => "all spectral probes on the cosine-reduced heat model",
        }
    }

    pub fn parse(name: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One line per command: `name → reference: summary`.
pub fn list_commands() -> String {
    Command::ALL
        .iter()
        .map(|c| format!("{} → {}: {}\n", c.name(), c.reference(), c.summary()))
        .collect()
}

#[derive(Debug)]
pub enum RunError {
    /// Malformed or inconsistent configuration; exit status 2.
    Config(String),
    /// Output could not be written; exit status 2.
    Io(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "invalid configuration: {m}"),
            RunError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        2
    }
}

fn config_err(e: impl fmt::Display) -> RunError {
    RunError::Config(e.to_string())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub command: Option<String>,
    pub model: ModelConfig,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub params: Option<Value>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Extension(ExtensionConfig),
    Heat(HeatModelConfig),
}

/// Matrices are row-major with interleaved real and imaginary parts.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionConfig {
    pub dim: usize,
    pub a: f64,
    pub b: f64,
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatModelConfig {
    pub modes: usize,
    pub phi: f64,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    #[serde(rename = "T")]
    pub length: f64,
    pub m: usize,
    pub ker_tol: f64,
    pub quad_tol: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            length: tworay_core::ray::DEFAULT_TRUNCATION,
            m: tworay_core::ray::default_nodes(tworay_core::ray::DEFAULT_TRUNCATION),
            ker_tol: tworay_core::operator::DEFAULT_KER_TOL,
            quad_tol: 1e-6,
        }
    }
}

impl Numerics {
    fn validate(&self) -> Result<(), RunError> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.length) || !positive(self.ker_tol) || !positive(self.quad_tol) || self.m < 5 {
            return Err(RunError::Config(format!(
                "numerics must be positive with m >= 5 (T = {}, m = {}, ker_tol = {}, quad_tol = {})",
                self.length, self.m, self.ker_tol, self.quad_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum Model {
    Extension(ExtensionSpec),
    Heat { config: HeatConfig, spec: ExtensionSpec },
}

impl Model {
    pub fn spec(&self) -> &ExtensionSpec {
        match self {
            Model::Extension(spec) => spec,
            Model::Heat { spec, .. } => spec,
        }
    }

    fn summary(&self) -> Value {
        let spec = self.spec();
        let mut v = json!({
            "kind": match self { Model::Extension(_) => "extension", Model::Heat { .. } => "heat" },
            "dim": spec.dim(),
            "a": spec.a(),
            "b": spec.b(),
            "ker_tol": spec.ker_tol(),
            "kernel_rank_left": spec.p1().rank(),
            "kernel_rank_right": spec.p2().rank(),
            "admissible_dim": spec.k_dim(),
            "normal_extension_possible": spec.normal_extension_possible(),
            "maximal_normal": spec.maximal_normal(),
        });
        if let Model::Heat { config, .. } = self {
            v["modes"] = json!(config.modes);
            v["phi"] = json!(config.phi);
        }
        v
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub command: Command,
    pub model: Model,
    pub numerics: Numerics,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub params: Value,
}

fn complex_matrix(name: &str, dim: usize, data: &[f64]) -> Result<CMatrix, RunError> {
    if data.len() != 2 * dim * dim {
        return Err(RunError::Config(format!(
            "{name} needs {} numbers (interleaved re/im, row-major), found {}",
            2 * dim * dim,
            data.len()
        )));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(RunError::Config(format!("{name} has non-finite entries")));
    }
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        let k = 2 * (i * dim + j);
        Complex64::new(data[k], data[k + 1])
    }))
}

fn build_model(config: &ModelConfig, numerics: &Numerics) -> Result<Model, RunError> {
    match config {
        ModelConfig::Extension(e) => {
            if e.dim == 0 {
                return Err(RunError::Config("dim must be positive".into()));
            }
            let a1 = HermitianOperator::new(complex_matrix("a1", e.dim, &e.a1)?).map_err(config_err)?;
            let a2 = HermitianOperator::new(complex_matrix("a2", e.dim, &e.a2)?).map_err(config_err)?;
            let w = UnitaryMap::new(complex_matrix("w", e.dim, &e.w)?).map_err(config_err)?;
            let pair = SignedCoefficientPair::new(a1, a2).map_err(config_err)?;
            let spec = build_extension_with_tol(pair, w, e.a, e.b, numerics.ker_tol).map_err(config_err)?;
            Ok(Model::Extension(spec))
        }
        ModelConfig::Heat(h) => {
            let config = HeatConfig::new(h.modes, h.phi).map_err(config_err)?;
            let spec = cosine_reduce(&config).map_err(config_err)?;
            Ok(Model::Heat { config, spec })
        }
    }
}

/// Validates a parsed document. `command`, `out` and `seed` from the command
/// line take precedence over the document; a conflicting command is an error.
pub fn scenario_from_config(
    config: ScenarioConfig,
    command: Command,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<Scenario, RunError> {
    if let Some(named) = &config.command {
        if named != command.name() {
            return Err(RunError::Config(format!(
                "document is for command {named:?} but {command:?} was requested",
                command = command.name()
            )));
        }
    }
    config.numerics.validate()?;
    let model = build_model(&config.model, &config.numerics)?;
    if command == Command::HeatDemo && !matches!(model, Model::Heat { .. }) {
        return Err(RunError::Config("heat-demo needs a heat model".into()));
    }
    Ok(Scenario {
        name: config.name,
        command,
        model,
        numerics: config.numerics,
        seed: seed.or(config.seed).unwrap_or(DEFAULT_SEED),
        output_dir: out.or(config.output_dir).unwrap_or_else(|| PathBuf::from(".")),
        params: config.params.unwrap_or(Value::Null),
    })
}

pub fn load_scenario(path: &Path, command: Command, out: Option<PathBuf>, seed: Option<u64>) -> Result<Scenario, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    let config: ScenarioConfig = serde_json::from_str(&text).map_err(|e| RunError::Config(e.to_string()))?;
    scenario_from_config(config, command, out, seed)
}

fn params<T: DeserializeOwned + Default>(value: &Value) -> Result<T, RunError> {
    if value.is_null() {
        return Ok(T::default());
    }
    serde_json::from_value(value.clone()).map_err(|e| RunError::Config(format!("params: {e}")))
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub scenario: String,
    pub command: String,
    pub generated_at: String,
    pub seed: u64,
    pub model: Value,
    pub numerics: Numerics,
    pub sign_convention: SignCalibration,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
    pub results: Value,
    pub notes: Vec<String>,
    pub files: Vec<String>,
}

struct CommandOutput {
    assertions: Vec<Assertion>,
    results: Value,
    notes: Vec<String>,
    tables: Vec<(String, Vec<u8>)>,
}

fn sign_note(cal: &SignCalibration) -> String {
    let form = match cal.convention {
        tworay_core::boundary::SignConvention::Direct => "(Y1 u, Y2 v) - (Y2 u, Y1 v)",
        tworay_core::boundary::SignConvention::Exchanged => "(Y2 u, Y1 v) - (Y1 u, Y2 v)",
    };
    format!(
        "boundary form {form} selected by the witness self-test (residual {:.3e} against {:.3e} for the other pairing)",
        cal.residual_exchanged.min(cal.residual_direct),
        cal.residual_exchanged.max(cal.residual_direct)
    )
}

/// Runs the scenario and writes its files. The report is written even when
/// assertions fail.
pub fn run_scenario(scenario: &Scenario) -> Result<Report, RunError> {
    let output = match scenario.command {
        Command::VerifyGreen => verify_green(scenario)?,
        Command::CheckNormality => check_normality(scenario)?,
        Command::ProbePointSpectrum => probe_point_spectrum(scenario)?,
        Command::ResolventSweep => resolvent_sweep(scenario)?,
        Command::Counterexample => counterexample(scenario)?,
        Command::HeatDemo => heat_demo(scenario)?,
    };
    let calibration = sign_calibration();
    let mut notes = vec![sign_note(&calibration)];
    if let Model::Heat { .. } = scenario.model {
        notes.push(
            "heat model uses Neumann conditions u_x(t, 0) = u_x(t, 1) = 0 in x; the constant mode spans the admissible subspace"
                .into(),
        );
    }
    notes.extend(output.notes);

    fs::create_dir_all(&scenario.output_dir)
        .map_err(|e| RunError::Io(format!("{}: {e}", scenario.output_dir.display())))?;
    let mut files = Vec::new();
    for (name, bytes) in &output.tables {
        let path = scenario.output_dir.join(name);
        fs::write(&path, bytes).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        files.push(name.clone());
    }
    files.push("report.json".into());
    let report = Report {
        scenario: scenario.name.clone(),
        command: scenario.command.name().into(),
        generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        seed: scenario.seed,
        model: scenario.model.summary(),
        numerics: scenario.numerics,
        sign_convention: calibration,
        passed: output.assertions.iter().all(|a| a.passed),
        assertions: output.assertions,
        results: output.results,
        notes,
        files,
    };
    let path = scenario.output_dir.join("report.json");
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| RunError::Io(e.to_string()))?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    Ok(report)
}

fn core_err(e: tworay_core::error::Error) -> RunError {
    RunError::Config(e.to_string())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct GreenParams {
    pairs: usize,
}

impl Default for GreenParams {
    fn default() -> Self {
        Self { pairs: 200 }
    }
}

fn verify_green(s: &Scenario) -> Result<CommandOutput, RunError> {
    let p: GreenParams = params(&s.params)?;
    let spec = s.model.spec();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let (mut round_trip, mut green) = (0.0_f64, 0.0_f64);
    let mut previous = None;
    for _ in 0..p.pairs {
        let f = random_vector(&mut rng, spec.dim());
        let g = random_vector(&mut rng, spec.dim());
        let u = boundary_witness(&f, &g, spec.a(), spec.b(), s.numerics.length, s.numerics.m).map_err(core_err)?;
        let d = gamma_maps(&u);
        round_trip = round_trip.max((d.y1 - &f).norm()).max((d.y2 - &g).norm());
        green = green.max(greens_residual(&u, &u).map_err(core_err)?);
        if let Some(v) = previous.take() {
            green = green.max(greens_residual(&u, &v).map_err(core_err)?);
        }
        previous = Some(u);
    }
    Ok(CommandOutput {
        assertions: vec![
            Assertion::at_most("witness_round_trip", round_trip, 1e-10),
            Assertion::at_most("green_residual", green, s.numerics.quad_tol),
        ],
        results: json!({ "pairs": p.pairs, "max_round_trip_error": round_trip, "max_green_residual": green }),
        notes: Vec::new(),
        tables: Vec::new(),
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct NormalityParams {
    samples: usize,
    off_domain_tol: f64,
    coupling_pairs: usize,
}

impl Default for NormalityParams {
    fn default() -> Self {
        Self {
            samples: 100,
            off_domain_tol: 1e-5,
            coupling_pairs: 500,
        }
    }
}

fn check_normality(s: &Scenario) -> Result<CommandOutput, RunError> {
    use rand::Rng;
    let p: NormalityParams = params(&s.params)?;
    let spec = s.model.spec();
    let (length, m) = (s.numerics.length, s.numerics.m);
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut assertions = Vec::new();
    let mut notes = Vec::new();

    let mut on = 0.0_f64;
    if spec.k_dim() > 0 {
        for _ in 0..p.samples {
            let u = random_domain_function(spec, &mut rng, length, m).map_err(core_err)?;
            on = on.max(normality_residual(spec, &u).map_err(core_err)?.lhs_sq_diff.abs());
        }
        assertions.push(Assertion::at_most("domain_norm_difference", on, s.numerics.quad_tol));
    } else {
        notes.push("admissible subspace is trivial: the domain only contains functions vanishing at both endpoints".into());
    }
    let mut off = 0.0_f64;
    for _ in 0..p.samples {
        let t1 = random_vector(&mut rng, spec.dim());
        let t2 = random_vector(&mut rng, spec.dim());
        let u = profile_with_traces(&mut rng, spec.a(), spec.b(), &t1, &t2, length, m).map_err(core_err)?;
        off = off.max(normality_residual(spec, &u).map_err(core_err)?.residual);
    }
    assertions.push(Assertion::at_most("boundary_formula_residual", off, p.off_domain_tol));

    let mut misclassified = 0usize;
    for _ in 0..p.coupling_pairs {
        let u1 = random_vector(&mut rng, spec.dim());
        let mut u2 = spec.w().apply(&u1);
        if rng.random_bool(0.5) {
            let d = random_vector(&mut rng, spec.dim());
            let size = 10f64.powf(rng.random_range(-6.0..0.0));
            u2 += &d * Complex64::new(size / d.norm(), 0.0);
        }
        let residual = selfadjoint_bc_residual_traces(spec.w(), &u1, &u2);
        if (residual <= 1e-10) != ((&u2 - spec.w().apply(&u1)).norm() <= 1e-9) {
            misclassified += 1;
        }
    }
    assertions.push(Assertion::at_most("coupling_misclassified", misclassified as f64, 0.0));
    Ok(CommandOutput {
        assertions,
        results: json!({
            "samples": p.samples,
            "factor": NORMALITY_FACTOR,
            "max_domain_norm_difference": on,
            "max_boundary_formula_residual": off,
            "coupling_pairs": p.coupling_pairs,
            "coupling_misclassified": misclassified,
            "normal_extension_possible": spec.normal_extension_possible(),
            "maximal_normal": spec.maximal_normal(),
        }),
        notes,
        tables: Vec::new(),
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct PointSpectrumParams {
    grid: LambdaGrid,
}

impl Default for PointSpectrumParams {
    fn default() -> Self {
        Self {
            grid: LambdaGrid::square(2.0, 41),
        }
    }
}

fn probe_point_spectrum(s: &Scenario) -> Result<CommandOutput, RunError> {
    let p: PointSpectrumParams = params(&s.params)?;
    let spec = s.model.spec();
    let points = p.grid.points();
    let verdicts = eigen_scan(spec, &points, Execution::default());
    let found = verdicts.iter().filter(|v| v.eigenfunction_exists).count();
    let mut csv = String::from("re_lambda,im_lambda,eigenfunction_exists,left_decaying,right_decaying\n");
    for v in &verdicts {
        let count = |side| v.per_component.iter().filter(|c| c.side == side && c.decay_ok).count();
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            v.lambda[0],
            v.lambda[1],
            v.eigenfunction_exists,
            count(tworay_core::ray::Side::Left),
            count(tworay_core::ray::Side::Right)
        ));
    }
    let mut forcing: Vec<&str> = verdicts.iter().map(|v| v.forcing.as_str()).collect();
    forcing.sort_unstable();
    forcing.dedup();
    Ok(CommandOutput {
        assertions: vec![
            Assertion::at_least("admissible_dim", spec.k_dim() as f64, 1.0),
            Assertion::at_most("eigenfunctions_found", found as f64, 0.0),
        ],
        results: json!({ "grid": p.grid, "points": points.len(), "eigenfunctions_found": found, "reasons": forcing }),
        notes: Vec::new(),
        tables: vec![("point_spectrum.csv".into(), csv.into_bytes())],
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SweepParams {
    lambdas: Vec<[f64; 2]>,
    probe_count: usize,
    probe_space: ProbeSpace,
    grid: ProbeGrid,
    residual_tol: f64,
    /// When set, estimates must lie within this relative distance of `1 / |Re lambda|`.
    inverse_distance_tol: Option<f64>,
    allow_obstructions: bool,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            lambdas: vec![[1.0, 0.0], [-1.0, 0.0], [0.5, 0.0], [-0.5, 0.0], [2.0, 0.0], [1.0, 3.0]],
            probe_count: 8,
            probe_space: ProbeSpace::Full,
            grid: ProbeGrid::default(),
            residual_tol: 1e-5,
            inverse_distance_tol: None,
            allow_obstructions: false,
        }
    }
}

fn lambda_tag(l: [f64; 2]) -> String {
    format!("{}{:+}i", l[0], l[1])
}

fn resolvent_sweep(s: &Scenario) -> Result<CommandOutput, RunError> {
    let p: SweepParams = params(&s.params)?;
    let spec = s.model.spec();
    let lambdas: Vec<Complex64> = p.lambdas.iter().map(|l| Complex64::new(l[0], l[1])).collect();
    let options = SweepOptions {
        probe_count: p.probe_count,
        probe_space: p.probe_space,
        seed: s.seed,
        grid: p.grid,
        execution: Execution::default(),
    };
    let rows = resolvent_norm_sweep(spec, &lambdas, &options).map_err(core_err)?;
    let mut assertions = Vec::new();
    let mut notes = Vec::new();
    for row in &rows {
        let tag = lambda_tag(row.lambda);
        if row.obstructed_count > 0 {
            notes.push(format!(
                "lambda = {tag}: {} of {} probes obstructed by forced traces outside the admissible constraints",
                row.obstructed_count, row.probes
            ));
        }
        if !p.allow_obstructions {
            assertions.push(Assertion::at_most(format!("obstructed_{tag}"), row.obstructed_count as f64, 0.0));
        }
        if row.obstructed_count < row.probes {
            assertions.push(Assertion::at_most(format!("residual_{tag}"), row.max_residual, p.residual_tol));
        }
        if let Some(tol) = p.inverse_distance_tol {
            let oracle = 1.0 / row.lambda[0].abs();
            let rel = ((row.norm_estimate - oracle) / oracle).abs();
            assertions.push(Assertion::at_most(
                format!("inverse_distance_{tag}"),
                if rel.is_nan() { f64::INFINITY } else { rel },
                tol,
            ));
        }
    }
    let mut csv = Vec::new();
    write_sweep_csv(&rows, &mut csv).map_err(core_err)?;
    Ok(CommandOutput {
        assertions,
        results: json!({ "probe_count": p.probe_count, "probe_space": p.probe_space, "rows": rows }),
        notes,
        tables: vec![("resolvent_sweep.csv".into(), csv)],
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CounterexampleParams {
    lambda_i: f64,
    #[serde(rename = "T_list")]
    lengths: Vec<f64>,
    #[serde(rename = "slope_T")]
    slope_lengths: Vec<f64>,
    /// Interleaved re/im; defaults to the first admissible direction.
    fstar: Option<Vec<f64>>,
}

impl Default for CounterexampleParams {
    fn default() -> Self {
        Self {
            lambda_i: 0.0,
            lengths: vec![10.0, 100.0],
            slope_lengths: vec![20.0, 40.0, 80.0],
            fstar: None,
        }
    }
}

const REPAIR_NOTE: &str = "on-axis right-hand side uses the decaying profile e^{t-a}; e^{-(t-a)} grows as t -> -inf and is not square integrable on the left ray";

fn counterexample(s: &Scenario) -> Result<CommandOutput, RunError> {
    let p: CounterexampleParams = params(&s.params)?;
    let spec = s.model.spec();
    if p.lengths.is_empty() || p.slope_lengths.len() < 2 || p.lengths.iter().chain(&p.slope_lengths).any(|&t| !(t > 0.0)) {
        return Err(RunError::Config("T_list needs positive lengths and slope_T at least two".into()));
    }
    let fstar = match &p.fstar {
        Some(v) => {
            if v.len() != 2 * spec.dim() {
                return Err(RunError::Config(format!("fstar needs {} numbers", 2 * spec.dim())));
            }
            CVector::from_iterator(spec.dim(), v.chunks(2).map(|c| Complex64::new(c[0], c[1])))
        }
        None => kernel_direction(spec).map_err(core_err)?,
    };
    let rows = counterexample_divergence(spec, p.lambda_i, &fstar, &p.lengths).map_err(core_err)?;
    let slope_rows = counterexample_divergence(spec, p.lambda_i, &fstar, &p.slope_lengths).map_err(core_err)?;
    let slope = fit_slope(&slope_rows);
    let mut assertions: Vec<Assertion> = rows
        .iter()
        .map(|r| {
            Assertion::at_most(
                format!("closed_form_T{}", r.length),
                (r.norm_sq - divergence_closed_form(r.length)).abs(),
                divergence_tolerance(r.length),
            )
        })
        .collect();
    let monotone = rows.windows(2).all(|w| w[0].length >= w[1].length || w[1].norm_sq > w[0].norm_sq);
    assertions.push(Assertion::at_least("monotone_in_T", if monotone { 1.0 } else { 0.0 }, 1.0));
    assertions.push(Assertion::at_most("slope_deviation", (slope - 1.0).abs(), SLOPE_TOL));
    let mut csv = Vec::new();
    write_divergence_csv(&rows, &mut csv).map_err(core_err)?;
    Ok(CommandOutput {
        assertions,
        results: json!({ "lambda_i": p.lambda_i, "rows": rows, "slope_rows": slope_rows, "slope": slope }),
        notes: vec![REPAIR_NOTE.into()],
        tables: vec![("divergence.csv".into(), csv)],
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct HeatDemoParams {
    grid: LambdaGrid,
    lambda_i: f64,
    #[serde(rename = "T_list")]
    lengths: Vec<f64>,
    #[serde(rename = "slope_T")]
    slope_lengths: Vec<f64>,
    lambdas: Vec<[f64; 2]>,
    probe_count: usize,
}

impl Default for HeatDemoParams {
    fn default() -> Self {
        let d = ProbeSettings::default();
        Self {
            grid: d.scan,
            lambda_i: d.lambda_i,
            lengths: d.divergence_lengths,
            slope_lengths: d.slope_lengths,
            lambdas: d.sweep.iter().map(|l| [l.re, l.im]).collect(),
            probe_count: d.probe_count,
        }
    }
}

fn heat_demo(s: &Scenario) -> Result<CommandOutput, RunError> {
    let p: HeatDemoParams = params(&s.params)?;
    let Model::Heat { config, .. } = &s.model else {
        return Err(RunError::Config("heat-demo needs a heat model".into()));
    };
    if p.slope_lengths.len() < 2 {
        return Err(RunError::Config("slope_T needs at least two lengths".into()));
    }
    let settings = ProbeSettings {
        scan: p.grid,
        lambda_i: p.lambda_i,
        divergence_lengths: p.lengths,
        slope_lengths: p.slope_lengths,
        sweep: p.lambdas.iter().map(|l| Complex64::new(l[0], l[1])).collect(),
        probe_count: p.probe_count,
        seed: s.seed,
        ..ProbeSettings::default()
    };
    let report = heat_probe(config, &settings).map_err(core_err)?;
    let mut sweep_csv = Vec::new();
    write_sweep_csv(&report.probe.sweep, &mut sweep_csv).map_err(core_err)?;
    let mut div_csv = Vec::new();
    write_divergence_csv(&report.probe.divergence, &mut div_csv).map_err(core_err)?;
    Ok(CommandOutput {
        assertions: report.probe.assertions.clone(),
        results: json!({
            "scan_points": report.probe.scan_points,
            "eigenfunctions_found": report.probe.eigenfunctions_found,
            "admissible_dim": report.admissible_dim,
            "divergence": report.probe.divergence,
            "slope_rows": report.probe.slope_rows,
            "slope": report.probe.slope,
            "sweep": report.probe.sweep,
            "probe_space": settings.probe_space,
        }),
        notes: vec![
            REPAIR_NOTE.into(),
            "resolvent probes are drawn in the constant mode, which carries the resolvent norm".into(),
        ],
        tables: vec![
            ("resolvent_sweep.csv".into(), sweep_csv),
            ("divergence.csv".into(), div_csv),
        ],
    })
}
