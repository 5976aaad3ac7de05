//! Config-driven experiment runner: TOML in, CSV files plus a manifest out.
//!
//! A config names an `experiment`, an optional `seed` and `output` directory,
//! and a `[parameters]` table whose keys depend on the experiment. Unknown
//! keys anywhere are rejected. Command-line `--key value` pairs override
//! entries of `[parameters]`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::csvout::Table;
use crate::decoherence::{decay_curve, entropy_increase_check, measure_with_chain, EnvironmentModel};
use crate::density::{
    argon_localization, boltzmann_entropy, index_labels, thermal_density, von_neumann_entropy, DensityMatrix,
    ThermalConfig,
};
use crate::detectors::{
    chsh, compton_channel, epr_coincidence_table, BellConfig, ChshSettings, EprState, FilterSpec, WhichPathSetup,
};
use crate::error::Error;
use crate::oracle::suite::report_table;
use crate::oracle::{run_oracle_suite, Status, SuiteOptions};
use crate::pointer::{
    cat_verdict, class_offblock, final_state_density, final_state_matrix, measure_pointer, DirectionGrid,
    PointerMeasurement, TransitionDims, TransitionModel,
};
use crate::wave::{slit_pattern, visibility, Grid1D, SlitGeometry, Slits, WeylPacket};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    TwoSlit,
    WhichPath,
    Epr,
    Chsh,
    Weyl,
    Thermal,
    Decohere,
    Cat,
    Oracle,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::TwoSlit,
        Experiment::WhichPath,
        Experiment::Epr,
        Experiment::Chsh,
        Experiment::Weyl,
        Experiment::Thermal,
        Experiment::Decohere,
        Experiment::Cat,
        Experiment::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::TwoSlit => "two_slit",
            Experiment::WhichPath => "which_path",
            Experiment::Epr => "epr",
            Experiment::Chsh => "chsh",
            Experiment::Weyl => "weyl",
            Experiment::Thermal => "thermal",
            Experiment::Decohere => "decohere",
            Experiment::Cat => "cat",
            Experiment::Oracle => "oracle",
        }
    }

    pub fn parse(name: &str) -> Result<Self, RunError> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == name.replace('-', "_"))
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|e| e.name()).collect();
                RunError::Config(format!("unknown experiment `{name}`, expected one of {}", names.join(", ")))
            })
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub parameters: toml::Table,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            seed: 0,
            output: None,
            parameters: toml::Table::new(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            RunError::Config(msg) => RunError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Sets `parameters.<key>`; the value is read as a TOML literal when
    /// possible and as a plain string otherwise. Dashes in keys become
    /// underscores.
    pub fn set_parameter(&mut self, key: &str, raw: &str) {
        let key = key.trim_start_matches("--").replace('-', "_");
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_owned()));
        self.parameters.insert(key, value);
    }

    fn params<T: DeserializeOwned>(&self) -> Result<T, RunError> {
        toml::Value::Table(self.parameters.clone())
            .try_into()
            .map_err(|e: toml::de::Error| {
                RunError::Config(format!("[parameters] for `{}`: {}", self.experiment, e.message()))
            })
    }

    /// Validates the parameter table without running anything.
    pub fn validate(&self) -> Result<(), RunError> {
        match self.experiment {
            Experiment::TwoSlit => self.params::<TwoSlitParams>().map(drop),
            Experiment::WhichPath => self.params::<WhichPathParams>().map(drop),
            Experiment::Epr => self.params::<EprParams>().map(drop),
            Experiment::Chsh => self.params::<ChshParams>().map(drop),
            Experiment::Weyl => self.params::<WeylParams>().map(drop),
            Experiment::Thermal => self.params::<ThermalParams>().map(drop),
            Experiment::Decohere => self.params::<DecohereParams>().map(drop),
            Experiment::Cat => self.params::<CatParams>().map(drop),
            Experiment::Oracle => self.params::<OracleParams>().map(drop),
        }
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Invariant(String),
    Io(std::io::Error),
    Numeric(Error),
}

impl RunError {
    /// 2 for configuration problems, 3 for invariant violations, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Invariant(_) => 3,
            RunError::Io(_) | RunError::Numeric(_) => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Invariant(m) => write!(f, "invariant violated: {m}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
            RunError::Numeric(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(m) => RunError::Config(m),
            e if e.is_invariant_violation() => {
                RunError::Invariant(e.to_string().trim_start_matches("invariant violated: ").to_owned())
            }
            e => RunError::Numeric(e),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct TwoSlitParams {
    separation: f64,
    width: f64,
    wavenumber: f64,
    screen_distance: f64,
    theta_max: f64,
    points: usize,
}

impl Default for TwoSlitParams {
    fn default() -> Self {
        Self {
            separation: 5.0,
            width: 1.0,
            wavenumber: 4.0 * PI,
            screen_distance: 1e4,
            theta_max: 0.3,
            points: 601,
        }
    }
}

impl TwoSlitParams {
    fn geometry(&self) -> Result<SlitGeometry, RunError> {
        Ok(SlitGeometry::new(self.separation, self.width, self.wavenumber, self.screen_distance)?)
    }

    fn screen(&self) -> Result<Grid1D, RunError> {
        Ok(Grid1D::new(-self.theta_max, self.theta_max, self.points)?)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct WhichPathParams {
    separation: f64,
    width: f64,
    wavenumber: f64,
    screen_distance: f64,
    theta_max: f64,
    points: usize,
    /// Scattering position in the slit plane; defaults to the upper slit centre.
    scatter_at: Option<f64>,
    plane_half_width: f64,
    plane_points: usize,
}

impl Default for WhichPathParams {
    fn default() -> Self {
        let t = TwoSlitParams::default();
        Self {
            separation: t.separation,
            width: t.width,
            wavenumber: t.wavenumber,
            screen_distance: t.screen_distance,
            theta_max: t.theta_max,
            points: t.points,
            scatter_at: None,
            plane_half_width: 5.0,
            plane_points: 401,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct EprParams {
    alpha: f64,
    beta: f64,
    /// `none`, `projection` or `spin_flip`, acting on the particle at `+X`.
    filter: String,
}

impl Default for EprParams {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
            filter: "none".into(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ChshParams {
    alpha1: f64,
    alpha2: f64,
    beta1: f64,
    beta2: f64,
    /// Points per axis of the `(alpha, beta)` correlation sweep over `[0, pi]`.
    sweep_points: usize,
}

impl Default for ChshParams {
    fn default() -> Self {
        let c = ChshSettings::canonical();
        Self {
            alpha1: c.alpha1,
            alpha2: c.alpha2,
            beta1: c.beta1,
            beta2: c.beta2,
            sweep_points: 19,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct WeylParams {
    energy: f64,
    half_width: f64,
    mass: f64,
    half_extent: f64,
    dx: f64,
    t_max: f64,
    steps: usize,
}

impl Default for WeylParams {
    fn default() -> Self {
        Self {
            energy: 1.25,
            half_width: 0.1,
            mass: 1.0,
            half_extent: 2000.0,
            dx: 1.0,
            t_max: 10.0,
            steps: 5,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ThermalParams {
    temperature: f64,
    energies: Vec<f64>,
    argon_temperature_k: f64,
    argon_mass_u: f64,
}

impl Default for ThermalParams {
    fn default() -> Self {
        Self {
            temperature: 1.0,
            energies: vec![0.0, 2f64.ln()],
            argon_temperature_k: 300.0,
            argon_mass_u: crate::density::units::ARGON_MASS_U,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct DecohereParams {
    c: f64,
    n_max: usize,
    p1: f64,
    efficiency1: f64,
    efficiency2: f64,
}

impl Default for DecohereParams {
    fn default() -> Self {
        Self {
            c: 0.9,
            n_max: 100,
            p1: 0.5,
            efficiency1: 1.0,
            efficiency2: 1.0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CatParams {
    n: usize,
    c: f64,
    p_live: f64,
    directions: usize,
    /// Random transition models drawn from the seed to check the structural zero.
    random_transitions: usize,
}

impl Default for CatParams {
    fn default() -> Self {
        Self {
            n: 30,
            c: 0.5,
            p_live: 0.5,
            directions: 16,
            random_transitions: 16,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct OracleParams {
    cases: Vec<String>,
}

/// A produced output file.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Artifact {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub experiment: Experiment,
    pub output: PathBuf,
    pub artifacts: Vec<Artifact>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    experiment: Experiment,
    seed: u64,
    config: &'a ExperimentConfig,
    created_unix: u64,
    files: &'a [Artifact],
}

struct Outputs {
    tables: Vec<(String, Table)>,
}

impl Outputs {
    fn new() -> Self {
        Self { tables: Vec::new() }
    }

    fn add(&mut self, name: &str, table: Table) {
        self.tables.push((name.to_owned(), table));
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn default_output(experiment: Experiment) -> PathBuf {
    PathBuf::from("out").join(experiment.name())
}

/// Runs one experiment and writes its CSV files and `manifest.json`.
pub fn run(config: &ExperimentConfig) -> Result<RunSummary, RunError> {
    config.validate()?;
    let outputs = match config.experiment {
        Experiment::TwoSlit => two_slit(config.params()?)?,
        Experiment::WhichPath => which_path(config.params()?)?,
        Experiment::Epr => epr(config.params()?)?,
        Experiment::Chsh => chsh_run(config.params()?)?,
        Experiment::Weyl => weyl(config.params()?)?,
        Experiment::Thermal => thermal(config.params()?)?,
        Experiment::Decohere => decohere(config.params()?)?,
        Experiment::Cat => cat(config.params()?, config.seed)?,
        Experiment::Oracle => oracle(config.params()?)?,
    };
    let dir = config.output.clone().unwrap_or_else(|| default_output(config.experiment));
    std::fs::create_dir_all(&dir)?;
    let mut artifacts = Vec::new();
    for (name, table) in &outputs.tables {
        let body = table.render();
        std::fs::write(dir.join(name), &body)?;
        artifacts.push(Artifact {
            name: name.clone(),
            bytes: body.len(),
            sha256: hex(&Sha256::digest(body.as_bytes())),
        });
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: config.experiment,
        seed: config.seed,
        config,
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        files: &artifacts,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| RunError::Io(e.into()))?;
    std::fs::write(dir.join("manifest.json"), json + "\n")?;
    Ok(RunSummary {
        experiment: config.experiment,
        output: dir,
        artifacts,
    })
}

fn two_slit(p: TwoSlitParams) -> Result<Outputs, RunError> {
    let geom = p.geometry()?;
    let screen = p.screen()?;
    let k2 = slit_pattern(&geom, Slits::Two, &screen)?;
    let k1 = slit_pattern(&geom, Slits::One { centre: geom.slit_centres()[1] }, &screen)?;
    let (i1, i2) = (k1.intensity(), k2.intensity());
    let v = visibility(
        i2[screen.nearest(0.0)?],
        i2[screen.nearest(geom.first_fringe_zero())?],
    );
    let mut t = Table::new(["theta", "intensity_k1", "intensity_k2", "visibility"]);
    for i in 0..screen.points {
        t.push(vec![screen.x(i).into(), i1[i].into(), i2[i].into(), v.into()]);
    }
    let mut out = Outputs::new();
    out.add("screen.csv", t);
    Ok(out)
}

fn which_path(p: WhichPathParams) -> Result<Outputs, RunError> {
    let geom = SlitGeometry::new(p.separation, p.width, p.wavenumber, p.screen_distance)?;
    let plane = Grid1D::new(-p.plane_half_width, p.plane_half_width, p.plane_points)?;
    let screen = Grid1D::new(-p.theta_max, p.theta_max, p.points)?;
    let x_s = p.scatter_at.unwrap_or(geom.slit_centres()[1]);
    let setup = WhichPathSetup::standard(geom, plane, screen, x_s)?;
    let photon = setup.photon();
    let scattered = compton_channel(&photon, x_s, &setup)?;
    let before = setup.screen_intensity(&photon)?;
    let after = setup.screen_intensity(&scattered)?;
    let one = setup.outgoing[0].1.screen.intensity();
    let mut t = Table::new(["theta", "intensity_before", "intensity_after", "intensity_one_slit"]);
    for i in 0..screen.points {
        t.push(vec![screen.x(i).into(), before[i].into(), after[i].into(), one[i].into()]);
    }
    let mut s = Table::new(["quantity", "value"]);
    s.push(vec!["visibility_before".into(), setup.fringe_visibility(&before)?.into()]);
    s.push(vec!["visibility_after".into(), setup.fringe_visibility(&after)?.into()]);
    s.push(vec!["visibility_one_slit".into(), setup.fringe_visibility(&one)?.into()]);
    s.push(vec!["scattered_norm".into(), scattered.norm_sqr().into()]);
    let mut out = Outputs::new();
    out.add("which_path.csv", t);
    out.add("visibility.csv", s);
    Ok(out)
}

fn epr(p: EprParams) -> Result<Outputs, RunError> {
    let state = EprState::singlet();
    let filter = match p.filter.as_str() {
        "none" => None,
        "projection" => Some(FilterSpec::projection(state.arm1)),
        "spin_flip" => Some(FilterSpec::spin_flip(state.arm1)),
        other => {
            return Err(RunError::Config(format!(
                "[parameters] filter `{other}`, expected none, projection or spin_flip"
            )))
        }
    };
    let table = epr_coincidence_table(&state, filter.as_ref(), &BellConfig::new(p.alpha, p.beta))?;
    if (table.total() - 1.0).abs() > 1e-12 && table.raw_total > 0.0 {
        return Err(RunError::Invariant(format!(
            "coincidence probabilities sum to {}",
            table.total()
        )));
    }
    let mut out = Outputs::new();
    out.add("coincidences.csv", table.to_table());
    Ok(out)
}

fn chsh_run(p: ChshParams) -> Result<Outputs, RunError> {
    let state = EprState::singlet();
    let settings = ChshSettings {
        alpha1: p.alpha1,
        alpha2: p.alpha2,
        beta1: p.beta1,
        beta2: p.beta2,
    };
    let r = chsh(&state, &settings)?;
    let mut t = Table::new(["quantity", "alpha", "beta", "value"]);
    let names = ["E11", "E12", "E21", "E22"];
    for ((name, (a, b)), e) in names.iter().zip(settings.pairs()).zip(r.correlations) {
        t.push(vec![(*name).into(), a.into(), b.into(), e.into()]);
    }
    t.push(vec!["S_signed".into(), "".into(), "".into(), r.s.into()]);
    t.push(vec!["S".into(), "".into(), "".into(), r.magnitude().into()]);
    if r.magnitude() > 2.0 * 2f64.sqrt() + 1e-9 {
        return Err(RunError::Invariant(format!("|S| = {} exceeds 2 sqrt 2", r.magnitude())));
    }

    let n = p.sweep_points.max(2);
    let angles: Vec<f64> = (0..n).map(|k| k as f64 * PI / (n - 1) as f64).collect();
    let mut sweep = Table::new(["alpha", "beta", "correlation"]);
    for &a in &angles {
        for &b in &angles {
            let e = crate::detectors::bell_correlation(&state, a, b)?;
            sweep.push(vec![a.into(), b.into(), e.into()]);
        }
    }
    let mut out = Outputs::new();
    out.add("chsh.csv", t);
    out.add("bell.csv", sweep);
    Ok(out)
}

fn weyl(p: WeylParams) -> Result<Outputs, RunError> {
    let packet = WeylPacket::new(p.energy, p.half_width, p.mass)?;
    let grid = Grid1D::symmetric(p.half_extent, p.dx)?;
    let w = packet.normalize_on(&grid)?;
    let steps = p.steps.max(1);
    let mut t = Table::new(["t", "peak", "group_velocity_peak", "norm"]);
    for k in 0..=steps {
        let time = p.t_max * k as f64 / steps as f64;
        let norm = w.total_probability(time);
        if (norm - 1.0).abs() > 1e-4 {
            return Err(RunError::Invariant(format!("packet norm {norm} at t = {time}")));
        }
        t.push(vec![
            time.into(),
            w.peak_position(time).into(),
            (packet.group_velocity() * time).into(),
            norm.into(),
        ]);
    }
    let mut out = Outputs::new();
    out.add("weyl.csv", t);
    out.add("snapshot.csv", crate::wave::snapshot_table(&grid, &w.sample(p.t_max)));
    Ok(out)
}

fn thermal(p: ThermalParams) -> Result<Outputs, RunError> {
    let rho = thermal_density(&ThermalConfig::new(p.temperature, p.energies.clone()))?;
    let loc = argon_localization(p.argon_temperature_k, p.argon_mass_u)?;
    let mut s = Table::new(["quantity", "value"]);
    s.push(vec!["boltzmann_entropy".into(), boltzmann_entropy(&rho).into()]);
    s.push(vec!["von_neumann_entropy".into(), von_neumann_entropy(&rho).into()]);
    s.push(vec!["argon_lambda_nm".into(), loc.lambda_nm.into()]);
    s.push(vec!["argon_lambda_natural".into(), loc.lambda_natural.into()]);
    s.push(vec!["atomic_size_natural".into(), loc.threshold_natural.into()]);
    s.push(vec![
        "argon_localized".into(),
        (if loc.below_atomic_size { "true" } else { "false" }).into(),
    ]);
    let mut out = Outputs::new();
    out.add("thermal.csv", rho.to_table());
    out.add("summary.csv", s);
    Ok(out)
}

fn decohere(p: DecohereParams) -> Result<Outputs, RunError> {
    if !(0.0..=1.0).contains(&p.p1) {
        return Err(RunError::Config("[parameters] p1 must lie in [0, 1]".into()));
    }
    let amps = [
        num_complex::Complex64::new(p.p1.sqrt(), 0.0),
        num_complex::Complex64::new((1.0 - p.p1).sqrt(), 0.0),
    ];
    let system = DensityMatrix::pure(index_labels(2), &amps)?;
    let env = EnvironmentModel::Uniform { n: p.n_max, c: p.c };
    let outcome = measure_with_chain(&system, &env, [p.efficiency1, p.efficiency2])?;
    let check = entropy_increase_check(&system, &outcome);
    if !check.increased {
        return Err(RunError::Invariant(format!("entropy decreased by {}", -check.delta)));
    }
    let mut s = Table::new(["quantity", "value"]);
    s.push(vec!["entropy_initial".into(), check.initial.into()]);
    s.push(vec!["entropy_final".into(), check.final_.into()]);
    s.push(vec!["pointer_offdiagonal".into(), outcome.offdiagonal().into()]);
    s.push(vec!["detected_fraction".into(), outcome.detected_fraction().into()]);
    let mut out = Outputs::new();
    out.add("decay.csv", decay_curve(p.c, p.n_max)?);
    out.add("pointer.csv", outcome.reduced.to_table());
    out.add("entropy.csv", s);
    Ok(out)
}

fn cat(p: CatParams, seed: u64) -> Result<Outputs, RunError> {
    if !(0.0..=1.0).contains(&p.p_live) {
        return Err(RunError::Config("[parameters] p_live must lie in [0, 1]".into()));
    }
    let dims = TransitionDims::default();
    let t = TransitionModel::polarization_split(dims)?;
    let sigma = DensityMatrix::pure(
        index_labels(2),
        &[
            num_complex::Complex64::new(p.p_live.sqrt(), 0.0),
            num_complex::Complex64::new((1.0 - p.p_live).sqrt(), 0.0),
        ],
    )?;
    let beta = DensityMatrix::diagonal(index_labels(2), &[0.5, 0.5])?;
    let rho = final_state_density(&t, &sigma, &beta)?;
    let grid = DirectionGrid::gauss_legendre(p.directions, dims.channels)?;
    let pm = measure_pointer(&rho, dims, &PointerMeasurement::polarization_blind(dims.classes), &grid)?;

    let outcome = measure_with_chain(&sigma, &EnvironmentModel::Uniform { n: p.n, c: p.c }, [1.0, 1.0])?;
    let verdict = cat_verdict(&outcome)?;
    let initial = sigma.get(0, 1).norm();
    if verdict.offdiagonal > initial * verdict.bound * (1.0 + 1e-9) + 1e-15 {
        return Err(RunError::Invariant("cat off-diagonal exceeds its decoherence bound".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diag_sigma = DensityMatrix::diagonal(index_labels(2), &[p.p_live, 1.0 - p.p_live])?;
    let mut prop = Table::new(["trial", "class_offblock_diagonal_inputs", "class_offblock_coherent_sigma"]);
    for k in 0..p.random_transitions {
        let tr = TransitionModel::random_split(dims, &mut rng)?;
        let zero = class_offblock(&final_state_matrix(&tr, &diag_sigma, &beta)?, dims);
        let coh = class_offblock(&final_state_matrix(&tr, &sigma, &beta)?, dims);
        prop.push(vec![k.into(), zero.into(), coh.into()]);
    }

    let mut s = Table::new(["quantity", "value"]);
    s.push(vec!["p_live".into(), verdict.p_live.into()]);
    s.push(vec!["p_dead".into(), verdict.p_dead.into()]);
    s.push(vec!["offdiagonal".into(), verdict.offdiagonal.into()]);
    s.push(vec!["bound".into(), verdict.bound.into()]);
    s.push(vec!["verdict".into(), verdict.describe().into()]);
    let mut out = Outputs::new();
    out.add("cat.csv", verdict.density.to_table());
    out.add("verdict.csv", s);
    out.add("pointer_scan.csv", pm.to_table(&grid));
    out.add("final_state.csv", rho.to_table());
    out.add("random_transitions.csv", prop);
    Ok(out)
}

fn oracle(p: OracleParams) -> Result<Outputs, RunError> {
    let reports = run_oracle_suite(&SuiteOptions {
        patterns: p.cases,
        tolerance_override: None,
    })?;
    let mut out = Outputs::new();
    out.add("oracle.csv", report_table(&reports));
    if let Some(bad) = reports.iter().find(|r| r.status == Status::Fail) {
        return Err(RunError::Invariant(format!(
            "oracle case {} deviates by {:e} (tolerance {:e})",
            bad.id, bad.abs_deviation, bad.tolerance
        )));
    }
    Ok(out)
}

/// Splits `--key value` pairs that are not runner flags out of `args`.
///
/// Returns `(remaining args, overrides)`. A key followed by another `--flag`
/// or by nothing is a config error.
pub fn split_overrides(
    args: &[String],
    known_flags: &[&str],
) -> Result<(Vec<String>, BTreeMap<String, String>), RunError> {
    let mut rest = Vec::new();
    let mut overrides = BTreeMap::new();
    let mut it = args.iter().peekable();
    while let Some(a) = it.next() {
        let is_flag = a.starts_with("--") && a.len() > 2;
        let name = a.split('=').next().unwrap_or(a);
        if !is_flag || known_flags.contains(&name) {
            rest.push(a.clone());
            if known_flags.contains(&name) && !a.contains('=') && name != "--help" && name != "--version" {
                if let Some(v) = it.next() {
                    rest.push(v.clone());
                }
            }
            continue;
        }
        let (key, value) = match a.split_once('=') {
            Some((k, v)) => (k.to_owned(), v.to_owned()),
            None => match it.peek() {
                Some(v) if !(v.starts_with("--") && v.parse::<f64>().is_err()) => (a.clone(), it.next().unwrap().clone()),
                _ => return Err(RunError::Config(format!("parameter {a} is missing a value"))),
            },
        };
        overrides.insert(key.trim_start_matches("--").to_owned(), value);
    }
    Ok((rest, overrides))
}
