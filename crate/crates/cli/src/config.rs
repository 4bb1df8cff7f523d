//! Run configuration: a TOML file with nested sections. All rates are
//! dimensionless in units of the cavity decay rate kappa; distances are in
//! units of the transition wavelength. The full grammar is documented in the
//! repository README and the bundled preset files double as examples.

use lattice_laser::geometry::{Geometry, GeometryError, LatticeFamily};
use lattice_laser::model::{DecayMode, ModelParams, PumpMode};
use lattice_laser::solvers::{SolverMethod, SolverOptions, StartState};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("[sweep] allows at most 2 axes, got {0}")]
    TooManyAxes(usize),
    #[error("unknown sweep axis '{0}' (expected pump_rate, gamma0, detuning, lattice_const, n_atoms, geometry_family, decay_mode or pump_mode)")]
    UnknownAxis(String),
    #[error("axis '{axis}' expects {expected} values, got '{got}'")]
    AxisValueType {
        axis: String,
        expected: &'static str,
        got: String,
    },
    #[error("unknown output '{0}' (expected n, inversion, g2, spectrum, linewidth or shift)")]
    UnknownOutput(String),
    #[error("unknown geometry tag '{0}' (expected chain<N>, triangle or square)")]
    BadGeometryTag(String),
    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Full 2^N-state atomic product space with geometry-resolved couplings.
    Full,
    /// Reduced symmetric spin-N/2 model (collective decay and pump).
    Collective,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "default_g")]
    pub g: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    pub gamma0: f64,
    pub pump_rate: f64,
    #[serde(default)]
    pub detuning: f64,
    #[serde(default = "default_decay_mode")]
    pub decay_mode: DecayMode,
    #[serde(default = "default_pump_mode")]
    pub pump_mode: PumpMode,
}

fn default_g() -> f64 {
    1.0
}
fn default_kappa() -> f64 {
    1.0
}
fn default_decay_mode() -> DecayMode {
    DecayMode::FullGeometry
}
fn default_pump_mode() -> PumpMode {
    PumpMode::Individual
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub family: LatticeFamily,
    pub n_atoms: usize,
    #[serde(default = "default_lattice_const")]
    pub lattice_const: f64,
    #[serde(default = "default_dipole_axis")]
    pub dipole_axis: [f64; 3],
    /// Explicit positions for `family = "custom"`.
    #[serde(default)]
    pub positions: Option<Vec<[f64; 3]>>,
}

fn default_lattice_const() -> f64 {
    0.58
}
fn default_dipole_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HilbertSection {
    pub fock_cutoff: usize,
    #[serde(default = "default_true")]
    pub auto_extend: bool,
    #[serde(default = "default_fock_cap")]
    pub max_fock_cutoff: usize,
}

fn default_true() -> bool {
    true
}
fn default_fock_cap() -> usize {
    30
}

impl Default for HilbertSection {
    fn default() -> Self {
        HilbertSection {
            fock_cutoff: 6,
            auto_extend: true,
            max_fock_cutoff: default_fock_cap(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_method")]
    pub method: SolverMethod2,
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default)]
    pub verify_uniqueness: bool,
    #[serde(default = "default_start")]
    pub start: StartTag,
}

// local mirror enums so the config layer owns its serde story
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod2 {
    DirectSparse,
    KrylovNullspace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartTag {
    MaximallyMixed,
    Ground,
}

fn default_method() -> SolverMethod2 {
    SolverMethod2::DirectSparse
}
fn default_residual_tol() -> f64 {
    1e-10
}
fn default_max_iterations() -> usize {
    200
}
fn default_rtol() -> f64 {
    1e-9
}
fn default_start() -> StartTag {
    StartTag::MaximallyMixed
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            method: default_method(),
            residual_tol: default_residual_tol(),
            max_iterations: default_max_iterations(),
            rtol: default_rtol(),
            verify_uniqueness: false,
            start: default_start(),
        }
    }
}

impl SolverSection {
    pub fn to_options(&self) -> SolverOptions {
        SolverOptions {
            method: match self.method {
                SolverMethod2::DirectSparse => SolverMethod::DirectSparse,
                SolverMethod2::KrylovNullspace => SolverMethod::KrylovNullspace,
            },
            residual_tol: self.residual_tol,
            max_iterations: self.max_iterations,
            rtol: self.rtol,
            start: match self.start {
                StartTag::MaximallyMixed => StartState::MaximallyMixed,
                StartTag::Ground => StartState::Ground,
            },
            verify_uniqueness: self.verify_uniqueness,
            ..SolverOptions::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedMode {
    /// Use the steady state; fall back to a one-photon seed for an empty
    /// field (the empty-cavity reference line).
    Auto,
    Steady,
    FockOne,
    Thermal,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    #[serde(default = "default_tau_step")]
    pub tau_step: f64,
    #[serde(default = "default_initial_span")]
    pub initial_span: f64,
    #[serde(default = "default_max_span")]
    pub max_span: f64,
    #[serde(default = "default_seed_mode")]
    pub seed_mode: SeedMode,
    #[serde(default = "default_nbar")]
    pub thermal_nbar: f64,
    #[serde(default)]
    pub cross_check: bool,
}

fn default_tau_step() -> f64 {
    0.05
}
fn default_initial_span() -> f64 {
    200.0
}
fn default_max_span() -> f64 {
    1600.0
}
fn default_seed_mode() -> SeedMode {
    SeedMode::Auto
}
fn default_nbar() -> f64 {
    0.5
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection {
            tau_step: default_tau_step(),
            initial_span: default_initial_span(),
            max_span: default_max_span(),
            seed_mode: default_seed_mode(),
            thermal_nbar: default_nbar(),
            cross_check: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValue {
    Number(f64),
    Tag(String),
}

impl std::fmt::Display for AxisValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AxisValue::Number(x) => write!(f, "{x}"),
            AxisValue::Tag(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub name: String,
    pub values: Vec<AxisValue>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub axes: Vec<SweepAxis>,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<String>,
}

fn default_outputs() -> Vec<String> {
    vec!["n".into(), "inversion".into(), "g2".into()]
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            axes: Vec::new(),
            outputs: default_outputs(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default)]
    pub write_spectra: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_model_kind")]
    pub model_kind: ModelKind,
    pub model: ModelSection,
    pub geometry: GeometrySection,
    #[serde(default)]
    pub hilbert: HilbertSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Free-form note echoed into outputs (presets document assumptions
    /// such as the coupling g here).
    #[serde(default)]
    pub note: Option<String>,
}

fn default_model_kind() -> ModelKind {
    ModelKind::Full
}

pub const OUTPUT_NAMES: [&str; 6] = ["n", "inversion", "g2", "spectrum", "linewidth", "shift"];
pub const AXIS_NAMES: [&str; 8] = [
    "pump_rate",
    "gamma0",
    "detuning",
    "lattice_const",
    "n_atoms",
    "geometry_family",
    "decay_mode",
    "pump_mode",
];

impl RunConfig {
    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::from_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.sweep.axes.len() > 2 {
            return Err(ConfigError::TooManyAxes(self.sweep.axes.len()));
        }
        for axis in &self.sweep.axes {
            if !AXIS_NAMES.contains(&axis.name.as_str()) {
                return Err(ConfigError::UnknownAxis(axis.name.clone()));
            }
            let needs_tag = matches!(
                axis.name.as_str(),
                "geometry_family" | "decay_mode" | "pump_mode"
            );
            for v in &axis.values {
                match (needs_tag, v) {
                    (true, AxisValue::Number(x)) => {
                        return Err(ConfigError::AxisValueType {
                            axis: axis.name.clone(),
                            expected: "string tags",
                            got: x.to_string(),
                        })
                    }
                    (false, AxisValue::Tag(s)) => {
                        return Err(ConfigError::AxisValueType {
                            axis: axis.name.clone(),
                            expected: "numbers",
                            got: s.clone(),
                        })
                    }
                    _ => {}
                }
            }
            if axis.values.is_empty() {
                return Err(ConfigError::Invalid(format!(
                    "axis '{}' has no values",
                    axis.name
                )));
            }
        }
        for out in &self.sweep.outputs {
            if !OUTPUT_NAMES.contains(&out.as_str()) {
                return Err(ConfigError::UnknownOutput(out.clone()));
            }
        }
        if !(self.model.kappa > 0.0) {
            return Err(ConfigError::Invalid("model.kappa must be > 0".into()));
        }
        if self.geometry.family == LatticeFamily::Custom && self.geometry.positions.is_none() {
            return Err(ConfigError::Invalid(
                "geometry.family = \"custom\" requires geometry.positions".into(),
            ));
        }
        if self.model_kind == ModelKind::Collective
            && self.model.decay_mode == DecayMode::FullGeometry
        {
            return Err(ConfigError::Invalid(
                "the collective model has no geometry-resolved decay; set model.decay_mode = \"fully_collective\"".into(),
            ));
        }
        Ok(())
    }

    /// Whether any requested output needs a spectrum computation.
    pub fn needs_spectrum(&self) -> bool {
        self.sweep
            .outputs
            .iter()
            .any(|o| matches!(o.as_str(), "spectrum" | "linewidth" | "shift"))
    }
}

/// One fully resolved sweep point.
#[derive(Clone, Debug, Serialize)]
pub struct PointSpec {
    pub model_kind: ModelKind,
    pub family: LatticeFamily,
    pub n_atoms: usize,
    pub lattice_const: f64,
    pub dipole_axis: [f64; 3],
    #[serde(skip)]
    pub positions: Option<Vec<[f64; 3]>>,
    pub g: f64,
    pub kappa: f64,
    pub gamma0: f64,
    pub pump_rate: f64,
    pub detuning: f64,
    pub decay_mode: DecayMode,
    pub pump_mode: PumpMode,
    pub fock_cutoff: usize,
}

pub fn parse_geometry_tag(tag: &str) -> Result<(LatticeFamily, usize), ConfigError> {
    match tag {
        "triangle" => Ok((LatticeFamily::Triangle, 3)),
        "square" => Ok((LatticeFamily::Square, 4)),
        _ => {
            if let Some(n) = tag.strip_prefix("chain") {
                let n: usize = n
                    .parse()
                    .map_err(|_| ConfigError::BadGeometryTag(tag.into()))?;
                Ok((LatticeFamily::Chain, n))
            } else {
                Err(ConfigError::BadGeometryTag(tag.into()))
            }
        }
    }
}

impl PointSpec {
    pub fn base(cfg: &RunConfig) -> Self {
        PointSpec {
            model_kind: cfg.model_kind,
            family: cfg.geometry.family,
            n_atoms: cfg.geometry.n_atoms,
            lattice_const: cfg.geometry.lattice_const,
            dipole_axis: cfg.geometry.dipole_axis,
            positions: cfg.geometry.positions.clone(),
            g: cfg.model.g,
            kappa: cfg.model.kappa,
            gamma0: cfg.model.gamma0,
            pump_rate: cfg.model.pump_rate,
            detuning: cfg.model.detuning,
            decay_mode: cfg.model.decay_mode,
            pump_mode: cfg.model.pump_mode,
            fock_cutoff: cfg.hilbert.fock_cutoff,
        }
    }

    pub fn apply_axis(&mut self, name: &str, value: &AxisValue) -> Result<(), ConfigError> {
        let num = |v: &AxisValue| -> Result<f64, ConfigError> {
            match v {
                AxisValue::Number(x) => Ok(*x),
                AxisValue::Tag(s) => Err(ConfigError::AxisValueType {
                    axis: name.to_string(),
                    expected: "numbers",
                    got: s.clone(),
                }),
            }
        };
        let tag = |v: &AxisValue| -> Result<String, ConfigError> {
            match v {
                AxisValue::Tag(s) => Ok(s.clone()),
                AxisValue::Number(x) => Err(ConfigError::AxisValueType {
                    axis: name.to_string(),
                    expected: "string tags",
                    got: x.to_string(),
                }),
            }
        };
        match name {
            "pump_rate" => self.pump_rate = num(value)?,
            "gamma0" => self.gamma0 = num(value)?,
            "detuning" => self.detuning = num(value)?,
            "lattice_const" => self.lattice_const = num(value)?,
            "n_atoms" => {
                let n = num(value)?;
                if n < 0.0 || n.fract() != 0.0 {
                    return Err(ConfigError::Invalid(format!(
                        "n_atoms axis value {n} is not a nonnegative integer"
                    )));
                }
                self.n_atoms = n as usize;
            }
            "geometry_family" => {
                let (family, n) = parse_geometry_tag(&tag(value)?)?;
                self.family = family;
                self.n_atoms = n;
                self.positions = None;
            }
            "decay_mode" => {
                self.decay_mode = match tag(value)?.as_str() {
                    "full_geometry" => DecayMode::FullGeometry,
                    "independent" => DecayMode::Independent,
                    "fully_collective" => DecayMode::FullyCollective,
                    other => {
                        return Err(ConfigError::AxisValueType {
                            axis: name.into(),
                            expected: "full_geometry | independent | fully_collective",
                            got: other.into(),
                        })
                    }
                }
            }
            "pump_mode" => {
                self.pump_mode = match tag(value)?.as_str() {
                    "individual" => PumpMode::Individual,
                    "collective" => PumpMode::Collective,
                    other => {
                        return Err(ConfigError::AxisValueType {
                            axis: name.into(),
                            expected: "individual | collective",
                            got: other.into(),
                        })
                    }
                }
            }
            other => return Err(ConfigError::UnknownAxis(other.into())),
        }
        Ok(())
    }

    pub fn build_geometry(&self) -> Result<Geometry, ConfigError> {
        if self.n_atoms == 0 {
            return Ok(Geometry::empty());
        }
        if let Some(pos) = &self.positions {
            return Ok(Geometry::custom(pos.clone(), self.dipole_axis)?);
        }
        Ok(Geometry::build(
            self.family,
            self.n_atoms,
            self.lattice_const,
            self.dipole_axis,
        )?)
    }

    pub fn model_params(&self) -> Result<ModelParams, ConfigError> {
        Ok(ModelParams {
            g: self.g,
            kappa: self.kappa,
            gamma0: self.gamma0,
            pump_rate: self.pump_rate,
            detuning: self.detuning,
            decay_mode: self.decay_mode,
            pump_mode: self.pump_mode,
            geometry: self.build_geometry()?,
        })
    }
}
