use std::fmt;
use std::path::{Path, PathBuf};

use ringcav::hilbert::{make_lattice, LatticeSpec, RationalAngle};
use ringcav::meanfield::MeanFieldConfig;
use ringcav::quantum::IntegratorConfig;
use ringcav::steady::SteadyOptions;
use ringcav::sweep::SweepConfig;
use ringcav::PhysicalParams;
use serde::{Deserialize, Serialize};

/// Error in the configuration file, its overrides or its values.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    QuantumDynamics,
    MeanfieldDynamics,
    SteadySweep,
    Wigner,
    Compare,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::QuantumDynamics => "quantum-dynamics",
            Mode::MeanfieldDynamics => "meanfield-dynamics",
            Mode::SteadySweep => "steady-sweep",
            Mode::Wigner => "wigner",
            Mode::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalSection {
    pub eta: f64,
    pub u0: f64,
    pub delta_c: f64,
    pub kappa: f64,
    /// sin φ as `[numerator, denominator]`.
    pub sin_phi: RationalAngle,
}

impl PhysicalSection {
    pub fn params(&self) -> PhysicalParams {
        PhysicalParams {
            eta: self.eta,
            u0: self.u0,
            delta_c: self.delta_c,
            kappa: self.kappa,
            angle: self.sin_phi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeSection {
    pub n_max: usize,
    pub cut_plus: usize,
    pub cut_minus: usize,
}

impl Default for LatticeSection {
    fn default() -> Self {
        Self {
            n_max: 20,
            cut_plus: 7,
            cut_minus: 5,
        }
    }
}

impl LatticeSection {
    pub fn spec(&self, angle: RationalAngle) -> ringcav::Result<LatticeSpec> {
        make_lattice(angle, self.n_max, self.cut_plus, self.cut_minus)
    }
}

/// One pump angle of a sweep. Lattice fields left out are taken from
/// `[lattice]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepChain {
    pub sin_phi: RationalAngle,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut_plus: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut_minus: Option<usize>,
}

impl SweepChain {
    pub fn lattice(&self, base: &LatticeSection) -> LatticeSection {
        LatticeSection {
            n_max: self.n_max.unwrap_or(base.n_max),
            cut_plus: self.cut_plus.unwrap_or(base.cut_plus),
            cut_minus: self.cut_minus.unwrap_or(base.cut_minus),
        }
    }

    pub fn spec(&self, base: &LatticeSection) -> ringcav::Result<LatticeSpec> {
        self.lattice(base).spec(self.sin_phi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Pump angles, each swept as an independent warm-started chain.
    pub chains: Vec<SweepChain>,
    pub eta_min: f64,
    pub eta_max: f64,
    pub points: usize,
    pub wigner_points: usize,
    pub grid_points: usize,
    pub phases: (f64, f64),
    pub steady: SteadyOptions,
}

impl Default for SweepSection {
    fn default() -> Self {
        let d = SweepConfig::default();
        Self {
            chains: vec![
                SweepChain {
                    sin_phi: RationalAngle::perpendicular(),
                    n_max: None,
                    cut_plus: None,
                    cut_minus: None,
                },
                SweepChain {
                    sin_phi: RationalAngle::new(1, 2).expect("valid angle"),
                    n_max: None,
                    cut_plus: None,
                    cut_minus: None,
                },
            ],
            eta_min: d.eta_min,
            eta_max: d.eta_max,
            points: d.points,
            wigner_points: d.wigner_points,
            grid_points: d.grid_points,
            phases: d.phases,
            steady: d.steady,
        }
    }
}

impl SweepSection {
    pub fn config(&self) -> SweepConfig {
        SweepConfig {
            eta_min: self.eta_min,
            eta_max: self.eta_max,
            points: self.points,
            steady: self.steady,
            wigner_points: self.wigner_points,
            grid_points: self.grid_points,
            phases: self.phases,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WignerSection {
    pub points: usize,
    pub half_width: Option<f64>,
}

impl Default for WignerSection {
    fn default() -> Self {
        Self {
            points: 101,
            half_width: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksSection {
    /// Largest boundary population accepted before the run is reported as
    /// a truncation failure.
    pub boundary_limit: f64,
}

impl Default for ChecksSection {
    fn default() -> Self {
        Self { boundary_limit: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Also write the full final density matrix (large for big lattices).
    pub full_state: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub physical: PhysicalSection,
    #[serde(default)]
    pub lattice: LatticeSection,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub meanfield: MeanFieldConfig,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub wigner: WignerSection,
    #[serde(default)]
    pub checks: ChecksSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Sets `dotted.key = value` in a TOML table. The value is parsed as a TOML
/// literal, falling back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError(format!("override {assignment:?} is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError(format!("override key {key:?} is malformed")));
    }
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError(format!("override key {key:?}: {part:?} is not a table")))?;
    }
    node.insert(parts[parts.len() - 1].to_owned(), value);
    Ok(())
}

pub fn load(path: &Path, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    parse(&text, overrides)
}

pub fn parse(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| ConfigError(format!("invalid TOML: {e}")))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError(format!("invalid configuration: {e}")))
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if cond {
        Ok(())
    } else {
        Err(ConfigError(msg()))
    }
}

fn wrap<T>(r: ringcav::Result<T>) -> Result<T, ConfigError> {
    r.map_err(|e| ConfigError(e.to_string()))
}

impl RunConfig {
    /// Checks every value the given mode will use, before anything runs.
    pub fn validate(&self, mode: Mode) -> Result<(), ConfigError> {
        if let Some(m) = self.mode {
            check(m == mode, || {
                format!("configuration is for mode {}, invoked as {}", m.name(), mode.name())
            })?;
        }
        let params = self.physical.params();
        wrap(params.validate())?;
        check(self.checks.boundary_limit > 0.0, || "checks.boundary_limit must be positive".into())?;
        match mode {
            Mode::QuantumDynamics => {
                wrap(self.lattice.spec(params.angle))?;
                wrap(self.integrator.validate())?;
            }
            Mode::MeanfieldDynamics => wrap(self.meanfield.validate())?,
            Mode::Compare => {
                wrap(self.lattice.spec(params.angle))?;
                wrap(self.integrator.validate())?;
                wrap(self.compare_meanfield().validate())?;
            }
            Mode::SteadySweep => {
                let s = &self.sweep;
                check(!s.chains.is_empty(), || "sweep.chains is empty".into())?;
                check(s.points >= 1, || "sweep.points must be at least 1".into())?;
                check(s.eta_min.is_finite() && s.eta_max >= s.eta_min, || {
                    "sweep needs finite eta_min <= eta_max".into()
                })?;
                check(params.kappa > 0.0, || "steady states need kappa > 0".into())?;
                check(s.wigner_points >= 3 && s.wigner_points % 2 == 1, || {
                    "sweep.wigner_points must be odd and at least 3".into()
                })?;
                check(s.grid_points.is_power_of_two() && s.grid_points >= 4, || {
                    "sweep.grid_points must be a power of two".into()
                })?;
                for c in &s.chains {
                    wrap(c.spec(&self.lattice))?;
                }
            }
            Mode::Wigner => {
                wrap(self.lattice.spec(params.angle))?;
                check(params.kappa > 0.0, || "steady states need kappa > 0".into())?;
                check(self.wigner.points >= 3 && self.wigner.points % 2 == 1, || {
                    "wigner.points must be odd and at least 3".into()
                })?;
                if let Some(w) = self.wigner.half_width {
                    check(w > 0.0 && w.is_finite(), || "wigner.half_width must be positive".into())?;
                }
                wrap(self.meanfield.validate())?;
            }
        }
        Ok(())
    }

    /// Mean-field settings aligned with the quantum sampling grid.
    pub fn compare_meanfield(&self) -> MeanFieldConfig {
        MeanFieldConfig {
            t_final: self.integrator.t_final,
            record_interval: self.integrator.record_interval,
            ..self.meanfield
        }
    }
}
