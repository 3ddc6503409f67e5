//! Config schema and validation. All physical quantities carry explicit units
//! in their field names (g_khz, t_max_us); unknown keys are rejected.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::model::{GammaSpec, HamiltonianSpec};
use crate::{Error, Result};

pub const TWO_PI: f64 = std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunCommand {
    Bands,
    EpScan,
    EpCurve,
    Rates,
    SolvePol,
    Simulate,
    Fit,
    Pipeline,
}

/// Hamiltonian parameters as they appear in config files. `g_khz` is
/// interpreted as cyclic kHz unless `angular` is set, in which case it is
/// already an angular rate in units of 10^3 rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    #[serde(default = "default_g_khz")]
    pub g_khz: f64,
    #[serde(default)]
    pub angular: bool,
    #[serde(default = "default_j")]
    pub j: [f64; 3],
    /// Pattern-form dissipation scale (gamma * (1, 1/3, -1/3, -1)).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_scale: Option<f64>,
    /// Explicit four-component dissipation vector; mutually exclusive with
    /// gamma_scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_g_khz() -> f64 {
    2.3
}
fn default_j() -> [f64; 3] {
    [1.0, 1.0, 1.0]
}
fn default_alpha() -> f64 {
    1.0
}

impl Default for SpecConfig {
    fn default() -> Self {
        Self {
            g_khz: default_g_khz(),
            angular: false,
            j: default_j(),
            gamma_scale: None,
            gamma: None,
            alpha: default_alpha(),
        }
    }
}

impl SpecConfig {
    pub fn validate_into(&self, path: &str, errors: &mut Vec<String>) {
        if !(self.g_khz > 0.0) || !self.g_khz.is_finite() {
            errors.push(format!(
                "{path}.g_khz: found {}, expected a finite value > 0",
                self.g_khz
            ));
        }
        if let Some(gamma) = &self.gamma {
            if gamma.len() != 4 {
                errors.push(format!(
                    "{path}.gamma: found length {}, expected exactly 4 components",
                    gamma.len()
                ));
            }
            if self.gamma_scale.is_some() {
                errors.push(format!(
                    "{path}: gamma and gamma_scale are mutually exclusive; set only one"
                ));
            }
        }
        for (k, x) in self.j.iter().enumerate() {
            if !x.is_finite() {
                errors.push(format!("{path}.j[{k}]: found {x}, expected finite"));
            }
        }
    }

    pub fn to_spec(&self) -> Result<HamiltonianSpec> {
        let g = if self.angular {
            self.g_khz * 1e3
        } else {
            TWO_PI * self.g_khz * 1e3
        };
        let gamma = match (&self.gamma, self.gamma_scale) {
            (Some(v), None) => {
                if v.len() != 4 {
                    return Err(Error::Config(format!(
                        "spec.gamma: found length {}, expected 4",
                        v.len()
                    )));
                }
                GammaSpec::Explicit([v[0], v[1], v[2], v[3]])
            }
            (None, scale) => GammaSpec::Pattern {
                scale: scale.unwrap_or(0.0),
            },
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "spec: gamma and gamma_scale are mutually exclusive".into(),
                ))
            }
        };
        let spec = HamiltonianSpec {
            g,
            j: self.j,
            gamma,
            alpha: self.alpha,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridConfig {
    pub fn validate_into(&self, path: &str, errors: &mut Vec<String>) {
        if !(self.step != 0.0 && self.step.is_finite()) {
            errors.push(format!(
                "{path}.step: found {}, expected a finite nonzero step",
                self.step
            ));
        }
        if (self.stop - self.start) * self.step <= 0.0 {
            errors.push(format!(
                "{path}: start {} / stop {} unreachable with step {}",
                self.start, self.stop, self.step
            ));
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step).round() as i64;
        let n = n.max(1);
        (0..=n)
            .map(|k| self.start + self.step * k as f64)
            .filter(|x| {
                if self.step > 0.0 {
                    *x <= self.stop + 1e-12 * self.step.abs()
                } else {
                    *x >= self.stop - 1e-12 * self.step.abs()
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandsConfig {
    #[serde(default)]
    pub spec: SpecConfig,
    #[serde(default = "default_axis")]
    pub axis: String,
    pub grid: GridConfig,
}

fn default_axis() -> String {
    "gamma".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpScanConfig {
    #[serde(default)]
    pub spec: SpecConfig,
    #[serde(default = "default_axis")]
    pub axis: String,
    pub interval: [f64; 2],
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpCurveConfig {
    pub branch: String,
    #[serde(default = "default_gamma_fixed")]
    pub gamma_fixed: f64,
    pub j1_grid: GridConfig,
}

fn default_gamma_fixed() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    /// (sigma+, sigma-, pi), nonnegative, summing to 1.
    pub eps: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolvePolConfig {
    pub target: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default)]
    pub spec: SpecConfig,
    #[serde(default = "default_t_max_us")]
    pub t_max_us: f64,
    #[serde(default = "default_n_points")]
    pub n_points: u32,
    #[serde(default = "default_shots")]
    pub shots: i64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub detection_error: f64,
}

fn default_t_max_us() -> f64 {
    600.0
}
fn default_n_points() -> u32 {
    20
}
fn default_shots() -> i64 {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Dataset CSV path (as written by `simulate`).
    pub input: String,
    #[serde(default)]
    pub spec: SpecConfig,
    #[serde(default = "default_bounds")]
    pub bounds: [f64; 2],
    #[serde(default = "default_true")]
    pub weighted: bool,
    #[serde(default = "default_true")]
    pub bootstrap: bool,
    #[serde(default = "default_resamples")]
    pub n_resamples: u32,
    #[serde(default = "default_ci_level")]
    pub ci_level: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_bounds() -> [f64; 2] {
    [0.0, 3.0]
}
fn default_true() -> bool {
    true
}
fn default_resamples() -> u32 {
    200
}
fn default_ci_level() -> f64 {
    0.68
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub spec: SpecConfig,
    /// True dissipation scale used for synthesis.
    pub gamma_true: f64,
    #[serde(default = "default_t_max_us")]
    pub t_max_us: f64,
    #[serde(default = "default_n_points")]
    pub n_points: u32,
    #[serde(default = "default_shots")]
    pub shots: i64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub detection_error: f64,
    #[serde(default = "default_bounds")]
    pub bounds: [f64; 2],
    #[serde(default = "default_true")]
    pub weighted: bool,
    #[serde(default = "default_resamples")]
    pub n_resamples: u32,
    #[serde(default = "default_ci_level")]
    pub ci_level: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunConfig {
    Bands(BandsConfig),
    EpScan(EpScanConfig),
    EpCurve(EpCurveConfig),
    Rates(RatesConfig),
    SolvePol(SolvePolConfig),
    Simulate(SimulateConfig),
    Fit(FitConfig),
    Pipeline(PipelineConfig),
}

impl RunConfig {
    pub fn command(&self) -> RunCommand {
        match self {
            RunConfig::Bands(_) => RunCommand::Bands,
            RunConfig::EpScan(_) => RunCommand::EpScan,
            RunConfig::EpCurve(_) => RunCommand::EpCurve,
            RunConfig::Rates(_) => RunCommand::Rates,
            RunConfig::SolvePol(_) => RunCommand::SolvePol,
            RunConfig::Simulate(_) => RunCommand::Simulate,
            RunConfig::Fit(_) => RunCommand::Fit,
            RunConfig::Pipeline(_) => RunCommand::Pipeline,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            RunConfig::Bands(c) => serde_json::to_value(c),
            RunConfig::EpScan(c) => serde_json::to_value(c),
            RunConfig::EpCurve(c) => serde_json::to_value(c),
            RunConfig::Rates(c) => serde_json::to_value(c),
            RunConfig::SolvePol(c) => serde_json::to_value(c),
            RunConfig::Simulate(c) => serde_json::to_value(c),
            RunConfig::Fit(c) => serde_json::to_value(c),
            RunConfig::Pipeline(c) => serde_json::to_value(c),
        }
        .expect("config serialization")
    }
}

/// Parse and fully validate a raw config for the given command. On failure
/// the error carries the complete list of problems, never a partial config.
pub fn validate_config(command: RunCommand, raw: &Value) -> Result<RunConfig> {
    let mut errors: Vec<String> = Vec::new();
    let parsed: Option<RunConfig> = match command {
        RunCommand::Bands => from_value::<BandsConfig>(raw, &mut errors).map(|c| {
            c.spec.validate_into("spec", &mut errors);
            c.grid.validate_into("grid", &mut errors);
            if crate::spectra::Axis::parse(&c.axis).is_err() {
                errors.push(format!(
                    "axis: found {:?}, expected one of gamma, j, j1, j2, j3, g",
                    c.axis
                ));
            }
            RunConfig::Bands(c)
        }),
        RunCommand::EpScan => from_value::<EpScanConfig>(raw, &mut errors).map(|c| {
            c.spec.validate_into("spec", &mut errors);
            if crate::spectra::Axis::parse(&c.axis).is_err() {
                errors.push(format!("axis: found {:?}, expected a known axis", c.axis));
            }
            if !(c.interval[0] < c.interval[1]) {
                errors.push(format!(
                    "interval: found [{}, {}], expected lo < hi",
                    c.interval[0], c.interval[1]
                ));
            }
            if !(c.tol > 0.0) {
                errors.push(format!("tol: found {}, expected > 0", c.tol));
            }
            RunConfig::EpScan(c)
        }),
        RunCommand::EpCurve => from_value::<EpCurveConfig>(raw, &mut errors).map(|c| {
            if crate::eplocate::Ep2Branch::parse(&c.branch).is_err() {
                errors.push(format!("branch: found {:?}, expected q0 or p24q", c.branch));
            }
            if !(c.gamma_fixed > 0.0) {
                errors.push(format!("gamma_fixed: found {}, expected > 0", c.gamma_fixed));
            }
            c.j1_grid.validate_into("j1_grid", &mut errors);
            RunConfig::EpCurve(c)
        }),
        RunCommand::Rates => from_value::<RatesConfig>(raw, &mut errors).map(|c| {
            let sum: f64 = c.eps.iter().sum();
            if c.eps.iter().any(|x| *x < 0.0) || (sum - 1.0).abs() > 1e-9 {
                errors.push(format!(
                    "eps: found {:?}, expected nonnegative components summing to 1",
                    c.eps
                ));
            }
            RunConfig::Rates(c)
        }),
        RunCommand::SolvePol => from_value::<SolvePolConfig>(raw, &mut errors).map(|c| {
            if c.target.iter().any(|x| *x < 0.0 || !x.is_finite()) {
                errors.push(format!(
                    "target: found {:?}, expected finite nonnegative rates",
                    c.target
                ));
            }
            RunConfig::SolvePol(c)
        }),
        RunCommand::Simulate => from_value::<SimulateConfig>(raw, &mut errors).map(|c| {
            c.spec.validate_into("spec", &mut errors);
            validate_sampling(c.shots, c.n_points, c.t_max_us, c.detection_error, &mut errors);
            RunConfig::Simulate(c)
        }),
        RunCommand::Fit => from_value::<FitConfig>(raw, &mut errors).map(|c| {
            c.spec.validate_into("spec", &mut errors);
            if !(c.bounds[0] < c.bounds[1]) {
                errors.push(format!(
                    "bounds: found [{}, {}], expected lo < hi",
                    c.bounds[0], c.bounds[1]
                ));
            }
            if !(0.0 < c.ci_level && c.ci_level < 1.0) {
                errors.push(format!("ci_level: found {}, expected in (0, 1)", c.ci_level));
            }
            RunConfig::Fit(c)
        }),
        RunCommand::Pipeline => from_value::<PipelineConfig>(raw, &mut errors).map(|c| {
            c.spec.validate_into("spec", &mut errors);
            validate_sampling(c.shots, c.n_points, c.t_max_us, c.detection_error, &mut errors);
            if !(c.bounds[0] < c.bounds[1]) {
                errors.push(format!(
                    "bounds: found [{}, {}], expected lo < hi",
                    c.bounds[0], c.bounds[1]
                ));
            }
            RunConfig::Pipeline(c)
        }),
    };
    match (parsed, errors.is_empty()) {
        (Some(config), true) => Ok(config),
        (_, _) => Err(Error::Config(errors.join("; "))),
    }
}

fn validate_sampling(
    shots: i64,
    n_points: u32,
    t_max_us: f64,
    detection_error: f64,
    errors: &mut Vec<String>,
) {
    if shots < 1 {
        errors.push(format!("shots: found {shots}, expected >= 1"));
    }
    if n_points < 3 {
        errors.push(format!("n_points: found {n_points}, expected >= 3"));
    }
    if !(t_max_us > 0.0) {
        errors.push(format!("t_max_us: found {t_max_us}, expected > 0"));
    }
    if !(0.0..=1.0).contains(&detection_error) {
        errors.push(format!(
            "detection_error: found {detection_error}, expected in [0, 1]"
        ));
    }
}

fn from_value<T: serde::de::DeserializeOwned>(
    raw: &Value,
    errors: &mut Vec<String>,
) -> Option<T> {
    match serde_json::from_value(raw.clone()) {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push(e.to_string());
            None
        }
    }
}

/// Parse one `--set key=value` override into (dotted path, JSON value).
pub fn parse_set_override(s: &str) -> Result<(String, Value)> {
    let (key, value) = s.split_once('=').ok_or_else(|| {
        Error::Config(format!("--set expects key=value, got {s:?}"))
    })?;
    let parsed = serde_json::from_str(value).unwrap_or(Value::String(value.to_string()));
    Ok((key.to_string(), parsed))
}

/// Set a dotted path inside a JSON object, creating intermediate objects.
pub fn merge_value(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (k, part) in parts.iter().enumerate() {
        if !node.is_object() && !node.is_array() {
            *node = Value::Object(Default::default());
        }
        let last = k == parts.len() - 1;
        if node.is_array() {
            let index = part.parse::<usize>().map_err(|_| {
                Error::Config(format!("--set path {path}: {part:?} is not an array index"))
            })?;
            let arr = node.as_array_mut().unwrap();
            if index >= arr.len() {
                return Err(Error::Config(format!(
                    "--set path {path}: index {index} out of bounds"
                )));
            }
            if last {
                arr[index] = value;
                return Ok(());
            }
            node = &mut arr[index];
            continue;
        }
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("--set path {path}: not an object")))?;
        if last {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert(Value::Object(Default::default()));
    }
    Ok(())
}

/// Replication presets: a full base config for the named scenario.
pub fn preset(name: &str) -> Result<(RunCommand, Value)> {
    match name {
        "fig1-bands" => Ok((
            RunCommand::Bands,
            serde_json::json!({
                "spec": {"g_khz": 2.3, "j": [1.0, 1.0, 1.0], "gamma_scale": 0.0, "alpha": 0.0},
                "axis": "gamma",
                "grid": {"start": 0.0, "stop": 2.6, "step": 0.01}
            }),
        )),
        "fig3-pipeline" => Ok((
            RunCommand::Pipeline,
            serde_json::json!({
                "spec": {"g_khz": 2.3, "j": [1.0, 1.0, 1.0], "alpha": 1.0},
                "gamma_true": 1.0,
                "t_max_us": 600.0,
                "n_points": 20,
                "shots": 500,
                "seed": 1,
                "n_resamples": 200,
                "ci_level": 0.68
            }),
        )),
        "fig4-coalescence" => Ok((
            RunCommand::EpScan,
            serde_json::json!({
                "spec": {"g_khz": 2.3, "j": [0.59, 0.68, 0.59], "gamma_scale": 0.0, "alpha": 0.0},
                "axis": "gamma",
                "interval": [0.1, 1.2],
                "tol": 1e-6
            }),
        )),
        other => Err(Error::Config(format!(
            "unknown preset {other:?}; expected fig1-bands, fig3-pipeline or fig4-coalescence"
        ))),
    }
}
