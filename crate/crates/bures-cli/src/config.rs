//! One JSON configuration schema shared by every subcommand, selected by a
//! `task` discriminator, plus the conversions into library inputs. Matrices
//! serialize as row-major arrays of `dim²` reals; univariate atoms are either
//! synthesized from named families or ingested from CSV columns.

use std::fs;
use std::path::{Path, PathBuf};

use bures::population::DiscretePopulation;
use bures::spd::CovMatrix;
use bures::univariate::{QuantileFunction, UnivariatePopulation};
use bures::{Cov64, Population64, Quantile64, Tangent64, UvPopulation64};
use serde::Deserialize;
use thiserror::Error;

/// Anything wrong with the invocation before numerics start: unreadable or
/// unparsable config, schema violations, shape mismatches, invalid inputs.
/// Maps to exit code 2.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Validate,
    Barycenter,
    Rate,
    Grad,
    Tilt,
    Prgd,
    Profile,
    Simulate,
    UvBarycenter,
    UvRate,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Validate => "validate",
            Task::Barycenter => "barycenter",
            Task::Rate => "rate",
            Task::Grad => "grad",
            Task::Tilt => "tilt",
            Task::Prgd => "prgd",
            Task::Profile => "profile",
            Task::Simulate => "simulate",
            Task::UvBarycenter => "uv-barycenter",
            Task::UvRate => "uv-rate",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    pub dim: usize,
    /// Row-major `dim × dim` matrices.
    pub atoms: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    /// Row-major ball center.
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    pub r: f64,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
}

/// Univariate atom: a named quantile family, inline values, or a CSV column
/// (path relative to the config file).
#[derive(Debug, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum AtomSpec {
    Gaussian { sigma: f64 },
    PointMass { c: f64 },
    Values { values: Vec<f64> },
    Csv { path: String, column: usize },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnivariateSpec {
    pub grid_size: usize,
    pub atoms: Vec<AtomSpec>,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub target: Option<AtomSpec>,
}

/// Solver knobs; every field is overridable by the equally named flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub cap: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub task: Task,
    #[serde(default)]
    pub population: Option<PopulationSpec>,
    /// Row-major anchor matrix for `rate`, `grad`, `tilt`.
    #[serde(default)]
    pub anchor: Option<Vec<f64>>,
    /// Row-major symmetric tilt matrix for `tilt`.
    #[serde(default)]
    pub tilt: Option<Vec<f64>>,
    #[serde(default)]
    pub event: Option<EventSpec>,
    /// Row-major PRGD starting point; defaults to the event center.
    #[serde(default)]
    pub init: Option<Vec<f64>>,
    /// Strictly increasing nonnegative radii for `profile`.
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
    #[serde(default)]
    pub simulate: Option<SimulateSpec>,
    #[serde(default)]
    pub univariate: Option<UnivariateSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
}

/// Parsed config plus the raw bytes (hashed into the manifest) and the
/// directory CSV atom paths resolve against.
pub struct LoadedConfig {
    pub config: Config,
    pub raw: Vec<u8>,
    pub dir: PathBuf,
}

pub fn load(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let raw = fs::read(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    let config: Config = serde_json::from_slice(&raw)
        .map_err(|e| ConfigError(format!("cannot parse config {}: {e}", path.display())))?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    Ok(LoadedConfig { config, raw, dir })
}

impl Config {
    pub fn population_spec(&self) -> Result<&PopulationSpec, ConfigError> {
        match &self.population {
            Some(p) => Ok(p),
            None => bad(format!("task {} requires a `population` section", self.task.name())),
        }
    }

    pub fn event_spec(&self) -> Result<&EventSpec, ConfigError> {
        match &self.event {
            Some(e) => Ok(e),
            None => bad(format!("task {} requires an `event` section", self.task.name())),
        }
    }

    pub fn univariate_spec(&self) -> Result<&UnivariateSpec, ConfigError> {
        match &self.univariate {
            Some(u) => Ok(u),
            None => bad(format!("task {} requires a `univariate` section", self.task.name())),
        }
    }
}

pub fn build_matrix(dim: usize, data: &[f64], what: &str) -> Result<Cov64, ConfigError> {
    if data.len() != dim * dim {
        return bad(format!("{what}: expected {} row-major entries, got {}", dim * dim, data.len()));
    }
    CovMatrix::from_row_major(dim, data).map_err(|e| ConfigError(format!("{what}: {e}")))
}

pub fn build_tangent(dim: usize, data: &[f64], what: &str) -> Result<Tangent64, ConfigError> {
    if data.len() != dim * dim {
        return bad(format!("{what}: expected {} row-major entries, got {}", dim * dim, data.len()));
    }
    let mut m = bures::linalg::Mat::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            m[(i, j)] = data[i * dim + j];
        }
    }
    Tangent64::new(m).map_err(|e| ConfigError(format!("{what}: {e}")))
}

pub fn build_population(spec: &PopulationSpec) -> Result<Population64, ConfigError> {
    let mut atoms = Vec::with_capacity(spec.atoms.len());
    for (i, a) in spec.atoms.iter().enumerate() {
        atoms.push(build_matrix(spec.dim, a, &format!("population atom {i}"))?);
    }
    DiscretePopulation::new(atoms, spec.weights.clone())
        .map_err(|e| ConfigError(format!("population: {e}")))
}

/// Reads one column of a CSV file as quantile values. A non-numeric first
/// record is treated as a header row; anything non-numeric later is an error.
fn read_csv_column(path: &Path, column: usize) -> Result<Vec<f64>, ConfigError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let field = match record.get(column) {
            Some(f) => f.trim(),
            None => {
                return bad(format!(
                    "{}: row {row} has no column {column}",
                    path.display()
                ))
            }
        };
        match field.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if row == 0 => continue, // header row
            Err(_) => {
                return bad(format!(
                    "{}: row {row}, column {column}: cannot parse {field:?} as a real",
                    path.display()
                ))
            }
        }
    }
    Ok(values)
}

pub fn build_quantile(
    spec: &AtomSpec,
    grid_size: usize,
    base: &Path,
    what: &str,
) -> Result<Quantile64, ConfigError> {
    match spec {
        AtomSpec::Gaussian { sigma } => {
            if !(*sigma > 0.0) {
                return bad(format!("{what}: gaussian scale must be positive, got {sigma}"));
            }
            Ok(QuantileFunction::gaussian_scale(grid_size, *sigma))
        }
        AtomSpec::PointMass { c } => Ok(QuantileFunction::constant(grid_size, *c)),
        AtomSpec::Values { values } => {
            if values.len() != grid_size {
                return bad(format!(
                    "{what}: expected {grid_size} values, got {}",
                    values.len()
                ));
            }
            QuantileFunction::new(values.clone()).map_err(|e| ConfigError(format!("{what}: {e}")))
        }
        AtomSpec::Csv { path, column } => {
            let resolved = base.join(path);
            let values = read_csv_column(&resolved, *column)?;
            if values.len() != grid_size {
                return bad(format!(
                    "{what}: {} has {} values in column {column}, expected {grid_size}",
                    resolved.display(),
                    values.len()
                ));
            }
            QuantileFunction::new(values).map_err(|e| ConfigError(format!("{what}: {e}")))
        }
    }
}

pub fn build_uv_population(
    spec: &UnivariateSpec,
    base: &Path,
) -> Result<UvPopulation64, ConfigError> {
    if spec.grid_size < 2 {
        return bad(format!("univariate grid_size must be at least 2, got {}", spec.grid_size));
    }
    let mut atoms = Vec::with_capacity(spec.atoms.len());
    for (i, a) in spec.atoms.iter().enumerate() {
        atoms.push(build_quantile(a, spec.grid_size, base, &format!("univariate atom {i}"))?);
    }
    UnivariatePopulation::new(atoms, spec.weights.clone())
        .map_err(|e| ConfigError(format!("univariate population: {e}")))
}

/// Radii for `profile`: nonnegative, finite, strictly increasing.
pub fn checked_radii(config: &Config) -> Result<Vec<f64>, ConfigError> {
    let radii = match &config.radii {
        Some(r) if !r.is_empty() => r.clone(),
        _ => return bad("task profile requires a nonempty `radii` list"),
    };
    for (i, &r) in radii.iter().enumerate() {
        if !r.is_finite() || r < 0.0 || (i > 0 && radii[i - 1] >= r) {
            return bad(format!("radii must be nonnegative, finite, strictly increasing (index {i})"));
        }
    }
    Ok(radii)
}
