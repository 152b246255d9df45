use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use ccl_core::error::Error;
use ccl_core::space::SymmetricSpace;
use ccl_core::surface::{ball_volume, GridSpec, SurfaceSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Core(#[from] Error),
    #[error("config file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("unknown tolerance key `{0}`; expected <check>.<name>")]
    Tolerance(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    HessianOracle,
    HessianBounds,
    Lipschitz,
    GaussConsistency,
    Contact,
    Jacobian,
    TotalCurvature,
    Willmore,
    Isoperimetric,
    DetAudit,
    SqrtAudit,
}

impl CheckName {
    pub const ALL: [CheckName; 11] = [
        CheckName::HessianOracle,
        CheckName::HessianBounds,
        CheckName::Lipschitz,
        CheckName::GaussConsistency,
        CheckName::Contact,
        CheckName::Jacobian,
        CheckName::TotalCurvature,
        CheckName::Willmore,
        CheckName::Isoperimetric,
        CheckName::DetAudit,
        CheckName::SqrtAudit,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::HessianOracle => "hessian-oracle",
            CheckName::HessianBounds => "hessian-bounds",
            CheckName::Lipschitz => "lipschitz",
            CheckName::GaussConsistency => "gauss-consistency",
            CheckName::Contact => "contact",
            CheckName::Jacobian => "jacobian",
            CheckName::TotalCurvature => "total-curvature",
            CheckName::Willmore => "willmore",
            CheckName::Isoperimetric => "isoperimetric",
            CheckName::DetAudit => "det-audit",
            CheckName::SqrtAudit => "sqrt-audit",
        }
    }

    /// Whether the check runs on the configured hypersurface.
    pub fn needs_surface(self) -> bool {
        matches!(
            self,
            CheckName::GaussConsistency | CheckName::Contact | CheckName::Jacobian | CheckName::TotalCurvature | CheckName::Willmore
        )
    }

    /// Whether the check consumes the direction sweep.
    pub fn needs_sweep(self) -> bool {
        matches!(self, CheckName::Contact | CheckName::Jacobian | CheckName::TotalCurvature)
    }

    pub fn default_samples(self) -> usize {
        match self {
            CheckName::HessianOracle => 50,
            CheckName::Lipschitz => 500,
            _ => 1000,
        }
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        CheckName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Parse { token: s.to_string(), message: "unknown check".into() })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_DIRECTIONS: usize = 500;
pub const DEFAULT_SURFACE: &str = "geodesic-sphere:r=1";

/// One suite run. Unset optional fields take the defaults documented in
/// `docs/config.md`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub space: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    #[serde(default)]
    pub checks: Vec<CheckName>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Overrides the per-check sample counts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<usize>,
    /// Matrix size for the algebraic audits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit_dim: Option<usize>,
    /// `"<check>.<name>" = value`; `name` is `margin` or a side condition.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl SuiteConfig {
    pub fn new(space: &str) -> Self {
        SuiteConfig {
            space: space.to_string(),
            surface: None,
            grid: None,
            checks: Vec::new(),
            seed: DEFAULT_SEED,
            samples: None,
            directions: None,
            audit_dim: None,
            tolerances: BTreeMap::new(),
            output: None,
            format: Format::Json,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    pub fn space_spec(&self) -> Result<SymmetricSpace, Error> {
        SymmetricSpace::parse(&self.space)
    }

    pub fn surface_spec(&self) -> Result<SurfaceSpec, Error> {
        self.surface.as_deref().unwrap_or(DEFAULT_SURFACE).parse()
    }

    /// The configured grid, or `64x128` for surfaces of dimension 2 and
    /// `12^n` above.
    pub fn grid_spec(&self, space: &SymmetricSpace) -> Result<GridSpec, Error> {
        match &self.grid {
            Some(g) => g.parse(),
            None => match space.dim() - 1 {
                2 => Ok(GridSpec::LatLon { lat: 64, lon: 128 }),
                n => Ok(GridSpec::Cube { k: 12, n }),
            },
        }
    }

    /// Requested checks, or every check that applies to the space.
    pub fn resolved_checks(&self) -> Result<Vec<CheckName>, Error> {
        if !self.checks.is_empty() {
            return Ok(self.checks.clone());
        }
        let space = self.space_spec()?;
        let volume = ball_volume(&space, &space.base_point(), 1.0).is_ok();
        Ok(CheckName::ALL.into_iter().filter(|c| *c != CheckName::Isoperimetric || volume).collect())
    }

    pub fn samples_for(&self, check: CheckName) -> usize {
        self.samples.unwrap_or(check.default_samples())
    }

    pub fn directions(&self) -> usize {
        self.directions.unwrap_or(DEFAULT_DIRECTIONS)
    }

    /// Parses every spec and rejects combinations no check can run on.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let space = self.space_spec()?;
        let checks = self.resolved_checks()?;
        let surface = self.surface_spec()?;
        surface.validate()?;
        let grid = self.grid_spec(&space)?;
        let uses_surface = checks.iter().any(|c| c.needs_surface() || *c == CheckName::Isoperimetric);
        if uses_surface && space.dim() < 3 {
            return Err(Error::Config(format!("hypersurface checks need an ambient dimension of at least 3, got {}", space.dim())).into());
        }
        if uses_surface && grid.sphere_dim() + 1 != space.dim() {
            return Err(Error::Config(format!("grid {grid} parametrizes a {}-sphere; {} needs a {}-sphere", grid.sphere_dim(), self.space, space.dim() - 1)).into());
        }
        if checks.contains(&CheckName::Isoperimetric) {
            if !matches!(surface, SurfaceSpec::GeodesicSphere { .. }) {
                return Err(Error::Config("isoperimetric check needs a geodesic-sphere surface".into()).into());
            }
            if ball_volume(&space, &space.base_point(), 1.0).is_err() {
                return Err(Error::Config(format!("isoperimetric check needs Euclidean and hyperbolic factors only, got {}", self.space)).into());
            }
        }
        for key in self.tolerances.keys() {
            let ok = key.split_once('.').is_some_and(|(c, n)| !n.is_empty() && c.parse::<CheckName>().is_ok());
            if !ok {
                return Err(ConfigError::Tolerance(key.clone()));
            }
        }
        Ok(())
    }

    /// Tolerance overrides for one check, keyed by name within the report.
    pub fn overrides_for(&self, check: CheckName) -> BTreeMap<String, f64> {
        self.tolerances
            .iter()
            .filter_map(|(k, v)| {
                let (c, n) = k.split_once('.')?;
                (c == check.as_str()).then(|| (n.to_string(), *v))
            })
            .collect()
    }
}
