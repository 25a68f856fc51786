//! Experiment configuration files.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    NahmRoundtrip,
    KnClassify,
    DeformCorrespond,
    TaubnutMetric,
    ToricDemo,
    QuiverDemo,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::NahmRoundtrip => "nahm-roundtrip",
            Experiment::KnClassify => "kn-classify",
            Experiment::DeformCorrespond => "deform-correspond",
            Experiment::TaubnutMetric => "taubnut-metric",
            Experiment::ToricDemo => "toric-demo",
            Experiment::QuiverDemo => "quiver-demo",
        }
    }

    fn checks(self) -> &'static [Check] {
        match self {
            Experiment::NahmRoundtrip => &[Check::NuConsistency, Check::GaugeInvariance, Check::EnergyCalibration],
            Experiment::KnClassify => &[Check::Convergence, Check::Scaling],
            Experiment::DeformCorrespond => &[Check::StabilityTransfer, Check::FormTransfer],
            Experiment::TaubnutMetric => &[Check::Metric],
            Experiment::ToricDemo | Experiment::QuiverDemo => &[Check::Transfer],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    NuConsistency,
    GaugeInvariance,
    EnergyCalibration,
    Convergence,
    Scaling,
    StabilityTransfer,
    FormTransfer,
    Metric,
    Transfer,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::NuConsistency => "nu-consistency",
            Check::GaugeInvariance => "gauge-invariance",
            Check::EnergyCalibration => "energy-calibration",
            Check::Convergence => "convergence",
            Check::Scaling => "scaling",
            Check::StabilityTransfer => "stability-transfer",
            Check::FormTransfer => "form-transfer",
            Check::Metric => "metric",
            Check::Transfer => "transfer",
        }
    }
}

/// Structure group of the sampled Nahm data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupName {
    Su2,
    U2,
}

impl GroupName {
    pub fn name(self) -> &'static str {
        match self {
            GroupName::Su2 => "su2",
            GroupName::U2 => "u2",
        }
    }
}

/// One experiment run. Unset fields take the defaults below; fields that an
/// experiment does not read are ignored by it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Defaults to the first check of the experiment.
    #[serde(default)]
    pub check: Option<Check>,
    pub seed: u64,
    pub samples: usize,
    /// Hilbert scheme sizes, cycled over samples.
    #[serde(default = "default_k")]
    pub k: Vec<usize>,
    /// Structure groups for Nahm data, cycled over samples.
    #[serde(default = "default_groups")]
    pub groups: Vec<GroupName>,
    /// Bound on the norm of sampled Nahm data.
    #[serde(default = "default_data_scale")]
    pub data_scale: f64,
    /// Nahm grid for integration and gauge checks.
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Segments of the path energy minimizer.
    #[serde(default = "default_energy_grid")]
    pub energy_grid: usize,
    /// Nahm grid behind the energy term of the deformed potential.
    #[serde(default = "default_nahm_grid")]
    pub nahm_grid: usize,
    /// Stability parameters, cycled over samples.
    #[serde(default = "default_zeta")]
    pub zeta: Vec<f64>,
    /// Factors applied to the parameter by the scaling check.
    #[serde(default = "default_scalings")]
    pub scalings: Vec<f64>,
    /// Total number of geodesic convexity probes.
    #[serde(default = "default_geodesics")]
    pub geodesics: usize,
    /// Radius range for Taub-NUT samples.
    #[serde(default = "default_radii")]
    pub radii: [f64; 2],
    /// Pass tolerance of the check's main quantity.
    pub tolerance: f64,
    /// Gradient tolerance of the Kempf–Ness minimizer on the undeformed problem.
    #[serde(default = "default_kn_tolerance")]
    pub kn_tolerance: f64,
    /// Gradient tolerance on the deformed problem.
    #[serde(default = "default_target_tolerance")]
    pub target_tolerance: f64,
    #[serde(default = "default_divergence_radius")]
    pub divergence_radius: f64,
    #[serde(default = "default_target_radius")]
    pub target_divergence_radius: f64,
    /// Toric demo: number of coordinates.
    #[serde(default = "default_toric_n")]
    pub toric_n: usize,
    /// Toric demo: integer kernel vectors.
    #[serde(default = "default_kernel")]
    pub kernel: Vec<Vec<i64>>,
    /// Quiver demo: dimensions of the split vertices.
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    /// Quiver demo: original vertex of each split vertex.
    #[serde(default = "default_projection")]
    pub projection: Vec<usize>,
    /// Quiver demo: arrows between split vertices.
    #[serde(default = "default_edges")]
    pub edges: Vec<(usize, usize)>,
    /// Demos: central parameter per slot of the acting group, multiplied by
    /// the cycled `zeta` value.
    #[serde(default)]
    pub centers: Vec<f64>,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub jobs: Option<usize>,
}

fn default_k() -> Vec<usize> {
    vec![1]
}
fn default_groups() -> Vec<GroupName> {
    vec![GroupName::Su2, GroupName::U2]
}
fn default_data_scale() -> f64 {
    0.2
}
fn default_grid() -> usize {
    400
}
fn default_energy_grid() -> usize {
    64
}
fn default_nahm_grid() -> usize {
    64
}
fn default_zeta() -> Vec<f64> {
    vec![1.0]
}
fn default_scalings() -> Vec<f64> {
    vec![0.5, 2.0, 10.0]
}
fn default_geodesics() -> usize {
    100
}
fn default_radii() -> [f64; 2] {
    [0.2, 5.0]
}
fn default_kn_tolerance() -> f64 {
    1e-9
}
fn default_target_tolerance() -> f64 {
    1e-6
}
fn default_divergence_radius() -> f64 {
    1e3
}
fn default_target_radius() -> f64 {
    100.0
}
fn default_toric_n() -> usize {
    2
}
fn default_kernel() -> Vec<Vec<i64>> {
    vec![vec![1, 1]]
}
fn default_dims() -> Vec<usize> {
    vec![1, 2, 1]
}
fn default_projection() -> Vec<usize> {
    vec![0, 1, 0]
}
fn default_edges() -> Vec<(usize, usize)> {
    vec![(0, 1), (1, 2)]
}

#[derive(Debug)]
pub enum ConfigError {
    Io(String, std::io::Error),
    Parse(serde_json::Error),
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(p, e) => write!(f, "cannot read {p}: {e}"),
            ConfigError::Parse(e) => write!(f, "invalid config: {e}"),
            ConfigError::Invalid(m) => write!(f, "invalid config: {m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(ConfigError::Parse)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    pub fn check(&self) -> Check {
        self.check.unwrap_or(self.experiment.checks()[0])
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if !self.experiment.checks().contains(&self.check()) {
            return bad(&format!("check {} does not belong to {}", self.check().name(), self.experiment.name()));
        }
        if self.samples == 0 {
            return bad("samples must be positive");
        }
        for (name, v) in [
            ("tolerance", self.tolerance),
            ("kn_tolerance", self.kn_tolerance),
            ("target_tolerance", self.target_tolerance),
            ("divergence_radius", self.divergence_radius),
            ("target_divergence_radius", self.target_divergence_radius),
            ("data_scale", self.data_scale),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(&format!("{name} must be positive"));
            }
        }
        if self.k.is_empty() || self.k.contains(&0) {
            return bad("k must be a nonempty list of positive sizes");
        }
        if self.groups.is_empty() || self.zeta.is_empty() {
            return bad("groups and zeta must be nonempty");
        }
        if self.zeta.iter().any(|z| !z.is_finite()) {
            return bad("zeta values must be finite");
        }
        if self.scalings.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return bad("scalings must be positive");
        }
        for (name, n) in [("grid", self.grid), ("energy_grid", self.energy_grid), ("nahm_grid", self.nahm_grid)] {
            if n < 16 || n % 2 != 0 {
                return bad(&format!("{name} must be even and at least 16"));
            }
        }
        let [r0, r1] = self.radii;
        if !(r0 > 0.0 && r1 > r0 && r1.is_finite()) {
            return bad("radii must satisfy 0 < r0 < r1");
        }
        if self.experiment == Experiment::TaubnutMetric && self.samples < 3 {
            return bad("taubnut-metric needs at least 3 samples");
        }
        if self.jobs == Some(0) {
            return bad("jobs must be positive");
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, without the fields that only
    /// affect where and how fast results are produced.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        c.jobs = None;
        c.check = Some(self.check());
        let text = serde_json::to_string(&c).expect("config serializes");
        crate::records::sha256_hex(text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"experiment": "nahm-roundtrip", "seed": 1, "samples": 2, "tolerance": 1e-6}"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.check(), Check::NuConsistency);
        assert_eq!(c.grid, 400);
        assert_eq!(c.groups, vec![GroupName::Su2, GroupName::U2]);
    }

    #[test]
    fn rejects_bad_input() {
        let cases = [
            r#"{"experiment": "nahm-roundtrip", "seed": 1, "samples": 2, "tolerance": 1e-6, "extra": 1}"#,
            r#"{"experiment": "nahm-roundtrip", "seed": 1, "samples": 2, "tolerance": -1}"#,
            r#"{"experiment": "nahm-roundtrip", "seed": 1, "samples": 0, "tolerance": 1e-6}"#,
            r#"{"experiment": "nahm-roundtrip", "check": "scaling", "seed": 1, "samples": 2, "tolerance": 1e-6}"#,
            r#"{"experiment": "nahm-roundtrip", "seed": 1, "samples": 2, "tolerance": 1e-6, "grid": 15}"#,
            r#"{"experiment": "warp-drive", "seed": 1, "samples": 2, "tolerance": 1e-6}"#,
            r#"{"experiment": "nahm-roundtrip", "seed": 1, "samples": 2"#,
        ];
        for text in cases {
            assert!(ExperimentConfig::from_json(text).is_err(), "{text}");
        }
    }

    #[test]
    fn digest_ignores_output_and_jobs() {
        let a = ExperimentConfig::from_json(MINIMAL).unwrap();
        let mut b = a.clone();
        b.output = Some("elsewhere".into());
        b.jobs = Some(8);
        assert_eq!(a.digest(), b.digest());
        b.seed = 2;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
