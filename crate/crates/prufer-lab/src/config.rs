//! TOML experiment configuration.
//!
//! One file drives one run mode; the `[potential]` table is shared and the
//! per-mode tables carry their own geometry. Seeds, runs and worker counts
//! can be overridden on the command line.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::torus::{parse_fourier_rows, DecayProfile, PotentialSpec};
use crate::{LabError, Result};

/// Run mode, normally taken from the CLI subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Spectrum,
    JumpField,
    LimitSde,
    SineBeta,
    Explosion,
    Phase,
    Report,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Spectrum => "spectrum",
            Mode::JumpField => "jumpfield",
            Mode::LimitSde => "limitsde",
            Mode::SineBeta => "sinebeta",
            Mode::Explosion => "explosion",
            Mode::Phase => "phase",
            Mode::Report => "report",
        }
    }
}

/// `[potential]` table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub alpha: f64,
    pub dim: usize,
    pub fourier: Vec<Vec<f64>>,
    #[serde(default)]
    pub profile: ProfileSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSection {
    #[default]
    Power,
    Constant(f64),
    /// Constant coupling with scale `L^{-alpha}`, resolved against the box
    /// length of the active mode.
    CouplingFromLength,
}

impl PotentialSection {
    /// Build the potential, resolving a length-coupled profile against the
    /// box length of the active mode.
    pub fn resolve(&self, box_length: Option<f64>) -> Result<PotentialSpec> {
        let coeffs = parse_fourier_rows(self.dim, &self.fourier)?;
        let profile = match self.profile {
            ProfileSection::Power => DecayProfile::PowerDecay,
            ProfileSection::Constant(s) => DecayProfile::ConstantCoupling(s),
            ProfileSection::CouplingFromLength => {
                let l = box_length.ok_or_else(|| {
                    LabError::Config(
                        "profile = \"coupling_from_length\" needs a mode with a box length"
                            .into(),
                    )
                })?;
                DecayProfile::ConstantCoupling(l.powf(-self.alpha))
            }
        };
        PotentialSpec::new(self.alpha, self.dim, coeffs, profile)
    }
}

/// `[spectrum]` table: eigenvalues of `H_L` in a rescaled window.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub e0: f64,
    pub l: f64,
    pub window: (f64, f64),
    #[serde(default)]
    pub dt: Option<f64>,
}

/// `[jumpfield]` table: 2D jump statistics on `[0,1] × [0, λ_max]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpFieldSection {
    pub e0: f64,
    pub n: f64,
    pub lambda_max: f64,
    #[serde(default = "default_cells")]
    pub lambda_cells: usize,
    #[serde(default = "default_cells")]
    pub t_cells: usize,
    #[serde(default)]
    pub dt: Option<f64>,
}

fn default_cells() -> usize {
    4
}

/// `[limitsde]` table: reduced relative-phase SDE ensembles.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitSdeSection {
    pub alpha: f64,
    pub n: f64,
    #[serde(default = "default_horizon_one")]
    pub horizon: f64,
    #[serde(default = "default_s_bins")]
    pub s_bins: usize,
}

fn default_horizon_one() -> f64 {
    1.0
}

fn default_s_bins() -> usize {
    8
}

/// `[sinebeta]` table: coupled phase SDE counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SineBetaSection {
    pub betas: Vec<f64>,
    pub window: (f64, f64),
    #[serde(default = "default_sine_horizon")]
    pub horizon: f64,
    #[serde(default = "default_sine_dt")]
    pub dt: f64,
}

fn default_sine_horizon() -> f64 {
    400.0
}

fn default_sine_dt() -> f64 {
    0.01
}

/// `[explosion]` table: explosion-time statistics of `S₊`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplosionSection {
    #[serde(default = "default_max_time")]
    pub max_time: f64,
    #[serde(default = "default_xi")]
    pub xi: Vec<f64>,
    /// Extra quadrature evaluation at large diffusion scale, compared to
    /// the closed-form limit.
    #[serde(default)]
    pub limit_check: Option<LimitCheck>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitCheck {
    pub c_n: f64,
    pub r: f64,
}

fn default_max_time() -> f64 {
    60.0
}

fn default_xi() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

/// `[phase]` table: boundary-phase uniformity and relative-phase drift.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSection {
    pub e0: f64,
    pub l: f64,
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    /// Start of jump extraction, as a fraction of L; crossings before it
    /// are discarded and counted.
    #[serde(default = "default_t_min_factor")]
    pub t_min_factor: f64,
}

fn default_t_min_factor() -> f64 {
    0.05
}

/// `[tolerances]` table: acceptance thresholds with spec defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance on ensemble means.
    pub mean_rel: f64,
    pub dispersion_lo: f64,
    pub dispersion_hi: f64,
    pub significance: f64,
    /// Maximal admissible |correlation| between disjoint counts.
    pub corr_max: f64,
    /// Multiplier on Monte Carlo standard errors.
    pub sigma_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            mean_rel: 0.10,
            dispersion_lo: 0.8,
            dispersion_hi: 1.2,
            significance: 0.01,
            corr_max: 0.15,
            sigma_factor: 3.0,
        }
    }
}

/// Whole experiment file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_master_seed")]
    pub master_seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Dump the first realization's noise path / trajectory as CSV.
    #[serde(default)]
    pub dump_paths: bool,
    #[serde(default)]
    pub potential: Option<PotentialSection>,
    #[serde(default)]
    pub spectrum: Option<SpectrumSection>,
    #[serde(default)]
    pub jumpfield: Option<JumpFieldSection>,
    #[serde(default)]
    pub limitsde: Option<LimitSdeSection>,
    #[serde(default)]
    pub sinebeta: Option<SineBetaSection>,
    #[serde(default)]
    pub explosion: Option<ExplosionSection>,
    #[serde(default)]
    pub phase: Option<PhaseSection>,
    #[serde(default)]
    pub sde: Option<crate::limit_sde::SdeConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_runs() -> usize {
    1
}

fn default_master_seed() -> u64 {
    42
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        if cfg.runs == 0 {
            return Err(LabError::Config("runs must be at least 1".into()));
        }
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    fn require<'a, T>(opt: &'a Option<T>, table: &str, mode: Mode) -> Result<&'a T> {
        opt.as_ref().ok_or_else(|| {
            LabError::Config(format!(
                "mode '{}' needs the [{}] table",
                mode.name(),
                table
            ))
        })
    }

    /// Check that the tables referenced by `mode` are present.
    pub fn validate_for(&self, mode: Mode) -> Result<()> {
        match mode {
            Mode::Spectrum => {
                Self::require(&self.potential, "potential", mode)?;
                Self::require(&self.spectrum, "spectrum", mode)?;
            }
            Mode::JumpField => {
                Self::require(&self.potential, "potential", mode)?;
                Self::require(&self.jumpfield, "jumpfield", mode)?;
            }
            Mode::LimitSde => {
                Self::require(&self.limitsde, "limitsde", mode)?;
                Self::require(&self.sde, "sde", mode)?;
            }
            Mode::SineBeta => {
                Self::require(&self.sinebeta, "sinebeta", mode)?;
            }
            Mode::Explosion => {
                Self::require(&self.explosion, "explosion", mode)?;
                Self::require(&self.sde, "sde", mode)?;
            }
            Mode::Phase => {
                Self::require(&self.potential, "potential", mode)?;
                Self::require(&self.phase, "phase", mode)?;
            }
            Mode::Report => {}
        }
        Ok(())
    }

    /// Worker count: config, then `PRUFER_LAB_THREADS`, then the hardware.
    pub fn resolve_threads(&self) -> usize {
        if let Some(t) = self.threads {
            if t > 0 {
                return t;
            }
        }
        if let Ok(v) = std::env::var("PRUFER_LAB_THREADS") {
            if let Ok(t) = v.parse::<usize>() {
                if t > 0 {
                    return t;
                }
            }
        }
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    }
}
