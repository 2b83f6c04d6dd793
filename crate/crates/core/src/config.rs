//! Structured run configuration (TOML) driving the CLI pipeline.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::WeightRule;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataConfig {
    pub dividends: PathBuf,
    pub riskfree: PathBuf,
    pub price_dividend: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Crra,
    RecursiveIes1,
    Sv,
    RareDisaster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BaseUtility {
    #[default]
    Crra,
    RecursiveIes1,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvConfig {
    pub pi_g: f64,
    pub gamma_g: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RdConfig {
    pub delta: f64,
    pub gamma: f64,
    pub g_d: f64,
    pub p: f64,
    #[serde(rename = "B")]
    pub b_recov: f64,
    pub phi_h: f64,
    pub sigma_h: Option<f64>,
    pub n_states: Option<usize>,
}

impl Default for RdConfig {
    fn default() -> Self {
        RdConfig {
            delta: 0.0657,
            gamma: 4.0,
            g_d: 0.025,
            p: 0.0363,
            b_recov: 0.66,
            phi_h: 0.13,
            sigma_h: None,
            n_states: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub name: String,
    pub kind: ModelKind,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    /// Base preferences for SV models.
    #[serde(default)]
    pub utility: BaseUtility,
    pub sv: Option<SvConfig>,
    pub rd: Option<RdConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscretizationConfig {
    pub n_abscissa: usize,
    /// `symmetric` (±1 shock, prob ½ each) is the only scheme for
    /// constant-volatility models; SV models derive regime probabilities from
    /// their own spec.
    #[serde(default = "default_shock_scheme")]
    pub shock_scheme: String,
}

fn default_shock_scheme() -> String {
    "symmetric".to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HhlMode {
    #[default]
    Classical,
    Ideal,
    Circuit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HhlRunConfig {
    #[serde(default = "default_clock_qubits")]
    pub clock_qubits: usize,
    #[serde(default)]
    pub mode: HhlMode,
}

fn default_clock_qubits() -> usize {
    4
}

impl Default for HhlRunConfig {
    fn default() -> Self {
        HhlRunConfig {
            clock_qubits: 4,
            mode: HhlMode::Classical,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanConfig {
    #[serde(default = "default_reference_p")]
    pub reference_p: f64,
    pub delta_lo: Option<f64>,
    pub delta_hi: Option<f64>,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Model name used as the benchmark; remaining models are targets.
    pub benchmark: String,
    /// Extra reference mixes to summarize alongside `reference_p`.
    #[serde(default)]
    pub reference_grid: Vec<f64>,
}

fn default_reference_p() -> f64 {
    0.5
}

fn default_grid_points() -> usize {
    2001
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleConfig {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub weight_rule: WeightRule,
}

fn default_count() -> usize {
    1000
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            count: 1000,
            seed: 0,
            weight_rule: WeightRule::Kl,
        }
    }
}

/// Volatility-regime columns for the tail table emitted by `measure`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureConfig {
    /// Each entry is a `(pi_g, gamma_g)` regime pair; consumption models get
    /// one tail-table column per entry next to the constant-volatility one.
    #[serde(default = "default_sv_specs")]
    pub sv_specs: Vec<[f64; 2]>,
}

fn default_sv_specs() -> Vec<[f64; 2]> {
    vec![[0.8, 0.3], [0.95, 0.01]]
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig {
            sv_specs: default_sv_specs(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: DataConfig,
    #[serde(default)]
    pub models: Vec<ModelConfig>,
    pub discretization: DiscretizationConfig,
    #[serde(default)]
    pub hhl: HhlRunConfig,
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub measure: MeasureConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    /// Parse and validate a TOML config. Relative data paths resolve against
    /// the config file's directory.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("config parse error: {e}")))?;
        if let Some(base) = path.parent() {
            for p in [
                &mut cfg.data.dividends,
                &mut cfg.data.riskfree,
                &mut cfg.data.price_dividend,
            ] {
                if p.is_relative() {
                    *p = base.join(&p);
                }
            }
            if cfg.output.dir.is_relative() {
                cfg.output.dir = base.join(&cfg.output.dir);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for p in [
            &self.data.dividends,
            &self.data.riskfree,
            &self.data.price_dividend,
        ] {
            if !p.exists() {
                return Err(Error::Config(format!(
                    "data file {} does not exist",
                    p.display()
                )));
            }
        }
        if self.discretization.n_abscissa < 2 {
            return Err(Error::Config(
                "discretization.n_abscissa must be >= 2".into(),
            ));
        }
        if self.discretization.shock_scheme != "symmetric" {
            return Err(Error::Config(format!(
                "unknown shock scheme {:?}",
                self.discretization.shock_scheme
            )));
        }
        if let Some(scan) = &self.scan {
            if scan.grid_points < 3 {
                return Err(Error::Config("scan.grid_points must be >= 3".into()));
            }
            if !(0.0..=1.0).contains(&scan.reference_p) {
                return Err(Error::Config("scan.reference_p must be in [0, 1]".into()));
            }
            if scan.reference_grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::Config(
                    "scan.reference_grid entries must be in [0, 1]".into(),
                ));
            }
            if !self.models.iter().any(|m| m.name == scan.benchmark) {
                return Err(Error::Config(format!(
                    "scan benchmark {:?} is not a configured model",
                    scan.benchmark
                )));
            }
        }
        let mut names = std::collections::HashSet::new();
        for m in &self.models {
            if !names.insert(&m.name) {
                return Err(Error::Config(format!("duplicate model name {:?}", m.name)));
            }
            match m.kind {
                ModelKind::Crra | ModelKind::RecursiveIes1 => {
                    if m.gamma.is_none() {
                        return Err(Error::Config(format!("model {:?} needs gamma", m.name)));
                    }
                }
                ModelKind::Sv => {
                    if m.gamma.is_none() || m.sv.is_none() {
                        return Err(Error::Config(format!(
                            "SV model {:?} needs gamma and [models.sv]",
                            m.name
                        )));
                    }
                }
                ModelKind::RareDisaster => {}
            }
        }
        if self.ensemble.count == 0 {
            return Err(Error::Config("ensemble.count must be positive".into()));
        }
        Ok(())
    }
}
