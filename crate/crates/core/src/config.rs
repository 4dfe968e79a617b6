//! Run and sweep configuration, with every default spelled out.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dynamics::{PairingPolicy, StepParams};
use crate::equilibration::EquilibriumParams;
use crate::error::{Error, Result};
use crate::model::{BetaPopulationSpec, FeatureDistribution, InitPolicy};

/// Attitude distributions across the investor population.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttitudeSpecs {
    #[serde(rename = "return")]
    pub total_return: BetaPopulationSpec,
    pub security: BetaPopulationSpec,
    pub stability: BetaPopulationSpec,
}

impl Default for AttitudeSpecs {
    fn default() -> Self {
        AttitudeSpecs::constant(1.0, 1.0, 1.0)
    }
}

impl AttitudeSpecs {
    pub fn constant(b0: f64, b1: f64, b2: f64) -> Self {
        AttitudeSpecs {
            total_return: BetaPopulationSpec::constant(b0),
            security: BetaPopulationSpec::constant(b1),
            stability: BetaPopulationSpec::constant(b2),
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        self.total_return.is_constant() && self.security.is_constant() && self.stability.is_constant()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSpecs {
    pub security: FeatureDistribution,
    pub stability: FeatureDistribution,
}

impl Default for FeatureSpecs {
    fn default() -> Self {
        FeatureSpecs {
            security: FeatureDistribution::Uniform01,
            stability: FeatureDistribution::Uniform01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: PathBuf::from("out") }
    }
}

/// Every free parameter of one simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub n_assets: usize,
    /// Step budget; the run stops earlier if equilibrium is detected.
    pub max_steps: usize,
    pub pairing: PairingPolicy,
    /// Full per-asset snapshot every `thinning` steps.
    pub thinning: u64,
    /// Bins of the non-adoption histograms.
    pub bins: usize,
    pub beta: AttitudeSpecs,
    pub features: FeatureSpecs,
    pub step: StepParams,
    pub equilibrium: EquilibriumParams,
    pub init: InitPolicy,
    pub output: OutputSpec,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 1,
            n_assets: 300,
            max_steps: 400,
            pairing: PairingPolicy::PerfectMatching,
            thinning: 10,
            bins: 20,
            beta: AttitudeSpecs::default(),
            features: FeatureSpecs::default(),
            step: StepParams::default(),
            equilibrium: EquilibriumParams::default(),
            init: InitPolicy::default(),
            output: OutputSpec::default(),
        }
    }
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    /// Single-line JSON echo embedded in output files.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_assets < 2 {
            return Err(Error::config(format!("n_assets = {} must be >= 2", self.n_assets)));
        }
        if self.max_steps == 0 {
            return Err(Error::config("max_steps must be >= 1"));
        }
        if self.thinning == 0 {
            return Err(Error::config("thinning must be >= 1"));
        }
        if self.bins < 2 {
            return Err(Error::config("bins must be >= 2"));
        }
        self.beta.total_return.validate()?;
        self.beta.security.validate()?;
        self.beta.stability.validate()?;
        self.features.security.validate()?;
        self.features.stability.validate()?;
        self.step.validate(false)?;
        self.equilibrium.validate()?;
        self.init.validate()
    }

    /// Number of investors, one per proposal slot.
    pub fn n_investors(&self) -> usize {
        (self.n_assets / 2).max(1)
    }
}

/// Phase-diagram sweep over (beta_security, beta_stability).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub base: SimConfig,
    pub beta1_grid: Vec<f64>,
    pub beta2_grid: Vec<f64>,
    pub replicates: usize,
    /// Worker threads; 0 uses all cores.
    pub parallelism: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            base: SimConfig { max_steps: 300, ..SimConfig::default() },
            beta1_grid: vec![-2.0, 0.01, 2.0],
            beta2_grid: vec![-2.0, 0.01, 2.0],
            replicates: 1,
            parallelism: 0,
        }
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.beta1_grid.is_empty() || self.beta2_grid.is_empty() {
            return Err(Error::config("sweep grids must be nonempty"));
        }
        if self.beta1_grid.iter().chain(&self.beta2_grid).any(|b| !b.is_finite()) {
            return Err(Error::config("sweep grid values must be finite"));
        }
        if self.replicates == 0 {
            return Err(Error::config("replicates must be >= 1"));
        }
        Ok(())
    }
}

const FIELD_DOCS: &[(&str, &str)] = &[
    ("seed", "master seed; assets, investors and dynamics use independent derived streams"),
    ("n_assets", "number of assets N (>= 2); K = N / 2 investors propose one pair each per step"),
    ("max_steps", "step budget n_s"),
    ("pairing", "perfect_matching | independent_pairs"),
    ("thinning", "per-asset snapshot every this many steps (summary rows every step)"),
    ("bins", "bins of the per-class histograms of 1 - a"),
    ("beta.return / beta.security / beta.stability", "attitude populations: constant{value} | triangular_support{lo,hi} | uniform{lo,hi}"),
    ("features.security / features.stability", "uniform01 | triangular01 | triangular{lo,mode,hi} | point_mass{value}"),
    ("step.delta", "adoption shift per accepted proposal, in (0, 1]"),
    ("step.transaction_cost", "cost c added to the return difference (>= 0)"),
    ("step.noise_floor", "stability floor in the noise scale 1 / max(xi, floor)"),
    ("step.variance_convention", "variance | std: how the noise scale is read"),
    ("step.return_feedback", "literal (r += a_prev - a) | reversed (r += a - a_prev)"),
    ("step.evaluation", "sequential | snapshot: state the return difference is measured against"),
    ("step.noise", "false freezes the Gaussian return noise"),
    ("equilibrium.epsilon", "optional cap on the largest acceptance probability of a quiet step"),
    ("equilibrium.patience", "consecutive zero-acceptance steps that declare equilibrium"),
    ("equilibrium.theta", "centroid distance threshold of the contraction"),
    ("equilibrium.direction", "toward_centroid | away_from_centroid"),
    ("equilibrium.schedule", "post_equilibrium | every_step"),
    ("equilibrium.max_rounds", "guard on contraction rounds at finalisation"),
    ("init.adoption / init.expected_return", "constant{value} | uniform{lo,hi}"),
    ("output.dir", "output directory (overridden by CRYPTOSEL_OUT_DIR or --out-dir)"),
];

/// Commented TOML listing every field at its default.
pub fn defaults_reference() -> String {
    let mut out = String::from("# cryptosel run configuration; every field below is at its default.\n#\n");
    for (key, doc) in FIELD_DOCS {
        out.push_str(&format!("# {key}: {doc}\n"));
    }
    out.push('\n');
    out.push_str(&SimConfig::default().to_toml().expect("defaults serialize"));
    out
}
