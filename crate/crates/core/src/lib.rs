//! Agent-based simulator of crypto-asset selection.
//!
//! Assets carry fixed security and stability features and a dynamic
//! (adoption, expected return) state. Investors propose pairwise adoption
//! shifts that a Glauber-style logistic rule accepts or rejects based on the
//! change in total expected return and the feature differences; a per-class
//! centroid contraction then settles returns. The [`rescale`] module maps
//! investor attitudes between feature ecosystems by moment matching.

pub mod config;
pub mod dynamics;
pub mod equilibration;
pub mod error;
pub mod metrics;
pub mod model;
pub mod output;
pub mod rescale;
pub mod runner;
pub mod seed;

pub use config::{AttitudeSpecs, FeatureSpecs, SimConfig, SweepConfig};
pub use dynamics::{MarketState, StepParams};
pub use error::{Error, Result};
pub use model::{AssetClass, BetaPopulationSpec, CryptoAsset, FeatureDistribution, InvestorProfile};
pub use runner::{compare_heterogeneous, run_simulation, run_sweep, SimulationResult};
