//! Equilibrium detection and the per-class centroid contraction.

use serde::{Deserialize, Serialize};

use crate::dynamics::MarketState;
use crate::error::{Error, Result};
use crate::model::AssetClass;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractionDirection {
    /// x <- x + (centroid - x) / 2.
    #[default]
    TowardCentroid,
    /// x <- x - (centroid - x) / 2, which pushes points away from the centroid.
    AwayFromCentroid,
}

/// When the contraction runs relative to the adoption dynamics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractionSchedule {
    /// Only once, after equilibrium (or the step budget) is reached.
    #[default]
    PostEquilibrium,
    /// One contraction round after every step, plus the final fixed point.
    EveryStep,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EquilibriumParams {
    /// Optional cap on the largest acceptance probability of a state-changing
    /// proposal; a quiet step must also stay below it.
    pub epsilon: Option<f64>,
    /// Consecutive zero-acceptance steps required.
    pub patience: usize,
    /// Distance from the class centroid at which an asset gets pulled in.
    pub theta: f64,
    pub direction: ContractionDirection,
    pub schedule: ContractionSchedule,
    /// Guard on the number of contraction rounds in [`finalize`].
    pub max_rounds: usize,
}

impl Default for EquilibriumParams {
    fn default() -> Self {
        EquilibriumParams {
            epsilon: None,
            patience: 10,
            theta: 0.05,
            direction: ContractionDirection::TowardCentroid,
            schedule: ContractionSchedule::PostEquilibrium,
            max_rounds: 10_000,
        }
    }
}

impl EquilibriumParams {
    pub fn validate(&self) -> Result<()> {
        if self.patience == 0 {
            return Err(Error::config("patience window must be >= 1"));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::config(format!("theta = {} must be positive", self.theta)));
        }
        if let Some(eps) = self.epsilon {
            if eps.is_nan() || eps <= 0.0 {
                return Err(Error::config(format!("epsilon = {eps} must be positive")));
            }
        }
        if self.max_rounds == 0 {
            return Err(Error::config("max_rounds must be >= 1"));
        }
        Ok(())
    }
}

/// First step count `t*` (1-based) closing a run of `patience` consecutive
/// steps without an accepted move.
pub fn detect_equilibrium(accept_history: &[usize], params: &EquilibriumParams) -> Option<usize> {
    let mut run = 0;
    for (k, &accepted) in accept_history.iter().enumerate() {
        run = if accepted == 0 { run + 1 } else { 0 };
        if run >= params.patience {
            return Some(k + 1);
        }
    }
    None
}

/// Mean point of one class in the adoption/return plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassCentroid {
    pub class: AssetClass,
    /// NaN when the class is empty.
    pub mean_adoption: f64,
    /// NaN when the class is empty.
    pub mean_return: f64,
    pub count: usize,
}

impl ClassCentroid {
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

pub fn class_centroid(state: &MarketState, class: AssetClass) -> ClassCentroid {
    let (mut sum_a, mut sum_r, mut count) = (0.0, 0.0, 0usize);
    for a in state.members(class) {
        sum_a += a.adoption;
        sum_r += a.expected_return;
        count += 1;
    }
    let (mean_adoption, mean_return) = if count == 0 {
        (f64::NAN, f64::NAN)
    } else {
        (sum_a / count as f64, sum_r / count as f64)
    };
    ClassCentroid { class, mean_adoption, mean_return, count }
}

pub fn all_centroids(state: &MarketState) -> [ClassCentroid; 4] {
    AssetClass::ALL.map(|c| class_centroid(state, c))
}

/// One contraction round against the centroids of the incoming state.
/// Returns the number of assets moved.
pub fn contract_step(state: &mut MarketState, params: &EquilibriumParams) -> usize {
    let centroids = all_centroids(state);
    let mut moved = 0;
    let mut assets = state.assets_mut();
    for asset in assets.iter_mut() {
        let c = &centroids[asset.class().index()];
        let da = c.mean_adoption - asset.adoption;
        let dr = c.mean_return - asset.expected_return;
        if da.hypot(dr) >= params.theta {
            let sign = match params.direction {
                ContractionDirection::TowardCentroid => 0.5,
                ContractionDirection::AwayFromCentroid => -0.5,
            };
            asset.adoption = (asset.adoption + sign * da).clamp(0.0, 1.0);
            asset.expected_return += sign * dr;
            moved += 1;
        }
    }
    moved
}

/// Per-class check of the return constraint after contraction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassConstraint {
    pub class: AssetClass,
    /// Sum of a * r over the class at equilibrium.
    pub at_equilibrium: f64,
    /// Sum of a * r over the class after contraction.
    pub after_contraction: f64,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalizeReport {
    pub rounds: usize,
    pub converged: bool,
    pub constraints: Vec<ClassConstraint>,
}

fn class_return_sum(state: &MarketState, class: AssetClass) -> f64 {
    state.members(class).map(|a| a.adoption * a.expected_return).sum()
}

/// Contract `state` to its fixed point and compare each class's return sum
/// against the equilibrium snapshot `state_star`.
pub fn finalize(
    state: &MarketState,
    state_star: &MarketState,
    params: &EquilibriumParams,
) -> (MarketState, FinalizeReport) {
    let mut out = state.clone();
    let mut rounds = 0;
    let mut converged = false;
    while rounds < params.max_rounds {
        let moved = contract_step(&mut out, params);
        rounds += 1;
        if moved == 0 {
            converged = true;
            break;
        }
    }
    let constraints = AssetClass::ALL
        .iter()
        .map(|&class| {
            let at_equilibrium = class_return_sum(state_star, class);
            let after_contraction = class_return_sum(&out, class);
            ClassConstraint {
                class,
                at_equilibrium,
                after_contraction,
                satisfied: after_contraction >= at_equilibrium,
            }
        })
        .collect();
    (out, FinalizeReport { rounds, converged, constraints })
}
