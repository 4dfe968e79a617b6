//! One time step of the adoption/return dynamics.
//!
//! A step draws `K = N / 2` pair proposals, each asking to move `delta` of
//! adoption from a loser asset to a winner asset. Every proposal is filtered
//! by the logistic acceptance rule against a fresh uniform threshold; after
//! all proposals are resolved the expected returns absorb the adoption change
//! plus stability-scaled Gaussian noise.

use log::debug;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AssetClass, CryptoAsset, InvestorProfile};

/// Complete market state at one time step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarketState {
    t: u64,
    assets: Vec<CryptoAsset>,
    r_tot: f64,
}

impl MarketState {
    pub fn new(assets: Vec<CryptoAsset>) -> Self {
        let r_tot = sum_returns(&assets);
        MarketState { t: 0, assets, r_tot }
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn assets(&self) -> &[CryptoAsset] {
        &self.assets
    }

    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }

    /// Cached total expected return.
    pub fn r_tot(&self) -> f64 {
        self.r_tot
    }

    pub fn adoption_vector(&self) -> Vec<f64> {
        self.assets.iter().map(|a| a.adoption).collect()
    }

    pub fn returns_vector(&self) -> Vec<f64> {
        self.assets.iter().map(|a| a.expected_return).collect()
    }

    pub fn members(&self, class: AssetClass) -> impl Iterator<Item = &CryptoAsset> {
        self.assets.iter().filter(move |a| a.class() == class)
    }

    /// Mutable access to the assets; the cached total is refreshed when the guard drops.
    pub fn assets_mut(&mut self) -> AssetsMut<'_> {
        AssetsMut { state: self }
    }

    pub(crate) fn refresh_r_tot(&mut self) {
        self.r_tot = sum_returns(&self.assets);
    }
}

/// Guard returned by [`MarketState::assets_mut`].
pub struct AssetsMut<'a> {
    state: &'a mut MarketState,
}

impl std::ops::Deref for AssetsMut<'_> {
    type Target = [CryptoAsset];
    fn deref(&self) -> &[CryptoAsset] {
        &self.state.assets
    }
}

impl std::ops::DerefMut for AssetsMut<'_> {
    fn deref_mut(&mut self) -> &mut [CryptoAsset] {
        &mut self.state.assets
    }
}

impl Drop for AssetsMut<'_> {
    fn drop(&mut self) {
        for a in self.state.assets.iter_mut() {
            a.adoption = a.adoption.clamp(0.0, 1.0);
        }
        self.state.refresh_r_tot();
    }
}

fn sum_returns(assets: &[CryptoAsset]) -> f64 {
    assets.iter().map(|a| a.adoption * a.expected_return).sum()
}

/// Total expected return: sum of adoption times expected return.
pub fn total_expected_return(state: &MarketState) -> f64 {
    sum_returns(&state.assets)
}

/// One investor's proposal to move adoption from `loser` to `winner`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairProposal {
    pub loser: usize,
    pub winner: usize,
    pub investor: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingPolicy {
    /// Uniformly random perfect matching; every asset appears in exactly one pair.
    #[default]
    PerfectMatching,
    /// `N / 2` independent uniformly random ordered pairs.
    IndependentPairs,
}

/// How the noise scale `1 / max(xi, floor)` is read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceConvention {
    /// The scale is the variance of the noise.
    #[default]
    Variance,
    /// The scale is the standard deviation of the noise.
    Std,
}

/// Sign of the adoption term in the return update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnFeedback {
    /// r += a(t-1) - a(t): gaining adoption lowers the expected return.
    #[default]
    Literal,
    /// r += a(t) - a(t-1).
    Reversed,
}

/// Which adoption vector a proposal's return change is measured against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluation {
    /// Against the live state, including commits earlier in the same step.
    #[default]
    Sequential,
    /// Against the state at the start of the step.
    Snapshot,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepParams {
    /// Adoption shift per accepted proposal.
    pub delta: f64,
    pub transaction_cost: f64,
    /// Lower bound applied to stability when computing the noise scale.
    pub noise_floor: f64,
    pub variance_convention: VarianceConvention,
    pub return_feedback: ReturnFeedback,
    pub evaluation: Evaluation,
    /// Disable to freeze the Gaussian return noise.
    pub noise: bool,
}

impl Default for StepParams {
    fn default() -> Self {
        StepParams {
            delta: 0.1,
            transaction_cost: 0.0,
            noise_floor: 0.05,
            variance_convention: VarianceConvention::Variance,
            return_feedback: ReturnFeedback::Literal,
            evaluation: Evaluation::Sequential,
            noise: true,
        }
    }
}

impl StepParams {
    /// `allow_zero_delta` admits the frozen-dynamics configuration used for calibration.
    pub fn validate(&self, allow_zero_delta: bool) -> Result<()> {
        let delta_ok = if allow_zero_delta {
            (0.0..=1.0).contains(&self.delta)
        } else {
            self.delta > 0.0 && self.delta <= 1.0
        };
        if !delta_ok {
            return Err(Error::config(format!("delta = {} outside (0, 1]", self.delta)));
        }
        if !(self.transaction_cost >= 0.0 && self.transaction_cost.is_finite()) {
            return Err(Error::config("transaction cost must be finite and >= 0"));
        }
        if !(self.noise_floor > 0.0 && self.noise_floor <= 1.0) {
            return Err(Error::config(format!(
                "noise floor = {} outside (0, 1]",
                self.noise_floor
            )));
        }
        Ok(())
    }

    /// Standard deviation of the return noise for an asset with stability `xi`.
    pub fn noise_std(&self, xi: f64) -> f64 {
        let scale = 1.0 / xi.max(self.noise_floor);
        match self.variance_convention {
            VarianceConvention::Variance => scale.sqrt(),
            VarianceConvention::Std => scale,
        }
    }
}

/// Draw the proposals for one step.
pub fn draw_pairing<R: Rng + ?Sized>(
    n_assets: usize,
    policy: PairingPolicy,
    rng: &mut R,
) -> Vec<PairProposal> {
    if n_assets < 2 {
        return Vec::new();
    }
    match policy {
        PairingPolicy::PerfectMatching => {
            let mut ids: Vec<usize> = (0..n_assets).collect();
            ids.shuffle(rng);
            if n_assets % 2 == 1 {
                debug!("odd asset count: asset {} sits out this step", ids[n_assets - 1]);
            }
            ids.chunks_exact(2)
                .enumerate()
                .map(|(k, pair)| {
                    let (loser, winner) = if rng.random::<bool>() {
                        (pair[0], pair[1])
                    } else {
                        (pair[1], pair[0])
                    };
                    PairProposal { loser, winner, investor: k }
                })
                .collect()
        }
        PairingPolicy::IndependentPairs => (0..n_assets / 2)
            .map(|k| {
                let loser = rng.random_range(0..n_assets);
                let mut winner = rng.random_range(0..n_assets - 1);
                if winner >= loser {
                    winner += 1;
                }
                PairProposal { loser, winner, investor: k }
            })
            .collect(),
    }
}

/// Tentative adoption values after moving `delta` from asset i to asset j, clamped to [0, 1].
pub fn propose_adoption_update(a_i: f64, a_j: f64, delta: f64) -> (f64, f64) {
    ((a_i - delta).max(0.0), (a_j + delta).min(1.0))
}

/// `1 / (1 + e^x)`, evaluated without overflow.
fn logistic_complement(x: f64) -> f64 {
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Probability that the app recommends a proposal.
///
/// `delta_r_tot` is R_before - R_after; `delta_s` and `delta_xi` are the
/// loser's feature minus the winner's. A transaction cost adds to the return
/// term, so it only ever lowers the probability for a positive `beta_return`.
pub fn acceptance_probability(
    delta_r_tot: f64,
    delta_s: f64,
    delta_xi: f64,
    profile: &InvestorProfile,
    cost: f64,
) -> Result<f64> {
    let inputs = [
        delta_r_tot,
        delta_s,
        delta_xi,
        cost,
        profile.beta_return,
        profile.beta_security,
        profile.beta_stability,
    ];
    if inputs.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("acceptance probability needs finite inputs"));
    }
    Ok(logistic_complement(profile.beta_return * (delta_r_tot + cost))
        * logistic_complement(profile.beta_security * delta_s)
        * logistic_complement(profile.beta_stability * delta_xi))
}

/// Per-step bookkeeping.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepOutcome {
    pub proposals: usize,
    /// Accepted proposals that changed the adoption vector.
    pub accepted: usize,
    /// Largest acceptance probability among proposals that would change state.
    pub max_acceptance: f64,
}

/// Advance the market by one step.
pub fn sweep_step<R: Rng + ?Sized>(
    state: &mut MarketState,
    investors: &[InvestorProfile],
    params: &StepParams,
    policy: PairingPolicy,
    rng: &mut R,
) -> Result<StepOutcome> {
    if investors.is_empty() {
        return Err(Error::config("sweep step needs at least one investor"));
    }
    let a_prev = state.adoption_vector();
    let proposals = draw_pairing(state.len(), policy, rng);
    let mut outcome = StepOutcome {
        proposals: proposals.len(),
        ..StepOutcome::default()
    };

    for proposal in &proposals {
        let (i, j) = (proposal.loser, proposal.winner);
        let (a_i, a_j) = match params.evaluation {
            Evaluation::Sequential => (state.assets[i].adoption, state.assets[j].adoption),
            Evaluation::Snapshot => (a_prev[i], a_prev[j]),
        };
        let (new_i, new_j) = propose_adoption_update(a_i, a_j, params.delta);
        let (r_i, r_j) = (state.assets[i].expected_return, state.assets[j].expected_return);
        let delta_r_tot = (a_i - new_i) * r_i + (a_j - new_j) * r_j;
        let delta_s = state.assets[i].security() - state.assets[j].security();
        let delta_xi = state.assets[i].stability() - state.assets[j].stability();
        let profile = &investors[proposal.investor % investors.len()];
        let p = acceptance_probability(delta_r_tot, delta_s, delta_xi, profile, params.transaction_cost)?;
        let threshold: f64 = rng.random();

        let changes = new_i != state.assets[i].adoption || new_j != state.assets[j].adoption;
        if changes {
            outcome.max_acceptance = outcome.max_acceptance.max(p);
        }
        if p > threshold {
            if changes {
                outcome.accepted += 1;
            }
            let before = state.assets[i].adoption * r_i + state.assets[j].adoption * r_j;
            state.assets[i].adoption = new_i;
            state.assets[j].adoption = new_j;
            state.r_tot += new_i * r_i + new_j * r_j - before;
        }
    }

    update_returns(state, &a_prev, params, rng)?;
    state.t += 1;
    Ok(outcome)
}

/// Apply the return update: adoption change (signed per `return_feedback`) plus noise.
pub fn update_returns<R: Rng + ?Sized>(
    state: &mut MarketState,
    a_prev: &[f64],
    params: &StepParams,
    rng: &mut R,
) -> Result<()> {
    if a_prev.len() != state.len() {
        return Err(Error::domain(format!(
            "previous adoption vector has length {}, state has {} assets",
            a_prev.len(),
            state.len()
        )));
    }
    for (asset, &prev) in state.assets.iter_mut().zip(a_prev) {
        let change = match params.return_feedback {
            ReturnFeedback::Literal => prev - asset.adoption,
            ReturnFeedback::Reversed => asset.adoption - prev,
        };
        let noise = if params.noise {
            let z: f64 = rng.sample(StandardNormal);
            params.noise_std(asset.stability()) * z
        } else {
            0.0
        };
        asset.expected_return += change + noise;
    }
    state.refresh_r_tot();
    Ok(())
}
