//! Orchestration: single runs, phase-diagram sweeps and the
//! heterogeneous-versus-representative comparison.

use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{AttitudeSpecs, SimConfig, SweepConfig};
use crate::dynamics::{sweep_step, MarketState};
use crate::equilibration::{
    contract_step, detect_equilibrium, finalize, ContractionSchedule, FinalizeReport,
};
use crate::error::{Error, Result};
use crate::metrics::{
    accumulate_nonadoption, class_mean_adoption, ClassHistogram, HistogramAccumulator, Recorder,
    TrajectoryRecord,
};
use crate::model::{sample_assets, sample_investors, BetaPopulationSpec, InvestorProfile};
use crate::seed::{cell_seed, stream_rng, Stream};

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct SimulationResult {
    pub config: SimConfig,
    pub investors: Vec<InvestorProfile>,
    pub initial: MarketState,
    /// State when the adoption dynamics stopped (equilibrium or step budget).
    pub equilibrium: MarketState,
    pub t_star: Option<usize>,
    /// State after the centroid contraction.
    pub final_state: MarketState,
    pub finalize: FinalizeReport,
    pub trajectory: Vec<TrajectoryRecord>,
    pub accept_history: Vec<usize>,
}

impl SimulationResult {
    pub fn steps_run(&self) -> usize {
        self.accept_history.len()
    }

    /// Realised population mean of each attitude component.
    pub fn mean_profile(&self) -> InvestorProfile {
        mean_profile(&self.investors)
    }

    pub fn class_mean_adoption(&self) -> [f64; 4] {
        class_mean_adoption(&self.final_state)
    }

    pub fn histograms(&self) -> Result<Vec<ClassHistogram>> {
        Ok(self.histogram_accumulators()?.iter().map(HistogramAccumulator::finish).collect())
    }

    pub fn histogram_accumulators(&self) -> Result<Vec<HistogramAccumulator>> {
        accumulate_nonadoption(&self.final_state, self.config.bins)
    }
}

pub fn mean_profile(investors: &[InvestorProfile]) -> InvestorProfile {
    let k = investors.len().max(1) as f64;
    let sum = investors.iter().fold((0.0, 0.0, 0.0), |acc, p| {
        (acc.0 + p.beta_return, acc.1 + p.beta_security, acc.2 + p.beta_stability)
    });
    InvestorProfile::new(sum.0 / k, sum.1 / k, sum.2 / k)
}

/// Run the dynamics until equilibrium or the step budget, then contract.
pub fn run_simulation(config: &SimConfig) -> Result<SimulationResult> {
    config.validate()?;
    let mut asset_rng = stream_rng(config.seed, Stream::Assets);
    let mut investor_rng = stream_rng(config.seed, Stream::Investors);
    let mut rng = stream_rng(config.seed, Stream::Dynamics);

    let assets = sample_assets(
        config.n_assets,
        &config.features.security,
        &config.features.stability,
        &config.init,
        &mut asset_rng,
    )?;
    let investors = sample_investors(
        config.n_investors(),
        &config.beta.total_return,
        &config.beta.security,
        &config.beta.stability,
        &mut investor_rng,
    )?;

    let mut state = MarketState::new(assets);
    let initial = state.clone();
    let mut recorder = Recorder::new(config.thinning)?;
    recorder.record(&state, 0);

    let eq = &config.equilibrium;
    let mut history = Vec::with_capacity(config.max_steps);
    let mut t_star = None;
    for _ in 0..config.max_steps {
        let outcome = sweep_step(&mut state, &investors, &config.step, config.pairing, &mut rng)?;
        if eq.schedule == ContractionSchedule::EveryStep {
            contract_step(&mut state, eq);
        }
        recorder.record(&state, outcome.accepted);
        let quiet = outcome.accepted == 0 && eq.epsilon.is_none_or(|eps| outcome.max_acceptance < eps);
        history.push(if quiet { 0 } else { outcome.accepted.max(1) });
        if let Some(t) = detect_equilibrium(&history, eq) {
            t_star = Some(t);
            break;
        }
    }
    // Report raw accepted counts, not the epsilon-adjusted history.
    let accept_history = recorder.records()[1..].iter().map(|r| r.accepted_moves).collect();

    let equilibrium = state.clone();
    let (final_state, report) = finalize(&state, &equilibrium, eq);
    info!(
        "seed {}: {} steps, t* = {:?}, contraction rounds {}",
        config.seed,
        history.len(),
        t_star,
        report.rounds
    );
    Ok(SimulationResult {
        config: config.clone(),
        investors,
        initial,
        equilibrium,
        t_star,
        final_state,
        finalize: report,
        trajectory: recorder.into_records(),
        accept_history,
    })
}

/// One (beta_security, beta_stability) cell of a sweep.
#[derive(Clone, Debug, Serialize)]
pub struct CellResult {
    pub beta1_index: usize,
    pub beta2_index: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub seeds: Vec<u64>,
    /// Final class-mean adoption per replicate.
    pub class_mean_adoption: Vec<[f64; 4]>,
    /// Histograms pooled over replicates.
    pub histograms: Vec<ClassHistogram>,
}

/// Configuration of one sweep cell replicate.
pub fn cell_config(sweep: &SweepConfig, i1: usize, i2: usize, replicate: usize) -> SimConfig {
    let mut cfg = sweep.base.clone();
    cfg.beta.security = BetaPopulationSpec::constant(sweep.beta1_grid[i1]);
    cfg.beta.stability = BetaPopulationSpec::constant(sweep.beta2_grid[i2]);
    cfg.seed = cell_seed(sweep.base.seed, i1, i2, replicate);
    cfg
}

fn run_cell(sweep: &SweepConfig, i1: usize, i2: usize) -> Result<CellResult> {
    let mut pooled: Option<Vec<HistogramAccumulator>> = None;
    let mut seeds = Vec::with_capacity(sweep.replicates);
    let mut means = Vec::with_capacity(sweep.replicates);
    for rep in 0..sweep.replicates {
        let cfg = cell_config(sweep, i1, i2, rep);
        seeds.push(cfg.seed);
        let result = run_simulation(&cfg)?;
        means.push(result.class_mean_adoption());
        let accs = result.histogram_accumulators()?;
        match pooled.as_mut() {
            None => pooled = Some(accs),
            Some(p) => {
                for (acc, new) in p.iter_mut().zip(&accs) {
                    acc.merge(new)?;
                }
            }
        }
    }
    Ok(CellResult {
        beta1_index: i1,
        beta2_index: i2,
        beta1: sweep.beta1_grid[i1],
        beta2: sweep.beta2_grid[i2],
        seeds,
        class_mean_adoption: means,
        histograms: pooled.expect("replicates >= 1").iter().map(HistogramAccumulator::finish).collect(),
    })
}

/// Run every grid cell on a bounded worker pool; results ordered by cell index.
pub fn run_sweep(sweep: &SweepConfig) -> Result<Vec<CellResult>> {
    sweep.validate()?;
    let cells: Vec<(usize, usize)> = (0..sweep.beta1_grid.len())
        .flat_map(|i| (0..sweep.beta2_grid.len()).map(move |j| (i, j)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sweep.parallelism)
        .build()
        .map_err(|e| Error::config(format!("cannot build worker pool: {e}")))?;
    pool.install(|| cells.par_iter().map(|&(i, j)| run_cell(sweep, i, j)).collect())
}

/// Heterogeneous population run paired with its representative-investor run.
#[derive(Clone, Debug)]
pub struct HeteroComparison {
    pub heterogeneous: SimulationResult,
    pub homogeneous: SimulationResult,
    /// Realised population means used as the representative investor.
    pub realized_means: InvestorProfile,
}

/// Run `config`'s population, then a run with constant attitudes equal to the
/// realised sample means. Both runs share the seed, so assets and initial
/// state coincide.
pub fn compare_heterogeneous(config: &SimConfig) -> Result<HeteroComparison> {
    if config.beta.is_homogeneous() {
        return Err(Error::config(
            "compare-hetero needs at least one non-constant attitude population \
             (e.g. beta.security = { kind = \"triangular_support\", lo = -4.0, hi = 4.0 }); \
             use simulate for constant attitudes",
        ));
    }
    let heterogeneous = run_simulation(config)?;
    let realized_means = heterogeneous.mean_profile();
    let mut homo_cfg = config.clone();
    homo_cfg.beta = AttitudeSpecs::constant(
        realized_means.beta_return,
        realized_means.beta_security,
        realized_means.beta_stability,
    );
    let homogeneous = run_simulation(&homo_cfg)?;
    Ok(HeteroComparison { heterogeneous, homogeneous, realized_means })
}
