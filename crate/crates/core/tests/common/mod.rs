//! Invariant checks shared by the property tests and the acceptance suite.
#![allow(dead_code)]

use cryptosel::dynamics::{
    acceptance_probability, propose_adoption_update, sweep_step, MarketState, PairingPolicy, StepParams,
};
use cryptosel::equilibration::{class_centroid, contract_step, detect_equilibrium, finalize, EquilibriumParams};
use cryptosel::metrics::nonadoption_histogram;
use cryptosel::model::{AssetClass, CryptoAsset, FeatureDistribution, InvestorProfile};
use cryptosel::seed::SimRng;
use cryptosel::{run_simulation, SimConfig};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::SeedableRng;

pub type Check = fn() -> Result<(), String>;

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() })
}

fn report<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

fn unit() -> impl Strategy<Value = f64> {
    0.0..=1.0f64
}

fn assets_strategy(max: usize) -> impl Strategy<Value = Vec<(f64, f64, f64, f64)>> {
    prop::collection::vec((unit(), unit(), unit(), -3.0..3.0f64), 2..max)
}

fn build(points: &[(f64, f64, f64, f64)]) -> MarketState {
    MarketState::new(
        points
            .iter()
            .enumerate()
            .map(|(i, &(s, xi, a, r))| CryptoAsset::new(i, s, xi, a, r).unwrap())
            .collect(),
    )
}

fn beta() -> impl Strategy<Value = f64> {
    -5.0..5.0f64
}

/// Adoption stays in [0, 1] through arbitrary steps.
pub fn adoption_clamping() -> Result<(), String> {
    let strat = (assets_strategy(24), beta(), beta(), beta(), 0.01..=1.0f64, any::<u64>());
    report(runner(128).run(&strat, |(pts, b0, b1, b2, delta, seed)| {
        let mut st = build(&pts);
        let params = StepParams { delta, ..StepParams::default() };
        let inv = [InvestorProfile::new(b0, b1, b2)];
        let mut rng = SimRng::seed_from_u64(seed);
        for _ in 0..5 {
            sweep_step(&mut st, &inv, &params, PairingPolicy::PerfectMatching, &mut rng).unwrap();
            for a in st.assets() {
                prop_assert!((0.0..=1.0).contains(&a.adoption), "a = {}", a.adoption);
            }
        }
        Ok(())
    }))
}

/// A proposal conserves the pair sum unless a bound is hit.
pub fn pair_sum_conservation() -> Result<(), String> {
    let strat = (unit(), unit(), 0.0..=1.0f64);
    report(runner(512).run(&strat, |(ai, aj, delta)| {
        let (ni, nj) = propose_adoption_update(ai, aj, delta);
        prop_assert!((0.0..=1.0).contains(&ni) && (0.0..=1.0).contains(&nj));
        prop_assert!((ni + nj - ai - aj).abs() <= delta + 1e-12);
        if ai >= delta && aj <= 1.0 - delta {
            prop_assert!((ni + nj - ai - aj).abs() < 1e-12);
        }
        Ok(())
    }))
}

/// Each sweep conserves total adoption up to clamping losses.
pub fn step_conserves_unclamped_total() -> Result<(), String> {
    let strat = (prop::collection::vec((unit(), unit(), 0.2..=0.8f64, -3.0..3.0f64), 2..30), any::<u64>());
    report(runner(128).run(&strat, |(pts, seed)| {
        let mut st = build(&pts);
        let before: f64 = st.adoption_vector().iter().sum();
        let params = StepParams { delta: 0.1, ..StepParams::default() };
        let mut rng = SimRng::seed_from_u64(seed);
        sweep_step(&mut st, &[InvestorProfile::uniform(1.0)], &params, PairingPolicy::PerfectMatching, &mut rng)
            .unwrap();
        let after: f64 = st.adoption_vector().iter().sum();
        prop_assert!((before - after).abs() < 1e-9);
        Ok(())
    }))
}

/// 0 < p <= 1, 1/8 at zero, nonincreasing in ΔR and cost, and each factor
/// complements its mirror image.
pub fn acceptance_bounds_and_monotonicity() -> Result<(), String> {
    let strat = (-10.0..10.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.0..5.0f64, beta(), beta(), 0.0..2.0f64, 0.0..3.0f64);
    report(runner(512).run(&strat, |(dr, ds, dx, b0, b1, b2, bump, cost)| {
        let prof = InvestorProfile::new(b0, b1, b2);
        let p = acceptance_probability(dr, ds, dx, &prof, 0.0).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        let higher = acceptance_probability(dr + bump, ds, dx, &prof, 0.0).unwrap();
        prop_assert!(higher <= p + 1e-15);
        let costly = acceptance_probability(dr, ds, dx, &prof, cost).unwrap();
        prop_assert!(costly <= p + 1e-15);
        let zero = acceptance_probability(0.0, 0.0, 0.0, &prof, 0.0).unwrap();
        prop_assert!((zero - 0.125).abs() < 1e-15);
        let only_s = InvestorProfile::new(0.0, b1, 0.0);
        let fwd = acceptance_probability(0.0, ds, 0.0, &only_s, 0.0).unwrap();
        let back = acceptance_probability(0.0, -ds, 0.0, &only_s, 0.0).unwrap();
        prop_assert!(((fwd + back) - 0.25).abs() < 1e-12, "{fwd} + {back}");
        Ok(())
    }))
}

/// A contraction round halves the distance of every far asset to its class centroid.
pub fn contraction_halving() -> Result<(), String> {
    let strat = assets_strategy(30);
    report(runner(256).run(&strat, |pts| {
        let mut st = build(&pts);
        let params = EquilibriumParams::default();
        let before = st.clone();
        let centroids: Vec<_> = AssetClass::ALL.iter().map(|&c| class_centroid(&before, c)).collect();
        contract_step(&mut st, &params);
        for (old, new) in before.assets().iter().zip(st.assets()) {
            let c = &centroids[old.class().index()];
            let d_old = (c.mean_adoption - old.adoption).hypot(c.mean_return - old.expected_return);
            let d_new = (c.mean_adoption - new.adoption).hypot(c.mean_return - new.expected_return);
            if d_old >= params.theta {
                prop_assert!((d_new - 0.5 * d_old).abs() < 1e-9, "{d_old} -> {d_new}");
            } else {
                prop_assert_eq!(old, new);
            }
        }
        Ok(())
    }))
}

/// When every member of a class is far from the centroid, a round keeps the centroid fixed.
pub fn contraction_keeps_centroid() -> Result<(), String> {
    let strat = prop::collection::vec((0.2..=0.8f64, 5.0..8.0f64), 2..20);
    report(runner(256).run(&strat, |pts| {
        // Alternate far above and far below zero return so every asset sits
        // at least theta from the class centroid.
        let points: Vec<_> = pts
            .iter()
            .enumerate()
            .map(|(i, &(a, r))| (0.9, 0.9, a, if i % 2 == 0 { r } else { -r }))
            .collect();
        let mut st = build(&points);
        let before = class_centroid(&st, AssetClass::Cbdc);
        let params = EquilibriumParams::default();
        prop_assume!(st.assets().iter().all(|x| {
            (x.adoption - before.mean_adoption).hypot(x.expected_return - before.mean_return) >= params.theta
        }));
        prop_assert_eq!(contract_step(&mut st, &params), points.len());
        let after = class_centroid(&st, AssetClass::Cbdc);
        prop_assert!((after.mean_adoption - before.mean_adoption).abs() < 1e-12);
        prop_assert!((after.mean_return - before.mean_return).abs() < 1e-12);
        Ok(())
    }))
}

/// Contraction terminates with every asset inside θ of its class centroid.
pub fn contraction_termination() -> Result<(), String> {
    let strat = assets_strategy(40);
    report(runner(128).run(&strat, |pts| {
        let st = build(&pts);
        let params = EquilibriumParams::default();
        let (out, report) = finalize(&st, &st, &params);
        prop_assert!(report.converged);
        // Spread is at most ~6.1, so about log2(6.1 / 0.05) halvings per
        // straggler; the centroid drift adds a bounded number of rounds.
        prop_assert!(report.rounds <= 200, "rounds {}", report.rounds);
        for a in out.assets() {
            let c = class_centroid(&out, a.class());
            prop_assert!((c.mean_adoption - a.adoption).hypot(c.mean_return - a.expected_return) < params.theta);
        }
        Ok(())
    }))
}

/// Non-adoption histograms sum to 1 per nonempty class and 0 otherwise.
pub fn histogram_normalisation() -> Result<(), String> {
    let strat = (assets_strategy(60), 2usize..40);
    report(runner(256).run(&strat, |(pts, bins)| {
        let st = build(&pts);
        for h in nonadoption_histogram(&st, bins).unwrap() {
            let total: f64 = h.freqs.iter().sum();
            prop_assert_eq!(h.freqs.len(), bins);
            if h.count > 0 {
                prop_assert!((total - 1.0).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(&h.mean_nonadoption));
            } else {
                prop_assert_eq!(total, 0.0);
            }
        }
        Ok(())
    }))
}

/// The same seed replays bit-exactly.
pub fn seed_determinism() -> Result<(), String> {
    let strat = (any::<u64>(), 2usize..40, 1usize..20);
    report(runner(24).run(&strat, |(seed, n_assets, max_steps)| {
        let cfg = SimConfig { seed, n_assets, max_steps, ..SimConfig::default() };
        let a = run_simulation(&cfg).unwrap();
        let b = run_simulation(&cfg).unwrap();
        prop_assert_eq!(&a.final_state, &b.final_state);
        // Empty-class centroids are NaN, so compare the exact printed form.
        prop_assert_eq!(format!("{:?}", a.trajectory), format!("{:?}", b.trajectory));
        prop_assert_eq!(&a.investors, &b.investors);
        Ok(())
    }))
}

/// Once detected, t* is unaffected by anything appended to the history.
pub fn detection_is_stable() -> Result<(), String> {
    let strat = (prop::collection::vec(0usize..3, 0..40), prop::collection::vec(0usize..3, 0..20), 1usize..6);
    report(runner(512).run(&strat, |(hist, tail, patience)| {
        let p = EquilibriumParams { patience, ..EquilibriumParams::default() };
        if let Some(t) = detect_equilibrium(&hist, &p) {
            prop_assert!(t >= patience && t <= hist.len());
            prop_assert!(hist[t - patience..t].iter().all(|&x| x == 0));
            let mut longer = hist.clone();
            longer.extend(tail);
            prop_assert_eq!(detect_equilibrium(&longer, &p), Some(t));
        }
        Ok(())
    }))
}

/// Sampled features stay in [0, 1] for every supported distribution.
pub fn features_in_unit_interval() -> Result<(), String> {
    let dists = prop_oneof![
        Just(FeatureDistribution::Uniform01),
        Just(FeatureDistribution::Triangular01),
        (0.0..0.4f64, 0.0..1.0f64, 0.6..=1.0f64).prop_map(|(lo, m, hi)| FeatureDistribution::Triangular {
            lo,
            mode: lo + m * (hi - lo),
            hi
        }),
        unit().prop_map(|value| FeatureDistribution::PointMass { value }),
    ];
    report(runner(256).run(&(dists, any::<u64>()), |(d, seed)| {
        let mut rng = SimRng::seed_from_u64(seed);
        for _ in 0..64 {
            let x = d.sample(&mut rng);
            if !(0.0..=1.0).contains(&x) {
                return Err(TestCaseError::fail(format!("{d:?} sampled {x}")));
            }
        }
        Ok(())
    }))
}

pub const INVARIANTS: &[(&str, Check)] = &[
    ("adoption clamping", adoption_clamping),
    ("pair-sum conservation", pair_sum_conservation),
    ("step conserves unclamped total", step_conserves_unclamped_total),
    ("acceptance bounds/monotonicity/1-8-at-zero", acceptance_bounds_and_monotonicity),
    ("contraction halving", contraction_halving),
    ("contraction keeps full-class centroid", contraction_keeps_centroid),
    ("contraction termination", contraction_termination),
    ("histogram normalisation", histogram_normalisation),
    ("bit-exact seed determinism", seed_determinism),
    ("equilibrium detection stability", detection_is_stable),
    ("features in [0, 1]", features_in_unit_interval),
];
