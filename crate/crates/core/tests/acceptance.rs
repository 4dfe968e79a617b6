//! Acceptance gate. Each criterion prints one PASS/FAIL line. The process
//! exits nonzero when the set of failing criteria differs from `KNOWN_UNMET`,
//! so a regression or an unexpected pass both break the build.

mod common;

use std::time::Instant;

use cryptosel::dynamics::{sweep_step, MarketState, PairingPolicy, StepParams};
use cryptosel::model::{AssetClass, BetaPopulationSpec, CryptoAsset, FeatureDistribution, InvestorProfile};
use cryptosel::rescale::{solve_beta_prime, EcosystemSpec, MomentMethod};
use cryptosel::seed::SimRng;
use cryptosel::{compare_heterogeneous, run_simulation, AttitudeSpecs, FeatureSpecs, SimConfig, SimulationResult};
use rand::SeedableRng;

const SEEDS: std::ops::Range<u64> = 0..10;
/// Criteria that the model as specified does not reach on the fixed seeds.
const KNOWN_UNMET: [usize; 3] = [1, 5, 9];
const N_SEEDS: f64 = (SEEDS.end - SEEDS.start) as f64;
const CBDC: usize = 0;
const STABLE: usize = 1;
const CRYPTO: usize = 2;
const TOKEN: usize = 3;

fn verdict(id: u32, name: &str, pass: bool, detail: String) -> bool {
    println!("[{}] criterion {id} ({name}): {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn phase_config(seed: u64, b1: f64, b2: f64) -> SimConfig {
    SimConfig {
        seed,
        n_assets: 300,
        max_steps: 400,
        beta: AttitudeSpecs::constant(1.0, b1, b2),
        ..SimConfig::default()
    }
}

fn fmt_means(m: &[f64; 4]) -> String {
    format!("[{:.3}, {:.3}, {:.3}, {:.3}]", m[0], m[1], m[2], m[3])
}

/// Runs every seed and counts those satisfying `ok`.
fn count_seeds(b1: f64, b2: f64, ok: impl Fn(&SimulationResult) -> bool) -> (usize, [f64; 4]) {
    let mut hits = 0;
    let mut avg = [0.0; 4];
    for seed in SEEDS {
        let res = run_simulation(&phase_config(seed, b1, b2)).expect("run");
        let m = res.class_mean_adoption();
        for k in 0..4 {
            avg[k] += m[k] / N_SEEDS;
        }
        hits += ok(&res) as usize;
    }
    (hits, avg)
}

fn criterion_1() -> bool {
    let mut hits = 0;
    let mut slowest = 0f64;
    let mut failed = Vec::new();
    for seed in SEEDS {
        let start = Instant::now();
        let res = run_simulation(&phase_config(seed, 1.0, 1.0)).expect("run");
        slowest = slowest.max(start.elapsed().as_secs_f64());
        let m = res.class_mean_adoption();
        let ok = m[CBDC] > m[CRYPTO] && m[STABLE] > m[TOKEN] && m[CBDC] + m[STABLE] > m[CRYPTO] + m[TOKEN];
        if ok {
            hits += 1;
        } else {
            failed.push(seed);
        }
    }
    verdict(
        1,
        "baseline phase",
        hits >= 8 && slowest < 10.0,
        format!("{hits}/10 seeds ordered (need 8), failing seeds {failed:?}; slowest seed {slowest:.2} s (limit 10 s)"),
    )
}

fn criterion_2() -> bool {
    let (hits, avg) = count_seeds(0.01, 0.01, |res| {
        let m = res.class_mean_adoption();
        // R_tot is read off the recorded time series, which ends when the dynamics stop.
        let series_end = res.trajectory.last().expect("recorded").r_tot;
        m.iter().all(|&a| (a - 0.5).abs() <= 0.15) && series_end > res.initial.r_tot()
    });
    verdict(2, "feature-blind phase", hits >= 8, format!("{hits}/10 seeds (need 8); mean adoption {}", fmt_means(&avg)))
}

fn criterion_3() -> bool {
    let (hits, avg) = count_seeds(-2.0, -2.0, |res| {
        let m = res.class_mean_adoption();
        m[CRYPTO] > m[CBDC] && m[TOKEN] > m[STABLE] && m[CRYPTO] + m[TOKEN] > m[CBDC] + m[STABLE]
    });
    verdict(3, "risk-prone reversal", hits >= 8, format!("{hits}/10 seeds (need 8); mean adoption {}", fmt_means(&avg)))
}

fn criterion_4() -> bool {
    let (s_hits, s_avg) = count_seeds(2.0, 0.01, |res| {
        let m = res.class_mean_adoption();
        m[CBDC].min(m[CRYPTO]) > m[STABLE].max(m[TOKEN])
    });
    let (x_hits, x_avg) = count_seeds(0.01, 2.0, |res| {
        let m = res.class_mean_adoption();
        m[CBDC].min(m[STABLE]) > m[CRYPTO].max(m[TOKEN])
    });
    verdict(
        4,
        "single-attribute gating",
        s_hits >= 8 && x_hits >= 8,
        format!(
            "security-only {s_hits}/10 {}, stability-only {x_hits}/10 {} (need 8 each)",
            fmt_means(&s_avg),
            fmt_means(&x_avg)
        ),
    )
}

/// β' for β = 1, triangular to uniform, with the default moment method.
fn calibrated_beta_prime() -> cryptosel::rescale::BetaSolution {
    let mut rng = SimRng::seed_from_u64(0);
    solve_beta_prime(1.0, &EcosystemSpec::triangular(), &EcosystemSpec::uniform(), MomentMethod::default(), 1e-3, &mut rng)
        .expect("solvable")
}

fn criterion_5() -> bool {
    let start = Instant::now();
    let sol = calibrated_beta_prime();
    let mut rng = SimRng::seed_from_u64(1);
    let uni = EcosystemSpec::uniform();
    let same = solve_beta_prime(1.0, &uni, &uni, MomentMethod::default(), 1e-3, &mut rng).expect("solvable");
    let secs = start.elapsed().as_secs_f64();
    let in_range = (3.15..=4.15).contains(&sol.beta_prime);
    let round_trip = (same.beta_prime - 1.0).abs() <= 1e-2;
    verdict(
        5,
        "rescaling calibration",
        in_range && round_trip && secs < 30.0,
        format!(
            "beta' = {:.4} via {} (need [3.15, 4.15]); identical-ecosystem beta' = {:.4}; {secs:.1} s",
            sol.beta_prime,
            sol.method.label(),
            same.beta_prime
        ),
    )
}

fn mean_nonadoption(base: &SimConfig) -> [f64; 4] {
    let mut out = [0.0; 4];
    for seed in SEEDS {
        let res = run_simulation(&SimConfig { seed, ..base.clone() }).expect("run");
        for h in res.histograms().expect("histograms") {
            out[h.class.index()] += h.mean_nonadoption / N_SEEDS;
        }
    }
    out
}

fn criterion_6() -> bool {
    let beta_prime = calibrated_beta_prime().beta_prime;
    let triangular = SimConfig {
        n_assets: 200,
        features: FeatureSpecs {
            security: FeatureDistribution::Triangular01,
            stability: FeatureDistribution::Triangular01,
        },
        ..SimConfig::default()
    };
    let rescaled = SimConfig {
        n_assets: 200,
        beta: AttitudeSpecs::constant(1.0, beta_prime, beta_prime),
        ..SimConfig::default()
    };
    let t = mean_nonadoption(&triangular);
    let u = mean_nonadoption(&rescaled);
    let worst = (0..4).map(|k| (t[k] - u[k]).abs()).fold(0.0, f64::max);
    verdict(
        6,
        "rescaled equivalence",
        worst <= 0.15,
        format!(
            "beta' = {beta_prime:.3}; mean(1-a) triangular {} vs uniform rescaled {}; worst gap {worst:.3} (limit 0.15)",
            fmt_means(&t),
            fmt_means(&u)
        ),
    )
}

fn criterion_7() -> bool {
    let xis = [0.2, 0.5, 1.0];
    let assets = xis.iter().enumerate().map(|(i, &xi)| CryptoAsset::new(i, 0.5, xi, 0.5, 0.0).unwrap()).collect();
    let mut state = MarketState::new(assets);
    let params = StepParams { delta: 0.0, ..StepParams::default() };
    params.validate(true).expect("frozen dynamics");
    let investors = [InvestorProfile::uniform(1.0)];
    let mut rng = SimRng::seed_from_u64(7);
    let steps = 10_000;
    let mut incs = vec![Vec::with_capacity(steps); xis.len()];
    for _ in 0..steps {
        let before = state.returns_vector();
        sweep_step(&mut state, &investors, &params, PairingPolicy::PerfectMatching, &mut rng).unwrap();
        for (k, (new, old)) in state.returns_vector().iter().zip(before).enumerate() {
            incs[k].push(new - old);
        }
    }
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, &xi) in xis.iter().enumerate() {
        let n = incs[k].len() as f64;
        let mean = incs[k].iter().sum::<f64>() / n;
        let var = incs[k].iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let target = 1.0 / xi.max(params.noise_floor);
        let rel = (var / target - 1.0).abs();
        pass &= rel <= 0.10;
        parts.push(format!("xi={xi}: var {var:.3} vs {target:.3} ({:.1}%)", 100.0 * rel));
    }
    verdict(7, "noise calibration", pass, parts.join(", "))
}

fn criterion_8() -> bool {
    let mut failed = Vec::new();
    for (name, check) in common::INVARIANTS {
        if let Err(e) = check() {
            eprintln!("invariant '{name}' failed: {e}");
            failed.push(*name);
        }
    }
    verdict(
        8,
        "invariant suite",
        failed.is_empty(),
        format!("{}/{} property checks green; failing {failed:?}", common::INVARIANTS.len() - failed.len(), common::INVARIANTS.len()),
    )
}

fn criterion_9() -> bool {
    let mut hits = 0;
    let mut diffs = Vec::new();
    for seed in SEEDS {
        let mut cfg = SimConfig { seed, n_assets: 200, max_steps: 300, ..SimConfig::default() };
        cfg.beta.security = BetaPopulationSpec::TriangularSupport { lo: -4.0, hi: 4.0 };
        cfg.beta.stability = BetaPopulationSpec::TriangularSupport { lo: -4.0, hi: 4.0 };
        let cmp = compare_heterogeneous(&cfg).expect("comparison");
        let d = cmp.heterogeneous.class_mean_adoption()[TOKEN] - cmp.homogeneous.class_mean_adoption()[TOKEN];
        hits += (d.abs() >= 0.1) as usize;
        diffs.push(format!("{d:+.3}"));
    }
    verdict(
        9,
        "heterogeneity effect",
        hits >= 7,
        format!("{hits}/10 seeds with |token difference| >= 0.1 (need 7); differences (hetero - homo) [{}]", diffs.join(", ")),
    )
}

fn main() {
    assert_eq!(AssetClass::ALL.map(AssetClass::index), [CBDC, STABLE, CRYPTO, TOKEN]);
    let criteria: [fn() -> bool; 9] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
    ];
    let unmet: Vec<usize> = criteria.iter().enumerate().filter(|(_, c)| !c()).map(|(k, _)| k + 1).collect();
    println!(
        "acceptance: {}/{} criteria passed; unmet {unmet:?}, known unmet {KNOWN_UNMET:?}",
        criteria.len() - unmet.len(),
        criteria.len()
    );
    if unmet != KNOWN_UNMET {
        std::process::exit(1);
    }
}
