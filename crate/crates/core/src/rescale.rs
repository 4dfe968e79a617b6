//! Attitude rescaling between feature ecosystems.
//!
//! For a feature-only acceptance weight with a common attitude `beta` on both
//! features, the moment E[(1 + e^{beta ds})(1 + e^{beta dxi})] over random asset
//! pairs summarises how selective investors are in a given ecosystem. Matching
//! this moment across two ecosystems yields the attitude `beta'` that makes the
//! second ecosystem behave like the first.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FeatureDistribution, CLASS_BOUNDARY};

/// Feature distributions of one ecosystem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EcosystemSpec {
    pub security: FeatureDistribution,
    pub stability: FeatureDistribution,
}

impl EcosystemSpec {
    pub fn uniform() -> Self {
        EcosystemSpec {
            security: FeatureDistribution::Uniform01,
            stability: FeatureDistribution::Uniform01,
        }
    }

    /// Density 2x on both features.
    pub fn triangular() -> Self {
        EcosystemSpec {
            security: FeatureDistribution::Triangular01,
            stability: FeatureDistribution::Triangular01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.security.validate()?;
        self.stability.validate()
    }
}

/// How the class-partitioned sum weights a (class j, class k) pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairWeighting {
    /// Independent draws: p_j p_k, with conditional expectations per class pair.
    WithReplacement,
    /// Second asset drawn without replacement from `n_assets`:
    /// p_j (n p_k - [j = k]) / (n - 1), with conditional expectations.
    WithoutReplacement { n_assets: usize },
    /// Weight p_j (n p_j - [j = k]) / n applied to the *unconditioned* region
    /// integrals. Not a probability average: it is 1/16 of the plain moment
    /// for uniform features and does not equal 4 at beta = 0.
    Unnormalised { n_assets: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MomentMethod {
    MonteCarlo { samples: usize },
    ClassQuadrature { nodes: usize, weighting: PairWeighting },
}

impl Default for MomentMethod {
    fn default() -> Self {
        MomentMethod::MonteCarlo { samples: 1_000_000 }
    }
}

impl MomentMethod {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MomentMethod::MonteCarlo { samples } if samples >= 2 => Ok(()),
            MomentMethod::ClassQuadrature { nodes, weighting } if nodes >= 1 => match weighting {
                PairWeighting::WithoutReplacement { n_assets } | PairWeighting::Unnormalised { n_assets }
                    if n_assets < 2 =>
                {
                    Err(Error::config("pair weighting needs n_assets >= 2"))
                }
                _ => Ok(()),
            },
            other => Err(Error::config(format!("invalid moment method {other:?}"))),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            MomentMethod::MonteCarlo { samples } => format!("monte_carlo({samples})"),
            MomentMethod::ClassQuadrature { nodes, weighting } => {
                let w = match weighting {
                    PairWeighting::WithReplacement => "with_replacement".to_string(),
                    PairWeighting::WithoutReplacement { n_assets } => {
                        format!("without_replacement:{n_assets}")
                    }
                    PairWeighting::Unnormalised { n_assets } => format!("unnormalised:{n_assets}"),
                };
                format!("class_quadrature({nodes},{w})")
            }
        }
    }

    pub fn samples(&self) -> usize {
        match *self {
            MomentMethod::MonteCarlo { samples } => samples,
            MomentMethod::ClassQuadrature { nodes, .. } => nodes,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub method: MomentMethod,
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P_{n-1}(x).
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Quadrature rule for `dist` restricted to [lo, hi): nodes with density-weighted weights.
fn region_rule(dist: &FeatureDistribution, lo: f64, hi: f64, include_hi: bool, n: usize) -> Vec<(f64, f64)> {
    if let FeatureDistribution::PointMass { value } = *dist {
        let inside = value >= lo && (value < hi || (include_hi && value <= hi));
        return if inside { vec![(value, 1.0)] } else { Vec::new() };
    }
    let mut cuts = vec![lo];
    cuts.extend(dist.breakpoints().into_iter().filter(|&b| b > lo && b < hi));
    cuts.push(hi);
    let (gx, gw) = gauss_legendre(n);
    let mut rule = Vec::with_capacity(n * (cuts.len() - 1));
    for seg in cuts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, w) in gx.iter().zip(&gw) {
            let node = mid + half * x;
            let density = dist.density(node).expect("continuous distribution");
            rule.push((node, w * half * density));
        }
    }
    rule
}

/// Per-axis pieces of the class sum for the low and high half of one feature.
pub struct AxisRule {
    /// Index 0: low region [0, boundary); index 1: high region [boundary, 1].
    regions: [Vec<(f64, f64)>; 2],
    mass: [f64; 2],
}

impl AxisRule {
    fn new(dist: &FeatureDistribution, nodes: usize) -> Self {
        let low = region_rule(dist, 0.0, CLASS_BOUNDARY, false, nodes);
        let high = region_rule(dist, CLASS_BOUNDARY, 1.0, true, nodes);
        let mass = if let FeatureDistribution::PointMass { .. } = dist {
            [low.iter().map(|p| p.1).sum(), high.iter().map(|p| p.1).sum()]
        } else {
            let p_high = dist.prob_high();
            [1.0 - p_high, p_high]
        };
        AxisRule { regions: [low, high], mass }
    }

    /// (integral of e^{beta x}, integral of e^{-beta x}) over each region, density-weighted.
    fn exp_moments(&self, beta: f64) -> [(f64, f64); 2] {
        self.regions.clone().map(|rule| {
            rule.iter().fold((0.0, 0.0), |(g, h), &(x, w)| {
                (g + w * (beta * x).exp(), h + w * (-beta * x).exp())
            })
        })
    }
}

/// Moment as a deterministic function of beta for one ecosystem.
pub enum MomentEvaluator {
    Sampled {
        delta_s: Vec<f64>,
        delta_xi: Vec<f64>,
        method: MomentMethod,
    },
    Quadrature {
        security: AxisRule,
        stability: AxisRule,
        weighting: PairWeighting,
        method: MomentMethod,
    },
}

/// Classes as (security region, stability region) with 1 = high.
const CLASS_REGIONS: [(usize, usize); 4] = [(1, 1), (0, 1), (1, 0), (0, 0)];

/// Uniform variates shared by the Monte Carlo evaluators of two ecosystems.
pub struct PairUniforms {
    u: Vec<[f64; 4]>,
}

impl PairUniforms {
    pub fn draw<R: Rng + ?Sized>(samples: usize, rng: &mut R) -> Self {
        PairUniforms {
            u: (0..samples)
                .map(|_| [rng.random(), rng.random(), rng.random(), rng.random()])
                .collect(),
        }
    }
}

const CHUNK: usize = 1 << 14;

impl MomentEvaluator {
    /// Build an evaluator. Monte Carlo methods draw their pair sample from `rng`.
    pub fn new<R: Rng + ?Sized>(eco: &EcosystemSpec, method: MomentMethod, rng: &mut R) -> Result<Self> {
        match method {
            MomentMethod::MonteCarlo { samples } => {
                method.validate()?;
                let uniforms = PairUniforms::draw(samples, rng);
                Self::from_uniforms(eco, method, &uniforms)
            }
            MomentMethod::ClassQuadrature { .. } => Self::from_uniforms(eco, method, &PairUniforms { u: Vec::new() }),
        }
    }

    /// Build an evaluator; Monte Carlo methods transform the given uniforms
    /// through the ecosystem's quantile functions (common random numbers).
    pub fn from_uniforms(eco: &EcosystemSpec, method: MomentMethod, uniforms: &PairUniforms) -> Result<Self> {
        eco.validate()?;
        method.validate()?;
        match method {
            MomentMethod::MonteCarlo { samples } => {
                if uniforms.u.len() < samples {
                    return Err(Error::config(format!(
                        "need {samples} uniform tuples, got {}",
                        uniforms.u.len()
                    )));
                }
                let (delta_s, delta_xi) = uniforms.u[..samples]
                    .iter()
                    .map(|u| {
                        let ds = eco.security.quantile(u[0]) - eco.security.quantile(u[2]);
                        let dx = eco.stability.quantile(u[1]) - eco.stability.quantile(u[3]);
                        (ds, dx)
                    })
                    .unzip();
                Ok(MomentEvaluator::Sampled { delta_s, delta_xi, method })
            }
            MomentMethod::ClassQuadrature { nodes, weighting } => Ok(MomentEvaluator::Quadrature {
                security: AxisRule::new(&eco.security, nodes),
                stability: AxisRule::new(&eco.stability, nodes),
                weighting,
                method,
            }),
        }
    }

    pub fn method(&self) -> MomentMethod {
        match self {
            MomentEvaluator::Sampled { method, .. } | MomentEvaluator::Quadrature { method, .. } => *method,
        }
    }

    pub fn evaluate(&self, beta: f64) -> MomentEstimate {
        match self {
            MomentEvaluator::Sampled { delta_s, delta_xi, method } => {
                let n = delta_s.len();
                let partials: Vec<(f64, f64)> = delta_s
                    .par_chunks(CHUNK)
                    .zip(delta_xi.par_chunks(CHUNK))
                    .map(|(cs, cx)| {
                        cs.iter().zip(cx).fold((0.0, 0.0), |(sum, sq), (&ds, &dx)| {
                            let term = (1.0 + (beta * ds).exp()) * (1.0 + (beta * dx).exp());
                            (sum + term, sq + term * term)
                        })
                    })
                    .collect();
                let (sum, sq) = partials.iter().fold((0.0, 0.0), |(a, b), &(s, q)| (a + s, b + q));
                let mean = sum / n as f64;
                let var = ((sq - sum * mean) / (n as f64 - 1.0)).max(0.0);
                MomentEstimate { value: mean, standard_error: (var / n as f64).sqrt(), method: *method }
            }
            MomentEvaluator::Quadrature { security, stability, weighting, method } => {
                let value = class_sum(security, stability, *weighting, beta);
                MomentEstimate { value, standard_error: 0.0, method: *method }
            }
        }
    }
}

fn class_sum(security: &AxisRule, stability: &AxisRule, weighting: PairWeighting, beta: f64) -> f64 {
    let es = security.exp_moments(beta);
    let ex = stability.exp_moments(beta);
    // Unconditioned integral of (1 + e^{beta (x - y)}) over region a x region b.
    let raw = |axis: &AxisRule, e: &[(f64, f64); 2], a: usize, b: usize| {
        axis.mass[a] * axis.mass[b] + e[a].0 * e[b].1
    };
    let prob: Vec<f64> = CLASS_REGIONS
        .iter()
        .map(|&(s, x)| security.mass[s] * stability.mass[x])
        .collect();

    let mut total = 0.0;
    let mut weight_sum = 0.0;
    for (j, &(sj, xj)) in CLASS_REGIONS.iter().enumerate() {
        for (k, &(sk, xk)) in CLASS_REGIONS.iter().enumerate() {
            if prob[j] == 0.0 || prob[k] == 0.0 {
                continue;
            }
            let same = if j == k { 1.0 } else { 0.0 };
            let i_s = raw(security, &es, sj, sk);
            let i_x = raw(stability, &ex, xj, xk);
            match weighting {
                PairWeighting::Unnormalised { n_assets } => {
                    let n = n_assets as f64;
                    total += prob[j] * (n * prob[j] - same) / n * i_s * i_x;
                }
                PairWeighting::WithReplacement | PairWeighting::WithoutReplacement { .. } => {
                    let w = match weighting {
                        PairWeighting::WithoutReplacement { n_assets } => {
                            let n = n_assets as f64;
                            (prob[j] * (n * prob[k] - same) / (n - 1.0)).max(0.0)
                        }
                        _ => prob[j] * prob[k],
                    };
                    let conditional = (i_s / (security.mass[sj] * security.mass[sk]))
                        * (i_x / (stability.mass[xj] * stability.mass[xk]));
                    total += w * conditional;
                    weight_sum += w;
                }
            }
        }
    }
    match weighting {
        PairWeighting::Unnormalised { .. } => total,
        _ => total / weight_sum,
    }
}

/// Estimate E[(1 + e^{beta ds})(1 + e^{beta dxi})] over random pairs from `eco`.
pub fn acceptance_moment<R: Rng + ?Sized>(
    beta: f64,
    eco: &EcosystemSpec,
    method: MomentMethod,
    rng: &mut R,
) -> Result<MomentEstimate> {
    if !beta.is_finite() {
        return Err(Error::domain("beta must be finite"));
    }
    Ok(MomentEvaluator::new(eco, method, rng)?.evaluate(beta))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaSolution {
    pub beta: f64,
    pub beta_prime: f64,
    /// Moment of the source ecosystem at `beta`.
    pub target_moment: f64,
    /// Moment of the destination ecosystem at `beta_prime`.
    pub matched_moment: f64,
    pub residual: f64,
    pub method: MomentMethod,
}

/// Grid points checked for monotonicity before bisection.
const SCAN_POINTS: usize = 16;
const MAX_BRACKET: f64 = 1024.0;

/// Find `beta'` (same sign as `beta`) matching the moment of `eco_from` at
/// `beta` with the moment of `eco_to`, to within `tol` in `beta'`.
pub fn solve_beta_prime<R: Rng + ?Sized>(
    beta: f64,
    eco_from: &EcosystemSpec,
    eco_to: &EcosystemSpec,
    method: MomentMethod,
    tol: f64,
    rng: &mut R,
) -> Result<BetaSolution> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::config(format!("tolerance {tol} must be positive")));
    }
    if !beta.is_finite() {
        return Err(Error::domain("beta must be finite"));
    }
    let (from, to) = match method {
        MomentMethod::MonteCarlo { samples } => {
            method.validate()?;
            let uniforms = PairUniforms::draw(samples, rng);
            (
                MomentEvaluator::from_uniforms(eco_from, method, &uniforms)?,
                MomentEvaluator::from_uniforms(eco_to, method, &uniforms)?,
            )
        }
        MomentMethod::ClassQuadrature { .. } => (
            MomentEvaluator::new(eco_from, method, rng)?,
            MomentEvaluator::new(eco_to, method, rng)?,
        ),
    };
    solve_with(beta, &from, &to, tol)
}

/// Root search on prepared evaluators.
pub fn solve_with(beta: f64, from: &MomentEvaluator, to: &MomentEvaluator, tol: f64) -> Result<BetaSolution> {
    let method = to.method();
    let target = from.evaluate(beta).value;
    let sign = if beta < 0.0 { -1.0 } else { 1.0 };
    let gap = |b: f64| to.evaluate(sign * b).value - target;
    let no_solution = |diagnostics: String| Error::NoSolution { beta, diagnostics };

    let at_zero = gap(0.0);
    if at_zero == 0.0 {
        return Ok(BetaSolution {
            beta,
            beta_prime: 0.0,
            target_moment: target,
            matched_moment: target,
            residual: 0.0,
            method,
        });
    }
    if at_zero > 0.0 {
        return Err(no_solution(format!(
            "target moment {target} lies below the destination moment at beta' = 0 ({})",
            target + at_zero
        )));
    }

    let mut lo = 0.0;
    let mut hi = beta.abs().max(0.25);
    loop {
        let g = gap(hi);
        if !g.is_finite() {
            return Err(no_solution(format!(
                "destination moment overflows at |beta'| = {hi} before reaching target {target}"
            )));
        }
        if g >= 0.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > MAX_BRACKET {
            return Err(no_solution(format!(
                "destination moment stays below target {target} up to |beta'| = {MAX_BRACKET}"
            )));
        }
    }

    let mut prev = f64::NEG_INFINITY;
    for k in 0..=SCAN_POINTS {
        let b = lo + (hi - lo) * k as f64 / SCAN_POINTS as f64;
        let g = gap(b);
        if g < prev - 1e-12 * target.abs().max(1.0) {
            return Err(no_solution(format!(
                "destination moment not monotone on [{lo}, {hi}] (sign {sign}): dips at {b}"
            )));
        }
        prev = g;
    }

    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if gap(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let beta_prime = sign * 0.5 * (lo + hi);
    let matched = to.evaluate(beta_prime).value;
    Ok(BetaSolution {
        beta,
        beta_prime,
        target_moment: target,
        matched_moment: matched,
        residual: matched - target,
        method,
    })
}

/// Solve over a grid of source attitudes with shared evaluators.
pub fn beta_prime_curve<R: Rng + ?Sized>(
    betas: &[f64],
    eco_from: &EcosystemSpec,
    eco_to: &EcosystemSpec,
    method: MomentMethod,
    tol: f64,
    rng: &mut R,
) -> Result<Vec<Result<BetaSolution>>> {
    let (from, to) = match method {
        MomentMethod::MonteCarlo { samples } => {
            method.validate()?;
            let uniforms = PairUniforms::draw(samples, rng);
            (
                MomentEvaluator::from_uniforms(eco_from, method, &uniforms)?,
                MomentEvaluator::from_uniforms(eco_to, method, &uniforms)?,
            )
        }
        MomentMethod::ClassQuadrature { .. } => (
            MomentEvaluator::new(eco_from, method, rng)?,
            MomentEvaluator::new(eco_to, method, rng)?,
        ),
    };
    Ok(betas.iter().map(|&b| solve_with(b, &from, &to, tol)).collect())
}
