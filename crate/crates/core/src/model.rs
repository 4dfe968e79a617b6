//! Domain types: crypto assets, the four-class taxonomy, investor attitudes,
//! and the distributions used to sample asset features and investor populations.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Features at or above this value count as "high".
pub const CLASS_BOUNDARY: f64 = 0.5;

/// Asset class determined by the (security, stability) quadrant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AssetClass {
    /// High security, high stability.
    Cbdc,
    /// Low security, high stability.
    Stablecoin,
    /// High security, low stability.
    Cryptocurrency,
    /// Low security, low stability.
    CryptoToken,
}

impl AssetClass {
    pub const ALL: [AssetClass; 4] = [
        AssetClass::Cbdc,
        AssetClass::Stablecoin,
        AssetClass::Cryptocurrency,
        AssetClass::CryptoToken,
    ];

    /// Position in [`AssetClass::ALL`].
    pub fn index(self) -> usize {
        match self {
            AssetClass::Cbdc => 0,
            AssetClass::Stablecoin => 1,
            AssetClass::Cryptocurrency => 2,
            AssetClass::CryptoToken => 3,
        }
    }

    pub fn high_security(self) -> bool {
        matches!(self, AssetClass::Cbdc | AssetClass::Cryptocurrency)
    }

    pub fn high_stability(self) -> bool {
        matches!(self, AssetClass::Cbdc | AssetClass::Stablecoin)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AssetClass::Cbdc => "cbdc",
            AssetClass::Stablecoin => "stablecoin",
            AssetClass::Cryptocurrency => "cryptocurrency",
            AssetClass::CryptoToken => "crypto_token",
        }
    }
}

impl fmt::Display for AssetClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} = {x} outside [0, 1]")))
    }
}

/// Map a (security, stability) pair onto its class quadrant.
pub fn classify_asset(security: f64, stability: f64) -> Result<AssetClass> {
    check_unit("security", security)?;
    check_unit("stability", stability)?;
    Ok(classify_unchecked(security, stability))
}

fn classify_unchecked(security: f64, stability: f64) -> AssetClass {
    match (security >= CLASS_BOUNDARY, stability >= CLASS_BOUNDARY) {
        (true, true) => AssetClass::Cbdc,
        (false, true) => AssetClass::Stablecoin,
        (true, false) => AssetClass::Cryptocurrency,
        (false, false) => AssetClass::CryptoToken,
    }
}

/// Probability that an investor's binary adoption outcome is `k`, given adoption probability `a`.
pub fn bernoulli_adoption_pmf(k: u8, a: f64) -> Result<f64> {
    check_unit("adoption", a)?;
    match k {
        1 => Ok(a),
        0 => Ok(1.0 - a),
        _ => Err(Error::domain(format!("adoption outcome k = {k} not in {{0, 1}}"))),
    }
}

/// One crypto asset: fixed features plus dynamic adoption/return state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CryptoAsset {
    id: usize,
    security: f64,
    stability: f64,
    class: AssetClass,
    pub adoption: f64,
    pub expected_return: f64,
}

impl CryptoAsset {
    pub fn new(
        id: usize,
        security: f64,
        stability: f64,
        adoption: f64,
        expected_return: f64,
    ) -> Result<Self> {
        let class = classify_asset(security, stability)?;
        check_unit("adoption", adoption)?;
        if !expected_return.is_finite() {
            return Err(Error::domain("expected return must be finite"));
        }
        Ok(CryptoAsset {
            id,
            security,
            stability,
            class,
            adoption,
            expected_return,
        })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn security(&self) -> f64 {
        self.security
    }

    pub fn stability(&self) -> f64 {
        self.stability
    }

    pub fn class(&self) -> AssetClass {
        self.class
    }
}

/// Attitude parameters of one investor toward total return, security and stability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvestorProfile {
    pub beta_return: f64,
    pub beta_security: f64,
    pub beta_stability: f64,
}

impl InvestorProfile {
    pub fn new(beta_return: f64, beta_security: f64, beta_stability: f64) -> Self {
        InvestorProfile {
            beta_return,
            beta_security,
            beta_stability,
        }
    }

    /// The same attitude toward all three quantities.
    pub fn uniform(beta: f64) -> Self {
        Self::new(beta, beta, beta)
    }
}

/// Distribution of an asset feature on [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureDistribution {
    /// Density 1 on [0, 1].
    Uniform01,
    /// Density 2x on [0, 1].
    Triangular01,
    /// General triangular density on `lo <= mode <= hi` inside [0, 1].
    Triangular { lo: f64, mode: f64, hi: f64 },
    /// Degenerate distribution at a single point.
    PointMass { value: f64 },
}

impl FeatureDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FeatureDistribution::Uniform01 | FeatureDistribution::Triangular01 => Ok(()),
            FeatureDistribution::Triangular { lo, mode, hi } => {
                check_unit("triangular lo", lo)?;
                check_unit("triangular hi", hi)?;
                if !(lo <= mode && mode <= hi && lo < hi) {
                    return Err(Error::config(format!(
                        "triangular needs lo <= mode <= hi and lo < hi, got ({lo}, {mode}, {hi})"
                    )));
                }
                Ok(())
            }
            FeatureDistribution::PointMass { value } => check_unit("point mass", value),
        }
    }

    /// Inverse-CDF sampling; output always in [0, 1].
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.quantile(u)
    }

    /// Inverse CDF.
    pub fn quantile(&self, u: f64) -> f64 {
        let x = match *self {
            FeatureDistribution::Uniform01 => u,
            FeatureDistribution::Triangular01 => u.sqrt(),
            FeatureDistribution::Triangular { lo, mode, hi } => {
                let width = hi - lo;
                let split = (mode - lo) / width;
                if u < split {
                    lo + (u * width * (mode - lo)).sqrt()
                } else {
                    hi - ((1.0 - u) * width * (hi - mode)).sqrt()
                }
            }
            FeatureDistribution::PointMass { value } => value,
        };
        x.clamp(0.0, 1.0)
    }

    /// Density at `x`; `None` for the point mass.
    pub fn density(&self, x: f64) -> Option<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Some(0.0);
        }
        match *self {
            FeatureDistribution::Uniform01 => Some(1.0),
            FeatureDistribution::Triangular01 => Some(2.0 * x),
            FeatureDistribution::Triangular { lo, mode, hi } => {
                let width = hi - lo;
                let d = if x < lo || x > hi {
                    0.0
                } else if x < mode {
                    2.0 * (x - lo) / (width * (mode - lo))
                } else if x > mode {
                    2.0 * (hi - x) / (width * (hi - mode))
                } else {
                    2.0 / width
                };
                Some(d)
            }
            FeatureDistribution::PointMass { .. } => None,
        }
    }

    /// Points where the density is not smooth, including the support ends.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            FeatureDistribution::Uniform01 | FeatureDistribution::Triangular01 => vec![0.0, 1.0],
            FeatureDistribution::Triangular { lo, mode, hi } => {
                let mut pts = vec![lo, mode, hi];
                pts.dedup();
                pts
            }
            FeatureDistribution::PointMass { value } => vec![value],
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            FeatureDistribution::Uniform01 => 0.5,
            FeatureDistribution::Triangular01 => 2.0 / 3.0,
            FeatureDistribution::Triangular { lo, mode, hi } => (lo + mode + hi) / 3.0,
            FeatureDistribution::PointMass { value } => value,
        }
    }

    /// Probability of a draw at or above [`CLASS_BOUNDARY`].
    pub fn prob_high(&self) -> f64 {
        let b = CLASS_BOUNDARY;
        match *self {
            FeatureDistribution::Uniform01 => 1.0 - b,
            FeatureDistribution::Triangular01 => 1.0 - b * b,
            FeatureDistribution::Triangular { lo, mode, hi } => {
                let width = hi - lo;
                let cdf = if b <= lo {
                    0.0
                } else if b >= hi {
                    1.0
                } else if b <= mode {
                    (b - lo).powi(2) / (width * (mode - lo))
                } else {
                    1.0 - (hi - b).powi(2) / (width * (hi - mode))
                };
                1.0 - cdf
            }
            FeatureDistribution::PointMass { value } => {
                if value >= b {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Distribution of one attitude parameter across an investor population.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaPopulationSpec {
    Constant { value: f64 },
    /// Density rising linearly from zero at `lo` to its peak at `hi`:
    /// f(x) = 2 (x - lo) / (hi - lo)^2.
    TriangularSupport { lo: f64, hi: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl BetaPopulationSpec {
    pub fn constant(value: f64) -> Self {
        BetaPopulationSpec::Constant { value }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, BetaPopulationSpec::Constant { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BetaPopulationSpec::Constant { value } if value.is_finite() => Ok(()),
            BetaPopulationSpec::TriangularSupport { lo, hi } | BetaPopulationSpec::Uniform { lo, hi }
                if lo.is_finite() && hi.is_finite() && lo < hi =>
            {
                Ok(())
            }
            other => Err(Error::config(format!("invalid beta population spec {other:?}"))),
        }
    }

    /// Closed interval containing every draw.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            BetaPopulationSpec::Constant { value } => (value, value),
            BetaPopulationSpec::TriangularSupport { lo, hi } | BetaPopulationSpec::Uniform { lo, hi } => {
                (lo, hi)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            BetaPopulationSpec::Constant { value } => value,
            BetaPopulationSpec::TriangularSupport { lo, hi } => lo + 2.0 * (hi - lo) / 3.0,
            BetaPopulationSpec::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            BetaPopulationSpec::Constant { value } => value,
            BetaPopulationSpec::TriangularSupport { lo, hi } => {
                let u: f64 = rng.random();
                (lo + (hi - lo) * u.sqrt()).clamp(lo, hi)
            }
            BetaPopulationSpec::Uniform { lo, hi } => {
                let u: f64 = rng.random();
                (lo + (hi - lo) * u).clamp(lo, hi)
            }
        }
    }
}

/// Initial value rule for a dynamic asset variable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitValue {
    Constant { value: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl InitValue {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            InitValue::Constant { value } => value,
            InitValue::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }

    fn validate(&self, name: &str, unit: bool) -> Result<()> {
        let (lo, hi) = match *self {
            InitValue::Constant { value } => (value, value),
            InitValue::Uniform { lo, hi } => (lo, hi),
        };
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::config(format!("{name}: invalid range [{lo}, {hi}]")));
        }
        if unit && (lo < 0.0 || hi > 1.0) {
            return Err(Error::config(format!("{name}: range [{lo}, {hi}] leaves [0, 1]")));
        }
        Ok(())
    }
}

/// How adoption and expected return are initialised.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitPolicy {
    pub adoption: InitValue,
    pub expected_return: InitValue,
}

impl Default for InitPolicy {
    fn default() -> Self {
        InitPolicy {
            adoption: InitValue::Uniform { lo: 0.0, hi: 1.0 },
            expected_return: InitValue::Uniform { lo: -1.0, hi: 1.0 },
        }
    }
}

impl InitPolicy {
    pub fn validate(&self) -> Result<()> {
        self.adoption.validate("initial adoption", true)?;
        self.expected_return.validate("initial expected return", false)
    }
}

/// Draw `n` assets with independent features and initial state per `init`.
pub fn sample_assets<R: Rng + ?Sized>(
    n: usize,
    dist_security: &FeatureDistribution,
    dist_stability: &FeatureDistribution,
    init: &InitPolicy,
    rng: &mut R,
) -> Result<Vec<CryptoAsset>> {
    if n < 2 {
        return Err(Error::config(format!("need at least 2 assets to form pairs, got {n}")));
    }
    dist_security.validate()?;
    dist_stability.validate()?;
    init.validate()?;
    (0..n)
        .map(|id| {
            let s = dist_security.sample(rng);
            let xi = dist_stability.sample(rng);
            let a = init.adoption.sample(rng);
            let r = init.expected_return.sample(rng);
            CryptoAsset::new(id, s, xi, a, r)
        })
        .collect()
}

/// Draw `k` investor profiles, one independent draw per attitude component.
pub fn sample_investors<R: Rng + ?Sized>(
    k: usize,
    spec_return: &BetaPopulationSpec,
    spec_security: &BetaPopulationSpec,
    spec_stability: &BetaPopulationSpec,
    rng: &mut R,
) -> Result<Vec<InvestorProfile>> {
    if k == 0 {
        return Err(Error::config("investor population must be nonempty"));
    }
    spec_return.validate()?;
    spec_security.validate()?;
    spec_stability.validate()?;
    Ok((0..k)
        .map(|_| {
            let b0 = spec_return.sample(rng);
            let b1 = spec_security.sample(rng);
            let b2 = spec_stability.sample(rng);
            InvestorProfile::new(b0, b1, b2)
        })
        .collect())
}
