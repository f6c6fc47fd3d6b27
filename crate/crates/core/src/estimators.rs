//! Noisy estimators D̂ of the log target ratio D, their exact cdfs, and the
//! quantile coupling that maps any of them onto a normal estimator.

use rand::RngCore;
use rand_distr::{ChiSquared, Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::RawSource;
use crate::special::{
    reg_gamma_tails, reg_gamma_upper_inv, std_normal_cdf, std_normal_quantile, std_normal_quantile_from_tails,
};

/// Smallest tail probability passed to Φ⁻¹ by the normal coupling.
pub const COUPLING_TAIL_FLOOR: f64 = 1e-16;

/// How the sample variance of the normal-with-sample-variance estimator is
/// produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleVarianceMode {
    /// One draw of (m−1)s²/σ² ~ χ²(m−1) alongside the mean.
    #[default]
    ChiSquare,
    /// m raw normals; mean and sample variance computed from them.
    RawNormals,
}

/// A D-estimator computed from m raw random inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorModel {
    /// D̂ ~ N(D, σ²/m).
    ExactNormal { sigma2: f64, m: usize },
    /// D̂ = D − 1 + m / Σ Wᵢ with Wᵢ ~ Exp(1).
    InvGammaShifted { m: usize },
    /// D̂ ~ N(D, σ²/m) together with a sample variance s².
    NormalWithSampleVariance { sigma2: f64, m: usize, mode: SampleVarianceMode },
}

/// A single realized estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub s2: Option<f64>,
}

/// Output of the normal coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledValue {
    pub value: f64,
    /// Set when the cdf tail had to be floored at [`COUPLING_TAIL_FLOOR`].
    pub clamped: bool,
}

impl EstimatorModel {
    pub fn exact_normal(sigma2: f64, m: usize) -> Result<Self> {
        check_m(m, 1)?;
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidParameter {
                name: "sigma2",
                reason: format!("must be non-negative, got {sigma2}"),
            });
        }
        Ok(Self::ExactNormal { sigma2, m })
    }

    pub fn inv_gamma_shifted(m: usize) -> Result<Self> {
        check_m(m, 1)?;
        Ok(Self::InvGammaShifted { m })
    }

    pub fn normal_with_sample_variance(sigma2: f64, m: usize) -> Result<Self> {
        Self::normal_with_sample_variance_mode(sigma2, m, SampleVarianceMode::ChiSquare)
    }

    pub fn normal_with_sample_variance_mode(sigma2: f64, m: usize, mode: SampleVarianceMode) -> Result<Self> {
        check_m(m, 2)?;
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidParameter { name: "sigma2", reason: format!("must be positive, got {sigma2}") });
        }
        Ok(Self::NormalWithSampleVariance { sigma2, m, mode })
    }

    pub fn m(&self) -> usize {
        match *self {
            Self::ExactNormal { m, .. } | Self::InvGammaShifted { m } | Self::NormalWithSampleVariance { m, .. } => m,
        }
    }

    /// Limit of var(√m · D̂) as m → ∞.
    pub fn sigma2_asymptotic(&self) -> f64 {
        match *self {
            Self::ExactNormal { sigma2, .. } | Self::NormalWithSampleVariance { sigma2, .. } => sigma2,
            Self::InvGammaShifted { .. } => 1.0,
        }
    }

    pub fn has_sample_variance(&self) -> bool {
        matches!(self, Self::NormalWithSampleVariance { .. })
    }

    pub fn is_exactly_normal(&self) -> bool {
        !matches!(self, Self::InvGammaShifted { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::ExactNormal { .. } => "exact_normal",
            Self::InvGammaShifted { .. } => "inv_gamma_shifted",
            Self::NormalWithSampleVariance { .. } => "normal_with_sample_variance",
        }
    }

    /// Exact E(D̂) − D and var(D̂) where finite.
    pub fn exact_bias_variance(&self) -> Option<(f64, f64)> {
        match *self {
            Self::ExactNormal { sigma2, m } | Self::NormalWithSampleVariance { sigma2, m, .. } => {
                Some((0.0, sigma2 / m as f64))
            }
            Self::InvGammaShifted { m } if m > 2 => {
                let m = m as f64;
                Some((1.0 / (m - 1.0), m * m / ((m - 1.0) * (m - 1.0) * (m - 2.0))))
            }
            Self::InvGammaShifted { .. } => None,
        }
    }

    /// Builds the estimate centred on `d_true` from this model's raw inputs.
    pub fn estimate(&self, d_true: f64, raw: &[f64]) -> Estimate {
        match *self {
            Self::ExactNormal { sigma2, m } => {
                Estimate { value: d_true + (sigma2 / m as f64).sqrt() * raw[0], s2: None }
            }
            Self::InvGammaShifted { m } => {
                let total: f64 = raw[..m].iter().sum();
                Estimate { value: d_true - 1.0 + m as f64 / total, s2: None }
            }
            Self::NormalWithSampleVariance { sigma2, m, mode } => match mode {
                SampleVarianceMode::ChiSquare => Estimate {
                    value: d_true + (sigma2 / m as f64).sqrt() * raw[0],
                    s2: Some(sigma2 * raw[1] / (m - 1) as f64),
                },
                SampleVarianceMode::RawNormals => {
                    let sigma = sigma2.sqrt();
                    let mean = raw[..m].iter().sum::<f64>() / m as f64;
                    let ss: f64 = raw[..m].iter().map(|w| (w - mean) * (w - mean)).sum();
                    Estimate { value: d_true + sigma * mean, s2: Some(sigma2 * ss / (m - 1) as f64) }
                }
            },
        }
    }

    /// Draws raw inputs from `rng` and returns the estimate.
    pub fn sample_estimate(&self, d_true: f64, rng: &mut dyn RngCore) -> Estimate {
        let mut raw = Vec::with_capacity(self.m());
        self.fill_raw(rng, &mut raw);
        self.estimate(d_true, &raw)
    }

    /// `(G(x), 1 − G(x))`, each tail evaluated directly.
    pub fn cdf_tails(&self, x: f64, d_true: f64) -> (f64, f64) {
        if x == f64::NEG_INFINITY {
            return (0.0, 1.0);
        }
        if x == f64::INFINITY {
            return (1.0, 0.0);
        }
        match *self {
            Self::ExactNormal { sigma2, m } | Self::NormalWithSampleVariance { sigma2, m, .. } => {
                if sigma2 == 0.0 {
                    return if x < d_true { (0.0, 1.0) } else { (1.0, 0.0) };
                }
                let z = (x - d_true) * (m as f64).sqrt() / sigma2.sqrt();
                (std_normal_cdf(z), std_normal_cdf(-z))
            }
            Self::InvGammaShifted { m } => {
                // D̂ ≤ x  ⇔  Σ Wᵢ ≥ m / (x − D + 1)
                let u = x - d_true + 1.0;
                if u <= 0.0 {
                    return (0.0, 1.0);
                }
                let (p, q) = reg_gamma_tails(m as f64, m as f64 / u);
                (q, p)
            }
        }
    }

    /// G_m(x; D).
    pub fn cdf(&self, x: f64, d_true: f64) -> f64 {
        self.cdf_tails(x, d_true).0
    }

    /// Inverse of [`cdf`](Self::cdf) for p in (0, 1).
    pub fn quantile(&self, p: f64, d_true: f64) -> f64 {
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if p >= 1.0 {
            return f64::INFINITY;
        }
        match *self {
            Self::ExactNormal { sigma2, m } | Self::NormalWithSampleVariance { sigma2, m, .. } => {
                d_true + (sigma2 / m as f64).sqrt() * std_normal_quantile(p)
            }
            Self::InvGammaShifted { m } => {
                // Q(m, Σ) = p at the Σ matching x
                let total = reg_gamma_upper_inv(m as f64, p);
                d_true - 1.0 + m as f64 / total
            }
        }
    }

    /// y = D + (σ/√m) Φ⁻¹(G_m(x; D)) with σ² the asymptotic variance.
    ///
    /// For exactly normal models G_m is the normal cdf itself and y = x.
    pub fn normal_coupling(&self, x: f64, d_true: f64) -> CoupledValue {
        if self.is_exactly_normal() {
            return CoupledValue { value: x, clamped: false };
        }
        let (lower, upper) = self.cdf_tails(x, d_true);
        self.coupled_from_tails(d_true, lower, upper)
    }

    /// The coupled normal estimate computed straight from raw inputs. Agrees
    /// with `normal_coupling(estimate(d, raw).value, d)` but avoids the
    /// round trip through x.
    pub fn coupled_normal(&self, d_true: f64, raw: &[f64]) -> CoupledValue {
        match *self {
            Self::InvGammaShifted { m } => {
                let total: f64 = raw[..m].iter().sum();
                // G(x) = Q(m, Σ), 1 − G(x) = P(m, Σ)
                let (p, q) = reg_gamma_tails(m as f64, total);
                self.coupled_from_tails(d_true, q, p)
            }
            _ => CoupledValue { value: self.estimate(d_true, raw).value, clamped: false },
        }
    }

    fn coupled_from_tails(&self, d_true: f64, lower: f64, upper: f64) -> CoupledValue {
        let clamped = lower < COUPLING_TAIL_FLOOR || upper < COUPLING_TAIL_FLOOR;
        let lower = lower.max(COUPLING_TAIL_FLOOR);
        let upper = upper.max(COUPLING_TAIL_FLOOR);
        let z = std_normal_quantile_from_tails(lower, upper);
        let scale = (self.sigma2_asymptotic() / self.m() as f64).sqrt();
        CoupledValue { value: d_true + scale * z, clamped }
    }
}

fn check_m(m: usize, min: usize) -> Result<()> {
    if m < min {
        return Err(Error::InvalidParameter { name: "m", reason: format!("must be at least {min}, got {m}") });
    }
    Ok(())
}

impl RawSource for EstimatorModel {
    fn fill_raw(&self, rng: &mut dyn RngCore, out: &mut Vec<f64>) {
        match *self {
            Self::ExactNormal { .. } => out.push(StandardNormal.sample(rng)),
            Self::InvGammaShifted { m } => out.extend((0..m).map(|_| -> f64 { Exp1.sample(rng) })),
            Self::NormalWithSampleVariance { m, mode, .. } => match mode {
                SampleVarianceMode::ChiSquare => {
                    out.push(StandardNormal.sample(rng));
                    out.push(ChiSquared::new((m - 1) as f64).expect("m >= 2").sample(rng));
                }
                SampleVarianceMode::RawNormals => out.extend((0..m).map(|_| -> f64 { StandardNormal.sample(rng) })),
            },
        }
    }
}

/// Draws `value` for each of `n` independent estimates (convenience for
/// moment checks).
pub fn sample_values(model: &EstimatorModel, d_true: f64, n: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    let mut raw = Vec::with_capacity(model.m() + 1);
    (0..n)
        .map(|_| {
            raw.clear();
            model.fill_raw(rng, &mut raw);
            model.estimate(d_true, &raw).value
        })
        .collect()
}
