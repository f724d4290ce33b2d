//! Channel parameters, fading states and the per-block rate formulas.
//!
//! Powers are normalized to the noise power at the main receiver, so a power
//! level `mu` is an instantaneous SNR. Rates are in bits/s/Hz.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::error::{invalid, Error, Result};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Physical parameters of the link.
///
/// `beta()` is derived on every call so it can never go stale when `theta`,
/// `frame_t` or `bandwidth_b` are changed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Noise power ratio N1/N2.
    pub gamma: f64,
    /// Average SNR budget (linear).
    pub avg_snr: f64,
    /// QoS exponent in 1/bits. Zero denotes the ergodic (no buffer constraint) limit.
    pub theta: f64,
    /// Block duration in seconds.
    pub frame_t: f64,
    /// Bandwidth in Hz.
    pub bandwidth_b: f64,
}

impl ChannelConfig {
    pub const DEFAULT_FRAME_T: f64 = 2e-3;
    pub const DEFAULT_BANDWIDTH_B: f64 = 1e5;

    pub fn new(gamma: f64, avg_snr: f64, theta: f64) -> Result<Self> {
        let cfg = Self {
            gamma,
            avg_snr,
            theta,
            frame_t: Self::DEFAULT_FRAME_T,
            bandwidth_b: Self::DEFAULT_BANDWIDTH_B,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_snr_db(gamma: f64, snr_db: f64, theta: f64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(invalid("snr_db", format!("must be finite, got {snr_db}")));
        }
        Self::new(gamma, db_to_linear(snr_db), theta)
    }

    pub fn with_frame(mut self, frame_t: f64, bandwidth_b: f64) -> Result<Self> {
        self.frame_t = frame_t;
        self.bandwidth_b = bandwidth_b;
        self.validate()?;
        Ok(self)
    }

    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        self.theta = theta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_avg_snr(mut self, avg_snr: f64) -> Result<Self> {
        self.avg_snr = avg_snr;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite and > 0, got {v}")))
            }
        };
        positive("gamma", self.gamma)?;
        positive("avg_snr", self.avg_snr)?;
        positive("frame_t", self.frame_t)?;
        positive("bandwidth_b", self.bandwidth_b)?;
        if !(self.theta.is_finite() && self.theta >= 0.0) {
            return Err(invalid(
                "theta",
                format!("must be finite and >= 0, got {}", self.theta),
            ));
        }
        Ok(())
    }

    /// theta * T * B / ln 2.
    pub fn beta(&self) -> f64 {
        self.theta * self.frame_t * self.bandwidth_b / LN_2
    }

    /// Channel uses per block, T * B.
    pub fn symbols_per_block(&self) -> f64 {
        self.frame_t * self.bandwidth_b
    }

    pub fn is_ergodic(&self) -> bool {
        self.theta == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingState {
    pub z_m: f64,
    pub z_e: f64,
}

impl FadingState {
    pub fn new(z_m: f64, z_e: f64) -> Self {
        Self { z_m, z_e }
    }

    /// z_M - gamma * z_E; positive exactly on the secure region.
    pub fn margin(&self, gamma: f64) -> f64 {
        self.z_m - gamma * self.z_e
    }
}

/// Which side of the line z_M = gamma * z_E a state lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SecrecyRegion {
    /// z_M > gamma * z_E: positive instantaneous secrecy capacity.
    Secure,
    /// z_M <= gamma * z_E: the eavesdropper is at least as strong.
    Insecure,
}

/// Ties (z_M == gamma * z_E) belong to the insecure region.
pub fn classify(z: FadingState, gamma: f64) -> SecrecyRegion {
    if z.z_m > gamma * z.z_e {
        SecrecyRegion::Secure
    } else {
        SecrecyRegion::Insecure
    }
}

fn check_power(which: &'static str, value: f64) -> Result<()> {
    if value.is_nan() || value < 0.0 {
        Err(Error::NegativePower { which, value })
    } else {
        Ok(())
    }
}

/// Common-message rate R0 for the power split (mu0, mu1).
pub fn common_rate(cfg: &ChannelConfig, z: FadingState, mu0: f64, mu1: f64) -> Result<f64> {
    check_power("mu0", mu0)?;
    check_power("mu1", mu1)?;
    match classify(z, cfg.gamma) {
        SecrecyRegion::Secure => {
            let ge = cfg.gamma * z.z_e;
            Ok((mu0 * ge / (1.0 + mu1 * ge)).ln_1p() / LN_2)
        }
        SecrecyRegion::Insecure => {
            if mu1 > 0.0 {
                return Err(Error::ConfidentialPowerOutsideSecrecyRegion { mu1 });
            }
            Ok((mu0 * z.z_m).ln_1p() / LN_2)
        }
    }
}

/// Confidential-message rate R1 at power mu1; zero on the insecure region.
pub fn secrecy_rate(cfg: &ChannelConfig, z: FadingState, mu1: f64) -> Result<f64> {
    check_power("mu1", mu1)?;
    Ok(secrecy_rate_unchecked(cfg.gamma, z, mu1))
}

pub(crate) fn secrecy_rate_unchecked(gamma: f64, z: FadingState, mu1: f64) -> f64 {
    match classify(z, gamma) {
        SecrecyRegion::Secure => {
            ((mu1 * z.z_m).ln_1p() - (gamma * mu1 * z.z_e).ln_1p()).max(0.0) / LN_2
        }
        SecrecyRegion::Insecure => 0.0,
    }
}

/// One-dimensional marginal law of a channel power gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Marginal {
    /// Exponential power gain (Rayleigh amplitude) with the given mean.
    Exponential { mean: f64 },
    /// Finite support; points strictly increasing, probabilities summing to 1.
    FiniteDiscrete { points: Vec<f64>, probs: Vec<f64> },
}

impl Marginal {
    pub fn exponential(mean: f64) -> Result<Self> {
        let m = Marginal::Exponential { mean };
        m.validate()?;
        Ok(m)
    }

    pub fn discrete(points: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let m = Marginal::FiniteDiscrete { points, probs };
        m.validate()?;
        Ok(m)
    }

    pub fn point(value: f64) -> Result<Self> {
        Self::discrete(vec![value], vec![1.0])
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Marginal::Exponential { mean } => {
                if !(mean.is_finite() && *mean > 0.0) {
                    return Err(invalid("mean", format!("must be > 0, got {mean}")));
                }
            }
            Marginal::FiniteDiscrete { points, probs } => {
                if points.is_empty() || points.len() != probs.len() {
                    return Err(invalid(
                        "points",
                        "need a nonempty support with one probability per point",
                    ));
                }
                if points.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return Err(invalid("points", "gains must be finite and >= 0"));
                }
                if points.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(invalid("points", "support must be strictly increasing"));
                }
                if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return Err(invalid("probs", "probabilities must be >= 0"));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(invalid("probs", format!("must sum to 1, got {total}")));
                }
            }
        }
        Ok(())
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Marginal::FiniteDiscrete { .. })
    }

    pub fn mean(&self) -> f64 {
        match self {
            Marginal::Exponential { mean } => *mean,
            Marginal::FiniteDiscrete { points, probs } => {
                points.iter().zip(probs).map(|(x, p)| x * p).sum()
            }
        }
    }

    /// P(Z <= x).
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Marginal::Exponential { mean } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x / mean).exp_m1()
                }
            }
            Marginal::FiniteDiscrete { points, probs } => points
                .iter()
                .zip(probs)
                .take_while(|(p, _)| **p <= x)
                .map(|(_, w)| w)
                .sum(),
        }
    }

    /// Density; zero for discrete laws.
    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Marginal::Exponential { mean } => {
                if x < 0.0 {
                    0.0
                } else {
                    (-x / mean).exp() / mean
                }
            }
            Marginal::FiniteDiscrete { .. } => 0.0,
        }
    }

    /// Inverse CDF, used both for grid truncation and for sampling.
    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            Marginal::Exponential { mean } => -mean * (-u).ln_1p(),
            Marginal::FiniteDiscrete { points, probs } => {
                let mut acc = 0.0;
                for (x, p) in points.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *x;
                    }
                }
                *points.last().expect("validated nonempty")
            }
        }
    }

    /// E[Z | lo <= Z <= hi] for a continuous law; `hi` may be infinite.
    pub(crate) fn conditional_mean(&self, lo: f64, hi: f64) -> f64 {
        match self {
            Marginal::Exponential { mean } => {
                if hi.is_infinite() {
                    return lo + mean;
                }
                let w = hi - lo;
                if w <= 0.0 {
                    return lo;
                }
                // Mean of an exponential truncated to [0, w], shifted by lo.
                let r = w / mean;
                if r < 1e-6 {
                    lo + 0.5 * w - w * r / 12.0
                } else {
                    lo + mean - w / r.exp_m1()
                }
            }
            Marginal::FiniteDiscrete { .. } => 0.5 * (lo + hi),
        }
    }
}

/// Joint law of (z_M, z_E). The marginals are always independent here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FadingDistribution {
    pub main: Marginal,
    pub eve: Marginal,
}

impl FadingDistribution {
    pub fn new(main: Marginal, eve: Marginal) -> Result<Self> {
        main.validate()?;
        eve.validate()?;
        Ok(Self { main, eve })
    }

    /// Independent exponential gains, i.e. Rayleigh fading on both links.
    pub fn rayleigh(mean_main: f64, mean_eve: f64) -> Result<Self> {
        Self::new(
            Marginal::exponential(mean_main)?,
            Marginal::exponential(mean_eve)?,
        )
    }

    pub fn independent(&self) -> bool {
        true
    }

    /// Draws a state by inverting each marginal CDF.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> FadingState {
        let u_m: f64 = rng.gen();
        let u_e: f64 = rng.gen();
        FadingState::new(self.main.quantile(u_m), self.eve.quantile(u_e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> ChannelConfig {
        ChannelConfig::new(1.0, 1.0, 0.01).unwrap()
    }

    #[test]
    fn beta_tracks_theta_t_b() {
        let cfg = unit();
        assert_relative_eq!(cfg.beta(), 2.0 / LN_2, max_relative = 1e-15);
        let cfg = cfg.with_theta(0.1).unwrap();
        assert_relative_eq!(cfg.beta(), 20.0 / LN_2, max_relative = 1e-15);
        let cfg = cfg.with_frame(1e-3, 1e4).unwrap();
        assert_relative_eq!(cfg.beta(), 1.0 / LN_2, max_relative = 1e-15);
    }

    #[test]
    fn db_conversion() {
        assert_relative_eq!(db_to_linear(0.0), 1.0);
        assert_relative_eq!(db_to_linear(-10.0), 0.1, max_relative = 1e-15);
        assert_relative_eq!(linear_to_db(db_to_linear(3.7)), 3.7, max_relative = 1e-14);
        let cfg = ChannelConfig::from_snr_db(1.0, -10.0, 0.01).unwrap();
        assert_relative_eq!(cfg.avg_snr, 0.1, max_relative = 1e-15);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(ChannelConfig::new(0.0, 1.0, 0.01).is_err());
        assert!(ChannelConfig::new(1.0, -1.0, 0.01).is_err());
        assert!(ChannelConfig::new(1.0, 1.0, -0.01).is_err());
        assert!(ChannelConfig::new(1.0, 1.0, 0.0).is_ok());
        assert!(unit().with_frame(0.0, 1.0).is_err());
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            classify(FadingState::new(2.0, 1.0), 1.0),
            SecrecyRegion::Secure
        );
        assert_eq!(
            classify(FadingState::new(1.0, 1.0), 1.0),
            SecrecyRegion::Insecure
        );
        assert_eq!(
            classify(FadingState::new(3.0, 1.0), 4.0),
            SecrecyRegion::Insecure
        );
    }

    #[test]
    fn common_rate_examples() {
        let cfg = unit();
        let r = common_rate(&cfg, FadingState::new(1.0, 2.0), 1.0, 0.0).unwrap();
        assert_relative_eq!(r, 1.0, max_relative = 1e-15);
        let r = common_rate(&cfg, FadingState::new(3.0, 1.0), 3.0, 1.0).unwrap();
        assert_relative_eq!(r, 2.5f64.log2(), max_relative = 1e-14);
        assert_eq!(
            common_rate(&cfg, FadingState::new(3.0, 1.0), 0.0, 7.0).unwrap(),
            0.0
        );
        assert_eq!(
            common_rate(&cfg, FadingState::new(1.0, 3.0), 0.0, 0.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn common_rate_errors() {
        let cfg = unit();
        assert!(matches!(
            common_rate(&cfg, FadingState::new(3.0, 1.0), -1.0, 0.0),
            Err(Error::NegativePower { .. })
        ));
        assert!(matches!(
            common_rate(&cfg, FadingState::new(1.0, 2.0), 1.0, 0.5),
            Err(Error::ConfidentialPowerOutsideSecrecyRegion { .. })
        ));
    }

    #[test]
    fn secrecy_rate_examples() {
        let cfg = unit();
        let r = secrecy_rate(&cfg, FadingState::new(3.0, 1.0), 1.0).unwrap();
        assert_relative_eq!(r, 1.0, max_relative = 1e-14);
        assert_eq!(
            secrecy_rate(&cfg, FadingState::new(1.0, 2.0), 5.0).unwrap(),
            0.0
        );
        assert_eq!(
            secrecy_rate(&cfg, FadingState::new(3.0, 1.0), 0.0).unwrap(),
            0.0
        );
        assert!(secrecy_rate(&cfg, FadingState::new(3.0, 1.0), -0.1).is_err());
    }

    #[test]
    fn exponential_marginal() {
        let m = Marginal::exponential(1.0).unwrap();
        assert_relative_eq!(m.cdf(1.0), 1.0 - (-1f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(m.quantile(m.cdf(2.5)), 2.5, max_relative = 1e-12);
        // E[Z | 0 <= Z <= 1] = 1 - 1/(e - 1)
        let expected = 1.0 - 1.0 / (1f64.exp() - 1.0);
        assert_relative_eq!(m.conditional_mean(0.0, 1.0), expected, max_relative = 1e-14);
        assert_relative_eq!(m.conditional_mean(3.0, f64::INFINITY), 4.0);
        let tiny = m.conditional_mean(2.0, 2.0 + 1e-9);
        assert!(tiny > 2.0 && tiny < 2.0 + 1e-9);
    }

    #[test]
    fn discrete_marginal() {
        let m = Marginal::discrete(vec![0.0, 1.0, 3.0], vec![0.25, 0.25, 0.5]).unwrap();
        assert_eq!(m.cdf(0.5), 0.25);
        assert_eq!(m.cdf(3.0), 1.0);
        assert_eq!(m.quantile(0.3), 1.0);
        assert_eq!(m.quantile(0.9), 3.0);
        assert_relative_eq!(m.mean(), 1.75);
        assert!(Marginal::discrete(vec![1.0, 1.0], vec![0.5, 0.5]).is_err());
        assert!(Marginal::discrete(vec![1.0], vec![0.5]).is_err());
    }
}
