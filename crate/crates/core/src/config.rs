//! Protocol parameters shared by the analytical and simulation paths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which frame-slotted access scheme a computation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Scheme {
    /// Unsent packets stay queued across frames until delivered or replaced.
    FsaRd,
    /// Each update gets a single reservation attempt and is dropped afterwards.
    FsaRdOne,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::FsaRd => "FSA_RD",
            Scheme::FsaRdOne => "FSA_RD_ONE",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "FSA_RD" | "RD" => Ok(Scheme::FsaRd),
            "FSA_RD_ONE" | "ONE" => Ok(Scheme::FsaRdOne),
            other => Err(Error::domain("scheme", format!("unknown scheme {other:?}"))),
        }
    }
}

/// Reservation frame parameters.
///
/// A frame is `frame_len` slots long: one reservation slot split into
/// `minislots` mini-slots, followed by `frame_len - 1` data slots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Number of users `N`.
    pub users: usize,
    /// Slots per frame `M`.
    pub frame_len: usize,
    /// Mini-slots per reservation slot `V`.
    pub minislots: usize,
    /// Per-slot status generation probability.
    pub rho: f64,
    /// Reservation probability of an active user.
    pub gamma: f64,
}

impl ProtocolConfig {
    pub fn new(users: usize, frame_len: usize, minislots: usize, rho: f64, gamma: f64) -> Result<Self> {
        let cfg = ProtocolConfig {
            users,
            frame_len,
            minislots,
            rho,
            gamma,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.users < 1 {
            return Err(Error::domain("N", "at least one user is required"));
        }
        if self.minislots < 1 {
            return Err(Error::domain("V", "at least one mini-slot is required"));
        }
        if self.frame_len < 2 || self.frame_len > self.minislots + 1 {
            return Err(Error::domain(
                "M",
                format!("frame length {} outside 2..={}", self.frame_len, self.minislots + 1),
            ));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::domain("rho", format!("{} not in (0, 1]", self.rho)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::domain("gamma", format!("{} not in (0, 1]", self.gamma)));
        }
        Ok(())
    }

    /// Probability that a user generates at least one update during a frame.
    pub fn frame_arrival_prob(&self) -> f64 {
        frame_arrival_prob(self.rho, self.frame_len)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }
}

/// `1 - (1 - rho)^M`, computed without cancellation for small `rho`.
pub fn frame_arrival_prob(rho: f64, frame_len: usize) -> f64 {
    -f64::exp_m1(frame_len as f64 * f64::ln_1p(-rho))
}

/// Slotted ALOHA baseline parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlohaConfig {
    pub users: usize,
    pub rho: f64,
    /// Per-slot transmission probability of a user holding a packet.
    pub tau: f64,
}

impl AlohaConfig {
    pub fn new(users: usize, rho: f64, tau: f64) -> Result<Self> {
        let cfg = AlohaConfig { users, rho, tau };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.users < 1 {
            return Err(Error::domain("N", "at least one user is required"));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::domain("rho", format!("{} not in (0, 1]", self.rho)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::domain("tau", format!("{} not in (0, 1]", self.tau)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_frame_longer_than_minislots_plus_one() {
        let err = ProtocolConfig::new(30, 6, 4, 0.1, 0.5).unwrap_err();
        assert!(matches!(err, Error::Domain { param: "M", .. }));
        assert!(err.to_string().contains("M"));
    }

    #[test]
    fn rejects_zero_rates() {
        assert!(ProtocolConfig::new(3, 2, 2, 0.0, 0.5).is_err());
        assert!(ProtocolConfig::new(3, 2, 2, 0.1, 0.0).is_err());
        assert!(AlohaConfig::new(3, 0.1, 0.0).is_err());
    }

    #[test]
    fn arrival_prob_matches_direct_form() {
        for &(rho, m) in &[(0.04, 3usize), (0.5, 2), (1.0, 4), (1e-6, 5)] {
            let direct = 1.0 - (1.0 - rho as f64).powi(m as i32);
            assert!((frame_arrival_prob(rho, m) - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn scheme_parses_loosely() {
        assert_eq!("fsa-rd".parse::<Scheme>().unwrap(), Scheme::FsaRd);
        assert_eq!("FSA_RD_ONE".parse::<Scheme>().unwrap(), Scheme::FsaRdOne);
        assert!("csma".parse::<Scheme>().is_err());
    }
}
