use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("{name}={value} must lie in [0, 1]")]
    MixRange { name: &'static str, value: f64 },
    #[error("{name}={value} must be a finite factor >= 1")]
    Factor { name: &'static str, value: f64 },
    #[error("unknown {kind} '{value}'")]
    Unknown { kind: &'static str, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SkipMode {
    /// skip iff Bound(d, alpha) < F_s * Theta_s
    Single,
    /// additionally skip iff Bound(d, beta) < F_f * Theta_f
    Dual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViewMode {
    Independent,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    /// Score every candidate; the reference ranking.
    Exhaustive,
    /// Rank-safe block-max pruning on the beta mix.
    BlockMax,
    /// Block-max pruning with the threshold scaled by `f_s`.
    BlockMaxOverest,
    /// Dual-threshold skipping with hybrid scoring.
    Dths,
}

macro_rules! str_enum {
    ($ty:ty, $kind:literal, { $($s:literal => $v:expr),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = ConfigError;
            fn from_str(s: &str) -> Result<Self, ConfigError> {
                match s.to_ascii_lowercase().as_str() {
                    $($s => Ok($v),)+
                    _ => Err(ConfigError::Unknown { kind: $kind, value: s.to_string() }),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let name = match self {
                    $(x if *x == $v => $s,)+
                    _ => unreachable!(),
                };
                f.write_str(name)
            }
        }
    };
}

str_enum!(SkipMode, "skip mode", { "st" => SkipMode::Single, "dt" => SkipMode::Dual });
str_enum!(ViewMode, "view mode", {
    "independent" => ViewMode::Independent,
    "uniform" => ViewMode::Uniform,
});
str_enum!(Algorithm, "algorithm", {
    "exhaustive" => Algorithm::Exhaustive,
    "blockmax" => Algorithm::BlockMax,
    "blockmax_overest" => Algorithm::BlockMaxOverest,
    "dths" => Algorithm::Dths,
});

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub f_s: f64,
    pub f_f: f64,
    pub skip_mode: SkipMode,
    pub view_mode: ViewMode,
    pub algorithm: Algorithm,
    /// Record every skip and evaluation in the trace.
    #[serde(default)]
    pub audit: bool,
}

impl Default for RetrievalConfig {
    /// Default DTHS: alpha 0.9, beta 0.2, no over-estimation, dual
    /// threshold, independent view, k = 1000.
    fn default() -> Self {
        Self {
            k: 1000,
            alpha: 0.9,
            beta: 0.2,
            f_s: 1.0,
            f_f: 1.0,
            skip_mode: SkipMode::Dual,
            view_mode: ViewMode::Independent,
            algorithm: Algorithm::Dths,
            audit: false,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k == 0 {
            return Err(ConfigError::ZeroK);
        }
        for (name, value) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::MixRange { name, value });
            }
        }
        for (name, value) in [("f_s", self.f_s), ("f_f", self.f_f)] {
            if !(value >= 1.0) || !value.is_finite() {
                return Err(ConfigError::Factor { name, value });
            }
        }
        Ok(())
    }

    pub fn exhaustive(k: usize, beta: f64) -> Self {
        Self {
            k,
            beta,
            algorithm: Algorithm::Exhaustive,
            ..Self::default()
        }
    }

    pub fn blockmax(k: usize, beta: f64) -> Self {
        Self {
            k,
            beta,
            algorithm: Algorithm::BlockMax,
            ..Self::default()
        }
    }

    pub fn overest(k: usize, beta: f64, factor: f64) -> Self {
        Self {
            k,
            beta,
            f_s: factor,
            algorithm: Algorithm::BlockMaxOverest,
            ..Self::default()
        }
    }

    pub fn dths(k: usize, alpha: f64, beta: f64) -> Self {
        Self {
            k,
            alpha,
            beta,
            ..Self::default()
        }
    }
}
