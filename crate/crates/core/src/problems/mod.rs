//! Concrete problem instances.

pub mod exact;
pub mod lightdark;
pub mod oracle_chain;
pub mod passage;

use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;

use crate::error::{Error, Result};

pub use exact::{solve_exact, ExactSolution};
pub use lightdark::{LightDark1D, LightDarkConfig, LightDarkState};
pub use oracle_chain::{ChainState, OracleChain};
pub use passage::{Passage, PassageConfig, PassageHeuristic, PassageState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    LightDark,
    Passage,
    OracleChain,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::LightDark => "lightdark",
            ProblemKind::Passage => "passage",
            ProblemKind::OracleChain => "oraclechain",
        }
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lightdark" => Ok(ProblemKind::LightDark),
            "passage" => Ok(ProblemKind::Passage),
            "oraclechain" => Ok(ProblemKind::OracleChain),
            other => Err(Error::Config(format!("unknown problem {other:?}"))),
        }
    }
}

/// Parses a `key = value` parameter file. Missing keys keep their defaults.
pub fn parse_config<T: DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    parse_config(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_keeps_defaults() {
        let cfg: LightDarkConfig = parse_config("sigma_min = 0.2\n# comment\ninit_low = 0\n").unwrap();
        assert_eq!(cfg.sigma_min, 0.2);
        assert_eq!(cfg.init_low, 0);
        assert_eq!(cfg.sigma_slope, LightDarkConfig::default().sigma_slope);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_config::<PassageConfig>("sigma_zero = 1.0").is_err());
    }

    #[test]
    fn passage_config_arrays() {
        let cfg: PassageConfig = parse_config("obstacle_y_edges = [0.0, 6.0, 12.0, 18.0]\nsigma0 = 0.5").unwrap();
        assert_eq!(cfg.obstacle_y_edges, [0.0, 6.0, 12.0, 18.0]);
        assert_eq!(cfg.sigma0, 0.5);
    }

    #[test]
    fn problem_kind_parses() {
        for k in [ProblemKind::LightDark, ProblemKind::Passage, ProblemKind::OracleChain] {
            assert_eq!(k.as_str().parse::<ProblemKind>().unwrap(), k);
        }
        assert!("factory".parse::<ProblemKind>().is_err());
    }
}
