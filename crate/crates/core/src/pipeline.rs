//! Composition of the two imputation passes into repair strategies.

use std::fmt;
use std::str::FromStr;

use crate::error::Result;
use crate::fill::{DonorPolicy, FillRecord};
use crate::inter::run_inter;
use crate::intra::run_intra;
use crate::matcher::MatchConfig;
use crate::schema::WarehouseModel;

/// Which passes to run and in which order. The default pipeline runs intra,
/// then inter, then a final intra pass: inter fills can unlock further
/// intra fills and vice versa, and one closing intra pass picks up the
/// cheap wins without re-running discovery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    Intra,
    Inter,
    #[default]
    IntraInterIntra,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Intra, Strategy::Inter, Strategy::IntraInterIntra];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Intra => write!(f, "intra"),
            Strategy::Inter => write!(f, "inter"),
            Strategy::IntraInterIntra => write!(f, "intra-inter-intra"),
        }
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "intra" => Ok(Strategy::Intra),
            "inter" => Ok(Strategy::Inter),
            "intra-inter-intra" => Ok(Strategy::IntraInterIntra),
            other => Err(format!(
                "unknown strategy `{other}` (expected intra, inter or intra-inter-intra)"
            )),
        }
    }
}

/// Runs the strategy `passes` times over the model and returns the merged
/// fill log in execution order.
pub fn run_strategy(
    model: &mut WarehouseModel,
    strategy: Strategy,
    cfg: &MatchConfig,
    policy: DonorPolicy,
    passes: usize,
) -> Result<Vec<FillRecord>> {
    let mut fills = Vec::new();
    for _ in 0..passes.max(1) {
        match strategy {
            Strategy::Intra => fills.extend(run_intra(model, policy)?),
            Strategy::Inter => fills.extend(run_inter(model, cfg, policy)?),
            Strategy::IntraInterIntra => {
                fills.extend(run_intra(model, policy)?);
                fills.extend(run_inter(model, cfg, policy)?);
                fills.extend(run_intra(model, policy)?);
            }
        }
    }
    Ok(fills)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_parses_and_displays() {
        for s in Strategy::ALL {
            assert_eq!(s.to_string().parse::<Strategy>().unwrap(), s);
        }
        assert!("both".parse::<Strategy>().is_err());
    }
}
