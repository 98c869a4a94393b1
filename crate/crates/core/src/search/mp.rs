use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Branch-pruning threshold family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MpVariant {
    Constant,
    Quadratic,
    Log,
}

impl MpVariant {
    pub const ALL: [MpVariant; 3] = [MpVariant::Constant, MpVariant::Quadratic, MpVariant::Log];
}

impl fmt::Display for MpVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MpVariant::Constant => "constant",
            MpVariant::Quadratic => "quadratic",
            MpVariant::Log => "log",
        })
    }
}

impl FromStr for MpVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "constant" => Ok(MpVariant::Constant),
            "quadratic" => Ok(MpVariant::Quadratic),
            "log" => Ok(MpVariant::Log),
            _ => Err(Error::Config(format!("unknown pruning function {s:?}"))),
        }
    }
}

/// Minimum policy probability a branch needs to survive at `depth`, given the
/// largest branch probability `r` and the current maximum depth `md`.
///
/// Depth is clamped to `[0, md]` (`[1, md]` for `Log`) and `md` to at least 1.
/// The result never exceeds `r`; it may be negative, which keeps every branch.
pub fn mp_threshold(variant: MpVariant, p: f64, r: f64, depth: usize, md: usize) -> f64 {
    let md = md.max(1) as f64;
    let t = match variant {
        MpVariant::Constant => r * (1.0 - p),
        MpVariant::Quadratic => {
            let depth = (depth as f64).min(md);
            let gap = md - depth;
            r * (1.0 - p * gap * gap / (md * md))
        }
        MpVariant::Log => {
            let depth = (depth as f64).clamp(1.0, md);
            r * (1.0 - p * -(depth / md).ln())
        }
    };
    t.min(r)
}
