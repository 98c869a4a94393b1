//! Network-guided tree search: depth-first, limited discrepancy and weighted
//! beam search sharing one pruning and bounding scheme.

mod dfs;
mod mp;
mod queue;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::encoding::encode_bay;
use crate::error::{Error, Result};
use crate::model::{Bay, Solution};
use crate::nn::{Head, Network};

pub use dfs::dlts_dfs;
pub use mp::{mp_threshold, MpVariant};
pub use queue::{dlts_lds, dlts_lds_traced, dlts_wbs, PopKey};

/// Distribution over all `S(S-1)` moves, indexed by [`crate::encoding::move_index`].
pub trait PolicyModel: Sync {
    fn policy(&self, bay: &Bay) -> Result<Vec<f64>>;
}

/// Estimated number of moves still needed to sort `bay`.
pub trait ValueModel: Sync {
    fn value(&self, bay: &Bay) -> Result<f64>;
}

impl PolicyModel for Network {
    fn policy(&self, bay: &Bay) -> Result<Vec<f64>> {
        if self.head() != Head::Policy {
            return Err(Error::ShapeMismatch("value network used as policy".into()));
        }
        self.forward(&encode_bay(bay, self.scale()))
    }
}

impl ValueModel for Network {
    fn value(&self, bay: &Bay) -> Result<f64> {
        if self.head() != Head::Value {
            return Err(Error::ShapeMismatch("policy network used as value".into()));
        }
        Ok(self.forward(&encode_bay(bay, self.scale()))?[0])
    }
}

/// Equal probability for every move.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformPolicy;

impl PolicyModel for UniformPolicy {
    fn policy(&self, bay: &Bay) -> Result<Vec<f64>> {
        let n = bay.stacks() * (bay.stacks() - 1);
        Ok(vec![1.0 / n as f64; n])
    }
}

#[derive(Clone, Copy)]
pub struct Models<'a> {
    pub policy: &'a dyn PolicyModel,
    pub value: Option<&'a dyn ValueModel>,
}

impl<'a> Models<'a> {
    pub fn new(policy: &'a dyn PolicyModel, value: Option<&'a dyn ValueModel>) -> Self {
        Models { policy, value }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Dfs,
    Lds,
    Wbs,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Dfs, Strategy::Lds, Strategy::Wbs];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Dfs => "dfs",
            Strategy::Lds => "lds",
            Strategy::Wbs => "wbs",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dfs" => Ok(Strategy::Dfs),
            "lds" => Ok(Strategy::Lds),
            "wbs" => Ok(Strategy::Wbs),
            _ => Err(Error::Config(format!("unknown strategy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub strategy: Strategy,
    /// Value network is queried at depths divisible by `k` (DFS, LDS).
    pub k: usize,
    /// Deflation of value predictions in the lower bound.
    pub d: f64,
    /// Pruning adjustment; 0 keeps only the most probable branches, 1 keeps
    /// the most.
    pub p: f64,
    pub mp: MpVariant,
    /// Set the maximum depth to the length of each new best solution.
    pub reactive_md: bool,
    /// Discrepancy by probability bin instead of rank (LDS).
    pub binning: bool,
    pub bins: usize,
    /// Children shallower than `z` add no discrepancy (LDS).
    pub z: usize,
    pub alpha: f64,
    pub gamma: f64,
    /// Seconds; `None` runs until the pruned tree is exhausted.
    pub time_limit: Option<f64>,
    /// Initial maximum depth; defaults to twice the container count. No
    /// solution longer than this is accepted before a first one is found.
    pub md0: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            strategy: Strategy::Dfs,
            k: 1,
            d: 0.9,
            p: 0.4,
            mp: MpVariant::Log,
            reactive_md: true,
            binning: false,
            bins: 3,
            z: 0,
            alpha: 1.0,
            gamma: 1.0,
            time_limit: Some(60.0),
            md0: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} is outside [0, 1]")))
            }
        };
        unit("d", self.d)?;
        unit("p", self.p)?;
        if self.k == 0 {
            return Err(Error::Config("k must be positive".into()));
        }
        if self.bins == 0 {
            return Err(Error::Config("bin count must be positive".into()));
        }
        if !(self.alpha >= 0.0 && self.gamma >= 0.0) {
            return Err(Error::Config("alpha and gamma must be non-negative".into()));
        }
        if let Some(t) = self.time_limit {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("time limit {t} is not a duration")));
            }
        }
        if self.md0 == Some(0) {
            return Err(Error::Config("md0 must be at least 1".into()));
        }
        Ok(())
    }

    pub fn initial_md(&self, root: &Bay) -> usize {
        self.md0.unwrap_or(2 * root.container_count()).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub solution: Option<Solution>,
    pub nodes_opened: u64,
    pub policy_queries: u64,
    pub value_queries: u64,
    pub wall_time: Duration,
    /// The pruned tree was exhausted before the time limit.
    pub completed: bool,
    /// Every improvement of the best solution, in order.
    pub incumbents: Vec<Incumbent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incumbent {
    pub length: usize,
    /// Nodes opened when the solution was found.
    pub nodes_opened: u64,
}

impl SearchResult {
    /// Length of the best solution found.
    pub fn ub(&self) -> Option<usize> {
        self.solution.as_ref().map(Solution::len)
    }

    pub fn timed_out(&self) -> bool {
        !self.completed
    }
}

/// `cost + d * max(0, prediction)`, or `-inf` without a prediction.
pub fn heuristic_lower_bound(cost: usize, prediction: Option<f64>, d: f64) -> f64 {
    match prediction {
        Some(v) => cost as f64 + d * v.max(0.0),
        None => f64::NEG_INFINITY,
    }
}

/// Whether DFS and LDS query the value network at `depth`.
pub fn queries_value(depth: usize, k: usize) -> bool {
    depth.is_multiple_of(k)
}

/// Runs the configured strategy.
pub fn search(root: &Bay, models: Models<'_>, config: &SearchConfig) -> Result<SearchResult> {
    match config.strategy {
        Strategy::Dfs => dlts_dfs(root, models, config),
        Strategy::Lds => dlts_lds(root, models, config),
        Strategy::Wbs => dlts_wbs(root, models, config),
    }
}

/// Bookkeeping shared by all strategies.
struct Run<'a> {
    models: Models<'a>,
    config: &'a SearchConfig,
    deadline: Option<Instant>,
    start: Instant,
    md: usize,
    /// Exclusive bound on accepted solution length.
    ub: usize,
    best: Option<Solution>,
    incumbents: Vec<Incumbent>,
    nodes: u64,
    policy_queries: u64,
    value_queries: u64,
    timed_out: bool,
}

impl<'a> Run<'a> {
    fn new(root: &Bay, models: Models<'a>, config: &'a SearchConfig) -> Result<Self> {
        config.validate()?;
        let start = Instant::now();
        let md = config.initial_md(root);
        Ok(Run {
            models,
            config,
            deadline: config
                .time_limit
                .map(|t| start + Duration::from_secs_f64(t)),
            start,
            md,
            ub: md + 1,
            best: None,
            incumbents: Vec::new(),
            nodes: 0,
            policy_queries: 0,
            value_queries: 0,
            timed_out: false,
        })
    }

    fn out_of_time(&mut self) -> bool {
        if !self.timed_out {
            if let Some(deadline) = self.deadline {
                self.timed_out = Instant::now() >= deadline;
            }
        }
        self.timed_out
    }

    /// Records a sorted node reached in `moves`; returns whether it improved.
    fn offer(&mut self, moves: impl FnOnce() -> Vec<crate::model::Move>, cost: usize) -> bool {
        if cost >= self.ub {
            return false;
        }
        self.ub = cost;
        self.best = Some(Solution::new(moves()));
        self.incumbents.push(Incumbent {
            length: cost,
            nodes_opened: self.nodes,
        });
        if self.config.reactive_md {
            self.md = cost.max(1);
        }
        true
    }

    fn predict(&mut self, bay: &Bay) -> Result<Option<f64>> {
        match self.models.value {
            Some(value) => {
                self.value_queries += 1;
                value.value(bay).map(Some)
            }
            None => Ok(None),
        }
    }

    /// Legal successors that survive the pruning threshold, most probable
    /// first, together with the largest probability.
    fn branches(
        &mut self,
        bay: &Bay,
        depth: usize,
        previous: Option<crate::model::Move>,
    ) -> Result<(Vec<(crate::model::Move, f64)>, f64)> {
        self.policy_queries += 1;
        let output = self.models.policy.policy(bay)?;
        let mut ranked = match crate::encoding::masked_policy(&output, bay, previous) {
            Ok(r) => r,
            Err(Error::DeadEnd) => return Ok((Vec::new(), 0.0)),
            Err(e) => return Err(e),
        };
        let r = ranked[0].1;
        let threshold = mp_threshold(self.config.mp, self.config.p, r, depth, self.md);
        let keep = ranked.iter().take_while(|b| b.1 >= threshold).count();
        ranked.truncate(keep);
        Ok((ranked, r))
    }

    fn finish(self) -> SearchResult {
        SearchResult {
            solution: self.best,
            nodes_opened: self.nodes,
            policy_queries: self.policy_queries,
            value_queries: self.value_queries,
            wall_time: self.start.elapsed(),
            completed: !self.timed_out,
            incumbents: self.incumbents,
        }
    }
}
