//! Exact solver used to label training data and to check the heuristic
//! searches.
//!
//! Iterative deepening on solution length with the blocking count as an
//! admissible (and consistent) bound. Each deepening level keeps a table of
//! canonicalised bays mapped to the largest remaining budget already proven
//! insufficient from them, so permuted or revisited states are cut.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{Bay, Group, Instance, Move, Solution};

/// Node budget per attempt of the weighted best-first fallback run after a
/// timeout, and the heuristic weights tried in order.
const FALLBACK_NODES: usize = 400_000;
const FALLBACK_WEIGHTS: [usize; 5] = [2, 3, 4, 6, 10];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleResult {
    /// Shortest solution found; `None` if the bay cannot be sorted, or if
    /// the search timed out and the fallback heuristic failed too.
    pub solution: Option<Solution>,
    /// The solution is optimal, or no solution exists when `solution` is
    /// `None`.
    pub proven_optimal: bool,
    pub timed_out: bool,
    pub nodes_opened: u64,
    pub wall_time: Duration,
}

impl OracleResult {
    pub fn length(&self) -> Option<usize> {
        self.solution.as_ref().map(Solution::len)
    }
}

enum Outcome {
    Found,
    Exhausted,
    Timeout,
}

struct Deepening<'a> {
    bay: Bay,
    blocking: usize,
    path: Vec<Move>,
    nodes: u64,
    /// Some node of the current level was cut by the bound.
    bound_cut: bool,
    deadline: Option<Instant>,
    seen: HashMap<Vec<Group>, usize>,
    scratch: &'a mut Vec<Vec<(isize, Move)>>,
}

/// Change in blocking count if the top container moves from `from` to `to`.
fn blocking_delta(bay: &Bay, mv: Move) -> isize {
    let src = bay.stack(mv.from);
    let (&g, below) = src.split_last().expect("legal move has a source container");
    let was_blocking = below.iter().any(|&b| b < g);
    let will_block = bay.stack(mv.to).iter().any(|&b| b < g);
    will_block as isize - was_blocking as isize
}

impl Deepening<'_> {
    fn search(&mut self, cost: usize, bound: usize, previous: Option<Move>) -> Outcome {
        self.nodes += 1;
        if self.blocking == 0 {
            return Outcome::Found;
        }
        if cost + self.blocking > bound {
            self.bound_cut = true;
            return Outcome::Exhausted;
        }
        if self.nodes & 0x3ff == 1 {
            if let Some(deadline) = self.deadline {
                if Instant::now() >= deadline {
                    return Outcome::Timeout;
                }
            }
        }
        let remaining = bound - cost;
        let key = self.bay.canonical_key();
        if self.seen.get(&key).is_some_and(|&r| r >= remaining) {
            return Outcome::Exhausted;
        }

        let depth = self.path.len();
        if self.scratch.len() <= depth {
            self.scratch.push(Vec::new());
        }
        let mut children = std::mem::take(&mut self.scratch[depth]);
        children.clear();
        children.extend(
            self.bay
                .legal_moves(previous)
                .into_iter()
                .map(|mv| (blocking_delta(&self.bay, mv), mv)),
        );
        // Stable: equal deltas keep lexicographic move order.
        children.sort_by_key(|&(delta, _)| delta);

        let mut outcome = Outcome::Exhausted;
        for &(delta, mv) in &children {
            self.bay.move_unchecked(mv);
            self.blocking = self.blocking.wrapping_add_signed(delta);
            self.path.push(mv);
            outcome = self.search(cost + 1, bound, Some(mv));
            if matches!(outcome, Outcome::Found) {
                break;
            }
            self.path.pop();
            self.blocking = self.blocking.wrapping_add_signed(-delta);
            self.bay.move_unchecked(mv.inverse());
            if matches!(outcome, Outcome::Timeout) {
                break;
            }
        }
        self.scratch[depth] = children;
        if matches!(outcome, Outcome::Exhausted) {
            self.seen.insert(key, remaining);
        }
        outcome
    }
}

/// Solves `bay` to optimality unless `time_limit` runs out first.
pub fn solve_exact(bay: &Bay, time_limit: Option<Duration>) -> OracleResult {
    let start = Instant::now();
    let deadline = time_limit.map(|t| start + t);
    let mut scratch = Vec::new();
    let mut state = Deepening {
        bay: bay.clone(),
        blocking: bay.blocking_count(),
        path: Vec::new(),
        nodes: 0,
        bound_cut: false,
        deadline,
        seen: HashMap::new(),
        scratch: &mut scratch,
    };

    let mut bound = state.blocking;
    loop {
        state.seen.clear();
        state.bound_cut = false;
        match state.search(0, bound, None) {
            Outcome::Found => {
                return OracleResult {
                    solution: Some(Solution::new(std::mem::take(&mut state.path))),
                    proven_optimal: true,
                    timed_out: false,
                    nodes_opened: state.nodes,
                    wall_time: start.elapsed(),
                };
            }
            Outcome::Exhausted if state.bound_cut => bound += 1,
            Outcome::Exhausted => {
                return OracleResult {
                    solution: None,
                    proven_optimal: true,
                    timed_out: false,
                    nodes_opened: state.nodes,
                    wall_time: start.elapsed(),
                };
            }
            Outcome::Timeout => {
                let nodes = state.nodes;
                let solution = FALLBACK_WEIGHTS
                    .iter()
                    .find_map(|&w| weighted_best_first(bay, FALLBACK_NODES, w));
                return OracleResult {
                    solution,
                    proven_optimal: false,
                    timed_out: true,
                    nodes_opened: nodes,
                    wall_time: start.elapsed(),
                };
            }
        }
    }
}

/// Weighted A* (`f = g + w * blocking`) with duplicate detection. Used only
/// to supply a best-effort solution after a timeout.
fn weighted_best_first(root: &Bay, node_budget: usize, weight: usize) -> Option<Solution> {
    struct Entry {
        bay: Bay,
        parent: usize,
        mv: Option<Move>,
        cost: usize,
    }
    let mut arena = vec![Entry {
        bay: root.clone(),
        parent: usize::MAX,
        mv: None,
        cost: 0,
    }];
    let mut closed: HashSet<Vec<Group>> = HashSet::new();
    let mut open = BinaryHeap::new();
    let h0 = root.blocking_count();
    open.push(Reverse((weight * h0, h0, 0usize)));

    while let Some(Reverse((_, h, idx))) = open.pop() {
        if h == 0 {
            let mut moves = Vec::new();
            let mut cur = idx;
            while let Some(mv) = arena[cur].mv {
                moves.push(mv);
                cur = arena[cur].parent;
            }
            moves.reverse();
            return Some(Solution::new(moves));
        }
        if !closed.insert(arena[idx].bay.canonical_key()) || arena.len() >= node_budget {
            continue;
        }
        let cost = arena[idx].cost + 1;
        for mv in arena[idx].bay.legal_moves(arena[idx].mv) {
            let mut child = arena[idx].bay.clone();
            child.move_unchecked(mv);
            let h = child.blocking_count();
            let id = arena.len();
            arena.push(Entry {
                bay: child,
                parent: idx,
                mv: Some(mv),
                cost,
            });
            open.push(Reverse((cost + weight * h, h, id)));
        }
    }
    None
}

/// Solves every instance, preserving input order. `parallelism` of 0 uses
/// the global rayon pool; 1 runs sequentially.
pub fn batch_solve(
    instances: &[Instance],
    time_limit_each: Option<Duration>,
    parallelism: usize,
) -> Vec<OracleResult> {
    let solve = |inst: &Instance| solve_exact(&inst.bay, time_limit_each);
    match parallelism {
        1 => instances.iter().map(solve).collect(),
        0 => instances.par_iter().map(solve).collect(),
        n => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(|| instances.par_iter().map(solve).collect()))
            .unwrap_or_else(|_| instances.iter().map(solve).collect()),
    }
}
