use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{heuristic_lower_bound, queries_value, Models, Run, SearchConfig, SearchResult};
use crate::error::Result;
use crate::model::{Bay, Move};

/// Discrepancy and depth of a node popped by LDS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PopKey {
    pub discrepancy: u64,
    pub depth: usize,
}

#[derive(Clone, Copy)]
enum Order {
    Discrepancy,
    Weighted,
}

const NO_PARENT: u32 = u32::MAX;

struct Entry {
    /// Accumulated discrepancy (LDS) or `f` (WBS).
    priority: f64,
    discrepancy: u64,
    depth: usize,
    seq: u64,
    node: u32,
    bay: Bay,
    /// Value prediction made when the node was generated (WBS).
    prediction: Option<f64>,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    /// Greatest entry is popped first: lowest priority, then deepest, then
    /// oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .priority
            .total_cmp(&self.priority)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

/// Limited discrepancy search over a priority queue keyed by accumulated
/// discrepancy, deeper nodes first on ties.
pub fn dlts_lds(root: &Bay, models: Models<'_>, config: &SearchConfig) -> Result<SearchResult> {
    best_first(root, models, config, Order::Discrepancy, None)
}

/// [`dlts_lds`] that also returns the key of every popped node in order.
pub fn dlts_lds_traced(
    root: &Bay,
    models: Models<'_>,
    config: &SearchConfig,
) -> Result<(SearchResult, Vec<PopKey>)> {
    let mut trace = Vec::new();
    let res = best_first(root, models, config, Order::Discrepancy, Some(&mut trace))?;
    Ok((res, trace))
}

/// Best-first search on `alpha * cost + gamma * d * value`, with the policy
/// used only to limit branching. Requires a value model.
pub fn dlts_wbs(root: &Bay, models: Models<'_>, config: &SearchConfig) -> Result<SearchResult> {
    if models.value.is_none() {
        return Err(crate::Error::Config(
            "weighted beam search needs a value network".into(),
        ));
    }
    best_first(root, models, config, Order::Weighted, None)
}

/// Discrepancy added by the child ranked `rank` with probability `prob`,
/// where `r` is the largest probability among its siblings.
pub(crate) fn discrepancy_increment(
    config: &SearchConfig,
    rank: usize,
    prob: f64,
    r: f64,
    child_depth: usize,
) -> u64 {
    if child_depth < config.z {
        return 0;
    }
    if !config.binning {
        return rank as u64;
    }
    let b = config.bins;
    let width = r / b as f64;
    // bins are [r - (j+1) w, r - j w) from the top, the top one closed at r
    let from_bottom = ((prob / width).floor() as usize).min(b - 1);
    (b - 1 - from_bottom) as u64
}

fn best_first(
    root: &Bay,
    models: Models<'_>,
    config: &SearchConfig,
    order: Order,
    mut trace: Option<&mut Vec<PopKey>>,
) -> Result<SearchResult> {
    let mut run = Run::new(root, models, config)?;
    // (parent, move) per generated node, for path reconstruction
    let mut tree: Vec<(u32, Move)> = Vec::new();
    let mut queue = BinaryHeap::new();
    let mut seq = 0u64;
    let root_prediction = match order {
        Order::Weighted => run.predict(root)?,
        Order::Discrepancy => None,
    };
    queue.push(Entry {
        priority: match order {
            Order::Weighted => weighted(config, 0, root_prediction),
            Order::Discrepancy => 0.0,
        },
        discrepancy: 0,
        depth: 0,
        seq,
        node: NO_PARENT,
        bay: root.clone(),
        prediction: root_prediction,
    });

    while !run.out_of_time() {
        let Some(entry) = queue.pop() else { break };
        run.nodes += 1;
        if let Some(t) = trace.as_deref_mut() {
            t.push(PopKey {
                discrepancy: entry.discrepancy,
                depth: entry.depth,
            });
        }
        let cost = entry.depth;
        if entry.bay.is_sorted() {
            run.offer(|| path(&tree, entry.node), cost);
            continue;
        }
        if cost >= run.ub {
            continue;
        }
        let prediction = match order {
            Order::Weighted => entry.prediction,
            Order::Discrepancy if queries_value(cost, config.k) => run.predict(&entry.bay)?,
            Order::Discrepancy => None,
        };
        if heuristic_lower_bound(cost, prediction, config.d) >= run.ub as f64 {
            continue;
        }
        let previous = (entry.node != NO_PARENT).then(|| tree[entry.node as usize].1);
        let (branches, r) = run.branches(&entry.bay, cost, previous)?;
        for (rank, (mv, prob)) in branches.into_iter().enumerate() {
            let mut bay = entry.bay.clone();
            bay.move_unchecked(mv);
            let depth = cost + 1;
            let node = u32::try_from(tree.len()).expect("search tree exceeds u32 nodes");
            tree.push((entry.node, mv));
            seq += 1;
            let (priority, discrepancy, prediction) = match order {
                Order::Discrepancy => {
                    let disc =
                        entry.discrepancy + discrepancy_increment(config, rank, prob, r, depth);
                    (disc as f64, disc, None)
                }
                Order::Weighted => {
                    let v = if bay.is_sorted() {
                        Some(0.0)
                    } else {
                        run.predict(&bay)?
                    };
                    (weighted(config, depth, v), 0, v)
                }
            };
            queue.push(Entry {
                priority,
                discrepancy,
                depth,
                seq,
                node,
                bay,
                prediction,
            });
        }
    }
    Ok(run.finish())
}

fn weighted(config: &SearchConfig, cost: usize, prediction: Option<f64>) -> f64 {
    config.alpha * cost as f64 + config.gamma * config.d * prediction.unwrap_or(0.0).max(0.0)
}

fn path(tree: &[(u32, Move)], mut node: u32) -> Vec<Move> {
    let mut moves = Vec::new();
    while node != NO_PARENT {
        let (parent, mv) = tree[node as usize];
        moves.push(mv);
        node = parent;
    }
    moves.reverse();
    moves
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_instance, GroupClass};
    use crate::oracle::solve_exact;
    use crate::search::{MpVariant, UniformPolicy, ValueModel};

    fn keep_all() -> SearchConfig {
        SearchConfig {
            p: 1.0,
            mp: MpVariant::Constant,
            time_limit: None,
            ..SearchConfig::default()
        }
    }

    #[test]
    fn rank_increments() {
        let cfg = keep_all();
        let incs: Vec<u64> = [0.7, 0.2, 0.1]
            .iter()
            .enumerate()
            .map(|(i, &p)| discrepancy_increment(&cfg, i, p, 0.7, 3))
            .collect();
        assert_eq!(incs, vec![0, 1, 2]);
    }

    #[test]
    fn bin_increments() {
        let cfg = SearchConfig {
            binning: true,
            bins: 2,
            ..keep_all()
        };
        let incs: Vec<u64> = [0.7, 0.65, 0.1]
            .iter()
            .enumerate()
            .map(|(i, &p)| discrepancy_increment(&cfg, i, p, 0.7, 3))
            .collect();
        assert_eq!(incs, vec![0, 0, 1]);
        assert_eq!(discrepancy_increment(&cfg, 2, 0.35, 0.7, 3), 0);
        assert_eq!(discrepancy_increment(&cfg, 2, 0.0, 0.7, 3), 1);
    }

    #[test]
    fn single_bin_and_shallow_children_add_nothing() {
        let one_bin = SearchConfig {
            binning: true,
            bins: 1,
            ..keep_all()
        };
        for rank in 0..6 {
            assert_eq!(
                discrepancy_increment(&one_bin, rank, 1.0 / 6.0, 1.0 / 6.0, 4),
                0
            );
        }
        let shallow = SearchConfig { z: 3, ..keep_all() };
        assert_eq!(discrepancy_increment(&shallow, 5, 0.01, 0.5, 2), 0);
        assert_eq!(discrepancy_increment(&shallow, 5, 0.01, 0.5, 3), 5);
    }

    #[test]
    fn lds_keep_all_is_optimal() {
        for seed in 0..10 {
            let inst = generate_instance(3, 4, GroupClass::G2, 6, seed).unwrap();
            let res = dlts_lds(&inst.bay, Models::new(&UniformPolicy, None), &keep_all()).unwrap();
            let sol = res.solution.unwrap();
            sol.verify(&inst.bay).unwrap();
            assert_eq!(
                Some(sol.len()),
                solve_exact(&inst.bay, None).length(),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn lds_uniform_single_bin_is_depth_first() {
        let inst = generate_instance(3, 4, GroupClass::G1, 5, 11).unwrap();
        let cfg = SearchConfig {
            binning: true,
            bins: 1,
            ..keep_all()
        };
        let (_, trace) =
            dlts_lds_traced(&inst.bay, Models::new(&UniformPolicy, None), &cfg).unwrap();
        assert!(trace.iter().all(|k| k.discrepancy == 0));
        assert_eq!(trace[1].depth, 1);
        assert_eq!(trace[2].depth, 2);
    }

    #[test]
    fn lds_pops_minimum_discrepancy() {
        let inst = generate_instance(3, 4, GroupClass::G1, 6, 2).unwrap();
        let (res, trace) =
            dlts_lds_traced(&inst.bay, Models::new(&UniformPolicy, None), &keep_all()).unwrap();
        assert!(res.completed);
        assert_eq!(trace.len() as u64, res.nodes_opened);
        assert!(trace
            .windows(2)
            .all(|w| w[0].discrepancy <= w[1].discrepancy));
    }

    struct Exact;
    impl ValueModel for Exact {
        fn value(&self, bay: &Bay) -> Result<f64> {
            Ok(solve_exact(bay, None).length().unwrap() as f64)
        }
    }

    #[test]
    fn wbs_with_exact_value_is_optimal() {
        let cfg = SearchConfig {
            strategy: crate::search::Strategy::Wbs,
            d: 1.0,
            ..keep_all()
        };
        for seed in 0..10 {
            let inst = generate_instance(3, 4, GroupClass::G1, 5, seed).unwrap();
            let opt = solve_exact(&inst.bay, None).length().unwrap();
            let res = dlts_wbs(&inst.bay, Models::new(&UniformPolicy, Some(&Exact)), &cfg).unwrap();
            assert_eq!(res.ub(), Some(opt));
            res.solution.unwrap().verify(&inst.bay).unwrap();
        }
    }

    #[test]
    fn wbs_needs_value() {
        let bay = Bay::from_stacks(3, &[vec![1, 2], vec![]]).unwrap();
        assert!(dlts_wbs(&bay, Models::new(&UniformPolicy, None), &keep_all()).is_err());
    }
}
