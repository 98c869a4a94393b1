//! Independent reference implementations used by the integration tests.
//! Nothing here calls the library's solver or its sortedness check.
#![allow(dead_code)]

pub mod gradcheck;

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Mutex;

use cpmp_dlts::model::{Bay, Group};
use cpmp_dlts::search::ValueModel;

/// Bottom-up stacks.
pub type State = Vec<Vec<Group>>;

pub fn state_of(bay: &Bay) -> State {
    (0..bay.stacks()).map(|s| bay.stack(s).to_vec()).collect()
}

/// Every stack is non-increasing from the bottom up.
pub fn sorted(state: &State) -> bool {
    state.iter().all(|s| s.windows(2).all(|w| w[0] >= w[1]))
}

/// Containers above a strictly smaller one somewhere below them.
pub fn misoverlaid(state: &State) -> usize {
    state
        .iter()
        .map(|s| {
            (0..s.len())
                .filter(|&i| s[..i].iter().any(|&b| b < s[i]))
                .count()
        })
        .sum()
}

fn successors(state: &State, tiers: usize) -> Vec<State> {
    let mut out = Vec::new();
    for f in 0..state.len() {
        if state[f].is_empty() {
            continue;
        }
        for t in 0..state.len() {
            if t == f || state[t].len() >= tiers {
                continue;
            }
            let mut next = state.clone();
            let c = next[f].pop().unwrap();
            next[t].push(c);
            out.push(next);
        }
    }
    out
}

/// Exact shortest number of moves by breadth-first search; `None` if no
/// sorted state is reachable.
pub fn bfs_length(bay: &Bay) -> Option<usize> {
    let start = state_of(bay);
    let tiers = bay.tiers();
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([(start, 0usize)]);
    while let Some((state, d)) = queue.pop_front() {
        if sorted(&state) {
            return Some(d);
        }
        for next in successors(&state, tiers) {
            if seen.insert(next.clone()) {
                queue.push_back((next, d + 1));
            }
        }
    }
    None
}

/// Value model answering with the exact remaining move count, infinite
/// for unsortable bays.
#[derive(Default)]
pub struct ExactValue {
    memo: Mutex<HashMap<State, f64>>,
}

impl ValueModel for ExactValue {
    fn value(&self, bay: &Bay) -> cpmp_dlts::Result<f64> {
        let key = state_of(bay);
        if let Some(&v) = self.memo.lock().unwrap().get(&key) {
            return Ok(v);
        }
        let v = bfs_length(bay).map_or(f64::INFINITY, |v| v as f64);
        self.memo.lock().unwrap().insert(key, v);
        Ok(v)
    }
}

/// Random small bay with `containers` containers of groups 1..=max_group.
pub fn random_bay(
    stacks: usize,
    tiers: usize,
    containers: usize,
    max_group: Group,
    seed: u64,
) -> Bay {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut state: State = vec![Vec::new(); stacks];
    for _ in 0..containers {
        let open: Vec<usize> = (0..stacks)
            .filter(|&s| state[s].len() < tiers - 1)
            .collect();
        let s = open[rng.gen_range(0..open.len())];
        state[s].push(rng.gen_range(1..=max_group));
    }
    Bay::from_stacks(tiers, &state).unwrap()
}
