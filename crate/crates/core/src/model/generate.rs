use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Bay, Group, GroupClass, Instance};
use crate::error::{Error, Result};

/// Tiers kept free at generation time so containers can be shuffled around.
const FREE_TIERS: usize = 2;

/// Generates a random instance with `fill` containers.
///
/// Each container goes onto a uniformly chosen stack among those still below
/// the generation cap of `tiers - 2`; group values are a shuffled multiset in
/// which every group appears `class.multiplicity()` times.
pub fn generate_instance(
    stacks: usize,
    tiers: usize,
    class: GroupClass,
    fill: usize,
    seed: u64,
) -> Result<Instance> {
    let cap = tiers.saturating_sub(FREE_TIERS);
    let capacity = stacks * cap;
    if fill > capacity {
        return Err(Error::InfeasibleSpec(format!(
            "{fill} containers exceed the generation capacity {stacks}x{cap} = {capacity}"
        )));
    }
    let k = class.multiplicity();
    if !fill.is_multiple_of(k) {
        return Err(Error::InfeasibleSpec(format!(
            "{fill} containers cannot be split into groups of {k}"
        )));
    }
    if fill / k > Group::MAX as usize {
        return Err(Error::InfeasibleSpec(format!(
            "too many groups: {}",
            fill / k
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups: Vec<Group> = (1..=(fill / k) as Group)
        .flat_map(|g| std::iter::repeat_n(g, k))
        .collect();
    groups.shuffle(&mut rng);

    let mut columns: Vec<Vec<Group>> = vec![Vec::new(); stacks];
    let mut open: Vec<usize> = (0..stacks).collect();
    for g in groups {
        let pick = rng.gen_range(0..open.len());
        let s = open[pick];
        columns[s].push(g);
        if columns[s].len() == cap {
            open.remove(pick);
        }
    }

    let bay = Bay::from_stacks(tiers, &columns)?;
    Ok(Instance {
        id: format!("{class}-{stacks}x{tiers}-n{fill}-s{seed}"),
        class: Some(class),
        bay,
    })
}
