//! Conversions between bays/moves and network tensors, feasibility masking
//! of policy outputs, and extraction of supervised examples from solutions.

use std::io::Write;

use crate::error::{Error, Result};
use crate::model::{Bay, Group, Instance, Move, Solution};

/// Flattens the bay stack-major, tiers bottom-up, dividing group values by
/// `scale`. Empty slots are 0.
pub fn encode_bay(bay: &Bay, scale: f64) -> Vec<f64> {
    bay.grid().iter().map(|&g| g as f64 / scale).collect()
}

pub fn encode_bay_into(bay: &Bay, scale: f64, out: &mut Vec<f64>) {
    out.clear();
    out.extend(bay.grid().iter().map(|&g| g as f64 / scale));
}

/// Inverse of [`encode_bay`] for inputs produced by it.
pub fn decode_bay(input: &[f64], stacks: usize, tiers: usize, scale: f64) -> Result<Bay> {
    if input.len() != stacks * tiers {
        return Err(Error::ShapeMismatch(format!(
            "{} values cannot form a {stacks}x{tiers} bay",
            input.len()
        )));
    }
    let mut columns = Vec::with_capacity(stacks);
    for s in 0..stacks {
        let raw = &input[s * tiers..(s + 1) * tiers];
        let groups: Vec<Group> = raw.iter().map(|&v| (v * scale).round() as Group).collect();
        let height = groups.iter().take_while(|&&g| g != 0).count();
        if groups[height..].iter().any(|&g| g != 0) {
            return Err(Error::ShapeMismatch(format!(
                "stack {} is not gravity packed",
                s + 1
            )));
        }
        columns.push(groups[..height].to_vec());
    }
    Bay::from_stacks(tiers, &columns)
}

/// Position of `mv` among the `S(S-1)` ordered pairs, lexicographic by
/// `(from, to)` with `from == to` skipped.
#[inline]
pub fn move_index(mv: Move, stacks: usize) -> usize {
    debug_assert!(mv.from != mv.to && mv.from < stacks && mv.to < stacks);
    let to = if mv.to > mv.from { mv.to - 1 } else { mv.to };
    mv.from * (stacks - 1) + to
}

#[inline]
pub fn index_move(index: usize, stacks: usize) -> Move {
    debug_assert!(index < stacks * (stacks - 1));
    let from = index / (stacks - 1);
    let to = index % (stacks - 1);
    Move::new(from, if to >= from { to + 1 } else { to })
}

/// Legal moves with their renormalised policy probabilities, most probable
/// first; ties go to the lower move index. The inverse of `previous` is
/// excluded. If the network puts no mass on any legal move, the legal moves
/// are treated as equally likely.
pub fn masked_policy(
    output: &[f64],
    bay: &Bay,
    previous: Option<Move>,
) -> Result<Vec<(Move, f64)>> {
    let stacks = bay.stacks();
    if output.len() != stacks * (stacks - 1) {
        return Err(Error::ShapeMismatch(format!(
            "policy has {} outputs, bay needs {}",
            output.len(),
            stacks * (stacks - 1)
        )));
    }
    let mut ranked: Vec<(usize, Move, f64)> = bay
        .legal_moves(previous)
        .into_iter()
        .map(|mv| {
            let i = move_index(mv, stacks);
            (i, mv, output[i].max(0.0))
        })
        .collect();
    if ranked.is_empty() {
        return Err(Error::DeadEnd);
    }
    let total: f64 = ranked.iter().map(|r| r.2).sum();
    if total > 0.0 && total.is_finite() {
        ranked.iter_mut().for_each(|r| r.2 /= total);
    } else {
        let uniform = 1.0 / ranked.len() as f64;
        ranked.iter_mut().for_each(|r| r.2 = uniform);
    }
    ranked.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    Ok(ranked.into_iter().map(|(_, mv, p)| (mv, p)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyExample {
    pub input: Vec<f64>,
    /// Index of the move taken (the hot entry of the one-hot target).
    pub target: usize,
    /// Length of the one-hot target, `S(S-1)`.
    pub classes: usize,
}

impl PolicyExample {
    pub fn one_hot(&self) -> Vec<f64> {
        crate::nn::one_hot(self.target, self.classes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueExample {
    pub input: Vec<f64>,
    /// Moves still needed from this state along the solution.
    pub target: f64,
}

/// One policy and one value example per pre-move state of `solution`,
/// obtained by replaying it on the instance bay.
pub fn extract_examples(
    instance: &Instance,
    solution: &Solution,
    scale: f64,
) -> Result<(Vec<PolicyExample>, Vec<ValueExample>)> {
    let stacks = instance.bay.stacks();
    let n = solution.len();
    let mut policy = Vec::with_capacity(n);
    let mut value = Vec::with_capacity(n);
    let mut bay = instance.bay.clone();
    for (i, &mv) in solution.moves.iter().enumerate() {
        bay.check_move(mv).map_err(|e| {
            Error::InvalidSolution(format!("{}: move {} of {n}: {e}", instance.id, i + 1))
        })?;
        let input = encode_bay(&bay, scale);
        policy.push(PolicyExample {
            input: input.clone(),
            target: move_index(mv, stacks),
            classes: stacks * (stacks - 1),
        });
        value.push(ValueExample {
            input,
            target: (n - i) as f64,
        });
        bay.move_unchecked(mv);
    }
    if !bay.is_sorted() {
        return Err(Error::InvalidSolution(format!(
            "{}: bay is not sorted after {n} moves",
            instance.id
        )));
    }
    Ok((policy, value))
}

fn csv_row(values: &[f64]) -> String {
    values
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// Writes `input_csv | target_csv` lines, policy examples first.
pub fn write_example_dump(
    policy: &[PolicyExample],
    value: &[ValueExample],
    mut out: impl Write,
) -> Result<()> {
    for ex in policy {
        writeln!(out, "{} | {}", csv_row(&ex.input), csv_row(&ex.one_hot()))?;
    }
    for ex in value {
        writeln!(out, "{} | {}", csv_row(&ex.input), ex.target)?;
    }
    Ok(())
}
