use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Group value of a container. Zero marks an empty slot.
pub type Group = u16;

/// A crane move taking the top container of `from` and placing it on `to`.
///
/// Stack indices are zero-based in memory; text formats and `Display` use
/// one-based indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Move {
    pub from: usize,
    pub to: usize,
}

impl Move {
    pub const fn new(from: usize, to: usize) -> Self {
        Move { from, to }
    }

    /// The move that undoes this one.
    pub const fn inverse(self) -> Self {
        Move {
            from: self.to,
            to: self.from,
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.from + 1, self.to + 1)
    }
}

/// A bay of `stacks` stacks with room for `tiers` containers each.
///
/// Containers are gravity packed: stack `s` holds its containers at tiers
/// `0..height(s)`, tier 0 being the bottom. The grid is stored stack-major,
/// so position `(s, t)` lives at `s * tiers + t`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Bay {
    stacks: usize,
    tiers: usize,
    grid: Vec<Group>,
    heights: Vec<u8>,
}

impl Bay {
    pub fn empty(stacks: usize, tiers: usize) -> Result<Self> {
        if stacks == 0 || tiers == 0 {
            return Err(Error::InfeasibleSpec(format!(
                "bay needs at least one stack and one tier, got {stacks}x{tiers}"
            )));
        }
        if tiers > u8::MAX as usize {
            return Err(Error::InfeasibleSpec(format!("too many tiers: {tiers}")));
        }
        Ok(Bay {
            stacks,
            tiers,
            grid: vec![0; stacks * tiers],
            heights: vec![0; stacks],
        })
    }

    /// Builds a bay from per-stack contents listed bottom to top.
    pub fn from_stacks<S: AsRef<[Group]>>(tiers: usize, stacks: &[S]) -> Result<Self> {
        let mut bay = Bay::empty(stacks.len(), tiers)?;
        for (s, content) in stacks.iter().enumerate() {
            let content = content.as_ref();
            if content.len() > tiers {
                return Err(Error::InfeasibleSpec(format!(
                    "stack {} holds {} containers but the bay has {tiers} tiers",
                    s + 1,
                    content.len()
                )));
            }
            for &g in content {
                if g == 0 {
                    return Err(Error::InfeasibleSpec(format!(
                        "stack {} contains group 0, which is reserved for empty slots",
                        s + 1
                    )));
                }
                bay.push(s, g);
            }
        }
        Ok(bay)
    }

    #[inline]
    pub fn stacks(&self) -> usize {
        self.stacks
    }

    #[inline]
    pub fn tiers(&self) -> usize {
        self.tiers
    }

    #[inline]
    pub fn height(&self, stack: usize) -> usize {
        self.heights[stack] as usize
    }

    /// Containers of `stack`, bottom to top.
    #[inline]
    pub fn stack(&self, stack: usize) -> &[Group] {
        let start = stack * self.tiers;
        &self.grid[start..start + self.height(stack)]
    }

    /// Group at `(stack, tier)`, zero if empty.
    #[inline]
    pub fn get(&self, stack: usize, tier: usize) -> Group {
        self.grid[stack * self.tiers + tier]
    }

    /// The full stack-major grid including empty slots.
    #[inline]
    pub fn grid(&self) -> &[Group] {
        &self.grid
    }

    #[inline]
    pub fn top(&self, stack: usize) -> Option<Group> {
        self.stack(stack).last().copied()
    }

    pub fn container_count(&self) -> usize {
        self.heights.iter().map(|&h| h as usize).sum()
    }

    pub fn max_group(&self) -> Group {
        self.grid.iter().copied().max().unwrap_or(0)
    }

    /// Every stack is non-increasing from bottom to top.
    pub fn is_sorted(&self) -> bool {
        (0..self.stacks).all(|s| self.stack(s).windows(2).all(|w| w[0] >= w[1]))
    }

    /// Number of containers sitting above some container with a strictly
    /// smaller group in the same stack. A lower bound on the moves left.
    pub fn blocking_count(&self) -> usize {
        (0..self.stacks)
            .map(|s| stack_blocking(self.stack(s)))
            .sum()
    }

    pub fn is_legal(&self, mv: Move) -> bool {
        mv.from != mv.to
            && mv.from < self.stacks
            && mv.to < self.stacks
            && self.heights[mv.from] > 0
            && self.height(mv.to) < self.tiers
    }

    /// All legal moves, lexicographic by `(from, to)`, skipping the inverse of
    /// `previous` when given.
    pub fn legal_moves(&self, previous: Option<Move>) -> Vec<Move> {
        let forbidden = previous.map(Move::inverse);
        let mut moves = Vec::with_capacity(self.stacks * (self.stacks - 1));
        for from in 0..self.stacks {
            if self.heights[from] == 0 {
                continue;
            }
            for to in 0..self.stacks {
                let mv = Move::new(from, to);
                if from != to && self.height(to) < self.tiers && Some(mv) != forbidden {
                    moves.push(mv);
                }
            }
        }
        moves
    }

    pub fn apply_move(&self, mv: Move) -> Result<Bay> {
        self.check_move(mv)?;
        let mut next = self.clone();
        next.move_unchecked(mv);
        Ok(next)
    }

    pub(crate) fn check_move(&self, mv: Move) -> Result<()> {
        let reason = if mv.from == mv.to {
            "source and target stack are the same"
        } else if mv.from >= self.stacks || mv.to >= self.stacks {
            "stack index out of range"
        } else if self.heights[mv.from] == 0 {
            "source stack is empty"
        } else if self.height(mv.to) >= self.tiers {
            "target stack is full"
        } else {
            return Ok(());
        };
        Err(Error::IllegalMove { mv, reason })
    }

    /// Applies a move in place. The caller guarantees legality.
    #[inline]
    pub(crate) fn move_unchecked(&mut self, mv: Move) {
        debug_assert!(self.is_legal(mv), "illegal move {mv}");
        let g = self.pop(mv.from);
        self.push(mv.to, g);
    }

    #[inline]
    fn push(&mut self, stack: usize, g: Group) {
        let h = self.height(stack);
        self.grid[stack * self.tiers + h] = g;
        self.heights[stack] += 1;
    }

    #[inline]
    fn pop(&mut self, stack: usize) -> Group {
        self.heights[stack] -= 1;
        let idx = stack * self.tiers + self.height(stack);
        std::mem::take(&mut self.grid[idx])
    }

    /// Stacks sorted lexicographically, flattened with their heights. Two
    /// bays that differ only by a stack permutation share the same key.
    pub fn canonical_key(&self) -> Vec<Group> {
        let mut order: Vec<usize> = (0..self.stacks).collect();
        order.sort_unstable_by(|&a, &b| self.stack(a).cmp(self.stack(b)));
        let mut key = Vec::with_capacity(self.container_count() + self.stacks);
        for s in order {
            key.push(self.heights[s] as Group);
            key.extend_from_slice(self.stack(s));
        }
        key
    }
}

pub(crate) fn stack_blocking(stack: &[Group]) -> usize {
    let mut min_below = Group::MAX;
    let mut count = 0;
    for &g in stack {
        if g > min_below {
            count += 1;
        }
        min_below = min_below.min(g);
    }
    count
}

impl fmt::Debug for Bay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Bay")
            .field("stacks", &self.stacks)
            .field("tiers", &self.tiers)
            .field(
                "content",
                &(0..self.stacks).map(|s| self.stack(s)).collect::<Vec<_>>(),
            )
            .finish()
    }
}

/// Renders the bay top-down, one column per stack.
impl fmt::Display for Bay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.max_group().to_string().len().max(1);
        for t in (0..self.tiers).rev() {
            for s in 0..self.stacks {
                if s > 0 {
                    f.write_str(" ")?;
                }
                match self.get(s, t) {
                    0 => write!(f, "{:>width$}", ".")?,
                    g => write!(f, "{g:>width$}")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
