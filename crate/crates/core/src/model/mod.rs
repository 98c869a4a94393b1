//! The container pre-marshalling problem: bays, moves, instances and
//! solutions, plus instance generation and the text file formats.

mod bay;
mod generate;
mod io;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bay::{Bay, Group, Move};
pub use generate::generate_instance;
pub use io::{
    parse_instance, parse_solution, read_instance, read_solution, render_instance, render_solution,
    write_instance, write_solution, INSTANCE_EXT, SOLUTION_EXT,
};

use crate::error::{Error, Result};

/// How many containers share each group value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GroupClass {
    G1,
    G2,
    G3,
}

impl GroupClass {
    pub const ALL: [GroupClass; 3] = [GroupClass::G1, GroupClass::G2, GroupClass::G3];

    pub fn multiplicity(self) -> usize {
        match self {
            GroupClass::G1 => 1,
            GroupClass::G2 => 2,
            GroupClass::G3 => 3,
        }
    }

    /// Infers the class from group multiplicities; `None` when the bay is
    /// empty or multiplicities are not uniform in {1, 2, 3}.
    pub fn infer(bay: &Bay) -> Option<GroupClass> {
        let mut counts: BTreeMap<Group, usize> = BTreeMap::new();
        for &g in bay.grid().iter().filter(|&&g| g != 0) {
            *counts.entry(g).or_default() += 1;
        }
        let mut values = counts.values();
        let first = *values.next()?;
        if values.any(|&c| c != first) {
            return None;
        }
        GroupClass::ALL
            .into_iter()
            .find(|c| c.multiplicity() == first)
    }
}

impl fmt::Display for GroupClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G{}", self.multiplicity())
    }
}

impl FromStr for GroupClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "G1" => Ok(GroupClass::G1),
            "G2" => Ok(GroupClass::G2),
            "G3" => Ok(GroupClass::G3),
            _ => Err(Error::Config(format!("unknown group class '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub id: String,
    pub class: Option<GroupClass>,
    pub bay: Bay,
}

impl Instance {
    /// Wraps a bay, inferring its class from group multiplicities.
    pub fn new(id: impl Into<String>, bay: Bay) -> Self {
        Instance {
            id: id.into(),
            class: GroupClass::infer(&bay),
            bay,
        }
    }

    /// Class label used for grouping reports; `mixed` when unknown.
    pub fn class_label(&self) -> String {
        self.class
            .map_or_else(|| "mixed".to_string(), |c| c.to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub moves: Vec<Move>,
}

impl Solution {
    pub fn new(moves: Vec<Move>) -> Self {
        Solution { moves }
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Replays the moves on `bay`, failing on the first illegal one.
    pub fn replay(&self, bay: &Bay) -> Result<Bay> {
        let mut state = bay.clone();
        for (i, &mv) in self.moves.iter().enumerate() {
            state.check_move(mv).map_err(|e| {
                Error::InvalidSolution(format!("move {} of {}: {e}", i + 1, self.len()))
            })?;
            state.move_unchecked(mv);
        }
        Ok(state)
    }

    /// Replays the moves and checks that the final bay is sorted.
    pub fn verify(&self, bay: &Bay) -> Result<()> {
        let end = self.replay(bay)?;
        if end.is_sorted() {
            Ok(())
        } else {
            Err(Error::InvalidSolution(format!(
                "bay is not sorted after {} moves",
                self.len()
            )))
        }
    }
}
