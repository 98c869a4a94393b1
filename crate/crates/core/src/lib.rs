//! Learned branching and bounding for the container pre-marshalling problem.
//!
//! - [`model`]: bays, moves, instance generation and text formats.
//! - [`oracle`]: exact iterative-deepening solver used for labels and checks.
//! - [`nn`]: small feed-forward networks with tier-shared and per-stack layers.
//! - [`encoding`]: bay/move tensors, feasibility masking, example extraction.
//! - [`search`]: network-guided DFS, limited discrepancy and weighted beam search.
//! - [`train`]: datasets, supervised training with early stopping, gap reports.
//! - [`bench`]: the command implementations behind the `cpmp-dlts` binary.

pub mod bench;
pub mod encoding;
pub mod error;
pub mod model;
pub mod nn;
pub mod oracle;
pub mod search;
pub mod train;

pub use error::{Error, Result};
