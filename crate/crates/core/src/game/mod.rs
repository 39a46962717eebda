//! Explicit extensive-form games: trees, information partitions, X-sequences
//! and reach probabilities.

mod format;
mod partition;
mod reach;
mod sequence;
mod tree;

pub use format::{content_hash, parse_tree, write_tree};
pub use partition::{InfoPartition, Infoset, InfosetId};
pub use reach::{expected_utilities, expected_utility, reach_all, reach_probability, Profile, Who};
pub use sequence::{is_perfect_recall, is_perfect_recall_for, x_sequence, PerfectRecall, PlayerFilter, XSequence};
pub use tree::{GameTree, Label, Node, NodeId, NodeKind, PathProb, Prob, TreeBuilder, Violation, DEFAULT_TOLERANCE};

/// |A| = Σ_{i, I} |A(I)|.
pub fn count_infoset_actions(partition: &InfoPartition) -> usize {
    partition.count_infoset_actions()
}
