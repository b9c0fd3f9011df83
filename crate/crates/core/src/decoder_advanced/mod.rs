//! Lexicon-constrained search over a prefix tree of word label sequences,
//! with word-level LM scores applied at word ends and optional unigram LM
//! lookahead.

mod search;
mod tree;

pub use search::{
    decode_tree, format_tree_result, TreeDecodeError, TreeDecodeResult, TreeDecoderConfig, TreeSearch,
};
pub use tree::{build_prefix_tree, NodeId, PrefixTree, TreeError, TreeNode};
