use std::collections::BTreeMap;

use thiserror::Error;

use crate::label_units::{LabelId, UnitKind};
use crate::target_encoding::{EncodeError, TargetCodec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("tree search needs a lexicon to take the word list from")]
    MissingLexicon,
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TreeNode {
    pub children: BTreeMap<LabelId, NodeId>,
    /// Indices into [`PrefixTree::words`] ending here, ascending.
    pub word_ends: Vec<u32>,
}

/// Trie over per-word label sequences. Children always have larger ids than
/// their parent.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixTree {
    nodes: Vec<TreeNode>,
    words: Vec<String>,
    word_labels: Vec<Vec<LabelId>>,
    separator: Option<LabelId>,
    eos: LabelId,
    vocab_size: usize,
}

impl PrefixTree {
    /// Empty tree; `separator` is the label required between words, if any.
    pub fn new(vocab_size: usize, eos: LabelId, separator: Option<LabelId>) -> Self {
        Self {
            nodes: vec![TreeNode::default()],
            words: Vec::new(),
            word_labels: Vec::new(),
            separator,
            eos,
            vocab_size,
        }
    }

    pub const ROOT: NodeId = NodeId(0);

    pub fn root(&self) -> NodeId {
        Self::ROOT
    }

    /// Adds a word path. Words must be inserted in ascending order so word
    /// indices follow lexicographic order.
    pub fn insert(&mut self, word: &str, labels: &[LabelId]) {
        debug_assert!(self.words.last().is_none_or(|w| w.as_str() < word));
        let mut cur = Self::ROOT;
        for &l in labels {
            cur = match self.nodes[cur.index()].children.get(&l) {
                Some(&c) => c,
                None => {
                    let id = NodeId(self.nodes.len() as u32);
                    self.nodes.push(TreeNode::default());
                    self.nodes[cur.index()].children.insert(l, id);
                    id
                }
            };
        }
        let w = self.words.len() as u32;
        self.words.push(word.to_string());
        self.word_labels.push(labels.to_vec());
        self.nodes[cur.index()].word_ends.push(w);
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id.index()]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, idx: u32) -> &str {
        &self.words[idx as usize]
    }

    pub fn word_index(&self, word: &str) -> Option<u32> {
        self.words
            .binary_search_by(|w| w.as_str().cmp(word))
            .ok()
            .map(|i| i as u32)
    }

    /// Label path of a word as inserted.
    pub fn labels_of(&self, idx: u32) -> &[LabelId] {
        &self.word_labels[idx as usize]
    }

    pub fn separator(&self) -> Option<LabelId> {
        self.separator
    }

    pub fn eos(&self) -> LabelId {
        self.eos
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Node reached from the root along `labels`.
    pub fn walk(&self, labels: &[LabelId]) -> Option<NodeId> {
        labels
            .iter()
            .try_fold(Self::ROOT, |n, l| self.nodes[n.index()].children.get(l).copied())
    }

    /// True when `labels` splits into root-to-word-end paths, joined by the
    /// separator if the tree has one. The empty sequence is accepted.
    pub fn accepts(&self, labels: &[LabelId]) -> bool {
        let n = labels.len();
        // ok[i]: a word boundary may sit before labels[i].
        let mut ok = vec![false; n + 1];
        ok[0] = true;
        for start in 0..n {
            if !ok[start] {
                continue;
            }
            let begin = match self.separator {
                Some(sep) if start > 0 => {
                    if labels[start] != sep {
                        continue;
                    }
                    start + 1
                }
                _ => start,
            };
            let mut cur = Self::ROOT;
            for (j, l) in labels.iter().enumerate().skip(begin) {
                match self.nodes[cur.index()].children.get(l) {
                    Some(&c) => cur = c,
                    None => break,
                }
                if !self.nodes[cur.index()].word_ends.is_empty() {
                    ok[j + 1] = true;
                }
            }
        }
        ok[n]
    }
}

/// Tree of the codec's lexicon words, each inserted along its label
/// encoding (for BPE schemes, the single greedy split). Whole-word schemes
/// skip lexicon words missing from the label vocabulary, since no label
/// sequence can produce them.
pub fn build_prefix_tree(codec: &TargetCodec) -> Result<PrefixTree, TreeError> {
    let lex = codec.lexicon().ok_or(TreeError::MissingLexicon)?;
    let vocab = codec.vocab();
    let whole_word = codec.scheme().kind == UnitKind::WholeWord;
    let mut tree = PrefixTree::new(vocab.len(), vocab.eos(), codec.separator());
    for word in lex.words() {
        if whole_word && vocab.id(word).is_none() {
            continue;
        }
        let labels = codec.word_labels(word)?;
        tree.insert(word, &labels);
    }
    Ok(tree)
}
