use super::{NGramLm, LOG10_FLOOR};
use crate::decoder_advanced::PrefixTree;
use crate::num::Real;

/// Per-node log10 lookahead: the best unigram score among the words ending
/// at or below each node. Nodes with no word below them get the floor.
pub fn lookahead_table<F: Real>(tree: &PrefixTree, lm: &NGramLm<F>) -> Vec<F> {
    let floor = F::of(LOG10_FLOOR);
    let mut table = vec![F::neg_infinity(); tree.len()];
    // Children have larger ids than parents, so a reverse sweep visits every
    // node after all of its descendants.
    for (i, node) in tree.nodes().iter().enumerate().rev() {
        let own = node
            .word_ends
            .iter()
            .map(|&w| lm.unigram(tree.word(w)))
            .fold(F::neg_infinity(), F::max);
        table[i] = node
            .children
            .values()
            .map(|c| table[c.index()])
            .fold(own, F::max);
    }
    for x in &mut table {
        if *x == F::neg_infinity() {
            *x = floor;
        }
    }
    table
}
