//! Reserved label and token spellings.

/// End-of-word label appended to phone sequences, and the marker fused onto
/// the final character of a word for character BPE.
pub const EOW: &str = "</w>";

/// End-of-sentence label. Every label vocabulary contains it.
pub const EOS: &str = "</s>";

/// Unknown label, and the word emitted for unmappable label spans.
pub const UNK: &str = "<UNK>";

/// Whitespace label separating words in the single-character scheme.
pub const SPACE: &str = "<space>";

/// Prefix of homophone disambiguation symbols (`$1`, `$2`, ...).
pub const DISAMBIG_PREFIX: char = '$';

/// Suffix marking a word-final phone (`t#`).
pub const WORD_END_MARK: char = '#';

/// Joiner placed between phone symbols when BPE merges them.
pub const PHONE_BPE_JOINER: &str = "+";

/// Sentence boundaries and unknown token of n-gram language models.
pub const LM_BOS: &str = "<s>";
pub const LM_EOS: &str = "</s>";
pub const LM_UNK: &str = "<unk>";

/// Spelling of the `k`-th disambiguation symbol, `k >= 1`.
pub fn disambig_symbol(k: usize) -> String {
    format!("{DISAMBIG_PREFIX}{k}")
}

/// True for `$k` with `k` a positive decimal number.
pub fn is_disambig(label: &str) -> bool {
    label
        .strip_prefix(DISAMBIG_PREFIX)
        .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
}

/// True for a word-end-phone label such as `t#`.
pub fn is_word_end_phone(label: &str) -> bool {
    label.len() > 1 && label.ends_with(WORD_END_MARK)
}

/// Marks a phone as word-final.
pub fn word_end_phone(phone: &str) -> String {
    format!("{phone}{WORD_END_MARK}")
}
