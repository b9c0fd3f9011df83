//! ARPA text format.

use std::fmt::Write;

use super::{LmError, NGramEntry, NGramLm};
use crate::num::Real;

fn arpa_err(line: usize, reason: impl Into<String>) -> LmError {
    LmError::Arpa {
        line,
        reason: reason.into(),
    }
}

pub fn parse_arpa<F: Real>(text: &str) -> Result<NGramLm<F>, LmError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    loop {
        match lines.next() {
            Some((_, "\\data\\")) => break,
            Some(_) => continue,
            None => return Err(arpa_err(0, "missing \\data\\ section")),
        }
    }

    let mut declared: Vec<usize> = Vec::new();
    let mut pending = None;
    for (no, line) in lines.by_ref() {
        if line.is_empty() {
            continue;
        }
        if let Some(spec) = line.strip_prefix("ngram ") {
            let (n, count) = spec
                .split_once('=')
                .ok_or_else(|| arpa_err(no, "expected `ngram N=count`"))?;
            let n: usize = n.trim().parse().map_err(|_| arpa_err(no, "bad n-gram order"))?;
            let count: usize = count
                .trim()
                .parse()
                .map_err(|_| arpa_err(no, "bad n-gram count"))?;
            if n != declared.len() + 1 {
                return Err(arpa_err(no, format!("unexpected order {n} in header")));
            }
            declared.push(count);
        } else {
            pending = Some((no, line));
            break;
        }
    }
    if declared.is_empty() {
        return Err(arpa_err(0, "no n-gram counts in header"));
    }

    let order = declared.len();
    let mut lm = NGramLm::empty(order);
    let mut found = vec![0usize; order];
    let mut current: Option<usize> = None;
    let mut ended = false;
    let rest = pending.into_iter().chain(lines);
    for (no, line) in rest {
        if line.is_empty() {
            continue;
        }
        if line == "\\end\\" {
            ended = true;
            break;
        }
        if let Some(n) = line
            .strip_prefix('\\')
            .and_then(|l| l.strip_suffix("-grams:"))
        {
            let n: usize = n.parse().map_err(|_| arpa_err(no, "bad section header"))?;
            if n == 0 || n > order {
                return Err(arpa_err(no, format!("section {n} outside declared order {order}")));
            }
            current = Some(n);
            continue;
        }
        let n = current.ok_or_else(|| arpa_err(no, "entry outside an n-gram section"))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != n + 1 && fields.len() != n + 2 {
            return Err(arpa_err(no, format!("expected {n} tokens")));
        }
        let logprob: F = fields[0]
            .parse()
            .map_err(|_| arpa_err(no, format!("malformed probability `{}`", fields[0])))?;
        let backoff = match fields.get(n + 1) {
            Some(b) => Some(
                b.parse::<F>()
                    .map_err(|_| arpa_err(no, format!("malformed backoff `{b}`")))?,
            ),
            None => None,
        };
        lm.insert(&fields[1..=n], NGramEntry { logprob, backoff });
        found[n - 1] += 1;
    }
    if !ended {
        return Err(arpa_err(0, "missing \\end\\"));
    }
    for (i, (&d, &f)) in declared.iter().zip(&found).enumerate() {
        if d != f || lm.ngram_count(i + 1) != f {
            return Err(LmError::CountMismatch {
                order: i + 1,
                declared: d,
                found: lm.ngram_count(i + 1),
            });
        }
    }
    Ok(lm)
}

/// Writes the model with n-grams sorted by token strings.
pub fn write_arpa<F: Real>(lm: &NGramLm<F>) -> String {
    let mut out = String::from("\\data\\\n");
    for n in 1..=lm.order() {
        let _ = writeln!(out, "ngram {n}={}", lm.ngram_count(n));
    }
    for n in 1..=lm.order() {
        let _ = write!(out, "\n\\{n}-grams:\n");
        for (tokens, e) in lm.entries(n) {
            let _ = write!(out, "{}\t{}", e.logprob, tokens.join(" "));
            if let Some(b) = e.backoff {
                let _ = write!(out, "\t{b}");
            }
            out.push('\n');
        }
    }
    out.push_str("\n\\end\\\n");
    out
}
