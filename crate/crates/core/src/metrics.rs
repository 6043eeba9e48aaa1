//! Word and character error rates plus per-word error-reduction analysis.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Alignment operation produced by [`edit_distance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EditOp {
    Match,
    Substitute,
    Delete,
    Insert,
}

/// Uniform-cost Levenshtein distance between token sequences with one
/// optimal alignment. Backtrace ties prefer match, then substitution, then
/// deletion, then insertion.
#[allow(clippy::needless_range_loop)]
pub fn edit_distance<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> (usize, Vec<EditOp>) {
    let n = reference.len();
    let m = hypothesis.len();
    let width = m + 1;
    let mut dist = vec![0usize; (n + 1) * width];
    for j in 0..=m {
        dist[j] = j;
    }
    for i in 1..=n {
        dist[i * width] = i;
        for j in 1..=m {
            let same = reference[i - 1] == hypothesis[j - 1];
            let diag = dist[(i - 1) * width + j - 1] + usize::from(!same);
            let del = dist[(i - 1) * width + j] + 1;
            let ins = dist[i * width + j - 1] + 1;
            dist[i * width + j] = diag.min(del).min(ins);
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = dist[i * width + j];
        if i > 0 && j > 0 {
            let same = reference[i - 1] == hypothesis[j - 1];
            let diag = dist[(i - 1) * width + j - 1];
            if same && diag == here {
                ops.push(EditOp::Match);
                i -= 1;
                j -= 1;
                continue;
            }
            if !same && diag + 1 == here {
                ops.push(EditOp::Substitute);
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && dist[(i - 1) * width + j] + 1 == here {
            ops.push(EditOp::Delete);
            i -= 1;
            continue;
        }
        ops.push(EditOp::Insert);
        j -= 1;
    }
    ops.reverse();
    (dist[n * width + m], ops)
}

fn words(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

fn chars(s: &str) -> Vec<char> {
    s.chars().collect()
}

/// Corpus-level metric: summed edit distance over summed reference length,
/// not a mean of per-utterance rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusMetric {
    pub edits: usize,
    pub reference_tokens: usize,
    pub rate: f64,
}

fn corpus_rate<T: PartialEq>(
    pairs: impl Iterator<Item = (Vec<T>, Vec<T>)>,
) -> Result<CorpusMetric> {
    let mut edits = 0usize;
    let mut reference_tokens = 0usize;
    for (r, h) in pairs {
        edits += edit_distance(&r, &h).0;
        reference_tokens += r.len();
    }
    if reference_tokens == 0 {
        return Err(Error::EmptyReferenceCorpus);
    }
    Ok(CorpusMetric {
        edits,
        reference_tokens,
        rate: edits as f64 / reference_tokens as f64,
    })
}

/// Corpus word error rate.
pub fn wer<R: AsRef<str>, H: AsRef<str>>(refs: &[R], hyps: &[H]) -> Result<CorpusMetric> {
    if refs.len() != hyps.len() {
        return Err(Error::CorpusLengthMismatch {
            refs: refs.len(),
            hyps: hyps.len(),
        });
    }
    corpus_rate(
        refs.iter()
            .zip(hyps)
            .map(|(r, h)| (words(r.as_ref()), words(h.as_ref()))),
    )
}

/// Corpus character error rate; spaces count as characters.
pub fn cer<R: AsRef<str>, H: AsRef<str>>(refs: &[R], hyps: &[H]) -> Result<CorpusMetric> {
    if refs.len() != hyps.len() {
        return Err(Error::CorpusLengthMismatch {
            refs: refs.len(),
            hyps: hyps.len(),
        });
    }
    corpus_rate(
        refs.iter()
            .zip(hyps)
            .map(|(r, h)| (chars(r.as_ref()), chars(h.as_ref()))),
    )
}

/// One row of the per-word error-reduction report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordErrorReduction {
    pub word: String,
    pub occurrences: usize,
    pub err_a: f64,
    pub err_b: f64,
    pub reduction: f64,
}

/// Per reference word with at least `min_count` occurrences: the fraction of
/// occurrences each system failed to match in the optimal alignment, sorted
/// by `err_a - err_b` descending (largest improvement of B over A first).
pub fn per_word_error_reduction<R, A, B>(
    refs: &[R],
    hyps_a: &[A],
    hyps_b: &[B],
    min_count: usize,
) -> Result<Vec<WordErrorReduction>>
where
    R: AsRef<str>,
    A: AsRef<str>,
    B: AsRef<str>,
{
    if refs.len() != hyps_a.len() {
        return Err(Error::CorpusLengthMismatch {
            refs: refs.len(),
            hyps: hyps_a.len(),
        });
    }
    if refs.len() != hyps_b.len() {
        return Err(Error::CorpusLengthMismatch {
            refs: refs.len(),
            hyps: hyps_b.len(),
        });
    }

    #[derive(Default)]
    struct Tally {
        total: usize,
        matched_a: usize,
        matched_b: usize,
    }
    let mut tallies: HashMap<String, Tally> = HashMap::new();

    for ((r, a), b) in refs.iter().zip(hyps_a).zip(hyps_b) {
        let ref_words = words(r.as_ref());
        let matched_a = matched_flags(&ref_words, &words(a.as_ref()));
        let matched_b = matched_flags(&ref_words, &words(b.as_ref()));
        for (i, w) in ref_words.iter().enumerate() {
            let t = tallies.entry((*w).to_string()).or_default();
            t.total += 1;
            t.matched_a += usize::from(matched_a[i]);
            t.matched_b += usize::from(matched_b[i]);
        }
    }

    let mut rows: Vec<WordErrorReduction> = tallies
        .into_iter()
        .filter(|(_, t)| t.total >= min_count)
        .map(|(word, t)| {
            let err_a = 1.0 - t.matched_a as f64 / t.total as f64;
            let err_b = 1.0 - t.matched_b as f64 / t.total as f64;
            WordErrorReduction {
                word,
                occurrences: t.total,
                err_a,
                err_b,
                reduction: err_a - err_b,
            }
        })
        .collect();
    rows.sort_by(|x, y| {
        y.reduction
            .partial_cmp(&x.reduction)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| x.word.cmp(&y.word))
    });
    Ok(rows)
}

/// Which reference tokens are matched (Match op) in the optimal alignment.
fn matched_flags(reference: &[&str], hypothesis: &[&str]) -> Vec<bool> {
    let (_, ops) = edit_distance(reference, hypothesis);
    let mut flags = Vec::with_capacity(reference.len());
    for op in ops {
        match op {
            EditOp::Match => flags.push(true),
            EditOp::Substitute | EditOp::Delete => flags.push(false),
            EditOp::Insert => {}
        }
    }
    debug_assert_eq!(flags.len(), reference.len());
    flags
}

/// Renders a two-line aligned diff of one reference/hypothesis pair, padding
/// tokens to equal width per slot.
pub fn aligned_diff(reference: &str, hypothesis: &str) -> String {
    let r = words(reference);
    let h = words(hypothesis);
    let (_, ops) = edit_distance(&r, &h);
    let mut top = Vec::new();
    let mut bottom = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    for op in ops {
        let (a, b) = match op {
            EditOp::Match | EditOp::Substitute => {
                let pair = (r[i], h[j]);
                i += 1;
                j += 1;
                pair
            }
            EditOp::Delete => {
                let pair = (r[i], "*");
                i += 1;
                pair
            }
            EditOp::Insert => {
                let pair = ("*", h[j]);
                j += 1;
                pair
            }
        };
        let w = a.chars().count().max(b.chars().count());
        top.push(format!("{a:w$}"));
        bottom.push(format!("{b:w$}"));
    }
    format!("REF: {}\nHYP: {}", top.join(" "), bottom.join(" "))
}

/// One evaluated utterance: the reference plus each method's transcript.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub reference: String,
    pub hypotheses: std::collections::BTreeMap<String, String>,
}
