//! Word- and character-level combination baselines: two-system ROVER voting
//! and whole-transcript N-best LM rescoring.

use crate::error::{Error, Result};
use crate::lm::NGramLM;
use crate::merge::word_index_map;
use crate::types::ServiceHypothesis;

/// Which input wins an exact confidence tie.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TiePreference {
    /// The first hypothesis argument (by convention, the service).
    First,
    /// The second hypothesis argument (by convention, the local model).
    Second,
}

/// ROVER voting parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoverParams {
    /// Confidence assigned to the null (deletion) arc.
    pub conf_null: f64,
    pub prefer_on_tie: TiePreference,
}

impl RoverParams {
    pub fn new(conf_null: f64, prefer_on_tie: TiePreference) -> Result<Self> {
        if !(0.0..=1.0).contains(&conf_null) {
            return Err(Error::ParamOutOfRange {
                name: "conf_null",
                value: conf_null,
                range: "[0,1]",
            });
        }
        Ok(Self {
            conf_null,
            prefer_on_tie,
        })
    }
}

impl Default for RoverParams {
    fn default() -> Self {
        Self {
            conf_null: 0.45,
            prefer_on_tie: TiePreference::First,
        }
    }
}

/// One aligned voting slot: a token from each side, or None for a gap.
#[derive(Debug, Clone)]
struct Slot<T> {
    a: Option<(T, f64)>,
    b: Option<(T, f64)>,
}

/// Minimum-edit-distance alignment of two token sequences into voting slots.
/// Substitution and indels cost 1, matches 0; ties prefer the diagonal, then
/// consuming from `a`.
#[allow(clippy::needless_range_loop)]
fn align_slots<T: Clone + PartialEq>(a: &[(T, f64)], b: &[(T, f64)]) -> Vec<Slot<T>> {
    let n = a.len();
    let m = b.len();
    let width = m + 1;
    let mut dist = vec![0usize; (n + 1) * width];
    for j in 0..=m {
        dist[j] = j;
    }
    for i in 1..=n {
        dist[i * width] = i;
        for j in 1..=m {
            let same = a[i - 1].0 == b[j - 1].0;
            let diag = dist[(i - 1) * width + j - 1] + usize::from(!same);
            let up = dist[(i - 1) * width + j] + 1;
            let left = dist[i * width + j - 1] + 1;
            dist[i * width + j] = diag.min(up).min(left);
        }
    }

    let mut slots = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = dist[i * width + j];
        if i > 0 && j > 0 {
            let same = a[i - 1].0 == b[j - 1].0;
            if dist[(i - 1) * width + j - 1] + usize::from(!same) == here {
                slots.push(Slot {
                    a: Some(a[i - 1].clone()),
                    b: Some(b[j - 1].clone()),
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && dist[(i - 1) * width + j] + 1 == here {
            slots.push(Slot {
                a: Some(a[i - 1].clone()),
                b: None,
            });
            i -= 1;
            continue;
        }
        slots.push(Slot {
            a: None,
            b: Some(b[j - 1].clone()),
        });
        j -= 1;
    }
    slots.reverse();
    slots
}

/// Per slot, emits the higher-confidence candidate; a missing side competes
/// with `conf_null` and winning null arcs emit nothing.
fn vote<T: Clone + PartialEq>(slots: Vec<Slot<T>>, params: &RoverParams) -> Vec<T> {
    let mut out = Vec::with_capacity(slots.len());
    for slot in slots {
        let conf_a = slot.a.as_ref().map_or(params.conf_null, |x| x.1);
        let conf_b = slot.b.as_ref().map_or(params.conf_null, |x| x.1);
        let pick_a = if conf_a == conf_b {
            params.prefer_on_tie == TiePreference::First
        } else {
            conf_a > conf_b
        };
        let winner = if pick_a { slot.a } else { slot.b };
        if let Some((token, _)) = winner {
            out.push(token);
        }
    }
    out
}

fn word_candidates<'a>(transcript: &'a str, confs: &[f64]) -> Vec<(&'a str, f64)> {
    transcript
        .split_whitespace()
        .enumerate()
        .map(|(i, w)| (w, confs.get(i).copied().unwrap_or(1.0)))
        .collect()
}

/// Word-level two-system ROVER.
pub fn rover_words(
    a_transcript: &str,
    a_confs: &[f64],
    b_transcript: &str,
    b_confs: &[f64],
    params: &RoverParams,
) -> String {
    let a = word_candidates(a_transcript, a_confs);
    let b = word_candidates(b_transcript, b_confs);
    vote(align_slots(&a, &b), params).join(" ")
}

fn char_candidates(transcript: &str, confs: &[f64]) -> Vec<(char, f64)> {
    let map = word_index_map(transcript);
    transcript
        .chars()
        .enumerate()
        .map(|(i, c)| (c, confs.get(map[i]).copied().unwrap_or(1.0)))
        .collect()
}

/// Character-level two-system ROVER; space is an ordinary character and each
/// character inherits its parent word's confidence.
pub fn rover_chars(
    a_transcript: &str,
    a_confs: &[f64],
    b_transcript: &str,
    b_confs: &[f64],
    params: &RoverParams,
) -> String {
    let a = char_candidates(a_transcript, a_confs);
    let b = char_candidates(b_transcript, b_confs);
    vote(align_slots(&a, &b), params).into_iter().collect()
}

/// Picks the N-best candidate maximizing `lambda * service_score +
/// lm_logprob`; ties keep the earlier (higher-ranked) candidate.
pub fn rescore_nbest(svc: &ServiceHypothesis, lm: &NGramLM, lambda: f64) -> Result<String> {
    if svc.nbest().is_empty() {
        return Err(Error::EmptyNBest);
    }
    let mut best: Option<(f64, &str)> = None;
    for entry in svc.nbest() {
        let words: Vec<&str> = entry.transcript.split_whitespace().collect();
        let combined = lambda * entry.score + lm.logprob(&words);
        match best {
            Some((score, _)) if combined <= score => {}
            _ => best = Some((combined, &entry.transcript)),
        }
    }
    Ok(best.expect("nonempty nbest").1.to_string())
}
