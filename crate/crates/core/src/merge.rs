//! Selective revision of frame posteriors toward the aligned service
//! transcript.
//!
//! A frame is revised only when the aligned service character is plausible
//! but not already winning: `psi < P_t[S_t] < max_c P_t[c]`. The revised row
//! is a convex mix of the original row and a one-hot on the aligned
//! character, weighted by the service confidence of the character's parent
//! word (or by a fixed blank weight).

use crate::align::FrameAlignment;
use crate::error::{Error, Result};
use crate::posteriors::FramePosteriors;
use crate::scalar::Scalar;

/// Mixing hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeParams {
    /// Service probability threshold: aligned characters below this are
    /// treated as unheard and left alone.
    pub psi: f64,
    /// Service weight multiplying the parent word confidence.
    pub omega: f64,
    /// Mixing weight used when the aligned symbol is blank.
    pub gamma: f64,
}

impl MergeParams {
    pub fn new(psi: f64, omega: f64, gamma: f64) -> Result<Self> {
        if !psi.is_finite() || psi <= 0.0 {
            return Err(Error::ParamOutOfRange {
                name: "psi",
                value: psi,
                range: "(0, inf)",
            });
        }
        if !(0.0..=1.0).contains(&omega) {
            return Err(Error::ParamOutOfRange {
                name: "omega",
                value: omega,
                range: "[0,1]",
            });
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::ParamOutOfRange {
                name: "gamma",
                value: gamma,
                range: "[0,1]",
            });
        }
        Ok(Self { psi, omega, gamma })
    }
}

/// Maps each character position of a normalized transcript to its 0-based
/// word index; a space belongs to the word before it.
pub fn word_index_map(s: &str) -> Vec<usize> {
    let mut out = Vec::with_capacity(s.chars().count());
    let mut word = 0usize;
    for c in s.chars() {
        out.push(word);
        if c == ' ' {
            word += 1;
        }
    }
    out
}

/// Revises `P -> P^s` toward the aligned service characters. `word_confs`
/// holds one confidence per word of `s`; pass an empty slice to default every
/// word to 1.0. Ungated rows are returned bit-identical to the input.
pub fn revise<S: Scalar>(
    p: &FramePosteriors<S>,
    alignment: &FrameAlignment<S>,
    s: &str,
    word_confs: &[f64],
    params: &MergeParams,
) -> Result<FramePosteriors<S>> {
    if alignment.states.len() != p.frames() {
        return Err(Error::AlignmentLengthMismatch {
            alignment: alignment.states.len(),
            frames: p.frames(),
        });
    }
    let words = crate::types::word_count(s);
    if !word_confs.is_empty() && word_confs.len() != words {
        return Err(Error::ConfidenceCountMismatch {
            words,
            confidences: word_confs.len(),
        });
    }
    let char_words = word_index_map(s);
    let psi = S::from_f64_lossy(params.psi);
    let one = S::one();

    let mut out = Vec::with_capacity(p.frames() * p.vocab_size());
    for t in 0..p.frames() {
        let row = p.row(t);
        let aligned = alignment.states[t];
        let p_aligned = row[aligned];
        let p_max = p.max_prob(t);
        if psi < p_aligned && p_aligned < p_max {
            let weight = match alignment.source_char_positions[t] {
                None => params.gamma,
                Some(pos) => {
                    let conf = if word_confs.is_empty() {
                        1.0
                    } else {
                        word_confs[char_words[pos]]
                    };
                    params.omega * conf
                }
            };
            let w = S::from_f64_lossy(weight);
            let keep = one - w;
            for (c, &v) in row.iter().enumerate() {
                let mixed = if c == aligned { keep * v + w } else { keep * v };
                out.push(mixed);
            }
        } else {
            out.extend_from_slice(row);
        }
    }
    Ok(p.with_probs(out))
}
