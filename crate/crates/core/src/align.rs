//! CTC-style Viterbi forced alignment of a transcript onto frame posteriors.
//!
//! The transcript is expanded into the blank-interleaved label sequence
//! `[_, s1, _, s2, ..., sk, _]` and the max-probability length-T state path
//! is found by dynamic programming in the log domain. Smoothing adds a tiny
//! floor to every probability first so characters the local model never
//! heard remain reachable.

use crate::error::{Error, Result};
use crate::posteriors::FramePosteriors;
use crate::scalar::Scalar;
use crate::vocab::Vocabulary;

/// Default smoothing constant added to every probability entry before
/// alignment.
pub const SMOOTH_EPS: f64 = 1e-20;

/// Element-wise `log(p + eps)` of a posterior matrix. Only alignment consumes
/// this; the revision step consults the unsmoothed probabilities.
#[derive(Debug, Clone)]
pub struct SmoothedLogProbs<S: Scalar> {
    frames: usize,
    vocab_size: usize,
    log_probs: Vec<S>,
}

impl<S: Scalar> SmoothedLogProbs<S> {
    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn row(&self, t: usize) -> &[S] {
        &self.log_probs[t * self.vocab_size..(t + 1) * self.vocab_size]
    }
}

/// Smooths and moves a posterior matrix into the log domain.
pub fn smooth<S: Scalar>(p: &FramePosteriors<S>, eps: f64) -> Result<SmoothedLogProbs<S>> {
    if eps <= 0.0 {
        return Err(Error::NonPositiveEps(eps));
    }
    let eps = S::from_f64_lossy(eps);
    Ok(SmoothedLogProbs {
        frames: p.frames(),
        vocab_size: p.vocab_size(),
        log_probs: p.as_slice().iter().map(|&v| (v + eps).ln()).collect(),
    })
}

/// Minimum frame count that admits a CTC alignment of `s`: one frame per
/// character plus one mandatory blank between equal adjacent characters.
pub fn min_frames(s: &str) -> usize {
    let chars: Vec<char> = s.chars().collect();
    let repeats = chars.windows(2).filter(|w| w[0] == w[1]).count();
    chars.len() + repeats
}

/// The blank-interleaved expansion of a transcript: blank, s1, blank, s2,
/// ..., sk, blank (length 2k+1). Even states are blank; odd state `2i+1`
/// carries character `i` of the source transcript.
#[derive(Debug, Clone)]
pub struct AugmentedLabels {
    states: Vec<usize>,
    blank: usize,
}

impl AugmentedLabels {
    pub fn new(encoded: &[usize], vocab: &Vocabulary) -> Self {
        let mut states = Vec::with_capacity(2 * encoded.len() + 1);
        states.push(vocab.blank());
        for &c in encoded {
            states.push(c);
            states.push(vocab.blank());
        }
        Self {
            states,
            blank: vocab.blank(),
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn symbol(&self, state: usize) -> usize {
        self.states[state]
    }

    pub fn is_blank_state(&self, state: usize) -> bool {
        state.is_multiple_of(2)
    }

    /// Source character position for a label state.
    pub fn source_position(&self, state: usize) -> Option<usize> {
        if self.is_blank_state(state) {
            None
        } else {
            Some((state - 1) / 2)
        }
    }

    /// Whether the DP may skip from `state - 2` to `state`: only into a label
    /// state whose character differs from the label two states back.
    fn skip_allowed(&self, state: usize) -> bool {
        state >= 2 && !self.is_blank_state(state) && self.states[state] != self.states[state - 2]
    }

    pub fn blank_symbol(&self) -> usize {
        self.blank
    }
}

/// A length-T forced alignment: one vocabulary index per frame, the path's
/// total log probability, and for each frame the source character position
/// (None on blank frames).
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAlignment<S: Scalar> {
    pub states: Vec<usize>,
    pub log_prob: S,
    pub source_char_positions: Vec<Option<usize>>,
}

impl<S: Scalar> FrameAlignment<S> {
    /// Reconstructs the aligned transcript: drop blanks, collapse consecutive
    /// frames that map to the same source position.
    pub fn collapse(&self, vocab: &Vocabulary) -> String {
        let mut out = String::new();
        let mut last_pos: Option<usize> = None;
        for (t, &sym) in self.states.iter().enumerate() {
            match self.source_char_positions[t] {
                None => last_pos = None,
                Some(pos) => {
                    if last_pos != Some(pos) {
                        out.push(vocab.char_at(sym));
                    }
                    last_pos = Some(pos);
                }
            }
        }
        out
    }
}

/// Max-log-probability forced alignment of transcript `s` under the smoothed
/// matrix. Paths start in state 0 or 1 and end in one of the last two states.
/// DP score ties prefer the predecessor with the smallest state index, which
/// makes the backtrace deterministic.
pub fn viterbi_align<S: Scalar>(
    s: &str,
    log_p: &SmoothedLogProbs<S>,
    vocab: &Vocabulary,
) -> Result<FrameAlignment<S>> {
    if s.is_empty() {
        return Err(Error::EmptyTranscript);
    }
    let encoded = vocab.encode(s)?;
    let needed = min_frames(s);
    let frames = log_p.frames();
    if frames < needed {
        return Err(Error::InfeasibleAlignment {
            len: encoded.len(),
            needed,
            frames,
        });
    }

    let labels = AugmentedLabels::new(&encoded, vocab);
    let n_states = labels.len();
    let neg_inf = S::neg_infinity();

    let mut prev = vec![neg_inf; n_states];
    let mut curr = vec![neg_inf; n_states];
    // Backtrace: how far back the best predecessor sits (0 = stay, 1, 2).
    let mut back = vec![0u8; frames * n_states];

    let row0 = log_p.row(0);
    prev[0] = row0[labels.symbol(0)];
    if n_states > 1 {
        prev[1] = row0[labels.symbol(1)];
    }

    for t in 1..frames {
        let row = log_p.row(t);
        for state in 0..n_states {
            // Predecessors in increasing state order so that ties keep the
            // smallest index.
            let mut best = neg_inf;
            let mut step = 0u8;
            if labels.skip_allowed(state) && prev[state - 2] > best {
                best = prev[state - 2];
                step = 2;
            }
            if state >= 1 && prev[state - 1] > best {
                best = prev[state - 1];
                step = 1;
            }
            if prev[state] > best {
                best = prev[state];
                step = 0;
            }
            curr[state] = if best == neg_inf {
                neg_inf
            } else {
                best + row[labels.symbol(state)]
            };
            back[t * n_states + state] = step;
        }
        std::mem::swap(&mut prev, &mut curr);
    }

    // Accept the last label or the trailing blank; smallest index on ties.
    let mut end = n_states - 1;
    if n_states >= 2 && prev[n_states - 2] >= prev[n_states - 1] {
        end = n_states - 2;
    }
    let log_prob = prev[end];

    let mut state_path = vec![0usize; frames];
    let mut state = end;
    for t in (0..frames).rev() {
        state_path[t] = state;
        if t > 0 {
            state -= back[t * n_states + state] as usize;
        }
    }

    let states = state_path.iter().map(|&st| labels.symbol(st)).collect();
    let source_char_positions = state_path
        .iter()
        .map(|&st| labels.source_position(st))
        .collect();
    Ok(FrameAlignment {
        states,
        log_prob,
        source_char_positions,
    })
}
