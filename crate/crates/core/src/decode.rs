//! CTC decoding over posterior matrices: greedy argmax decoding, exact
//! forward-algorithm sequence scoring, prefix beam search with shallow LM
//! fusion, and word-confidence estimation for local hypotheses.

use crate::align::{smooth, viterbi_align, AugmentedLabels, SMOOTH_EPS};
use crate::error::{Error, Result};
use crate::lm::{LmState, NGramLM};
use crate::merge::word_index_map;
use crate::posteriors::FramePosteriors;
use crate::scalar::{log_sum_exp2, Scalar};
use crate::types::LocalHypothesis;
use crate::vocab::Vocabulary;

/// Beam search parameters. `alpha` scales LM log probabilities, `beta` is a
/// per-word insertion bonus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamParams {
    pub width: usize,
    pub alpha: f64,
    pub beta: f64,
    pub nbest: usize,
}

impl BeamParams {
    pub fn new(width: usize, alpha: f64, beta: f64, nbest: usize) -> Result<Self> {
        if width < 1 {
            return Err(Error::ParamOutOfRange {
                name: "width",
                value: width as f64,
                range: "[1, inf)",
            });
        }
        if nbest < 1 || nbest > width {
            return Err(Error::ParamOutOfRange {
                name: "nbest",
                value: nbest as f64,
                range: "[1, width]",
            });
        }
        if alpha < 0.0 {
            return Err(Error::ParamOutOfRange {
                name: "alpha",
                value: alpha,
                range: "[0, inf)",
            });
        }
        Ok(Self {
            width,
            alpha,
            beta,
            nbest,
        })
    }

    pub fn acoustic_only(width: usize) -> Self {
        Self {
            width,
            alpha: 0.0,
            beta: 0.0,
            nbest: 1,
        }
    }
}

impl Default for BeamParams {
    fn default() -> Self {
        Self {
            width: 100,
            alpha: 1.0,
            beta: 0.5,
            nbest: 1,
        }
    }
}

/// Per-frame argmax (ties to the lowest index), collapse repeats, drop
/// blanks.
pub fn greedy_decode<S: Scalar>(p: &FramePosteriors<S>, vocab: &Vocabulary) -> String {
    let mut out = String::new();
    let mut last = vocab.blank();
    for t in 0..p.frames() {
        let c = p.argmax(t);
        if c != last && !vocab.is_blank(c) {
            out.push(vocab.char_at(c));
        }
        last = c;
    }
    out
}

/// Log of the total CTC probability of `y`: the sum over every valid frame
/// expansion of the product of frame probabilities (forward algorithm over
/// the blank-interleaved labels).
pub fn ctc_logprob<S: Scalar>(
    p: &FramePosteriors<S>,
    y: &str,
    vocab: &Vocabulary,
) -> Result<S> {
    let encoded = vocab.encode(y)?;
    let needed = crate::align::min_frames(y);
    if p.frames() < needed {
        return Err(Error::InfeasibleAlignment {
            len: encoded.len(),
            needed,
            frames: p.frames(),
        });
    }
    if p.frames() == 0 {
        return Ok(S::zero());
    }
    let labels = AugmentedLabels::new(&encoded, vocab);
    let n_states = labels.len();
    let neg_inf = S::neg_infinity();
    let ln = |v: S| -> S {
        if v > S::zero() {
            v.ln()
        } else {
            neg_inf
        }
    };

    let mut prev = vec![neg_inf; n_states];
    let mut curr = vec![neg_inf; n_states];
    let row0 = p.row(0);
    prev[0] = ln(row0[labels.symbol(0)]);
    if n_states > 1 {
        prev[1] = ln(row0[labels.symbol(1)]);
    }
    for t in 1..p.frames() {
        let row = p.row(t);
        for state in 0..n_states {
            let mut acc = prev[state];
            if state >= 1 {
                acc = log_sum_exp2(acc, prev[state - 1]);
            }
            if state >= 2
                && !labels.is_blank_state(state)
                && labels.symbol(state) != labels.symbol(state - 2)
            {
                acc = log_sum_exp2(acc, prev[state - 2]);
            }
            curr[state] = acc + ln(row[labels.symbol(state)]);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    let mut total = prev[n_states - 1];
    if n_states >= 2 {
        total = log_sum_exp2(total, prev[n_states - 2]);
    }
    Ok(total)
}

/// One trie node: a collapsed prefix represented by a parent link plus the
/// extension character. The LM fields are pure functions of the prefix text
/// and are computed once, when the node is created.
struct PrefixNode {
    parent: u32,
    ch: u8,
    depth: u32,
    /// Depth at which the current partial word begins.
    word_start: u32,
    lm_state: LmState,
    /// Linear-domain LM factor every probability mass entering this node
    /// through its parent edge is multiplied by (1 except word-completing
    /// space edges).
    edge_factor: f64,
    /// Child node ids indexed by vocabulary symbol; allocated lazily.
    children: Vec<u32>,
}

/// Beam search working state. Probability masses stay in the linear domain,
/// rescaled by the per-frame maximum so long utterances cannot underflow;
/// `log_scale` accumulates the rescaling so absolute log scores are exact.
struct PrefixBeam<'a, S: Scalar> {
    nodes: Vec<PrefixNode>,
    lm: &'a NGramLM,
    vocab: &'a Vocabulary,
    alpha: f64,
    beta: f64,
    /// Per-node accumulation slots for the frame being processed.
    acc_blank: Vec<S>,
    acc_char: Vec<S>,
    stamp: Vec<u32>,
    generation: u32,
    touched: Vec<u32>,
}

/// One live beam candidate: trie node plus blank-/non-blank-ending masses.
#[derive(Clone, Copy)]
struct BeamSlot<S> {
    node: u32,
    prob_blank: S,
    prob_no_blank: S,
}

impl<'a, S: Scalar> PrefixBeam<'a, S> {
    fn new(lm: &'a NGramLM, vocab: &'a Vocabulary, params: &BeamParams) -> Self {
        let root = PrefixNode {
            parent: 0,
            ch: 0,
            depth: 0,
            word_start: 0,
            lm_state: lm.start(),
            edge_factor: 1.0,
            children: Vec::new(),
        };
        Self {
            nodes: vec![root],
            lm,
            vocab,
            alpha: params.alpha,
            beta: params.beta,
            acc_blank: vec![S::zero()],
            acc_char: vec![S::zero()],
            stamp: vec![0],
            generation: 0,
            touched: Vec::new(),
        }
    }

    /// Characters of the pending partial word of `node`.
    fn partial_word(&self, node: u32) -> String {
        let mut chars = Vec::new();
        let mut cur = &self.nodes[node as usize];
        while cur.depth > cur.word_start {
            chars.push(self.vocab.char_at(cur.ch as usize));
            cur = &self.nodes[cur.parent as usize];
        }
        chars.iter().rev().collect()
    }

    fn transcript(&self, node: u32) -> String {
        let mut chars = Vec::new();
        let mut cur = &self.nodes[node as usize];
        while cur.depth > 0 {
            chars.push(self.vocab.char_at(cur.ch as usize));
            cur = &self.nodes[cur.parent as usize];
        }
        chars.iter().rev().collect()
    }

    /// The prefix as raw symbol bytes, for lexicographic tie-breaks.
    fn prefix_bytes(&self, node: u32) -> Vec<u8> {
        let mut bytes = Vec::new();
        let mut cur = &self.nodes[node as usize];
        while cur.depth > 0 {
            bytes.push(cur.ch);
            cur = &self.nodes[cur.parent as usize];
        }
        bytes.reverse();
        bytes
    }

    /// Child of `parent` extended by symbol `ch`, created on first use.
    /// Returns the node id and the linear-domain LM factor the incoming
    /// probability mass must be multiplied by.
    fn child(&mut self, parent: u32, ch: u8) -> (u32, f64) {
        let v = self.vocab.len();
        if self.nodes[parent as usize].children.is_empty() {
            self.nodes[parent as usize].children = vec![0; v];
        }
        let existing = self.nodes[parent as usize].children[ch as usize];
        if existing != 0 {
            return (existing, self.nodes[existing as usize].edge_factor);
        }
        let p = &self.nodes[parent as usize];
        let depth = p.depth + 1;
        let mut word_start = p.word_start;
        let mut lm_state = p.lm_state;
        let mut factor = 1.0;
        if self.vocab.char_at(ch as usize) == ' ' {
            // The space completes the pending word, if any.
            if p.depth > p.word_start {
                let word = self.partial_word(parent);
                let (next_state, lp) = self.lm.score_word(&lm_state, &word);
                lm_state = next_state;
                factor = (self.alpha * lp + self.beta).exp();
            }
            word_start = depth;
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(PrefixNode {
            parent,
            ch,
            depth,
            word_start,
            lm_state,
            edge_factor: factor,
            children: Vec::new(),
        });
        self.nodes[parent as usize].children[ch as usize] = id;
        self.acc_blank.push(S::zero());
        self.acc_char.push(S::zero());
        self.stamp.push(0);
        (id, factor)
    }

    fn touch(&mut self, node: u32) {
        if self.stamp[node as usize] != self.generation {
            self.stamp[node as usize] = self.generation;
            self.acc_blank[node as usize] = S::zero();
            self.acc_char[node as usize] = S::zero();
            self.touched.push(node);
        }
    }

    fn add_blank(&mut self, node: u32, mass: S) {
        self.touch(node);
        self.acc_blank[node as usize] = self.acc_blank[node as usize] + mass;
    }

    fn add_char(&mut self, node: u32, mass: S) {
        self.touch(node);
        self.acc_char[node as usize] = self.acc_char[node as usize] + mass;
    }
}

/// CTC prefix beam search with shallow LM fusion at word boundaries.
///
/// Per-prefix blank-/non-blank-ending masses are maintained exactly (the
/// search is exhaustive whenever `width` exceeds the number of reachable
/// prefixes). Every completed word multiplies the prefix mass by
/// `exp(alpha * log P_lm(word | context) + beta)`, so per-frame pruning
/// ranks by the combined score; the end-of-sentence LM transition is applied
/// at finalization. Returns up to `nbest` transcripts with combined log
/// scores, best first; ties order lexicographically.
#[allow(clippy::needless_range_loop)]
pub fn beam_decode<S: Scalar>(
    p: &FramePosteriors<S>,
    lm: &NGramLM,
    vocab: &Vocabulary,
    params: &BeamParams,
) -> Vec<(String, f64)> {
    let blank = vocab.blank();
    let v = vocab.len();
    let mut beam_state = PrefixBeam::<S>::new(lm, vocab, params);
    let mut beam: Vec<BeamSlot<S>> = vec![BeamSlot {
        node: 0,
        prob_blank: S::one(),
        prob_no_blank: S::zero(),
    }];
    let mut log_scale = 0.0f64;
    let zero = S::zero();

    for t in 0..p.frames() {
        let row = p.row(t);
        beam_state.generation = beam_state.generation.wrapping_add(1);
        beam_state.touched.clear();

        for slot in &beam {
            let total = slot.prob_blank + slot.prob_no_blank;
            if total <= zero {
                continue;
            }
            let node = slot.node;
            let last = {
                let n = &beam_state.nodes[node as usize];
                if n.depth == 0 {
                    u8::MAX
                } else {
                    n.ch
                }
            };
            let p_blank = row[blank];
            if p_blank > zero {
                beam_state.add_blank(node, total * p_blank);
            }
            for c in 0..v {
                if c == blank {
                    continue;
                }
                let pc = row[c];
                if pc <= zero {
                    continue;
                }
                let c = c as u8;
                if c == last {
                    // Repeat without a separating blank collapses in place.
                    if slot.prob_no_blank > zero {
                        beam_state.add_char(node, slot.prob_no_blank * pc);
                    }
                    // After a blank the repeat starts a new character.
                    if slot.prob_blank > zero {
                        let (child, factor) = beam_state.child(node, c);
                        let factor = S::from_f64_lossy(factor);
                        beam_state.add_char(child, slot.prob_blank * pc * factor);
                    }
                } else {
                    let (child, factor) = beam_state.child(node, c);
                    let factor = S::from_f64_lossy(factor);
                    beam_state.add_char(child, total * pc * factor);
                }
            }
        }

        let mut candidates: Vec<BeamSlot<S>> = beam_state
            .touched
            .iter()
            .map(|&node| BeamSlot {
                node,
                prob_blank: beam_state.acc_blank[node as usize],
                prob_no_blank: beam_state.acc_char[node as usize],
            })
            .collect();
        let rank = |a: &BeamSlot<S>, b: &BeamSlot<S>| {
            let ta = a.prob_blank + a.prob_no_blank;
            let tb = b.prob_blank + b.prob_no_blank;
            tb.partial_cmp(&ta)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| {
                    beam_state
                        .prefix_bytes(a.node)
                        .cmp(&beam_state.prefix_bytes(b.node))
                })
        };
        if candidates.len() > params.width {
            candidates.select_nth_unstable_by(params.width - 1, rank);
            candidates.truncate(params.width);
        }
        candidates.sort_unstable_by(rank);

        // Rescale so the best mass is 1; exact up to float rounding.
        if let Some(top) = candidates.first() {
            let top_mass = top.prob_blank + top.prob_no_blank;
            if top_mass > zero {
                log_scale += top_mass.to_f64_lossy().ln();
                for slot in &mut candidates {
                    slot.prob_blank = slot.prob_blank / top_mass;
                    slot.prob_no_blank = slot.prob_no_blank / top_mass;
                }
            }
        }
        beam = candidates;
    }

    let mut finals: Vec<(String, f64)> = beam
        .iter()
        .filter(|slot| slot.prob_blank + slot.prob_no_blank > zero)
        .map(|slot| {
            let node = &beam_state.nodes[slot.node as usize];
            let mut lm_tail = 0.0;
            let mut state = node.lm_state;
            if node.depth > node.word_start {
                let word = beam_state.partial_word(slot.node);
                let (next_state, lp) = lm.score_word(&state, &word);
                state = next_state;
                lm_tail += params.alpha * lp + params.beta;
            }
            lm_tail += params.alpha * lm.finish(&state);
            let mass = (slot.prob_blank + slot.prob_no_blank).to_f64_lossy();
            let score = mass.ln() + log_scale + lm_tail;
            (beam_state.transcript(slot.node), score)
        })
        .collect();
    finals.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    finals.truncate(params.nbest);
    finals
}


/// Estimates per-word confidences for a transcript by force-aligning it and
/// taking the geometric mean of the aligned non-blank frame probabilities of
/// each word. Infeasible alignments yield a uniform 0.5 per word.
pub fn local_confidences<S: Scalar>(
    p: &FramePosteriors<S>,
    transcript: &str,
    vocab: &Vocabulary,
) -> LocalHypothesis {
    let words: Vec<&str> = transcript.split_whitespace().collect();
    if words.is_empty() {
        return LocalHypothesis {
            transcript: transcript.to_string(),
            word_confidences: Vec::new(),
        };
    }
    let alignment = smooth(p, SMOOTH_EPS)
        .ok()
        .and_then(|lp| viterbi_align(transcript, &lp, vocab).ok());
    let alignment = match alignment {
        Some(a) => a,
        None => {
            return LocalHypothesis {
                transcript: transcript.to_string(),
                word_confidences: vec![0.5; words.len()],
            }
        }
    };
    let char_words = word_index_map(transcript);
    let chars: Vec<char> = transcript.chars().collect();
    let mut log_sums = vec![0.0f64; words.len()];
    let mut counts = vec![0usize; words.len()];
    for t in 0..p.frames() {
        if let Some(pos) = alignment.source_char_positions[t] {
            if chars[pos] == ' ' {
                continue;
            }
            let word = char_words[pos];
            log_sums[word] += p.prob(t, alignment.states[t]).to_f64_lossy().max(f64::MIN_POSITIVE).ln();
            counts[word] += 1;
        }
    }
    let word_confidences = log_sums
        .iter()
        .zip(&counts)
        .map(|(&ls, &n)| {
            if n == 0 {
                0.5
            } else {
                (ls / n as f64).exp().clamp(0.0, 1.0)
            }
        })
        .collect();
    LocalHypothesis {
        transcript: transcript.to_string(),
        word_confidences,
    }
}
