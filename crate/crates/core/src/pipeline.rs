//! End-to-end guided inference: align the service transcript, revise the
//! posteriors, beam-decode with the local LM. Falls back to plain local
//! decoding whenever the service transcript cannot be aligned.

use crate::align::{min_frames, smooth, viterbi_align, SMOOTH_EPS};
use crate::decode::{beam_decode, BeamParams};
use crate::lm::NGramLM;
use crate::merge::{revise, MergeParams};
use crate::posteriors::FramePosteriors;
use crate::scalar::Scalar;
use crate::types::ServiceHypothesis;
use crate::vocab::{normalize_text, Vocabulary};

/// Result of one guided inference run.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedTranscript {
    pub transcript: String,
    pub score: f64,
    /// True when the service transcript was unusable (empty or infeasible)
    /// and the output is plain local decoding.
    pub used_fallback: bool,
    /// Alignment log probability when alignment succeeded.
    pub alignment_log_prob: Option<f64>,
}

/// Runs the full fusion pipeline on one utterance. Never fails: alignment
/// problems flag `used_fallback` and decode the unrevised posteriors.
pub fn finemerge<S: Scalar>(
    p: &FramePosteriors<S>,
    svc: &ServiceHypothesis,
    merge_params: &MergeParams,
    beam_params: &BeamParams,
    lm: &NGramLM,
    vocab: &Vocabulary,
) -> FusedTranscript {
    let s = normalize_text(svc.transcript());
    let fallback = |p: &FramePosteriors<S>| {
        let out = beam_decode(p, lm, vocab, beam_params);
        let (transcript, score) = out
            .into_iter()
            .next()
            .unwrap_or_else(|| (String::new(), f64::NEG_INFINITY));
        FusedTranscript {
            transcript,
            score,
            used_fallback: true,
            alignment_log_prob: None,
        }
    };

    if s.is_empty() || p.frames() < min_frames(&s) {
        return fallback(p);
    }
    let log_p = match smooth(p, SMOOTH_EPS) {
        Ok(lp) => lp,
        Err(_) => return fallback(p),
    };
    let alignment = match viterbi_align(&s, &log_p, vocab) {
        Ok(a) => a,
        Err(_) => return fallback(p),
    };

    // Confidences travel with the original transcript; if normalization
    // changed the word count they no longer line up and default to 1.0.
    let confs: &[f64] = if svc.word_confidences().len() == s.split_whitespace().count() {
        svc.word_confidences()
    } else {
        &[]
    };
    let revised = match revise(p, &alignment, &s, confs, merge_params) {
        Ok(r) => r,
        Err(_) => return fallback(p),
    };
    let out = beam_decode(&revised, lm, vocab, beam_params);
    let (transcript, score) = out
        .into_iter()
        .next()
        .unwrap_or_else(|| (String::new(), f64::NEG_INFINITY));
    FusedTranscript {
        transcript,
        score,
        used_fallback: false,
        alignment_log_prob: Some(alignment.log_prob.to_f64_lossy()),
    }
}

/// Greedy decoding of the revised distribution, before any LM is applied.
/// Falls back to greedy decoding of the raw posteriors on alignment failure.
pub fn finemerge_greedy<S: Scalar>(
    p: &FramePosteriors<S>,
    svc: &ServiceHypothesis,
    merge_params: &MergeParams,
    vocab: &Vocabulary,
) -> (String, bool) {
    let s = normalize_text(svc.transcript());
    if !s.is_empty() && p.frames() >= min_frames(&s) {
        if let Ok(log_p) = smooth(p, SMOOTH_EPS) {
            if let Ok(alignment) = viterbi_align(&s, &log_p, vocab) {
                let confs: &[f64] =
                    if svc.word_confidences().len() == s.split_whitespace().count() {
                        svc.word_confidences()
                    } else {
                        &[]
                    };
                if let Ok(revised) = revise(p, &alignment, &s, confs, merge_params) {
                    return (crate::decode::greedy_decode(&revised, vocab), false);
                }
            }
        }
    }
    (crate::decode::greedy_decode(p, vocab), true)
}
