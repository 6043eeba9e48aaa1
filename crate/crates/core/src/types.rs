//! Hypothesis containers shared by the pipeline and the baselines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::normalize_text;

/// One N-best alternative with a log-domain service score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NBestEntry {
    pub transcript: String,
    pub score: f64,
}

/// Transcript returned by the black-box service, with per-word confidences
/// and an optional N-best list.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceHypothesis {
    transcript: String,
    word_confidences: Vec<f64>,
    nbest: Vec<NBestEntry>,
}

impl ServiceHypothesis {
    /// Normalizes the raw transcript and attaches confidences. `None`
    /// confidences default to 1.0 per word. A confidence count that does not
    /// match the normalized word count is an error; callers with unreliable
    /// metadata can pass `None` instead.
    pub fn new(raw_transcript: &str, word_confidences: Option<Vec<f64>>) -> Result<Self> {
        let transcript = normalize_text(raw_transcript);
        let words = word_count(&transcript);
        let word_confidences = match word_confidences {
            Some(c) => {
                if c.len() != words {
                    return Err(Error::ConfidenceCountMismatch {
                        words,
                        confidences: c.len(),
                    });
                }
                for &v in &c {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::ParamOutOfRange {
                            name: "word_confidence",
                            value: v,
                            range: "[0,1]",
                        });
                    }
                }
                c
            }
            None => vec![1.0; words],
        };
        Ok(Self {
            transcript,
            word_confidences,
            nbest: Vec::new(),
        })
    }

    pub fn with_nbest(mut self, nbest: Vec<NBestEntry>) -> Self {
        self.nbest = nbest;
        self
    }

    pub fn transcript(&self) -> &str {
        &self.transcript
    }

    pub fn word_confidences(&self) -> &[f64] {
        &self.word_confidences
    }

    pub fn nbest(&self) -> &[NBestEntry] {
        &self.nbest
    }
}

/// Transcript decoded from the local model, with per-word confidences.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalHypothesis {
    pub transcript: String,
    pub word_confidences: Vec<f64>,
}

impl LocalHypothesis {
    pub fn new(transcript: String, word_confidences: Vec<f64>) -> Result<Self> {
        let words = word_count(&transcript);
        if word_confidences.len() != words {
            return Err(Error::ConfidenceCountMismatch {
                words,
                confidences: word_confidences.len(),
            });
        }
        Ok(Self {
            transcript,
            word_confidences,
        })
    }
}

pub(crate) fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}
