//! Frame-level character posterior matrices.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vocab::Vocabulary;

/// Tolerance on incoming row sums. Rows further than this from 1 are
/// rejected rather than silently rescaled.
pub const ROW_SUM_INPUT_TOL: f64 = 1e-4;

/// A T x V matrix of per-frame probability distributions over the character
/// vocabulary (blank included), stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePosteriors<S: Scalar> {
    utterance_id: String,
    frames: usize,
    vocab_size: usize,
    probs: Vec<S>,
}

impl<S: Scalar> FramePosteriors<S> {
    /// Wraps a row-major buffer without validating probability constraints;
    /// shape is still enforced. Use [`validate_posteriors`] before decoding.
    pub fn from_raw(
        utterance_id: impl Into<String>,
        frames: usize,
        vocab_size: usize,
        probs: Vec<S>,
    ) -> Result<Self> {
        if probs.len() != frames * vocab_size {
            return Err(Error::MatrixShape {
                got: probs.len(),
                expected: frames * vocab_size,
                t: frames,
                v: vocab_size,
            });
        }
        Ok(Self {
            utterance_id: utterance_id.into(),
            frames,
            vocab_size,
            probs,
        })
    }

    /// Builds from per-frame rows.
    pub fn from_rows(utterance_id: impl Into<String>, rows: &[Vec<S>]) -> Result<Self> {
        let frames = rows.len();
        let vocab_size = rows.first().map_or(0, Vec::len);
        let mut probs = Vec::with_capacity(frames * vocab_size);
        for row in rows {
            if row.len() != vocab_size {
                return Err(Error::MatrixShape {
                    got: row.len(),
                    expected: vocab_size,
                    t: frames,
                    v: vocab_size,
                });
            }
            probs.extend_from_slice(row);
        }
        Self::from_raw(utterance_id, frames, vocab_size, probs)
    }

    pub fn utterance_id(&self) -> &str {
        &self.utterance_id
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn row(&self, t: usize) -> &[S] {
        &self.probs[t * self.vocab_size..(t + 1) * self.vocab_size]
    }

    pub fn prob(&self, t: usize, symbol: usize) -> S {
        self.probs[t * self.vocab_size + symbol]
    }

    pub fn as_slice(&self) -> &[S] {
        &self.probs
    }

    /// Index of the largest entry in frame `t`; ties go to the lowest index.
    pub fn argmax(&self, t: usize) -> usize {
        let row = self.row(t);
        let mut best = 0;
        for (i, &p) in row.iter().enumerate().skip(1) {
            if p > row[best] {
                best = i;
            }
        }
        best
    }

    pub fn max_prob(&self, t: usize) -> S {
        self.prob(t, self.argmax(t))
    }

    /// Converts element-wise, e.g. widening file-format `f32` to `f64` for
    /// decoding.
    pub fn cast<T: Scalar>(&self) -> FramePosteriors<T> {
        FramePosteriors {
            utterance_id: self.utterance_id.clone(),
            frames: self.frames,
            vocab_size: self.vocab_size,
            probs: self
                .probs
                .iter()
                .map(|&p| T::from_f64_lossy(p.to_f64_lossy()))
                .collect(),
        }
    }

    pub(crate) fn with_probs(&self, probs: Vec<S>) -> Self {
        debug_assert_eq!(probs.len(), self.probs.len());
        Self {
            utterance_id: self.utterance_id.clone(),
            frames: self.frames,
            vocab_size: self.vocab_size,
            probs,
        }
    }
}

/// Checks shape, non-negativity and row sums, then renormalizes each row to
/// sum to one. Rows already within the scalar's slack of one are left
/// bit-identical, which makes the operation idempotent.
pub fn validate_posteriors<S: Scalar>(
    p: FramePosteriors<S>,
    vocab: &Vocabulary,
) -> Result<FramePosteriors<S>> {
    if p.vocab_size != vocab.len() {
        return Err(Error::VocabSizeMismatch {
            n: vocab.len(),
            v: p.vocab_size,
        });
    }
    let one = S::one();
    let input_tol = S::from_f64_lossy(ROW_SUM_INPUT_TOL);
    let slack = S::row_sum_slack(p.vocab_size);
    let mut probs = p.probs.clone();
    for t in 0..p.frames {
        let row = &mut probs[t * p.vocab_size..(t + 1) * p.vocab_size];
        let mut sum = S::zero();
        for (symbol, &v) in row.iter().enumerate() {
            if v < S::zero() {
                return Err(Error::NegativeEntry {
                    frame: t,
                    symbol,
                    value: v.to_f64_lossy(),
                });
            }
            sum = sum + v;
        }
        if (sum - one).abs() > input_tol {
            return Err(Error::RowSumOutOfTolerance {
                frame: t,
                sum: sum.to_f64_lossy(),
                tol: ROW_SUM_INPUT_TOL,
            });
        }
        if (sum - one).abs() > slack {
            for v in row.iter_mut() {
                *v = *v / sum;
            }
        }
    }
    Ok(p.with_probs(probs))
}
