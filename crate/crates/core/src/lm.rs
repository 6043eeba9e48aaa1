//! Trigram word language model with stupid backoff, used by beam decoding
//! and N-best rescoring.
//!
//! Sentences are padded with one `<s>` context marker and terminated with
//! `</s>`. Scores back off trigram -> bigram -> unigram with a fixed factor
//! and bottom out at a log floor for unknown words. The model is immutable
//! once trained.

use std::collections::HashMap;
use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};

/// Backoff factor applied once per backoff level.
pub const BACKOFF_LAMBDA: f64 = 0.4;
/// Probability floor for words the model has never seen.
pub const UNKNOWN_FLOOR: f64 = 1e-7;

const MAGIC: &[u8; 4] = b"FMLM";
const VERSION: u16 = 1;

type WordId = u32;

const BOS: WordId = 0;
const EOS: WordId = 1;

/// Scoring context: the previous one or two tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LmState {
    prev2: Option<WordId>,
    prev1: WordId,
}

/// Immutable trigram model.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramLM {
    words: Vec<String>,
    word_ids: HashMap<String, WordId>,
    unigrams: HashMap<WordId, u64>,
    bigrams: HashMap<(WordId, WordId), u64>,
    trigrams: HashMap<(WordId, WordId, WordId), u64>,
    /// Token count excluding `<s>`; denominator of the unigram distribution.
    total_tokens: u64,
    lambda: f64,
    floor: f64,
}

/// Trains a trigram model over normalized sentences (one word sequence per
/// sentence). Blank sentences are skipped; an entirely empty corpus is an
/// error.
pub fn train_trigram<I, T>(corpus: I) -> Result<NGramLM>
where
    I: IntoIterator<Item = T>,
    T: AsRef<str>,
{
    let mut lm = NGramLM {
        words: vec!["<s>".to_string(), "</s>".to_string()],
        word_ids: HashMap::new(),
        unigrams: HashMap::new(),
        bigrams: HashMap::new(),
        trigrams: HashMap::new(),
        total_tokens: 0,
        lambda: BACKOFF_LAMBDA,
        floor: UNKNOWN_FLOOR,
    };
    lm.word_ids.insert("<s>".to_string(), BOS);
    lm.word_ids.insert("</s>".to_string(), EOS);

    let mut sentences = 0u64;
    for sentence in corpus {
        let words: Vec<&str> = sentence.as_ref().split_whitespace().collect();
        if words.is_empty() {
            continue;
        }
        sentences += 1;
        let mut tokens = Vec::with_capacity(words.len() + 2);
        tokens.push(BOS);
        for w in words {
            tokens.push(lm.intern(w));
        }
        tokens.push(EOS);

        for (i, &tok) in tokens.iter().enumerate() {
            if tok != BOS {
                *lm.unigrams.entry(tok).or_insert(0) += 1;
                lm.total_tokens += 1;
            }
            if i >= 1 {
                *lm.bigrams.entry((tokens[i - 1], tok)).or_insert(0) += 1;
            }
            if i >= 2 {
                *lm.trigrams
                    .entry((tokens[i - 2], tokens[i - 1], tok))
                    .or_insert(0) += 1;
            }
        }
        // <s> participates as a backoff denominator.
        *lm.unigrams.entry(BOS).or_insert(0) += 1;
    }
    if sentences == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(lm)
}

impl NGramLM {
    fn intern(&mut self, word: &str) -> WordId {
        if let Some(&id) = self.word_ids.get(word) {
            return id;
        }
        let id = self.words.len() as WordId;
        self.words.push(word.to_string());
        self.word_ids.insert(word.to_string(), id);
        id
    }

    fn id_of(&self, word: &str) -> Option<WordId> {
        self.word_ids.get(word).copied()
    }

    pub fn vocab_size(&self) -> usize {
        self.words.len()
    }

    /// Context at a sentence start.
    pub fn start(&self) -> LmState {
        LmState {
            prev2: None,
            prev1: BOS,
        }
    }

    fn unigram_score(&self, w: WordId) -> f64 {
        match self.unigrams.get(&w) {
            Some(&c) if self.total_tokens > 0 => c as f64 / self.total_tokens as f64,
            _ => self.floor,
        }
    }

    /// Stupid-backoff score of `w` in `state`'s context (probability
    /// domain, floored).
    fn backoff_score(&self, state: &LmState, w: WordId) -> f64 {
        if let Some(p2) = state.prev2 {
            if let Some(&tri) = self.trigrams.get(&(p2, state.prev1, w)) {
                let ctx = self.bigrams.get(&(p2, state.prev1)).copied().unwrap_or(0);
                if ctx > 0 {
                    return (tri as f64 / ctx as f64).max(self.floor);
                }
            }
        }
        if let Some(&bi) = self.bigrams.get(&(state.prev1, w)) {
            let ctx = self.unigrams.get(&state.prev1).copied().unwrap_or(0);
            if ctx > 0 {
                let penalty = if state.prev2.is_some() {
                    self.lambda
                } else {
                    1.0
                };
                return (penalty * bi as f64 / ctx as f64).max(self.floor);
            }
        }
        let levels = if state.prev2.is_some() { 2 } else { 1 };
        (self.lambda.powi(levels) * self.unigram_score(w)).max(self.floor)
    }

    /// Scores one word as a continuation of `state`; returns the advanced
    /// state and the log score.
    pub fn score_word(&self, state: &LmState, word: &str) -> (LmState, f64) {
        let id = self.id_of(word);
        let score = match id {
            Some(w) => self.backoff_score(state, w),
            None => self.floor,
        };
        // Unknown continuations advance the context with a fresh marker that
        // can never match a stored n-gram; EOS works because nothing follows
        // it in training data contexts except via <s>.
        let next = LmState {
            prev2: Some(state.prev1),
            prev1: id.unwrap_or(EOS),
        };
        (next, score.ln())
    }

    /// Log score of the end-of-sentence transition from `state`.
    pub fn finish(&self, state: &LmState) -> f64 {
        self.backoff_score(state, EOS).ln()
    }

    /// Total log probability of a word sequence including the terminal
    /// transition.
    pub fn logprob<T: AsRef<str>>(&self, words: &[T]) -> f64 {
        let mut state = self.start();
        let mut total = 0.0;
        for w in words {
            let (next, lp) = self.score_word(&state, w.as_ref());
            state = next;
            total += lp;
        }
        total + self.finish(&state)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Serializes to the versioned binary model format. Tables are sorted by
    /// key so identical models produce identical bytes.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_u16::<LittleEndian>(VERSION)?;
        w.write_f64::<LittleEndian>(self.lambda)?;
        w.write_f64::<LittleEndian>(self.floor)?;
        w.write_u64::<LittleEndian>(self.total_tokens)?;

        w.write_u32::<LittleEndian>(self.words.len() as u32)?;
        for word in &self.words {
            write_str(&mut w, word)?;
        }

        let mut unis: Vec<_> = self.unigrams.iter().collect();
        unis.sort_unstable_by_key(|(k, _)| **k);
        w.write_u32::<LittleEndian>(unis.len() as u32)?;
        for (k, v) in unis {
            w.write_u32::<LittleEndian>(*k)?;
            w.write_u64::<LittleEndian>(*v)?;
        }

        let mut bis: Vec<_> = self.bigrams.iter().collect();
        bis.sort_unstable_by_key(|(k, _)| **k);
        w.write_u32::<LittleEndian>(bis.len() as u32)?;
        for (k, v) in bis {
            w.write_u32::<LittleEndian>(k.0)?;
            w.write_u32::<LittleEndian>(k.1)?;
            w.write_u64::<LittleEndian>(*v)?;
        }

        let mut tris: Vec<_> = self.trigrams.iter().collect();
        tris.sort_unstable_by_key(|(k, _)| **k);
        w.write_u32::<LittleEndian>(tris.len() as u32)?;
        for (k, v) in tris {
            w.write_u32::<LittleEndian>(k.0)?;
            w.write_u32::<LittleEndian>(k.1)?;
            w.write_u32::<LittleEndian>(k.2)?;
            w.write_u64::<LittleEndian>(*v)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Truncated("language model"))?;
        if &magic != MAGIC {
            return Err(Error::BadMagic { expected: "FMLM" });
        }
        let version = r.read_u16::<LittleEndian>()?;
        if version != VERSION {
            return Err(Error::UnsupportedVersion {
                kind: "language model",
                got: version,
                supported: VERSION,
            });
        }
        let lambda = r.read_f64::<LittleEndian>()?;
        let floor = r.read_f64::<LittleEndian>()?;
        let total_tokens = r.read_u64::<LittleEndian>()?;

        let n_words = r.read_u32::<LittleEndian>()? as usize;
        let mut words = Vec::with_capacity(n_words);
        let mut word_ids = HashMap::with_capacity(n_words);
        for i in 0..n_words {
            let word = read_str(&mut r)?;
            word_ids.insert(word.clone(), i as WordId);
            words.push(word);
        }

        let n_uni = r.read_u32::<LittleEndian>()? as usize;
        let mut unigrams = HashMap::with_capacity(n_uni);
        for _ in 0..n_uni {
            let k = r.read_u32::<LittleEndian>()?;
            let v = r.read_u64::<LittleEndian>()?;
            unigrams.insert(k, v);
        }

        let n_bi = r.read_u32::<LittleEndian>()? as usize;
        let mut bigrams = HashMap::with_capacity(n_bi);
        for _ in 0..n_bi {
            let a = r.read_u32::<LittleEndian>()?;
            let b = r.read_u32::<LittleEndian>()?;
            let v = r.read_u64::<LittleEndian>()?;
            bigrams.insert((a, b), v);
        }

        let n_tri = r.read_u32::<LittleEndian>()? as usize;
        let mut trigrams = HashMap::with_capacity(n_tri);
        for _ in 0..n_tri {
            let a = r.read_u32::<LittleEndian>()?;
            let b = r.read_u32::<LittleEndian>()?;
            let c = r.read_u32::<LittleEndian>()?;
            let v = r.read_u64::<LittleEndian>()?;
            trigrams.insert((a, b, c), v);
        }

        Ok(Self {
            words,
            word_ids,
            unigrams,
            bigrams,
            trigrams,
            total_tokens,
            lambda,
            floor,
        })
    }
}

fn write_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    w.write_u32::<LittleEndian>(s.len() as u32)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn read_str<R: Read>(r: &mut R) -> Result<String> {
    let len = r.read_u32::<LittleEndian>()? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Truncated("language model"))?;
    String::from_utf8(buf).map_err(|_| Error::Truncated("language model"))
}
