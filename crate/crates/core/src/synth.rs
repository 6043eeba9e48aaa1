//! Seeded synthetic accent benchmark.
//!
//! Simulates a broadly-weak local model (diffuse posterior noise plus
//! occasional character confusions that leave a shadow of the true
//! character) and a strong service with systematic accent-style errors
//! (fixed character confusions and whole-word homophones). The two systems
//! then fail on different utterances, which is the regime the fusion
//! pipeline targets.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::posteriors::FramePosteriors;
use crate::types::{NBestEntry, ServiceHypothesis};
use crate::vocab::Vocabulary;

/// A substitution rule applied inside words; `from` may be a digraph.
#[derive(Debug, Clone, PartialEq)]
pub struct Confusion {
    pub from: &'static str,
    pub to: &'static str,
    pub prob: f64,
}

/// Synthetic benchmark configuration. All randomness flows from `seed`.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub word_list: Vec<String>,
    pub sentence_len_min: usize,
    pub sentence_len_max: usize,
    /// Frames a character dwells, uniform in [dwell_min, dwell_max].
    pub dwell_min: usize,
    pub dwell_max: usize,
    /// Probability of an optional blank frame between characters (a blank is
    /// always inserted between equal adjacent characters).
    pub blank_prob: f64,
    /// Posterior mass leaked off the dominant character of each frame.
    pub eps_local: f64,
    /// Local confusions: (true char, substitute, probability per occurrence).
    pub local_confusions: Vec<(char, char, f64)>,
    /// Residual mass the true character keeps on locally-substituted frames.
    pub local_true_shadow: f64,
    pub service_confusions: Vec<Confusion>,
    /// Probability that the service drops a word entirely.
    pub service_deletion_rate: f64,
    pub homophones: Vec<(&'static str, &'static str)>,
    pub homophone_rate: f64,
    /// Uniform confidence range for unperturbed service words.
    pub conf_clean: (f64, f64),
    /// Uniform confidence range for perturbed service words.
    pub conf_err: (f64, f64),
    pub nbest_size: usize,
}

impl SynthConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            word_list: WORD_LIST.iter().map(|w| w.to_string()).collect(),
            sentence_len_min: 3,
            sentence_len_max: 8,
            dwell_min: 1,
            dwell_max: 3,
            blank_prob: 0.3,
            eps_local: 0.25,
            local_confusions: default_local_confusions(),
            local_true_shadow: 0.15,
            service_confusions: vec![
                Confusion { from: "th", to: "d", prob: 0.25 },
                Confusion { from: "t", to: "d", prob: 0.3 },
                Confusion { from: "d", to: "t", prob: 0.1 },
                Confusion { from: "v", to: "w", prob: 0.3 },
                Confusion { from: "w", to: "v", prob: 0.3 },
            ],
            homophones: vec![
                ("to", "two"),
                ("for", "four"),
                ("there", "their"),
                ("their", "there"),
                ("one", "won"),
                ("new", "knew"),
                ("would", "wood"),
                ("see", "sea"),
                ("right", "write"),
                ("hear", "here"),
            ],
            service_deletion_rate: 0.02,
            homophone_rate: 0.1,
            conf_clean: (0.70, 0.95),
            conf_err: (0.45, 0.80),
            nbest_size: 4,
        }
    }

    fn validate(&self) -> Result<()> {
        let check = |name: &'static str, v: f64| -> Result<()> {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} = {v} outside [0,1]")));
            }
            Ok(())
        };
        check("blank_prob", self.blank_prob)?;
        check("eps_local", self.eps_local)?;
        check("local_true_shadow", self.local_true_shadow)?;
        check("homophone_rate", self.homophone_rate)?;
        check("service_deletion_rate", self.service_deletion_rate)?;
        for c in &self.service_confusions {
            check("service confusion prob", c.prob)?;
        }
        for &(_, _, p) in &self.local_confusions {
            check("local confusion prob", p)?;
        }
        if self.eps_local + self.local_true_shadow >= 1.0 {
            return Err(Error::InvalidConfig(
                "eps_local + local_true_shadow must stay below 1".to_string(),
            ));
        }
        if self.dwell_min < 1 || self.dwell_max < self.dwell_min {
            return Err(Error::InvalidConfig("bad dwell range".to_string()));
        }
        if self.sentence_len_min < 1 || self.sentence_len_max < self.sentence_len_min {
            return Err(Error::InvalidConfig("bad sentence length range".to_string()));
        }
        if self.word_list.is_empty() {
            return Err(Error::InvalidConfig("empty word list".to_string()));
        }
        if self.nbest_size < 1 {
            return Err(Error::InvalidConfig("nbest_size must be >= 1".to_string()));
        }
        Ok(())
    }
}

/// One generated utterance.
#[derive(Debug, Clone)]
pub struct Utterance {
    pub id: String,
    pub reference: String,
    pub posteriors: FramePosteriors<f32>,
    pub service: ServiceHypothesis,
}

/// Train sentences feed the LM; val and test carry full utterances.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub train_sentences: Vec<String>,
    pub val: Vec<Utterance>,
    pub test: Vec<Utterance>,
}

/// Generates `n` sentences split 85-5-10 into train/val/test with no
/// sentence string shared between splits. Deterministic under
/// `cfg.seed`.
pub fn gen_dataset(cfg: &SynthConfig, n: usize, vocab: &Vocabulary) -> Result<Dataset> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let sentences = unique_sentences(cfg, n)?;
    let n_train = n * 85 / 100;
    let n_val = n * 5 / 100;

    let make = |split: &str, offset: usize, refs: &[String]| -> Vec<Utterance> {
        refs.iter()
            .enumerate()
            .map(|(i, reference)| {
                let global = offset + i;
                let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(cfg.seed, global as u64));
                let id = format!("synth-{split}-{i:05}");
                let posteriors = gen_posteriors(cfg, &id, reference, vocab, &mut rng);
                let service = gen_service(cfg, reference, &mut rng);
                Utterance {
                    id,
                    reference: reference.clone(),
                    posteriors,
                    service,
                }
            })
            .collect()
    };

    let val_refs = &sentences[n_train..n_train + n_val];
    let test_refs = &sentences[n_train + n_val..];
    Ok(Dataset {
        train_sentences: sentences[..n_train].to_vec(),
        val: make("val", n_train, val_refs),
        test: make("test", n_train + n_val, test_refs),
    })
}

/// SplitMix64-style derivation of independent per-utterance seeds.
fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Successor fan-out of the sentence chain. Low branching gives the trigram
/// LM real predictive signal, like natural text.
const CHAIN_SUCCESSORS: usize = 24;
const CHAIN_STARTS: usize = 32;

/// Sentences are random walks over a seeded sparse word-successor chain.
fn unique_sentences(cfg: &SynthConfig, n: usize) -> Result<Vec<String>> {
    let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(cfg.seed, u64::MAX));
    let words = cfg.word_list.len();
    let pick_distinct = |rng: &mut ChaCha12Rng, count: usize, avoid: Option<usize>| {
        let mut set = Vec::with_capacity(count);
        while set.len() < count.min(words.saturating_sub(1)) {
            let w = rng.gen_range(0..words);
            if Some(w) != avoid && !set.contains(&w) {
                set.push(w);
            }
        }
        set
    };
    let starts = pick_distinct(&mut rng, CHAIN_STARTS.min(words), None);
    let successors: Vec<Vec<usize>> = (0..words)
        .map(|w| pick_distinct(&mut rng, CHAIN_SUCCESSORS, Some(w)))
        .collect();

    let mut seen = std::collections::HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        if attempts > n.saturating_mul(1000) {
            return Err(Error::InvalidConfig(
                "word list too small to generate enough distinct sentences".to_string(),
            ));
        }
        let len = rng.gen_range(cfg.sentence_len_min..=cfg.sentence_len_max);
        let mut word = starts[rng.gen_range(0..starts.len())];
        let mut sentence = cfg.word_list[word].clone();
        for _ in 1..len {
            word = successors[word][rng.gen_range(0..CHAIN_SUCCESSORS)];
            sentence.push(' ');
            sentence.push_str(&cfg.word_list[word]);
        }
        if seen.insert(sentence.clone()) {
            out.push(sentence);
        }
    }
    Ok(out)
}

/// Expands a reference into a frame path and fills each frame's posterior
/// row. Rows are built in f64, normalized, then narrowed to f32.
fn gen_posteriors(
    cfg: &SynthConfig,
    id: &str,
    reference: &str,
    vocab: &Vocabulary,
    rng: &mut ChaCha12Rng,
) -> FramePosteriors<f32> {
    let v = vocab.len();
    let blank = vocab.blank();
    let chars: Vec<char> = reference.chars().collect();

    // Per-frame dominant symbol and the true symbol underneath it.
    let mut frames: Vec<(usize, Option<usize>)> = Vec::new();
    let push_blank = |frames: &mut Vec<(usize, Option<usize>)>| {
        frames.push((blank, None));
    };
    if rng.gen_bool(cfg.blank_prob) {
        push_blank(&mut frames);
    }
    let mut prev_char: Option<char> = None;
    for &c in &chars {
        if let Some(p) = prev_char {
            if p == c || rng.gen_bool(cfg.blank_prob) {
                push_blank(&mut frames);
            }
        }
        let true_idx = vocab.index_of(c).expect("reference is in-vocabulary");
        let emitted = substitute_local(cfg, c, rng)
            .and_then(|s| vocab.index_of(s))
            .filter(|&s| s != true_idx);
        // Word gaps span more frames than characters do.
        let dwell = if c == ' ' {
            rng.gen_range(cfg.dwell_min + 1..=cfg.dwell_max + 1)
        } else {
            rng.gen_range(cfg.dwell_min..=cfg.dwell_max)
        };
        for _ in 0..dwell {
            match emitted {
                Some(sub) => frames.push((sub, Some(true_idx))),
                None => frames.push((true_idx, None)),
            }
        }
        prev_char = Some(c);
    }
    if rng.gen_bool(cfg.blank_prob) {
        push_blank(&mut frames);
    }

    let mut probs = Vec::with_capacity(frames.len() * v);
    let mut weights = vec![0.0f64; v];
    for &(dominant, shadow_of) in &frames {
        let (peak, shadow) = match shadow_of {
            Some(_) => (1.0 - cfg.eps_local - cfg.local_true_shadow, cfg.local_true_shadow),
            None => (1.0 - cfg.eps_local, 0.0),
        };
        // Random leak profile over the remaining symbols.
        let mut total = 0.0;
        for (i, w) in weights.iter_mut().enumerate() {
            if i == dominant || shadow_of == Some(i) {
                *w = 0.0;
            } else {
                *w = rng.gen_range(0.5..1.5);
                total += *w;
            }
        }
        let leak = cfg.eps_local;
        let mut row = vec![0.0f64; v];
        for i in 0..v {
            row[i] = if i == dominant {
                peak
            } else if shadow_of == Some(i) {
                shadow
            } else if total > 0.0 {
                leak * weights[i] / total
            } else {
                0.0
            };
        }
        // Exact unit mass before narrowing to f32.
        let sum: f64 = row.iter().sum();
        probs.extend(row.into_iter().map(|p| (p / sum) as f32));
    }
    FramePosteriors::from_raw(id, frames.len(), v, probs).expect("shape is consistent")
}

fn substitute_local(cfg: &SynthConfig, c: char, rng: &mut ChaCha12Rng) -> Option<char> {
    let candidates: Vec<&(char, char, f64)> = cfg
        .local_confusions
        .iter()
        .filter(|(from, _, _)| *from == c)
        .collect();
    if candidates.is_empty() {
        return None;
    }
    let draw: f64 = rng.gen();
    let mut acc = 0.0;
    for (_, to, prob) in candidates {
        acc += prob;
        if draw < acc {
            return Some(*to);
        }
    }
    None
}

/// Applies the service's accent-style corruption to one word; returns the
/// corrupted word and whether anything changed.
fn corrupt_word(cfg: &SynthConfig, word: &str, rng: &mut ChaCha12Rng) -> (String, bool) {
    for (orig, replacement) in &cfg.homophones {
        if word == *orig {
            if rng.gen_bool(cfg.homophone_rate) {
                return (replacement.to_string(), true);
            }
            break;
        }
    }
    let chars: Vec<char> = word.chars().collect();
    let mut out = String::with_capacity(word.len());
    let mut perturbed = false;
    let mut i = 0;
    while i < chars.len() {
        let mut applied = false;
        for rule in &cfg.service_confusions {
            let from: Vec<char> = rule.from.chars().collect();
            if i + from.len() <= chars.len() && chars[i..i + from.len()] == from[..] {
                if rng.gen_bool(rule.prob) {
                    out.push_str(rule.to);
                    i += from.len();
                    perturbed = true;
                    applied = true;
                }
                break;
            }
        }
        if !applied {
            out.push(chars[i]);
            i += 1;
        }
    }
    (out, perturbed)
}

/// One sampled service rendering of the reference: transcript, per-word
/// confidences, log-domain score.
fn sample_service_variant(
    cfg: &SynthConfig,
    reference: &str,
    rng: &mut ChaCha12Rng,
) -> (String, Vec<f64>, f64) {
    let mut words = Vec::new();
    let mut confs = Vec::new();
    let mut score = 0.0;
    for word in reference.split_whitespace() {
        if rng.gen_bool(cfg.service_deletion_rate) {
            continue;
        }
        let (out, perturbed) = corrupt_word(cfg, word, rng);
        let range = if perturbed { cfg.conf_err } else { cfg.conf_clean };
        let conf = rng.gen_range(range.0..range.1);
        score += conf.ln();
        words.push(out);
        confs.push(conf);
    }
    (words.join(" "), confs, score)
}

fn gen_service(cfg: &SynthConfig, reference: &str, rng: &mut ChaCha12Rng) -> ServiceHypothesis {
    let (transcript, confs, score) = sample_service_variant(cfg, reference, rng);
    let mut nbest = vec![NBestEntry {
        transcript: transcript.clone(),
        score,
    }];
    let mut alternates = Vec::new();
    for _ in 1..cfg.nbest_size {
        let (t, _, s) = sample_service_variant(cfg, reference, rng);
        if t != transcript && !alternates.iter().any(|(at, _): &(String, f64)| *at == t) {
            alternates.push((t, s));
        }
    }
    alternates.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    nbest.extend(
        alternates
            .into_iter()
            .map(|(transcript, score)| NBestEntry { transcript, score }),
    );
    ServiceHypothesis::new(&transcript, Some(confs))
        .expect("synthetic transcripts are normalized")
        .with_nbest(nbest)
}

fn default_local_confusions() -> Vec<(char, char, f64)> {
    // Vowel neighbors and a few consonant pairs, deliberately disjoint from
    // the service's accent table so the two systems err differently.
    const RATE: f64 = 0.06;
    [
        ('a', 'e'),
        ('e', 'i'),
        ('i', 'e'),
        ('o', 'u'),
        ('u', 'o'),
        ('b', 'p'),
        ('p', 'b'),
        ('m', 'n'),
        ('n', 'm'),
        ('s', 'z'),
        ('l', 'r'),
        ('r', 'l'),
        ('c', 'k'),
        ('g', 'k'),
        ('f', 's'),
        ('h', 'n'),
    ]
    .into_iter()
    .map(|(a, b)| (a, b, RATE))
    .collect()
}

/// Default sentence vocabulary, weighted toward the accent-sensitive
/// t/d/v/w/th segments the service confuses.
pub const WORD_LIST: &[&str] = &[
    "the", "then", "these", "their", "there", "they", "that", "this", "those",
    "thing", "think", "through", "together", "other", "another", "weather",
    "whether", "mother", "father", "brother", "birthday", "month", "both",
    "water", "winter", "window", "wonder", "world", "word", "work", "would",
    "was", "were", "will", "with", "well", "wall", "want", "wait", "way",
    "wave", "west", "wide", "very", "visit", "voice", "value", "village",
    "view", "seven", "never", "over", "ever", "every", "river", "even",
    "evening", "heavy", "have", "give", "live", "love", "move", "time",
    "today", "table", "take", "tell", "ten", "test", "team", "town", "train",
    "tree", "true", "try", "turn", "twenty", "two", "to", "too", "toasted",
    "better", "letter", "little", "matter", "later", "water", "sitting",
    "bottom", "city", "party", "story", "study", "data", "date", "day",
    "dead", "deal", "dear", "deep", "did", "dinner", "dog", "door", "down",
    "dream", "dress", "drink", "drive", "during", "good", "head", "hand",
    "hard", "heard", "held", "hold", "old", "cold", "gold", "road", "read",
    "red", "ride", "side", "send", "sound", "stand", "stood", "under",
    "understand", "wind", "wood", "word", "yard", "and", "added", "for",
    "four", "from", "front", "friend", "first", "found", "one", "won",
    "once", "only", "open", "house", "home", "here", "hear", "high", "how",
    "however", "hundred", "see", "sea", "said", "say", "school", "second",
    "small", "some", "something", "soon", "start", "state", "still", "such",
    "sun", "sure", "right", "write", "new", "knew", "near", "need", "next",
    "night", "people", "place", "plan", "play", "point", "power", "press",
    "pretty", "question", "quick", "quite", "real", "room", "round", "run",
    "same", "green", "ground", "group", "grow", "because", "before", "began",
    "begin", "being", "best", "between", "book", "boy", "bread", "bring",
    "call", "came", "can't", "care", "carry", "change", "check", "children",
    "close", "come", "could", "country", "course", "cut", "didn't", "does",
    "don't", "early", "earth", "easy", "eat", "end", "enough", "example",
    "face", "fact", "family", "far", "fast", "feel", "feet", "fell", "felt",
    "few", "field", "final", "find", "fine", "fire", "fish", "five", "food",
    "foot", "form", "games", "gave", "girl", "give", "going", "gone", "got",
];
