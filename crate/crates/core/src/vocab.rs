//! Character vocabulary and text normalization.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Placeholder char used for the blank symbol in textual dumps and in the
/// serialized vocabulary string. Underscore is never a transcript character.
pub const BLANK_CHAR: char = '_';

/// An ordered character set with one distinguished CTC blank symbol.
///
/// Index 0 of the canonical English vocabulary is blank, followed by the 26
/// lowercase letters, space and apostrophe (29 symbols total). Tiny ad-hoc
/// vocabularies are supported for tests via [`Vocabulary::from_symbols`].
#[derive(Debug, Clone)]
pub struct Vocabulary {
    symbols: Arc<Vec<char>>,
    blank: usize,
    lookup: Arc<HashMap<char, usize>>,
}

impl Vocabulary {
    /// The canonical 29-symbol English character set: blank, a-z, space,
    /// apostrophe. Blank is index 0.
    pub fn english() -> Self {
        let mut symbols = vec![BLANK_CHAR];
        symbols.extend('a'..='z');
        symbols.push(' ');
        symbols.push('\'');
        Self::from_symbols(&symbols, 0).expect("canonical vocabulary is valid")
    }

    /// Builds a vocabulary from explicit symbols. `blank` indexes the blank
    /// symbol; its char is only used for display.
    pub fn from_symbols(symbols: &[char], blank: usize) -> Result<Self> {
        if blank >= symbols.len() {
            return Err(Error::BlankCount(0));
        }
        let mut lookup = HashMap::with_capacity(symbols.len());
        for (i, &c) in symbols.iter().enumerate() {
            if lookup.insert(c, i).is_some() {
                return Err(Error::DuplicateSymbol(c));
            }
        }
        Ok(Self {
            symbols: Arc::new(symbols.to_vec()),
            blank,
            lookup: Arc::new(lookup),
        })
    }

    /// Parses the serialized form: the symbol string with blank rendered as
    /// [`BLANK_CHAR`].
    pub fn from_symbol_string(s: &str) -> Result<Self> {
        let symbols: Vec<char> = s.chars().collect();
        let blanks: Vec<usize> = symbols
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == BLANK_CHAR)
            .map(|(i, _)| i)
            .collect();
        if blanks.len() != 1 {
            return Err(Error::BlankCount(blanks.len()));
        }
        Self::from_symbols(&symbols, blanks[0])
    }

    /// The serialized form used by the posterior file format.
    pub fn symbol_string(&self) -> String {
        self.symbols.iter().collect()
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn blank(&self) -> usize {
        self.blank
    }

    pub fn is_blank(&self, index: usize) -> bool {
        index == self.blank
    }

    /// Index of a non-blank transcript character.
    pub fn index_of(&self, c: char) -> Option<usize> {
        match self.lookup.get(&c) {
            Some(&i) if i != self.blank => Some(i),
            _ => None,
        }
    }

    /// Display char for an index (blank renders as [`BLANK_CHAR`]).
    pub fn char_at(&self, index: usize) -> char {
        self.symbols[index]
    }

    /// Encodes a transcript into vocabulary indices. Fails on any character
    /// outside the vocabulary; run [`normalize_text`] first for raw text.
    pub fn encode(&self, text: &str) -> Result<Vec<usize>> {
        text.chars()
            .map(|c| self.index_of(c).ok_or(Error::UnknownSymbol(c)))
            .collect()
    }

    /// Decodes indices into a string, skipping nothing (blank renders as
    /// [`BLANK_CHAR`]); used for alignment dumps.
    pub fn decode_raw(&self, indices: &[usize]) -> String {
        indices.iter().map(|&i| self.char_at(i)).collect()
    }

    /// True when every char of `text` is a non-blank vocabulary symbol.
    pub fn contains_text(&self, text: &str) -> bool {
        text.chars().all(|c| self.index_of(c).is_some())
    }
}

/// Lowercases, drops characters outside the canonical vocabulary, collapses
/// whitespace runs to single spaces and trims. Never fails; the result may be
/// empty.
pub fn normalize_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for c in raw.chars() {
        if c.is_whitespace() {
            pending_space = true;
            continue;
        }
        for lc in c.to_lowercase() {
            if lc.is_ascii_lowercase() || lc == '\'' {
                if pending_space && !out.is_empty() {
                    out.push(' ');
                }
                pending_space = false;
                out.push(lc);
            }
        }
    }
    out
}
