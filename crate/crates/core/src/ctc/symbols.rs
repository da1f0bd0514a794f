use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Index of the CTC blank in every table.
pub const BLANK: usize = 0;

/// Space, lowercase letters, then `, ? ! . '`. The blank is implicit at index 0.
pub const DEFAULT_ALPHABET: &str = " abcdefghijklmnopqrstuvwxyz,?!.'";

/// Output alphabet of the acoustic model: blank at index 0 followed by the
/// characters of the alphabet string, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolTable {
    chars: Vec<char>,
    index: BTreeMap<char, usize>,
}

impl Default for SymbolTable {
    fn default() -> Self {
        Self::from_alphabet(DEFAULT_ALPHABET).expect("default alphabet is valid")
    }
}

impl SymbolTable {
    pub fn from_alphabet(alphabet: &str) -> Result<Self> {
        let mut index = BTreeMap::new();
        let mut chars = Vec::new();
        for c in alphabet.chars() {
            if c.is_uppercase() {
                return Err(Error::invalid(format!(
                    "alphabet must be lowercase, found {c:?}"
                )));
            }
            if index.insert(c, chars.len() + 1).is_some() {
                return Err(Error::invalid(format!("duplicate symbol {c:?} in alphabet")));
            }
            chars.push(c);
        }
        if chars.is_empty() {
            return Err(Error::invalid("alphabet is empty"));
        }
        Ok(Self { chars, index })
    }

    /// Number of outputs including the blank.
    pub fn len(&self) -> usize {
        self.chars.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The alphabet string, blank excluded.
    pub fn alphabet(&self) -> String {
        self.chars.iter().collect()
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        self.index.get(&c).copied()
    }

    pub fn symbol(&self, idx: usize) -> Option<char> {
        idx.checked_sub(1).and_then(|i| self.chars.get(i)).copied()
    }

    /// Lowercases `text` and maps it to symbol indices.
    pub fn encode(&self, text: &str) -> Result<Vec<usize>> {
        normalize_text(text)
            .chars()
            .map(|c| {
                self.index_of(c).ok_or_else(|| {
                    Error::invalid(format!("character {c:?} is not in the symbol set"))
                })
            })
            .collect()
    }

    /// Maps indices to characters, dropping blanks and unknown indices.
    pub fn decode(&self, indices: &[usize]) -> String {
        indices.iter().filter_map(|&i| self.symbol(i)).collect()
    }
}

/// Case folding applied to every transcript before it meets the model or a
/// CER computation.
pub fn normalize_text(text: &str) -> String {
    text.to_lowercase()
}
