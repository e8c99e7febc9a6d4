use std::collections::HashMap;

use super::EnvError;

/// Lowercase, split on whitespace, strip punctuation, drop empty tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| !c.is_ascii_punctuation())
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

/// Word ↔ index map; indices follow insertion order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Self::new();
        for w in words {
            v.insert(w.into());
        }
        v
    }

    /// Add a word if absent; returns its index.
    pub fn insert(&mut self, word: String) -> u32 {
        if let Some(&i) = self.index.get(&word) {
            return i;
        }
        let i = self.words.len() as u32;
        self.index.insert(word.clone(), i);
        self.words.push(word);
        i
    }

    pub fn get(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn word(&self, id: u32) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Tokenize `text` and map every token to its index.
    pub fn encode(&self, text: &str) -> Result<Vec<u32>, EnvError> {
        tokenize(text)
            .into_iter()
            .map(|w| self.get(&w).ok_or(EnvError::UnknownWord(w)))
            .collect()
    }
}
