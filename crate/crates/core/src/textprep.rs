//! Text normalisation shared by the index and the query side.
//!
//! Every character is lowercased, every ASCII punctuation character becomes a
//! token separator, and the result is split on whitespace runs. Digits and
//! non-ASCII letters are kept.

use std::collections::BTreeSet;

/// Ordered sequence of non-empty, lowercase, punctuation-free tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenList(Vec<String>);

impl TokenList {
    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.0.iter()
    }

    pub fn into_vec(self) -> Vec<String> {
        self.0
    }

    /// Tokens joined by single spaces; feeding this back through
    /// [`preprocess`] reproduces `self`.
    pub fn joined(&self) -> String {
        self.0.join(" ")
    }
}

impl<'a> IntoIterator for &'a TokenList {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Lowercase, replace ASCII punctuation with spaces, split on whitespace.
pub fn preprocess(text: &str) -> TokenList {
    let mut normalized = String::with_capacity(text.len());
    for ch in text.chars() {
        if ch.is_ascii_punctuation() {
            normalized.push(' ');
        } else {
            normalized.extend(ch.to_lowercase());
        }
    }
    TokenList(normalized.split_whitespace().map(str::to_owned).collect())
}

/// Optional post-processing on top of [`preprocess`]: stopword removal and a
/// caller-supplied stemmer. The default configuration is the identity.
#[derive(Debug, Clone, Default)]
pub struct TextPipeline {
    pub stopwords: BTreeSet<String>,
    pub stemmer: Option<fn(&str) -> String>,
}

impl TextPipeline {
    pub fn with_stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.stopwords.extend(
            words
                .into_iter()
                .flat_map(|w| preprocess(w.as_ref()).into_vec()),
        );
        self
    }

    pub fn with_stemmer(mut self, stemmer: fn(&str) -> String) -> Self {
        self.stemmer = Some(stemmer);
        self
    }

    pub fn apply(&self, text: &str) -> TokenList {
        let tokens = preprocess(text);
        if self.stopwords.is_empty() && self.stemmer.is_none() {
            return tokens;
        }
        TokenList(
            tokens
                .into_vec()
                .into_iter()
                .filter(|t| !self.stopwords.contains(t))
                .map(|t| match self.stemmer {
                    Some(stem) => stem(&t),
                    None => t,
                })
                .filter(|t| !t.is_empty())
                .collect(),
        )
    }
}
