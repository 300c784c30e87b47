//! Tokenisation, vocabulary construction and TF-IDF bag-of-words vectors.
//!
//! Weights are un-normalised: `tf(l, d) = count(l, d) / |tokens(d)|` and
//! `idf(l) = ln((1 + n_docs) / (1 + doc_freq(l)))`, so absolute thresholds on
//! TF-IDF values keep their meaning across documents.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};

const BUNDLED_STOPWORDS: &str = include_str!("stopwords_en.txt");

/// A set of tokens removed during tokenisation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopWords(BTreeSet<String>);

impl StopWords {
    /// The bundled English list.
    pub fn english() -> Self {
        Self::parse(BUNDLED_STOPWORDS)
    }

    pub fn empty() -> Self {
        Self(BTreeSet::new())
    }

    /// Parses one token per line; blank lines are skipped, tokens are lowercased.
    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        )
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for StopWords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(|s| s.into().to_lowercase()).collect())
    }
}

/// Splits on non-alphabetic characters, lowercases, and drops stop-words and
/// tokens shorter than two characters.
pub fn tokenize(raw_text: &str, stopwords: &StopWords) -> Vec<String> {
    raw_text
        .split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| t.chars().count() >= 2 && !stopwords.contains(t))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub raw_text: String,
    pub tokens: Vec<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, raw_text: impl Into<String>, stopwords: &StopWords) -> Self {
        let raw_text = raw_text.into();
        let tokens = tokenize(&raw_text, stopwords);
        Self {
            id: id.into(),
            raw_text,
            tokens,
        }
    }

    /// A document whose tokens are supplied directly (already normalised).
    pub fn from_tokens<S: Into<String>>(id: impl Into<String>, tokens: impl IntoIterator<Item = S>) -> Self {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        Self {
            id: id.into(),
            raw_text: tokens.join(" "),
            tokens,
        }
    }
}

/// One persisted vocabulary row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub keyword: String,
    pub doc_freq: usize,
    pub idf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub n_docs: usize,
    pub entries: Vec<VocabEntry>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Rebuilds a vocabulary from persisted rows, checking its invariants.
    pub fn from_entries(n_docs: usize, entries: Vec<VocabEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        for pair in entries.windows(2) {
            if pair[0].keyword >= pair[1].keyword {
                return Err(Error::InvalidParameter(format!(
                    "vocabulary keywords must be unique and sorted ({:?} before {:?})",
                    pair[0].keyword, pair[1].keyword
                )));
            }
        }
        for e in &entries {
            if e.doc_freq == 0 || e.doc_freq > n_docs || !(e.idf >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "bad vocabulary entry for {:?}",
                    e.keyword
                )));
            }
        }
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.keyword.clone(), i))
            .collect();
        Ok(Self {
            n_docs,
            entries,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn keywords(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.keyword.as_str())
    }

    pub fn keyword(&self, l: usize) -> &str {
        &self.entries[l].keyword
    }

    pub fn position(&self, keyword: &str) -> Option<usize> {
        self.index.get(keyword).copied()
    }

    /// Restores the lookup index after deserialisation.
    pub fn reindex(self) -> Result<Self> {
        Self::from_entries(self.n_docs, self.entries)
    }
}

/// Smoothed inverse document frequency.
pub fn idf(n_docs: usize, doc_freq: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + doc_freq as f64)).ln()
}

/// Builds the keyword list from a corpus, pruning rare and ubiquitous terms.
///
/// A term survives if its corpus-wide count is at least `min_tf` and its
/// document ratio `doc_freq / n_docs` does not exceed `max_df_ratio`.
pub fn build_vocabulary(docs: &[Document], min_tf: usize, max_df_ratio: f64) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::EmptyInput("corpus"));
    }
    if !(max_df_ratio > 0.0 && max_df_ratio <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "max_df_ratio must lie in (0, 1], got {max_df_ratio}"
        )));
    }
    // BTreeMap keeps keywords sorted, so the output is deterministic.
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for doc in docs {
        let mut seen = BTreeSet::new();
        for tok in &doc.tokens {
            let entry = counts.entry(tok).or_default();
            entry.0 += 1;
            if seen.insert(tok.as_str()) {
                entry.1 += 1;
            }
        }
    }
    let n_docs = docs.len();
    let entries: Vec<VocabEntry> = counts
        .into_iter()
        .filter(|&(_, (tf, df))| tf >= min_tf && df as f64 / n_docs as f64 <= max_df_ratio)
        .map(|(kw, (_, df))| VocabEntry {
            keyword: kw.to_owned(),
            doc_freq: df,
            idf: idf(n_docs, df),
        })
        .collect();
    Vocabulary::from_entries(n_docs, entries)
}

/// Dense TF-IDF vector over a vocabulary.
pub fn tfidf_vectorize(doc: &Document, vocab: &Vocabulary) -> Vec<f64> {
    let mut values = vec![0.0; vocab.len()];
    if doc.tokens.is_empty() {
        return values;
    }
    for tok in &doc.tokens {
        if let Some(l) = vocab.position(tok) {
            values[l] += 1.0;
        }
    }
    let n_tokens = doc.tokens.len() as f64;
    for (v, e) in values.iter_mut().zip(&vocab.entries) {
        *v = *v / n_tokens * e.idf;
    }
    values
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn docs(texts: &[&str]) -> Vec<Document> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| Document::from_tokens(i.to_string(), t.split_whitespace()))
            .collect()
    }

    #[test]
    fn tokenize_folds_case_and_drops_stopwords() {
        let stop: StopWords = ["the"].into_iter().collect();
        assert_eq!(tokenize("The dog. THE DOG", &stop), vec!["dog", "dog"]);
        assert!(tokenize("", &stop).is_empty());
        assert_eq!(
            tokenize("bedroom ransacked, jewelry!", &StopWords::english()),
            vec!["bedroom", "ransacked", "jewelry"]
        );
    }

    #[test]
    fn tokenize_drops_short_tokens_and_digits() {
        let toks = tokenize("a 12 door-kicked x9y", &StopWords::empty());
        assert_eq!(toks, vec!["door", "kicked"]);
    }

    #[test]
    fn bundled_stopwords_are_lowercase() {
        let stop = StopWords::english();
        assert!(stop.contains("the") && stop.contains("and"));
        assert!(!stop.contains("burglary"));
    }

    #[test]
    fn vocabulary_prunes_ubiquitous_terms() {
        let v = build_vocabulary(&docs(&["a b", "a c", "a"]), 1, 0.9).unwrap();
        assert_eq!(v.keywords().collect::<Vec<_>>(), vec!["b", "c"]);
        assert_eq!(v.entries[0].doc_freq, 1);
        assert_relative_eq!(v.entries[0].idf, (4.0f64 / 2.0).ln());
    }

    #[test]
    fn vocabulary_prunes_rare_terms() {
        let v = build_vocabulary(&docs(&["x x y"]), 2, 1.0).unwrap();
        assert_eq!(v.keywords().collect::<Vec<_>>(), vec!["x"]);
        assert_eq!(
            build_vocabulary(&docs(&["x x y"]), 3, 1.0),
            Err(Error::EmptyVocabulary)
        );
        assert!(build_vocabulary(&[], 1, 1.0).is_err());
    }

    #[test]
    fn tfidf_values() {
        let corpus = docs(&["kw other other more", "filler words here"]);
        let v = build_vocabulary(&corpus, 1, 1.0).unwrap();
        let doc = Document::from_tokens("q", ["kw", "kw", "zz", "yy"]);
        let x = tfidf_vectorize(&doc, &v);
        let l = v.position("kw").unwrap();
        assert_relative_eq!(x[l], 0.5 * (3.0f64 / 2.0).ln(), epsilon = 1e-15);
        assert!((x[l] - 0.2027).abs() < 1e-4);
        assert_eq!(x.iter().filter(|&&val| val != 0.0).count(), 1);

        let empty = Document::from_tokens("e", ["nothing", "known"]);
        assert!(tfidf_vectorize(&empty, &v).iter().all(|&val| val == 0.0));
    }

    #[test]
    fn vocabulary_json_roundtrip() {
        let v = build_vocabulary(&docs(&["a b", "a c", "b d"]), 1, 1.0).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str::<Vocabulary>(&json).unwrap().reindex().unwrap();
        assert_eq!(back, v);
        assert_eq!(back.position("c"), v.position("c"));
    }

    fn corpus_strategy() -> impl Strategy<Value = Vec<Vec<String>>> {
        let word = prop::sample::select(vec!["aa", "bb", "cc", "dd", "ee", "ff"]).prop_map(String::from);
        prop::collection::vec(prop::collection::vec(word, 0..8), 1..8)
    }

    proptest! {
        #[test]
        fn increasing_min_tf_never_adds_keywords(corpus in corpus_strategy(), min_tf in 1usize..4) {
            let ds: Vec<Document> = corpus.iter().enumerate()
                .map(|(i, t)| Document::from_tokens(i.to_string(), t.clone())).collect();
            if let Ok(strict) = build_vocabulary(&ds, min_tf + 1, 1.0) {
                let loose = build_vocabulary(&ds, min_tf, 1.0).unwrap();
                for kw in strict.keywords() {
                    prop_assert!(loose.position(kw).is_some());
                }
            }
        }

        #[test]
        fn tfidf_support_within_document_tokens(corpus in corpus_strategy()) {
            let ds: Vec<Document> = corpus.iter().enumerate()
                .map(|(i, t)| Document::from_tokens(i.to_string(), t.clone())).collect();
            if let Ok(v) = build_vocabulary(&ds, 1, 1.0) {
                for d in &ds {
                    let x = tfidf_vectorize(d, &v);
                    prop_assert_eq!(&x, &tfidf_vectorize(d, &v));
                    for (l, &val) in x.iter().enumerate() {
                        prop_assert!(val >= 0.0);
                        if val > 0.0 {
                            prop_assert!(d.tokens.iter().any(|t| t == v.keyword(l)));
                        }
                    }
                }
            }
        }
    }
}
