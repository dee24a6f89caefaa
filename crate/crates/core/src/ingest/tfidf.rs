use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SparseVector;

/// Fitted tf-idf state: alphabetical term list, smoothed idf per term.
///
/// idf(t) = ln((1 + n) / (1 + df(t))) + 1, tf = raw count, rows L2-normalised.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "VocabularyDoc", into = "VocabularyDoc")]
pub struct TfidfVocabulary {
    terms: Vec<String>,
    idf: Vec<f64>,
    n_documents_fit: usize,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VocabularyDoc {
    terms: Vec<String>,
    idf: Vec<f64>,
    n_documents_fit: usize,
}

impl TryFrom<VocabularyDoc> for TfidfVocabulary {
    type Error = String;

    fn try_from(doc: VocabularyDoc) -> std::result::Result<Self, String> {
        if doc.terms.len() != doc.idf.len() {
            return Err("terms and idf differ in length".into());
        }
        let index: HashMap<String, usize> = doc.terms.iter().cloned().zip(0..).collect();
        if index.len() != doc.terms.len() {
            return Err("duplicate term".into());
        }
        Ok(TfidfVocabulary {
            terms: doc.terms,
            idf: doc.idf,
            n_documents_fit: doc.n_documents_fit,
            index,
        })
    }
}

impl From<TfidfVocabulary> for VocabularyDoc {
    fn from(v: TfidfVocabulary) -> Self {
        VocabularyDoc {
            terms: v.terms,
            idf: v.idf,
            n_documents_fit: v.n_documents_fit,
        }
    }
}

impl PartialEq for TfidfVocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
            && self.n_documents_fit == other.n_documents_fit
            && self.idf.iter().map(|v| v.to_bits()).eq(other.idf.iter().map(|v| v.to_bits()))
    }
}

impl TfidfVocabulary {
    pub fn fit<D: AsRef<[String]>>(documents: &[D]) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::arg("cannot fit tf-idf on zero documents"));
        }
        let mut df: HashMap<&str, usize> = HashMap::new();
        for doc in documents {
            let distinct: BTreeSet<&str> = doc.as_ref().iter().map(String::as_str).collect();
            for t in distinct {
                *df.entry(t).or_default() += 1;
            }
        }
        if df.is_empty() {
            return Err(Error::arg("empty vocabulary: no document has any token"));
        }
        let mut terms: Vec<String> = df.keys().map(|t| t.to_string()).collect();
        terms.sort();
        let n = documents.len() as f64;
        let idf = terms
            .iter()
            .map(|t| ((1.0 + n) / (1.0 + df[t.as_str()] as f64)).ln() + 1.0)
            .collect();
        let index = terms.iter().cloned().zip(0..).collect();
        Ok(TfidfVocabulary {
            terms,
            idf,
            n_documents_fit: documents.len(),
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_documents_fit(&self) -> usize {
        self.n_documents_fit
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn idf(&self, index: usize) -> f64 {
        self.idf[index]
    }

    pub fn idf_of(&self, term: &str) -> Option<f64> {
        self.index_of(term).map(|i| self.idf[i])
    }

    /// Tf-idf row of a document; unseen terms are dropped.
    pub fn transform<S: AsRef<str>>(&self, tokens: &[S]) -> SparseVector {
        let mut counts: HashMap<usize, f64> = HashMap::new();
        for t in tokens {
            if let Some(i) = self.index_of(t.as_ref()) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        self.weigh(counts.into_iter().collect())
    }

    /// Tf-idf row from `(term index, raw count)` pairs.
    pub fn weigh(&self, counts: Vec<(usize, f64)>) -> SparseVector {
        let pairs: Vec<(usize, f64)> = counts
            .into_iter()
            .filter(|(_, c)| *c > 0.0)
            .map(|(i, c)| (i, c * self.idf[i]))
            .collect();
        let mut v = SparseVector::from_pairs(self.len(), pairs).expect("term indices come from this vocabulary");
        let norm = v.norm();
        if norm > 0.0 {
            v.values.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

/// Fit/transform wrapper that reports use before fitting as a state error.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TfidfVectorizer {
    vocabulary: Option<TfidfVocabulary>,
}

impl TfidfVectorizer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fit<D: AsRef<[String]>>(&mut self, documents: &[D]) -> Result<&TfidfVocabulary> {
        Ok(self.vocabulary.insert(TfidfVocabulary::fit(documents)?))
    }

    pub fn vocabulary(&self) -> Result<&TfidfVocabulary> {
        self.vocabulary
            .as_ref()
            .ok_or_else(|| Error::State("tf-idf vectorizer used before fit".into()))
    }

    pub fn transform<S: AsRef<str>>(&self, tokens: &[S]) -> Result<SparseVector> {
        Ok(self.vocabulary()?.transform(tokens))
    }
}
