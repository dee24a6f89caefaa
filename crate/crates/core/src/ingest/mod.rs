//! Dataset loading and featurisation for the newsgroup and COMPAS tasks.

mod compas;
mod text;
mod tfidf;

pub use compas::{
    days_between, load_compas, CompasManifest, CompasOptions, CompasTable, OneHotEncoder, DAYS_IN_JAIL, SCORE_LABELS,
};
pub use text::{load_newsgroups, tokenize, Corpus, NewsgroupsPair, TEST_DIR, TRAIN_DIR};
pub use tfidf::{TfidfVectorizer, TfidfVocabulary};
