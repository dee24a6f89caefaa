use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowercases and splits on runs of non-alphanumeric characters, keeping
/// tokens of at least two characters. Stop words are kept.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<Vec<String>>,
    pub labels: Vec<usize>,
    pub label_names: Vec<String>,
    /// Source file of each document, relative to the archive root.
    pub sources: Vec<String>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }
}

/// Train and test splits of a two-category newsgroup task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsgroupsPair {
    pub train: Corpus,
    pub test: Corpus,
}

pub const TRAIN_DIR: &str = "20news-bydate-train";
pub const TEST_DIR: &str = "20news-bydate-test";

/// Reads `root/20news-bydate-{train,test}/<category>/*`. The first category
/// gets label 0, the second label 1. Files are read in name order and decoded
/// lossily (the archive is mostly Latin-1).
pub fn load_newsgroups(root: &Path, categories: (&str, &str)) -> Result<NewsgroupsPair> {
    let names = vec![categories.0.to_string(), categories.1.to_string()];
    let load_split = |split: &str| -> Result<Corpus> {
        let mut corpus = Corpus {
            documents: Vec::new(),
            labels: Vec::new(),
            label_names: names.clone(),
            sources: Vec::new(),
        };
        for (label, cat) in names.iter().enumerate() {
            let dir = root.join(split).join(cat);
            let files = list_files(&dir)?;
            if files.is_empty() {
                return Err(Error::input(&dir, "category directory contains no documents"));
            }
            for file in files {
                let bytes = fs::read(&file).map_err(|e| Error::input(&file, e.to_string()))?;
                corpus.documents.push(tokenize(&String::from_utf8_lossy(&bytes)));
                corpus.labels.push(label);
                corpus.sources.push(format!(
                    "{split}/{cat}/{}",
                    file.file_name().unwrap_or_default().to_string_lossy()
                ));
            }
        }
        Ok(corpus)
    };
    Ok(NewsgroupsPair {
        train: load_split(TRAIN_DIR)?,
        test: load_split(TEST_DIR)?,
    })
}

fn list_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::input(dir, format!("cannot read category directory: {e}")))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::input(dir, e.to_string()))?;
        if entry.file_type().map_err(|e| Error::input(dir, e.to_string()))?.is_file() {
            files.push(entry.path());
        }
    }
    files.sort();
    Ok(files)
}
