use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Corpus, Document};
use crate::error::{Error, Result};

#[derive(Deserialize)]
#[serde(untagged)]
enum WordEntry {
    Token(String),
    Counted(String, u32),
}

#[derive(Deserialize)]
struct Record {
    id: String,
    #[serde(default)]
    words: Vec<WordEntry>,
    #[serde(default)]
    tags: Vec<String>,
}

#[derive(Serialize)]
struct RecordOut<'a> {
    id: &'a str,
    words: Vec<(&'a str, u32)>,
    tags: Vec<&'a str>,
}

struct Interner {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Interner {
    fn new() -> Self {
        Self {
            names: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn intern(&mut self, name: String) -> usize {
        if let Some(&i) = self.index.get(&name) {
            return i;
        }
        let i = self.names.len();
        self.names.push(name.clone());
        self.index.insert(name, i);
        i
    }
}

/// Loads a JSON-lines corpus. Each non-blank line is
/// `{"id": .., "words": [token | [token, count], ..], "tags": [..]}`.
/// Vocabulary and tag dictionary are assigned in first-seen order.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_corpus(BufReader::new(file), &path.display().to_string())
}

pub fn read_corpus(reader: impl BufRead, source_name: &str) -> Result<Corpus> {
    let mut vocab = Interner::new();
    let mut tags = Interner::new();
    let mut documents = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            source_name: source_name.to_string(),
            line: n + 1,
            message,
        };
        let record: Record = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let mut words = Vec::with_capacity(record.words.len());
        for entry in record.words {
            let (token, count) = match entry {
                WordEntry::Token(t) => (t, 1),
                WordEntry::Counted(t, c) => (t, c),
            };
            if count == 0 {
                return Err(parse_err(format!("word '{token}' has count 0")));
            }
            words.push((vocab.intern(token), count));
        }
        let doc_tags: Vec<usize> = record.tags.into_iter().map(|t| tags.intern(t)).collect();
        documents.push(Document::new(record.id, words, doc_tags));
    }
    if documents.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Corpus::new(documents, vocab.names, tags.names)
}

/// Writes the corpus in the same JSON-lines format, words as `[token, count]` pairs.
pub fn write_corpus(corpus: &Corpus, writer: impl Write) -> Result<()> {
    let mut out = BufWriter::new(writer);
    for doc in &corpus.documents {
        let record = RecordOut {
            id: &doc.id,
            words: doc
                .words
                .iter()
                .map(|&(w, c)| (corpus.vocab[w].as_str(), c))
                .collect(),
            tags: doc.tags.iter().map(|&t| corpus.tags[t].as_str()).collect(),
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
