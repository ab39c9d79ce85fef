use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::error::{Error, Result};
use crate::model::Model;

pub const FORMAT_VERSION: u32 = 1;

/// A trained model with the dictionaries and settings that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub library_version: String,
    pub model: Model,
    pub vocab: Vec<String>,
    pub tags: Vec<String>,
    pub config: TrainConfig,
}

impl ModelFile {
    pub fn new(
        model: Model,
        vocab: Vec<String>,
        tags: Vec<String>,
        config: TrainConfig,
    ) -> Result<Self> {
        if vocab.len() != model.vocab_size() || tags.len() != model.num_tags() {
            return Err(Error::Dimension(format!(
                "model is V={} L={} but dictionaries have {} words and {} tags",
                model.vocab_size(),
                model.num_tags(),
                vocab.len(),
                tags.len()
            )));
        }
        Ok(Self {
            format_version: FORMAT_VERSION,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            model,
            vocab,
            tags,
            config,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.check()?;
        Ok(file)
    }

    fn check(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported model format version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.vocab.len() != self.model.vocab_size() || self.tags.len() != self.model.num_tags() {
            return Err(Error::Dimension(
                "dictionaries do not match the model".into(),
            ));
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut out, self)?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file: ModelFile = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        file.check()?;
        Ok(file)
    }
}
