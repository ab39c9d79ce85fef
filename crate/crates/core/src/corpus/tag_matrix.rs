use serde::{Deserialize, Serialize};

use super::Document;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagMode {
    Twtm,
    Twda,
}

/// The one-hot row matrix T^d of a document, stored as the column index of
/// each row. Rows follow ascending tag index; in TWDA mode one more row,
/// pointing at column L (the latent tag), comes last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagMatrix {
    columns: Vec<usize>,
    width: usize,
    mode: TagMode,
}

pub fn build_tag_matrix(doc: &Document, num_tags: usize, mode: TagMode) -> Result<TagMatrix> {
    if let Some(&t) = doc.tags.iter().find(|&&t| t >= num_tags) {
        return Err(Error::Dimension(format!(
            "document '{}' has tag {t} but L = {num_tags}",
            doc.id
        )));
    }
    let mut columns = doc.tags.clone();
    columns.sort_unstable();
    columns.dedup();
    let width = match mode {
        TagMode::Twtm => {
            if columns.is_empty() {
                return Err(Error::UntaggedDocument {
                    doc: doc.id.clone(),
                });
            }
            num_tags
        }
        TagMode::Twda => {
            columns.push(num_tags);
            num_tags + 1
        }
    };
    Ok(TagMatrix {
        columns,
        width,
        mode,
    })
}

impl TagMatrix {
    /// l^d, the number of rows.
    pub fn rows(&self) -> usize {
        self.columns.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn mode(&self) -> TagMode {
        self.mode
    }

    /// Column of the single 1 in each row.
    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    /// Columns of the observed tags, without the latent row.
    pub fn observed(&self) -> &[usize] {
        match self.mode {
            TagMode::Twtm => &self.columns,
            TagMode::Twda => &self.columns[..self.columns.len() - 1],
        }
    }

    pub fn has_latent_row(&self) -> bool {
        self.mode == TagMode::Twda
    }

    /// T^d × π: the Dirichlet parameter for this document's tag weights.
    pub fn dirichlet_prior(&self, pi: &[f64]) -> Vec<f64> {
        debug_assert_eq!(pi.len(), self.width);
        self.columns.iter().map(|&c| pi[c]).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        self.columns
            .iter()
            .map(|&c| {
                let mut row = vec![0u8; self.width];
                row[c] = 1;
                row
            })
            .collect()
    }
}
