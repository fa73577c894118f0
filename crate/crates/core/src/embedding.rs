//! Word-vector loading and nearest-neighbor lexicon expansion.
//!
//! Vectors come from the word2vec text format: a `vocab_size dim` header
//! line, then one `term v1 .. vdim` line per word. Expansion proposes, for
//! each stem term, its `k` most cosine-similar vocabulary words.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    terms: Vec<String>,
    vectors: Vec<Vec<f64>>,
    dim: usize,
    index: HashMap<String, usize>,
}

/// One proposed expansion: a stem, a nearby vocabulary word, and their
/// cosine similarity.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionEdge {
    pub stem: String,
    pub candidate: String,
    pub cosine: f64,
}

impl EmbeddingModel {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, term: &str) -> bool {
        self.index.contains_key(term)
    }

    pub fn vector(&self, term: &str) -> Option<&[f64]> {
        self.index.get(term).map(|&i| self.vectors[i].as_slice())
    }

    /// Loads a word2vec text file, validating the header, per-line dimension,
    /// and that every component is a finite number.
    pub fn load_word2vec_text(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines().enumerate();

        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::format(path, 1, "missing header line"))?;
        let header = header.map_err(|e| Error::io(path, e))?;
        let mut parts = header.split_whitespace();
        let vocab_size: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(path, 1, "header must be `vocab_size dim`"))?;
        let dim: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(path, 1, "header must be `vocab_size dim`"))?;
        if parts.next().is_some() {
            return Err(Error::format(path, 1, "header must be `vocab_size dim`"));
        }
        if dim == 0 {
            return Err(Error::format(path, 1, "vector dimension must be positive"));
        }

        let mut terms = Vec::with_capacity(vocab_size);
        let mut vectors = Vec::with_capacity(vocab_size);
        let mut index = HashMap::with_capacity(vocab_size);
        for (lineno, line) in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let term = fields
                .next()
                .ok_or_else(|| Error::format(path, lineno + 1, "missing term"))?
                .to_string();
            let mut vector = Vec::with_capacity(dim);
            for field in fields {
                let value: f64 = field.parse().map_err(|_| {
                    Error::format(path, lineno + 1, format!("invalid vector component {field:?}"))
                })?;
                if !value.is_finite() {
                    return Err(Error::format(
                        path,
                        lineno + 1,
                        format!("non-finite vector component for term {term:?}"),
                    ));
                }
                vector.push(value);
            }
            if vector.len() != dim {
                return Err(Error::format(
                    path,
                    lineno + 1,
                    format!("expected {dim} components for term {term:?}, found {}", vector.len()),
                ));
            }
            if index.insert(term.clone(), terms.len()).is_some() {
                return Err(Error::format(path, lineno + 1, format!("duplicate term {term:?}")));
            }
            terms.push(term);
            vectors.push(vector);
        }
        if terms.len() != vocab_size {
            return Err(Error::format(
                path,
                1,
                format!("header declares {vocab_size} terms but file has {}", terms.len()),
            ));
        }
        Ok(EmbeddingModel { terms, vectors, dim, index })
    }
}

fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let mut dot = 0.0;
    let mut norm_a = 0.0;
    let mut norm_b = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        norm_a += x * x;
        norm_b += y * y;
    }
    if norm_a == 0.0 || norm_b == 0.0 {
        return None;
    }
    Some(dot / (norm_a.sqrt() * norm_b.sqrt()))
}

/// For each stem (in the given order) proposes its `k` nearest vocabulary
/// words by cosine similarity, ties broken alphabetically. Stems absent from
/// the model contribute no edges and are logged. Zero-norm vectors are never
/// proposed.
pub fn expand_with_embeddings(
    stems: &[&str],
    model: &EmbeddingModel,
    k: usize,
) -> Vec<ExpansionEdge> {
    let mut edges = Vec::new();
    for &stem in stems {
        let stem_vector = match model.vector(stem) {
            Some(v) => v,
            None => {
                log::warn!("stem {stem:?} is not in the embedding vocabulary; no candidates proposed");
                continue;
            }
        };
        let mut scored: Vec<(f64, &str)> = model
            .terms
            .iter()
            .zip(&model.vectors)
            .filter(|(term, _)| term.as_str() != stem)
            .filter_map(|(term, vector)| cosine(stem_vector, vector).map(|c| (c, term.as_str())))
            .collect();
        scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.cmp(b.1)));
        for (cosine, candidate) in scored.into_iter().take(k) {
            edges.push(ExpansionEdge {
                stem: stem.to_string(),
                candidate: candidate.to_string(),
                cosine,
            });
        }
    }
    edges
}

/// Writes edges as `stem<TAB>candidate<TAB>cosine` with a header row.
pub fn write_edges_tsv(path: impl AsRef<Path>, edges: &[ExpansionEdge]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "stem\tcandidate\tcosine").map_err(|e| Error::io(path, e))?;
    for edge in edges {
        writeln!(w, "{}\t{}\t{:.6}", edge.stem, edge.candidate, edge.cosine)
            .map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn read_edges_tsv(path: impl AsRef<Path>) -> Result<Vec<ExpansionEdge>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut edges = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if lineno == 0 {
            if line != "stem\tcandidate\tcosine" {
                return Err(Error::format(path, 1, "expected header `stem\\tcandidate\\tcosine`"));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::format(
                path,
                lineno + 1,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let cosine: f64 = fields[2]
            .parse()
            .map_err(|_| Error::format(path, lineno + 1, format!("invalid cosine {:?}", fields[2])))?;
        edges.push(ExpansionEdge {
            stem: fields[0].to_string(),
            candidate: fields[1].to_string(),
            cosine,
        });
    }
    Ok(edges)
}
