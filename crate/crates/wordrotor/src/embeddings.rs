//! Embedding tables, unigram probabilities, and stopword lists, with the
//! text file formats shared by all of them.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::geometry::WordVector;

/// Token to vector map with a fixed dimension. Insertion order is preserved
/// so that every vocabulary-level computation (PCA, conversion, saving) is
/// deterministic.
#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    name: String,
    dimension: usize,
    tokens: Vec<String>,
    vectors: Vec<WordVector>,
    index: HashMap<String, usize>,
    duplicates_skipped: usize,
}

impl EmbeddingTable {
    pub fn new(name: impl Into<String>, dimension: usize) -> Self {
        EmbeddingTable {
            name: name.into(),
            dimension,
            tokens: Vec::new(),
            vectors: Vec::new(),
            index: HashMap::new(),
            duplicates_skipped: 0,
        }
    }

    /// Adds a token. Duplicates keep the first occurrence; they are counted
    /// in [`EmbeddingTable::duplicates_skipped`] and reported as `Ok(false)`.
    pub fn insert(&mut self, token: &str, vector: WordVector) -> Result<bool> {
        if token.is_empty() || token.chars().any(char::is_whitespace) {
            return Err(Error::InvalidArgument {
                message: format!("token {token:?} must be non-empty and whitespace-free"),
            });
        }
        if vector.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                context: format!("vector for token {token:?}"),
                expected: self.dimension,
                actual: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("vector for token {token:?}"),
            });
        }
        if self.index.contains_key(token) {
            self.duplicates_skipped += 1;
            return Ok(false);
        }
        self.index.insert(token.to_string(), self.tokens.len());
        self.tokens.push(token.to_string());
        self.vectors.push(vector);
        Ok(true)
    }

    pub fn lookup(&self, token: &str) -> Option<&WordVector> {
        self.index.get(token).map(|&i| &self.vectors[i])
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of duplicate tokens dropped on insertion (first occurrence wins).
    pub fn duplicates_skipped(&self) -> usize {
        self.duplicates_skipped
    }

    /// Tokens in insertion order.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Vectors in insertion order, parallel to [`EmbeddingTable::tokens`].
    pub fn vectors(&self) -> &[WordVector] {
        &self.vectors
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &WordVector)> {
        self.tokens
            .iter()
            .map(String::as_str)
            .zip(self.vectors.iter())
    }

    /// New table restricted to `keep`, preserving this table's order.
    pub fn subset(&self, keep: &HashSet<String>) -> EmbeddingTable {
        let mut out = EmbeddingTable::new(self.name.clone(), self.dimension);
        for (token, vector) in self.iter() {
            if keep.contains(token) {
                out.insert(token, vector.clone())
                    .expect("subset of a valid table stays valid");
            }
        }
        out
    }
}

/// Unigram probabilities; tokens that were never seen have probability 0.
#[derive(Clone, Debug, Default)]
pub struct UnigramModel {
    probabilities: HashMap<String, f64>,
}

impl UnigramModel {
    /// Builds a model from raw nonnegative values, normalizing them to
    /// probabilities when they behave like counts (sum > 1 + 1e-6).
    pub fn from_values(values: impl IntoIterator<Item = (String, f64)>) -> Result<UnigramModel> {
        let mut probabilities = HashMap::new();
        let mut sum = 0.0;
        for (token, value) in values {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidArgument {
                    message: format!("unigram value for {token:?} must be finite and >= 0"),
                });
            }
            if probabilities.contains_key(&token) {
                continue;
            }
            sum += value;
            probabilities.insert(token, value);
        }
        if sum > 1.0 + 1e-6 {
            for v in probabilities.values_mut() {
                *v /= sum;
            }
        } else {
            for v in probabilities.values_mut() {
                *v = v.min(1.0);
            }
        }
        Ok(UnigramModel { probabilities })
    }

    pub fn probability(&self, token: &str) -> f64 {
        self.probabilities.get(token).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

#[derive(Clone, Debug, Default)]
pub struct StopwordSet {
    words: HashSet<String>,
}

impl StopwordSet {
    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl FromIterator<String> for StopwordSet {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        StopwordSet {
            words: iter.into_iter().collect(),
        }
    }
}

impl<'a> FromIterator<&'a str> for StopwordSet {
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        iter.into_iter().map(str::to_string).collect()
    }
}

/// Loads a text-format embedding file: one `token v1 v2 ... vd` line per
/// word, single-space separated, with an optional `count dim` header line
/// (auto-detected as a first line of exactly two integer fields).
///
/// The dimension is taken from the first data line, or checked against
/// `expected_dim` when given. Duplicate tokens keep the first occurrence;
/// the dropped count is available via [`EmbeddingTable::duplicates_skipped`].
pub fn load_embeddings(
    path: impl AsRef<Path>,
    expected_dim: Option<usize>,
) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "embeddings".to_string());

    let mut table: Option<EmbeddingTable> = None;
    let mut saw_first_line = false;
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !saw_first_line {
            saw_first_line = true;
            if fields.len() == 2
                && fields[0].parse::<u64>().is_ok()
                && fields[1].parse::<u64>().is_ok()
            {
                continue; // vocabulary-size / dimension header
            }
        }
        if fields.len() < 2 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: "expected `token v1 ... vd`".into(),
            });
        }
        let token = fields[0];
        let dim = fields.len() - 1;
        if table.is_none() {
            if let Some(expected) = expected_dim {
                if dim != expected {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: lineno,
                        message: format!("dimension {dim} does not match expected {expected}"),
                    });
                }
            }
            table = Some(EmbeddingTable::new(name.clone(), dim));
        }
        let table = table.as_mut().expect("initialized above");
        if dim != table.dimension() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: format!(
                    "dimension {dim} does not match dimension {} of the first entry",
                    table.dimension()
                ),
            });
        }
        let mut vector = Array1::zeros(dim);
        for (k, raw) in fields[1..].iter().enumerate() {
            let value: f64 = raw.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: format!("non-numeric value {raw:?}"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno,
                    message: format!("non-finite value {raw:?}"),
                });
            }
            vector[k] = value;
        }
        table.insert(token, vector)?;
    }
    table.ok_or_else(|| Error::Empty {
        context: format!("embedding file {}", path.display()),
    })
}

/// Writes `table` in the same text format [`load_embeddings`] reads. Values
/// are printed with 17 significant digits, so a round trip reproduces every
/// coordinate exactly.
pub fn save_embeddings(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if table.is_empty() {
        return Err(Error::Empty {
            context: "embedding table to save".into(),
        });
    }
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    for (token, vector) in table.iter() {
        write!(out, "{token}").map_err(io_err)?;
        for value in vector.iter() {
            write!(out, " {value:.16e}").map_err(io_err)?;
        }
        writeln!(out).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Loads a TSV `token<TAB>value` unigram file. Values may be counts or
/// probabilities; when their sum exceeds 1 + 1e-6 they are treated as counts
/// and normalized.
pub fn load_unigram(path: impl AsRef<Path>) -> Result<UnigramModel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut values = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (token, raw) = match (fields.next(), fields.next(), fields.next()) {
            (Some(t), Some(v), None) if !t.is_empty() => (t, v),
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno,
                    message: "expected `token<TAB>value`".into(),
                })
            }
        };
        let value: f64 = raw.trim().parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            message: format!("unparsable value {raw:?}"),
        })?;
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: format!("value {raw:?} must be finite and >= 0"),
            });
        }
        values.push((token.to_string(), value));
    }
    UnigramModel::from_values(values)
}

/// Loads a stopword file: one token per line, `#` comment lines and blank
/// lines ignored.
pub fn load_stopwords(path: impl AsRef<Path>) -> Result<StopwordSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut words = HashSet::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let word = line.trim();
        if word.is_empty() || word.starts_with('#') {
            continue;
        }
        words.insert(word.to_string());
    }
    Ok(StopwordSet { words })
}
