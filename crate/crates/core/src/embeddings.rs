//! Embedding-space ingestion and queries: text-format parsing, vocabulary
//! restriction, cosine similarity and exact nearest-neighbor search.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A vocabulary paired with a row-indexed dense matrix of points.
///
/// Immutable after construction; row `i` of `matrix` is the vector for
/// `vocab[i]`. Row norms are cached for similarity scans.
#[derive(Debug, Clone)]
pub struct EmbeddingSpace {
    pub name: String,
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    matrix: Array2<f64>,
    norms: Vec<f64>,
}

/// Bookkeeping from a text-file load.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows: usize,
    pub dim: usize,
    pub duplicates_skipped: usize,
    pub header_skipped: bool,
    /// Set when a requested `limit` exceeded the number of rows in the file.
    pub limit_exceeded_file: bool,
}

impl EmbeddingSpace {
    /// Build a space from parallel token / matrix data.
    ///
    /// Tokens must be unique and whitespace-free; the matrix must have one
    /// row per token and contain only finite values.
    pub fn new(name: impl Into<String>, vocab: Vec<String>, matrix: Array2<f64>) -> Result<Self> {
        if vocab.len() != matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: vocab.len(),
                got: matrix.nrows(),
            });
        }
        if matrix.ncols() == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be >= 1".into()));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        let mut index = HashMap::with_capacity(vocab.len());
        for (i, tok) in vocab.iter().enumerate() {
            if tok.chars().any(char::is_whitespace) {
                return Err(Error::InvalidArgument(format!(
                    "token {tok:?} contains whitespace"
                )));
            }
            if index.insert(tok.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate token {tok:?}")));
            }
        }
        let norms = matrix
            .rows()
            .into_iter()
            .map(|r| r.dot(&r).sqrt())
            .collect();
        Ok(EmbeddingSpace {
            name: name.into(),
            vocab,
            index,
            matrix,
            norms,
        })
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn token(&self, row: usize) -> &str {
        &self.vocab[row]
    }

    pub fn row_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn vector(&self, token: &str) -> Result<ArrayView1<'_, f64>> {
        let row = self
            .row_of(token)
            .ok_or_else(|| Error::UnknownToken(token.to_string()))?;
        Ok(self.matrix.row(row))
    }

    /// A new space with the same vocabulary and a replacement matrix.
    pub fn with_matrix(&self, name: impl Into<String>, matrix: Array2<f64>) -> Result<Self> {
        EmbeddingSpace::new(name, self.vocab.clone(), matrix)
    }
}

/// Ranked cosine neighbors of a query.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeighborList {
    pub query: String,
    /// (token, cosine) pairs, non-increasing similarity.
    pub neighbors: Vec<(String, f64)>,
}

impl NeighborList {
    /// Tab-separated line form: `query \t token:sim,token:sim,...`.
    pub fn to_line(&self) -> String {
        let parts: Vec<String> = self
            .neighbors
            .iter()
            .map(|(t, s)| format!("{t}:{s:.6}"))
            .collect();
        format!("{}\t{}", self.query, parts.join(","))
    }
}

/// Parse a GloVe-style text file: one `token v1 .. vd` per line.
///
/// A word2vec-style `n d` count header on the first line is detected and
/// skipped. `limit` keeps only the first rows in file order; files are
/// assumed to be ordered most-frequent-first, which is what makes a prefix a
/// "most common words" restriction -- an unordered file silently changes that
/// meaning, so order is the caller's contract.
pub fn load_text_embeddings(
    path: impl AsRef<Path>,
    limit: Option<usize>,
) -> Result<(EmbeddingSpace, LoadReport)> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(&display, e))?;
    let reader = BufReader::new(file);

    let mut vocab: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut data: Vec<f64> = Vec::new();
    let mut dim: Option<usize> = None;
    let mut report = LoadReport::default();

    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.map_err(|e| Error::io(&display, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let token = fields.next().expect("non-empty line");
        let values: Vec<&str> = fields.collect();

        if dim.is_none() && line_no == 1 && values.len() == 1 {
            // Possible "n d" header: both fields non-negative integers.
            let looks_like_count =
                token.parse::<usize>().is_ok() && values[0].parse::<usize>().is_ok();
            if looks_like_count {
                report.header_skipped = true;
                continue;
            }
        }

        let d = *dim.get_or_insert(values.len());
        if d == 0 {
            return Err(Error::parse(&display, line_no, "no coordinates on line"));
        }
        if values.len() != d {
            return Err(Error::parse(
                &display,
                line_no,
                format!("expected {d} coordinates, found {}", values.len()),
            ));
        }
        if index.contains_key(token) {
            report.duplicates_skipped += 1;
            continue;
        }
        let mut row = Vec::with_capacity(d);
        for v in &values {
            let x: f64 = v.parse().map_err(|_| {
                Error::parse(&display, line_no, format!("bad number {v:?}"))
            })?;
            if !x.is_finite() {
                return Err(Error::parse(&display, line_no, format!("non-finite value {v:?}")));
            }
            row.push(x);
        }
        index.insert(token.to_string(), vocab.len());
        vocab.push(token.to_string());
        data.extend_from_slice(&row);

        if let Some(limit) = limit {
            if vocab.len() == limit {
                break;
            }
        }
    }

    let d = dim.ok_or_else(|| Error::parse(&display, 0, "file has no data lines"))?;
    if let Some(limit) = limit {
        if vocab.len() < limit {
            report.limit_exceeded_file = true;
        }
    }
    let n = vocab.len();
    let matrix = Array2::from_shape_vec((n, d), data)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    report.rows = n;
    report.dim = d;

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "embeddings".to_string());
    let space = EmbeddingSpace::new(name, vocab, matrix)?;
    Ok((space, report))
}

/// Write a space in the same text format, 6 decimal places per coordinate.
pub fn save_text_embeddings(space: &EmbeddingSpace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let display = path.display().to_string();
    if space.is_empty() {
        return Err(Error::InvalidArgument("refusing to write an empty space".into()));
    }
    let file = File::create(path).map_err(|e| Error::io(&display, e))?;
    let mut out = BufWriter::new(file);
    for (i, token) in space.vocab.iter().enumerate() {
        let mut line = String::with_capacity(16 * space.dim());
        line.push_str(token);
        for v in space.matrix.row(i).iter() {
            line.push(' ');
            line.push_str(&format!("{v:.6}"));
        }
        line.push('\n');
        out.write_all(line.as_bytes())
            .map_err(|e| Error::io(&display, e))?;
    }
    out.flush().map_err(|e| Error::io(&display, e))?;
    Ok(())
}

/// Cosine similarity between two vectors, clamped to [-1, 1].
pub fn cosine_vectors(a: &ArrayView1<f64>, b: &ArrayView1<f64>) -> Result<f64> {
    let na = a.dot(a).sqrt();
    let nb = b.dot(b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector("cosine of zero vector".into()));
    }
    Ok((a.dot(b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Cosine similarity between two tokens' vectors.
pub fn cosine(space: &EmbeddingSpace, a: &str, b: &str) -> Result<f64> {
    let va = space.vector(a)?;
    let vb = space.vector(b)?;
    cosine_vectors(&va, &vb)
}

/// The query side of a neighbor search.
pub enum Query<'a> {
    Token(&'a str),
    Vector(ArrayView1<'a, f64>),
}

/// Exact top-k cosine neighbors by linear scan.
///
/// Ties break toward the lower vocabulary index, so results are deterministic
/// regardless of any internal evaluation order. A token query is implicitly
/// excluded from its own results. Rows with zero norm score 0.
pub fn nearest_neighbors(
    space: &EmbeddingSpace,
    query: Query<'_>,
    k: usize,
    exclude: &HashSet<String>,
) -> Result<NeighborList> {
    let (qvec, qname, self_row) = match query {
        Query::Token(tok) => {
            let row = space
                .row_of(tok)
                .ok_or_else(|| Error::UnknownToken(tok.to_string()))?;
            (space.matrix.row(row).to_owned(), tok.to_string(), Some(row))
        }
        Query::Vector(v) => {
            if v.len() != space.dim() {
                return Err(Error::DimensionMismatch {
                    expected: space.dim(),
                    got: v.len(),
                });
            }
            (v.to_owned(), "<vector>".to_string(), None)
        }
    };
    let qnorm = qvec.dot(&qvec).sqrt();
    if qnorm == 0.0 {
        return Err(Error::ZeroVector("nearest_neighbors query".into()));
    }

    let mut excluded_rows: HashSet<usize> = exclude
        .iter()
        .filter_map(|t| space.row_of(t))
        .collect();
    if let Some(r) = self_row {
        excluded_rows.insert(r);
    }
    let available = space.len() - excluded_rows.len();
    if k > available {
        return Err(Error::InvalidArgument(format!(
            "k={k} exceeds {available} available points"
        )));
    }

    let mut scored: Vec<(f64, usize)> = Vec::with_capacity(available);
    for (i, row) in space.matrix.axis_iter(Axis(0)).enumerate() {
        if excluded_rows.contains(&i) {
            continue;
        }
        let sim = if space.norms[i] == 0.0 {
            0.0
        } else {
            (row.dot(&qvec) / (space.norms[i] * qnorm)).clamp(-1.0, 1.0)
        };
        scored.push((sim, i));
    }
    scored.sort_unstable_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then_with(|| a.1.cmp(&b.1))
    });
    scored.truncate(k);

    Ok(NeighborList {
        query: qname,
        neighbors: scored
            .into_iter()
            .map(|(s, i)| (space.vocab[i].clone(), s))
            .collect(),
    })
}

/// Convenience: the mean vector of a set of rows.
pub fn mean_of_rows(matrix: &Array2<f64>, rows: &[usize]) -> Array1<f64> {
    let mut acc = Array1::<f64>::zeros(matrix.ncols());
    for &r in rows {
        acc += &matrix.row(r);
    }
    if !rows.is_empty() {
        acc /= rows.len() as f64;
    }
    acc
}
