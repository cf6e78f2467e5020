//! Pretrained word vectors for entity-name similarity.
//!
//! Vectors are L2-normalized on load, so a dot product between stored
//! vectors is their cosine similarity.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WordVectorTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl WordVectorTable {
    pub fn new(dim: usize) -> Self {
        WordVectorTable {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Stores the normalized `vector`. Returns false (and stores nothing)
    /// for a zero vector.
    pub fn insert(&mut self, token: &str, vector: &[f64]) -> Result<bool> {
        if self.dim == 0 && self.vectors.is_empty() {
            self.dim = vector.len();
        }
        if vector.len() != self.dim {
            return Err(Error::invalid(format!(
                "vector for `{token}` has dimension {}, table has {}",
                vector.len(),
                self.dim
            )));
        }
        match normalized(vector) {
            Some(v) => {
                if self.vectors.insert(token.to_owned(), v).is_some() {
                    log::warn!("duplicate word vector for `{token}`; keeping the last one");
                }
                Ok(true)
            }
            None => Ok(false),
        }
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    /// Tokens in sorted order.
    pub fn tokens(&self) -> Vec<&str> {
        let mut t: Vec<&str> = self.vectors.keys().map(String::as_str).collect();
        t.sort_unstable();
        t
    }

    /// Unit vector for an entity name: the renormalized mean of its known
    /// token vectors, or `None` if no token is known.
    pub fn entity_vector(&self, name: &str) -> Option<Vec<f64>> {
        let mut acc = vec![0.0; self.dim];
        let mut found = 0usize;
        for tok in tokenize(name) {
            let v = self.get(&tok).or_else(|| self.get(&tok.to_lowercase()));
            if let Some(v) = v {
                for (a, x) in acc.iter_mut().zip(v) {
                    *a += x;
                }
                found += 1;
            }
        }
        if found == 0 {
            return None;
        }
        normalized(&acc)
    }

    /// Writes `token v1 ... vd` lines preceded by a `count dim` header, in
    /// sorted token order.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.vectors.len(), self.dim)?;
        for tok in self.tokens() {
            write!(w, "{tok}")?;
            for x in &self.vectors[tok] {
                write!(w, " {x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_text(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

/// Loads a whitespace-separated `token v1 ... vd` file with an optional
/// `count dim` header line.
pub fn load_word_vectors(path: impl AsRef<Path>) -> Result<WordVectorTable> {
    let path = path.as_ref();
    parse_word_vectors(BufReader::new(File::open(path)?), path)
}

pub fn parse_word_vectors<R: Read>(reader: BufReader<R>, origin: &Path) -> Result<WordVectorTable> {
    let mut table = WordVectorTable::new(0);
    let mut dim: Option<usize> = None;
    let mut skipped = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let rest: Vec<&str> = fields.collect();
        if lineno == 1 && rest.len() == 1 && token.parse::<usize>().is_ok() && rest[0].parse::<usize>().is_ok() {
            let d: usize = rest[0].parse().unwrap_or(0);
            dim = Some(d);
            table.dim = d;
            continue;
        }
        let values: Vec<f64> = rest
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(origin, lineno, format!("bad vector component: {e}")))?;
        match dim {
            None => {
                if values.is_empty() {
                    return Err(Error::parse(origin, lineno, "token without vector components"));
                }
                dim = Some(values.len());
                table.dim = values.len();
            }
            Some(d) if d != values.len() => {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!("expected {d} components, found {}", values.len()),
                ));
            }
            Some(_) => {}
        }
        if !values.iter().all(|x| x.is_finite()) {
            return Err(Error::parse(origin, lineno, "non-finite vector component"));
        }
        if !table.insert(token, &values)? {
            skipped += 1;
        }
    }
    if skipped > 0 {
        log::warn!("{}: skipped {skipped} zero vectors", origin.display());
    }
    Ok(table)
}

/// Splits an entity name on whitespace, underscores, hyphens and
/// lower-to-upper camel-case boundaries; tokens are lowercased.
pub fn tokenize(name: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for part in name.split(|c: char| c.is_whitespace() || c == '_' || c == '-') {
        let mut cur = String::new();
        let mut prev_lower = false;
        for ch in part.chars() {
            if ch.is_uppercase() && prev_lower && !cur.is_empty() {
                tokens.push(std::mem::take(&mut cur).to_lowercase());
            }
            prev_lower = ch.is_lowercase() || ch.is_ascii_digit();
            cur.push(ch);
        }
        if !cur.is_empty() {
            tokens.push(cur.to_lowercase());
        }
    }
    tokens
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::invalid(format!(
            "cosine of vectors with dimensions {} and {}",
            u.len(),
            v.len()
        )));
    }
    let nu = norm(u);
    let nv = norm(v);
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::invalid("cosine of a zero vector"));
    }
    let d: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok((d / (nu * nv)).clamp(-1.0, 1.0))
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm(v);
    (n > 0.0 && n.is_finite()).then(|| v.iter().map(|x| x / n).collect())
}
