//! Word embedding table and GloVe-format loading.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::{DataError, Vocabulary, PAD_INDEX, UNK_INDEX};
use crate::tensor::Tensor;

/// `|V| × E` embedding matrix. The PAD row is all zeros and is kept zero
/// during training regardless of the trainable flag.
#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    matrix: Tensor,
    dim: usize,
    pub trainable: bool,
}

impl EmbeddingTable {
    /// Seeded uniform(−0.05, 0.05) initialization for every non-PAD row.
    pub fn random(vocab: &Vocabulary, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut data = vec![0.0; vocab.len() * dim];
        for row in 1..vocab.len() {
            for x in &mut data[row * dim..(row + 1) * dim] {
                *x = rng.random_range(-0.05..0.05);
            }
        }
        Self {
            matrix: Tensor::new(vec![vocab.len(), dim], data).expect("embedding shape"),
            dim,
            trainable: true,
        }
    }

    pub fn from_tensor(matrix: Tensor, trainable: bool) -> Self {
        let dim = matrix.dims2().1;
        Self {
            matrix,
            dim,
            trainable,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &Tensor {
        &self.matrix
    }

    pub fn vector(&self, index: usize) -> &[f64] {
        self.matrix.row(index)
    }

    /// Mean of the token vectors; `None` when the list is empty or the
    /// mean has zero norm (nothing to point at).
    pub fn mean_vector(&self, indices: &[usize]) -> Option<Vec<f64>> {
        if indices.is_empty() {
            return None;
        }
        let mut out = vec![0.0; self.dim];
        for &i in indices {
            for (o, &x) in out.iter_mut().zip(self.vector(i)) {
                *o += x;
            }
        }
        for o in out.iter_mut() {
            *o /= indices.len() as f64;
        }
        if out.iter().all(|&x| x == 0.0) {
            None
        } else {
            Some(out)
        }
    }
}

/// Coverage of the vocabulary by an embedding file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverageStats {
    pub found: usize,
    pub vocab_words: usize,
    pub lines_read: usize,
}

impl CoverageStats {
    pub fn coverage(&self) -> f64 {
        if self.vocab_words == 0 {
            0.0
        } else {
            self.found as f64 / self.vocab_words as f64
        }
    }
}

/// Load GloVe text format (one `token v1 … vE` line per word). Tokens in
/// the vocabulary take their file vectors; everything else gets a seeded
/// uniform(−0.05, 0.05) vector; PAD stays zero.
pub fn load_embeddings(
    path: impl AsRef<Path>,
    vocab: &Vocabulary,
    dim: usize,
    seed: u64,
) -> Result<(EmbeddingTable, CoverageStats), DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut file_vectors: Vec<Option<Vec<f64>>> = vec![None; vocab.len()];
    let mut lines_read = 0;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        lines_read += 1;
        let mut parts = line.split_whitespace();
        let token = parts.next().expect("non-empty line has a first field");
        let values: Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
        let values = values.map_err(|e| DataError::EmbeddingFormat {
            line: line_no,
            message: format!("bad float: {e}"),
        })?;
        if values.len() != dim {
            return Err(DataError::EmbeddingFormat {
                line: line_no,
                message: format!(
                    "token {token:?} has {} dimensions, expected {dim}",
                    values.len()
                ),
            });
        }
        let index = vocab.lookup(token);
        if index != UNK_INDEX || token == super::UNK_TOKEN {
            file_vectors[index] = Some(values);
        }
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut data = vec![0.0; vocab.len() * dim];
    let mut found = 0;
    for row in 0..vocab.len() {
        if row == PAD_INDEX {
            continue; // stays zero
        }
        match &file_vectors[row] {
            Some(v) => {
                if row >= 2 {
                    found += 1;
                }
                data[row * dim..(row + 1) * dim].copy_from_slice(v);
            }
            None => {
                for x in &mut data[row * dim..(row + 1) * dim] {
                    *x = rng.random_range(-0.05..0.05);
                }
            }
        }
    }

    let stats = CoverageStats {
        found,
        vocab_words: vocab.non_reserved(),
        lines_read,
    };
    let table = EmbeddingTable {
        matrix: Tensor::new(vec![vocab.len(), dim], data).expect("embedding shape"),
        dim,
        trainable: false,
    };
    Ok((table, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn vocab() -> Vocabulary {
        Vocabulary::from_tokens(["alpha", "beta", "gamma"].iter().map(|s| s.to_string()))
    }

    fn write_file(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn full_coverage() {
        let f = write_file("alpha 1 0 0\nbeta 0 1 0\ngamma 0 0 1\n");
        let (table, stats) = load_embeddings(f.path(), &vocab(), 3, 1).unwrap();
        assert_eq!(stats.found, 3);
        assert!((stats.coverage() - 1.0).abs() < 1e-12);
        assert_eq!(table.vector(vocab().lookup("alpha")), &[1.0, 0.0, 0.0]);
        assert_eq!(table.vector(PAD_INDEX), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn empty_file_gives_zero_coverage_random_table() {
        let f = write_file("");
        let (table, stats) = load_embeddings(f.path(), &vocab(), 4, 1).unwrap();
        assert_eq!(stats.found, 0);
        assert_eq!(stats.coverage(), 0.0);
        assert!(table.vector(2).iter().any(|&x| x != 0.0));
        assert_eq!(table.vector(PAD_INDEX), &[0.0; 4]);
    }

    #[test]
    fn dimension_mismatch_names_line() {
        let f = write_file("alpha 1 0 0\nbeta 0 1\n");
        let err = load_embeddings(f.path(), &vocab(), 3, 1).unwrap_err();
        match err {
            DataError::EmbeddingFormat { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn oov_vectors_are_seeded() {
        let f = write_file("alpha 1 0 0\n");
        let (a, _) = load_embeddings(f.path(), &vocab(), 3, 9).unwrap();
        let (b, _) = load_embeddings(f.path(), &vocab(), 3, 9).unwrap();
        assert_eq!(a.matrix().data(), b.matrix().data());
    }
}
