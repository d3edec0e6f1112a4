//! Dataset ingestion, vocabulary, embeddings, and padding to the model's
//! document geometry.

mod embed;
pub mod synthetic;
mod tokenize;

pub use embed::{load_embeddings, CoverageStats, EmbeddingTable};
pub use tokenize::{split_sentences, tokenize};

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Ingestion { line: usize, message: String },
    #[error("embedding format error at line {line}: {message}")]
    EmbeddingFormat { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

/// Binary claim label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    True,
    False,
}

impl Label {
    pub fn class_index(self) -> usize {
        match self {
            Label::False => 0,
            Label::True => 1,
        }
    }

    pub fn from_class_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Label::False),
            1 => Some(Label::True),
            _ => None,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "true" => Some(Label::True),
            "false" => Some(Label::False),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::True => write!(f, "true"),
            Label::False => write!(f, "false"),
        }
    }
}

pub const NUM_CLASSES: usize = 2;

/// One tokenized body sentence with its original text kept for rendering.
#[derive(Clone, Debug, PartialEq)]
pub struct Sentence {
    pub text: String,
    pub tokens: Vec<String>,
}

/// One retrieved evidence document: tokenized title, sentence-split body,
/// and the source domain it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct EvidenceDocument {
    pub title: Vec<String>,
    pub sentences: Vec<Sentence>,
    pub source_domain: String,
    /// Raw body text, preserved so datasets round-trip through write/load.
    pub body: String,
    title_text: String,
}

impl EvidenceDocument {
    pub fn from_raw(title: &str, body: &str, source_domain: &str) -> Result<Self, String> {
        let sentences: Vec<Sentence> = split_sentences(body)
            .into_iter()
            .map(|text| {
                let tokens = tokenize(&text);
                Sentence { text, tokens }
            })
            .filter(|s| !s.tokens.is_empty())
            .collect();
        if sentences.is_empty() {
            return Err("document body has no tokenizable sentence".into());
        }
        Ok(Self {
            title: tokenize(title),
            sentences,
            source_domain: source_domain.to_string(),
            body: body.to_string(),
            title_text: title.to_string(),
        })
    }

    pub fn title_text(&self) -> &str {
        &self.title_text
    }
}

/// One claim, its label, its pseudo-relevant evidence documents, and the
/// optional fact-check description used to build gold summaries.
#[derive(Clone, Debug, PartialEq)]
pub struct ClaimInstance {
    pub claim_id: String,
    pub claim_text: String,
    pub claim_tokens: Vec<String>,
    pub label: Label,
    pub documents: Vec<EvidenceDocument>,
    pub description: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct RawDocument {
    title: String,
    body: String,
    source_domain: String,
}

#[derive(Serialize, Deserialize)]
struct RawClaim {
    claim_id: String,
    claim_text: String,
    label: String,
    documents: Vec<RawDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
}

/// Load a JSON-lines dataset, validating every instance. Errors carry the
/// offending line number.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<ClaimInstance>, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut instances = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        instances.push(parse_claim_line(&line, line_no)?);
    }
    Ok(instances)
}

fn parse_claim_line(line: &str, line_no: usize) -> Result<ClaimInstance, DataError> {
    let raw: RawClaim = serde_json::from_str(line).map_err(|e| DataError::Ingestion {
        line: line_no,
        message: e.to_string(),
    })?;
    let label = Label::parse(&raw.label).ok_or_else(|| DataError::Ingestion {
        line: line_no,
        message: format!("label must be \"true\" or \"false\", got {:?}", raw.label),
    })?;
    if raw.documents.is_empty() {
        return Err(DataError::Ingestion {
            line: line_no,
            message: format!("claim {} has no evidence documents", raw.claim_id),
        });
    }
    let mut documents = Vec::with_capacity(raw.documents.len());
    for (d, doc) in raw.documents.iter().enumerate() {
        let parsed = EvidenceDocument::from_raw(&doc.title, &doc.body, &doc.source_domain)
            .map_err(|message| DataError::Ingestion {
                line: line_no,
                message: format!("document {d}: {message}"),
            })?;
        documents.push(parsed);
    }
    Ok(ClaimInstance {
        claim_tokens: tokenize(&raw.claim_text),
        claim_id: raw.claim_id,
        claim_text: raw.claim_text,
        label,
        documents,
        description: raw.description,
    })
}

/// Render instances as JSON lines (inverse of [`load_dataset`]).
pub fn dataset_to_jsonl(instances: &[ClaimInstance]) -> String {
    let mut out = String::new();
    for inst in instances {
        let raw = RawClaim {
            claim_id: inst.claim_id.clone(),
            claim_text: inst.claim_text.clone(),
            label: inst.label.to_string(),
            documents: inst
                .documents
                .iter()
                .map(|d| RawDocument {
                    title: d.title_text().to_string(),
                    body: d.body.clone(),
                    source_domain: d.source_domain.clone(),
                })
                .collect(),
            description: inst.description.clone(),
        };
        out.push_str(&serde_json::to_string(&raw).expect("claim serializes"));
        out.push('\n');
    }
    out
}

/// Write instances back out as JSON lines.
pub fn write_dataset(path: impl AsRef<Path>, instances: &[ClaimInstance]) -> Result<(), DataError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    w.write_all(dataset_to_jsonl(instances).as_bytes())
        .map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
    Ok(())
}

/// Token ↔ index map with reserved entries for padding and unknowns.
/// Non-reserved tokens are indexed in sorted order, so construction is
/// deterministic for a given token set.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
}

pub const PAD_INDEX: usize = 0;
pub const UNK_INDEX: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

impl Vocabulary {
    /// Build from every token appearing anywhere in the corpus: claims,
    /// titles, bodies, and descriptions.
    pub fn build(instances: &[ClaimInstance]) -> Self {
        let mut set = BTreeSet::new();
        for inst in instances {
            set.extend(inst.claim_tokens.iter().cloned());
            if let Some(desc) = &inst.description {
                for sent in split_sentences(desc) {
                    set.extend(tokenize(&sent));
                }
            }
            for doc in &inst.documents {
                set.extend(doc.title.iter().cloned());
                for s in &doc.sentences {
                    set.extend(s.tokens.iter().cloned());
                }
            }
        }
        Self::from_tokens(set.into_iter())
    }

    pub fn from_tokens(tokens: impl Iterator<Item = String>) -> Self {
        let set: BTreeSet<String> = tokens
            .filter(|t| t != PAD_TOKEN && t != UNK_TOKEN)
            .collect();
        let mut all = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        all.extend(set);
        Self { tokens: all }
    }

    pub fn lookup(&self, token: &str) -> usize {
        // reserved entries sit at the front; the rest is sorted
        match self.tokens[2..].binary_search_by(|t| t.as_str().cmp(token)) {
            Ok(i) => i + 2,
            Err(_) => UNK_INDEX,
        }
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn non_reserved(&self) -> usize {
        self.tokens.len() - 2
    }

    /// FNV-1a over the token list; used to detect vocabulary mismatches
    /// between persisted models and datasets.
    pub fn fingerprint(&self) -> u64 {
        let mut hash: u64 = 0xcbf29ce484222325;
        for t in &self.tokens {
            for b in t.as_bytes() {
                hash ^= *b as u64;
                hash = hash.wrapping_mul(0x100000001b3);
            }
            hash ^= 0xff;
            hash = hash.wrapping_mul(0x100000001b3);
        }
        hash
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// A document indexed and padded to a fixed `k×l` grid with a mask over
/// real token positions.
#[derive(Clone, Debug, PartialEq)]
pub struct PaddedDocument {
    /// `k` rows of `l` vocabulary indices, padded with [`PAD_INDEX`].
    pub grid: Vec<Vec<usize>>,
    /// Same geometry; true where a real token sits.
    pub mask: Vec<Vec<bool>>,
    /// Number of real (non-empty) sentences, at most `k`.
    pub real_sentences: usize,
    /// Real token count per kept sentence.
    pub real_tokens: Vec<usize>,
}

/// Truncate to the first `k` sentences and first `l` tokens per sentence,
/// pad the rest, and record the mask. Attention downstream must give
/// masked positions exactly zero weight.
pub fn pad_and_index(
    doc: &EvidenceDocument,
    vocab: &Vocabulary,
    k: usize,
    l: usize,
) -> PaddedDocument {
    let mut grid = vec![vec![PAD_INDEX; l]; k];
    let mut mask = vec![vec![false; l]; k];
    let real_sentences = doc.sentences.len().min(k);
    let mut real_tokens = Vec::with_capacity(real_sentences);
    for (row, sentence) in doc.sentences.iter().take(k).enumerate() {
        let n = sentence.tokens.len().min(l);
        for (col, token) in sentence.tokens.iter().take(l).enumerate() {
            grid[row][col] = vocab.lookup(token);
            mask[row][col] = true;
        }
        real_tokens.push(n);
    }
    PaddedDocument {
        grid,
        mask,
        real_sentences,
        real_tokens,
    }
}

/// Index a flat token sequence (claim or title), truncated to `l`.
pub fn index_tokens(tokens: &[String], vocab: &Vocabulary, l: usize) -> Vec<usize> {
    tokens.iter().take(l).map(|t| vocab.lookup(t)).collect()
}

/// Deterministic seeded shuffle-and-split into train/val/test by
/// fractions (the test split takes the remainder).
pub fn shuffle_split(
    instances: &[ClaimInstance],
    train_frac: f64,
    val_frac: f64,
    seed: u64,
) -> (Vec<ClaimInstance>, Vec<ClaimInstance>, Vec<ClaimInstance>) {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut order: Vec<usize> = (0..instances.len()).collect();
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n = instances.len();
    let train_end = ((n as f64 * train_frac).round() as usize).clamp(1.min(n), n);
    let val_end = (train_end + (n as f64 * val_frac).round() as usize).min(n);
    let pick = |range: std::ops::Range<usize>| -> Vec<ClaimInstance> {
        order[range].iter().map(|&i| instances[i].clone()).collect()
    };
    (
        pick(0..train_end),
        pick(train_end..val_end),
        pick(val_end..n),
    )
}
