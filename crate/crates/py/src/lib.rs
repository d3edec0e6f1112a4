//! Python bindings: tokenization, ROUGE, BM25, topic modeling, the
//! greedy cover, and model training/prediction.
//!
//! Build with `cargo build -p veracity-py --release` and import the
//! produced cdylib as `veracity_py` (see python/smoke_test.py).

use std::collections::BTreeSet;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use veracity_core::classifier::{classification_metrics, Model, ModelConfig};
use veracity_core::corpus::{self, load_dataset, EmbeddingTable, Vocabulary};
use veracity_core::summarize::{self, CandidateSentence};
use veracity_core::topic::{LdaConfig, LdaModel};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn io_error(e: impl std::fmt::Display) -> PyErr {
    PyIOError::new_err(e.to_string())
}

/// Lowercased tokens on alphanumeric boundaries.
#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    corpus::tokenize(text)
}

/// Sentence segmentation on `.`/`!`/`?` followed by whitespace.
#[pyfunction]
fn split_sentences(text: &str) -> Vec<String> {
    corpus::split_sentences(text)
}

/// ROUGE-1/2/L of candidate vs reference text. Returns
/// `{metric: (precision, recall, f1)}`.
#[pyfunction]
fn rouge(
    candidate: &str,
    reference: &str,
) -> PyResult<std::collections::HashMap<String, (f64, f64, f64)>> {
    let cand = corpus::tokenize(candidate);
    let reference = corpus::tokenize(reference);
    let report = veracity_core::rouge::score_pair(&cand, &reference).map_err(value_error)?;
    let mut out = std::collections::HashMap::new();
    let mut put = |name: &str, s: veracity_core::rouge::RougeScore| {
        out.insert(name.to_string(), (s.precision, s.recall, s.f1));
    };
    put("rouge1", report.rouge1);
    put("rouge2", report.rouge2);
    put("rougeL", report.rouge_l);
    Ok(out)
}

/// Okapi BM25 ranking of token lists against a query, descending
/// `(index, score)` pairs.
#[pyfunction]
fn bm25_rank(query: Vec<String>, sentences: Vec<Vec<String>>) -> Vec<(usize, f64)> {
    let refs: Vec<&[String]> = sentences.iter().map(|s| s.as_slice()).collect();
    summarize::bm25_rank(&query, &refs)
}

/// Greedy weighted set cover. `covers[i]` lists the topics sentence `i`
/// covers; the universe defaults to the union of all covered topics.
/// Returns selected indices in selection order.
#[pyfunction]
#[pyo3(signature = (costs, covers, universe=None))]
fn greedy_cover(
    costs: Vec<f64>,
    covers: Vec<Vec<usize>>,
    universe: Option<Vec<usize>>,
) -> PyResult<Vec<usize>> {
    if costs.len() != covers.len() {
        return Err(value_error("costs and covers must have equal length"));
    }
    let candidates: Vec<CandidateSentence> = costs
        .iter()
        .zip(&covers)
        .enumerate()
        .map(|(i, (&cost, cover))| CandidateSentence {
            doc_index: 0,
            sentence_index: i,
            text: String::new(),
            tokens: vec![],
            word_attention: 0.0,
            sentence_attention: 0.0,
            topic: veracity_core::topic::TopicAssignment {
                distribution: vec![],
                dominant: cover.first().copied().unwrap_or(0),
                theta: 0.0,
                in_vocab_tokens: 1,
            },
            score: 1.0 / cost,
            cost,
            covers: cover.clone(),
        })
        .collect();
    let universe: BTreeSet<usize> = match universe {
        Some(u) => u.into_iter().collect(),
        None => covers.iter().flatten().copied().collect(),
    };
    let result = summarize::greedy_cover(&candidates, &universe, None).map_err(value_error)?;
    Ok(result.selected.iter().map(|c| c.sentence_index).collect())
}

/// A fitted topic model bound to the vocabulary it was trained with.
#[pyclass]
struct TopicModel {
    model: LdaModel,
    vocab: Vocabulary,
}

#[pymethods]
impl TopicModel {
    /// Fit over tokenized sentences by collapsed Gibbs sampling.
    #[staticmethod]
    #[pyo3(signature = (sentences, topics=10, iterations=500, seed=7))]
    fn fit(
        sentences: Vec<Vec<String>>,
        topics: usize,
        iterations: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let vocab = Vocabulary::from_tokens(sentences.iter().flatten().cloned());
        let indexed: Vec<Vec<usize>> = sentences
            .iter()
            .map(|s| s.iter().map(|t| vocab.lookup(t)).collect())
            .collect();
        let config = LdaConfig {
            topics,
            iterations,
            seed,
            ..Default::default()
        };
        let model = LdaModel::fit(&indexed, vocab.len(), vocab.fingerprint(), &config)
            .map_err(value_error)?;
        Ok(Self { model, vocab })
    }

    /// `(distribution, dominant_topic, theta)` for a tokenized sentence.
    fn assign(&self, tokens: Vec<String>) -> (Vec<f64>, usize, f64) {
        let ids: Vec<usize> = tokens.iter().map(|t| self.vocab.lookup(t)).collect();
        let a = self.model.assign(&ids);
        (a.distribution, a.dominant, a.theta)
    }

    #[getter]
    fn topics(&self) -> usize {
        self.model.topics
    }
}

/// A trained claim-verification model.
#[pyclass]
struct Verifier {
    model: Model,
}

#[pymethods]
impl Verifier {
    /// Train on JSON-lines datasets. `config_json` holds partial model
    /// configuration (unknown keys are rejected), e.g.
    /// `'{"hidden_size": 8, "max_epochs": 5}'`.
    #[staticmethod]
    #[pyo3(signature = (train_path, val_path, embeddings_path=None, config_json=None))]
    fn train(
        train_path: PathBuf,
        val_path: PathBuf,
        embeddings_path: Option<PathBuf>,
        config_json: Option<&str>,
    ) -> PyResult<Self> {
        let mut config: ModelConfig = match config_json {
            Some(json) => serde_json::from_str(json).map_err(value_error)?,
            None => ModelConfig::default(),
        };
        let train_set = load_dataset(&train_path).map_err(io_error)?;
        let val_set = load_dataset(&val_path).map_err(io_error)?;
        let vocab = Vocabulary::build(&train_set);
        let seed = veracity_core::derive_seed(config.seed, "embedding");
        let table = match embeddings_path {
            Some(path) => {
                let (table, _) =
                    corpus::load_embeddings(&path, &vocab, config.embedding_size, seed)
                        .map_err(io_error)?;
                table
            }
            None => {
                config.trainable_embeddings = true;
                EmbeddingTable::random(&vocab, config.embedding_size, seed)
            }
        };
        let outcome = veracity_core::classifier::train(&train_set, &val_set, vocab, &table, config)
            .map_err(value_error)?;
        Ok(Self {
            model: outcome.model,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            model: Model::load(&path).map_err(io_error)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.model.save(&path).map_err(io_error)
    }

    /// Predict every claim in a dataset; returns the reports (with
    /// attention exports) as a JSON string.
    fn predict_json(&self, data_path: PathBuf) -> PyResult<String> {
        let instances = load_dataset(&data_path).map_err(io_error)?;
        let reports: Result<Vec<_>, _> = instances.iter().map(|i| self.model.predict(i)).collect();
        serde_json::to_string_pretty(&reports.map_err(value_error)?).map_err(value_error)
    }

    /// `(true_accuracy, false_accuracy, macro_f1)` over a labeled set.
    fn evaluate(&self, data_path: PathBuf) -> PyResult<(Option<f64>, Option<f64>, f64)> {
        let instances = load_dataset(&data_path).map_err(io_error)?;
        let (_, pairs) = self.model.evaluate_loss(&instances).map_err(value_error)?;
        let metrics = classification_metrics(&pairs);
        Ok((
            metrics.accuracy_of(corpus::Label::True),
            metrics.accuracy_of(corpus::Label::False),
            metrics.macro_f1,
        ))
    }
}

#[pymodule]
fn veracity_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(split_sentences, m)?)?;
    m.add_function(wrap_pyfunction!(rouge, m)?)?;
    m.add_function(wrap_pyfunction!(bm25_rank, m)?)?;
    m.add_function(wrap_pyfunction!(greedy_cover, m)?)?;
    m.add_class::<TopicModel>()?;
    m.add_class::<Verifier>()?;
    Ok(())
}
