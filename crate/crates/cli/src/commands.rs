//! The eight pipeline subcommands.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use veracity_core::classifier::{
    classification_metrics, train, ClassificationMetrics, Model, PredictionReport,
};
use veracity_core::corpus::{
    load_dataset, tokenize, write_dataset, ClaimInstance, EmbeddingTable, Label, Vocabulary,
};
use veracity_core::derive_seed;
use veracity_core::rouge::{
    build_gold_summary, build_gold_summary_tfidf, evaluate_summaries, CorpusRouge, GoldVector,
};
use veracity_core::summarize::{
    bm25_baseline, dominant_topic_set, greedy_cover, render_ranked, render_summary,
    score_sentences, CandidateSentence, RankedSentence, SelectionStep, SummarizerConfig,
};
use veracity_core::topic::{LdaModel, LdaUnit, TopicAssignment};

use crate::settings::{BaselineMode, Settings};
use crate::CliError;

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

// ── prepare ─────────────────────────────────────────────────────────

pub fn cmd_prepare(input: &Path, out_dir: &Path, settings: &Settings) -> Result<(), CliError> {
    let fractions_valid = settings.train_frac > 0.0
        && settings.val_frac >= 0.0
        && settings.train_frac + settings.val_frac <= 1.0;
    if !fractions_valid {
        return Err(CliError::Usage(format!(
            "fractions must satisfy 0 < train_frac and train_frac + val_frac <= 1, got {} and {}",
            settings.train_frac, settings.val_frac
        )));
    }
    let instances = load_dataset(input)?;
    if instances.is_empty() {
        return Err(CliError::Data(format!(
            "{} contains no claims",
            input.display()
        )));
    }
    let n = instances.len();
    let (train_split, val_split, test_split) = veracity_core::corpus::shuffle_split(
        &instances,
        settings.train_frac,
        settings.val_frac,
        derive_seed(settings.model.seed, "split"),
    );

    ensure_dir(out_dir)?;
    write_dataset(out_dir.join("train.jsonl"), &train_split)?;
    write_dataset(out_dir.join("val.jsonl"), &val_split)?;
    write_dataset(out_dir.join("test.jsonl"), &test_split)?;
    let manifest = serde_json::json!({
        "input": input.display().to_string(),
        "claims": n,
        "splits": {
            "train": train_split.len(),
            "val": val_split.len(),
            "test": test_split.len(),
        },
        "seed": settings.model.seed,
    });
    write_file(
        &out_dir.join("manifest.json"),
        &format!("{}\n", serde_json::to_string_pretty(&manifest).unwrap()),
    )?;
    println!(
        "prepared {} claims -> {} train / {} val / {} test in {}",
        n,
        train_split.len(),
        val_split.len(),
        test_split.len(),
        out_dir.display()
    );
    Ok(())
}

// ── train ───────────────────────────────────────────────────────────

pub fn cmd_train(
    train_path: &Path,
    val_path: &Path,
    embeddings_path: Option<&Path>,
    out_dir: &Path,
    mut settings: Settings,
) -> Result<(), CliError> {
    let train_set = load_dataset(train_path)?;
    let val_set = load_dataset(val_path)?;
    let vocab = Vocabulary::build(&train_set);

    let embedding_seed = derive_seed(settings.model.seed, "embedding");
    let table = match embeddings_path {
        Some(path) => {
            let (table, stats) = veracity_core::corpus::load_embeddings(
                path,
                &vocab,
                settings.model.embedding_size,
                embedding_seed,
            )?;
            if stats.found == 0 {
                eprintln!(
                    "warning: {} covered none of the {} vocabulary words; using random vectors",
                    path.display(),
                    stats.vocab_words
                );
            } else {
                println!(
                    "embeddings: {}/{} vocabulary words covered ({:.1}%)",
                    stats.found,
                    stats.vocab_words,
                    100.0 * stats.coverage()
                );
            }
            if !settings.trainable_embeddings_explicit {
                settings.model.trainable_embeddings = false;
            }
            table
        }
        None => {
            if !settings.trainable_embeddings_explicit {
                settings.model.trainable_embeddings = true;
            }
            EmbeddingTable::random(&vocab, settings.model.embedding_size, embedding_seed)
        }
    };

    settings.model.validate().map_err(CliError::Usage)?;
    let outcome = train(&train_set, &val_set, vocab, &table, settings.model.clone())?;

    ensure_dir(out_dir)?;
    outcome.model.save(out_dir.join("checkpoint.bin"))?;
    let mut csv = String::from("epoch,train_loss,val_loss,val_macro_f1\n");
    for record in &outcome.log {
        csv.push_str(&format!(
            "{},{:.9},{:.9},{:.6}\n",
            record.epoch, record.train_loss, record.val_loss, record.val_macro_f1
        ));
    }
    write_file(&out_dir.join("training_log.csv"), &csv)?;
    write_file(&out_dir.join("config.snapshot"), &settings.snapshot())?;
    println!(
        "trained {} epochs (best epoch {}, val loss {:.6}); artifacts in {}",
        outcome.log.len(),
        outcome.best_epoch,
        outcome.best_val_loss,
        out_dir.display()
    );
    Ok(())
}

// ── predict ─────────────────────────────────────────────────────────

pub fn cmd_predict(
    checkpoint: &Path,
    data: &Path,
    out_dir: &Path,
    config_file: Option<&Path>,
    set_pairs: &[String],
) -> Result<(), CliError> {
    let model = Model::load(checkpoint)?;
    // overrides must agree with the checkpoint's configuration
    let mut merged = Settings {
        model: model.config.clone(),
        ..Settings::default()
    };
    if let Some(path) = config_file {
        merged.apply_file(path)?;
    }
    merged.apply_pairs(set_pairs)?;
    if merged.model != model.config {
        return Err(CliError::Data(format!(
            "configuration overrides are incompatible with the checkpoint {} (fingerprint {:016x} vs {:016x})",
            checkpoint.display(),
            merged.model.fingerprint(),
            model.config.fingerprint()
        )));
    }

    let instances = load_dataset(data)?;
    let mut reports = Vec::with_capacity(instances.len());
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for instance in &instances {
        let report = model.predict(instance)?;
        *counts.entry(report.predicted_label.clone()).or_default() += 1;
        reports.push(report);
    }
    ensure_dir(out_dir)?;
    write_file(
        &out_dir.join("predictions.json"),
        &format!("{}\n", serde_json::to_string_pretty(&reports).unwrap()),
    )?;
    let rendered: Vec<String> = counts.iter().map(|(l, c)| format!("{l}: {c}")).collect();
    println!(
        "predicted {} claims ({}); report in {}",
        instances.len(),
        rendered.join(", "),
        out_dir.display()
    );
    Ok(())
}

// ── lda-fit ─────────────────────────────────────────────────────────

pub fn cmd_lda_fit(data: &Path, out: &Path, settings: &Settings) -> Result<(), CliError> {
    let instances = load_dataset(data)?;
    let vocab = Vocabulary::build(&instances);
    let units: Vec<Vec<usize>> = match settings.lda_unit {
        LdaUnit::Sentence => instances
            .iter()
            .flat_map(|c| c.documents.iter())
            .flat_map(|d| d.sentences.iter())
            .map(|s| s.tokens.iter().map(|t| vocab.lookup(t)).collect())
            .collect(),
        LdaUnit::Document => instances
            .iter()
            .flat_map(|c| c.documents.iter())
            .map(|d| {
                d.sentences
                    .iter()
                    .flat_map(|s| s.tokens.iter())
                    .map(|t| vocab.lookup(t))
                    .collect()
            })
            .collect(),
    };
    let model = LdaModel::fit(&units, vocab.len(), vocab.fingerprint(), &settings.lda)?;
    if let Some(dir) = out.parent() {
        if !dir.as_os_str().is_empty() {
            ensure_dir(dir)?;
        }
    }
    model.save(out)?;
    println!(
        "fitted {} topics over {} {} units; model in {}",
        settings.lda.topics,
        units.len(),
        match settings.lda_unit {
            LdaUnit::Sentence => "sentence",
            LdaUnit::Document => "document",
        },
        out.display()
    );
    Ok(())
}

// ── summarize ───────────────────────────────────────────────────────

#[derive(Serialize, Deserialize)]
pub struct ClaimSummary {
    pub claim_id: String,
    pub selected: Vec<CandidateSentence>,
    pub covered_topics: Vec<usize>,
    pub total_cost: f64,
    pub steps: Vec<SelectionStep>,
    pub rendered: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Serialize, Deserialize)]
pub struct BaselineSummary {
    pub claim_id: String,
    pub selected: Vec<RankedSentence>,
    pub rendered: String,
}

pub fn summarize_instances(
    model: &Model,
    lda: &LdaModel,
    lda_vocab: &Vocabulary,
    instances: &[ClaimInstance],
    config: &SummarizerConfig,
    baseline: BaselineMode,
    top_n: Option<usize>,
) -> Result<(Vec<ClaimSummary>, Vec<BaselineSummary>), CliError> {
    let mut summaries = Vec::with_capacity(instances.len());
    let mut baselines = Vec::new();
    for instance in instances {
        let report = model.predict(instance)?;
        let exports: Vec<_> = report
            .documents
            .iter()
            .map(|d| d.attention.clone())
            .collect();
        let assignments: Vec<Vec<TopicAssignment>> = instance
            .documents
            .iter()
            .zip(&exports)
            .map(|(doc, export)| {
                doc.sentences
                    .iter()
                    .take(export.words.len())
                    .map(|s| {
                        let ids: Vec<usize> =
                            s.tokens.iter().map(|t| lda_vocab.lookup(t)).collect();
                        lda.assign(&ids)
                    })
                    .collect()
            })
            .collect();
        let (candidates, warnings) = score_sentences(instance, &exports, &assignments, config)?;
        let universe = dominant_topic_set(&candidates);
        let result = greedy_cover(&candidates, &universe, config.max_sentences)?;
        if baseline == BaselineMode::Bm25 {
            let n = top_n.unwrap_or_else(|| result.selected.len().max(1));
            let picked = bm25_baseline(instance, n)?;
            baselines.push(BaselineSummary {
                claim_id: instance.claim_id.clone(),
                rendered: render_ranked(&picked),
                selected: picked,
            });
        }
        summaries.push(ClaimSummary {
            claim_id: instance.claim_id.clone(),
            rendered: render_summary(&result.selected),
            selected: result.selected,
            covered_topics: result.covered_topics,
            total_cost: result.total_cost,
            steps: result.steps,
            warnings,
        });
    }
    Ok((summaries, baselines))
}

fn load_lda_for(data_vocab: &Vocabulary, lda_path: &Path) -> Result<LdaModel, CliError> {
    if !lda_path.exists() {
        return Err(CliError::Data(format!(
            "topic model {} not found; fit one first with `veracity lda-fit`",
            lda_path.display()
        )));
    }
    let lda = LdaModel::load(lda_path)?;
    if lda.vocab_fingerprint() != data_vocab.fingerprint() {
        return Err(CliError::Data(format!(
            "topic model {} was fitted on a different dataset (vocabulary fingerprint mismatch); refit with `veracity lda-fit`",
            lda_path.display()
        )));
    }
    Ok(lda)
}

fn rendered_text(summaries: &[(String, String)]) -> String {
    let mut out = String::new();
    for (id, rendered) in summaries {
        out.push_str(&format!("# {id}\n{rendered}\n\n"));
    }
    out
}

pub fn cmd_summarize(
    checkpoint: &Path,
    lda_path: &Path,
    data: &Path,
    out_dir: &Path,
    settings: &Settings,
) -> Result<(), CliError> {
    settings.summarizer.validate()?;
    let model = Model::load(checkpoint)?;
    let instances = load_dataset(data)?;
    let vocab = Vocabulary::build(&instances);
    let lda = load_lda_for(&vocab, lda_path)?;

    let (summaries, baselines) = summarize_instances(
        &model,
        &lda,
        &vocab,
        &instances,
        &settings.summarizer,
        settings.baseline,
        settings.top_n,
    )?;

    ensure_dir(out_dir)?;
    write_file(
        &out_dir.join("summaries.json"),
        &format!("{}\n", serde_json::to_string_pretty(&summaries).unwrap()),
    )?;
    let text: Vec<(String, String)> = summaries
        .iter()
        .map(|s| (s.claim_id.clone(), s.rendered.clone()))
        .collect();
    write_file(&out_dir.join("summaries.txt"), &rendered_text(&text))?;
    if settings.baseline == BaselineMode::Bm25 {
        write_file(
            &out_dir.join("bm25_summaries.json"),
            &format!("{}\n", serde_json::to_string_pretty(&baselines).unwrap()),
        )?;
        let text: Vec<(String, String)> = baselines
            .iter()
            .map(|s| (s.claim_id.clone(), s.rendered.clone()))
            .collect();
        write_file(&out_dir.join("bm25_summaries.txt"), &rendered_text(&text))?;
    }
    println!(
        "summarized {} claims; output in {}",
        summaries.len(),
        out_dir.display()
    );
    Ok(())
}

// ── evaluation ──────────────────────────────────────────────────────

/// Gold reference tokens per claim id, from the cosine-filtered
/// fact-check descriptions. Claims without usable gold are reported.
pub fn build_gold_references(
    instances: &[ClaimInstance],
    embeddings: &EmbeddingTable,
    vocab: &Vocabulary,
    threshold: f64,
    vectorizer: GoldVector,
) -> (BTreeMap<String, Vec<String>>, Vec<String>) {
    let mut gold = BTreeMap::new();
    let mut warnings = Vec::new();
    for instance in instances {
        let Some(description) = &instance.description else {
            warnings.push(format!(
                "claim {}: no description; excluded from the reference set",
                instance.claim_id
            ));
            continue;
        };
        let built = match vectorizer {
            GoldVector::Embedding => build_gold_summary(
                &instance.claim_tokens,
                description,
                embeddings,
                vocab,
                threshold,
            ),
            GoldVector::Tfidf => {
                build_gold_summary_tfidf(&instance.claim_tokens, description, threshold)
            }
        };
        match built {
            Ok(summary) => {
                let tokens = tokenize(&summary.text);
                if tokens.is_empty() {
                    warnings.push(format!(
                        "claim {}: every description sentence was filtered; excluded",
                        instance.claim_id
                    ));
                } else {
                    gold.insert(instance.claim_id.clone(), tokens);
                }
            }
            Err(e) => warnings.push(format!("claim {}: {e}", instance.claim_id)),
        }
    }
    (gold, warnings)
}

fn rouge_csv(corpus: &CorpusRouge) -> String {
    let mut csv = String::from("claim_id,metric,precision,recall,f1\n");
    let mut row = |id: &str, metric: &str, s: veracity_core::rouge::RougeScore| {
        csv.push_str(&format!(
            "{id},{metric},{:.6},{:.6},{:.6}\n",
            s.precision, s.recall, s.f1
        ));
    };
    for (id, report) in &corpus.per_claim {
        row(id, "rouge1", report.rouge1);
        row(id, "rouge2", report.rouge2);
        row(id, "rougeL", report.rouge_l);
    }
    row("AGGREGATE", "rouge1", corpus.aggregate.rouge1);
    row("AGGREGATE", "rouge2", corpus.aggregate.rouge2);
    row("AGGREGATE", "rougeL", corpus.aggregate.rouge_l);
    csv
}

fn summary_tokens(summary: &ClaimSummary) -> Vec<String> {
    let mut ordered: Vec<&CandidateSentence> = summary.selected.iter().collect();
    ordered.sort_by_key(|c| (c.doc_index, c.sentence_index));
    ordered.iter().flat_map(|c| c.tokens.clone()).collect()
}

/// The fields evaluate-rouge needs from either summaries.json or
/// bm25_summaries.json.
#[derive(Deserialize)]
struct LooseSummary {
    claim_id: String,
    selected: Vec<LooseSentence>,
}

#[derive(Deserialize)]
struct LooseSentence {
    doc_index: usize,
    sentence_index: usize,
    tokens: Vec<String>,
}

fn loose_tokens(summary: &LooseSummary) -> Vec<String> {
    let mut ordered: Vec<&LooseSentence> = summary.selected.iter().collect();
    ordered.sort_by_key(|c| (c.doc_index, c.sentence_index));
    ordered.iter().flat_map(|c| c.tokens.clone()).collect()
}

pub fn evaluate_rouge_for(
    summary_tokens_by_id: BTreeMap<String, Vec<String>>,
    gold: &BTreeMap<String, Vec<String>>,
) -> Result<CorpusRouge, CliError> {
    // evaluate over the ids present in both; the caller reports exclusions
    let system: BTreeMap<String, Vec<String>> = summary_tokens_by_id
        .into_iter()
        .filter(|(id, _)| gold.contains_key(id))
        .collect();
    let gold_matched: BTreeMap<String, Vec<String>> = gold
        .iter()
        .filter(|(id, _)| system.contains_key(*id))
        .map(|(id, tokens)| (id.clone(), tokens.clone()))
        .collect();
    if system.is_empty() {
        return Err(CliError::Data(
            "no claims with both a summary and a gold reference; nothing to evaluate".into(),
        ));
    }
    Ok(evaluate_summaries(&system, &gold_matched)?)
}

pub fn cmd_evaluate_rouge(
    summaries_path: &Path,
    data: &Path,
    embeddings_path: &Path,
    out: &Path,
    settings: &Settings,
) -> Result<(), CliError> {
    let summaries: Vec<LooseSummary> =
        serde_json::from_str(&read_file(summaries_path)?).map_err(|e| {
            CliError::Data(format!(
                "bad summaries file {}: {e}",
                summaries_path.display()
            ))
        })?;
    let instances = load_dataset(data)?;
    let vocab = Vocabulary::build(&instances);
    let (table, _) = veracity_core::corpus::load_embeddings(
        embeddings_path,
        &vocab,
        embedding_dim(embeddings_path)?,
        derive_seed(settings.model.seed, "embedding"),
    )?;
    let (gold, warnings) = build_gold_references(
        &instances,
        &table,
        &vocab,
        settings.gold_threshold,
        settings.gold_vector,
    );
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let system: BTreeMap<String, Vec<String>> = summaries
        .iter()
        .map(|s| (s.claim_id.clone(), loose_tokens(s)))
        .collect();
    let corpus = evaluate_rouge_for(system, &gold)?;
    if let Some(dir) = out.parent() {
        if !dir.as_os_str().is_empty() {
            ensure_dir(dir)?;
        }
    }
    write_file(out, &rouge_csv(&corpus))?;
    println!(
        "rouge over {} claims: R1 f1 {:.4}, R2 f1 {:.4}, RL f1 {:.4} (report: {})",
        corpus.per_claim.len(),
        corpus.aggregate.rouge1.f1,
        corpus.aggregate.rouge2.f1,
        corpus.aggregate.rouge_l.f1,
        out.display()
    );
    Ok(())
}

/// Infer the dimension from the first line of a vectors file.
fn embedding_dim(path: &Path) -> Result<usize, CliError> {
    let content = read_file(path)?;
    let first = content
        .lines()
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| CliError::Data(format!("{} is empty", path.display())))?;
    Ok(first.split_whitespace().count().saturating_sub(1))
}

fn metrics_csv(metrics: &ClassificationMetrics) -> String {
    let mut csv = String::from("class,support,accuracy,f1\n");
    for class in &metrics.classes {
        let fmt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.6}"));
        csv.push_str(&format!(
            "{},{},{},{}\n",
            class.label,
            class.support,
            fmt(class.accuracy),
            fmt(class.f1)
        ));
    }
    csv.push_str(&format!("macro,,,{:.6}\n", metrics.macro_f1));
    csv
}

pub fn cmd_evaluate_cls(predictions_path: &Path, out: &Path) -> Result<(), CliError> {
    let reports: Vec<PredictionReport> = serde_json::from_str(&read_file(predictions_path)?)
        .map_err(|e| {
            CliError::Data(format!(
                "bad predictions file {}: {e}",
                predictions_path.display()
            ))
        })?;
    if reports.is_empty() {
        return Err(CliError::Data("no predictions to evaluate".into()));
    }
    let mut pairs = Vec::with_capacity(reports.len());
    for report in &reports {
        let gold = report.gold_label.as_deref().ok_or_else(|| {
            CliError::Data(format!(
                "claim {} has no gold label; nothing to evaluate",
                report.claim_id
            ))
        })?;
        let gold = Label::parse(gold)
            .ok_or_else(|| CliError::Data(format!("claim {}: bad gold label", report.claim_id)))?;
        let predicted = Label::parse(&report.predicted_label).ok_or_else(|| {
            CliError::Data(format!("claim {}: bad predicted label", report.claim_id))
        })?;
        pairs.push((gold, predicted));
    }
    let metrics = classification_metrics(&pairs);
    for w in &metrics.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(dir) = out.parent() {
        if !dir.as_os_str().is_empty() {
            ensure_dir(dir)?;
        }
    }
    write_file(out, &metrics_csv(&metrics))?;
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    println!(
        "classification over {} claims: true acc {}, false acc {}, macro F1 {:.4} (report: {})",
        pairs.len(),
        fmt(metrics.accuracy_of(Label::True)),
        fmt(metrics.accuracy_of(Label::False)),
        metrics.macro_f1,
        out.display()
    );
    Ok(())
}

// ── grid-lambda ─────────────────────────────────────────────────────

pub fn cmd_grid_lambda(
    checkpoint: &Path,
    lda_path: &Path,
    data: &Path,
    embeddings_path: &Path,
    out: &Path,
    settings: &Settings,
) -> Result<(), CliError> {
    let model = Model::load(checkpoint)?;
    let instances = load_dataset(data)?;
    let vocab = Vocabulary::build(&instances);
    let lda = load_lda_for(&vocab, lda_path)?;
    let (table, _) = veracity_core::corpus::load_embeddings(
        embeddings_path,
        &vocab,
        embedding_dim(embeddings_path)?,
        derive_seed(settings.model.seed, "embedding"),
    )?;
    let (gold, warnings) = build_gold_references(
        &instances,
        &table,
        &vocab,
        settings.gold_threshold,
        settings.gold_vector,
    );
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let mut csv = String::from("lambda,rouge1_f1,rouge2_f1,rougeL_f1\n");
    let mut best: Option<(f64, f64)> = None;
    for step in 1..=9 {
        let lambda = step as f64 / 10.0;
        let config = SummarizerConfig {
            lambda,
            ..settings.summarizer.clone()
        };
        let (summaries, _) = summarize_instances(
            &model,
            &lda,
            &vocab,
            &instances,
            &config,
            BaselineMode::None,
            None,
        )?;
        let system: BTreeMap<String, Vec<String>> = summaries
            .iter()
            .map(|s| (s.claim_id.clone(), summary_tokens(s)))
            .collect();
        let corpus = evaluate_rouge_for(system, &gold)?;
        csv.push_str(&format!(
            "{lambda:.1},{:.6},{:.6},{:.6}\n",
            corpus.aggregate.rouge1.f1, corpus.aggregate.rouge2.f1, corpus.aggregate.rouge_l.f1
        ));
        if best.is_none_or(|(_, f1)| corpus.aggregate.rouge_l.f1 > f1) {
            best = Some((lambda, corpus.aggregate.rouge_l.f1));
        }
    }
    if let Some(dir) = out.parent() {
        if !dir.as_os_str().is_empty() {
            ensure_dir(dir)?;
        }
    }
    write_file(out, &csv)?;
    let (lambda, f1) = best.expect("nine grid points evaluated");
    println!(
        "best lambda {lambda:.1} (ROUGE-L f1 {f1:.4}); grid in {}",
        out.display()
    );
    Ok(())
}
