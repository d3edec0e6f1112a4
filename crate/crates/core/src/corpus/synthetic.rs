//! Seeded synthetic corpora: the bundled mini dataset, marker corpora for
//! training checks, and a disjoint-vocabulary corpus for topic recovery.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::{ClaimInstance, EvidenceDocument, Label, Vocabulary};

const MARKER_TRUE: &str = "corroborated";
const MARKER_FALSE: &str = "debunked";

const SUBJECTS: &[&str] = &[
    "glacier",
    "reef",
    "aquifer",
    "wetland",
    "vaccine",
    "allergen",
    "enzyme",
    "pathogen",
    "tariff",
    "pension",
    "subsidy",
    "mortgage",
    "satellite",
    "telescope",
    "reactor",
    "magnet",
    "orchard",
    "fishery",
    "festival",
    "harbor",
    "canal",
    "turbine",
    "pipeline",
    "quarry",
    "vineyard",
];

const PHRASES: &[&str] = &[
    "doubled in size",
    "lost half its value",
    "recovered faster than expected",
    "failed the audit",
    "expanded overseas",
];

const NOISE_WORDS: &[&str] = &[
    "subscribe",
    "newsletter",
    "banner",
    "cookie",
    "login",
    "sidebar",
    "trending",
    "promo",
    "clickbait",
    "popup",
];

fn instance(
    i: usize,
    claim_text: String,
    label: Label,
    documents: Vec<EvidenceDocument>,
    description: Option<String>,
) -> ClaimInstance {
    ClaimInstance {
        claim_id: format!("c{i:03}"),
        claim_tokens: super::tokenize(&claim_text),
        claim_text,
        label,
        documents,
        description,
    }
}

/// Corpus where a single marker token in the evidence gives the label
/// away. Used for overfit and generalization checks.
pub fn marker_corpus(n_claims: usize, seed: u64) -> Vec<ClaimInstance> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let fillers = [
        "the comment thread grew long overnight",
        "several readers shared the piece widely",
        "the editor promised a follow up soon",
        "archived copies remain available on request",
    ];
    (0..n_claims)
        .map(|i| {
            let subject = SUBJECTS[i % SUBJECTS.len()];
            let phrase = PHRASES[i % PHRASES.len()];
            let label = if i % 2 == 0 {
                Label::True
            } else {
                Label::False
            };
            let marker = if label == Label::True {
                MARKER_TRUE
            } else {
                MARKER_FALSE
            };
            let claim_text = format!("the {subject} {phrase}.");
            let filler_a = fillers.choose(&mut rng).unwrap();
            let filler_b = fillers.choose(&mut rng).unwrap();
            let noise_word = NOISE_WORDS.choose(&mut rng).unwrap();
            let doc1 = EvidenceDocument::from_raw(
                &format!("review of the {subject} story"),
                &format!(
                    "analysts found the {subject} claim {marker} after review. {filler_a}. \
                     the {noise_word} stayed up all week."
                ),
                "review.example",
            )
            .expect("synthetic doc");
            let doc2 = EvidenceDocument::from_raw(
                &format!("{subject} background"),
                &format!(
                    "a later study called the {subject} figures {marker} as well. {filler_b}."
                ),
                "background.example",
            )
            .expect("synthetic doc");
            instance(i, claim_text, label, vec![doc1, doc2], None)
        })
        .collect()
}

/// Sentences drawn from `n_topics` disjoint vocabularies, plus the true
/// topic of each sentence. Exercises topic recovery.
pub fn topic_sentences(
    n_sentences: usize,
    n_topics: usize,
    seed: u64,
) -> (Vec<Vec<String>>, Vec<usize>) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let vocabularies: Vec<Vec<String>> = (0..n_topics)
        .map(|t| (0..10).map(|w| format!("topic{t}word{w}")).collect())
        .collect();
    let mut sentences = Vec::with_capacity(n_sentences);
    let mut labels = Vec::with_capacity(n_sentences);
    for i in 0..n_sentences {
        let topic = i % n_topics;
        let len = rng.random_range(5..=8);
        let sentence: Vec<String> = (0..len)
            .map(|_| vocabularies[topic].choose(&mut rng).unwrap().clone())
            .collect();
        sentences.push(sentence);
        labels.push(topic);
    }
    (sentences, labels)
}

// ── bundled mini corpus ─────────────────────────────────────────────

const MINI_SEED: u64 = 7;
pub const MINI_CLAIMS: usize = 20;
pub const MINI_EMBEDDING_DIM: usize = 8;

/// The bundled 20-claim corpus exercising the whole pipeline: marker
/// tokens make the labels learnable, four themed sentence groups give the
/// topic model structure, descriptions provide gold-summary material, and
/// keyword-stuffed "trap" sentences give term-frequency ranking something
/// tempting to pick.
pub fn mini_corpus() -> Vec<ClaimInstance> {
    (0..MINI_CLAIMS)
        .map(|i| {
            let subject = SUBJECTS[i % 20];
            let phrase = PHRASES[i % PHRASES.len()];
            let label = if i % 2 == 0 {
                Label::True
            } else {
                Label::False
            };
            let marker = if label == Label::True {
                MARKER_TRUE
            } else {
                MARKER_FALSE
            };
            let claim_text = format!("the {subject} {phrase}.");
            let phrase_words: Vec<&str> = phrase.split(' ').collect();
            let trap = |reps: usize| -> String {
                let mut words = Vec::new();
                for _ in 0..reps {
                    words.push(subject);
                }
                for w in &phrase_words {
                    words.push(w);
                    words.push(w);
                }
                format!("{}.", words.join(" "))
            };

            let doc1 = EvidenceDocument::from_raw(
                &format!("checking the {subject} story"),
                &format!(
                    "a fresh survey and careful measurement of the {subject} dataset left the \
                     story {marker}. the expert panel briefing judged the {subject} claim \
                     {marker}. {}",
                    trap(3)
                ),
                "factwatch.example",
            )
            .expect("mini doc");
            let doc2 = EvidenceDocument::from_raw(
                &format!("{subject} background file"),
                &format!(
                    "the archive ledger and registry baseline for the {subject} span a decade. \
                     analysts weighed the impact and the outcome burden for the {subject}. {}",
                    trap(2)
                ),
                "chronicle.example",
            )
            .expect("mini doc");

            let description = format!(
                "a fresh survey and careful measurement of the {subject} dataset was published. \
                 the expert panel briefing judged the {subject} claim with care. \
                 the archive ledger and registry baseline for the {subject} span a decade. \
                 analysts weighed the impact and the outcome burden for the {subject}. \
                 subscribe to the newsletter banner for trending promo popups."
            );

            instance(i, claim_text, label, vec![doc1, doc2], Some(description))
        })
        .collect()
}

/// GloVe-format embedding file contents for the mini corpus, 8 dimensions.
///
/// Subject words get a large distinct direction, content words share a
/// positive "register" component, and noise-pool words get the opposite
/// register, so claim/description cosine similarities separate cleanly.
pub fn mini_embeddings() -> String {
    let instances = mini_corpus();
    let vocab = Vocabulary::build(&instances);
    let mut rng = ChaCha12Rng::seed_from_u64(MINI_SEED);
    let mut lines = Vec::new();
    for idx in 2..vocab.len() {
        let token = vocab.token(idx).to_string();
        let mut v: Vec<f64> = (0..MINI_EMBEDDING_DIM)
            .map(|_| rng.random_range(-0.05..0.05))
            .collect();
        if SUBJECTS.contains(&token.as_str()) {
            let mut dir: Vec<f64> = (0..MINI_EMBEDDING_DIM)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            for (vi, d) in v.iter_mut().zip(&dir) {
                *vi += 3.0 * d / norm;
            }
            dir.clear();
        }
        let register = if NOISE_WORDS.contains(&token.as_str()) {
            -1.5
        } else {
            1.5
        };
        v[MINI_EMBEDDING_DIM - 1] += register;
        let rendered: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
        lines.push(format!("{token} {}", rendered.join(" ")));
    }
    lines.join("\n") + "\n"
}

/// Counts manifest for the mini corpus, committed next to the data.
pub fn manifest(instances: &[ClaimInstance]) -> serde_json::Value {
    let documents: usize = instances.iter().map(|c| c.documents.len()).sum();
    let sentences: usize = instances
        .iter()
        .flat_map(|c| c.documents.iter())
        .map(|d| d.sentences.len())
        .sum();
    let true_count = instances.iter().filter(|c| c.label == Label::True).count();
    let vocab = Vocabulary::build(instances);
    serde_json::json!({
        "claims": instances.len(),
        "documents": documents,
        "body_sentences": sentences,
        "labels": { "true": true_count, "false": instances.len() - true_count },
        "vocabulary": vocab.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mini_corpus_is_deterministic_and_balanced() {
        let a = mini_corpus();
        let b = mini_corpus();
        assert_eq!(a, b);
        assert_eq!(a.len(), MINI_CLAIMS);
        let true_count = a.iter().filter(|c| c.label == Label::True).count();
        assert_eq!(true_count, MINI_CLAIMS / 2);
        for inst in &a {
            assert_eq!(inst.documents.len(), 2);
            assert!(inst.description.is_some());
            for doc in &inst.documents {
                assert_eq!(doc.sentences.len(), 3);
            }
        }
    }

    #[test]
    fn marker_corpus_plants_markers() {
        let corpus = marker_corpus(8, 3);
        for inst in &corpus {
            let expect = match inst.label {
                Label::True => MARKER_TRUE,
                Label::False => MARKER_FALSE,
            };
            let found = inst
                .documents
                .iter()
                .flat_map(|d| d.sentences.iter())
                .any(|s| s.tokens.iter().any(|t| t == expect));
            assert!(found, "marker missing in {}", inst.claim_id);
        }
    }

    #[test]
    fn topic_sentences_use_disjoint_vocab() {
        let (sentences, labels) = topic_sentences(30, 3, 1);
        for (s, &l) in sentences.iter().zip(&labels) {
            for token in s {
                assert!(token.starts_with(&format!("topic{l}")));
            }
        }
    }
}
