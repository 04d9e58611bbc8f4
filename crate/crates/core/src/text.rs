//! Local-corpus sentence retrieval for co-mention evidence.
//!
//! The corpus is JSONL (`id`, `text` per line). Sentences split on `.`,
//! `!`, `?` followed by whitespace; tokens are lowercased alphanumeric runs.
//! Entity names match as contiguous case-insensitive token runs, so the
//! evidence stays verifiable by eye.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::read_to_string;

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<String>,
}

/// Inverted sentence index over a small document collection.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusIndex {
    documents: Vec<Document>,
    /// token -> (doc, sentence) postings, deduplicated, in index order.
    postings: HashMap<String, Vec<(usize, usize)>>,
    /// token -> total occurrence count across the corpus.
    token_counts: BTreeMap<String, usize>,
}

/// One retrieved sentence with its mention score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextEvidence {
    pub doc_id: String,
    pub sentence: String,
    pub score: f64,
    pub matched: Vec<String>,
}

pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Split into sentences on `.`, `!`, `?` followed by whitespace. The
/// terminator stays with its sentence; a trailing fragment counts too.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        if matches!(chars[i], '.' | '!' | '?')
            && chars.get(i + 1).is_some_and(|c| c.is_whitespace())
        {
            let sentence: String = chars[start..=i].iter().collect();
            let trimmed = sentence.trim();
            if !trimmed.is_empty() {
                sentences.push(trimmed.to_string());
            }
            i += 1;
            while i < chars.len() && chars[i].is_whitespace() {
                i += 1;
            }
            start = i;
        } else {
            i += 1;
        }
    }
    if start < chars.len() {
        let tail: String = chars[start..].iter().collect();
        let trimmed = tail.trim();
        if !trimmed.is_empty() {
            sentences.push(trimmed.to_string());
        }
    }
    sentences
}

#[derive(Debug, Deserialize)]
struct CorpusLine {
    id: String,
    text: String,
}

impl CorpusIndex {
    pub fn build(corpus_path: &Path) -> Result<CorpusIndex> {
        let raw = read_to_string(corpus_path)?;
        Self::from_jsonl_named(&raw, corpus_path)
    }

    pub fn from_jsonl(raw: &str) -> Result<CorpusIndex> {
        Self::from_jsonl_named(raw, Path::new("<corpus>"))
    }

    fn from_jsonl_named(raw: &str, path: &Path) -> Result<CorpusIndex> {
        let mut documents = Vec::new();
        for (i, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: CorpusLine =
                serde_json::from_str(line).map_err(|e| Error::MalformedLine {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
            documents.push(Document {
                id: parsed.id,
                sentences: split_sentences(&parsed.text),
            });
        }
        Ok(Self::from_documents(documents))
    }

    pub fn from_documents(documents: Vec<Document>) -> CorpusIndex {
        let mut postings: HashMap<String, Vec<(usize, usize)>> = HashMap::new();
        let mut token_counts: BTreeMap<String, usize> = BTreeMap::new();
        for (d, doc) in documents.iter().enumerate() {
            for (s, sentence) in doc.sentences.iter().enumerate() {
                for token in tokenize(sentence) {
                    *token_counts.entry(token.clone()).or_insert(0) += 1;
                    let list = postings.entry(token).or_default();
                    if list.last() != Some(&(d, s)) {
                        list.push((d, s));
                    }
                }
            }
        }
        CorpusIndex {
            documents,
            postings,
            token_counts,
        }
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn postings(&self, token: &str) -> &[(usize, usize)] {
        self.postings.get(token).map_or(&[], |v| v.as_slice())
    }

    pub fn posting_count(&self) -> usize {
        self.postings.values().map(|v| v.len()).sum()
    }

    pub fn token_count(&self, token: &str) -> usize {
        self.token_counts.get(token).copied().unwrap_or(0)
    }
}

fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    if needle.is_empty() || needle.len() > haystack.len() {
        return false;
    }
    haystack.windows(needle.len()).any(|w| w == needle)
}

/// Retrieve sentences mentioning the two entity names. A sentence scores 2
/// when both names match, 1 when exactly one does; zero-scoring sentences
/// are omitted. Sorted by (score desc, doc id, sentence index), truncated
/// to `top_n`.
pub fn retrieve_evidence(
    idx: &CorpusIndex,
    name_u: &str,
    name_v: &str,
    top_n: usize,
) -> Vec<TextEvidence> {
    let tokens_u = tokenize(name_u);
    let tokens_v = tokenize(name_v);
    let mut hits: Vec<(f64, &str, usize, &str, Vec<String>)> = Vec::new();
    for doc in &idx.documents {
        for (s, sentence) in doc.sentences.iter().enumerate() {
            let sent_tokens = tokenize(sentence);
            let has_u = contains_run(&sent_tokens, &tokens_u);
            let has_v = contains_run(&sent_tokens, &tokens_v);
            let score = match (has_u, has_v) {
                (true, true) => 2.0,
                (true, false) | (false, true) => 1.0,
                (false, false) => continue,
            };
            let mut matched = Vec::new();
            if has_u {
                matched.push(name_u.to_string());
            }
            if has_v {
                matched.push(name_v.to_string());
            }
            hits.push((score, &doc.id, s, sentence, matched));
        }
    }
    hits.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| a.1.cmp(b.1))
            .then_with(|| a.2.cmp(&b.2))
    });
    hits.truncate(top_n);
    hits.into_iter()
        .map(|(score, doc_id, _, sentence, matched)| TextEvidence {
            doc_id: doc_id.to_string(),
            sentence: sentence.to_string(),
            score,
            matched,
        })
        .collect()
}

/// Three-level channel score: 1.0 for any co-mention, 0.5 for a best
/// single-name mention, 0.0 for nothing.
pub fn text_channel_score(evidence: &[TextEvidence]) -> f64 {
    let best = evidence.iter().map(|e| e.score).fold(0.0, f64::max);
    if best >= 2.0 {
        1.0
    } else if best >= 1.0 {
        0.5
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_corpus_has_zero_postings() {
        let idx = CorpusIndex::from_jsonl("").unwrap();
        assert_eq!(idx.posting_count(), 0);
        assert!(retrieve_evidence(&idx, "a", "b", 5).is_empty());
    }

    #[test]
    fn sentences_split_on_terminator_plus_whitespace() {
        let idx = CorpusIndex::from_jsonl(r#"{"id":"d","text":"A b. C d."}"#).unwrap();
        assert_eq!(idx.documents()[0].sentences, vec!["A b.", "C d."]);
    }

    #[test]
    fn abbreviation_without_space_does_not_split() {
        assert_eq!(
            split_sentences("v1.2 works! Yes?"),
            vec!["v1.2 works!", "Yes?"]
        );
    }

    #[test]
    fn malformed_jsonl_reports_line_number() {
        let err = CorpusIndex::from_jsonl("{\"id\":\"a\",\"text\":\"x\"}\nnot json\n").unwrap_err();
        match err {
            Error::MalformedLine { line, .. } => assert_eq!(line, 2),
            other => panic!("expected MalformedLine, got {other:?}"),
        }
    }

    // Oracle: a hand-built inverted index over a 3-document fixture.
    #[test]
    fn postings_match_hand_built_index() {
        let idx = CorpusIndex::from_jsonl(concat!(
            "{\"id\":\"d0\",\"text\":\"Ann met Bob. Bob left.\"}\n",
            "{\"id\":\"d1\",\"text\":\"Ann stayed home.\"}\n",
            "{\"id\":\"d2\",\"text\":\"Nothing here.\"}\n",
        ))
        .unwrap();
        // Hand-enumerated postings: token -> [(doc, sentence)].
        assert_eq!(idx.postings("ann"), &[(0, 0), (1, 0)]);
        assert_eq!(idx.postings("bob"), &[(0, 0), (0, 1)]);
        assert_eq!(idx.postings("left"), &[(0, 1)]);
        assert_eq!(idx.postings("nothing"), &[(2, 0)]);
        assert_eq!(idx.postings("absent"), &[] as &[(usize, usize)]);
        assert_eq!(idx.token_count("bob"), 2);
        assert_eq!(idx.token_count("ann"), 2);
    }

    #[test]
    fn rebuild_reproduces_identical_postings() {
        let raw = "{\"id\":\"a\",\"text\":\"One two. Two three.\"}\n";
        let a = CorpusIndex::from_jsonl(raw).unwrap();
        let b = CorpusIndex::from_documents(a.documents().to_vec());
        assert_eq!(a, b);
    }

    // Oracle: hand-scored fixture; doc A co-mentions both names in one
    // sentence, doc B mentions only one.
    #[test]
    fn co_mention_outranks_single_mention() {
        let idx = CorpusIndex::from_jsonl(concat!(
            "{\"id\":\"A\",\"text\":\"Ellen DeGeneres married Portia de Rossi in 2008.\"}\n",
            "{\"id\":\"B\",\"text\":\"Portia de Rossi starred in a sitcom.\"}\n",
        ))
        .unwrap();
        let hits = retrieve_evidence(&idx, "Ellen DeGeneres", "Portia de Rossi", 5);
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].doc_id, "A");
        assert_eq!(hits[0].score, 2.0);
        assert_eq!(hits[0].matched.len(), 2);
        assert_eq!(hits[1].doc_id, "B");
        assert_eq!(hits[1].score, 1.0);
    }

    #[test]
    fn absent_name_never_scores_two() {
        let idx =
            CorpusIndex::from_jsonl("{\"id\":\"A\",\"text\":\"Ann met Bob. Ann met Cid.\"}\n")
                .unwrap();
        let hits = retrieve_evidence(&idx, "Ann", "Zelda", 10);
        assert!(!hits.is_empty());
        assert!(hits.iter().all(|h| h.score < 2.0));
    }

    #[test]
    fn name_matching_is_contiguous_and_case_insensitive() {
        let idx = CorpusIndex::from_jsonl(
            "{\"id\":\"A\",\"text\":\"ellen de generes? No: Ellen DeGeneres.\"}\n",
        )
        .unwrap();
        // "Ellen DeGeneres" tokenizes to [ellen, degeneres]; only the second
        // sentence has them adjacent.
        let hits = retrieve_evidence(&idx, "Ellen DeGeneres", "nobody", 10);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].sentence, "No: Ellen DeGeneres.");
    }

    #[test]
    fn retrieval_order_is_fully_deterministic() {
        let idx = CorpusIndex::from_jsonl(concat!(
            "{\"id\":\"b\",\"text\":\"Ann met Bob.\"}\n",
            "{\"id\":\"a\",\"text\":\"Ann met Bob.\"}\n",
        ))
        .unwrap();
        let hits = retrieve_evidence(&idx, "Ann", "Bob", 10);
        assert_eq!(hits[0].doc_id, "a");
        assert_eq!(hits[1].doc_id, "b");
    }

    #[test]
    fn corpus_growth_never_removes_matches() {
        let base = "{\"id\":\"a\",\"text\":\"Ann met Bob.\"}\n";
        let grown = concat!(
            "{\"id\":\"a\",\"text\":\"Ann met Bob.\"}\n",
            "{\"id\":\"z\",\"text\":\"Ann alone. Bob alone.\"}\n",
        );
        let before = retrieve_evidence(&CorpusIndex::from_jsonl(base).unwrap(), "Ann", "Bob", 100);
        let after = retrieve_evidence(&CorpusIndex::from_jsonl(grown).unwrap(), "Ann", "Bob", 100);
        for hit in &before {
            assert!(
                after
                    .iter()
                    .any(|h| h.doc_id == hit.doc_id && h.sentence == hit.sentence),
                "lost {hit:?}"
            );
        }
    }

    #[test]
    fn channel_score_levels() {
        assert_eq!(text_channel_score(&[]), 0.0);
        let single = TextEvidence {
            doc_id: "a".into(),
            sentence: "s".into(),
            score: 1.0,
            matched: vec!["x".into()],
        };
        assert_eq!(text_channel_score(std::slice::from_ref(&single)), 0.5);
        let both = TextEvidence {
            doc_id: "a".into(),
            sentence: "s".into(),
            score: 2.0,
            matched: vec!["x".into(), "y".into()],
        };
        assert_eq!(text_channel_score(&[single, both]), 1.0);
    }
}
