//! The knowledge access tool shared by all agents: decompose a query into
//! sub-queries, retrieve for each one over a local corpus, and synthesize a
//! cited summary.
//!
//! Built-in retrieval is lexical BM25 (k1 = 1.2, b = 0.75, idf =
//! `ln(1 + (N - df + 0.5) / (df + 0.5))`) over lowercased alphanumeric
//! tokens, with deterministic doc-id tie-breaks. Snippets are the
//! best-scoring window of at most 60 tokens, cut from the original text so
//! every citation is a verbatim substring of its document. A dense retriever
//! backed by a remote embedding endpoint is available behind the same result
//! shape; web search is a stub that either serves a fixture corpus or fails
//! with a configured error.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::agents::{AgentBackend, AgentError, BackendStep};

const BM25_K1: f64 = 1.2;
const BM25_B: f64 = 0.75;
const SNIPPET_TOKENS: usize = 60;

#[derive(Debug, thiserror::Error)]
pub enum KnowledgeError {
    #[error("duplicate document id '{0}'")]
    DuplicateDocId(String),
    #[error("query must be non-empty")]
    EmptyQuery,
    #[error("web search is not available in this configuration")]
    WebSearchUnavailable,
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed corpus file {path}: {message}")]
    Malformed { path: String, message: String },
    #[error(transparent)]
    Backend(#[from] AgentError),
    #[error("embedding endpoint error: {0}")]
    Embedding(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: String,
    pub body: String,
    pub source: String,
}

#[derive(Debug, Clone, Copy)]
struct Posting {
    doc: usize,
    tf: u32,
}

/// Indexed document store. Immutable after [`build_index`].
#[derive(Debug, Clone)]
pub struct Corpus {
    documents: Vec<Document>,
    index: BTreeMap<String, Vec<Posting>>,
    token_counts: Vec<usize>,
    avg_len: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Citation {
    pub doc_id: String,
    pub snippet: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnowledgeAnswer {
    pub answer: String,
    pub citations: Vec<Citation>,
    pub sub_queries: Vec<String>,
}

fn tokenize(text: &str) -> Vec<(String, usize, usize)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (idx, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if start.is_none() {
                start = Some(idx);
            }
        } else if let Some(s) = start.take() {
            out.push((text[s..idx].to_lowercase(), s, idx));
        }
    }
    if let Some(s) = start {
        out.push((text[s..].to_lowercase(), s, text.len()));
    }
    out
}

/// Builds the inverted index. Document ids must be unique.
pub fn build_index(documents: Vec<Document>) -> Result<Corpus, KnowledgeError> {
    let mut seen = std::collections::HashSet::new();
    for doc in &documents {
        if !seen.insert(doc.id.clone()) {
            return Err(KnowledgeError::DuplicateDocId(doc.id.clone()));
        }
    }
    let mut index: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    let mut token_counts = Vec::with_capacity(documents.len());
    for (doc_idx, doc) in documents.iter().enumerate() {
        let tokens = tokenize(&doc.body);
        token_counts.push(tokens.len());
        let mut tf: BTreeMap<String, u32> = BTreeMap::new();
        for (tok, _, _) in tokens {
            *tf.entry(tok).or_default() += 1;
        }
        for (tok, count) in tf {
            index.entry(tok).or_default().push(Posting {
                doc: doc_idx,
                tf: count,
            });
        }
    }
    let avg_len = if documents.is_empty() {
        0.0
    } else {
        token_counts.iter().sum::<usize>() as f64 / documents.len() as f64
    };
    Ok(Corpus {
        documents,
        index,
        token_counts,
        avg_len,
    })
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn document(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    fn idf(&self, token: &str) -> f64 {
        let df = self.index.get(token).map(|p| p.len()).unwrap_or(0) as f64;
        let n = self.documents.len() as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Loads every `*.txt` file in a directory: file stem is the doc id,
    /// first line is the title, whole content is the body.
    pub fn from_dir(dir: &Path) -> Result<Corpus, KnowledgeError> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|source| KnowledgeError::Io {
                path: dir.display().to_string(),
                source,
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "txt"))
            .collect();
        paths.sort();
        let mut docs = Vec::new();
        for p in paths {
            let body = std::fs::read_to_string(&p).map_err(|source| KnowledgeError::Io {
                path: p.display().to_string(),
                source,
            })?;
            let id = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let title = body.lines().next().unwrap_or(&id).trim().to_string();
            docs.push(Document {
                id,
                title,
                body,
                source: "file".into(),
            });
        }
        build_index(docs)
    }

    /// Loads a single JSON file holding an array of `{id, title, body}`.
    pub fn from_json_file(path: &Path) -> Result<Corpus, KnowledgeError> {
        #[derive(Deserialize)]
        struct Raw {
            id: String,
            #[serde(default)]
            title: String,
            body: String,
        }
        let text = std::fs::read_to_string(path).map_err(|source| KnowledgeError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let raw: Vec<Raw> = serde_json::from_str(&text).map_err(|e| KnowledgeError::Malformed {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        build_index(
            raw.into_iter()
                .map(|r| Document {
                    id: r.id,
                    title: r.title,
                    body: r.body,
                    source: "json".into(),
                })
                .collect(),
        )
    }
}

/// Top-k BM25 hits for a sub-query. Deterministic: score descending, then
/// doc id ascending. Documents with zero score are never returned.
pub fn retrieve(sub_query: &str, corpus: &Corpus, k: usize) -> Vec<Citation> {
    assert!(k >= 1, "k must be >= 1");
    if corpus.is_empty() {
        return Vec::new();
    }
    let mut query_tokens: Vec<String> = tokenize(sub_query).into_iter().map(|t| t.0).collect();
    query_tokens.sort();
    query_tokens.dedup();
    let mut scores: BTreeMap<usize, f64> = BTreeMap::new();
    for tok in &query_tokens {
        let Some(postings) = corpus.index.get(tok) else {
            continue;
        };
        let idf = corpus.idf(tok);
        for posting in postings {
            let tf = posting.tf as f64;
            let len_norm =
                1.0 - BM25_B + BM25_B * corpus.token_counts[posting.doc] as f64 / corpus.avg_len;
            let term = idf * tf * (BM25_K1 + 1.0) / (tf + BM25_K1 * len_norm);
            *scores.entry(posting.doc).or_insert(0.0) += term;
        }
    }
    let mut ranked: Vec<(usize, f64)> = scores.into_iter().filter(|(_, s)| *s > 0.0).collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| corpus.documents[a.0].id.cmp(&corpus.documents[b.0].id))
    });
    ranked
        .into_iter()
        .take(k)
        .map(|(doc_idx, score)| Citation {
            doc_id: corpus.documents[doc_idx].id.clone(),
            snippet: best_snippet(&corpus.documents[doc_idx].body, &query_tokens, corpus),
            score,
        })
        .collect()
}

/// The window of at most [`SNIPPET_TOKENS`] tokens whose matched-token idf
/// mass is highest (earliest window on ties), cut verbatim from the body.
fn best_snippet(body: &str, query_tokens: &[String], corpus: &Corpus) -> String {
    let tokens = tokenize(body);
    if tokens.is_empty() {
        return String::new();
    }
    let weights: Vec<f64> = tokens
        .iter()
        .map(|(tok, _, _)| {
            if query_tokens.binary_search(tok).is_ok() {
                corpus.idf(tok)
            } else {
                0.0
            }
        })
        .collect();
    let window = SNIPPET_TOKENS.min(tokens.len());
    let mut sum: f64 = weights[..window].iter().sum();
    let mut best_sum = sum;
    let mut best_start = 0usize;
    for start in 1..=(tokens.len() - window) {
        sum += weights[start + window - 1] - weights[start - 1];
        if sum > best_sum {
            best_sum = sum;
            best_start = start;
        }
    }
    let begin = tokens[best_start].1;
    let end = tokens[best_start + window - 1].2;
    body[begin..end].to_string()
}

/// Splits a query into 1..=5 sub-queries. The scripted policy cuts on
/// sentence boundaries (`.`, `?`, `!`, `;`) and the phrase `" and also "`;
/// a remote backend is asked to list sub-queries one per line. Falls back to
/// the whole query when nothing splits.
pub fn decompose_query(
    query: &str,
    backend: &mut Option<Box<dyn AgentBackend>>,
) -> Result<Vec<String>, KnowledgeError> {
    if query.trim().is_empty() {
        return Err(KnowledgeError::EmptyQuery);
    }
    if let Some(backend) = backend.as_mut() {
        let system = "Decompose the user's question into at most 5 independent search \
                      sub-queries. Respond with one sub-query per line and nothing else.";
        let history = vec![crate::agents::ChatMessage::user(query)];
        if let BackendStep::Final(text) = backend.step(system, &history, &[])? {
            let subs: Vec<String> = text
                .lines()
                .map(|l| l.trim_start_matches(['-', '*', ' ']).trim())
                .filter(|l| !l.is_empty())
                .take(5)
                .map(|l| l.to_string())
                .collect();
            if !subs.is_empty() {
                return Ok(subs);
            }
        }
        return Ok(vec![query.trim().to_string()]);
    }
    let mut subs = Vec::new();
    for sentence in query.split(['.', '?', '!', ';']) {
        for piece in sentence.split(" and also ") {
            let piece = piece.trim();
            if !piece.is_empty() {
                subs.push(piece.to_string());
            }
        }
    }
    subs.truncate(5);
    if subs.is_empty() {
        subs.push(query.trim().to_string());
    }
    Ok(subs)
}

/// Where a role's knowledge lookups go.
#[derive(Debug, Clone)]
pub enum KnowledgeSource {
    Corpus(Corpus),
    /// Offline stand-in for open-ended web search: serves the fixture corpus
    /// when one is configured, otherwise fails deterministically.
    WebStub(Option<Corpus>),
}

impl KnowledgeSource {
    fn corpus(&self) -> Result<&Corpus, KnowledgeError> {
        match self {
            KnowledgeSource::Corpus(c) => Ok(c),
            KnowledgeSource::WebStub(Some(c)) => Ok(c),
            KnowledgeSource::WebStub(None) => Err(KnowledgeError::WebSearchUnavailable),
        }
    }
}

/// Full retrieval-augmented answer: decompose, retrieve per sub-query, then
/// summarize. The scripted summary concatenates the top snippets with doc
/// citations; a remote backend writes the summary from the same snippets.
pub fn answer(
    query: &str,
    source: &KnowledgeSource,
    backend: &mut Option<Box<dyn AgentBackend>>,
    k: usize,
) -> Result<KnowledgeAnswer, KnowledgeError> {
    let corpus = source.corpus()?;
    let sub_queries = decompose_query(query, backend)?;
    let mut citations: Vec<Citation> = Vec::new();
    for sub in &sub_queries {
        for hit in retrieve(sub, corpus, k) {
            if !citations
                .iter()
                .any(|c| c.doc_id == hit.doc_id && c.snippet == hit.snippet)
            {
                citations.push(hit);
            }
        }
    }
    if citations.is_empty() {
        return Ok(KnowledgeAnswer {
            answer: format!("no sources found for: {query}"),
            citations,
            sub_queries,
        });
    }
    let scripted_summary = {
        let mut text = format!("Summary for: {query}\n");
        for c in &citations {
            text.push_str(&format!("- [{}] {}\n", c.doc_id, c.snippet));
        }
        text
    };
    let answer_text = match backend.as_mut() {
        None => scripted_summary,
        Some(backend) => {
            let system = "Write a short factual summary answering the question from the \
                          provided snippets. Cite documents as [doc_id].";
            let mut prompt = format!("Question: {query}\n\nSnippets:\n");
            for c in &citations {
                prompt.push_str(&format!("[{}] {}\n", c.doc_id, c.snippet));
            }
            let history = vec![crate::agents::ChatMessage::user(&prompt)];
            match backend.step(system, &history, &[])? {
                BackendStep::Final(text) => text,
                BackendStep::Call(_) => scripted_summary,
            }
        }
    };
    Ok(KnowledgeAnswer {
        answer: answer_text,
        citations,
        sub_queries,
    })
}

/// Client for a remote embedding endpoint speaking `{model, input[]}` in and
/// a `{data: [{embedding: [...]}]}` list out.
#[derive(Debug, Clone)]
pub struct EmbeddingClient {
    pub endpoint: String,
    pub model: String,
    pub timeout: Duration,
}

impl EmbeddingClient {
    pub fn embed(&self, inputs: &[String]) -> Result<Vec<Vec<f64>>, KnowledgeError> {
        #[derive(Serialize)]
        struct Request<'a> {
            model: &'a str,
            input: &'a [String],
        }
        #[derive(Deserialize)]
        struct Row {
            embedding: Vec<f64>,
        }
        #[derive(Deserialize)]
        struct Response {
            data: Vec<Row>,
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(self.timeout)
            .build()
            .map_err(|e| KnowledgeError::Embedding(e.to_string()))?;
        let resp = client
            .post(&self.endpoint)
            .json(&Request {
                model: &self.model,
                input: inputs,
            })
            .send()
            .map_err(|e| KnowledgeError::Embedding(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(KnowledgeError::Embedding(format!(
                "status {}",
                resp.status()
            )));
        }
        let body: Response = resp
            .json()
            .map_err(|e| KnowledgeError::Embedding(e.to_string()))?;
        if body.data.len() != inputs.len() {
            return Err(KnowledgeError::Embedding(format!(
                "expected {} embeddings, got {}",
                inputs.len(),
                body.data.len()
            )));
        }
        Ok(body.data.into_iter().map(|r| r.embedding).collect())
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Dense alternative to [`retrieve`]: rank documents by cosine similarity of
/// remote embeddings. Same citation shape and tie-break as the lexical path.
pub fn dense_retrieve(
    client: &EmbeddingClient,
    sub_query: &str,
    corpus: &Corpus,
    k: usize,
) -> Result<Vec<Citation>, KnowledgeError> {
    assert!(k >= 1, "k must be >= 1");
    if corpus.is_empty() {
        return Ok(Vec::new());
    }
    let mut inputs: Vec<String> = vec![sub_query.to_string()];
    inputs.extend(corpus.documents().iter().map(|d| d.body.clone()));
    let vectors = client.embed(&inputs)?;
    let query_vec = &vectors[0];
    let query_tokens: Vec<String> = {
        let mut t: Vec<String> = tokenize(sub_query).into_iter().map(|t| t.0).collect();
        t.sort();
        t.dedup();
        t
    };
    let mut ranked: Vec<(usize, f64)> = vectors[1..]
        .iter()
        .enumerate()
        .map(|(i, v)| (i, cosine(query_vec, v)))
        .collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| corpus.documents[a.0].id.cmp(&corpus.documents[b.0].id))
    });
    Ok(ranked
        .into_iter()
        .take(k)
        .map(|(doc_idx, score)| Citation {
            doc_id: corpus.documents[doc_idx].id.clone(),
            snippet: best_snippet(&corpus.documents[doc_idx].body, &query_tokens, corpus),
            score,
        })
        .collect())
}
