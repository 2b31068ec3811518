//! Paper content vectors: a PV-DBOW trainer with negative sampling over
//! titles and abstracts, and a text loader/saver for precomputed vectors.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use log::warn;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusStore;
use crate::error::{Error, Result};
use crate::numeric::{derive_seed, dot, neg_log_sigmoid, sigmoid, xavier_init, Dense};

/// Lower-cases `text`, splits on non-alphanumeric runs and keeps tokens of
/// at least two characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    min_count: u64,
}

impl Vocabulary {
    /// Keeps tokens seen at least `min_count` times, indexed in first-seen order.
    pub fn build<'a>(docs: impl IntoIterator<Item = &'a [String]>, min_count: u64) -> Self {
        let mut order = Vec::new();
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for doc in docs {
            for t in doc {
                let c = counts.entry(t.as_str()).or_insert(0);
                if *c == 0 {
                    order.push(t.as_str());
                }
                *c += 1;
            }
        }
        let kept: Vec<(&str, u64)> = order
            .into_iter()
            .map(|t| (t, counts[t]))
            .filter(|&(_, c)| c >= min_count)
            .collect();
        Vocabulary {
            tokens: kept.iter().map(|(t, _)| t.to_string()).collect(),
            counts: kept.iter().map(|&(_, c)| c).collect(),
            index: kept.iter().enumerate().map(|(i, (t, _))| (t.to_string(), i)).collect(),
            min_count,
        }
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i]
    }

    pub fn count(&self, i: usize) -> u64 {
        self.counts[i]
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentConfig {
    pub dim: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub learning_rate: f64,
    pub min_count: u64,
    pub seed: u64,
}

impl Default for ContentConfig {
    fn default() -> Self {
        ContentConfig {
            dim: 64,
            epochs: 50,
            negatives: 5,
            learning_rate: 0.025,
            min_count: 2,
            seed: 1,
        }
    }
}

impl ContentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.epochs == 0 || self.negatives == 0 {
            return Err(Error::Config(
                "content dim, epochs and negatives must be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("content learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Paper vectors, one row per paper id.
#[derive(Debug, Clone, PartialEq)]
pub struct DocVectors {
    paper_ids: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Dense,
}

impl DocVectors {
    pub fn new(paper_ids: Vec<String>, vectors: Dense) -> Result<Self> {
        if paper_ids.len() != vectors.rows() {
            return Err(Error::Dimension(format!(
                "{} paper ids for {} vectors",
                paper_ids.len(),
                vectors.rows()
            )));
        }
        let index: HashMap<_, _> = paper_ids.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        if index.len() != paper_ids.len() {
            return Err(Error::Dimension("duplicate paper ids in vector table".into()));
        }
        Ok(DocVectors { paper_ids, index, vectors })
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn len(&self) -> usize {
        self.paper_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paper_ids.is_empty()
    }

    pub fn paper_ids(&self) -> &[String] {
        &self.paper_ids
    }

    pub fn matrix(&self) -> &Dense {
        &self.vectors
    }

    pub fn get(&self, paper_id: &str) -> Option<&[f64]> {
        self.index.get(paper_id).map(|&i| self.vectors.row(i))
    }

    /// `#dim <d>` header followed by `<paper_id> <v_1> ... <v_d>` lines.
    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "#dim {}", self.dim())?;
        for (i, id) in self.paper_ids.iter().enumerate() {
            write!(out, "{id}")?;
            for v in self.vectors.row(i) {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format { line, message: message.into() }
}

/// Reads a vector file and returns rows in corpus paper order. Every corpus
/// paper must be present; ids unknown to the corpus are ignored.
pub fn load_vectors<R: BufRead>(reader: R, corpus: &CorpusStore) -> Result<DocVectors> {
    let mut dim = None;
    let mut rows: HashMap<String, Vec<f64>> = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let Some(d) = dim else {
            let d = trimmed
                .strip_prefix("#dim")
                .and_then(|r| r.trim().parse::<usize>().ok())
                .filter(|&d| d > 0)
                .ok_or_else(|| format_err(line_no, "expected `#dim <positive integer>` header"))?;
            dim = Some(d);
            continue;
        };
        let mut parts = trimmed.split_whitespace();
        let id = parts.next().expect("non-empty line").to_string();
        let values = parts
            .map(|p| p.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| format_err(line_no, "vector entries must be finite decimals"))?;
        if values.len() != d {
            return Err(format_err(
                line_no,
                format!("expected {d} values for `{id}`, found {}", values.len()),
            ));
        }
        if rows.insert(id.clone(), values).is_some() {
            return Err(format_err(line_no, format!("paper `{id}` appears twice")));
        }
    }
    let dim = dim.ok_or_else(|| format_err(1, "missing `#dim` header"))?;
    let mut data = Vec::with_capacity(corpus.num_papers() * dim);
    for id in corpus.paper_ids() {
        let row = rows.get(id).ok_or_else(|| Error::Coverage(id.to_string()))?;
        data.extend_from_slice(row);
    }
    DocVectors::new(
        corpus.paper_ids().map(str::to_string).collect(),
        Dense::from_vec(corpus.num_papers(), dim, data)?,
    )
}

/// PV-DBOW pair objective `log s(v.c_w) + sum_n log s(-v.c_n)`.
pub fn pair_objective(doc: &[f64], target: &[f64], negatives: &[&[f64]]) -> f64 {
    -neg_log_sigmoid(dot(doc, target)) - negatives.iter().map(|c| neg_log_sigmoid(-dot(doc, c))).sum::<f64>()
}

/// Gradients of [`pair_objective`] w.r.t. the document, target and negative vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    pub doc: Vec<f64>,
    pub target: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

pub fn pair_gradient(doc: &[f64], target: &[f64], negatives: &[&[f64]]) -> PairGradient {
    let g_pos = 1.0 - sigmoid(dot(doc, target));
    let mut d_doc: Vec<f64> = target.iter().map(|c| g_pos * c).collect();
    let mut d_negs = Vec::with_capacity(negatives.len());
    for c in negatives {
        let g = -sigmoid(dot(doc, c));
        for (acc, &x) in d_doc.iter_mut().zip(*c) {
            *acc += g * x;
        }
        d_negs.push(doc.iter().map(|v| g * v).collect());
    }
    PairGradient {
        doc: d_doc,
        target: doc.iter().map(|v| g_pos * v).collect(),
        negatives: d_negs,
    }
}

/// Trained vectors plus the mean per-pair loss of each epoch.
#[derive(Debug, Clone)]
pub struct ContentTraining {
    pub vectors: DocVectors,
    pub epoch_losses: Vec<f64>,
}

/// Trains PV-DBOW document vectors for every corpus paper on
/// `tokenize(title + " " + abstract)`.
///
/// Each (document, word) pair takes one SGD ascent step on the pair
/// objective with `negatives` noise words drawn from the unigram^0.75
/// distribution. The step size decays linearly over the run. Papers without
/// in-vocabulary tokens keep a Xavier-initialised vector.
pub fn train_pvdbow(corpus: &CorpusStore, config: &ContentConfig) -> Result<ContentTraining> {
    config.validate()?;
    let docs: Vec<Vec<String>> = corpus.papers().values().map(|p| tokenize(&p.text())).collect();
    let vocab = Vocabulary::build(docs.iter().map(Vec::as_slice), config.min_count);
    if vocab.is_empty() {
        return Err(Error::Config(format!(
            "content vocabulary is empty (no token occurs {} times)",
            config.min_count
        )));
    }
    let encoded: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| d.iter().filter_map(|t| vocab.get(t)).collect())
        .collect();

    let dim = config.dim;
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[0]));
    let mut doc_vecs = Dense::zeros(corpus.num_papers(), dim);
    for (d, tokens) in encoded.iter().enumerate() {
        if tokens.is_empty() {
            let id = corpus.papers().get_index(d).expect("index").0;
            warn!("paper `{id}` has no usable tokens; its content vector stays untrained");
            let v = xavier_init(1, dim, &mut init_rng);
            doc_vecs.row_mut(d).copy_from_slice(v.as_slice());
        } else {
            for v in doc_vecs.row_mut(d) {
                *v = (init_rng.random::<f64>() - 0.5) / dim as f64;
            }
        }
    }
    let mut ctx = Dense::zeros(vocab.len(), dim);

    let noise = WeightedIndex::new((0..vocab.len()).map(|i| (vocab.count(i) as f64).powf(0.75)))
        .map_err(|e| Error::Config(format!("noise distribution: {e}")))?;
    let total_pairs: usize = encoded.iter().map(Vec::len).sum::<usize>() * config.epochs;
    let min_lr = config.learning_rate * 1e-4;
    let mut seen = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[1]));
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut neu = vec![0.0; dim];
    let mut negs = Vec::with_capacity(config.negatives);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let (mut loss, mut pairs) = (0.0, 0usize);
        for &d in &order {
            for &w in &encoded[d] {
                let lr = (config.learning_rate * (1.0 - seen as f64 / total_pairs as f64)).max(min_lr);
                seen += 1;
                negs.clear();
                negs.extend((0..config.negatives).map(|_| noise.sample(&mut rng)).filter(|&n| n != w));

                let doc = doc_vecs.row(d).to_vec();
                neu.iter_mut().for_each(|x| *x = 0.0);
                let mut pair_loss = 0.0;
                for (target, label) in std::iter::once((w, 1.0)).chain(negs.iter().map(|&n| (n, 0.0))) {
                    let f = dot(&doc, ctx.row(target));
                    pair_loss += if label > 0.0 { neg_log_sigmoid(f) } else { neg_log_sigmoid(-f) };
                    let g = (label - sigmoid(f)) * lr;
                    for ((acc, c), &v) in neu.iter_mut().zip(ctx.row_mut(target)).zip(&doc) {
                        *acc += g * *c;
                        *c += g * v;
                    }
                }
                for (v, n) in doc_vecs.row_mut(d).iter_mut().zip(&neu) {
                    *v += n;
                }
                loss += pair_loss;
                pairs += 1;
            }
        }
        epoch_losses.push(loss / pairs.max(1) as f64);
    }

    Ok(ContentTraining {
        vectors: DocVectors::new(corpus.paper_ids().map(str::to_string).collect(), doc_vecs)?,
        epoch_losses,
    })
}
