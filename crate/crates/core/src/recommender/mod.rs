//! Scholar-to-paper alignment, BPR training and top-k recommendation.
//!
//! Fused scholar embeddings are mapped into the paper-vector space with
//! `u^a = ReLU(W u + b)` and a scholar-paper pair is scored by the inner
//! product `u^a . v_j`. Training minimises the BPR loss over sampled
//! (scholar, cited paper, uncited paper) triples.

mod checkpoint;
mod objective;
mod train;

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::content::ContentConfig;
use crate::corpus::{CorpusStore, SplitSpec};
use crate::encoder::{EncoderConfig, EncoderParams, ParamGroup};
use crate::error::{Error, Result};
use crate::hetnet::NodeIndex;
use crate::influence::DistanceSource;
use crate::numeric::{dot, neg_log_sigmoid, xavier_init, Dense};

pub use checkpoint::{ModelCheckpoint, Scorer, CHECKPOINT_VERSION};
pub use objective::BatchObjective;
pub use train::{train, train_with};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub reg_weight: f64,
    pub epochs: usize,
    pub seed: u64,
    pub use_content: bool,
    pub gravitational_constant: f64,
    pub distance_source: DistanceSource,
    pub encoder: EncoderConfig,
    pub content: ContentConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 1024,
            learning_rate: 0.001,
            reg_weight: 0.0005,
            epochs: 100,
            seed: 0,
            use_content: true,
            gravitational_constant: 1.0,
            distance_source: DistanceSource::CoOccurrence,
            encoder: EncoderConfig::default(),
            content: ContentConfig::default(),
        }
    }
}

impl TrainConfig {
    /// Scholar embedding width.
    pub fn dim(&self) -> usize {
        self.encoder.dim
    }

    /// Width of paper vectors, and of aligned scholar vectors.
    pub fn paper_dim(&self) -> usize {
        self.content.dim
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Config("batch_size and epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(self.reg_weight >= 0.0 && self.reg_weight.is_finite()) {
            return Err(Error::Config("reg_weight must be non-negative".into()));
        }
        if !(self.gravitational_constant > 0.0 && self.gravitational_constant.is_finite()) {
            return Err(Error::Config("gravitational_constant must be positive".into()));
        }
        self.encoder.validate()?;
        self.content.validate()
    }
}

/// `W^align` (`dim_v x d`) and `b^align` (`dim_v x 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentParams {
    pub weight: Dense,
    pub bias: Dense,
}

impl AlignmentParams {
    pub fn init<R: Rng + ?Sized>(paper_dim: usize, dim: usize, rng: &mut R) -> Self {
        AlignmentParams {
            weight: xavier_init(paper_dim, dim, rng),
            bias: Dense::zeros(paper_dim, 1),
        }
    }

    pub fn paper_dim(&self) -> usize {
        self.weight.rows()
    }
}

/// Pre-activation `U W^T + b`, one row per scholar.
pub(crate) fn align_pre(u: &Dense, params: &AlignmentParams) -> Result<Dense> {
    let (dv, d) = params.weight.shape();
    if u.cols() != d || params.bias.shape() != (dv, 1) {
        return Err(Error::Dimension(format!(
            "cannot align {}-wide embeddings with a {dv}x{d} weight and {:?} bias",
            u.cols(),
            params.bias.shape()
        )));
    }
    let mut pre = u.matmul(&params.weight.transpose())?;
    for i in 0..pre.rows() {
        for (x, b) in pre.row_mut(i).iter_mut().zip(params.bias.as_slice()) {
            *x += b;
        }
    }
    Ok(pre)
}

/// `ReLU(W u_i + b)` for every scholar row of `u`.
pub fn align(u: &Dense, params: &AlignmentParams) -> Result<Dense> {
    Ok(align_pre(u, params)?.relu())
}

/// Relevance score `u^a . v`.
pub fn score(aligned: &[f64], paper: &[f64]) -> Result<f64> {
    if aligned.len() != paper.len() {
        return Err(Error::Dimension(format!(
            "score widths differ: {} vs {}",
            aligned.len(),
            paper.len()
        )));
    }
    Ok(dot(aligned, paper))
}

/// Every trainable tensor of the recommender.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub encoder: EncoderParams,
    pub alignment: AlignmentParams,
    /// Trainable paper table, present only when content vectors are disabled.
    pub paper_embeddings: Option<Dense>,
}

impl ModelParams {
    pub fn init<R: Rng + ?Sized>(
        config: &TrainConfig,
        n_scholars: usize,
        n_relations: usize,
        n_papers: usize,
        rng: &mut R,
    ) -> Self {
        let encoder = EncoderParams::init(&config.encoder, n_scholars, n_relations, rng);
        let alignment = AlignmentParams::init(config.paper_dim(), config.dim(), rng);
        let paper_embeddings =
            (!config.use_content).then(|| xavier_init(n_papers, config.paper_dim(), rng));
        ModelParams { encoder, alignment, paper_embeddings }
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams {
            encoder: self.encoder.zeros_like(),
            alignment: AlignmentParams {
                weight: Dense::zeros_like(&self.alignment.weight),
                bias: Dense::zeros_like(&self.alignment.bias),
            },
            paper_embeddings: self.paper_embeddings.as_ref().map(Dense::zeros_like),
        }
    }

    pub fn tensors(&self) -> Vec<(ParamGroup, &Dense)> {
        let mut out = self.encoder.tensors();
        out.push((ParamGroup::Alignment, &self.alignment.weight));
        out.push((ParamGroup::Alignment, &self.alignment.bias));
        if let Some(p) = &self.paper_embeddings {
            out.push((ParamGroup::PaperEmbeddings, p));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(ParamGroup, &mut Dense)> {
        let mut out = self.encoder.tensors_mut();
        out.push((ParamGroup::Alignment, &mut self.alignment.weight));
        out.push((ParamGroup::Alignment, &mut self.alignment.bias));
        if let Some(p) = &mut self.paper_embeddings {
            out.push((ParamGroup::PaperEmbeddings, p));
        }
        out
    }

    /// `||theta||^2` over every trainable tensor.
    pub fn l2_norm_sq(&self) -> f64 {
        self.tensors().iter().map(|(_, t)| t.l2_norm_sq()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.is_finite())
    }
}

/// `-sum log s(y_ij - y_ik) + lambda ||theta||^2` for (positive, negative)
/// score pairs.
pub fn bpr_batch_loss(score_pairs: &[(f64, f64)], params: &ModelParams, reg_weight: f64) -> f64 {
    let data: f64 = score_pairs.iter().map(|&(p, n)| neg_log_sigmoid(p - n)).sum();
    data + reg_weight * params.l2_norm_sq()
}

/// A training example: scholar node, cited paper and uncited paper, as
/// indices into the scholar node index and corpus paper order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Triple {
    pub scholar: usize,
    pub positive: usize,
    pub negative: usize,
}

/// Train-positive pairs in index form, ready for triple sampling.
#[derive(Debug, Clone)]
pub struct TrainingPairs {
    pairs: Vec<(usize, usize)>,
    positives: Vec<HashSet<usize>>,
    n_papers: usize,
}

impl TrainingPairs {
    pub fn new(split: &SplitSpec, corpus: &CorpusStore, nodes: &NodeIndex) -> Result<Self> {
        let n_papers = corpus.num_papers();
        let mut positives = vec![HashSet::new(); nodes.len()];
        let mut pairs = Vec::new();
        for (scholar, papers) in &split.train_positives {
            let i = nodes.position(scholar)?;
            for p in papers {
                let j = corpus
                    .paper_index(p)
                    .ok_or_else(|| Error::lookup("paper", p.as_str()))?;
                positives[i].insert(j);
                pairs.push((i, j));
            }
            if !papers.is_empty() && positives[i].len() >= n_papers {
                return Err(Error::InsufficientCandidates {
                    scholar: scholar.clone(),
                    needed: 1,
                    available: 0,
                });
            }
        }
        if pairs.is_empty() {
            return Err(Error::EmptySplit);
        }
        Ok(TrainingPairs { pairs, positives, n_papers })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn is_positive(&self, scholar: usize, paper: usize) -> bool {
        self.positives[scholar].contains(&paper)
    }

    /// `batch_size` triples: pairs uniform over train positives, negatives
    /// uniform over the scholar's non-positive papers.
    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Vec<Triple>> {
        if batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        Ok((0..batch_size)
            .map(|_| {
                let (scholar, positive) = self.pairs[rng.random_range(0..self.pairs.len())];
                let negative = loop {
                    let k = rng.random_range(0..self.n_papers);
                    if !self.positives[scholar].contains(&k) {
                        break k;
                    }
                };
                Triple { scholar, positive, negative }
            })
            .collect())
    }
}

/// Convenience wrapper over [`TrainingPairs::sample`].
pub fn sample_triples<R: Rng + ?Sized>(
    split: &SplitSpec,
    corpus: &CorpusStore,
    nodes: &NodeIndex,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<Triple>> {
    TrainingPairs::new(split, corpus, nodes)?.sample(batch_size, rng)
}
