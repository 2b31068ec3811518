use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{align, ModelParams, TrainConfig};
use crate::corpus::{CorpusStore, SplitSpec};
use crate::error::{Error, Result};
use crate::hetnet::RelationKind;
use crate::numeric::{dot, Dense};

pub const CHECKPOINT_VERSION: &str = "miarec-ckpt-1";

/// A trained model: config snapshot, every parameter matrix, the frozen
/// content vectors and the inference-time scholar embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCheckpoint {
    pub version: String,
    pub config: TrainConfig,
    pub relations: Vec<RelationKind>,
    pub epochs_trained: usize,
    pub epoch_losses: Vec<f64>,
    pub scholar_ids: Vec<String>,
    pub paper_ids: Vec<String>,
    pub train_positives: IndexMap<String, Vec<String>>,
    pub params: ModelParams,
    pub content_vectors: Option<Dense>,
    pub scholar_embeddings: Dense,
}

impl ModelCheckpoint {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        config: TrainConfig,
        relations: Vec<RelationKind>,
        corpus: &CorpusStore,
        split: &SplitSpec,
        params: ModelParams,
        content_vectors: Option<Dense>,
        scholar_embeddings: Dense,
        epoch_losses: Vec<f64>,
    ) -> Result<Self> {
        let ckpt = ModelCheckpoint {
            version: CHECKPOINT_VERSION.to_string(),
            config,
            relations,
            epochs_trained: epoch_losses.len(),
            epoch_losses,
            scholar_ids: corpus.scholar_ids().map(str::to_string).collect(),
            paper_ids: corpus.paper_ids().map(str::to_string).collect(),
            train_positives: split
                .train_positives
                .iter()
                .map(|(s, ps)| (s.clone(), ps.iter().cloned().collect()))
                .collect(),
            params,
            content_vectors,
            scholar_embeddings,
        };
        ckpt.validate()?;
        Ok(ckpt)
    }

    /// Checks version, shapes and finiteness.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Checkpoint(m));
        if self.version != CHECKPOINT_VERSION {
            return bad(format!("unsupported version `{}`", self.version));
        }
        let (n, d) = self.scholar_embeddings.shape();
        if n != self.scholar_ids.len() {
            return bad(format!("{} embeddings for {} scholars", n, self.scholar_ids.len()));
        }
        let (dv, wd) = self.params.alignment.weight.shape();
        if wd != d || self.params.alignment.bias.shape() != (dv, 1) {
            return bad("alignment shapes do not match the embedding width".into());
        }
        let papers = match (&self.content_vectors, &self.params.paper_embeddings) {
            (Some(v), None) => v,
            (None, Some(p)) => p,
            _ => return bad("exactly one of content vectors and paper table must be present".into()),
        };
        if papers.shape() != (self.paper_ids.len(), dv) {
            return bad(format!(
                "paper matrix is {:?}, expected ({}, {dv})",
                papers.shape(),
                self.paper_ids.len()
            ));
        }
        if self.epochs_trained != self.epoch_losses.len() {
            return bad("epoch count does not match the loss history".into());
        }
        if !self.params.is_finite() || !self.scholar_embeddings.is_finite() || !papers.is_finite() {
            return bad("non-finite values".into());
        }
        Ok(())
    }

    /// Paper vectors used for scoring, in `paper_ids` order.
    pub fn paper_matrix(&self) -> &Dense {
        self.content_vectors
            .as_ref()
            .or(self.params.paper_embeddings.as_ref())
            .expect("validated checkpoint has a paper matrix")
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer(&mut out, self).map_err(|e| Error::Checkpoint(e.to_string()))?;
        writeln!(out)?;
        Ok(())
    }

    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let ckpt: ModelCheckpoint =
            serde_json::from_reader(reader).map_err(|e| Error::Checkpoint(e.to_string()))?;
        ckpt.validate()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?))
    }

    pub fn scorer(&self) -> Result<Scorer<'_>> {
        Scorer::new(self)
    }

    /// All papers except the scholar's train positives.
    pub fn default_candidates(&self, scholar: &str) -> Result<Vec<&str>> {
        if !self.scholar_ids.iter().any(|s| s == scholar) {
            return Err(Error::lookup("scholar", scholar));
        }
        let known: &[String] = self.train_positives.get(scholar).map_or(&[], Vec::as_slice);
        Ok(self
            .paper_ids
            .iter()
            .filter(|p| !known.contains(p))
            .map(String::as_str)
            .collect())
    }

    pub fn recommend_topk(&self, scholar: &str, candidates: &[&str], k: usize) -> Result<Vec<(String, f64)>> {
        self.scorer()?.recommend_topk(scholar, candidates, k)
    }
}

/// Read-only scoring view with aligned scholar vectors precomputed.
#[derive(Debug, Clone)]
pub struct Scorer<'a> {
    aligned: Dense,
    papers: &'a Dense,
    scholar_index: HashMap<&'a str, usize>,
    paper_index: HashMap<&'a str, usize>,
}

impl<'a> Scorer<'a> {
    fn new(ckpt: &'a ModelCheckpoint) -> Result<Self> {
        Ok(Scorer {
            aligned: align(&ckpt.scholar_embeddings, &ckpt.params.alignment)?,
            papers: ckpt.paper_matrix(),
            scholar_index: ckpt.scholar_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect(),
            paper_index: ckpt.paper_ids.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect(),
        })
    }

    pub fn aligned(&self, scholar: &str) -> Result<&[f64]> {
        let i = *self
            .scholar_index
            .get(scholar)
            .ok_or_else(|| Error::lookup("scholar", scholar))?;
        Ok(self.aligned.row(i))
    }

    pub fn score(&self, scholar: &str, paper: &str) -> Result<f64> {
        let a = self.aligned(scholar)?;
        let j = *self.paper_index.get(paper).ok_or_else(|| Error::lookup("paper", paper))?;
        Ok(dot(a, self.papers.row(j)))
    }

    /// Top `k` candidates by descending score, ties by ascending paper id.
    pub fn recommend_topk(&self, scholar: &str, candidates: &[&str], k: usize) -> Result<Vec<(String, f64)>> {
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        let a = self.aligned(scholar)?;
        let mut scored = candidates
            .iter()
            .map(|&p| {
                let j = *self.paper_index.get(p).ok_or_else(|| Error::lookup("paper", p))?;
                Ok((p, dot(a, self.papers.row(j))))
            })
            .collect::<Result<Vec<_>>>()?;
        rank(&mut scored);
        scored.truncate(k);
        Ok(scored.into_iter().map(|(p, s)| (p.to_string(), s)).collect())
    }
}

/// Sorts by score descending, then paper id ascending.
pub(crate) fn rank(scored: &mut [(&str, f64)]) {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
}
