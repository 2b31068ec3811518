use super::{align_pre, ModelParams, Triple};
use crate::encoder::{encode_backward, encode_cached, EncoderConfig, EncoderInputs, NeighborSample};
use crate::error::{Error, Result};
use crate::numeric::{dot, neg_log_sigmoid, sigmoid, Dense};

/// The BPR objective on one batch with a fixed neighbour sample.
#[derive(Debug, Clone, Copy)]
pub struct BatchObjective<'a> {
    pub inputs: EncoderInputs<'a>,
    pub encoder: &'a EncoderConfig,
    pub sample: &'a NeighborSample,
    /// Frozen content vectors in corpus paper order; `None` uses the
    /// trainable paper table of the parameters.
    pub content: Option<&'a Dense>,
    pub reg_weight: f64,
}

impl<'a> BatchObjective<'a> {
    fn papers<'p>(&'p self, params: &'p ModelParams) -> Result<&'p Dense> {
        let papers = match (self.content, &params.paper_embeddings) {
            (Some(v), _) => v,
            (None, Some(p)) => p,
            (None, None) => {
                return Err(Error::Dimension(
                    "no content vectors and no trainable paper table".into(),
                ))
            }
        };
        if papers.cols() != params.alignment.paper_dim() {
            return Err(Error::Dimension(format!(
                "paper vectors are {}-wide, alignment produces {}",
                papers.cols(),
                params.alignment.paper_dim()
            )));
        }
        Ok(papers)
    }

    fn check_triples(&self, papers: &Dense, triples: &[Triple]) -> Result<()> {
        let n = self.inputs.network.num_nodes();
        for t in triples {
            if t.scholar >= n || t.positive >= papers.rows() || t.negative >= papers.rows() {
                return Err(Error::Dimension(format!("triple {t:?} out of range")));
            }
        }
        Ok(())
    }

    fn data_term(aligned: &Dense, papers: &Dense, triples: &[Triple]) -> f64 {
        triples
            .iter()
            .map(|t| {
                let a = aligned.row(t.scholar);
                neg_log_sigmoid(dot(a, papers.row(t.positive)) - dot(a, papers.row(t.negative)))
            })
            .sum()
    }

    /// Batch loss `-sum log s(y_ij - y_ik) + lambda ||theta||^2`.
    pub fn loss(&self, params: &ModelParams, triples: &[Triple]) -> Result<f64> {
        let papers = self.papers(params)?;
        self.check_triples(papers, triples)?;
        let (emb, _) = encode_cached(self.inputs, &params.encoder, self.encoder, self.sample)?;
        let aligned = align_pre(&emb.fused, &params.alignment)?.relu();
        Ok(Self::data_term(&aligned, papers, triples) + self.reg_weight * params.l2_norm_sq())
    }

    /// Loss and its gradient with respect to every tensor of `params`.
    pub fn loss_and_gradient(&self, params: &ModelParams, triples: &[Triple]) -> Result<(f64, ModelParams)> {
        let papers = self.papers(params)?;
        self.check_triples(papers, triples)?;
        let (emb, cache) = encode_cached(self.inputs, &params.encoder, self.encoder, self.sample)?;
        let pre = align_pre(&emb.fused, &params.alignment)?;
        let aligned = pre.relu();
        let data_loss = Self::data_term(&aligned, papers, triples);

        let trainable_papers = self.content.is_none();
        let mut d_aligned = Dense::zeros_like(&aligned);
        let mut d_papers = trainable_papers.then(|| Dense::zeros_like(papers));
        for t in triples {
            let a = aligned.row(t.scholar);
            let (vj, vk) = (papers.row(t.positive), papers.row(t.negative));
            let g = -sigmoid(-(dot(a, vj) - dot(a, vk)));
            for ((acc, &pj), &pk) in d_aligned.row_mut(t.scholar).iter_mut().zip(vj).zip(vk) {
                *acc += g * (pj - pk);
            }
            if let Some(dp) = d_papers.as_mut() {
                for (acc, &x) in dp.row_mut(t.positive).iter_mut().zip(a) {
                    *acc += g * x;
                }
                for (acc, &x) in dp.row_mut(t.negative).iter_mut().zip(a) {
                    *acc -= g * x;
                }
            }
        }

        let mut d_pre = d_aligned;
        for (d, &p) in d_pre.as_mut_slice().iter_mut().zip(pre.as_slice()) {
            if p <= 0.0 {
                *d = 0.0;
            }
        }
        let mut grads = params.zeros_like();
        grads.alignment.weight = d_pre.transpose().matmul(&emb.fused)?;
        let bias = grads.alignment.bias.as_mut_slice();
        for i in 0..d_pre.rows() {
            for (b, &d) in bias.iter_mut().zip(d_pre.row(i)) {
                *b += d;
            }
        }
        let d_fused = d_pre.matmul(&params.alignment.weight)?;
        grads.encoder = encode_backward(self.inputs, &params.encoder, self.encoder, &emb, &cache, &d_fused)?;
        if let Some(dp) = d_papers {
            grads.paper_embeddings = Some(dp);
        }

        if self.reg_weight > 0.0 {
            for ((_, g), (_, p)) in grads.tensors_mut().into_iter().zip(params.tensors()) {
                g.add_scaled(2.0 * self.reg_weight, p)?;
            }
        }
        let loss = data_loss + self.reg_weight * params.l2_norm_sq();
        Ok((loss, grads))
    }
}
