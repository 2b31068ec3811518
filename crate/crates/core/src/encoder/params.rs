use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{EncoderConfig, InfluenceMode};
use crate::numeric::{xavier_init, Dense};

/// Parameter groups reported by the gradient checker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamGroup {
    NodeFeatures,
    ChannelWeights,
    SharedWeights,
    EdgeAttention,
    FusionAttention,
    Alignment,
    PaperEmbeddings,
}

impl ParamGroup {
    pub const ALL: [ParamGroup; 7] = [
        ParamGroup::ChannelWeights,
        ParamGroup::SharedWeights,
        ParamGroup::FusionAttention,
        ParamGroup::Alignment,
        ParamGroup::NodeFeatures,
        ParamGroup::EdgeAttention,
        ParamGroup::PaperEmbeddings,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ParamGroup::NodeFeatures => "node_features",
            ParamGroup::ChannelWeights => "channel_weights",
            ParamGroup::SharedWeights => "shared_weights",
            ParamGroup::EdgeAttention => "edge_attention",
            ParamGroup::FusionAttention => "fusion_attention",
            ParamGroup::Alignment => "alignment",
            ParamGroup::PaperEmbeddings => "paper_embeddings",
        }
    }
}

impl fmt::Display for ParamGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ParamGroup {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        ParamGroup::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| crate::Error::Config(format!("unknown parameter group `{s}`")))
    }
}

/// Single-head edge attention: `e_ij = LeakyReLU(a^T [P u_i ; P u_j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeAttentionParams {
    /// `P`, `d x d`.
    pub projection: Dense,
    /// `a`, stored as a `1 x 2d` row.
    pub attention: Dense,
}

/// Node features and layer stack of one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Initial node embeddings `u^(0)`, `n x d`.
    pub features: Dense,
    /// `W^(l)`, each `d x 2d`.
    pub layers: Vec<Dense>,
    /// One entry per layer in attention mode, empty otherwise.
    pub edge_attention: Vec<EdgeAttentionParams>,
}

/// The interdependent channel has the same shape; one instance is shared
/// across all relation graphs.
pub type SharedChannelParams = ChannelParams;

/// Channel-fusion attention: `w_i^c = q^T tanh(W u_i^c + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionParams {
    pub weight: Dense,
    pub bias: Dense,
    pub query: Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub channels: Vec<ChannelParams>,
    pub shared: Option<SharedChannelParams>,
    pub attention: AttentionParams,
}

impl ChannelParams {
    fn init<R: Rng + ?Sized>(config: &EncoderConfig, n_nodes: usize, rng: &mut R) -> Self {
        let d = config.dim;
        let features = xavier_init(n_nodes.max(1), d, rng);
        let layers = (0..config.layers).map(|_| xavier_init(d, 2 * d, rng)).collect();
        let edge_attention = if config.influence_mode == InfluenceMode::Attention {
            (0..config.layers)
                .map(|_| EdgeAttentionParams {
                    projection: xavier_init(d, d, rng),
                    attention: xavier_init(1, 2 * d, rng),
                })
                .collect()
        } else {
            Vec::new()
        };
        ChannelParams { features, layers, edge_attention }
    }

    fn zeros_like(&self) -> Self {
        ChannelParams {
            features: Dense::zeros_like(&self.features),
            layers: self.layers.iter().map(Dense::zeros_like).collect(),
            edge_attention: self
                .edge_attention
                .iter()
                .map(|e| EdgeAttentionParams {
                    projection: Dense::zeros_like(&e.projection),
                    attention: Dense::zeros_like(&e.attention),
                })
                .collect(),
        }
    }

    fn tensors<'a>(&'a self, weights: ParamGroup, out: &mut Vec<(ParamGroup, &'a Dense)>) {
        out.push((ParamGroup::NodeFeatures, &self.features));
        out.extend(self.layers.iter().map(|w| (weights, w)));
        for e in &self.edge_attention {
            out.push((ParamGroup::EdgeAttention, &e.projection));
            out.push((ParamGroup::EdgeAttention, &e.attention));
        }
    }

    fn tensors_mut<'a>(&'a mut self, weights: ParamGroup, out: &mut Vec<(ParamGroup, &'a mut Dense)>) {
        out.push((ParamGroup::NodeFeatures, &mut self.features));
        out.extend(self.layers.iter_mut().map(|w| (weights, w)));
        for e in &mut self.edge_attention {
            out.push((ParamGroup::EdgeAttention, &mut e.projection));
            out.push((ParamGroup::EdgeAttention, &mut e.attention));
        }
    }
}

impl EncoderParams {
    /// Xavier-initialised parameters for `n_relations` graphs over `n_nodes`
    /// scholars. The fusion bias starts at zero.
    pub fn init<R: Rng + ?Sized>(
        config: &EncoderConfig,
        n_nodes: usize,
        n_relations: usize,
        rng: &mut R,
    ) -> Self {
        let channels = (0..n_relations)
            .map(|_| ChannelParams::init(config, n_nodes, rng))
            .collect();
        let shared = config
            .use_interdependent
            .then(|| ChannelParams::init(config, n_nodes, rng));
        let attention = AttentionParams {
            weight: xavier_init(config.attention_dim, config.dim, rng),
            bias: Dense::zeros(config.attention_dim, 1),
            query: xavier_init(config.attention_dim, 1, rng),
        };
        EncoderParams { channels, shared, attention }
    }

    pub fn zeros_like(&self) -> Self {
        EncoderParams {
            channels: self.channels.iter().map(ChannelParams::zeros_like).collect(),
            shared: self.shared.as_ref().map(ChannelParams::zeros_like),
            attention: AttentionParams {
                weight: Dense::zeros_like(&self.attention.weight),
                bias: Dense::zeros_like(&self.attention.bias),
                query: Dense::zeros_like(&self.attention.query),
            },
        }
    }

    /// Every trainable tensor with its group, in a fixed order.
    pub fn tensors(&self) -> Vec<(ParamGroup, &Dense)> {
        let mut out = Vec::new();
        for c in &self.channels {
            c.tensors(ParamGroup::ChannelWeights, &mut out);
        }
        if let Some(s) = &self.shared {
            s.tensors(ParamGroup::SharedWeights, &mut out);
        }
        out.push((ParamGroup::FusionAttention, &self.attention.weight));
        out.push((ParamGroup::FusionAttention, &self.attention.bias));
        out.push((ParamGroup::FusionAttention, &self.attention.query));
        out
    }

    /// Mutable counterpart of [`tensors`](Self::tensors), same order.
    pub fn tensors_mut(&mut self) -> Vec<(ParamGroup, &mut Dense)> {
        let mut out = Vec::new();
        for c in &mut self.channels {
            c.tensors_mut(ParamGroup::ChannelWeights, &mut out);
        }
        if let Some(s) = &mut self.shared {
            s.tensors_mut(ParamGroup::SharedWeights, &mut out);
        }
        out.push((ParamGroup::FusionAttention, &mut self.attention.weight));
        out.push((ParamGroup::FusionAttention, &mut self.attention.bias));
        out.push((ParamGroup::FusionAttention, &mut self.attention.query));
        out
    }
}
