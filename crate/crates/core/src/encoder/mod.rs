//! Mutual-influence-aware multi-channel scholar encoder.
//!
//! Each relation graph gets an independent channel (own node features and
//! layer weights). A second, interdependent channel runs one shared weight
//! stack over every relation graph and averages the per-graph outputs. A
//! per-node attention over all channel outputs produces the fused scholar
//! embedding.
//!
//! Every layer follows the same recipe: neighbours are sampled, their
//! previous-layer vectors are aggregated with weight
//! `M_ij / (|SN_i| * sqrt(|AN_i|) * sqrt(|AN_j|))` followed by ReLU, and the
//! result is concatenated with the node's own vector and passed through a
//! ReLU dense layer. `M_ij` comes from the influence table (gravity mode), is
//! fixed to 1 (uniform mode) or is a learned single-head edge attention.

mod backward;
mod forward;
mod params;
mod sampling;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use forward::{
    aggregate, aggregate_all, attention_fuse, channel_forward, encode, interdependent_forward,
    layer_forward, Mixing, ScholarEmbeddings, LEAKY_SLOPE,
};
pub(crate) use forward::encode_cached;
pub(crate) use backward::encode_backward;
pub use params::{
    AttentionParams, ChannelParams, EdgeAttentionParams, EncoderParams, ParamGroup,
    SharedChannelParams,
};
pub use sampling::NeighborSample;

use crate::error::{Error, Result};
use crate::hetnet::HeterogeneousNetwork;
use crate::influence::InfluenceTable;

/// How neighbour contributions are weighted during aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfluenceMode {
    /// Softmax-normalised gravity influence.
    #[default]
    Gravity,
    /// `M_ij = 1`: plain symmetric normalisation.
    Uniform,
    /// Learned single-head edge attention.
    Attention,
}

impl InfluenceMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InfluenceMode::Gravity => "gravity",
            InfluenceMode::Uniform => "uniform",
            InfluenceMode::Attention => "attention",
        }
    }
}

impl fmt::Display for InfluenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InfluenceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gravity" => Ok(InfluenceMode::Gravity),
            "uniform" => Ok(InfluenceMode::Uniform),
            "attention" => Ok(InfluenceMode::Attention),
            other => Err(Error::Config(format!("unknown influence_mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub layers: usize,
    pub sample_sizes: Vec<usize>,
    pub dim: usize,
    pub attention_dim: usize,
    pub influence_mode: InfluenceMode,
    pub use_interdependent: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            layers: 2,
            sample_sizes: vec![10, 10],
            dim: 64,
            attention_dim: 64,
            influence_mode: InfluenceMode::Gravity,
            use_interdependent: true,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::Config("encoder needs at least one layer".into()));
        }
        if self.sample_sizes.len() != self.layers {
            return Err(Error::Config(format!(
                "{} sample sizes given for {} layers",
                self.sample_sizes.len(),
                self.layers
            )));
        }
        if self.sample_sizes.contains(&0) {
            return Err(Error::Config("sample sizes must be at least 1".into()));
        }
        if self.dim == 0 || self.attention_dim == 0 {
            return Err(Error::Config("embedding dimensions must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of fused channels: one per relation plus the interdependent one.
    pub fn num_channels(&self, relations: usize) -> usize {
        relations + usize::from(self.use_interdependent)
    }
}

/// Graphs and their precomputed influence tables, index-aligned.
#[derive(Debug, Clone, Copy)]
pub struct EncoderInputs<'a> {
    pub network: &'a HeterogeneousNetwork,
    pub tables: &'a [InfluenceTable],
}

impl<'a> EncoderInputs<'a> {
    pub fn new(network: &'a HeterogeneousNetwork, tables: &'a [InfluenceTable]) -> Result<Self> {
        if tables.len() != network.num_relations() {
            return Err(Error::Dimension(format!(
                "{} influence tables for {} relation graphs",
                tables.len(),
                network.num_relations()
            )));
        }
        for (g, t) in network.graphs().iter().zip(tables) {
            if g.kind() != t.kind() || g.num_nodes() != t.num_nodes() {
                return Err(Error::Dimension(format!(
                    "influence table for {} does not match graph {}",
                    t.kind(),
                    g.kind()
                )));
            }
        }
        Ok(EncoderInputs { network, tables })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let c = EncoderConfig::default();
        c.validate().unwrap();
        assert_eq!(c.num_channels(3), 4);
    }

    #[test]
    fn invalid_configs() {
        let mut c = EncoderConfig { sample_sizes: vec![5], ..Default::default() };
        assert!(c.validate().is_err());
        c.sample_sizes = vec![5, 0];
        assert!(c.validate().is_err());
        c = EncoderConfig { layers: 0, sample_sizes: vec![], ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn mode_names() {
        for m in [InfluenceMode::Gravity, InfluenceMode::Uniform, InfluenceMode::Attention] {
            assert_eq!(m.as_str().parse::<InfluenceMode>().unwrap(), m);
        }
        assert!("softmax".parse::<InfluenceMode>().is_err());
    }
}

#[cfg(test)]
mod op_tests;
