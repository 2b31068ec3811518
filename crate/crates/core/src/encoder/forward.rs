use super::params::{AttentionParams, ChannelParams, EdgeAttentionParams, EncoderParams};
use super::{EncoderConfig, EncoderInputs, InfluenceMode, NeighborSample};
use crate::error::{Error, Result};
use crate::hetnet::RelationGraph;
use crate::influence::InfluenceTable;
use crate::numeric::{dot, leaky_relu, softmax_vec, Dense};

/// Negative slope of the edge-attention LeakyReLU.
pub const LEAKY_SLOPE: f64 = 0.2;

/// Source of the neighbour weights `M_ij` for one layer.
#[derive(Debug, Clone, Copy)]
pub enum Mixing<'a> {
    Uniform,
    Gravity(&'a InfluenceTable),
    Attention(&'a EdgeAttentionParams),
}

#[derive(Debug, Clone)]
pub(crate) struct SampledEdge {
    pub neighbor: usize,
    /// Position of `neighbor` in the adjacency list of the source node.
    pub position: usize,
    /// `1 / (|SN_i| sqrt(|AN_i|) sqrt(|AN_j|))`
    pub norm: f64,
    /// `M_ij * norm`
    pub coef: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct EdgeAttentionCache {
    /// `P h_i` for every node.
    pub projected: Dense,
    /// Pre-activation logits aligned with adjacency lists.
    pub logits: Vec<Vec<f64>>,
    /// Softmax over each adjacency list.
    pub mix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub(crate) struct LayerCache {
    pub input: Dense,
    pub edges: Vec<Vec<SampledEdge>>,
    pub agg_pre: Dense,
    pub concat: Dense,
    pub pre: Dense,
    pub attention: Option<EdgeAttentionCache>,
}

fn edge_attention_forward(
    graph: &RelationGraph,
    params: &EdgeAttentionParams,
    input: &Dense,
) -> Result<EdgeAttentionCache> {
    let d = input.cols();
    if params.projection.shape() != (d, d) || params.attention.shape() != (1, 2 * d) {
        return Err(Error::Dimension(format!(
            "edge attention expects {d}x{d} projection and 1x{} vector, got {:?} and {:?}",
            2 * d,
            params.projection.shape(),
            params.attention.shape()
        )));
    }
    let projected = input.matmul(&params.projection.transpose())?;
    let (a_src, a_dst) = params.attention.row(0).split_at(d);
    let src: Vec<f64> = (0..input.rows()).map(|i| dot(projected.row(i), a_src)).collect();
    let dst: Vec<f64> = (0..input.rows()).map(|i| dot(projected.row(i), a_dst)).collect();
    let mut logits = Vec::with_capacity(graph.num_nodes());
    let mut mix = Vec::with_capacity(graph.num_nodes());
    for i in 0..graph.num_nodes() {
        let row: Vec<f64> = graph.neighbor_indices(i).iter().map(|&j| src[i] + dst[j]).collect();
        let activated: Vec<f64> = row.iter().map(|&x| leaky_relu(x, LEAKY_SLOPE)).collect();
        mix.push(softmax_vec(&activated));
        logits.push(row);
    }
    Ok(EdgeAttentionCache { projected, logits, mix })
}

fn sampled_edges(
    graph: &RelationGraph,
    mixing: &Mixing<'_>,
    attention: Option<&EdgeAttentionCache>,
    sample: &[Vec<usize>],
) -> Result<Vec<Vec<SampledEdge>>> {
    if sample.len() != graph.num_nodes() {
        return Err(Error::Dimension(format!(
            "neighbour sample covers {} nodes, graph has {}",
            sample.len(),
            graph.num_nodes()
        )));
    }
    let mut out = Vec::with_capacity(graph.num_nodes());
    for (i, picked) in sample.iter().enumerate() {
        let adjacency = graph.neighbor_indices(i);
        let deg_i = adjacency.len() as f64;
        let mut edges = Vec::with_capacity(picked.len());
        for &j in picked {
            let position = adjacency.binary_search(&j).map_err(|_| {
                Error::Domain(format!("sampled node {j} is not a neighbour of {i}"))
            })?;
            let m = match mixing {
                Mixing::Uniform => 1.0,
                Mixing::Gravity(table) => table.coefficient_row(i)[position],
                Mixing::Attention(_) => attention.expect("attention cache").mix[i][position],
            };
            let norm = 1.0 / (picked.len() as f64 * deg_i.sqrt() * (graph.degree(j) as f64).sqrt());
            edges.push(SampledEdge { neighbor: j, position, norm, coef: m * norm });
        }
        out.push(edges);
    }
    Ok(out)
}

fn aggregate_edges(edges: &[Vec<SampledEdge>], input: &Dense) -> Dense {
    let mut z = Dense::zeros(input.rows(), input.cols());
    for (i, row_edges) in edges.iter().enumerate() {
        let zi = z.row_mut(i);
        for e in row_edges {
            for (acc, &h) in zi.iter_mut().zip(input.row(e.neighbor)) {
                *acc += e.coef * h;
            }
        }
    }
    z
}

fn edge_cache(graph: &RelationGraph, mixing: &Mixing<'_>, input: &Dense) -> Result<Option<EdgeAttentionCache>> {
    match mixing {
        Mixing::Attention(p) => Ok(Some(edge_attention_forward(graph, p, input)?)),
        _ => Ok(None),
    }
}

/// Aggregated neighbour vectors for every node:
/// `ReLU((1/|SN_i|) * sum_j M_ij / (sqrt|AN_i| sqrt|AN_j|) * u_j)`.
/// Nodes with an empty sample get the zero vector.
pub fn aggregate_all(
    graph: &RelationGraph,
    mixing: Mixing<'_>,
    sampled: &[Vec<usize>],
    prev: &Dense,
) -> Result<Dense> {
    check_rows(graph, prev)?;
    let attention = edge_cache(graph, &mixing, prev)?;
    let edges = sampled_edges(graph, &mixing, attention.as_ref(), sampled)?;
    Ok(aggregate_edges(&edges, prev).relu())
}

/// Aggregated neighbour vector of a single node; `sampled` lists neighbour indices.
pub fn aggregate(
    graph: &RelationGraph,
    mixing: Mixing<'_>,
    node: usize,
    sampled: &[usize],
    prev: &Dense,
) -> Result<Vec<f64>> {
    if node >= graph.num_nodes() {
        return Err(Error::lookup("node", node.to_string()));
    }
    let mut lists = vec![Vec::new(); graph.num_nodes()];
    lists[node] = sampled.to_vec();
    Ok(aggregate_all(graph, mixing, &lists, prev)?.row(node).to_vec())
}

fn check_rows(graph: &RelationGraph, m: &Dense) -> Result<()> {
    if m.rows() != graph.num_nodes() {
        return Err(Error::Dimension(format!(
            "embedding table has {} rows, graph has {} nodes",
            m.rows(),
            graph.num_nodes()
        )));
    }
    Ok(())
}

pub(crate) fn layer_forward_cached(
    graph: &RelationGraph,
    mixing: Mixing<'_>,
    weight: &Dense,
    sample: &[Vec<usize>],
    input: Dense,
) -> Result<(Dense, LayerCache)> {
    check_rows(graph, &input)?;
    let d = input.cols();
    if weight.cols() != 2 * d {
        return Err(Error::Dimension(format!(
            "layer weight {:?} cannot take a {}-wide concatenation",
            weight.shape(),
            2 * d
        )));
    }
    let attention = edge_cache(graph, &mixing, &input)?;
    let edges = sampled_edges(graph, &mixing, attention.as_ref(), sample)?;
    let agg_pre = aggregate_edges(&edges, &input);
    let concat = Dense::concat_cols(&[&input, &agg_pre.relu()])?;
    let pre = concat.matmul(&weight.transpose())?;
    let out = pre.relu();
    Ok((out, LayerCache { input, edges, agg_pre, concat, pre, attention }))
}

/// `u_i^(l) = ReLU(W^(l) [u_i^(l-1) ; AGG(SN_i)])` for every node.
pub fn layer_forward(
    graph: &RelationGraph,
    mixing: Mixing<'_>,
    weight: &Dense,
    sample: &[Vec<usize>],
    prev: &Dense,
) -> Result<Dense> {
    Ok(layer_forward_cached(graph, mixing, weight, sample, prev.clone())?.0)
}

fn mixing_for<'a>(
    mode: InfluenceMode,
    table: &'a InfluenceTable,
    params: &'a ChannelParams,
    layer: usize,
) -> Result<Mixing<'a>> {
    Ok(match mode {
        InfluenceMode::Uniform => Mixing::Uniform,
        InfluenceMode::Gravity => Mixing::Gravity(table),
        InfluenceMode::Attention => Mixing::Attention(params.edge_attention.get(layer).ok_or_else(
            || Error::Dimension(format!("no edge attention parameters for layer {layer}")),
        )?),
    })
}

pub(crate) fn channel_forward_cached(
    graph: &RelationGraph,
    table: &InfluenceTable,
    mode: InfluenceMode,
    params: &ChannelParams,
    sample: &[Vec<Vec<usize>>],
) -> Result<(Dense, Vec<LayerCache>)> {
    if sample.len() != params.layers.len() {
        return Err(Error::Dimension(format!(
            "{} sampled layers for {} weight layers",
            sample.len(),
            params.layers.len()
        )));
    }
    let mut h = params.features.clone();
    let mut caches = Vec::with_capacity(params.layers.len());
    for (l, (weight, layer_sample)) in params.layers.iter().zip(sample).enumerate() {
        let mixing = mixing_for(mode, table, params, l)?;
        let (out, cache) = layer_forward_cached(graph, mixing, weight, layer_sample, h)?;
        caches.push(cache);
        h = out;
    }
    Ok((h, caches))
}

/// Stacked layers of one channel over one graph; `sample` is indexed `[layer][node]`.
pub fn channel_forward(
    graph: &RelationGraph,
    table: &InfluenceTable,
    mode: InfluenceMode,
    params: &ChannelParams,
    sample: &[Vec<Vec<usize>>],
) -> Result<Dense> {
    Ok(channel_forward_cached(graph, table, mode, params, sample)?.0)
}

fn shared_forward_cached(
    inputs: EncoderInputs<'_>,
    shared: &ChannelParams,
    mode: InfluenceMode,
    sample: &NeighborSample,
) -> Result<(Vec<Dense>, Dense, Vec<Vec<LayerCache>>)> {
    let graphs = inputs.network.graphs();
    let n = shared.features.rows();
    if graphs.iter().any(|g| g.num_nodes() != n) {
        return Err(Error::Domain(
            "interdependent channel: graphs do not share the feature table's node universe".into(),
        ));
    }
    let mut per_graph = Vec::with_capacity(graphs.len());
    let mut caches = Vec::with_capacity(graphs.len());
    for (r, (graph, table)) in graphs.iter().zip(inputs.tables).enumerate() {
        let (u, c) = channel_forward_cached(graph, table, mode, shared, sample.graph(r))?;
        per_graph.push(u);
        caches.push(c);
    }
    let mut mean = Dense::zeros_like(&per_graph[0]);
    for u in &per_graph {
        mean.add_assign(u)?;
    }
    mean.scale(1.0 / per_graph.len() as f64);
    Ok((per_graph, mean, caches))
}

/// Runs the shared weight stack over every graph; returns the per-graph
/// outputs and their mean.
pub fn interdependent_forward(
    inputs: EncoderInputs<'_>,
    shared: &ChannelParams,
    mode: InfluenceMode,
    sample: &NeighborSample,
) -> Result<(Vec<Dense>, Dense)> {
    let (per_graph, mean, _) = shared_forward_cached(inputs, shared, mode, sample)?;
    Ok((per_graph, mean))
}

pub(crate) fn attention_fuse_cached(
    channels: &[&Dense],
    params: &AttentionParams,
) -> Result<(Dense, Dense, Vec<Dense>)> {
    let first = channels
        .first()
        .ok_or_else(|| Error::Dimension("attention fusion needs at least one channel".into()))?;
    let (n, d) = first.shape();
    if channels.iter().any(|c| c.shape() != (n, d)) {
        return Err(Error::Dimension("channel embeddings differ in shape".into()));
    }
    let d_att = params.weight.rows();
    if params.weight.cols() != d || params.bias.shape() != (d_att, 1) || params.query.shape() != (d_att, 1) {
        return Err(Error::Dimension(format!(
            "fusion attention expects {d_att}x{d} weight with {d_att}-vectors, got {:?}/{:?}/{:?}",
            params.weight.shape(),
            params.bias.shape(),
            params.query.shape()
        )));
    }
    let wt = params.weight.transpose();
    let mut hidden = Vec::with_capacity(channels.len());
    let mut scores = Dense::zeros(n, channels.len());
    for (c, u) in channels.iter().enumerate() {
        let mut h = u.matmul(&wt)?;
        for i in 0..n {
            for (v, b) in h.row_mut(i).iter_mut().zip(params.bias.as_slice()) {
                *v = (*v + b).tanh();
            }
            scores.set(i, c, dot(h.row(i), params.query.as_slice()));
        }
        hidden.push(h);
    }
    let mut alpha = Dense::zeros(n, channels.len());
    let mut fused = Dense::zeros(n, d);
    for i in 0..n {
        let a = softmax_vec(scores.row(i));
        for (c, (&w, u)) in a.iter().zip(channels).enumerate() {
            alpha.set(i, c, w);
            for (f, &x) in fused.row_mut(i).iter_mut().zip(u.row(i)) {
                *f += w * x;
            }
        }
    }
    Ok((fused, alpha, hidden))
}

/// Per-node softmax attention over channel embeddings. Returns the fused
/// embeddings and the `n x channels` weight matrix.
pub fn attention_fuse(channels: &[&Dense], params: &AttentionParams) -> Result<(Dense, Dense)> {
    let (fused, alpha, _) = attention_fuse_cached(channels, params)?;
    Ok((fused, alpha))
}

/// All intermediate scholar embeddings of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ScholarEmbeddings {
    /// One per relation graph.
    pub independent: Vec<Dense>,
    /// Shared-stack output per relation graph; empty without the interdependent channel.
    pub interdependent_per_graph: Vec<Dense>,
    /// Mean of `interdependent_per_graph`.
    pub interdependent: Option<Dense>,
    /// Final fused embeddings.
    pub fused: Dense,
    /// `n x channels` attention weights; the interdependent channel is last.
    pub attention_weights: Dense,
}

#[derive(Debug, Clone)]
pub(crate) struct EncoderCache {
    pub independent: Vec<Vec<LayerCache>>,
    pub shared: Vec<Vec<LayerCache>>,
    pub fusion_hidden: Vec<Dense>,
}

fn check_params(
    inputs: &EncoderInputs<'_>,
    params: &EncoderParams,
    config: &EncoderConfig,
    sample: &NeighborSample,
) -> Result<()> {
    config.validate()?;
    let k = inputs.network.num_relations();
    let n = inputs.network.num_nodes();
    if params.channels.len() != k {
        return Err(Error::Dimension(format!(
            "{} channel parameter sets for {k} relations",
            params.channels.len()
        )));
    }
    if params.shared.is_some() != config.use_interdependent {
        return Err(Error::Config(
            "interdependent parameters do not match use_interdependent".into(),
        ));
    }
    let channel_ok = |c: &ChannelParams| {
        c.features.shape() == (n, config.dim)
            && c.layers.len() == config.layers
            && c.layers.iter().all(|w| w.shape() == (config.dim, 2 * config.dim))
    };
    if !params.channels.iter().chain(params.shared.as_ref()).all(channel_ok) {
        return Err(Error::Dimension(format!(
            "channel parameters do not match {n} nodes, dim {} and {} layers",
            config.dim, config.layers
        )));
    }
    if sample.num_graphs() != k {
        return Err(Error::Dimension(format!(
            "neighbour sample has {} graphs, network has {k}",
            sample.num_graphs()
        )));
    }
    Ok(())
}

pub(crate) fn encode_cached(
    inputs: EncoderInputs<'_>,
    params: &EncoderParams,
    config: &EncoderConfig,
    sample: &NeighborSample,
) -> Result<(ScholarEmbeddings, EncoderCache)> {
    check_params(&inputs, params, config, sample)?;
    let mode = config.influence_mode;
    let mut independent = Vec::with_capacity(params.channels.len());
    let mut independent_caches = Vec::with_capacity(params.channels.len());
    for (r, ((graph, table), channel)) in inputs
        .network
        .graphs()
        .iter()
        .zip(inputs.tables)
        .zip(&params.channels)
        .enumerate()
    {
        let (u, c) = channel_forward_cached(graph, table, mode, channel, sample.graph(r))?;
        independent.push(u);
        independent_caches.push(c);
    }

    let (interdependent_per_graph, interdependent, shared_caches) = match &params.shared {
        Some(shared) => {
            let (per, mean, caches) = shared_forward_cached(inputs, shared, mode, sample)?;
            (per, Some(mean), caches)
        }
        None => (Vec::new(), None, Vec::new()),
    };

    let mut channels: Vec<&Dense> = independent.iter().collect();
    channels.extend(interdependent.as_ref());
    let (fused, attention_weights, fusion_hidden) = attention_fuse_cached(&channels, &params.attention)?;

    Ok((
        ScholarEmbeddings {
            independent,
            interdependent_per_graph,
            interdependent,
            fused,
            attention_weights,
        },
        EncoderCache {
            independent: independent_caches,
            shared: shared_caches,
            fusion_hidden,
        },
    ))
}

/// Full encoder forward pass for a fixed neighbour sample.
pub fn encode(
    inputs: EncoderInputs<'_>,
    params: &EncoderParams,
    config: &EncoderConfig,
    sample: &NeighborSample,
) -> Result<ScholarEmbeddings> {
    Ok(encode_cached(inputs, params, config, sample)?.0)
}
