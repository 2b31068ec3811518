//! Reverse pass through the encoder, mirroring `forward.rs` step by step.

use super::forward::{EncoderCache, LayerCache, ScholarEmbeddings, LEAKY_SLOPE};
use super::params::{AttentionParams, ChannelParams, EdgeAttentionParams, EncoderParams};
use super::{EncoderConfig, EncoderInputs};
use crate::error::{Error, Result};
use crate::hetnet::RelationGraph;
use crate::numeric::{dot, relu_grad, Dense};

fn edge_attention_backward(
    graph: &RelationGraph,
    params: &EdgeAttentionParams,
    cache: &LayerCache,
    d_agg_pre: &Dense,
    grads: &mut EdgeAttentionParams,
    d_input: &mut Dense,
) -> Result<()> {
    let att = cache.attention.as_ref().expect("attention cache present");
    let input = &cache.input;
    let n = input.rows();
    let d = input.cols();
    let mut d_src = vec![0.0; n];
    let mut d_dst = vec![0.0; n];
    for i in 0..n {
        let edges = &cache.edges[i];
        if edges.is_empty() {
            continue;
        }
        let adjacency = graph.neighbor_indices(i);
        let mut d_mix = vec![0.0; adjacency.len()];
        for e in edges {
            d_mix[e.position] += e.norm * dot(d_agg_pre.row(i), input.row(e.neighbor));
        }
        let mix = &att.mix[i];
        let weighted: f64 = mix.iter().zip(&d_mix).map(|(m, g)| m * g).sum();
        for (p, &j) in adjacency.iter().enumerate() {
            let d_logit_act = mix[p] * (d_mix[p] - weighted);
            let slope = if att.logits[i][p] > 0.0 { 1.0 } else { LEAKY_SLOPE };
            let d_logit = d_logit_act * slope;
            d_src[i] += d_logit;
            d_dst[j] += d_logit;
        }
    }

    let (a_src, a_dst) = params.attention.row(0).split_at(d);
    let mut d_projected = Dense::zeros(n, d);
    {
        let d_att = grads.attention.row_mut(0);
        for i in 0..n {
            let y = att.projected.row(i);
            for k in 0..d {
                d_att[k] += d_src[i] * y[k];
                d_att[d + k] += d_dst[i] * y[k];
            }
            for (k, v) in d_projected.row_mut(i).iter_mut().enumerate() {
                *v = d_src[i] * a_src[k] + d_dst[i] * a_dst[k];
            }
        }
    }
    // projected = input * P^T
    grads
        .projection
        .add_assign(&d_projected.transpose().matmul(input)?)?;
    d_input.add_assign(&d_projected.matmul(&params.projection)?)?;
    Ok(())
}

/// Backward through one layer; returns the gradient w.r.t. the layer input.
fn layer_backward(
    graph: &RelationGraph,
    weight: &Dense,
    edge_params: Option<&EdgeAttentionParams>,
    cache: &LayerCache,
    d_out: &Dense,
    d_weight: &mut Dense,
    d_edge: Option<&mut EdgeAttentionParams>,
) -> Result<Dense> {
    let (n, d) = cache.input.shape();
    let mut d_pre = d_out.clone();
    for (g, &p) in d_pre.as_mut_slice().iter_mut().zip(cache.pre.as_slice()) {
        *g *= relu_grad(p);
    }
    d_weight.add_assign(&d_pre.transpose().matmul(&cache.concat)?)?;
    let d_concat = d_pre.matmul(weight)?;

    let mut d_input = Dense::zeros(n, d);
    let mut d_agg_pre = Dense::zeros(n, d);
    for i in 0..n {
        let row = d_concat.row(i);
        d_input.row_mut(i).copy_from_slice(&row[..d]);
        for ((g, &up), &z) in d_agg_pre
            .row_mut(i)
            .iter_mut()
            .zip(&row[d..])
            .zip(cache.agg_pre.row(i))
        {
            *g = up * relu_grad(z);
        }
    }
    for i in 0..n {
        for e in &cache.edges[i] {
            let (src, dst) = (d_agg_pre.row(i).to_vec(), d_input.row_mut(e.neighbor));
            for (t, s) in dst.iter_mut().zip(src) {
                *t += e.coef * s;
            }
        }
    }
    match (cache.attention.is_some(), edge_params, d_edge) {
        (false, _, _) => {}
        (true, Some(p), Some(g)) => {
            edge_attention_backward(graph, p, cache, &d_agg_pre, g, &mut d_input)?
        }
        _ => return Err(Error::Dimension("edge attention parameters missing".into())),
    }
    Ok(d_input)
}

fn channel_backward(
    graph: &RelationGraph,
    params: &ChannelParams,
    caches: &[LayerCache],
    d_out: Dense,
    grads: &mut ChannelParams,
) -> Result<()> {
    let mut d = d_out;
    for l in (0..caches.len()).rev() {
        d = layer_backward(
            graph,
            &params.layers[l],
            params.edge_attention.get(l),
            &caches[l],
            &d,
            &mut grads.layers[l],
            grads.edge_attention.get_mut(l),
        )?;
    }
    grads.features.add_assign(&d)
}

fn fusion_backward(
    channels: &[&Dense],
    params: &AttentionParams,
    alpha: &Dense,
    hidden: &[Dense],
    d_fused: &Dense,
    grads: &mut AttentionParams,
) -> Vec<Dense> {
    let (n, _) = d_fused.shape();
    let mut d_channels: Vec<Dense> = channels.iter().map(|c| Dense::zeros_like(c)).collect();
    let q = params.query.as_slice();
    for i in 0..n {
        let du = d_fused.row(i);
        let a = alpha.row(i);
        let d_alpha: Vec<f64> = channels.iter().map(|u| dot(du, u.row(i))).collect();
        let weighted: f64 = a.iter().zip(&d_alpha).map(|(x, y)| x * y).sum();
        for (c, u) in channels.iter().enumerate() {
            let d_score = a[c] * (d_alpha[c] - weighted);
            let h = hidden[c].row(i);
            for (gq, &hv) in grads.query.as_mut_slice().iter_mut().zip(h) {
                *gq += d_score * hv;
            }
            let d_hidden_pre: Vec<f64> = h
                .iter()
                .zip(q)
                .map(|(&hv, &qv)| d_score * qv * (1.0 - hv * hv))
                .collect();
            grads.weight.add_outer(1.0, &d_hidden_pre, u.row(i));
            for (gb, &v) in grads.bias.as_mut_slice().iter_mut().zip(&d_hidden_pre) {
                *gb += v;
            }
            let back = params
                .weight
                .matvec_transposed(&d_hidden_pre)
                .expect("fusion weight shape checked in forward");
            for ((t, &b), &g) in d_channels[c].row_mut(i).iter_mut().zip(&back).zip(du) {
                *t += b + a[c] * g;
            }
        }
    }
    d_channels
}

/// Gradient of a scalar loss w.r.t. every encoder parameter, given the
/// gradient `d_fused` w.r.t. the fused embeddings.
pub(crate) fn encode_backward(
    inputs: EncoderInputs<'_>,
    params: &EncoderParams,
    config: &EncoderConfig,
    embeddings: &ScholarEmbeddings,
    cache: &EncoderCache,
    d_fused: &Dense,
) -> Result<EncoderParams> {
    if d_fused.shape() != embeddings.fused.shape() {
        return Err(Error::Dimension(format!(
            "fused gradient {:?} vs embeddings {:?}",
            d_fused.shape(),
            embeddings.fused.shape()
        )));
    }
    let mut grads = params.zeros_like();
    let mut channels: Vec<&Dense> = embeddings.independent.iter().collect();
    channels.extend(embeddings.interdependent.as_ref());
    let mut d_channels = fusion_backward(
        &channels,
        &params.attention,
        &embeddings.attention_weights,
        &cache.fusion_hidden,
        d_fused,
        &mut grads.attention,
    );

    let graphs = inputs.network.graphs();
    let d_shared = config.use_interdependent.then(|| d_channels.pop().expect("shared channel"));
    for (r, d) in d_channels.into_iter().enumerate() {
        channel_backward(&graphs[r], &params.channels[r], &cache.independent[r], d, &mut grads.channels[r])?;
    }
    if let (Some(mut d), Some(shared), Some(g)) = (d_shared, &params.shared, &mut grads.shared) {
        d.scale(1.0 / graphs.len() as f64);
        for (r, graph) in graphs.iter().enumerate() {
            channel_backward(graph, shared, &cache.shared[r], d.clone(), g)?;
        }
    }
    Ok(grads)
}
