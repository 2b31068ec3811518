use log::{debug, info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{BatchObjective, ModelCheckpoint, ModelParams, TrainConfig, TrainingPairs};
use crate::content::{train_pvdbow, DocVectors};
use crate::corpus::{CorpusStore, SplitSpec};
use crate::encoder::{encode, EncoderInputs, NeighborSample};
use crate::error::{Error, Result};
use crate::hetnet::{HeterogeneousNetwork, RelationKind};
use crate::influence::{build_table_with_distance, node_masses, InfluenceTable};
use crate::numeric::{derive_seed, AdamState};

const INIT_STREAM: u64 = 1;
const SAMPLE_STREAM: u64 = 2;
const TRIPLE_STREAM: u64 = 3;

/// Influence tables for every graph of `network`, index-aligned.
pub(crate) fn influence_tables(
    corpus: &CorpusStore,
    network: &HeterogeneousNetwork,
    config: &TrainConfig,
) -> Result<Vec<InfluenceTable>> {
    let masses = node_masses(corpus, network.nodes())?;
    let collaboration = network.graph(RelationKind::Collaboration);
    network
        .graphs()
        .iter()
        .map(|g| {
            build_table_with_distance(
                g,
                &masses,
                config.gravitational_constant,
                config.distance_source,
                collaboration,
            )
        })
        .collect()
}

/// Trains with content vectors computed from `corpus`.
pub fn train(
    corpus: &CorpusStore,
    network: &HeterogeneousNetwork,
    split: &SplitSpec,
    config: &TrainConfig,
) -> Result<ModelCheckpoint> {
    train_with(corpus, network, split, config, None, |_, _| {})
}

/// Full training run. `doc_vectors` overrides the content stage when given;
/// `on_epoch` receives each epoch index (from 1) and its mean batch loss.
pub fn train_with(
    corpus: &CorpusStore,
    network: &HeterogeneousNetwork,
    split: &SplitSpec,
    config: &TrainConfig,
    doc_vectors: Option<DocVectors>,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<ModelCheckpoint> {
    config.validate()?;
    if network.nodes().ids().iter().map(String::as_str).ne(corpus.scholar_ids()) {
        return Err(Error::Dimension(
            "network nodes do not match corpus scholars".into(),
        ));
    }
    let content = if config.use_content {
        let vectors = match doc_vectors {
            Some(v) => v,
            None => train_pvdbow(corpus, &config.content)?.vectors,
        };
        if vectors.dim() != config.paper_dim()
            || vectors.paper_ids().iter().map(String::as_str).ne(corpus.paper_ids())
        {
            return Err(Error::Dimension(format!(
                "content vectors must be {}-wide and follow corpus paper order",
                config.paper_dim()
            )));
        }
        Some(vectors.matrix().clone())
    } else {
        None
    };

    let tables = influence_tables(corpus, network, config)?;
    let inputs = EncoderInputs::new(network, &tables)?;
    let pairs = TrainingPairs::new(split, corpus, network.nodes())?;

    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[INIT_STREAM]));
    let mut params = ModelParams::init(
        config,
        network.num_nodes(),
        network.num_relations(),
        corpus.num_papers(),
        &mut init_rng,
    );
    let mut adam: Vec<AdamState> = params.tensors().iter().map(|(_, t)| AdamState::new(t)).collect();
    let mut triple_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[TRIPLE_STREAM]));
    let steps = pairs.len().div_ceil(config.batch_size);
    info!(
        "training on {} pairs, {} steps per epoch, {} epochs",
        pairs.len(),
        steps,
        config.epochs
    );

    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let sample = NeighborSample::draw(
            network,
            &config.encoder.sample_sizes,
            derive_seed(config.seed, &[SAMPLE_STREAM, epoch as u64]),
        );
        let objective = BatchObjective {
            inputs,
            encoder: &config.encoder,
            sample: &sample,
            content: content.as_ref(),
            reg_weight: config.reg_weight,
        };
        let mut total = 0.0;
        for _ in 0..steps {
            let triples = pairs.sample(config.batch_size, &mut triple_rng)?;
            let (loss, grads) = objective.loss_and_gradient(&params, &triples)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            for (((_, p), (_, g)), state) in params.tensors_mut().into_iter().zip(grads.tensors()).zip(&mut adam) {
                state.step(p, g, config.learning_rate)?;
            }
            total += loss;
        }
        let mean = total / steps as f64;
        if !params.is_finite() {
            return Err(Error::Divergence { epoch, loss: f64::NAN });
        }
        debug!("epoch {epoch}: loss {mean}");
        on_epoch(epoch, mean);
        epoch_losses.push(mean);
    }

    // Inference uses every neighbour instead of a random sample.
    let full = NeighborSample::full(network, config.encoder.layers);
    let embeddings = encode(inputs, &params.encoder, &config.encoder, &full)?;
    ModelCheckpoint::new(
        config.clone(),
        network.graphs().iter().map(|g| g.kind()).collect(),
        corpus,
        split,
        params,
        content,
        embeddings.fused,
        epoch_losses,
    )
}
