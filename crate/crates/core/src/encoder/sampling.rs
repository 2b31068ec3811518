use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::hetnet::HeterogeneousNetwork;
use crate::numeric::derive_seed;

/// Sampled neighbour lists, indexed `[graph][layer][node]`, each sorted.
///
/// Every (graph, layer, node) triple draws from its own RNG stream so the
/// result does not depend on iteration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborSample {
    lists: Vec<Vec<Vec<Vec<usize>>>>,
}

impl NeighborSample {
    pub fn draw(network: &HeterogeneousNetwork, sample_sizes: &[usize], seed: u64) -> Self {
        let lists = network
            .graphs()
            .iter()
            .enumerate()
            .map(|(g, graph)| {
                sample_sizes
                    .iter()
                    .enumerate()
                    .map(|(l, &s)| {
                        (0..graph.num_nodes())
                            .map(|i| {
                                let stream = [g as u64, l as u64, i as u64];
                                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &stream));
                                graph.sample_neighbor_indices(i, s, &mut rng)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        NeighborSample { lists }
    }

    /// Every neighbour of every node, for each of `layers` layers.
    pub fn full(network: &HeterogeneousNetwork, layers: usize) -> Self {
        let lists = network
            .graphs()
            .iter()
            .map(|graph| {
                let all: Vec<Vec<usize>> = (0..graph.num_nodes())
                    .map(|i| graph.neighbor_indices(i).to_vec())
                    .collect();
                vec![all; layers]
            })
            .collect();
        NeighborSample { lists }
    }

    pub fn from_lists(lists: Vec<Vec<Vec<Vec<usize>>>>) -> Self {
        NeighborSample { lists }
    }

    /// Per-layer, per-node lists for graph `g`.
    pub fn graph(&self, g: usize) -> &[Vec<Vec<usize>>] {
        &self.lists[g]
    }

    pub fn num_graphs(&self) -> usize {
        self.lists.len()
    }
}
