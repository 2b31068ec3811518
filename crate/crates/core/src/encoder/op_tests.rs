use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::hetnet::{NodeIndex, RelationGraph, RelationKind};
use crate::influence::build_table;
use crate::numeric::{finite_difference_gradient, xavier_init, Dense};

fn graph(kind: RelationKind, n: usize, edges: &[(usize, usize, u32)]) -> RelationGraph {
    let nodes = Arc::new(NodeIndex::new((0..n).map(|i| format!("s{i}")).collect()));
    let map: BTreeMap<_, _> = edges.iter().map(|&(a, b, w)| ((a, b), w)).collect();
    RelationGraph::from_edges(kind, nodes, &map).unwrap()
}

struct Fixture {
    network: HeterogeneousNetwork,
    tables: Vec<InfluenceTable>,
}

fn fixture() -> Fixture {
    let g1 = graph(
        RelationKind::Collaboration,
        6,
        &[(0, 1, 2), (0, 2, 1), (1, 2, 3), (2, 3, 1), (3, 4, 2), (4, 5, 1), (0, 5, 1)],
    );
    let g2 = graph(RelationKind::CoTopic, 6, &[(0, 3, 3), (1, 4, 4), (2, 5, 3), (0, 4, 5), (3, 5, 3)]);
    let g3 = graph(
        RelationKind::CoVenue,
        6,
        &[(0, 1, 1), (0, 2, 1), (0, 3, 2), (1, 2, 1), (4, 5, 2), (1, 5, 1)],
    );
    let masses = [3, 0, 1, 2, 1, 1];
    let tables = [&g1, &g2, &g3].iter().map(|g| build_table(g, &masses, 0.5).unwrap()).collect();
    Fixture { network: HeterogeneousNetwork::new(vec![g1, g2, g3]).unwrap(), tables }
}

fn small_config(mode: InfluenceMode, use_interdependent: bool) -> EncoderConfig {
    EncoderConfig {
        layers: 2,
        sample_sizes: vec![2, 2],
        dim: 4,
        attention_dim: 3,
        influence_mode: mode,
        use_interdependent,
    }
}

#[test]
fn aggregate_single_neighbour() {
    let g = graph(RelationKind::Collaboration, 2, &[(0, 1, 1)]);
    let prev = Dense::from_rows(&[vec![9.0, 9.0], vec![2.0, -2.0]]).unwrap();
    let out = aggregate(&g, Mixing::Uniform, 0, &[1], &prev).unwrap();
    assert_eq!(out, vec![2.0, 0.0]);
}

#[test]
fn aggregate_zero_inputs_and_isolated_nodes() {
    let g = graph(RelationKind::Collaboration, 3, &[(0, 1, 1)]);
    let prev = Dense::zeros(3, 4);
    assert_eq!(aggregate(&g, Mixing::Uniform, 0, &[1], &prev).unwrap(), vec![0.0; 4]);
    let prev = Dense::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
    assert_eq!(aggregate(&g, Mixing::Uniform, 2, &[], &prev).unwrap(), vec![0.0]);
    assert!(aggregate(&g, Mixing::Uniform, 2, &[0], &prev).is_err());
}

#[test]
fn aggregate_on_regular_graph() {
    // 4-cycle: every degree is 2
    let g = graph(RelationKind::CoVenue, 4, &[(0, 1, 1), (1, 2, 1), (2, 3, 1), (0, 3, 1)]);
    let u = vec![0.6, -0.4, 1.0];
    let prev = Dense::from_rows(&vec![u.clone(); 4]).unwrap();
    let out = aggregate(&g, Mixing::Uniform, 0, &[1, 3], &prev).unwrap();
    for (o, x) in out.iter().zip(&u) {
        assert!((o - (x / 2.0).max(0.0)).abs() < 1e-15);
    }
}

#[test]
fn layer_forward_examples() {
    let f = fixture();
    let g = &f.network.graphs()[0];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let prev = xavier_init(6, 3, &mut rng);
    let sample = NeighborSample::full(&f.network, 1);

    let zero = layer_forward(g, Mixing::Uniform, &Dense::zeros(3, 6), &sample.graph(0)[0], &prev).unwrap();
    assert_eq!(zero, Dense::zeros(6, 3));

    let mut self_only = Dense::zeros(3, 6);
    for i in 0..3 {
        self_only.set(i, i, 1.0);
    }
    let out = layer_forward(g, Mixing::Gravity(&f.tables[0]), &self_only, &sample.graph(0)[0], &prev).unwrap();
    assert_eq!(out, prev.relu());
    assert_eq!(out.shape(), (6, 3));
}

#[test]
fn single_layer_channel_is_one_layer_forward() {
    let f = fixture();
    let cfg = EncoderConfig { layers: 1, sample_sizes: vec![2], ..small_config(InfluenceMode::Gravity, true) };
    let p = EncoderParams::init(&cfg, 6, 3, &mut ChaCha8Rng::seed_from_u64(8));
    let sample = NeighborSample::draw(&f.network, &cfg.sample_sizes, 3);
    let g = &f.network.graphs()[1];
    let a = channel_forward(g, &f.tables[1], cfg.influence_mode, &p.channels[1], sample.graph(1)).unwrap();
    let b = layer_forward(
        g,
        Mixing::Gravity(&f.tables[1]),
        &p.channels[1].layers[0],
        &sample.graph(1)[0],
        &p.channels[1].features,
    )
    .unwrap();
    assert_eq!(a, b);
}

#[test]
fn channel_forward_is_deterministic_and_permutation_equivariant() {
    // 10-node graph; relabel nodes with a permutation and map the sample through it
    let edges = [(0, 1, 1), (0, 4, 2), (1, 2, 1), (2, 3, 3), (3, 9, 1), (4, 5, 1), (5, 6, 2), (6, 7, 1), (7, 8, 1), (8, 9, 2), (1, 7, 1), (2, 6, 1)];
    let masses = [4, 1, 0, 2, 5, 1, 3, 0, 2, 1];
    let perm = [3, 7, 0, 9, 2, 5, 8, 1, 6, 4];
    let g = graph(RelationKind::Collaboration, 10, &edges);
    let pe: Vec<_> = edges
        .iter()
        .map(|&(a, b, w)| (perm[a].min(perm[b]), perm[a].max(perm[b]), w))
        .collect();
    let pg = graph(RelationKind::Collaboration, 10, &pe);
    let mut pmass = [0; 10];
    for i in 0..10 {
        pmass[perm[i]] = masses[i];
    }
    let t = build_table(&g, &masses, 1.0).unwrap();
    let pt = build_table(&pg, &pmass, 1.0).unwrap();

    let cfg = small_config(InfluenceMode::Gravity, false);
    let params = EncoderParams::init(&cfg, 10, 1, &mut ChaCha8Rng::seed_from_u64(2));
    let ch = &params.channels[0];
    let mut pch = ch.clone();
    for i in 0..10 {
        pch.features.row_mut(perm[i]).copy_from_slice(ch.features.row(i));
    }

    let net = HeterogeneousNetwork::new(vec![g.clone(), g.clone()]).unwrap();
    let sample = NeighborSample::draw(&net, &cfg.sample_sizes, 11);
    let layers = sample.graph(0);
    let mut psample = vec![vec![Vec::new(); 10]; layers.len()];
    for (l, per_node) in layers.iter().enumerate() {
        for (i, list) in per_node.iter().enumerate() {
            let mut mapped: Vec<_> = list.iter().map(|&j| perm[j]).collect();
            mapped.sort_unstable();
            psample[l][perm[i]] = mapped;
        }
    }

    let u = channel_forward(&g, &t, cfg.influence_mode, ch, layers).unwrap();
    let again = channel_forward(&g, &t, cfg.influence_mode, ch, layers).unwrap();
    assert_eq!(u, again);
    let pu = channel_forward(&pg, &pt, cfg.influence_mode, &pch, &psample).unwrap();
    for i in 0..10 {
        for (a, b) in u.row(i).iter().zip(pu.row(perm[i])) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn interdependent_mean_cases() {
    let f = fixture();
    let cfg = small_config(InfluenceMode::Gravity, true);
    let p = EncoderParams::init(&cfg, 6, 3, &mut ChaCha8Rng::seed_from_u64(5));
    let shared = p.shared.as_ref().unwrap();

    let g = f.network.graphs()[0].clone();
    let t = f.tables[0].clone();
    let same = HeterogeneousNetwork::new(vec![g.clone(), g.clone(), g.clone()]).unwrap();
    let tables = vec![t.clone(), t.clone(), t.clone()];
    let s = NeighborSample::draw(&same, &cfg.sample_sizes, 1);
    let uniform_sample = NeighborSample::from_lists(vec![s.graph(0).to_vec(); 3]);
    let inputs = EncoderInputs::new(&same, &tables).unwrap();
    let (per, mean) = interdependent_forward(inputs, shared, cfg.influence_mode, &uniform_sample).unwrap();
    assert!(mean.max_abs_diff(&per[0]) < 1e-15);

    let inputs = EncoderInputs::new(&f.network, &f.tables).unwrap();
    let sample = NeighborSample::draw(&f.network, &cfg.sample_sizes, 2);
    let (per, mean) = interdependent_forward(inputs, shared, cfg.influence_mode, &sample).unwrap();
    let mut manual = per[0].clone();
    manual.add_assign(&per[1]).unwrap();
    manual.add_assign(&per[2]).unwrap();
    manual.scale(1.0 / 3.0);
    assert!(manual.max_abs_diff(&mean) < 1e-15);

    let bad = EncoderParams::init(&cfg, 5, 3, &mut ChaCha8Rng::seed_from_u64(5));
    assert!(interdependent_forward(inputs, bad.shared.as_ref().unwrap(), cfg.influence_mode, &sample).is_err());
}

#[test]
fn fusion_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cfg = small_config(InfluenceMode::Gravity, true);
    let mut p = EncoderParams::init(&cfg, 5, 3, &mut rng).attention;
    let chans: Vec<Dense> = (0..4).map(|_| xavier_init(5, 4, &mut rng)).collect();
    let refs: Vec<&Dense> = chans.iter().collect();

    let (_, alpha) = attention_fuse(&refs, &p).unwrap();
    for i in 0..5 {
        let s: f64 = alpha.row(i).iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(alpha.row(i).iter().all(|&a| a >= 0.0));
    }

    let same = [&chans[0]; 4];
    let (fused, _) = attention_fuse(&same, &p).unwrap();
    assert!(fused.max_abs_diff(&chans[0]) < 1e-15);

    p.query = Dense::zeros(3, 1);
    let (_, alpha) = attention_fuse(&refs, &p).unwrap();
    assert!(alpha.as_slice().iter().all(|&a| (a - 0.25).abs() < 1e-15));

    assert!(attention_fuse(&[&chans[0], &Dense::zeros(4, 4)], &p).is_err());
}

#[test]
fn encode_invariants_and_ablation_differences() {
    let f = fixture();
    let inputs = EncoderInputs::new(&f.network, &f.tables).unwrap();
    let sample = NeighborSample::full(&f.network, 2);

    let cfg = small_config(InfluenceMode::Gravity, true);
    let p = EncoderParams::init(&cfg, 6, 3, &mut ChaCha8Rng::seed_from_u64(21));
    let e = encode(inputs, &p, &cfg, &sample).unwrap();
    assert_eq!(e.attention_weights.shape(), (6, 4));
    for i in 0..6 {
        assert!((e.attention_weights.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    let uni = EncoderConfig { influence_mode: InfluenceMode::Uniform, ..cfg.clone() };
    let eu = encode(inputs, &p, &uni, &sample).unwrap();
    assert!(eu.fused.max_abs_diff(&e.fused) > 1e-9);

    let mut no_ic = EncoderConfig { use_interdependent: false, ..cfg.clone() };
    let mut p2 = p.clone();
    p2.shared = None;
    let en = encode(inputs, &p2, &no_ic, &sample).unwrap();
    assert!(en.fused.max_abs_diff(&e.fused) > 1e-9);
    assert_eq!(en.attention_weights.cols(), 3);
    no_ic.use_interdependent = true;
    assert!(encode(inputs, &p2, &no_ic, &sample).is_err());
}

#[test]
fn equal_factor_rows_are_mass_scale_invariant() {
    // star: centre 0 with leaves of equal mass and equal weights
    let g = graph(RelationKind::Collaboration, 4, &[(0, 1, 1), (0, 2, 1), (0, 3, 1)]);
    let a = build_table(&g, &[1, 2, 2, 2], 1.0).unwrap();
    let b = build_table(&g, &[3, 6, 6, 6], 1.0).unwrap();
    assert_eq!(a.coefficient_row(0), b.coefficient_row(0));
    let fa = a.factor_row(0);
    let fb = b.factor_row(0);
    for (x, y) in fa.iter().zip(fb) {
        assert!((y - 3.0 * x).abs() < 1e-12);
    }
}

fn loss_and_grad(
    f: &Fixture,
    cfg: &EncoderConfig,
    params: &EncoderParams,
    sample: &NeighborSample,
    weights: &Dense,
) -> (f64, EncoderParams) {
    let inputs = EncoderInputs::new(&f.network, &f.tables).unwrap();
    let (emb, cache) = encode_cached(inputs, params, cfg, sample).unwrap();
    let loss: f64 = emb.fused.as_slice().iter().zip(weights.as_slice()).map(|(a, b)| a * b).sum();
    let grads = encode_backward(inputs, params, cfg, &emb, &cache, weights).unwrap();
    (loss, grads)
}

fn check_encoder_gradient(mode: InfluenceMode, use_interdependent: bool, seed: u64) {
    let f = fixture();
    let cfg = small_config(mode, use_interdependent);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = EncoderParams::init(&cfg, 6, 3, &mut rng);
    let weights = xavier_init(6, cfg.dim, &mut rng);
    let sample = NeighborSample::draw(&f.network, &cfg.sample_sizes, seed);
    let (_, grads) = loss_and_grad(&f, &cfg, &params, &sample, &weights);

    let n_tensors = params.tensors().len();
    for t in 0..n_tensors {
        let mut work = params.clone();
        let mut flat = work.tensors()[t].1.as_slice().to_vec();
        let numeric = finite_difference_gradient(
            |x| {
                work.tensors_mut()[t].1.as_mut_slice().copy_from_slice(x);
                loss_and_grad(&f, &cfg, &work, &sample, &weights).0
            },
            &mut flat,
            1e-5,
        )
        .unwrap();
        let (group, analytic) = grads.tensors()[t];
        for (k, (a, n)) in analytic.as_slice().iter().zip(&numeric).enumerate() {
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
            assert!(rel <= 1e-4, "{mode} {group} tensor {t} entry {k}: analytic {a} numeric {n}");
        }
    }
}

#[test]
fn encoder_gradients_gravity() {
    check_encoder_gradient(InfluenceMode::Gravity, true, 1);
}

#[test]
fn encoder_gradients_uniform_without_interdependent() {
    check_encoder_gradient(InfluenceMode::Uniform, false, 2);
}

#[test]
fn encoder_gradients_attention() {
    check_encoder_gradient(InfluenceMode::Attention, true, 3);
}

#[test]
fn shared_gradient_is_sum_of_per_graph_contributions() {
    let f = fixture();
    let cfg = small_config(InfluenceMode::Gravity, true);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let params = EncoderParams::init(&cfg, 6, 3, &mut rng);
    let sample = NeighborSample::draw(&f.network, &cfg.sample_sizes, 6);
    let weights = xavier_init(6, cfg.dim, &mut rng);
    let inputs = EncoderInputs::new(&f.network, &f.tables).unwrap();
    let shared = params.shared.as_ref().unwrap();

    // loss = <weights, U'>: its gradient on W' is the sum over graphs of
    // <weights / k, U'^r> gradients, each checked numerically
    let total_loss = |w: &Dense| {
        let mut s = shared.clone();
        s.layers[0] = w.clone();
        let (_, mean) = interdependent_forward(inputs, &s, cfg.influence_mode, &sample).unwrap();
        mean.as_slice().iter().zip(weights.as_slice()).map(|(a, b)| a * b).sum::<f64>()
    };
    let per_graph_loss = |w: &Dense, r: usize| {
        let mut s = shared.clone();
        s.layers[0] = w.clone();
        let (per, _) = interdependent_forward(inputs, &s, cfg.influence_mode, &sample).unwrap();
        per[r].as_slice().iter().zip(weights.as_slice()).map(|(a, b)| a * b / 3.0).sum::<f64>()
    };
    let w0 = shared.layers[0].clone();
    let mut flat = w0.as_slice().to_vec();
    let total = finite_difference_gradient(
        |x| total_loss(&Dense::from_vec(w0.rows(), w0.cols(), x.to_vec()).unwrap()),
        &mut flat,
        1e-5,
    )
    .unwrap();
    let mut summed = vec![0.0; total.len()];
    for r in 0..3 {
        let g = finite_difference_gradient(
            |x| per_graph_loss(&Dense::from_vec(w0.rows(), w0.cols(), x.to_vec()).unwrap(), r),
            &mut flat,
            1e-5,
        )
        .unwrap();
        for (s, v) in summed.iter_mut().zip(g) {
            *s += v;
        }
    }
    for (a, b) in total.iter().zip(&summed) {
        assert!((a - b).abs() < 1e-8);
    }
}
