//! Finite-difference verification of the end-to-end BPR gradient on a
//! frozen 6-scholar, 4-paper fixture.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::encoder::{EncoderConfig, EncoderInputs, InfluenceMode, NeighborSample, ParamGroup};
use crate::error::Result;
use crate::hetnet::{HeterogeneousNetwork, NodeIndex, RelationGraph, RelationKind};
use crate::influence::{build_table, InfluenceTable};
use crate::numeric::{finite_difference_gradient, Dense};
use crate::recommender::{BatchObjective, ModelParams, TrainConfig, Triple};

pub const DEFAULT_EPS: f64 = 1e-5;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

/// `|a - n| / max(|a|, |n|, 1e-6)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Three relation graphs over six scholars, four fixed paper vectors and a
/// six-triple micro-batch.
#[derive(Debug, Clone)]
pub struct GradcheckFixture {
    pub network: HeterogeneousNetwork,
    pub tables: Vec<InfluenceTable>,
    pub papers: Dense,
    pub triples: Vec<Triple>,
}

impl GradcheckFixture {
    pub fn new() -> Self {
        let nodes = Arc::new(NodeIndex::new((0..6).map(|i| format!("s{i}")).collect()));
        let graph = |kind, edges: &[(usize, usize, u32)]| {
            let map: BTreeMap<_, _> = edges.iter().map(|&(a, b, w)| ((a, b), w)).collect();
            RelationGraph::from_edges(kind, nodes.clone(), &map).expect("valid fixture graph")
        };
        let graphs = vec![
            graph(
                RelationKind::Collaboration,
                &[(0, 1, 2), (0, 2, 1), (1, 2, 3), (2, 3, 1), (3, 4, 2), (4, 5, 1), (0, 5, 1)],
            ),
            graph(RelationKind::CoTopic, &[(0, 3, 3), (1, 4, 4), (2, 5, 3), (0, 4, 5), (3, 5, 3)]),
            graph(
                RelationKind::CoVenue,
                &[(0, 1, 1), (0, 2, 1), (0, 3, 2), (1, 2, 1), (4, 5, 2), (1, 5, 1)],
            ),
        ];
        let masses = [3, 0, 1, 2, 1, 1];
        let tables = graphs
            .iter()
            .map(|g| build_table(g, &masses, 0.5).expect("valid fixture table"))
            .collect();
        let papers = Dense::from_rows(&[
            vec![0.9, -0.2, 0.4],
            vec![-0.3, 0.8, 0.1],
            vec![0.2, 0.3, -0.7],
            vec![0.5, 0.5, 0.6],
        ])
        .expect("rectangular");
        let t = |scholar, positive, negative| Triple { scholar, positive, negative };
        let triples = vec![t(0, 0, 1), t(1, 2, 3), t(2, 1, 0), t(3, 3, 2), t(4, 0, 2), t(5, 1, 3)];
        GradcheckFixture {
            network: HeterogeneousNetwork::new(graphs).expect("valid fixture network"),
            tables,
            papers,
            triples,
        }
    }
}

impl Default for GradcheckFixture {
    fn default() -> Self {
        Self::new()
    }
}

/// One fixture configuration to differentiate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckCase {
    pub influence_mode: InfluenceMode,
    pub use_interdependent: bool,
    pub use_content: bool,
}

impl GradcheckCase {
    /// Covers every parameter group: gravity with content, learned edge
    /// attention, and a trainable paper table.
    pub const DEFAULT_CASES: [GradcheckCase; 3] = [
        GradcheckCase { influence_mode: InfluenceMode::Gravity, use_interdependent: true, use_content: true },
        GradcheckCase { influence_mode: InfluenceMode::Attention, use_interdependent: true, use_content: true },
        GradcheckCase { influence_mode: InfluenceMode::Uniform, use_interdependent: true, use_content: false },
    ];
}

#[derive(Debug, Clone)]
pub struct GradcheckOptions {
    pub eps: f64,
    pub tolerance: f64,
    pub seed: u64,
    pub reg_weight: f64,
    pub cases: Vec<GradcheckCase>,
    /// Test hook: perturbs the analytic gradient of this group.
    pub corrupt: Option<ParamGroup>,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        GradcheckOptions {
            eps: DEFAULT_EPS,
            tolerance: DEFAULT_TOLERANCE,
            seed: 7,
            reg_weight: 0.01,
            cases: GradcheckCase::DEFAULT_CASES.to_vec(),
            corrupt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupResult {
    pub group: ParamGroup,
    pub entries: usize,
    pub max_rel_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub tolerance: f64,
    pub rows: Vec<GroupResult>,
}

impl GradcheckReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn row(&self, group: ParamGroup) -> Option<&GroupResult> {
        self.rows.iter().find(|r| r.group == group)
    }

    pub fn write_table<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "{self}")
    }
}

impl fmt::Display for GradcheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<18} {:>8} {:>14}  result", "group", "entries", "max_rel_err")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<18} {:>8} {:>14.3e}  {}",
                r.group.as_str(),
                r.entries,
                r.max_rel_error,
                if r.passed { "PASS" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

fn case_config(case: &GradcheckCase, reg_weight: f64) -> TrainConfig {
    let mut config = TrainConfig {
        reg_weight,
        use_content: case.use_content,
        encoder: EncoderConfig {
            layers: 2,
            sample_sizes: vec![3, 3],
            dim: 4,
            attention_dim: 3,
            influence_mode: case.influence_mode,
            use_interdependent: case.use_interdependent,
        },
        ..TrainConfig::default()
    };
    config.content.dim = 3;
    config
}

/// Compares analytic and central-difference gradients of the batch BPR
/// loss for every tensor, reporting the worst relative error per group.
pub fn run_gradcheck(fixture: &GradcheckFixture, options: &GradcheckOptions) -> Result<GradcheckReport> {
    let mut worst: BTreeMap<ParamGroup, (usize, f64)> = BTreeMap::new();
    for (c, case) in options.cases.iter().enumerate() {
        let config = case_config(case, options.reg_weight);
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed.wrapping_add(c as u64));
        let params = ModelParams::init(&config, 6, fixture.network.num_relations(), fixture.papers.rows(), &mut rng);
        let sample = NeighborSample::full(&fixture.network, config.encoder.layers);
        let objective = BatchObjective {
            inputs: EncoderInputs::new(&fixture.network, &fixture.tables)?,
            encoder: &config.encoder,
            sample: &sample,
            content: case.use_content.then_some(&fixture.papers),
            reg_weight: options.reg_weight,
        };
        let (_, mut grads) = objective.loss_and_gradient(&params, &fixture.triples)?;
        if let Some(bad) = options.corrupt {
            for (group, g) in grads.tensors_mut() {
                if group == bad {
                    g.as_mut_slice().iter_mut().for_each(|x| *x = *x * 1.5 + 1e-3);
                }
            }
        }

        let n_tensors = params.tensors().len();
        for t in 0..n_tensors {
            let mut work = params.clone();
            let mut flat = work.tensors()[t].1.as_slice().to_vec();
            let mut failure = None;
            let numeric = finite_difference_gradient(
                |x| {
                    work.tensors_mut()[t].1.as_mut_slice().copy_from_slice(x);
                    match objective.loss(&work, &fixture.triples) {
                        Ok(l) => l,
                        Err(e) => {
                            failure.get_or_insert(e);
                            f64::NAN
                        }
                    }
                },
                &mut flat,
                options.eps,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            let numeric = numeric?;
            let (group, analytic) = grads.tensors()[t];
            let err = analytic
                .as_slice()
                .iter()
                .zip(&numeric)
                .map(|(&a, &n)| relative_error(a, n))
                .fold(0.0, f64::max);
            let entry = worst.entry(group).or_insert((0, 0.0));
            entry.0 += numeric.len();
            entry.1 = entry.1.max(err);
        }
    }
    let rows = ParamGroup::ALL
        .into_iter()
        .filter_map(|g| {
            worst.get(&g).map(|&(entries, max_rel_error)| GroupResult {
                group: g,
                entries,
                max_rel_error,
                passed: max_rel_error <= options.tolerance,
            })
        })
        .collect();
    Ok(GradcheckReport { tolerance: options.tolerance, rows })
}
