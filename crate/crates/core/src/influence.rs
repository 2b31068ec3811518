//! Gravity-model academic influence and the softmax-normalised
//! mutual-influence coefficients used to weight neighbour aggregation.
//!
//! For an edge `(i, j)` with academic distance `r_ij` the gravity between two
//! scholars is `F_ij = G * m_i * m_j / r_ij^2`, where masses are in-corpus
//! citation counts. Dividing by the mass of the receiving scholar gives the
//! directed influence factor `g_ij = G * m_j / r_ij^2`, which is then
//! softmax-normalised over the full neighbourhood of `i`.

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusStore;
use crate::error::{Error, Result};
use crate::hetnet::{NodeIndex, RelationGraph, RelationKind};
use crate::numeric::softmax_vec;

/// Which edge count defines the academic distance `r_ij = 1 / count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceSource {
    /// Co-occurrence weight of the edge in its own relation graph.
    #[default]
    CoOccurrence,
    /// Collaboration count everywhere; pairs that never co-authored get `g = 0`.
    Collaboration,
}

impl DistanceSource {
    pub fn as_str(self) -> &'static str {
        match self {
            DistanceSource::CoOccurrence => "co_occurrence",
            DistanceSource::Collaboration => "collaboration",
        }
    }
}

impl FromStr for DistanceSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "co_occurrence" | "cooccurrence" => Ok(DistanceSource::CoOccurrence),
            "collaboration" => Ok(DistanceSource::Collaboration),
            other => Err(Error::Config(format!("unknown distance_source `{other}`"))),
        }
    }
}

/// `r_ij = 1 / co_occurrence(i, j)`.
pub fn academic_distance(graph: &RelationGraph, i: usize, j: usize) -> Result<f64> {
    graph
        .weight(i, j)
        .map(|w| 1.0 / f64::from(w))
        .ok_or_else(|| Error::lookup("edge", format!("{i}-{j}")))
}

/// `F_ij = G * m_i * m_j / r_ij^2`.
pub fn gravity_force(mass_i: u64, mass_j: u64, r_ij: f64, g_const: f64) -> Result<f64> {
    check_distance(r_ij)?;
    Ok(g_const * mass_i as f64 * mass_j as f64 / (r_ij * r_ij))
}

/// `g_ij = G * m_j / r_ij^2`: influence of scholar `j` on scholar `i`.
pub fn influence_factor(mass_j: u64, r_ij: f64, g_const: f64) -> Result<f64> {
    check_distance(r_ij)?;
    Ok(g_const * mass_j as f64 / (r_ij * r_ij))
}

fn check_distance(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("academic distance must be positive, got {r}")))
    }
}

/// Citation mass of every node, in node order.
pub fn node_masses(corpus: &CorpusStore, nodes: &NodeIndex) -> Result<Vec<u64>> {
    nodes
        .ids()
        .iter()
        .map(|id| corpus.mass_of(id).ok_or_else(|| Error::lookup("scholar", id.as_str())))
        .collect()
}

/// Directed influence factors and normalised coefficients of one graph,
/// stored row-wise in the graph's neighbour order.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceTable {
    kind: RelationKind,
    gravitational_constant: f64,
    factors: Vec<Vec<f64>>,
    coefficients: Vec<Vec<f64>>,
}

impl InfluenceTable {
    pub fn kind(&self) -> RelationKind {
        self.kind
    }

    pub fn gravitational_constant(&self) -> f64 {
        self.gravitational_constant
    }

    /// `g_i*` aligned with `graph.neighbor_indices(i)`.
    pub fn factor_row(&self, i: usize) -> &[f64] {
        &self.factors[i]
    }

    /// `M_i*` aligned with `graph.neighbor_indices(i)`.
    pub fn coefficient_row(&self, i: usize) -> &[f64] {
        &self.coefficients[i]
    }

    pub fn num_nodes(&self) -> usize {
        self.coefficients.len()
    }

    pub fn factor(&self, graph: &RelationGraph, i: usize, j: usize) -> Option<f64> {
        let pos = graph.neighbor_indices(i).binary_search(&j).ok()?;
        Some(self.factors[i][pos])
    }

    pub fn coefficient(&self, graph: &RelationGraph, i: usize, j: usize) -> Option<f64> {
        let pos = graph.neighbor_indices(i).binary_search(&j).ok()?;
        Some(self.coefficients[i][pos])
    }

    /// Writes `<kind> <i> <j> <g_ij> <M_ij>` for every directed edge.
    pub fn write_dump<W: Write>(&self, graph: &RelationGraph, mut out: W) -> Result<()> {
        let nodes = graph.nodes();
        for i in 0..graph.num_nodes() {
            for (pos, &j) in graph.neighbor_indices(i).iter().enumerate() {
                writeln!(
                    out,
                    "{} {} {} {} {}",
                    self.kind,
                    nodes.id(i),
                    nodes.id(j),
                    self.factors[i][pos],
                    self.coefficients[i][pos]
                )?;
            }
        }
        Ok(())
    }
}

/// Influence table using each edge's own co-occurrence as distance.
pub fn build_table(graph: &RelationGraph, masses: &[u64], g_const: f64) -> Result<InfluenceTable> {
    build_table_with_distance(graph, masses, g_const, DistanceSource::CoOccurrence, None)
}

/// Influence table with an explicit distance source. `collaboration` must be
/// supplied when `source` is [`DistanceSource::Collaboration`].
pub fn build_table_with_distance(
    graph: &RelationGraph,
    masses: &[u64],
    g_const: f64,
    source: DistanceSource,
    collaboration: Option<&RelationGraph>,
) -> Result<InfluenceTable> {
    if !(g_const > 0.0 && g_const.is_finite()) {
        return Err(Error::Config(format!(
            "gravitational constant must be positive, got {g_const}"
        )));
    }
    if masses.len() != graph.num_nodes() {
        return Err(Error::Dimension(format!(
            "{} masses for {} nodes",
            masses.len(),
            graph.num_nodes()
        )));
    }
    let collab = match source {
        DistanceSource::CoOccurrence => None,
        DistanceSource::Collaboration => Some(collaboration.ok_or_else(|| {
            Error::Config("collaboration distances need the collaboration graph".into())
        })?),
    };
    let mut factors = Vec::with_capacity(graph.num_nodes());
    let mut coefficients = Vec::with_capacity(graph.num_nodes());
    for i in 0..graph.num_nodes() {
        let row = graph
            .neighbor_indices(i)
            .iter()
            .map(|&j| {
                let r = match collab {
                    None => Some(academic_distance(graph, i, j)?),
                    Some(c) => c.weight(i, j).map(|w| 1.0 / f64::from(w)),
                };
                match r {
                    Some(r) => influence_factor(masses[j], r, g_const),
                    None => Ok(0.0),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        coefficients.push(softmax_vec(&row));
        factors.push(row);
    }
    Ok(InfluenceTable {
        kind: graph.kind(),
        gravitational_constant: g_const,
        factors,
        coefficients,
    })
}
