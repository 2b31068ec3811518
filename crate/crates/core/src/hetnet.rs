//! Scholar relation graphs built from a corpus, plus neighbour access and
//! fixed-size neighbour sampling.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusStore;
use crate::error::{Error, Result};

/// Kind of scholar-to-scholar relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    Collaboration,
    CoTopic,
    CoVenue,
    CoOrg,
}

impl RelationKind {
    pub const DEFAULT: [RelationKind; 3] =
        [RelationKind::Collaboration, RelationKind::CoTopic, RelationKind::CoVenue];

    pub const ALL: [RelationKind; 4] = [
        RelationKind::Collaboration,
        RelationKind::CoTopic,
        RelationKind::CoVenue,
        RelationKind::CoOrg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::Collaboration => "collaboration",
            RelationKind::CoTopic => "co_topic",
            RelationKind::CoVenue => "co_venue",
            RelationKind::CoOrg => "co_org",
        }
    }

    /// Default minimum co-occurrence: three shared keywords for co-topic, one otherwise.
    pub fn default_min_shared(self) -> u32 {
        match self {
            RelationKind::CoTopic => 3,
            _ => 1,
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "collaboration" | "col" => Ok(RelationKind::Collaboration),
            "co_topic" | "cotopic" | "topic" => Ok(RelationKind::CoTopic),
            "co_venue" | "covenue" | "venue" => Ok(RelationKind::CoVenue),
            "co_org" | "coorg" | "org" => Ok(RelationKind::CoOrg),
            other => Err(Error::Config(format!("unknown relation `{other}`"))),
        }
    }
}

/// Shared scholar index: node position to scholar id and back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeIndex {
    ids: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl NodeIndex {
    pub fn new(ids: Vec<String>) -> Self {
        let lookup = ids.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        NodeIndex { ids, lookup }
    }

    pub fn from_corpus(corpus: &CorpusStore) -> Self {
        NodeIndex::new(corpus.scholar_ids().map(str::to_string).collect())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, node: usize) -> &str {
        &self.ids[node]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn position(&self, id: &str) -> Result<usize> {
        self.lookup
            .get(id)
            .copied()
            .ok_or_else(|| Error::lookup("scholar", id))
    }
}

/// Undirected single-relation scholar graph with co-occurrence weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationGraph {
    kind: RelationKind,
    nodes: Arc<NodeIndex>,
    /// Sorted neighbour lists.
    adjacency: Vec<Vec<usize>>,
    /// Co-occurrence weights aligned with `adjacency`.
    weights: Vec<Vec<u32>>,
}

impl RelationGraph {
    /// Builds a graph from canonical `(a, b)` pairs with `a < b`.
    pub fn from_edges(
        kind: RelationKind,
        nodes: Arc<NodeIndex>,
        edges: &BTreeMap<(usize, usize), u32>,
    ) -> Result<Self> {
        let n = nodes.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut weights = vec![Vec::new(); n];
        for (&(a, b), &w) in edges {
            if a == b {
                return Err(Error::Domain(format!("self-loop on node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::Domain(format!("edge ({a}, {b}) outside {n} nodes")));
            }
            if w == 0 {
                return Err(Error::Domain(format!("edge ({a}, {b}) has zero weight")));
            }
            adjacency[a].push(b);
            weights[a].push(w);
            adjacency[b].push(a);
            weights[b].push(w);
        }
        for (adj, ws) in adjacency.iter_mut().zip(weights.iter_mut()) {
            let mut pairs: Vec<_> = adj.iter().copied().zip(ws.iter().copied()).collect();
            pairs.sort_unstable();
            *adj = pairs.iter().map(|p| p.0).collect();
            *ws = pairs.iter().map(|p| p.1).collect();
        }
        Ok(RelationGraph { kind, nodes, adjacency, weights })
    }

    pub fn kind(&self) -> RelationKind {
        self.kind
    }

    pub fn nodes(&self) -> &Arc<NodeIndex> {
        &self.nodes
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    /// Neighbour positions of `node`, sorted ascending.
    pub fn neighbor_indices(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    /// Co-occurrence weights aligned with [`neighbor_indices`](Self::neighbor_indices).
    pub fn neighbor_weights(&self, node: usize) -> &[u32] {
        &self.weights[node]
    }

    /// Co-occurrence weight of edge `(i, j)`, if present.
    pub fn weight(&self, i: usize, j: usize) -> Option<u32> {
        let pos = self.adjacency.get(i)?.binary_search(&j).ok()?;
        Some(self.weights[i][pos])
    }

    /// Canonical edge map `(a, b) -> weight` with `a < b`.
    pub fn edges(&self) -> BTreeMap<(usize, usize), u32> {
        let mut out = BTreeMap::new();
        for (a, (adj, ws)) in self.adjacency.iter().zip(&self.weights).enumerate() {
            for (&b, &w) in adj.iter().zip(ws) {
                if a < b {
                    out.insert((a, b), w);
                }
            }
        }
        out
    }

    /// Neighbour ids of the scholar `node`.
    pub fn neighbors(&self, node: &str) -> Result<BTreeSet<&str>> {
        let i = self.nodes.position(node)?;
        Ok(self.adjacency[i].iter().map(|&j| self.nodes.id(j)).collect())
    }

    /// Uniform sample of at most `s` neighbour ids, without replacement.
    pub fn sample_neighbors<R: Rng + ?Sized>(
        &self,
        node: &str,
        s: usize,
        rng: &mut R,
    ) -> Result<Vec<&str>> {
        let i = self.nodes.position(node)?;
        Ok(self
            .sample_neighbor_indices(i, s, rng)
            .into_iter()
            .map(|j| self.nodes.id(j))
            .collect())
    }

    /// Index form of [`sample_neighbors`](Self::sample_neighbors); the result is sorted.
    pub fn sample_neighbor_indices<R: Rng + ?Sized>(
        &self,
        node: usize,
        s: usize,
        rng: &mut R,
    ) -> Vec<usize> {
        let adj = &self.adjacency[node];
        if adj.len() <= s {
            return adj.clone();
        }
        let mut picks = rand::seq::index::sample(rng, adj.len(), s).into_vec();
        picks.sort_unstable();
        picks.into_iter().map(|p| adj[p]).collect()
    }

    /// Writes `<kind> <scholar_a> <scholar_b> <co_occurrence>` lines, sorted.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        let mut lines: Vec<String> = self
            .edges()
            .into_iter()
            .map(|((a, b), w)| {
                let (x, y) = (self.nodes.id(a), self.nodes.id(b));
                let (x, y) = if x <= y { (x, y) } else { (y, x) };
                format!("{} {x} {y} {w}", self.kind)
            })
            .collect();
        lines.sort();
        for l in lines {
            writeln!(out, "{l}")?;
        }
        Ok(())
    }
}

fn fold(s: &str) -> String {
    s.trim().to_lowercase()
}

/// Per-scholar attribute sets used for the co-occurrence relations.
fn attribute_sets(corpus: &CorpusStore, kind: RelationKind) -> Vec<BTreeSet<String>> {
    corpus
        .scholars()
        .iter()
        .map(|(scholar, papers)| {
            let mut set = BTreeSet::new();
            for p in papers.iter().filter_map(|id| corpus.paper(id)) {
                match kind {
                    RelationKind::CoTopic => set.extend(p.keywords.iter().map(|k| fold(k))),
                    RelationKind::CoVenue => {
                        set.insert(fold(&p.venue));
                    }
                    RelationKind::CoOrg => set.extend(
                        p.authors
                            .iter()
                            .filter(|a| &a.id == scholar)
                            .filter_map(|a| a.org.as_deref())
                            .map(fold),
                    ),
                    RelationKind::Collaboration => unreachable!("not attribute based"),
                }
            }
            set.remove("");
            set
        })
        .collect()
}

/// Extracts the single-relation graph of `kind`, keeping edges whose
/// co-occurrence count is at least `min_shared`.
///
/// Collaboration counts co-authored papers. The other kinds count distinct
/// shared keywords, venues or organisations over each scholar's authored
/// papers, compared after case-folding and trimming.
pub fn extract_relation(
    corpus: &CorpusStore,
    kind: RelationKind,
    min_shared: u32,
) -> Result<RelationGraph> {
    if min_shared == 0 {
        return Err(Error::Config("min_shared must be at least 1".into()));
    }
    let nodes = Arc::new(NodeIndex::from_corpus(corpus));
    let mut counts: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    match kind {
        RelationKind::Collaboration => {
            for paper in corpus.papers().values() {
                let mut authors: Vec<usize> = paper
                    .author_ids()
                    .map(|a| nodes.position(a))
                    .collect::<Result<_>>()?;
                authors.sort_unstable();
                authors.dedup();
                for (x, &a) in authors.iter().enumerate() {
                    for &b in &authors[x + 1..] {
                        *counts.entry((a, b)).or_default() += 1;
                    }
                }
            }
        }
        _ => {
            let sets = attribute_sets(corpus, kind);
            let mut postings: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (node, set) in sets.iter().enumerate() {
                for attr in set {
                    postings.entry(attr).or_default().push(node);
                }
            }
            for members in postings.values() {
                for (x, &a) in members.iter().enumerate() {
                    for &b in &members[x + 1..] {
                        *counts.entry((a, b)).or_default() += 1;
                    }
                }
            }
        }
    }
    counts.retain(|_, w| *w >= min_shared);
    RelationGraph::from_edges(kind, nodes, &counts)
}

/// Relation graphs over one shared scholar universe.
#[derive(Debug, Clone, PartialEq)]
pub struct HeterogeneousNetwork {
    graphs: Vec<RelationGraph>,
}

impl HeterogeneousNetwork {
    /// At least two graphs over an identical node universe are required.
    pub fn new(graphs: Vec<RelationGraph>) -> Result<Self> {
        if graphs.len() < 2 {
            return Err(Error::Config(format!(
                "a heterogeneous network needs at least two relations, got {}",
                graphs.len()
            )));
        }
        let first = graphs[0].nodes.clone();
        if graphs.iter().any(|g| *g.nodes != *first) {
            return Err(Error::Domain("relation graphs use different node universes".into()));
        }
        Ok(HeterogeneousNetwork { graphs })
    }

    /// Extracts each relation with its default threshold (three keywords for co-topic).
    pub fn build(corpus: &CorpusStore, relations: &[RelationKind]) -> Result<Self> {
        let graphs = relations
            .iter()
            .map(|&k| extract_relation(corpus, k, k.default_min_shared()))
            .collect::<Result<_>>()?;
        Self::new(graphs)
    }

    pub fn graphs(&self) -> &[RelationGraph] {
        &self.graphs
    }

    pub fn graph(&self, kind: RelationKind) -> Option<&RelationGraph> {
        self.graphs.iter().find(|g| g.kind == kind)
    }

    pub fn num_relations(&self) -> usize {
        self.graphs.len()
    }

    pub fn nodes(&self) -> &Arc<NodeIndex> {
        &self.graphs[0].nodes
    }

    pub fn num_nodes(&self) -> usize {
        self.graphs[0].num_nodes()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Author, PaperRecord};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn paper(id: &str, authors: &[&str], kws: &[&str], venue: &str) -> PaperRecord {
        PaperRecord {
            paper_id: id.into(),
            title: id.into(),
            abstract_text: None,
            year: 2020,
            venue: venue.into(),
            keywords: kws.iter().map(|k| k.to_string()).collect(),
            authors: authors
                .iter()
                .map(|a| Author { id: a.to_string(), name: String::new(), org: None })
                .collect(),
            references: vec![],
        }
    }

    #[test]
    fn co_topic_needs_three_keywords() {
        let c = CorpusStore::from_records(vec![
            paper("1", &["a"], &["x", "y", "z"], "v"),
            paper("2", &["b"], &["X", "y ", "z"], "w"),
            paper("3", &["c"], &["x", "y"], "u"),
        ])
        .unwrap();
        let g = extract_relation(&c, RelationKind::CoTopic, 3).unwrap();
        assert_eq!(g.weight(0, 1), Some(3));
        assert_eq!(g.weight(0, 2), None);
        assert_eq!(g.weight(1, 2), None);
    }

    #[test]
    fn collaboration_counts_coauthored_papers() {
        let c = CorpusStore::from_records(vec![
            paper("1", &["a", "b"], &[], "v"),
            paper("2", &["b", "a", "c"], &[], "v"),
            paper("3", &["d"], &[], "v"),
        ])
        .unwrap();
        let g = extract_relation(&c, RelationKind::Collaboration, 1).unwrap();
        assert_eq!(g.weight(0, 1), Some(2));
        assert_eq!(g.weight(1, 2), Some(1));
        assert!(g.neighbors("d").unwrap().is_empty());
        assert!(matches!(g.neighbors("zz"), Err(Error::Lookup { .. })));
    }

    #[test]
    fn path_graph_neighbors() {
        let nodes = Arc::new(NodeIndex::new(vec!["a".into(), "b".into(), "c".into()]));
        let edges = BTreeMap::from([((0, 1), 1), ((1, 2), 1)]);
        let g = RelationGraph::from_edges(RelationKind::Collaboration, nodes, &edges).unwrap();
        assert_eq!(g.neighbors("b").unwrap(), BTreeSet::from(["a", "c"]));
        assert!(g.neighbors("a").unwrap().contains("b"));
        assert!(g.neighbors("c").unwrap().contains("b"));
    }

    #[test]
    fn sampling_contract() {
        let n = 101;
        let nodes = Arc::new(NodeIndex::new((0..n).map(|i| format!("n{i}")).collect()));
        let edges: BTreeMap<_, _> = (1..n).map(|j| ((0, j), 1)).collect();
        let g = RelationGraph::from_edges(RelationKind::CoVenue, nodes, &edges).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = g.sample_neighbors("n0", 10, &mut rng).unwrap();
        assert_eq!(s.len(), 10);
        assert_eq!(s.iter().collect::<BTreeSet<_>>().len(), 10);

        let few = g.sample_neighbors("n5", 10, &mut rng).unwrap();
        assert_eq!(few, vec!["n0"]);

        let a = g.sample_neighbors("n0", 10, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = g.sample_neighbors("n0", 10, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(g.sample_neighbors("nope", 3, &mut rng).is_err());
    }

    #[test]
    fn rejects_self_loops_and_single_relation_networks() {
        let nodes = Arc::new(NodeIndex::new(vec!["a".into()]));
        let edges = BTreeMap::from([((0, 0), 1)]);
        assert!(RelationGraph::from_edges(RelationKind::CoOrg, nodes.clone(), &edges).is_err());
        let g = RelationGraph::from_edges(RelationKind::CoOrg, nodes, &BTreeMap::new()).unwrap();
        assert!(HeterogeneousNetwork::new(vec![g]).is_err());
    }

    #[test]
    fn dump_is_sorted() {
        let c = CorpusStore::from_records(vec![
            paper("1", &["b", "a"], &[], "v"),
            paper("2", &["c", "a"], &[], "v"),
        ])
        .unwrap();
        let g = extract_relation(&c, RelationKind::Collaboration, 1).unwrap();
        let mut out = Vec::new();
        g.write_dump(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "collaboration a b 1\ncollaboration a c 1\n");
    }

    #[test]
    fn relation_names_round_trip() {
        for k in [
            RelationKind::Collaboration,
            RelationKind::CoTopic,
            RelationKind::CoVenue,
            RelationKind::CoOrg,
        ] {
            assert_eq!(k.as_str().parse::<RelationKind>().unwrap(), k);
        }
        assert!("citation".parse::<RelationKind>().is_err());
    }
}
