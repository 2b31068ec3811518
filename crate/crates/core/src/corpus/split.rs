use std::collections::BTreeSet;

use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::CorpusStore;
use crate::error::{Error, Result};
use crate::numeric::derive_seed;

/// Test negatives sampled per test positive.
pub const NEGATIVES_PER_POSITIVE: usize = 3;

/// Leave-one-out train/test partition of each scholar's cited papers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SplitSpec {
    pub train_positives: IndexMap<String, BTreeSet<String>>,
    pub test_positives: IndexMap<String, BTreeSet<String>>,
    pub test_negatives: IndexMap<String, Vec<String>>,
}

impl SplitSpec {
    /// Scholars with a test set, in corpus order.
    pub fn scholars(&self) -> impl Iterator<Item = &str> {
        self.test_positives.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.test_positives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.test_positives.is_empty()
    }

    /// Train and test positives of `scholar`.
    pub fn all_positives(&self, scholar: &str) -> BTreeSet<&str> {
        let train = self.train_positives.get(scholar).into_iter().flatten();
        let test = self.test_positives.get(scholar).into_iter().flatten();
        train.chain(test).map(String::as_str).collect()
    }

    /// Every (scholar, paper) training pair, scholars in split order and
    /// papers in id order.
    pub fn train_pairs(&self) -> Vec<(&str, &str)> {
        self.train_positives
            .iter()
            .flat_map(|(s, ps)| ps.iter().map(move |p| (s.as_str(), p.as_str())))
            .collect()
    }

    /// Test candidates of `scholar`: positives followed by negatives.
    pub fn test_candidates(&self, scholar: &str) -> Vec<&str> {
        let pos = self.test_positives.get(scholar).into_iter().flatten();
        let neg = self.test_negatives.get(scholar).into_iter().flatten();
        pos.chain(neg).map(String::as_str).collect()
    }
}

/// Builds the leave-one-out split.
///
/// A scholar is eligible with at least two authored papers that cite
/// in-corpus papers. The latest such paper (greatest year, ties broken by the
/// greatest paper id) supplies the test positives; the references of the
/// other papers, minus the test positives, are the training positives.
/// Negatives are drawn without replacement from papers the scholar never
/// cited, three per test positive.
pub fn leave_one_out_split(corpus: &CorpusStore, neg_seed: u64) -> Result<SplitSpec> {
    let mut split = SplitSpec::default();
    for (scholar_idx, (scholar, authored)) in corpus.scholars().iter().enumerate() {
        let bearing: Vec<_> = authored
            .iter()
            .filter_map(|id| corpus.paper(id))
            .map(|p| (p, corpus.in_corpus_references(p).collect::<BTreeSet<_>>()))
            .filter(|(_, refs)| !refs.is_empty())
            .collect();
        if bearing.len() < 2 {
            continue;
        }
        let (latest, test_refs) = bearing
            .iter()
            .max_by(|(a, _), (b, _)| a.year.cmp(&b.year).then_with(|| a.paper_id.cmp(&b.paper_id)))
            .expect("at least two papers");
        let test: BTreeSet<String> = test_refs.iter().map(|s| s.to_string()).collect();
        let train: BTreeSet<String> = bearing
            .iter()
            .filter(|(p, _)| p.paper_id != latest.paper_id)
            .flat_map(|(_, refs)| refs.iter())
            .filter(|r| !test.contains(**r))
            .map(|s| s.to_string())
            .collect();

        let candidates: Vec<&str> = corpus
            .paper_ids()
            .filter(|p| !test.contains(*p) && !train.contains(*p))
            .collect();
        let needed = NEGATIVES_PER_POSITIVE * test.len();
        if candidates.len() < needed {
            return Err(Error::InsufficientCandidates {
                scholar: scholar.clone(),
                needed,
                available: candidates.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(neg_seed, &[scholar_idx as u64]));
        let mut picks = rand::seq::index::sample(&mut rng, candidates.len(), needed).into_vec();
        picks.sort_unstable();
        let negatives = picks.into_iter().map(|i| candidates[i].to_string()).collect();

        split.train_positives.insert(scholar.clone(), train);
        split.test_positives.insert(scholar.clone(), test);
        split.test_negatives.insert(scholar.clone(), negatives);
    }
    Ok(split)
}
