use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Author, CorpusStore, PaperRecord};
use crate::error::{Error, Result};

const REFERENCE_DRAWS: usize = 8;
const KEYWORD_POOL: usize = 8;
const KEYWORDS_PER_PAPER: usize = 4;
const VENUES_PER_COMMUNITY: usize = 3;
const ORGS_PER_COMMUNITY: usize = 2;
const TOPIC_VOCAB: usize = 40;
const TITLE_TOPIC_WORDS: usize = 4;
const ABSTRACT_TOPIC_WORDS: usize = 20;
const ABSTRACT_GENERIC_WORDS: usize = 10;

const GENERIC_WORDS: &[&str] = &[
    "model", "approach", "analysis", "results", "method", "framework", "study", "data",
    "evaluation", "novel", "efficient", "learning", "system", "performance", "proposed",
    "experiments", "based", "towards", "improved", "robust",
];

/// Community index encoded in a synthetic scholar id (`c<community>-s<index>`).
pub fn synthetic_community(scholar_id: &str) -> Option<usize> {
    let rest = scholar_id.strip_prefix('c')?;
    rest.split('-').next()?.parse().ok()
}

fn topic_word(community: usize, n: usize) -> String {
    format!("topic{community}term{n}")
}

/// Planted-community corpus.
///
/// Scholars are split into `n_communities` groups. Every scholar leads
/// `papers_per_scholar` papers, possibly with co-authors from the same group.
/// Keywords, venues, organisations and most title/abstract words come from
/// per-community pools, so co-topic/co-venue edges stay inside a community.
/// Each reference draw picks a paper of the same community with probability
/// `intra_cite_prob` and an outside paper otherwise.
pub fn generate_synthetic(
    n_communities: usize,
    scholars_per: usize,
    papers_per_scholar: usize,
    intra_cite_prob: f64,
    seed: u64,
) -> Result<CorpusStore> {
    if n_communities == 0 || scholars_per == 0 || papers_per_scholar == 0 {
        return Err(Error::Config("synthetic corpus counts must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&intra_cite_prob) {
        return Err(Error::Config(format!(
            "intra_cite_prob must lie in [0, 1], got {intra_cite_prob}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let scholar = |c: usize, s: usize| Author {
        id: format!("c{c}-s{s:03}"),
        name: format!("Scholar {c}.{s}"),
        org: Some(format!("Institute {c}-{}", s % ORGS_PER_COMMUNITY)),
    };

    let mut records = Vec::with_capacity(n_communities * scholars_per * papers_per_scholar);
    let mut community_of = Vec::new();
    for c in 0..n_communities {
        for s in 0..scholars_per {
            for _ in 0..papers_per_scholar {
                let mut authors = vec![scholar(c, s)];
                let n_co = if scholars_per > 1 { rng.random_range(0..=2) } else { 0 };
                for _ in 0..n_co {
                    let other = rng.random_range(0..scholars_per);
                    if authors.iter().all(|a| a.id != scholar(c, other).id) {
                        authors.push(scholar(c, other));
                    }
                }

                let mut kw: Vec<usize> = (0..KEYWORD_POOL).collect();
                let kw_picks = rand::seq::index::sample(&mut rng, KEYWORD_POOL, KEYWORDS_PER_PAPER);
                kw = kw_picks.into_iter().map(|i| kw[i]).collect();
                kw.sort_unstable();
                let keywords = kw.iter().map(|k| format!("theme {c}.{k}")).collect();

                let topic = |n: usize, rng: &mut ChaCha8Rng| -> Vec<String> {
                    (0..n).map(|_| topic_word(c, rng.random_range(0..TOPIC_VOCAB))).collect()
                };
                let mut title_words = topic(TITLE_TOPIC_WORDS, &mut rng);
                title_words.insert(1, GENERIC_WORDS.choose(&mut rng).unwrap().to_string());
                let mut abstract_words = topic(ABSTRACT_TOPIC_WORDS, &mut rng);
                for _ in 0..ABSTRACT_GENERIC_WORDS {
                    let at = rng.random_range(0..=abstract_words.len());
                    abstract_words.insert(at, GENERIC_WORDS.choose(&mut rng).unwrap().to_string());
                }

                records.push(PaperRecord {
                    paper_id: format!("p{:06}", records.len()),
                    title: title_words.join(" "),
                    abstract_text: Some(abstract_words.join(" ") + "."),
                    year: 2005 + rng.random_range(0..16),
                    venue: format!("Venue {c}-{}", rng.random_range(0..VENUES_PER_COMMUNITY)),
                    keywords,
                    authors,
                    references: Vec::new(),
                });
                community_of.push(c);
            }
        }
    }

    let members: Vec<Vec<usize>> = (0..n_communities)
        .map(|c| (0..records.len()).filter(|&i| community_of[i] == c).collect())
        .collect();
    let outsiders: Vec<Vec<usize>> = (0..n_communities)
        .map(|c| (0..records.len()).filter(|&i| community_of[i] != c).collect())
        .collect();
    for i in 0..records.len() {
        let c = community_of[i];
        let mut refs: Vec<String> = Vec::new();
        for _ in 0..REFERENCE_DRAWS {
            let intra = rng.random::<f64>() < intra_cite_prob || outsiders[c].is_empty();
            let pool = if intra { &members[c] } else { &outsiders[c] };
            let target = *pool.choose(&mut rng).expect("non-empty pool");
            let id = &records[target].paper_id;
            if target != i && !refs.contains(id) {
                refs.push(id.clone());
            }
        }
        records[i].references = refs;
    }

    CorpusStore::from_records(records)
}
