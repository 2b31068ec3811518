//! Top-k ranking metrics and the leave-one-out evaluation protocol.

use std::collections::HashSet;
use std::hash::Hash;
use std::io::Write;

use crate::corpus::SplitSpec;
use crate::error::{Error, Result};
use crate::recommender::ModelCheckpoint;

pub const DEFAULT_KS: [usize; 3] = [5, 10, 20];

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    Ok(())
}

/// `(P@k, R@k)`. Precision divides by `min(k, ranked.len())`.
pub fn precision_recall_at_k<T: Eq + Hash>(ranked: &[T], relevant: &HashSet<T>, k: usize) -> Result<(f64, f64)> {
    check_k(k)?;
    if relevant.is_empty() {
        return Err(Error::UndefinedMetric("recall needs at least one relevant item".into()));
    }
    let top = &ranked[..k.min(ranked.len())];
    let hits = top.iter().filter(|x| relevant.contains(x)).count() as f64;
    let precision = if top.is_empty() { 0.0 } else { hits / top.len() as f64 };
    Ok((precision, hits / relevant.len() as f64))
}

/// `sum_{i=1..k} rel_i / log2(i + 1)`
pub fn dcg_at_k(gains: &[bool], k: usize) -> f64 {
    gains
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, &g)| g)
        .map(|(i, _)| 1.0 / ((i + 2) as f64).log2())
        .sum()
}

/// DCG@k normalised by the DCG of `min(total_relevant, k)` leading hits.
pub fn ndcg_at_k(gains: &[bool], total_relevant: usize, k: usize) -> Result<f64> {
    check_k(k)?;
    if total_relevant == 0 {
        return Err(Error::UndefinedMetric("nDCG needs at least one relevant item".into()));
    }
    let ideal: f64 = (0..total_relevant.min(k)).map(|i| 1.0 / ((i + 2) as f64).log2()).sum();
    Ok(dcg_at_k(gains, k) / ideal)
}

/// Macro-averaged metrics, one entry per cutoff in `ks`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub ks: Vec<usize>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub ndcg: Vec<f64>,
    pub n_scholars: usize,
}

impl MetricsReport {
    fn position(&self, k: usize) -> Option<usize> {
        self.ks.iter().position(|&x| x == k)
    }

    pub fn precision_at(&self, k: usize) -> Option<f64> {
        self.position(k).map(|i| self.precision[i])
    }

    pub fn recall_at(&self, k: usize) -> Option<f64> {
        self.position(k).map(|i| self.recall[i])
    }

    pub fn ndcg_at(&self, k: usize) -> Option<f64> {
        self.position(k).map(|i| self.ndcg[i])
    }

    /// Flat `key = value` lines, followed by the given config echo.
    pub fn write_report<W: Write>(&self, mut out: W, config: &[(String, String)]) -> std::io::Result<()> {
        write!(out, "{}", self.to_text())?;
        if !config.is_empty() {
            writeln!(out, "\n# config")?;
            for (k, v) in config {
                writeln!(out, "{k} = {v}")?;
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (name, values) in [("precision", &self.precision), ("recall", &self.recall), ("ndcg", &self.ndcg)] {
            for (k, v) in self.ks.iter().zip(values) {
                s.push_str(&format!("{name}@{k} = {v}\n"));
            }
        }
        s.push_str(&format!("n_scholars = {}\n", self.n_scholars));
        s
    }
}

/// Evaluates any scoring function: each split scholar ranks their test
/// candidates (ties by ascending paper id) and metrics are averaged over
/// scholars in id order.
pub fn evaluate_with<F>(split: &SplitSpec, ks: &[usize], mut rank: F) -> Result<MetricsReport>
where
    F: FnMut(&str, &[&str], usize) -> Result<Vec<String>>,
{
    if ks.is_empty() {
        return Err(Error::Config("at least one cutoff k is required".into()));
    }
    for &k in ks {
        check_k(k)?;
    }
    if split.is_empty() {
        return Err(Error::EmptySplit);
    }
    let k_max = *ks.iter().max().expect("non-empty");
    let mut scholars: Vec<&str> = split.scholars().collect();
    scholars.sort_unstable();
    let mut sums = vec![[0.0; 3]; ks.len()];
    for scholar in &scholars {
        let candidates = split.test_candidates(scholar);
        let relevant: HashSet<&str> = split.test_positives[*scholar].iter().map(String::as_str).collect();
        let ranked = rank(scholar, &candidates, k_max)?;
        let ranked: Vec<&str> = ranked.iter().map(String::as_str).collect();
        let gains: Vec<bool> = ranked.iter().map(|p| relevant.contains(p)).collect();
        for (sum, &k) in sums.iter_mut().zip(ks) {
            let (p, r) = precision_recall_at_k(&ranked, &relevant, k)?;
            sum[0] += p;
            sum[1] += r;
            sum[2] += ndcg_at_k(&gains, relevant.len(), k)?;
        }
    }
    let n = scholars.len() as f64;
    Ok(MetricsReport {
        ks: ks.to_vec(),
        precision: sums.iter().map(|s| s[0] / n).collect(),
        recall: sums.iter().map(|s| s[1] / n).collect(),
        ndcg: sums.iter().map(|s| s[2] / n).collect(),
        n_scholars: scholars.len(),
    })
}

/// Test-set metrics of a trained checkpoint.
pub fn evaluate(checkpoint: &ModelCheckpoint, split: &SplitSpec, ks: &[usize]) -> Result<MetricsReport> {
    let scorer = checkpoint.scorer()?;
    evaluate_with(split, ks, |scholar, candidates, k| {
        Ok(scorer
            .recommend_topk(scholar, candidates, k)?
            .into_iter()
            .map(|(p, _)| p)
            .collect())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn set(items: &[u32]) -> HashSet<u32> {
        items.iter().copied().collect()
    }

    #[test]
    fn precision_recall_examples() {
        let ranked = [1, 9, 2, 8, 3, 4, 5];
        let (p, r) = precision_recall_at_k(&ranked, &set(&[1, 2, 3, 4, 5, 6]), 5).unwrap();
        assert_eq!((p, r), (0.6, 0.5));
        assert_eq!(precision_recall_at_k(&ranked, &set(&[42]), 5).unwrap(), (0.0, 0.0));
        assert_eq!(precision_recall_at_k(&ranked, &set(&[9, 8]), 4).unwrap().1, 1.0);
        // short lists divide by their length
        assert_eq!(precision_recall_at_k(&[1, 2], &set(&[1]), 5).unwrap().0, 0.5);
        assert!(matches!(precision_recall_at_k(&ranked, &set(&[]), 5), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn ndcg_hand_cases() {
        let dcg = dcg_at_k(&[true, true, false], 3);
        assert!((dcg - 1.6309297535714575).abs() < 1e-12);
        assert!((ndcg_at_k(&[true, true, false], 2, 3).unwrap() - 1.0).abs() < 1e-15);
        assert!((ndcg_at_k(&[false, true], 1, 2).unwrap() - 0.6309297535714575).abs() < 1e-12);
        assert_eq!(ndcg_at_k(&[false, false, false], 2, 3).unwrap(), 0.0);
        assert!(ndcg_at_k(&[true], 0, 1).is_err());
    }

    fn split_with(scholars: &[(&str, &[&str], &[&str])]) -> SplitSpec {
        let mut s = SplitSpec::default();
        for (id, pos, neg) in scholars {
            s.train_positives.insert(id.to_string(), BTreeSet::new());
            s.test_positives.insert(id.to_string(), pos.iter().map(|p| p.to_string()).collect());
            s.test_negatives.insert(id.to_string(), neg.iter().map(|p| p.to_string()).collect());
        }
        s
    }

    #[test]
    fn oracle_ranking_is_perfect() {
        let split = split_with(&[("a", &["p1", "p2"], &["n1", "n2", "n3", "n4", "n5", "n6"])]);
        let report = evaluate_with(&split, &DEFAULT_KS, |s, c, k| {
            let pos = &split.test_positives[s];
            let mut v: Vec<String> = c.iter().map(|p| p.to_string()).collect();
            v.sort_by_key(|p| !pos.contains(p));
            v.truncate(k);
            Ok(v)
        })
        .unwrap();
        assert_eq!(report.precision_at(5), Some(0.4));
        assert!(report.ndcg.iter().all(|&n| n == 1.0));
        assert!(report.recall.iter().all(|&r| r == 1.0));
    }

    #[test]
    fn averages_over_scholars() {
        let split = split_with(&[("a", &["p"], &["x", "y", "z"]), ("b", &["q"], &["u", "v", "w"])]);
        let report = evaluate_with(&split, &[5], |s, c, _| {
            let mut v: Vec<String> = c.iter().map(|p| p.to_string()).collect();
            if s == "b" {
                v.swap(0, 2);
            }
            Ok(v)
        })
        .unwrap();
        // b ranks its positive third: N@5 = 1 / log2(4) = 0.5
        assert!((report.ndcg_at(5).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(report.n_scholars, 2);
        assert!(evaluate_with(&SplitSpec::default(), &[5], |_, _, _| Ok(vec![])).is_err());
    }

    #[test]
    fn report_text_has_every_key() {
        let r = MetricsReport {
            ks: vec![5, 10],
            precision: vec![0.5, 0.25],
            recall: vec![0.1, 0.2],
            ndcg: vec![1.0, 0.75],
            n_scholars: 3,
        };
        let mut buf = Vec::new();
        r.write_report(&mut buf, &[("seed".into(), "7".into())]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for key in ["precision@5 = 0.5", "recall@10 = 0.2", "ndcg@10 = 0.75", "n_scholars = 3", "seed = 7"] {
            assert!(text.contains(key), "{text}");
        }
    }
}
