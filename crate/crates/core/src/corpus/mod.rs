//! Paper records, the scholar/paper index, citation masses, the
//! leave-one-out split and a planted-community corpus generator.

mod split;
mod synthetic;

pub use split::{leave_one_out_split, SplitSpec, NEGATIVES_PER_POSITIVE};
pub use synthetic::{generate_synthetic, synthetic_community};

use std::collections::HashSet;
use std::io::{BufRead, Write};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Author {
    pub id: String,
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub org: Option<String>,
}

/// One paper as read from the corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    #[serde(rename = "id")]
    pub paper_id: String,
    pub title: String,
    #[serde(rename = "abstract", default, skip_serializing_if = "Option::is_none")]
    pub abstract_text: Option<String>,
    pub year: i64,
    #[serde(default)]
    pub venue: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    pub authors: Vec<Author>,
    #[serde(default)]
    pub references: Vec<String>,
}

impl PaperRecord {
    pub fn author_ids(&self) -> impl Iterator<Item = &str> {
        self.authors.iter().map(|a| a.id.as_str())
    }

    /// Text fed to the content model: title followed by the abstract.
    pub fn text(&self) -> String {
        match &self.abstract_text {
            Some(a) => format!("{} {}", self.title, a),
            None => self.title.clone(),
        }
    }

    /// Drops self-citations and repeated references, keeping first occurrences.
    fn normalize(&mut self) {
        let mut seen = HashSet::new();
        let id = self.paper_id.clone();
        self.references.retain(|r| *r != id && seen.insert(r.clone()));
        let mut seen = HashSet::new();
        self.authors.retain(|a| seen.insert(a.id.clone()));
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.paper_id.is_empty() {
            return Err("empty paper id".into());
        }
        if self.authors.is_empty() {
            return Err(format!("paper `{}` has no authors", self.paper_id));
        }
        if self.authors.iter().any(|a| a.id.is_empty()) {
            return Err(format!("paper `{}` has an author with an empty id", self.paper_id));
        }
        Ok(())
    }
}

/// Indexed corpus: papers, scholars and in-corpus citation masses.
///
/// Papers and scholars keep their first-seen order, which fixes the node and
/// paper indices used downstream.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusStore {
    papers: IndexMap<String, PaperRecord>,
    scholars: IndexMap<String, Vec<String>>,
    citation_mass: IndexMap<String, u64>,
}

impl CorpusStore {
    /// Builds the store from records; duplicate ids are rejected.
    pub fn from_records(records: impl IntoIterator<Item = PaperRecord>) -> Result<Self> {
        let mut store = CorpusStore::default();
        for mut rec in records {
            rec.normalize();
            rec.validate()
                .map_err(|m| Error::Parse { line: store.papers.len() + 1, message: m })?;
            store.insert(rec)?;
        }
        store.compute_masses();
        Ok(store)
    }

    fn insert(&mut self, rec: PaperRecord) -> Result<()> {
        if self.papers.contains_key(&rec.paper_id) {
            return Err(Error::DuplicateKey(rec.paper_id));
        }
        for author in rec.author_ids() {
            self.scholars
                .entry(author.to_string())
                .or_default()
                .push(rec.paper_id.clone());
        }
        self.papers.insert(rec.paper_id.clone(), rec);
        Ok(())
    }

    fn compute_masses(&mut self) {
        self.citation_mass = self.scholars.keys().map(|s| (s.clone(), 0)).collect();
        for rec in self.papers.values() {
            for cited in &rec.references {
                if let Some(target) = self.papers.get(cited) {
                    for author in target.author_ids() {
                        *self.citation_mass.get_mut(author).expect("indexed") += 1;
                    }
                }
            }
        }
    }

    pub fn papers(&self) -> &IndexMap<String, PaperRecord> {
        &self.papers
    }

    pub fn paper(&self, id: &str) -> Option<&PaperRecord> {
        self.papers.get(id)
    }

    pub fn paper_index(&self, id: &str) -> Option<usize> {
        self.papers.get_index_of(id)
    }

    pub fn paper_ids(&self) -> impl Iterator<Item = &str> {
        self.papers.keys().map(String::as_str)
    }

    /// Scholar id to authored paper ids, in insertion order.
    pub fn scholars(&self) -> &IndexMap<String, Vec<String>> {
        &self.scholars
    }

    pub fn scholar_ids(&self) -> impl Iterator<Item = &str> {
        self.scholars.keys().map(String::as_str)
    }

    pub fn citation_mass(&self) -> &IndexMap<String, u64> {
        &self.citation_mass
    }

    pub fn mass_of(&self, scholar: &str) -> Option<u64> {
        self.citation_mass.get(scholar).copied()
    }

    /// References of `paper` that resolve to papers in this corpus.
    pub fn in_corpus_references<'a>(&'a self, paper: &'a PaperRecord) -> impl Iterator<Item = &'a str> {
        paper
            .references
            .iter()
            .filter(|r| self.papers.contains_key(*r))
            .map(String::as_str)
    }

    pub fn num_papers(&self) -> usize {
        self.papers.len()
    }

    pub fn num_scholars(&self) -> usize {
        self.scholars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }
}

/// Reads one JSON record per line. Blank lines are skipped.
pub fn parse_jsonl<R: BufRead>(reader: R) -> Result<CorpusStore> {
    let mut store = CorpusStore::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut rec: PaperRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        rec.normalize();
        rec.validate()
            .map_err(|message| Error::Parse { line: line_no, message })?;
        store.insert(rec)?;
    }
    store.compute_masses();
    Ok(store)
}

/// Writes the corpus back in the line-oriented JSON format.
pub fn write_jsonl<W: Write>(corpus: &CorpusStore, mut out: W) -> Result<()> {
    for rec in corpus.papers.values() {
        serde_json::to_writer(&mut out, rec).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
