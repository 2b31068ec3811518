//! Command-line surface: flat `key = value` run configs and the
//! ingest / synth / train / evaluate / recommend / gradcheck commands.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};
use log::warn;

use crate::content::load_vectors;
use crate::corpus::{generate_synthetic, leave_one_out_split, parse_jsonl, write_jsonl, CorpusStore};
use crate::error::{Error, Result};
use crate::eval::{evaluate, MetricsReport};
use crate::gradcheck::{run_gradcheck, GradcheckFixture, GradcheckOptions, GradcheckReport};
use crate::hetnet::{extract_relation, HeterogeneousNetwork, RelationKind};
use crate::recommender::{train_with, ModelCheckpoint, TrainConfig};

/// Everything a run needs, read from a flat `key = value` file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub checkpoint: PathBuf,
    pub report: Option<PathBuf>,
    pub vectors: Option<PathBuf>,
    pub split_seed: u64,
    pub relations: Vec<RelationKind>,
    pub ks: Vec<usize>,
    pub gradcheck_seed: u64,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            checkpoint: PathBuf::from("model.ckpt.json"),
            report: None,
            vectors: None,
            split_seed: 7,
            relations: RelationKind::DEFAULT.to_vec(),
            ks: vec![5, 10, 20],
            gradcheck_seed: GradcheckOptions::default().seed,
            train: TrainConfig::default(),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn path_str(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

fn opt_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

impl RunConfig {
    /// Sets one key. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let t = &mut self.train;
        match key {
            "corpus" => self.corpus = opt_path(value),
            "checkpoint" => self.checkpoint = PathBuf::from(value),
            "report" => self.report = opt_path(value),
            "vectors" => self.vectors = opt_path(value),
            "split_seed" => self.split_seed = parse_value(key, value)?,
            "relations" => self.relations = parse_list(key, value)?,
            "ks" => self.ks = parse_list(key, value)?,
            "gradcheck_seed" => self.gradcheck_seed = parse_value(key, value)?,
            "seed" => t.seed = parse_value(key, value)?,
            "epochs" => t.epochs = parse_value(key, value)?,
            "batch_size" => t.batch_size = parse_value(key, value)?,
            "learning_rate" => t.learning_rate = parse_value(key, value)?,
            "reg_weight" => t.reg_weight = parse_value(key, value)?,
            "use_content" => t.use_content = parse_value(key, value)?,
            "gravitational_constant" => t.gravitational_constant = parse_value(key, value)?,
            "distance_source" => t.distance_source = parse_value(key, value)?,
            "dim" => t.encoder.dim = parse_value(key, value)?,
            "layers" => t.encoder.layers = parse_value(key, value)?,
            "sample_sizes" => t.encoder.sample_sizes = parse_list(key, value)?,
            "attention_dim" => t.encoder.attention_dim = parse_value(key, value)?,
            "influence_mode" => t.encoder.influence_mode = parse_value(key, value)?,
            "use_interdependent" => t.encoder.use_interdependent = parse_value(key, value)?,
            "content_dim" => t.content.dim = parse_value(key, value)?,
            "content_epochs" => t.content.epochs = parse_value(key, value)?,
            "content_negatives" => t.content.negatives = parse_value(key, value)?,
            "content_learning_rate" => t.content.learning_rate = parse_value(key, value)?,
            "content_min_count" => t.content.min_count = parse_value(key, value)?,
            "content_seed" => t.content.seed = parse_value(key, value)?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Every key with its current value, in a fixed order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let t = &self.train;
        [
            ("corpus", path_str(&self.corpus)),
            ("checkpoint", self.checkpoint.display().to_string()),
            ("report", path_str(&self.report)),
            ("vectors", path_str(&self.vectors)),
            ("split_seed", self.split_seed.to_string()),
            ("relations", join(&self.relations.iter().map(|r| r.as_str()).collect::<Vec<_>>())),
            ("ks", join(&self.ks)),
            ("gradcheck_seed", self.gradcheck_seed.to_string()),
            ("seed", t.seed.to_string()),
            ("epochs", t.epochs.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("learning_rate", t.learning_rate.to_string()),
            ("reg_weight", t.reg_weight.to_string()),
            ("use_content", t.use_content.to_string()),
            ("gravitational_constant", t.gravitational_constant.to_string()),
            ("distance_source", t.distance_source.as_str().to_string()),
            ("dim", t.encoder.dim.to_string()),
            ("layers", t.encoder.layers.to_string()),
            ("sample_sizes", join(&t.encoder.sample_sizes)),
            ("attention_dim", t.encoder.attention_dim.to_string()),
            ("influence_mode", t.encoder.influence_mode.as_str().to_string()),
            ("use_interdependent", t.encoder.use_interdependent.to_string()),
            ("content_dim", t.content.dim.to_string()),
            ("content_epochs", t.content.epochs.to_string()),
            ("content_negatives", t.content.negatives.to_string()),
            ("content_learning_rate", t.content.learning_rate.to_string()),
            ("content_min_count", t.content.min_count.to_string()),
            ("content_seed", t.content.seed.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", idx + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: `{key}` set twice", idx + 1)));
            }
            config
                .set(key, value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", idx + 1)))?;
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies `--key value` pairs on top of the file values.
    pub fn apply_overrides(&mut self, args: &[String]) -> Result<()> {
        let mut it = args.iter();
        while let Some(flag) = it.next() {
            let key = flag
                .strip_prefix("--")
                .ok_or_else(|| Error::Config(format!("expected `--key value`, got `{flag}`")))?;
            let value = it
                .next()
                .ok_or_else(|| Error::Config(format!("missing value for `{flag}`")))?;
            self.set(&key.replace('-', "_"), value)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.relations.len() < 2 {
            return Err(Error::Config("at least two relations are required".into()));
        }
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(Error::Config("ks must be a non-empty list of positive cutoffs".into()));
        }
        self.train.validate()
    }

    fn corpus_path(&self) -> Result<&Path> {
        let path = self
            .corpus
            .as_deref()
            .ok_or_else(|| Error::Config("`corpus` is not set".into()))?;
        if !path.is_file() {
            return Err(Error::Config(format!("corpus file {} does not exist", path.display())));
        }
        Ok(path)
    }
}

pub fn read_corpus(path: &Path) -> Result<CorpusStore> {
    parse_jsonl(BufReader::new(File::open(path)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestSummary {
    pub papers: usize,
    pub scholars: usize,
    pub edges: Vec<(RelationKind, usize)>,
}

impl std::fmt::Display for IngestSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "papers = {}", self.papers)?;
        writeln!(f, "scholars = {}", self.scholars)?;
        for (kind, n) in &self.edges {
            writeln!(f, "edges.{} = {n}", kind.as_str())?;
        }
        Ok(())
    }
}

/// Counts papers, scholars and edges of every relation kind.
pub fn cmd_ingest(corpus_path: &Path) -> Result<IngestSummary> {
    let corpus = read_corpus(corpus_path)?;
    if corpus.is_empty() {
        warn!("corpus {} has no papers", corpus_path.display());
    }
    let edges = RelationKind::ALL
        .into_iter()
        .map(|k| Ok((k, extract_relation(&corpus, k, k.default_min_shared())?.num_edges())))
        .collect::<Result<_>>()?;
    Ok(IngestSummary { papers: corpus.num_papers(), scholars: corpus.num_scholars(), edges })
}

#[derive(Debug, Clone, Copy, PartialEq, clap::Args)]
pub struct SynthParams {
    #[arg(long, default_value_t = 4)]
    pub communities: usize,
    #[arg(long, default_value_t = 25)]
    pub scholars: usize,
    #[arg(long, default_value_t = 6)]
    pub papers: usize,
    #[arg(long, default_value_t = 0.9)]
    pub intra_cite_prob: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

pub fn cmd_synth(params: &SynthParams, out: &Path) -> Result<CorpusStore> {
    let corpus = generate_synthetic(
        params.communities,
        params.scholars,
        params.papers,
        params.intra_cite_prob,
        params.seed,
    )?;
    let mut w = BufWriter::new(File::create(out)?);
    write_jsonl(&corpus, &mut w)?;
    w.flush()?;
    Ok(corpus)
}

/// Trains and writes the checkpoint, printing one loss line per epoch.
pub fn cmd_train<W: Write>(config: &RunConfig, out: &mut W) -> Result<ModelCheckpoint> {
    config.validate()?;
    let corpus = read_corpus(config.corpus_path()?)?;
    let network = HeterogeneousNetwork::build(&corpus, &config.relations)?;
    let split = leave_one_out_split(&corpus, config.split_seed)?;
    let vectors = match &config.vectors {
        Some(p) => Some(load_vectors(BufReader::new(File::open(p)?), &corpus)?),
        None => None,
    };
    let mut io_err = None;
    let ckpt = train_with(&corpus, &network, &split, &config.train, vectors, |epoch, loss| {
        if let Err(e) = writeln!(out, "epoch {epoch} loss {loss}") {
            io_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    ckpt.save(&config.checkpoint)?;
    Ok(ckpt)
}

/// Evaluates a checkpoint on the config's split, writing the report when
/// `report` is set.
pub fn cmd_evaluate(checkpoint: &Path, config: &RunConfig) -> Result<MetricsReport> {
    config.validate()?;
    let corpus = read_corpus(config.corpus_path()?)?;
    let ckpt = ModelCheckpoint::load(checkpoint)?;
    let split = leave_one_out_split(&corpus, config.split_seed)?;
    let report = evaluate(&ckpt, &split, &config.ks)?;
    if let Some(path) = &config.report {
        let mut w = BufWriter::new(File::create(path)?);
        report.write_report(&mut w, &config.entries())?;
        w.flush()?;
    }
    Ok(report)
}

/// Top-k papers among all papers the scholar has not cited in training.
pub fn cmd_recommend(checkpoint: &Path, scholar: &str, k: usize) -> Result<Vec<(String, f64)>> {
    let ckpt = ModelCheckpoint::load(checkpoint)?;
    let candidates = ckpt.default_candidates(scholar)?;
    ckpt.recommend_topk(scholar, &candidates, k)
}

pub fn cmd_gradcheck(config: &RunConfig) -> Result<GradcheckReport> {
    let options = GradcheckOptions { seed: config.gradcheck_seed, ..Default::default() };
    run_gradcheck(&GradcheckFixture::new(), &options)
}

#[derive(Debug, Parser)]
#[command(name = "miarec", version, about = "Scholar-network paper recommendation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a JSONL corpus and print paper, scholar and edge counts.
    Ingest { corpus: PathBuf },
    /// Write a planted-community corpus.
    Synth {
        #[command(flatten)]
        params: SynthParams,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model; `--key value` pairs override the config file.
    Train {
        config: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Evaluate a checkpoint on the config's leave-one-out split.
    Evaluate {
        checkpoint: PathBuf,
        config: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Print the top-k recommendations for one scholar.
    Recommend {
        checkpoint: PathBuf,
        scholar: String,
        #[arg(short, long, default_value_t = 10)]
        k: usize,
    },
    /// Finite-difference check of every parameter group.
    Gradcheck {
        config: Option<PathBuf>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
}

fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut config = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    config.apply_overrides(overrides)?;
    Ok(config)
}

/// Runs one command, returning the process exit code.
pub fn run<W: Write>(cli: Cli, out: &mut W) -> Result<i32> {
    match cli.command {
        Command::Ingest { corpus } => write!(out, "{}", cmd_ingest(&corpus)?)?,
        Command::Synth { params, out: path } => {
            let c = cmd_synth(&params, &path)?;
            writeln!(out, "wrote {} papers by {} scholars to {}", c.num_papers(), c.num_scholars(), path.display())?;
        }
        Command::Train { config, overrides } => {
            let config = load_config(Some(&config), &overrides)?;
            cmd_train(&config, out)?;
            writeln!(out, "checkpoint written to {}", config.checkpoint.display())?;
        }
        Command::Evaluate { checkpoint, config, overrides } => {
            let config = load_config(Some(&config), &overrides)?;
            let report = cmd_evaluate(&checkpoint, &config)?;
            report.write_report(&mut *out, &config.entries())?;
        }
        Command::Recommend { checkpoint, scholar, k } => {
            for (rank, (paper, score)) in cmd_recommend(&checkpoint, &scholar, k)?.iter().enumerate() {
                writeln!(out, "{}\t{paper}\t{score}", rank + 1)?;
            }
        }
        Command::Gradcheck { config, overrides } => {
            let report = cmd_gradcheck(&load_config(config.as_deref(), &overrides)?)?;
            write!(out, "{report}")?;
            return Ok(if report.all_passed() { 0 } else { 3 });
        }
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::InfluenceMode;

    #[test]
    fn parses_keys_and_comments() {
        let c = RunConfig::parse(
            "# run\nseed = 3\ninfluence_mode = uniform  # ablation\nrelations = collaboration, co_topic, co_org\n\nsample_sizes = 5,5\n",
        )
        .unwrap();
        assert_eq!(c.train.seed, 3);
        assert_eq!(c.train.encoder.influence_mode, InfluenceMode::Uniform);
        assert_eq!(c.relations, vec![RelationKind::Collaboration, RelationKind::CoTopic, RelationKind::CoOrg]);
        assert_eq!(c.train.encoder.sample_sizes, vec![5, 5]);
        assert_eq!(c.train.batch_size, 1024);
    }

    #[test]
    fn rejects_unknown_duplicate_and_malformed() {
        for bad in ["nonsense = 1", "seed = 1\nseed = 2", "seed 1", "seed = x", "use_content = maybe"] {
            assert!(matches!(RunConfig::parse(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn overrides_win() {
        let mut c = RunConfig::parse("epochs = 10\n").unwrap();
        c.apply_overrides(&["--epochs".into(), "3".into(), "--use-content".into(), "false".into()]).unwrap();
        assert_eq!(c.train.epochs, 3);
        assert!(!c.train.use_content);
        assert!(c.apply_overrides(&["--epochs".into()]).is_err());
        assert!(c.apply_overrides(&["epochs".into(), "1".into()]).is_err());
    }

    #[test]
    fn entries_round_trip() {
        let mut c = RunConfig::default();
        c.corpus = Some("data/c.jsonl".into());
        c.train.encoder.influence_mode = InfluenceMode::Attention;
        c.train.learning_rate = 0.0025;
        let text: String = c.entries().iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        assert_eq!(RunConfig::parse(&text).unwrap(), c);
    }

    #[test]
    fn missing_corpus_is_a_config_error() {
        let mut c = RunConfig::default();
        assert!(matches!(cmd_train(&c, &mut Vec::new()), Err(Error::Config(_))));
        c.corpus = Some("/definitely/not/here.jsonl".into());
        let err = cmd_train(&c, &mut Vec::new()).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
