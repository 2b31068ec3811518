//! Trains a small model, saves the checkpoint, reloads it and recommends papers.
//!
//! cargo run --release --example recommend -- [scholar] [k]

use miarec::corpus::{generate_synthetic, leave_one_out_split, synthetic_community};
use miarec::hetnet::{HeterogeneousNetwork, RelationKind};
use miarec::recommender::{train, ModelCheckpoint, TrainConfig};

fn main() -> miarec::Result<()> {
    let mut args = std::env::args().skip(1);
    let scholar = args.next().unwrap_or_else(|| "c1-s003".to_string());
    let k: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);

    let corpus = generate_synthetic(3, 12, 5, 0.9, 11)?;
    let network = HeterogeneousNetwork::build(&corpus, &RelationKind::DEFAULT)?;
    let split = leave_one_out_split(&corpus, 11)?;
    let config = TrainConfig { epochs: 30, ..TrainConfig::default() };
    let ckpt = train(&corpus, &network, &split, &config)?;

    let path = std::env::temp_dir().join("miarec-example.ckpt.json");
    ckpt.save(&path)?;
    let loaded = ModelCheckpoint::load(&path)?;
    println!("checkpoint {} ({} epochs)", path.display(), loaded.epochs_trained);

    let candidates = loaded.default_candidates(&scholar)?;
    println!("top {k} for {scholar} (community {:?}):", synthetic_community(&scholar));
    for (rank, (paper, score)) in loaded.recommend_topk(&scholar, &candidates, k)?.iter().enumerate() {
        let author = &corpus.paper(paper).expect("known").authors[0].id;
        println!("{:>3}. {paper}  {score:>9.4}  by {author}", rank + 1);
    }
    Ok(())
}
