//! Trains the full model on a planted-community corpus and reports test metrics.
//!
//! cargo run --release --example train_and_evaluate -- [seed] [epochs]

use std::time::Instant;

use miarec::corpus::{generate_synthetic, leave_one_out_split};
use miarec::eval::{evaluate, DEFAULT_KS};
use miarec::hetnet::{HeterogeneousNetwork, RelationKind};
use miarec::recommender::{train_with, TrainConfig};

fn main() -> miarec::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let epochs = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);

    let corpus = generate_synthetic(4, 25, 6, 0.9, 7)?;
    let network = HeterogeneousNetwork::build(&corpus, &RelationKind::DEFAULT)?;
    let split = leave_one_out_split(&corpus, 7)?;
    let config = TrainConfig { seed, epochs, ..TrainConfig::default() };

    let start = Instant::now();
    let ckpt = train_with(&corpus, &network, &split, &config, None, |epoch, loss| {
        if epoch == 1 || epoch % 10 == 0 {
            println!("epoch {epoch:>3}  loss {loss:.4}");
        }
    })?;
    println!("trained in {:.1?}", start.elapsed());

    let report = evaluate(&ckpt, &split, &DEFAULT_KS)?;
    print!("{}", report.to_text());
    Ok(())
}
