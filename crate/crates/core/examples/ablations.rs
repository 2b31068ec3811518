//! Mean N@5 of the full model and its ablations over several seeds.
//!
//! cargo run --release --example ablations -- [epochs] [seeds...]

use miarec::corpus::{generate_synthetic, leave_one_out_split};
use miarec::encoder::InfluenceMode;
use miarec::eval::evaluate;
use miarec::hetnet::{HeterogeneousNetwork, RelationKind};
use miarec::recommender::{train, TrainConfig};

fn variants() -> Vec<(&'static str, Vec<RelationKind>, TrainConfig)> {
    let base = TrainConfig::default();
    let mut uniform = base.clone();
    uniform.encoder.influence_mode = InfluenceMode::Uniform;
    let mut attention = base.clone();
    attention.encoder.influence_mode = InfluenceMode::Attention;
    let mut no_ic = base.clone();
    no_ic.encoder.use_interdependent = false;
    let mut no_content = base.clone();
    no_content.use_content = false;
    let mut with_org = RelationKind::DEFAULT.to_vec();
    with_org.push(RelationKind::CoOrg);
    let defaults = RelationKind::DEFAULT.to_vec();
    vec![
        ("full", defaults.clone(), base.clone()),
        ("uniform (sn)", defaults.clone(), uniform),
        ("attention (att)", defaults.clone(), attention),
        ("w/o ic", defaults.clone(), no_ic),
        ("w/o cont", defaults, no_content),
        ("+org", with_org, base),
    ]
}

fn main() -> miarec::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);
    let mut seeds: Vec<u64> = args.filter_map(|s| s.parse().ok()).collect();
    if seeds.is_empty() {
        seeds = vec![1, 2, 3];
    }

    let corpus = generate_synthetic(4, 25, 6, 0.9, 7)?;
    let split = leave_one_out_split(&corpus, 7)?;
    for (name, relations, mut config) in variants() {
        let network = HeterogeneousNetwork::build(&corpus, &relations)?;
        config.epochs = epochs;
        let mut n5 = Vec::new();
        for &seed in &seeds {
            config.seed = seed;
            let ckpt = train(&corpus, &network, &split, &config)?;
            n5.push(evaluate(&ckpt, &split, &[5])?.ndcg[0]);
        }
        let mean = n5.iter().sum::<f64>() / n5.len() as f64;
        println!("{name:<16} mean N@5 {mean:.4}  per seed {n5:.4?}");
    }
    Ok(())
}
