//! Builds the four relation graphs of a corpus and samples a neighbourhood.
//!
//! cargo run --example build_network

use miarec::corpus::generate_synthetic;
use miarec::hetnet::{HeterogeneousNetwork, RelationKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> miarec::Result<()> {
    let corpus = generate_synthetic(3, 10, 5, 0.9, 1)?;
    let network = HeterogeneousNetwork::build(&corpus, &RelationKind::ALL)?;
    for g in network.graphs() {
        let mean_degree = 2.0 * g.num_edges() as f64 / g.num_nodes() as f64;
        println!("{:<14} {:>5} edges, mean degree {mean_degree:.1}", g.kind().as_str(), g.num_edges());
    }

    let collab = network.graph(RelationKind::Collaboration).expect("built");
    let who = "c0-s000";
    println!("{who} collaborates with {:?}", collab.neighbors(who)?);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    println!("sample of 3: {:?}", collab.sample_neighbors(who, 3, &mut rng)?);

    let mut dump = Vec::new();
    collab.write_dump(&mut dump)?;
    println!("first edges:");
    for line in String::from_utf8_lossy(&dump).lines().take(4) {
        println!("  {line}");
    }
    Ok(())
}
