//! Gravity influence factors and softmax coefficients for one scholar.
//!
//! cargo run --example influence_table -- [gravitational_constant]

use miarec::corpus::generate_synthetic;
use miarec::hetnet::{HeterogeneousNetwork, RelationKind};
use miarec::influence::{build_table, gravity_force, node_masses};

fn main() -> miarec::Result<()> {
    let g_const: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let corpus = generate_synthetic(2, 8, 4, 0.9, 3)?;
    let network = HeterogeneousNetwork::build(&corpus, &RelationKind::DEFAULT)?;
    let masses = node_masses(&corpus, network.nodes())?;
    let graph = network.graph(RelationKind::Collaboration).expect("built");
    let table = build_table(graph, &masses, g_const)?;

    let i = (0..graph.num_nodes()).max_by_key(|&i| graph.degree(i)).unwrap_or(0);
    println!("scholar {} (mass {}), G = {g_const}", graph.nodes().id(i), masses[i]);
    println!("{:<10} {:>5} {:>6} {:>12} {:>12} {:>10}", "neighbour", "mass", "count", "force", "g_ij", "M_ij");
    for (pos, &j) in graph.neighbor_indices(i).iter().enumerate() {
        let count = graph.neighbor_weights(i)[pos];
        let r = 1.0 / count as f64;
        println!(
            "{:<10} {:>5} {:>6} {:>12.3} {:>12.3} {:>10.6}",
            graph.nodes().id(j),
            masses[j],
            count,
            gravity_force(masses[i], masses[j], r, g_const)?,
            table.factor_row(i)[pos],
            table.coefficient_row(i)[pos]
        );
    }
    println!("sum of M_ij = {}", table.coefficient_row(i).iter().sum::<f64>());
    Ok(())
}
