//! Trains PV-DBOW paper vectors and lists the nearest papers to one paper.
//!
//! cargo run --release --example content_vectors -- [out.vec]

use miarec::content::{train_pvdbow, ContentConfig};
use miarec::corpus::generate_synthetic;
use miarec::numeric::dot;

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt())
}

fn main() -> miarec::Result<()> {
    let corpus = generate_synthetic(3, 10, 5, 0.9, 1)?;
    let trained = train_pvdbow(&corpus, &ContentConfig { dim: 32, ..Default::default() })?;
    let losses = &trained.epoch_losses;
    println!("loss per pair: epoch 1 {:.4}, epoch {} {:.4}", losses[0], losses.len(), losses[losses.len() - 1]);

    let vectors = &trained.vectors;
    let query = &vectors.paper_ids()[0];
    let q = vectors.get(query).expect("trained");
    let mut nearest: Vec<(&str, f64)> = vectors
        .paper_ids()
        .iter()
        .filter(|p| *p != query)
        .map(|p| (p.as_str(), cosine(q, vectors.get(p).expect("trained"))))
        .collect();
    nearest.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("nearest to {query} ({}):", corpus.paper(query).expect("known").title);
    for (p, c) in nearest.iter().take(5) {
        println!("  {p}  {c:.3}  {}", corpus.paper(p).expect("known").title);
    }

    if let Some(path) = std::env::args().nth(1) {
        vectors.save(std::io::BufWriter::new(std::fs::File::create(&path)?))?;
        println!("saved to {path}");
    }
    Ok(())
}
