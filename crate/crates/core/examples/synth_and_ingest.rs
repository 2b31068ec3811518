//! Writes a planted-community corpus to JSONL, reads it back and prints counts.
//!
//! cargo run --example synth_and_ingest -- [out.jsonl]

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};

use miarec::corpus::{generate_synthetic, leave_one_out_split, parse_jsonl, write_jsonl};

fn main() -> miarec::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().join("miarec-synthetic.jsonl").display().to_string());

    let corpus = generate_synthetic(4, 25, 6, 0.9, 7)?;
    let mut out = BufWriter::new(File::create(&path)?);
    write_jsonl(&corpus, &mut out)?;
    out.flush()?;

    let back = parse_jsonl(BufReader::new(File::open(&path)?))?;
    assert_eq!(back, corpus);
    println!("{path}: {} papers, {} scholars", back.num_papers(), back.num_scholars());

    let mut masses: Vec<(&String, &u64)> = back.citation_mass().iter().collect();
    masses.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
    println!("most cited scholars:");
    for (id, m) in masses.iter().take(5) {
        println!("  {id}  {m}");
    }

    let split = leave_one_out_split(&back, 7)?;
    let test: usize = split.test_positives.values().map(|s| s.len()).sum();
    let train: usize = split.train_positives.values().map(|s| s.len()).sum();
    println!("split: {} scholars, {train} train pairs, {test} test positives (1:3 negatives)", split.len());
    Ok(())
}
