//! Writes the demo corpus, score file and suspension list used by the CLI
//! tests and the README walkthrough.
//!
//! `cargo run -p botwatch-pipeline --example make_demo -- fixtures/demo`

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use botwatch_pipeline::labelfusion::write_scores;
use botwatch_pipeline::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures/demo".into()));
    std::fs::create_dir_all(&dir)?;
    let cfg = SynthConfig {
        n_bots: 40,
        n_humans: 100,
        days: 30,
        seed: 2020,
        ..SynthConfig::default()
    };
    let corpus = generate(&cfg)?;
    corpus.view.write_export(&dir.join("corpus.jsonl"))?;
    write_scores(BufWriter::new(File::create(dir.join("scores.csv"))?), &corpus.scores)?;
    let mut w = BufWriter::new(File::create(dir.join("suspended.txt"))?);
    writeln!(w, "# accounts suspended before scorer B ran")?;
    for u in &corpus.suspended {
        writeln!(w, "{u}")?;
    }
    w.flush()?;
    println!(
        "{} accounts, {} tweets, {} scores, {} suspended; window boundary {}",
        corpus.view.n_accounts(),
        corpus.view.n_tweets(),
        corpus.scores.len(),
        corpus.suspended.len(),
        cfg.boundary().format("%Y-%m-%dT%H:%M:%SZ")
    );
    Ok(())
}
