//! Mines conjunction terms from a synthetic dataset and writes them in the
//! term-capture format.
//!
//! ```text
//! cargo run --example mine_vocabulary -- [out.txt]
//! ```

use rashomon::synthetic::{planted, SyntheticConfig};
use rashomon::vocabulary::{mine_terms, read_terms};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (data, _) = planted(&SyntheticConfig {
        n_examples: 500,
        n_features: 8,
        ..Default::default()
    });
    for coverage in [0.0, 0.25, 0.5] {
        let vocab = mine_terms(&data, 2, coverage)?;
        println!(
            "max 2 features, positive coverage >= {coverage}: {} terms",
            vocab.len()
        );
    }

    let vocab = mine_terms(&data, 2, 0.25)?;
    for t in vocab.terms().iter().take(5) {
        println!("  {:<12} captures {} rows", t.name, t.capture.count_ones());
    }

    let mut buf = Vec::new();
    vocab.write_terms(&mut buf)?;
    let back = read_terms(buf.as_slice(), data.n_examples())?;
    assert_eq!(back.len(), vocab.len());

    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, &buf)?;
        println!("wrote {path}");
    }
    Ok(())
}
