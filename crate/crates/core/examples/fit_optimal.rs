//! Certifiably optimal rule list on a synthetic dataset with a planted
//! rule list, for a few regularization strengths.

use rashomon::prelude::*;
use rashomon::synthetic::{planted, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (data, _) = planted(&SyntheticConfig {
        n_examples: 1000,
        n_features: 8,
        noise: 0.05,
        ..Default::default()
    });
    let vocab = mine_terms(&data, 2, 0.1)?;
    println!("{} examples, {} terms", data.n_examples(), vocab.len());

    for lambda in [0.0, 0.015, 0.05] {
        let config = OptimizerConfig::new(4, Regularizer::new(lambda)?);
        let r = fit_optimal(&data, &vocab, &config)?;
        println!(
            "lambda {lambda:<6} objective {:.4}  risk {:.4}  nodes {:>6}  {}",
            r.best_objective,
            r.evaluation.risk(),
            r.nodes_visited,
            r.best.display(&vocab)
        );
    }
    Ok(())
}
