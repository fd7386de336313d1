//! Top-K rule lists by repeated constrained re-fitting, with both branching
//! schemes.

use rashomon::prelude::*;
use rashomon::synthetic::{planted, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (data, _) = planted(&SyntheticConfig {
        n_examples: 600,
        n_features: 8,
        ..Default::default()
    });
    let vocab = mine_terms(&data, 1, 0.0)?;
    let reg = Regularizer::new(0.015)?;

    for branching in [Branching::Partition, Branching::TermRemoval] {
        let mut config = TopKConfig::new(8, 3, reg);
        config.branching = branching;
        let r = topk(&data, &vocab, &config)?;
        println!(
            "{branching:?}: {} answers, {} refits",
            r.answers.len(),
            r.stats.refits
        );
        for (i, a) in r.answers.iter().enumerate() {
            println!(
                "  {:>2}. {:.4}  {}",
                i + 1,
                a.objective,
                a.rule_list.display(&vocab)
            );
        }
    }
    Ok(())
}
