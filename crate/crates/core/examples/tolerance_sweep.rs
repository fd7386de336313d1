//! One enumeration at the largest tolerance, bucketed into a cumulative
//! count per tolerance.

use rashomon::prelude::*;
use rashomon::synthetic::{planted, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (data, _) = planted(&SyntheticConfig {
        n_examples: 800,
        n_features: 10,
        noise: 0.2,
        ..Default::default()
    });
    let vocab = mine_terms(&data, 2, 0.25)?;
    let h0 = fit_optimal(
        &data,
        &vocab,
        &OptimizerConfig::new(3, Regularizer::new(0.015)?),
    )?
    .best;

    let epsilons: Vec<f64> = (1..=15).map(|p| p as f64 / 100.0).collect();
    let sweep = sweep_tolerances(&data, &vocab, &h0, &epsilons, &SweepOptions::new(3))?;
    println!("epsilon  max_errors  |R_eps|");
    for ((e, t), c) in sweep
        .epsilons
        .iter()
        .zip(&sweep.thresholds)
        .zip(&sweep.counts)
    {
        println!("{:>6.2}  {t:>10}  {c:>7}", e);
    }
    Ok(())
}
