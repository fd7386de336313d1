//! Streams every rule list within 2% risk of the optimum to a closure sink,
//! then repeats the run on several threads.

use rashomon::enumerator::{enumerate_parallel, threshold_from_errors, SinkError};
use rashomon::prelude::*;
use rashomon::synthetic::{planted, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (data, _) = planted(&SyntheticConfig {
        n_examples: 1000,
        n_features: 10,
        ..Default::default()
    });
    let vocab = mine_terms(&data, 2, 0.1)?;
    let n = data.n_examples() as u64;

    let h0 = fit_optimal(
        &data,
        &vocab,
        &OptimizerConfig::new(3, Regularizer::new(0.015)?),
    )?;
    let max_errors = threshold_from_errors(h0.evaluation.errors, 0.02, n)?;
    println!(
        "reference: {}  ({} errors)",
        h0.best.display(&vocab),
        h0.evaluation.errors
    );

    let config = EnumConfig::new(3, Threshold::Errors(max_errors));
    let mut shown = 0;
    let mut sink = |s: &Solution<'_>| -> Result<(), SinkError> {
        if shown < 5 {
            println!(
                "  {:>4} errors  {}",
                s.errors,
                s.to_rule_list().display(&vocab)
            );
            shown += 1;
        }
        Ok(())
    };
    let stats = enumerate_rashomon(&data, &vocab, &config, &mut sink)?;
    println!(
        "{} rule lists with at most {max_errors} errors; {} prefixes visited in {:.1} ms",
        stats.solutions,
        stats.candidates_visited,
        stats.elapsed.as_secs_f64() * 1e3
    );

    let (sinks, par) = enumerate_parallel(&data, &vocab, &config, 4, CountingSink::default)?;
    let total: u64 = sinks.iter().map(|s| s.0).sum();
    assert_eq!(total, stats.solutions);
    println!(
        "4 threads: {total} rule lists in {:.1} ms",
        par.elapsed.as_secs_f64() * 1e3
    );
    Ok(())
}
