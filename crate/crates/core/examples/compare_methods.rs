//! Enumeration and top-K side by side: model counts, time, and the ranked
//! objective values after grouping enumerated lists by term set.

use std::collections::HashMap;
use std::time::Duration;

use rashomon::enumerator::{term_set, SinkError};
use rashomon::prelude::*;
use rashomon::synthetic::{planted, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (data, _) = planted(&SyntheticConfig {
        n_examples: 1000,
        n_features: 8,
        ..Default::default()
    });
    let vocab = mine_terms(&data, 2, 0.3)?;
    let reg = Regularizer::new(0.015)?;
    let n = data.n_examples() as u64;

    let mut best_per_set: HashMap<Vec<usize>, u128> = HashMap::new();
    let mut sink = |s: &Solution<'_>| -> Result<(), SinkError> {
        let score = reg.scaled(s.errors, s.len() as u64, n);
        let e = best_per_set.entry(term_set(s.rules)).or_insert(score);
        *e = (*e).min(score);
        Ok(())
    };
    let stats = enumerate_rashomon(
        &data,
        &vocab,
        &EnumConfig::new(3, Threshold::unbounded(1000)),
        &mut sink,
    )?;
    let mut grouped: Vec<u128> = best_per_set.into_values().collect();
    grouped.sort_unstable();

    let mut config = TopKConfig::new(20, 3, reg);
    config.timeout = Some(Duration::from_secs(30));
    let lawler = topk(&data, &vocab, &config)?;

    println!(
        "enumerator: {} models, {} term sets, {:.1} ms",
        stats.solutions,
        grouped.len(),
        stats.elapsed.as_secs_f64() * 1e3
    );
    println!(
        "top-K:      {} models, {} refits, {:.1} ms",
        lawler.answers.len(),
        lawler.stats.refits,
        lawler.stats.elapsed.as_secs_f64() * 1e3
    );
    for (k, a) in lawler.answers.iter().enumerate() {
        let same = a.score == grouped[k];
        println!(
            "rank {:>2}: objective {:.4} (enumeration agrees: {same})",
            k + 1,
            a.objective
        );
    }
    Ok(())
}
