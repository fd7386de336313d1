mod common;

use common::checks::{self, EPSILON_PCTS, LAMBDA_MILLIS};
use common::random_instance;

const SEEDS: std::ops::Range<u64> = 1000..1040;

#[test]
fn enumeration_matches_brute_force() {
    for seed in SEEDS {
        let inst = random_instance(seed);
        for pct in EPSILON_PCTS {
            checks::enumeration(&inst, pct)
                .unwrap_or_else(|e| panic!("seed {seed} eps {pct}%: {e}"));
        }
    }
}

#[test]
fn prunings_are_sound() {
    for seed in SEEDS {
        let inst = random_instance(seed);
        for pct in EPSILON_PCTS {
            checks::pruning_soundness(&inst, pct)
                .unwrap_or_else(|e| panic!("seed {seed} eps {pct}%: {e}"));
        }
    }
}

#[test]
fn optimizer_is_optimal() {
    for seed in SEEDS {
        let inst = random_instance(seed);
        for milli in LAMBDA_MILLIS {
            checks::optimality(&inst, milli).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        }
    }
}

#[test]
fn topk_agrees_with_enumeration() {
    for seed in SEEDS {
        let inst = random_instance(seed);
        for k in [1, 5, 10] {
            checks::lawler_agreement(&inst, k, 15)
                .unwrap_or_else(|e| panic!("seed {seed} k {k}: {e}"));
        }
    }
}

#[test]
fn sweeps_are_monotone() {
    for seed in SEEDS {
        checks::monotonicity(&random_instance(seed)).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
    }
}

#[test]
fn instances_vary() {
    let sizes: std::collections::BTreeSet<_> = SEEDS
        .map(|s| {
            let i = random_instance(s);
            (i.data.n_examples(), i.vocab.len(), i.max_len)
        })
        .collect();
    assert!(sizes.len() > 20);
    assert!(SEEDS
        .map(random_instance)
        .all(|i| i.vocab.len() <= 6 && i.data.n_examples() <= 64));
}
