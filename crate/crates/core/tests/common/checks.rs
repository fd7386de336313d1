//! Per-instance comparisons of the library against the oracle. Each returns
//! `Err` with a description on the first disagreement.

use std::collections::BTreeSet;

use rashomon::enumerator::{
    enumerate_rashomon, sweep_tolerances, threshold_from_errors, CollectingSink, EnumConfig,
    Prunings, SweepOptions, Threshold,
};
use rashomon::lawler::{topk, TopKConfig};
use rashomon::metrics::MultiplicityAccumulator;
use rashomon::optimizer::{fit_optimal, OptimizerConfig};
use rashomon::rulelist::{canonical_representative, prediction_vector, Regularizer};

use super::*;

pub const EPSILON_PCTS: [u64; 4] = [0, 10, 25, 50];
pub const LAMBDA_MILLIS: [u64; 3] = [0, 15, 100];

fn collect(inst: &Instance, max_errors: u64, prunings: Prunings) -> Vec<RuleList> {
    let mut config = EnumConfig::new(inst.max_len, Threshold::Errors(max_errors));
    config.prunings = prunings;
    let mut sink = CollectingSink::default();
    enumerate_rashomon(&inst.data, &inst.vocab, &config, &mut sink).unwrap();
    sink.0.into_iter().map(|(l, _)| l).collect()
}

fn threshold(inst: &Instance, pct: u64) -> Result<u64, String> {
    let n = inst.data.n_examples() as u64;
    let e0 = min_errors(inst);
    let expected = e0 + pct_of(pct, n);
    let got = threshold_from_errors(e0, pct as f64 / 100.0, n).unwrap();
    if got != expected {
        return Err(format!("threshold for {pct}%: {got} != {expected}"));
    }
    Ok(expected)
}

/// Enumerated set equals the oracle's Rashomon set, with no duplicates.
pub fn enumeration(inst: &Instance, pct: u64) -> Result<(), String> {
    let t = threshold(inst, pct)?;
    let got = collect(inst, t, Prunings::default());
    let keys: BTreeSet<String> = got.iter().map(list_key).collect();
    if keys.len() != got.len() {
        return Err(format!("{} duplicates", got.len() - keys.len()));
    }
    let want = rashomon_set(inst, t);
    if keys != want {
        let extra: Vec<_> = keys.difference(&want).take(3).collect();
        let missing: Vec<_> = want.difference(&keys).take(3).collect();
        return Err(format!("extra {extra:?} missing {missing:?}"));
    }
    Ok(())
}

/// Switching off one pruning at a time leaves the set of canonical
/// representatives unchanged.
pub fn pruning_soundness(inst: &Instance, pct: u64) -> Result<(), String> {
    let t = threshold(inst, pct)?;
    let all_on: BTreeSet<String> = collect(inst, t, Prunings::default())
        .iter()
        .map(list_key)
        .collect();
    let toggles = [
        (
            "lower_bound",
            Prunings {
                lower_bound: false,
                ..Prunings::default()
            },
        ),
        (
            "min_support",
            Prunings {
                min_support: false,
                ..Prunings::default()
            },
        ),
        (
            "symmetry",
            Prunings {
                symmetry: false,
                ..Prunings::default()
            },
        ),
    ];
    for (name, p) in toggles {
        let raw = collect(inst, t, p);
        let raw_keys: BTreeSet<String> = raw.iter().map(list_key).collect();
        if !all_on.is_subset(&raw_keys) {
            return Err(format!("{name} off loses solutions"));
        }
        let normalized: BTreeSet<String> = raw
            .iter()
            .map(|l| list_key(&canonical_representative(l, &inst.vocab)))
            .collect();
        if normalized != all_on {
            return Err(format!("{name} off changes the canonical set"));
        }
    }
    Ok(())
}

pub fn optimality(inst: &Instance, milli: u64) -> Result<(), String> {
    let reg = Regularizer::new(milli as f64 / 1000.0).unwrap();
    let best = fit_optimal(
        &inst.data,
        &inst.vocab,
        &OptimizerConfig::new(inst.max_len, reg),
    )
    .unwrap();
    let got = oracle_objective(inst, &best.best, milli);
    let want = min_objective(inst, milli);
    if got != want || !best.complete {
        return Err(format!("lambda {milli}/1000: objective {got} != {want}"));
    }
    Ok(())
}

/// Top-K objectives equal the K best term-set objectives of the enumeration.
pub fn lawler_agreement(inst: &Instance, k: usize, milli: u64) -> Result<(), String> {
    let reg = Regularizer::new(milli as f64 / 1000.0).unwrap();
    let result = topk(
        &inst.data,
        &inst.vocab,
        &TopKConfig::new(k, inst.max_len, reg),
    )
    .unwrap();
    let got: Vec<u64> = result
        .answers
        .iter()
        .map(|a| oracle_objective(inst, &a.rule_list, milli))
        .collect();

    // The enumeration side, grouped by term set.
    let mut best = std::collections::BTreeMap::new();
    for l in collect(inst, inst.data.n_examples() as u64, Prunings::default()) {
        let s = oracle_objective(inst, &l, milli);
        best.entry(l.term_set())
            .and_modify(|v: &mut u64| *v = (*v).min(s))
            .or_insert(s);
    }
    let mut from_enum: Vec<u64> = best.into_values().collect();
    from_enum.sort_unstable();
    if from_enum != term_set_objectives(inst, milli) {
        return Err("enumeration's term-set objectives differ from the oracle".into());
    }
    from_enum.truncate(k);
    if got != from_enum {
        return Err(format!("topk {got:?} != enumeration {from_enum:?}"));
    }
    let sets: BTreeSet<Vec<usize>> = result
        .answers
        .iter()
        .map(|a| a.rule_list.term_set())
        .collect();
    if sets.len() != result.answers.len() {
        return Err("topk repeated a term set".into());
    }
    Ok(())
}

/// |R_eps|, ambiguity and discrepancy are nondecreasing over a sweep.
pub fn monotonicity(inst: &Instance) -> Result<(), String> {
    let reg = Regularizer::new(0.015).unwrap();
    let h0 = fit_optimal(
        &inst.data,
        &inst.vocab,
        &OptimizerConfig::new(inst.max_len, reg),
    )
    .unwrap()
    .best;
    let eps = [0.0, 0.01, 0.02, 0.05, 0.1, 0.15, 0.25, 0.5];
    let sweep = sweep_tolerances(
        &inst.data,
        &inst.vocab,
        &h0,
        &eps,
        &SweepOptions::new(inst.max_len),
    )
    .unwrap();
    let reference = prediction_vector(&h0, &inst.vocab);
    let mut prev = (0u64, 0.0f64, 0.0f64);
    for (i, &count) in sweep.counts.iter().enumerate() {
        let mut acc = MultiplicityAccumulator::new(&reference);
        for s in sweep.members(i) {
            acc.add(&prediction_vector(&s.list, &inst.vocab)).unwrap();
        }
        if acc.n_models() != count {
            return Err(format!(
                "bucket {i}: {} members, count {count}",
                acc.n_models()
            ));
        }
        let (a, d) = if count == 0 {
            (0.0, 0.0)
        } else {
            (acc.ambiguity().unwrap(), acc.discrepancy().unwrap())
        };
        if count < prev.0 || a < prev.1 || d < prev.2 {
            return Err(format!(
                "decrease at eps {}: {:?} -> {:?}",
                eps[i],
                prev,
                (count, a, d)
            ));
        }
        prev = (count, a, d);
    }
    Ok(())
}
