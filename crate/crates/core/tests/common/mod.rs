//! Brute-force reference implementations shared by the integration tests.
//!
//! Nothing here touches the crate's bitsets or search code: terms are
//! evaluated row by row from their feature lists, and rule lists are
//! generated by plain nested enumeration.

#![allow(dead_code)]

pub mod checks;

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rashomon::bits::Bits;
use rashomon::dataset::BinaryDataset;
use rashomon::rulelist::{Rule, RuleList};
use rashomon::vocabulary::{mine_terms, Vocabulary};

pub struct Instance {
    pub seed: u64,
    pub data: BinaryDataset,
    pub vocab: Vocabulary,
    pub max_len: usize,
}

/// Random small instance: N <= 64, J <= 6, at most 6 mined terms, l <= 3.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(4..=64);
    let j = rng.gen_range(2..=6);
    let density = rng.gen_range(0.2..0.7);
    let noise = rng.gen_range(0.0..0.4);
    let rows: Vec<Vec<u8>> = (0..n)
        .map(|_| (0..j).map(|_| rng.gen_bool(density) as u8).collect())
        .collect();
    let labels: Vec<u8> = rows
        .iter()
        .map(|r| {
            let y = (r[0] == 1 && r[1] == 1) || r.get(2) == Some(&1);
            (y ^ rng.gen_bool(noise)) as u8
        })
        .collect();
    let names: Vec<String> = (0..j).map(|i| format!("x{i}")).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let data = BinaryDataset::from_rows(&name_refs, &rows, &labels).unwrap();

    let max_conj = rng.gen_range(1..=2);
    let coverage = [0.0, 0.25, 0.5][rng.gen_range(0..3)];
    let mined = mine_terms(&data, max_conj, coverage)
        .or_else(|_| mine_terms(&data, 1, 0.0))
        .unwrap();
    let mined = if mined.is_empty() {
        mine_terms(&data, 1, 0.0).unwrap()
    } else {
        mined
    };
    let vocab = truncate(&mined, 6);
    let max_len = [1, 2, 3, 3][rng.gen_range(0..4)];
    Instance {
        seed,
        data,
        vocab,
        max_len,
    }
}

pub fn truncate(vocab: &Vocabulary, k: usize) -> Vocabulary {
    Vocabulary::from_terms(
        vocab.n_examples(),
        vocab
            .terms()
            .iter()
            .take(k)
            .map(|t| (t.name.clone(), t.features.clone(), t.capture.clone())),
    )
    .unwrap()
}

/// `matches[t][n]`: whether term `t` holds on row `n`, from its feature list.
pub fn term_table(inst: &Instance) -> Vec<Vec<bool>> {
    let rows: Vec<Vec<bool>> = (0..inst.data.n_examples())
        .map(|n| inst.data.row(n))
        .collect();
    inst.vocab
        .terms()
        .iter()
        .map(|t| {
            let fs = t.features.as_ref().expect("mined terms carry features");
            rows.iter().map(|r| fs.iter().all(|&f| r[f])).collect()
        })
        .collect()
}

pub fn labels(data: &BinaryDataset) -> Vec<u8> {
    data.labels().iter().map(u8::from).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OracleList {
    pub rules: Vec<(usize, u8)>,
    pub default: u8,
}

impl OracleList {
    pub fn len(&self) -> usize {
        self.rules.len() + 1
    }

    pub fn key(&self) -> String {
        key(self.rules.iter().copied(), self.default)
    }

    pub fn term_set(&self) -> Vec<usize> {
        let mut v: Vec<_> = self.rules.iter().map(|r| r.0).collect();
        v.sort_unstable();
        v
    }

    pub fn to_rule_list(&self) -> RuleList {
        RuleList::new(
            self.rules.iter().map(|&(t, y)| Rule::new(t, y)).collect(),
            self.default,
        )
    }
}

pub fn key(rules: impl IntoIterator<Item = (usize, u8)>, default: u8) -> String {
    let mut s = String::new();
    for (t, y) in rules {
        s.push_str(&format!("{t}:{y},"));
    }
    s.push_str(&format!("|{default}"));
    s
}

pub fn list_key(list: &RuleList) -> String {
    key(list.rules.iter().map(|r| (r.term, r.label)), list.default)
}

/// Every rule list with distinct terms and at most `max_len - 1` rules.
pub fn all_lists(n_terms: usize, max_len: usize) -> Vec<OracleList> {
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    fn rec(n_terms: usize, slots: usize, prefix: &mut Vec<(usize, u8)>, out: &mut Vec<OracleList>) {
        for default in [0, 1] {
            out.push(OracleList {
                rules: prefix.clone(),
                default,
            });
        }
        if prefix.len() == slots {
            return;
        }
        for t in 0..n_terms {
            if prefix.iter().any(|r| r.0 == t) {
                continue;
            }
            for y in [0, 1] {
                prefix.push((t, y));
                rec(n_terms, slots, prefix, out);
                prefix.pop();
            }
        }
    }
    rec(n_terms, max_len.saturating_sub(1), &mut prefix, &mut out);
    out
}

pub fn predict_row(list: &OracleList, table: &[Vec<bool>], n: usize) -> u8 {
    list.rules
        .iter()
        .find(|&&(t, _)| table[t][n])
        .map(|&(_, y)| y)
        .unwrap_or(list.default)
}

pub fn predictions(list: &OracleList, table: &[Vec<bool>], n_rows: usize) -> Vec<u8> {
    (0..n_rows).map(|n| predict_row(list, table, n)).collect()
}

pub fn errors(list: &OracleList, table: &[Vec<bool>], y: &[u8]) -> u64 {
    (0..y.len())
        .filter(|&n| predict_row(list, table, n) != y[n])
        .count() as u64
}

/// Each rule newly captures at least one row, and consecutive rules with the
/// same label have increasing term ids.
pub fn is_canonical(list: &OracleList, table: &[Vec<bool>], n_rows: usize) -> bool {
    let mut taken = vec![false; n_rows];
    for (i, &(t, y)) in list.rules.iter().enumerate() {
        if i > 0 {
            let (pt, py) = list.rules[i - 1];
            if py == y && pt > t {
                return false;
            }
        }
        let mut fresh = 0;
        for n in 0..n_rows {
            if table[t][n] && !taken[n] {
                fresh += 1;
                taken[n] = true;
            }
        }
        if fresh == 0 {
            return false;
        }
    }
    true
}

/// Canonical lists within `max_errors`, keyed by their serialization.
pub fn rashomon_set(inst: &Instance, max_errors: u64) -> BTreeSet<String> {
    let table = term_table(inst);
    let y = labels(&inst.data);
    all_lists(inst.vocab.len(), inst.max_len)
        .into_iter()
        .filter(|l| is_canonical(l, &table, y.len()) && errors(l, &table, &y) <= max_errors)
        .map(|l| l.key())
        .collect()
}

/// Smallest error count over all rule lists of the instance.
pub fn min_errors(inst: &Instance) -> u64 {
    let table = term_table(inst);
    let y = labels(&inst.data);
    all_lists(inst.vocab.len(), inst.max_len)
        .iter()
        .map(|l| errors(l, &table, &y))
        .min()
        .unwrap()
}

/// `floor(pct/100 * n)` in integers.
pub fn pct_of(pct: u64, n: u64) -> u64 {
    pct * n / 100
}

/// Objective `errors/N + lambda*len` scaled by `1000*N`, with `lambda = milli/1000`.
pub fn scaled_objective(errors: u64, len: usize, milli: u64, n: u64) -> u64 {
    errors * 1000 + milli * n * len as u64
}

/// Minimum scaled objective over every rule list (canonical or not).
pub fn min_objective(inst: &Instance, milli: u64) -> u64 {
    let table = term_table(inst);
    let y = labels(&inst.data);
    let n = y.len() as u64;
    all_lists(inst.vocab.len(), inst.max_len)
        .iter()
        .map(|l| scaled_objective(errors(l, &table, &y), l.len(), milli, n))
        .min()
        .unwrap()
}

/// Scaled objective of an arbitrary rule list, re-evaluated row by row.
pub fn oracle_objective(inst: &Instance, list: &RuleList, milli: u64) -> u64 {
    let table = term_table(inst);
    let y = labels(&inst.data);
    let ol = OracleList {
        rules: list.rules.iter().map(|r| (r.term, r.label)).collect(),
        default: list.default,
    };
    scaled_objective(errors(&ol, &table, &y), ol.len(), milli, y.len() as u64)
}

/// For every term set reachable by a canonical list, its smallest scaled
/// objective; returned sorted ascending.
pub fn term_set_objectives(inst: &Instance, milli: u64) -> Vec<u64> {
    let table = term_table(inst);
    let y = labels(&inst.data);
    let n = y.len() as u64;
    let mut best: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    for l in all_lists(inst.vocab.len(), inst.max_len) {
        if !is_canonical(&l, &table, y.len()) {
            continue;
        }
        let s = scaled_objective(errors(&l, &table, &y), l.len(), milli, n);
        best.entry(l.term_set())
            .and_modify(|v| *v = (*v).min(s))
            .or_insert(s);
    }
    let mut v: Vec<u64> = best.into_values().collect();
    v.sort_unstable();
    v
}

/// Ambiguity and discrepancy by direct definition, as counts.
pub fn multiplicity_counts(reference: &[u8], members: &[Vec<u8>]) -> (u64, u64) {
    let n = reference.len();
    let ambiguous = (0..n)
        .filter(|&i| members.iter().any(|m| m[i] != reference[i]))
        .count() as u64;
    let worst = members
        .iter()
        .map(|m| (0..n).filter(|&i| m[i] != reference[i]).count() as u64)
        .max()
        .unwrap_or(0);
    (ambiguous, worst)
}

pub fn bits_of(v: &[u8]) -> Bits {
    Bits::from_bools(v.iter().map(|&b| b == 1).collect::<Vec<_>>())
}
