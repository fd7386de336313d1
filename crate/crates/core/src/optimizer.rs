//! Branch-and-bound search for the single rule list minimizing
//! `risk + lambda * length`.
//!
//! Prefixes are explored best-first on a priority queue keyed by their
//! objective lower bound. When the queue reaches `max_queue` entries, new
//! children are expanded depth-first in place instead of being enqueued, so
//! memory stays bounded at the cost of a looser exploration order.
//!
//! The search space is the same one the enumerator walks: no term repeats,
//! equal-label runs are in increasing term order, and every non-default rule
//! newly captures at least `min_capture` examples.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::dataset::BinaryDataset;
use crate::rulelist::{
    is_canonical, Evaluation, Label, Prefix, Regularizer, Rule, RuleList, RuleListRecord, LABELS,
};
use crate::vocabulary::{TermId, Vocabulary};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("maximum rule-list length must be at least 1")]
    InvalidLength,
    #[error("vocabulary captures have {vocab} examples but the dataset has {dataset}")]
    SizeMismatch { vocab: usize, dataset: usize },
}

#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    /// Maximum total length `l`, default rule included.
    pub max_total_len: usize,
    pub regularizer: Regularizer,
    pub min_capture: u64,
    pub timeout: Option<Duration>,
    pub max_queue: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_total_len: 3,
            regularizer: Regularizer::none(),
            min_capture: 1,
            timeout: None,
            max_queue: 100_000,
        }
    }
}

impl OptimizerConfig {
    pub fn new(max_total_len: usize, regularizer: Regularizer) -> Self {
        OptimizerConfig {
            max_total_len,
            regularizer,
            ..Default::default()
        }
    }
}

/// Restricts the search to rule lists whose term set `S` satisfies
/// `required ⊆ S ⊆ allowed` and `|S| >= min_terms`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Constraints {
    /// `None` allows every term.
    pub allowed: Option<Vec<bool>>,
    pub required: Vec<TermId>,
    pub min_terms: usize,
}

impl Constraints {
    pub fn allowing(allowed: Vec<bool>) -> Self {
        Constraints {
            allowed: Some(allowed),
            ..Default::default()
        }
    }

    fn is_allowed(&self, t: TermId) -> bool {
        self.allowed.as_ref().is_none_or(|a| a[t])
    }
}

#[derive(Debug, Clone)]
pub struct OptResult {
    pub best: RuleList,
    pub evaluation: Evaluation,
    pub best_objective: f64,
    /// Exact objective in units of `1 / (N * regularizer.unit())`.
    pub best_scaled: u128,
    pub nodes_visited: u64,
    pub elapsed: Duration,
    /// False when the timeout fired; `best` is then only the best found.
    pub complete: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptResultRecord {
    #[serde(flatten)]
    pub rule_list: RuleListRecord,
    pub nodes_visited: u64,
    pub elapsed_ms: f64,
    pub complete: bool,
}

impl OptResult {
    pub fn to_record(&self, vocab: &Vocabulary, reg: Regularizer) -> OptResultRecord {
        OptResultRecord {
            rule_list: self.best.to_record(vocab, self.evaluation, reg),
            nodes_visited: self.nodes_visited,
            elapsed_ms: self.elapsed.as_secs_f64() * 1e3,
            complete: self.complete,
        }
    }
}

/// The optimal rule list over the whole vocabulary.
pub fn fit_optimal(
    dataset: &BinaryDataset,
    vocab: &Vocabulary,
    config: &OptimizerConfig,
) -> Result<OptResult, OptimizerError> {
    if vocab.is_empty() {
        return Err(OptimizerError::EmptyVocabulary);
    }
    Ok(
        fit_constrained(dataset, vocab, config, &Constraints::default())?
            .expect("the constant rule lists are always feasible without constraints"),
    )
}

/// The optimal rule list under `constraints`, or `None` if no rule list of
/// the search space satisfies them.
pub fn fit_constrained(
    dataset: &BinaryDataset,
    vocab: &Vocabulary,
    config: &OptimizerConfig,
    constraints: &Constraints,
) -> Result<Option<OptResult>, OptimizerError> {
    if config.max_total_len == 0 {
        return Err(OptimizerError::InvalidLength);
    }
    if vocab.n_examples() != dataset.n_examples() {
        return Err(OptimizerError::SizeMismatch {
            vocab: vocab.n_examples(),
            dataset: dataset.n_examples(),
        });
    }
    let started = Instant::now();
    let mut search = Search {
        dataset,
        vocab,
        config,
        constraints,
        n: dataset.n_examples() as u64,
        deadline: config.timeout.map(|t| started + t),
        best: None,
        heap: BinaryHeap::new(),
        seq: 0,
        nodes: 0,
        timed_out: false,
    };
    search.run(Prefix::empty(dataset.n_examples()));
    let timed_out = search.timed_out;
    let nodes = search.nodes;
    Ok(search.best.map(|(scaled, list)| {
        let evaluation = Evaluation {
            errors: errors_of(&list, dataset, vocab),
            n: dataset.n_examples() as u64,
        };
        OptResult {
            best_objective: config.regularizer.value(
                evaluation.errors,
                list.len() as u64,
                evaluation.n,
            ),
            best: list,
            evaluation,
            best_scaled: scaled,
            nodes_visited: nodes,
            elapsed: started.elapsed(),
            complete: !timed_out,
        }
    }))
}

fn errors_of(list: &RuleList, dataset: &BinaryDataset, vocab: &Vocabulary) -> u64 {
    crate::rulelist::misclassifications(list, dataset, vocab)
}

struct Search<'a> {
    dataset: &'a BinaryDataset,
    vocab: &'a Vocabulary,
    config: &'a OptimizerConfig,
    constraints: &'a Constraints,
    n: u64,
    deadline: Option<Instant>,
    best: Option<(u128, RuleList)>,
    heap: BinaryHeap<Reverse<(u128, u64, QueuedPrefix)>>,
    seq: u64,
    nodes: u64,
    timed_out: bool,
}

// Heap payload; ordering is decided by (bound, seq) alone.
struct QueuedPrefix(Prefix);

impl PartialEq for QueuedPrefix {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}
impl Eq for QueuedPrefix {}
impl PartialOrd for QueuedPrefix {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QueuedPrefix {
    fn cmp(&self, _: &Self) -> std::cmp::Ordering {
        std::cmp::Ordering::Equal
    }
}

impl Search<'_> {
    fn run(&mut self, root: Prefix) {
        self.expand(&root);
        while let Some(Reverse((bound, _, QueuedPrefix(prefix)))) = self.heap.pop() {
            if self.check_deadline() {
                return;
            }
            if self.best.as_ref().is_some_and(|(b, _)| bound > *b) {
                // every remaining node has a bound at least this large
                break;
            }
            self.expand(&prefix);
        }
    }

    fn check_deadline(&mut self) -> bool {
        if !self.timed_out {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    self.timed_out = true;
                }
            }
        }
        self.timed_out
    }

    fn offer(&mut self, scaled: u128, rules: &[Rule], default: Label) {
        let better = match &self.best {
            None => true,
            Some((b, list)) => {
                scaled < *b
                    || (scaled == *b
                        && RuleList::new(rules.to_vec(), default)
                            .tie_break_cmp(list)
                            .is_lt())
            }
        };
        if better {
            self.best = Some((scaled, RuleList::new(rules.to_vec(), default)));
        }
    }

    fn satisfies(&self, prefix: &Prefix) -> bool {
        prefix.len() >= self.constraints.min_terms
            && self
                .constraints
                .required
                .iter()
                .all(|&t| prefix.contains(t))
    }

    fn missing_required(&self, rules: &[Rule]) -> usize {
        self.constraints
            .required
            .iter()
            .filter(|&&t| !rules.iter().any(|r| r.term == t))
            .count()
    }

    /// Scores both completions of `prefix` and handles its children.
    fn expand(&mut self, prefix: &Prefix) {
        self.nodes += 1;
        if self.nodes.is_multiple_of(1024) && self.check_deadline() {
            return;
        }
        let k = prefix.len();
        let reg = self.config.regularizer;
        if self.satisfies(prefix) {
            for y in LABELS {
                let errors = prefix.errors_with_default(y, self.dataset);
                let scaled = reg.scaled(errors, k as u64 + 1, self.n);
                self.offer(scaled, prefix.rules(), y);
            }
        }
        if k + 1 >= self.config.max_total_len {
            return;
        }
        let slots_after_child = self.config.max_total_len - 1 - (k + 1);
        let labels = self.dataset.labels();
        for t in 0..self.vocab.len() {
            if !self.constraints.is_allowed(t) || prefix.contains(t) {
                continue;
            }
            let (fresh, fresh_pos) = self
                .vocab
                .capture(t)
                .count_new_and_positive(prefix.captured(), labels);
            if fresh < self.config.min_capture {
                continue;
            }
            for y in LABELS {
                let rule = Rule::new(t, y);
                if !is_canonical(prefix.rules(), rule) {
                    continue;
                }
                let wrong = if y == 1 { fresh - fresh_pos } else { fresh_pos };
                let bound = reg.scaled(prefix.errors_captured() + wrong, k as u64 + 2, self.n);
                if self.best.as_ref().is_some_and(|(b, _)| bound > *b) {
                    continue;
                }
                let mut child_rules = prefix.rules().to_vec();
                child_rules.push(rule);
                if self.missing_required(&child_rules) > slots_after_child {
                    continue;
                }
                let child = prefix
                    .extend(rule, self.vocab, self.dataset)
                    .expect("term checked absent from prefix");
                if self.heap.len() < self.config.max_queue {
                    self.seq += 1;
                    self.heap
                        .push(Reverse((bound, self.seq, QueuedPrefix(child))));
                } else {
                    self.expand(&child);
                }
                if self.timed_out {
                    return;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::tests::toy;
    use crate::rulelist::objective;
    use crate::vocabulary::mine_terms;

    fn toy_setup() -> (BinaryDataset, Vocabulary) {
        let d = toy();
        let v = mine_terms(&d, 1, 0.0).unwrap();
        (d, v)
    }

    #[test]
    fn toy_optimum_is_rule_on_a() {
        let (d, v) = toy_setup();
        let r = fit_optimal(&d, &v, &OptimizerConfig::new(2, Regularizer::none())).unwrap();
        assert_eq!(r.best, RuleList::new(vec![Rule::new(0, 1)], 0));
        assert_eq!(r.best_objective, 0.0);
        assert!(r.complete);
    }

    #[test]
    fn length_one_ties_break_to_label_zero() {
        let (d, v) = toy_setup();
        let r = fit_optimal(&d, &v, &OptimizerConfig::new(1, Regularizer::none())).unwrap();
        assert_eq!(r.best, RuleList::constant(0));
        assert_eq!(r.best_objective, 0.5);
    }

    #[test]
    fn heavy_penalty_selects_constant() {
        let (d, v) = toy_setup();
        let reg = Regularizer::new(10.0).unwrap();
        let r = fit_optimal(&d, &v, &OptimizerConfig::new(3, reg)).unwrap();
        assert!(r.best.rules.is_empty());
        assert_eq!(r.best_objective, objective(&r.best, &d, &v, reg));
    }

    #[test]
    fn constraints_are_honoured() {
        let (d, v) = toy_setup();
        let cfg = OptimizerConfig::new(2, Regularizer::none());
        let without_a = Constraints::allowing(vec![false, true]);
        let r = fit_constrained(&d, &v, &cfg, &without_a).unwrap().unwrap();
        assert!(r.best.terms().all(|t| t == 1));
        assert_eq!(r.evaluation.errors, 2);

        let need_b = Constraints {
            required: vec![1],
            ..Default::default()
        };
        let r = fit_constrained(&d, &v, &cfg, &need_b).unwrap().unwrap();
        assert_eq!(r.best.term_set(), vec![1]);

        let too_many = Constraints {
            min_terms: 2,
            ..Default::default()
        };
        assert!(fit_constrained(&d, &v, &cfg, &too_many).unwrap().is_none());
    }

    #[test]
    fn errors() {
        let (d, v) = toy_setup();
        let empty = Vocabulary::from_terms(4, vec![]).unwrap();
        assert_eq!(
            fit_optimal(&d, &empty, &OptimizerConfig::default()).unwrap_err(),
            OptimizerError::EmptyVocabulary
        );
        assert_eq!(
            fit_optimal(&d, &v, &OptimizerConfig::new(0, Regularizer::none())).unwrap_err(),
            OptimizerError::InvalidLength
        );
    }

    #[test]
    fn zero_timeout_still_returns_an_incumbent() {
        let (d, v) = toy_setup();
        let cfg = OptimizerConfig {
            timeout: Some(Duration::ZERO),
            ..OptimizerConfig::new(3, Regularizer::none())
        };
        let r = fit_optimal(&d, &v, &cfg).unwrap();
        assert!(!r.complete);
    }

    #[test]
    fn tiny_queue_falls_back_to_depth_first() {
        let d = toy();
        let v = mine_terms(&d, 2, 0.0).unwrap();
        for lambda in [0.0, 0.015, 0.1] {
            let reg = Regularizer::new(lambda).unwrap();
            let full = fit_optimal(&d, &v, &OptimizerConfig::new(3, reg)).unwrap();
            let capped = fit_optimal(
                &d,
                &v,
                &OptimizerConfig {
                    max_queue: 1,
                    ..OptimizerConfig::new(3, reg)
                },
            )
            .unwrap();
            assert_eq!(full.best, capped.best);
            assert_eq!(full.best_scaled, capped.best_scaled);
        }
    }
}
