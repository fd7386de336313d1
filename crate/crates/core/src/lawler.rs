//! Top-K rule lists by Lawler's method, with the branch-and-bound optimizer
//! as the black-box solver.
//!
//! A queue holds subproblems keyed by the objective of their optimal rule
//! list. Popping the minimum yields the next answer unless its term set was
//! already reported; the subproblem is then split and each part re-solved.
//!
//! Two ways of splitting are available:
//!
//! * [`Branching::TermRemoval`] re-solves once per term `f` of the popped
//!   rule list with `f` removed from the allowed terms. The parts overlap and
//!   never contain a strict superset of the popped term set, so rule lists
//!   that extend an earlier answer's terms are unreachable.
//! * [`Branching::Partition`] (the default) orders the popped list's free
//!   terms `s1..sm`; part `i` forbids `s_i` and requires `s1..s_{i-1}`, and a
//!   last part requires all of them plus at least one more term. The parts
//!   are disjoint and cover everything except the popped term set, so the
//!   answers are exactly the K best term sets.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::dataset::BinaryDataset;
use crate::optimizer::{fit_constrained, Constraints, OptResult, OptimizerConfig, OptimizerError};
use crate::rulelist::{Regularizer, RuleList, RuleListRecord};
use crate::vocabulary::{TermId, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branching {
    TermRemoval,
    #[default]
    Partition,
}

#[derive(Debug, Clone)]
pub struct TopKConfig {
    pub k: usize,
    pub optimizer: OptimizerConfig,
    pub branching: Branching,
    /// Overall wall-clock budget; each inner fit gets what remains.
    pub timeout: Option<Duration>,
}

impl TopKConfig {
    pub fn new(k: usize, max_total_len: usize, regularizer: Regularizer) -> Self {
        TopKConfig {
            k,
            optimizer: OptimizerConfig::new(max_total_len, regularizer),
            branching: Branching::default(),
            timeout: None,
        }
    }
}

/// A queued subproblem and its solution.
#[derive(Debug, Clone)]
pub struct LawlerNode {
    pub score: u128,
    pub rule_list: RuleList,
    pub result: OptResult,
    pub constraints: Constraints,
    /// Terms removed along the path from the root.
    pub excluded: Vec<TermId>,
}

#[derive(Debug, Clone)]
pub struct Answer {
    /// Exact objective, in the optimizer's scaled units.
    pub score: u128,
    pub objective: f64,
    pub rule_list: RuleList,
    pub errors: u64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct TopKStats {
    pub pops: u64,
    pub refits: u64,
    #[serde(rename = "elapsed_ms", serialize_with = "ser_ms")]
    pub elapsed: Duration,
    pub peak_seen_sets: usize,
    pub peak_queue_len: usize,
    /// Bytes held by the seen term sets at the end of the run.
    pub seen_sets_bytes: usize,
}

fn ser_ms<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1e3)
}

#[derive(Debug, Clone)]
pub struct TopKResult {
    pub answers: Vec<Answer>,
    pub seen_term_sets: HashSet<Vec<TermId>>,
    /// False if the timeout fired before K answers or an empty queue.
    pub complete: bool,
    pub stats: TopKStats,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnswerRecord {
    pub rank: usize,
    pub score: f64,
    #[serde(flatten)]
    pub rule_list: RuleListRecord,
}

impl TopKResult {
    pub fn answer_records(
        &self,
        vocab: &Vocabulary,
        reg: Regularizer,
        n: u64,
    ) -> Vec<AnswerRecord> {
        self.answers
            .iter()
            .enumerate()
            .map(|(i, a)| AnswerRecord {
                rank: i + 1,
                score: a.objective,
                rule_list: a.rule_list.to_record(
                    vocab,
                    crate::rulelist::Evaluation {
                        errors: a.errors,
                        n,
                    },
                    reg,
                ),
            })
            .collect()
    }
}

fn set_bytes(set: &HashSet<Vec<TermId>>) -> usize {
    set.capacity() * std::mem::size_of::<Vec<TermId>>()
        + set
            .iter()
            .map(|s| s.capacity() * std::mem::size_of::<TermId>())
            .sum::<usize>()
}

struct Queued(LawlerNode);

impl PartialEq for Queued {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    fn cmp(&self, _: &Self) -> std::cmp::Ordering {
        std::cmp::Ordering::Equal
    }
}

pub fn topk(
    dataset: &BinaryDataset,
    vocab: &Vocabulary,
    config: &TopKConfig,
) -> Result<TopKResult, OptimizerError> {
    if vocab.is_empty() {
        return Err(OptimizerError::EmptyVocabulary);
    }
    let started = Instant::now();
    let deadline = config.timeout.map(|t| started + t);
    let mut stats = TopKStats::default();
    let mut answers = Vec::new();
    let mut seen: HashSet<Vec<TermId>> = HashSet::new();
    let mut queue: BinaryHeap<Reverse<(u128, u64, Queued)>> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut complete = true;

    let expired = |deadline: Option<Instant>| deadline.is_some_and(|d| Instant::now() >= d);

    // Solves one subproblem within the remaining budget. `Ok(None)` means
    // infeasible; `Err(())` means the budget ran out.
    let solve = |constraints: &Constraints,
                 stats: &mut TopKStats|
     -> Result<Result<Option<OptResult>, ()>, OptimizerError> {
        let mut cfg = config.optimizer.clone();
        if let Some(d) = deadline {
            let now = Instant::now();
            if now >= d {
                return Ok(Err(()));
            }
            cfg.timeout = Some(d - now);
        }
        stats.refits += 1;
        let r = fit_constrained(dataset, vocab, &cfg, constraints)?;
        match r {
            Some(res) if !res.complete => Ok(Err(())),
            other => Ok(Ok(other)),
        }
    };

    if config.k == 0 {
        stats.elapsed = started.elapsed();
        return Ok(TopKResult {
            answers,
            seen_term_sets: seen,
            complete,
            stats,
        });
    }

    let root_constraints = Constraints::default();
    match solve(&root_constraints, &mut stats)? {
        Ok(Some(res)) => {
            seq += 1;
            queue.push(Reverse((
                res.best_scaled,
                seq,
                Queued(LawlerNode {
                    score: res.best_scaled,
                    rule_list: res.best.clone(),
                    result: res,
                    constraints: root_constraints,
                    excluded: Vec::new(),
                }),
            )));
        }
        Ok(None) => {}
        Err(()) => complete = false,
    }

    'outer: while complete && answers.len() < config.k {
        let Some(Reverse((_, _, Queued(node)))) = queue.pop() else {
            break;
        };
        stats.pops += 1;
        let terms = node.rule_list.term_set();
        if !seen.contains(&terms) {
            answers.push(Answer {
                score: node.score,
                objective: node.result.best_objective,
                rule_list: node.rule_list.clone(),
                errors: node.result.evaluation.errors,
            });
            seen.insert(terms.clone());
            stats.peak_seen_sets = stats.peak_seen_sets.max(seen.len());
            if answers.len() >= config.k {
                break;
            }
        }
        if expired(deadline) {
            complete = false;
            break;
        }
        for child in children(&node, &terms, vocab.len(), config.branching) {
            match solve(&child.0, &mut stats)? {
                Ok(Some(res)) => {
                    seq += 1;
                    queue.push(Reverse((
                        res.best_scaled,
                        seq,
                        Queued(LawlerNode {
                            score: res.best_scaled,
                            rule_list: res.best.clone(),
                            result: res,
                            constraints: child.0,
                            excluded: child.1,
                        }),
                    )));
                    stats.peak_queue_len = stats.peak_queue_len.max(queue.len());
                }
                Ok(None) => {}
                Err(()) => {
                    complete = false;
                    break 'outer;
                }
            }
        }
    }

    stats.elapsed = started.elapsed();
    stats.seen_sets_bytes = set_bytes(&seen);
    Ok(TopKResult {
        answers,
        seen_term_sets: seen,
        complete,
        stats,
    })
}

fn children(
    node: &LawlerNode,
    terms: &[TermId],
    n_terms: usize,
    branching: Branching,
) -> Vec<(Constraints, Vec<TermId>)> {
    let parent = &node.constraints;
    let allowed = parent
        .allowed
        .clone()
        .unwrap_or_else(|| vec![true; n_terms]);
    let without = |f: TermId| {
        let mut a = allowed.clone();
        a[f] = false;
        a
    };
    let excluding = |f: TermId| {
        let mut e = node.excluded.clone();
        e.push(f);
        e
    };
    match branching {
        Branching::TermRemoval => terms
            .iter()
            .map(|&f| {
                (
                    Constraints {
                        allowed: Some(without(f)),
                        ..parent.clone()
                    },
                    excluding(f),
                )
            })
            .collect(),
        Branching::Partition => {
            let free: Vec<TermId> = terms
                .iter()
                .copied()
                .filter(|t| !parent.required.contains(t))
                .collect();
            let mut out = Vec::with_capacity(free.len() + 1);
            let mut required = parent.required.clone();
            for &f in &free {
                out.push((
                    Constraints {
                        allowed: Some(without(f)),
                        required: required.clone(),
                        min_terms: parent.min_terms,
                    },
                    excluding(f),
                ));
                required.push(f);
            }
            out.push((
                Constraints {
                    allowed: Some(allowed.clone()),
                    required,
                    min_terms: parent.min_terms.max(terms.len() + 1),
                },
                node.excluded.clone(),
            ));
            out
        }
    }
}
