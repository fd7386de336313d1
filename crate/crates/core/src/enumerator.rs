//! Exact enumeration of every rule list within a risk (or objective)
//! threshold.
//!
//! The walk is a depth-first traversal of prefixes. At each prefix both
//! completions with a default rule are tested against the threshold and
//! emitted on success; then, while the length budget allows, every unused
//! term is appended with either label, and the child is visited unless one of
//! the prunings rejects it:
//!
//! * min-support: the new rule must newly capture `min_capture` examples;
//! * symmetry: equal-label runs must have increasing term ids;
//! * lower bound: the errors already committed by the child prefix (plus the
//!   length penalty in objective mode) must not exceed the threshold.
//!
//! Working state is one capture buffer and one error counter per depth plus
//! the current rules, so memory does not depend on how many solutions are
//! produced. Solutions are handed to a [`SolutionSink`] as they are found.

use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::bits::Bits;
use crate::dataset::BinaryDataset;
use crate::exact::Decimal;
use crate::rulelist::{default_errors, is_canonical, Label, Regularizer, Rule, RuleList, LABELS};
use crate::vocabulary::{TermId, Vocabulary};

pub type SinkError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, Error)]
pub enum EnumError {
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("maximum rule-list length must be at least 1")]
    InvalidLength,
    #[error("vocabulary captures have {vocab} examples but the dataset has {dataset}")]
    SizeMismatch { vocab: usize, dataset: usize },
    #[error("tolerance {0} is not a finite value in [0, 1]")]
    InvalidEpsilon(f64),
    #[error("tolerances must be sorted ascending")]
    UnsortedEpsilons,
    #[error("solution sink failed: {0}")]
    SinkFailure(SinkError),
}

/// Acceptance test applied to complete rule lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threshold {
    /// Misclassification count at most this value.
    Errors(u64),
    /// `scaled_objective * den <= num`, where `scaled_objective` is
    /// [`Regularizer::scaled`] of the rule list.
    Objective {
        regularizer: Regularizer,
        num: u128,
        den: u128,
    },
}

impl Threshold {
    /// Every rule list passes.
    pub fn unbounded(n_examples: usize) -> Self {
        Threshold::Errors(n_examples as u64)
    }

    /// `objective(d) <= reference_objective + epsilon`, exactly.
    pub fn objective_within(
        regularizer: Regularizer,
        reference_scaled: u128,
        epsilon: f64,
        n_examples: usize,
    ) -> Result<Self, EnumError> {
        let eps = Decimal::from_f64(epsilon).map_err(|_| EnumError::InvalidEpsilon(epsilon))?;
        let den = eps.denom as u128;
        let num = reference_scaled * den
            + eps.numer as u128 * n_examples as u128 * regularizer.unit() as u128;
        Ok(Threshold::Objective {
            regularizer,
            num,
            den,
        })
    }

    /// Whether a rule list with these counts passes.
    #[inline]
    pub fn admits(&self, errors: u64, length: u64, n: u64) -> bool {
        match *self {
            Threshold::Errors(max) => errors <= max,
            Threshold::Objective {
                regularizer,
                num,
                den,
            } => regularizer.scaled(errors, length, n) * den <= num,
        }
    }
}

/// Individually switchable prunings. All on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Prunings {
    pub lower_bound: bool,
    pub min_support: bool,
    pub symmetry: bool,
}

impl Default for Prunings {
    fn default() -> Self {
        Prunings {
            lower_bound: true,
            min_support: true,
            symmetry: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EmitOrder {
    /// Traversal order; constant working space.
    #[default]
    Dfs,
    /// Buffered and sorted by (errors, length, rules, default). Holds every
    /// solution in memory.
    Sorted,
}

#[derive(Debug, Clone)]
pub struct EnumConfig {
    /// Maximum total length `l`, default rule included.
    pub max_total_len: usize,
    pub threshold: Threshold,
    pub min_capture: u64,
    pub prunings: Prunings,
    pub emit_order: EmitOrder,
    pub timeout: Option<Duration>,
}

impl EnumConfig {
    pub fn new(max_total_len: usize, threshold: Threshold) -> Self {
        EnumConfig {
            max_total_len,
            threshold,
            min_capture: 1,
            prunings: Prunings::default(),
            emit_order: EmitOrder::Dfs,
            timeout: None,
        }
    }
}

/// A rule list found by the walk. Borrowed from the walker's state; call
/// [`Solution::to_rule_list`] to keep it.
#[derive(Debug, Clone, Copy)]
pub struct Solution<'a> {
    pub rules: &'a [Rule],
    pub default: Label,
    pub errors: u64,
}

impl Solution<'_> {
    pub fn to_rule_list(&self) -> RuleList {
        RuleList::new(self.rules.to_vec(), self.default)
    }

    pub fn len(&self) -> usize {
        self.rules.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

pub trait SolutionSink {
    fn accept(&mut self, solution: &Solution<'_>) -> Result<(), SinkError>;
}

impl<F> SolutionSink for F
where
    F: FnMut(&Solution<'_>) -> Result<(), SinkError>,
{
    fn accept(&mut self, solution: &Solution<'_>) -> Result<(), SinkError> {
        self(solution)
    }
}

/// Counts solutions and nothing else.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct CountingSink(pub u64);

impl SolutionSink for CountingSink {
    fn accept(&mut self, _: &Solution<'_>) -> Result<(), SinkError> {
        self.0 += 1;
        Ok(())
    }
}

/// Stores every solution.
#[derive(Debug, Default, Clone)]
pub struct CollectingSink(pub Vec<(RuleList, u64)>);

impl SolutionSink for CollectingSink {
    fn accept(&mut self, s: &Solution<'_>) -> Result<(), SinkError> {
        self.0.push((s.to_rule_list(), s.errors));
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EnumStats {
    /// Prefixes visited (the candidate count of the search).
    pub candidates_visited: u64,
    /// Complete rule lists tested against the threshold.
    pub lists_evaluated: u64,
    pub solutions: u64,
    #[serde(rename = "elapsed_ms", serialize_with = "ser_ms")]
    pub elapsed: Duration,
    /// Deepest prefix length reached.
    pub peak_queue_depth: usize,
    /// Bytes of walker state allocated (capture buffers, rule stack, masks).
    pub peak_live_bytes: usize,
    pub complete: bool,
}

fn ser_ms<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1e3)
}

impl EnumStats {
    fn merge(&mut self, other: &EnumStats) {
        self.candidates_visited += other.candidates_visited;
        self.lists_evaluated += other.lists_evaluated;
        self.solutions += other.solutions;
        self.peak_queue_depth = self.peak_queue_depth.max(other.peak_queue_depth);
        self.peak_live_bytes = self.peak_live_bytes.max(other.peak_live_bytes);
        self.complete &= other.complete;
    }
}

fn validate(
    dataset: &BinaryDataset,
    vocab: &Vocabulary,
    config: &EnumConfig,
) -> Result<(), EnumError> {
    if vocab.is_empty() {
        return Err(EnumError::EmptyVocabulary);
    }
    if config.max_total_len == 0 {
        return Err(EnumError::InvalidLength);
    }
    if vocab.n_examples() != dataset.n_examples() {
        return Err(EnumError::SizeMismatch {
            vocab: vocab.n_examples(),
            dataset: dataset.n_examples(),
        });
    }
    Ok(())
}

/// Streams every rule list of length at most `max_total_len` that passes the
/// threshold to `sink`, each exactly once.
pub fn enumerate_rashomon<S: SolutionSink>(
    dataset: &BinaryDataset,
    vocab: &Vocabulary,
    config: &EnumConfig,
    sink: &mut S,
) -> Result<EnumStats, EnumError> {
    validate(dataset, vocab, config)?;
    let started = Instant::now();
    let deadline = config.timeout.map(|t| started + t);
    let mut stats = match config.emit_order {
        EmitOrder::Dfs => {
            let mut walker = Walker::new(dataset, vocab, config, deadline, sink);
            walker.run(&[])?;
            walker.stats
        }
        EmitOrder::Sorted => {
            let mut buffer = CollectingSink::default();
            let mut walker = Walker::new(dataset, vocab, config, deadline, &mut buffer);
            walker.run(&[])?;
            let stats = walker.stats;
            buffer
                .0
                .sort_by(|(a, ea), (b, eb)| ea.cmp(eb).then_with(|| a.tie_break_cmp(b)));
            for (list, errors) in &buffer.0 {
                sink.accept(&Solution {
                    rules: &list.rules,
                    default: list.default,
                    errors: *errors,
                })
                .map_err(EnumError::SinkFailure)?;
            }
            stats
        }
    };
    stats.elapsed = started.elapsed();
    Ok(stats)
}

/// Runs the first-rule branches on `threads` workers, one sink per branch.
///
/// Sinks come back in branch order; replaying them in sequence reproduces
/// the single-threaded traversal order exactly. The root's constant rule
/// lists go to the first sink.
pub fn enumerate_parallel<S, F>(
    dataset: &BinaryDataset,
    vocab: &Vocabulary,
    config: &EnumConfig,
    threads: usize,
    make_sink: F,
) -> Result<(Vec<S>, EnumStats), EnumError>
where
    S: SolutionSink + Send,
    F: Fn() -> S + Sync,
{
    use rayon::prelude::*;

    validate(dataset, vocab, config)?;
    let started = Instant::now();
    let deadline = config.timeout.map(|t| started + t);

    // Root: constants only, no branching.
    let mut root_sink = make_sink();
    let mut root_stats = {
        let mut w = Walker::new(dataset, vocab, config, deadline, &mut root_sink);
        w.visit_root_only()?;
        w.stats
    };

    let branches: Vec<Rule> = if config.max_total_len >= 2 {
        (0..vocab.len())
            .flat_map(|t| LABELS.map(|y| Rule::new(t, y)))
            .collect()
    } else {
        Vec::new()
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool");
    let results: Vec<Result<Option<(S, EnumStats)>, EnumError>> = pool.install(|| {
        branches
            .par_iter()
            .map(|&rule| {
                let mut sink = make_sink();
                let stats = {
                    let mut w = Walker::new(dataset, vocab, config, deadline, &mut sink);
                    if !w.admits_child(rule) {
                        return Ok(None);
                    }
                    w.run(&[rule])?;
                    w.stats
                };
                Ok(Some((sink, stats)))
            })
            .collect()
    });

    let mut sinks = vec![root_sink];
    for r in results {
        if let Some((sink, stats)) = r? {
            root_stats.merge(&stats);
            sinks.push(sink);
        }
    }
    root_stats.elapsed = started.elapsed();
    Ok((sinks, root_stats))
}

struct Walker<'a, S> {
    dataset: &'a BinaryDataset,
    vocab: &'a Vocabulary,
    config: &'a EnumConfig,
    deadline: Option<Instant>,
    sink: &'a mut S,
    n: u64,
    max_prefix_len: usize,
    min_capture: u64,
    rules: Vec<Rule>,
    captured: Vec<Bits>,
    errors: Vec<u64>,
    in_prefix: Vec<bool>,
    stats: EnumStats,
}

impl<'a, S: SolutionSink> Walker<'a, S> {
    fn new(
        dataset: &'a BinaryDataset,
        vocab: &'a Vocabulary,
        config: &'a EnumConfig,
        deadline: Option<Instant>,
        sink: &'a mut S,
    ) -> Self {
        let max_prefix_len = config.max_total_len - 1;
        let n = dataset.n_examples();
        let captured: Vec<Bits> = (0..=max_prefix_len).map(|_| Bits::zeros(n)).collect();
        let rules = Vec::with_capacity(max_prefix_len);
        let errors = vec![0; max_prefix_len + 1];
        let in_prefix = vec![false; vocab.len()];
        let live = captured.iter().map(Bits::heap_bytes).sum::<usize>()
            + captured.capacity() * std::mem::size_of::<Bits>()
            + rules.capacity() * std::mem::size_of::<Rule>()
            + errors.capacity() * std::mem::size_of::<u64>()
            + in_prefix.capacity();
        Walker {
            dataset,
            vocab,
            config,
            deadline,
            sink,
            n: n as u64,
            max_prefix_len,
            min_capture: if config.prunings.min_support {
                config.min_capture
            } else {
                0
            },
            rules,
            captured,
            errors,
            in_prefix,
            stats: EnumStats {
                peak_live_bytes: live,
                complete: true,
                ..Default::default()
            },
        }
    }

    fn out_of_time(&mut self) -> bool {
        if let Some(d) = self.deadline {
            if self.stats.complete && Instant::now() >= d {
                self.stats.complete = false;
            }
        }
        !self.stats.complete
    }

    /// Walks the subtree under `start` (which must pass every pruning).
    fn run(&mut self, start: &[Rule]) -> Result<(), EnumError> {
        for &r in start {
            let k = self.rules.len();
            let (child_errors, _) = self.child_errors(k, r);
            self.push(k, r, child_errors);
        }
        self.visit(start.len())
    }

    fn visit_root_only(&mut self) -> Result<(), EnumError> {
        if self.out_of_time() {
            return Ok(());
        }
        self.stats.candidates_visited += 1;
        self.emit_completions(0)
    }

    /// Checks a first rule against the prunings, as the root would.
    fn admits_child(&mut self, rule: Rule) -> bool {
        let (child_errors, fresh) = self.child_errors(0, rule);
        fresh >= self.min_capture && self.passes_bound(child_errors, 1)
    }

    #[inline]
    fn child_errors(&self, k: usize, rule: Rule) -> (u64, u64) {
        let (fresh, fresh_pos) = self
            .vocab
            .capture(rule.term)
            .count_new_and_positive(&self.captured[k], self.dataset.labels());
        let wrong = if rule.label == 1 {
            fresh - fresh_pos
        } else {
            fresh_pos
        };
        (self.errors[k] + wrong, fresh)
    }

    #[inline]
    fn passes_bound(&self, child_errors: u64, child_len: usize) -> bool {
        !self.config.prunings.lower_bound
            || self
                .config
                .threshold
                .admits(child_errors, child_len as u64 + 1, self.n)
    }

    fn push(&mut self, k: usize, rule: Rule, child_errors: u64) {
        let (lo, hi) = self.captured.split_at_mut(k + 1);
        hi[0].assign_or(&lo[k], self.vocab.capture(rule.term));
        self.errors[k + 1] = child_errors;
        self.rules.push(rule);
        self.in_prefix[rule.term] = true;
    }

    fn pop(&mut self) {
        let rule = self.rules.pop().expect("non-empty prefix");
        self.in_prefix[rule.term] = false;
    }

    fn emit_completions(&mut self, k: usize) -> Result<(), EnumError> {
        for y in LABELS {
            let errors = self.errors[k] + default_errors(&self.captured[k], y, self.dataset);
            self.stats.lists_evaluated += 1;
            if self.config.threshold.admits(errors, k as u64 + 1, self.n) {
                self.stats.solutions += 1;
                self.sink
                    .accept(&Solution {
                        rules: &self.rules,
                        default: y,
                        errors,
                    })
                    .map_err(EnumError::SinkFailure)?;
            }
        }
        Ok(())
    }

    fn visit(&mut self, k: usize) -> Result<(), EnumError> {
        if self.out_of_time() {
            return Ok(());
        }
        self.stats.candidates_visited += 1;
        self.stats.peak_queue_depth = self.stats.peak_queue_depth.max(k);
        self.emit_completions(k)?;
        if k >= self.max_prefix_len {
            return Ok(());
        }
        for t in 0..self.vocab.len() {
            if self.in_prefix[t] {
                continue;
            }
            let (fresh, fresh_pos) = self
                .vocab
                .capture(t)
                .count_new_and_positive(&self.captured[k], self.dataset.labels());
            if fresh < self.min_capture {
                continue;
            }
            for y in LABELS {
                let rule = Rule::new(t, y);
                if self.config.prunings.symmetry && !is_canonical(&self.rules, rule) {
                    continue;
                }
                let wrong = if y == 1 { fresh - fresh_pos } else { fresh_pos };
                let child_errors = self.errors[k] + wrong;
                if !self.passes_bound(child_errors, k + 1) {
                    continue;
                }
                self.push(k, rule, child_errors);
                let r = self.visit(k + 1);
                self.pop();
                r?;
                if !self.stats.complete {
                    return Ok(());
                }
            }
        }
        Ok(())
    }
}

/// Largest misclassification count `e` with `e / n <= reference_risk + epsilon`.
///
/// The ratios come in as floats; a small guard absorbs representation error
/// so that, e.g., a reference risk of exactly `2/3` admits its own count.
pub fn compute_threshold(reference_risk: f64, epsilon: f64, n: u64) -> u64 {
    let guard = 1e-9 * (n.max(1) as f64);
    let bound = ((reference_risk + epsilon) * n as f64 + guard).floor();
    if bound <= 0.0 {
        0
    } else {
        (bound as u64).min(n)
    }
}

/// Exact form of [`compute_threshold`] from the reference's error count.
pub fn threshold_from_errors(
    reference_errors: u64,
    epsilon: f64,
    n: u64,
) -> Result<u64, EnumError> {
    let eps = Decimal::from_f64(epsilon)
        .ok()
        .filter(|e| e.le_one())
        .ok_or(EnumError::InvalidEpsilon(epsilon))?;
    Ok((reference_errors + eps.floor_mul(n)).min(n))
}

/// A tolerance sweep: one enumeration at the largest tolerance, with each
/// solution assigned to the smallest tolerance that admits it.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub epsilons: Vec<f64>,
    /// Error-count threshold per tolerance.
    pub thresholds: Vec<u64>,
    /// Cumulative solution count per tolerance, `|R_eps|`.
    pub counts: Vec<u64>,
    pub solutions: Vec<SweepSolution>,
    pub stats: EnumStats,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSolution {
    pub list: RuleList,
    pub errors: u64,
    /// Index of the smallest tolerance admitting this rule list.
    pub bucket: usize,
}

impl Sweep {
    /// The Rashomon set at tolerance index `i`.
    pub fn members(&self, i: usize) -> impl Iterator<Item = &SweepSolution> {
        self.solutions.iter().filter(move |s| s.bucket <= i)
    }
}

/// Index of the smallest threshold `>= errors`.
pub fn bucket_of(thresholds: &[u64], errors: u64) -> Option<usize> {
    thresholds.iter().position(|&t| errors <= t)
}

/// Options shared by a sweep's single enumeration.
#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub max_total_len: usize,
    pub min_capture: u64,
    pub prunings: Prunings,
    pub timeout: Option<Duration>,
}

impl SweepOptions {
    pub fn new(max_total_len: usize) -> Self {
        SweepOptions {
            max_total_len,
            min_capture: 1,
            prunings: Prunings::default(),
            timeout: None,
        }
    }
}

pub fn sweep_tolerances(
    dataset: &BinaryDataset,
    vocab: &Vocabulary,
    reference: &RuleList,
    epsilons: &[f64],
    options: &SweepOptions,
) -> Result<Sweep, EnumError> {
    if epsilons.windows(2).any(|w| w[0] > w[1]) {
        return Err(EnumError::UnsortedEpsilons);
    }
    let n = dataset.n_examples() as u64;
    let reference_errors = crate::rulelist::misclassifications(reference, dataset, vocab);
    let thresholds = epsilons
        .iter()
        .map(|&e| threshold_from_errors(reference_errors, e, n))
        .collect::<Result<Vec<_>, _>>()?;
    let max = thresholds.last().copied().unwrap_or(reference_errors);
    let config = EnumConfig {
        max_total_len: options.max_total_len,
        threshold: Threshold::Errors(max),
        min_capture: options.min_capture,
        prunings: options.prunings,
        emit_order: EmitOrder::Dfs,
        timeout: options.timeout,
    };
    let mut solutions = Vec::new();
    let mut per_bucket = vec![0u64; thresholds.len()];
    let mut sink = |s: &Solution<'_>| -> Result<(), SinkError> {
        if let Some(b) = bucket_of(&thresholds, s.errors) {
            per_bucket[b] += 1;
            solutions.push(SweepSolution {
                list: s.to_rule_list(),
                errors: s.errors,
                bucket: b,
            });
        }
        Ok(())
    };
    let stats = enumerate_rashomon(dataset, vocab, &config, &mut sink)?;
    let counts = per_bucket
        .iter()
        .scan(0u64, |acc, &c| {
            *acc += c;
            Some(*acc)
        })
        .collect();
    Ok(Sweep {
        epsilons: epsilons.to_vec(),
        thresholds,
        counts,
        solutions,
        stats,
    })
}

/// Term ids used by a solution, sorted. Convenience for grouping by term set.
pub fn term_set(rules: &[Rule]) -> Vec<TermId> {
    let mut ts: Vec<_> = rules.iter().map(|r| r.term).collect();
    ts.sort_unstable();
    ts
}
