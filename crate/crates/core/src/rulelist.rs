//! Rule-list semantics, exact risk/objective arithmetic and prefix state.
//!
//! A rule list `(t1 -> y1), ..., (tk -> yk), (true -> y0)` predicts the label
//! of the first rule whose term captures the input. Its length counts the
//! default rule, so a constant classifier has length 1.
//!
//! Risks are kept as integer misclassification counts. Objectives
//! `errors / N + lambda * length` are compared as integers in units of
//! `1 / (N * denom(lambda))`, where `lambda` is read as an exact decimal.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::Bits;
use crate::dataset::BinaryDataset;
use crate::exact::{Decimal, DecimalError};
use crate::vocabulary::{TermId, Vocabulary};

pub type Label = u8;

/// The label set, in the order every search iterates it.
pub const LABELS: [Label; 2] = [0, 1];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuleListError {
    #[error("term {0} already appears in the prefix")]
    DuplicateTerm(TermId),
    #[error("term {0} is not in the vocabulary")]
    UnknownTermId(TermId),
    #[error("unknown term `{0}`")]
    UnknownTerm(String),
    #[error("label {0} is not 0 or 1")]
    InvalidLabel(u8),
    #[error("term `{0}` has no feature structure and cannot be evaluated on a raw input")]
    OpaqueTerm(String),
    #[error("input has {found} features, expected {expected}")]
    InputLength { found: usize, expected: usize },
    #[error("invalid regularization weight: {0}")]
    Lambda(#[from] DecimalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    pub term: TermId,
    pub label: Label,
}

impl Rule {
    pub fn new(term: TermId, label: Label) -> Self {
        Rule { term, label }
    }
}

/// A complete rule list: ordered rules closed by a default label.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RuleList {
    pub rules: Vec<Rule>,
    pub default: Label,
}

impl RuleList {
    pub fn new(rules: Vec<Rule>, default: Label) -> Self {
        RuleList { rules, default }
    }

    pub fn constant(label: Label) -> Self {
        RuleList {
            rules: Vec::new(),
            default: label,
        }
    }

    /// `|d|`, counting the default rule.
    pub fn len(&self) -> usize {
        self.rules.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn terms(&self) -> impl Iterator<Item = TermId> + '_ {
        self.rules.iter().map(|r| r.term)
    }

    /// The set of terms used, sorted.
    pub fn term_set(&self) -> Vec<TermId> {
        let mut ts: Vec<_> = self.terms().collect();
        ts.sort_unstable();
        ts
    }

    /// Deterministic tie-break order: shorter first, then the
    /// lexicographically smaller `(term, label)` sequence, then the default.
    pub fn tie_break_cmp(&self, other: &RuleList) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.rules.cmp(&other.rules))
            .then_with(|| self.default.cmp(&other.default))
    }

    pub fn display<'a>(&'a self, vocab: &'a Vocabulary) -> DisplayRuleList<'a> {
        DisplayRuleList { list: self, vocab }
    }

    pub fn to_record(
        &self,
        vocab: &Vocabulary,
        eval: Evaluation,
        reg: Regularizer,
    ) -> RuleListRecord {
        RuleListRecord {
            rules: self
                .rules
                .iter()
                .map(|r| RuleRecord {
                    term: vocab.term(r.term).name.clone(),
                    label: r.label,
                })
                .collect(),
            default: self.default,
            risk: eval.risk(),
            objective: reg.value(eval.errors, self.len() as u64, eval.n),
            length: self.len(),
        }
    }

    pub fn from_record(record: &RuleListRecord, vocab: &Vocabulary) -> Result<Self, RuleListError> {
        check_label(record.default)?;
        let rules = record
            .rules
            .iter()
            .map(|r| {
                check_label(r.label)?;
                let term = vocab
                    .id_of(&r.term)
                    .ok_or_else(|| RuleListError::UnknownTerm(r.term.clone()))?;
                Ok(Rule::new(term, r.label))
            })
            .collect::<Result<_, RuleListError>>()?;
        Ok(RuleList::new(rules, record.default))
    }
}

fn check_label(y: u8) -> Result<(), RuleListError> {
    if y > 1 {
        Err(RuleListError::InvalidLabel(y))
    } else {
        Ok(())
    }
}

pub struct DisplayRuleList<'a> {
    list: &'a RuleList,
    vocab: &'a Vocabulary,
}

impl fmt::Display for DisplayRuleList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.list.rules.iter().enumerate() {
            let kw = if i == 0 { "if" } else { "else if" };
            write!(
                f,
                "{kw} {} then {}; ",
                self.vocab.term(r.term).name,
                r.label
            )?;
        }
        write!(f, "else {}", self.list.default)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleRecord {
    pub term: String,
    pub label: u8,
}

/// JSON form of a rule list. `rules` excludes the default rule; `length`
/// counts it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleListRecord {
    pub rules: Vec<RuleRecord>,
    pub default: u8,
    pub risk: f64,
    pub objective: f64,
    pub length: usize,
}

/// The regularization weight `lambda` as an exact decimal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Regularizer {
    lambda: Decimal,
}

impl Regularizer {
    pub fn new(lambda: f64) -> Result<Self, RuleListError> {
        Ok(Regularizer {
            lambda: Decimal::from_f64(lambda)?,
        })
    }

    pub fn none() -> Self {
        Regularizer {
            lambda: Decimal::ZERO,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.to_f64()
    }

    pub fn is_zero(&self) -> bool {
        self.lambda.numer == 0
    }

    /// Common denominator factor: objectives are integers in units of
    /// `1 / (n * unit())`.
    pub fn unit(&self) -> u64 {
        self.lambda.denom
    }

    /// `(errors / n + lambda * length) * n * unit()`, exactly.
    pub fn scaled(&self, errors: u64, length: u64, n: u64) -> u128 {
        errors as u128 * self.lambda.denom as u128
            + self.lambda.numer as u128 * n as u128 * length as u128
    }

    pub fn value(&self, errors: u64, length: u64, n: u64) -> f64 {
        let risk = if n == 0 {
            0.0
        } else {
            errors as f64 / n as f64
        };
        risk + self.lambda() * length as f64
    }
}

impl Default for Regularizer {
    fn default() -> Self {
        Regularizer::none()
    }
}

/// Misclassification count of a rule list on `n` examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Evaluation {
    pub errors: u64,
    pub n: u64,
}

impl Evaluation {
    pub fn risk(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.errors as f64 / self.n as f64
        }
    }
}

/// Predictions `h_d(x_n)` for every example.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PredictionVector(pub Bits);

impl PredictionVector {
    pub fn bits(&self) -> &Bits {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Label of the first rule whose term is true on `x`, else the default.
pub fn predict(list: &RuleList, x: &[bool], vocab: &Vocabulary) -> Result<Label, RuleListError> {
    for r in &list.rules {
        let term = vocab.term(r.term);
        if let Some(fs) = &term.features {
            if let Some(&max) = fs.last() {
                if max >= x.len() {
                    return Err(RuleListError::InputLength {
                        found: x.len(),
                        expected: max + 1,
                    });
                }
            }
        }
        match term.evaluate(x) {
            Some(true) => return Ok(r.label),
            Some(false) => {}
            None => return Err(RuleListError::OpaqueTerm(term.name.clone())),
        }
    }
    Ok(list.default)
}

/// Vectorized [`predict`] over the examples the vocabulary captures were
/// computed on.
pub fn prediction_vector(list: &RuleList, vocab: &Vocabulary) -> PredictionVector {
    let n = vocab.n_examples();
    let mut captured = Bits::zeros(n);
    let mut positive = Bits::zeros(n);
    for r in &list.rules {
        let fresh = vocab.capture(r.term).and_not(&captured);
        if r.label == 1 {
            positive.or_assign(&fresh);
        }
        captured.or_assign(&fresh);
    }
    if list.default == 1 {
        positive.or_assign(&captured.not());
    }
    PredictionVector(positive)
}

pub fn misclassifications(list: &RuleList, dataset: &BinaryDataset, vocab: &Vocabulary) -> u64 {
    prediction_vector(list, vocab).0.count_xor(dataset.labels())
}

pub fn evaluate(list: &RuleList, dataset: &BinaryDataset, vocab: &Vocabulary) -> Evaluation {
    Evaluation {
        errors: misclassifications(list, dataset, vocab),
        n: dataset.n_examples() as u64,
    }
}

/// `L(h_d | S)` under 0-1 loss.
pub fn empirical_risk(list: &RuleList, dataset: &BinaryDataset, vocab: &Vocabulary) -> f64 {
    evaluate(list, dataset, vocab).risk()
}

/// `L(h_d | S) + lambda * |d|`.
pub fn objective(
    list: &RuleList,
    dataset: &BinaryDataset,
    vocab: &Vocabulary,
    reg: Regularizer,
) -> f64 {
    let e = evaluate(list, dataset, vocab);
    reg.value(e.errors, list.len() as u64, e.n)
}

/// A rule-list prefix with its incremental capture state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prefix {
    rules: Vec<Rule>,
    captured: Bits,
    errors: u64,
    newly_captured: u64,
}

impl Prefix {
    pub fn empty(n_examples: usize) -> Self {
        Prefix {
            rules: Vec::new(),
            captured: Bits::zeros(n_examples),
            errors: 0,
            newly_captured: 0,
        }
    }

    pub fn from_rules(
        rules: &[Rule],
        vocab: &Vocabulary,
        dataset: &BinaryDataset,
    ) -> Result<Self, RuleListError> {
        let mut p = Prefix::empty(dataset.n_examples());
        for &r in rules {
            p = p.extend(r, vocab, dataset)?;
        }
        Ok(p)
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn captured(&self) -> &Bits {
        &self.captured
    }

    /// Captured examples misclassified by the rule that captured them.
    pub fn errors_captured(&self) -> u64 {
        self.errors
    }

    /// Examples first captured by the most recent rule.
    pub fn newly_captured(&self) -> u64 {
        self.newly_captured
    }

    pub fn contains(&self, term: TermId) -> bool {
        self.rules.iter().any(|r| r.term == term)
    }

    /// Appends `rule`, leaving `self` untouched.
    pub fn extend(
        &self,
        rule: Rule,
        vocab: &Vocabulary,
        dataset: &BinaryDataset,
    ) -> Result<Prefix, RuleListError> {
        if rule.term >= vocab.len() {
            return Err(RuleListError::UnknownTermId(rule.term));
        }
        check_label(rule.label)?;
        if self.contains(rule.term) {
            return Err(RuleListError::DuplicateTerm(rule.term));
        }
        let capture = vocab.capture(rule.term);
        let (fresh, fresh_pos) = capture.count_new_and_positive(&self.captured, dataset.labels());
        let wrong = if rule.label == 1 {
            fresh - fresh_pos
        } else {
            fresh_pos
        };
        let mut rules = self.rules.clone();
        rules.push(rule);
        Ok(Prefix {
            rules,
            captured: self.captured.or(capture),
            errors: self.errors + wrong,
            newly_captured: fresh,
        })
    }

    /// Misclassifications of `prefix ∘ (true -> default)`.
    pub fn errors_with_default(&self, default: Label, dataset: &BinaryDataset) -> u64 {
        self.errors + default_errors(&self.captured, default, dataset)
    }

    pub fn close(&self, default: Label) -> RuleList {
        RuleList::new(self.rules.clone(), default)
    }
}

/// Errors the default rule makes on the examples not yet captured.
#[inline]
pub fn default_errors(captured: &Bits, default: Label, dataset: &BinaryDataset) -> u64 {
    let uncaptured = captured.count_zeros();
    let pos_uncaptured = dataset.positive_count() - captured.count_and(dataset.labels());
    if default == 1 {
        uncaptured - pos_uncaptured
    } else {
        pos_uncaptured
    }
}

/// Objective lower bound of every rule list extending `prefix`, in the same
/// scaled units as [`Regularizer::scaled`]: the errors already committed by
/// the prefix, ignoring whatever falls into the default rule.
pub fn lower_bound_scaled(prefix: &Prefix, n: u64, reg: Regularizer) -> u128 {
    reg.scaled(prefix.errors_captured(), prefix.len() as u64 + 1, n)
}

pub fn lower_bound(prefix: &Prefix, dataset: &BinaryDataset, reg: Regularizer) -> f64 {
    reg.value(
        prefix.errors_captured(),
        prefix.len() as u64 + 1,
        dataset.n_examples() as u64,
    )
}

/// Whether appending `next` keeps term ids strictly increasing within every
/// maximal run of equal-label rules.
#[inline]
pub fn is_canonical(rules: &[Rule], next: Rule) -> bool {
    match rules.last() {
        Some(last) => last.label != next.label || last.term < next.term,
        None => true,
    }
}

pub fn is_canonical_list(list: &RuleList) -> bool {
    list.rules.windows(2).all(|w| is_canonical(&w[..1], w[1]))
}

/// The unique representative of the rule lists that make the same
/// predictions through the same rules: rules that capture nothing new are
/// dropped and equal-label runs are sorted by term id, repeatedly until
/// neither step changes anything.
pub fn canonical_representative(list: &RuleList, vocab: &Vocabulary) -> RuleList {
    let mut rules = list.rules.clone();
    loop {
        let mut i = 0;
        while i < rules.len() {
            let j = (i..rules.len())
                .find(|&j| rules[j].label != rules[i].label)
                .unwrap_or(rules.len());
            rules[i..j].sort_unstable_by_key(|r| r.term);
            i = j;
        }
        let mut captured = Bits::zeros(vocab.n_examples());
        let before = rules.len();
        rules.retain(|r| {
            let cap = vocab.capture(r.term);
            let fresh = cap.count_ones() - cap.count_and(&captured);
            captured.or_assign(cap);
            fresh > 0
        });
        if rules.len() == before {
            break;
        }
    }
    RuleList::new(rules, list.default)
}
