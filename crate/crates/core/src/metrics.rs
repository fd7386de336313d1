//! Predictive multiplicity and fairness over a set of rule lists.
//!
//! All metrics are computed from prediction vectors relative to a reference
//! model. The accumulators are streaming (one pass, state independent of the
//! number of models apart from optional per-model score lists) and mergeable,
//! so partial results from separate workers combine in any order.

use serde::Serialize;
use thiserror::Error;

use crate::bits::Bits;
use crate::dataset::{BinaryDataset, SensitiveVector};
use crate::rulelist::{prediction_vector, Evaluation, PredictionVector, RuleList};
use crate::vocabulary::Vocabulary;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("vectors have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("the model set is empty")]
    EmptySet,
    #[error("sensitive group {group} has no examples{detail}")]
    EmptyGroup { group: u8, detail: &'static str },
    #[error("member risk {errors}/{n} exceeds the tolerance bound {bound}/{n}")]
    OutsideTolerance { errors: u64, bound: u64, n: u64 },
}

/// `popcount(p xor q) / N`.
pub fn hamming_distance(p: &PredictionVector, q: &PredictionVector) -> Result<f64, MetricsError> {
    if p.len() != q.len() {
        return Err(MetricsError::LengthMismatch(p.len(), q.len()));
    }
    if p.is_empty() {
        return Ok(0.0);
    }
    Ok(p.0.count_xor(&q.0) as f64 / p.len() as f64)
}

fn check_len(a: usize, b: usize) -> Result<(), MetricsError> {
    if a != b {
        Err(MetricsError::LengthMismatch(a, b))
    } else {
        Ok(())
    }
}

fn rate(hits: u64, total: u64) -> f64 {
    hits as f64 / total as f64
}

/// `P(h = 1 | z = 1) - P(h = 1 | z = 0)`.
pub fn demographic_parity(p: &PredictionVector, z: &SensitiveVector) -> Result<f64, MetricsError> {
    check_len(p.len(), z.len())?;
    let g1 = z.values.count_ones();
    let g0 = z.values.count_zeros();
    if g1 == 0 {
        return Err(MetricsError::EmptyGroup {
            group: 1,
            detail: "",
        });
    }
    if g0 == 0 {
        return Err(MetricsError::EmptyGroup {
            group: 0,
            detail: "",
        });
    }
    let pos1 = p.0.count_and(&z.values);
    let pos0 = p.0.count_ones() - pos1;
    Ok(rate(pos1, g1) - rate(pos0, g0))
}

/// `P(h = 1 | y = 1, z = 1) - P(h = 1 | y = 1, z = 0)`.
pub fn equal_opportunity(
    p: &PredictionVector,
    z: &SensitiveVector,
    labels: &Bits,
) -> Result<f64, MetricsError> {
    check_len(p.len(), z.len())?;
    check_len(p.len(), labels.len())?;
    let y1z1 = labels.and(&z.values);
    let y1z0 = labels.and_not(&z.values);
    let g1 = y1z1.count_ones();
    let g0 = y1z0.count_ones();
    if g1 == 0 {
        return Err(MetricsError::EmptyGroup {
            group: 1,
            detail: " among positive labels",
        });
    }
    if g0 == 0 {
        return Err(MetricsError::EmptyGroup {
            group: 0,
            detail: " among positive labels",
        });
    }
    Ok(rate(p.0.count_and(&y1z1), g1) - rate(p.0.count_and(&y1z0), g0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Criterion {
    #[serde(rename = "DP")]
    DemographicParity,
    #[serde(rename = "EO")]
    EqualOpportunity,
}

impl Criterion {
    pub fn score(
        self,
        p: &PredictionVector,
        z: &SensitiveVector,
        labels: &Bits,
    ) -> Result<f64, MetricsError> {
        match self {
            Criterion::DemographicParity => demographic_parity(p, z),
            Criterion::EqualOpportunity => equal_opportunity(p, z, labels),
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Criterion::DemographicParity => "dp",
            Criterion::EqualOpportunity => "eo",
        }
    }
}

/// One member of a Rashomon set.
#[derive(Debug, Clone)]
pub struct Member {
    pub rule_list: RuleList,
    pub evaluation: Evaluation,
    pub prediction: PredictionVector,
}

impl Member {
    pub fn new(rule_list: RuleList, dataset: &BinaryDataset, vocab: &Vocabulary) -> Self {
        let prediction = prediction_vector(&rule_list, vocab);
        let evaluation = Evaluation {
            errors: prediction.0.count_xor(dataset.labels()),
            n: dataset.n_examples() as u64,
        };
        Member {
            rule_list,
            evaluation,
            prediction,
        }
    }
}

/// A reference model and the models within a tolerance of its risk. The
/// reference is always the first member.
#[derive(Debug, Clone)]
pub struct RashomonSet {
    members: Vec<Member>,
    pub epsilon: f64,
    /// Largest admissible error count.
    pub bound: u64,
    pub fingerprint: String,
}

impl RashomonSet {
    pub fn new(
        reference: Member,
        epsilon: f64,
        bound: u64,
        fingerprint: impl Into<String>,
    ) -> Self {
        RashomonSet {
            members: vec![reference],
            epsilon,
            bound,
            fingerprint: fingerprint.into(),
        }
    }

    pub fn reference(&self) -> &Member {
        &self.members[0]
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Adds a member; the reference itself is not added twice.
    pub fn push(&mut self, member: Member) -> Result<(), MetricsError> {
        check_len(member.prediction.len(), self.reference().prediction.len())?;
        if member.evaluation.errors > self.bound {
            return Err(MetricsError::OutsideTolerance {
                errors: member.evaluation.errors,
                bound: self.bound,
                n: member.evaluation.n,
            });
        }
        if member.rule_list != self.reference().rule_list {
            self.members.push(member);
        }
        Ok(())
    }

    pub fn predictions(&self) -> impl Iterator<Item = &PredictionVector> {
        self.members.iter().map(|m| &m.prediction)
    }
}

/// Streaming ambiguity/discrepancy state: the OR of every member's
/// disagreement with the reference, and the largest single disagreement.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicityAccumulator {
    reference: Bits,
    flipped: Bits,
    max_disagreements: u64,
    n_models: u64,
    per_model: Option<Vec<u64>>,
}

impl MultiplicityAccumulator {
    pub fn new(reference: &PredictionVector) -> Self {
        MultiplicityAccumulator {
            reference: reference.0.clone(),
            flipped: Bits::zeros(reference.len()),
            max_disagreements: 0,
            n_models: 0,
            per_model: None,
        }
    }

    /// Also retain each member's distance to the reference.
    pub fn keep_per_model(mut self) -> Self {
        self.per_model = Some(Vec::new());
        self
    }

    pub fn add(&mut self, p: &PredictionVector) -> Result<(), MetricsError> {
        check_len(p.len(), self.reference.len())?;
        let diff = p.0.xor(&self.reference);
        let d = diff.count_ones();
        self.flipped.or_assign(&diff);
        self.max_disagreements = self.max_disagreements.max(d);
        self.n_models += 1;
        if let Some(v) = &mut self.per_model {
            v.push(d);
        }
        Ok(())
    }

    /// Combines with another accumulator over the same reference.
    pub fn merge(&mut self, other: &MultiplicityAccumulator) {
        assert_eq!(
            self.reference, other.reference,
            "different reference models"
        );
        self.flipped.or_assign(&other.flipped);
        self.max_disagreements = self.max_disagreements.max(other.max_disagreements);
        self.n_models += other.n_models;
        if let (Some(a), Some(b)) = (&mut self.per_model, &other.per_model) {
            a.extend_from_slice(b);
        }
    }

    pub fn n_models(&self) -> u64 {
        self.n_models
    }

    fn n(&self) -> f64 {
        self.reference.len().max(1) as f64
    }

    pub fn ambiguity(&self) -> Result<f64, MetricsError> {
        if self.n_models == 0 {
            return Err(MetricsError::EmptySet);
        }
        Ok(self.flipped.count_ones() as f64 / self.n())
    }

    pub fn discrepancy(&self) -> Result<f64, MetricsError> {
        if self.n_models == 0 {
            return Err(MetricsError::EmptySet);
        }
        Ok(self.max_disagreements as f64 / self.n())
    }

    pub fn report(&self) -> Result<MultiplicityReport, MetricsError> {
        Ok(MultiplicityReport {
            ambiguity: self.ambiguity()?,
            discrepancy: self.discrepancy()?,
            per_model_distance: self
                .per_model
                .as_ref()
                .map(|v| v.iter().map(|&d| d as f64 / self.n()).collect())
                .unwrap_or_default(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplicityReport {
    pub ambiguity: f64,
    pub discrepancy: f64,
    pub per_model_distance: Vec<f64>,
}

/// Maximum normalized Hamming distance of a member to the reference.
pub fn discrepancy(set: &RashomonSet) -> Result<f64, MetricsError> {
    multiplicity(set)?.discrepancy()
}

/// Fraction of examples on which some member disagrees with the reference.
pub fn ambiguity(set: &RashomonSet) -> Result<f64, MetricsError> {
    multiplicity(set)?.ambiguity()
}

pub fn multiplicity(set: &RashomonSet) -> Result<MultiplicityAccumulator, MetricsError> {
    let mut acc = MultiplicityAccumulator::new(&set.reference().prediction).keep_per_model();
    for p in set.predictions() {
        acc.add(p)?;
    }
    Ok(acc)
}

/// Streaming min/max of a discrimination score, retaining per-model scores.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfairnessAccumulator {
    criterion: Criterion,
    lo: f64,
    hi: f64,
    scores: Vec<f64>,
}

impl UnfairnessAccumulator {
    pub fn new(criterion: Criterion) -> Self {
        UnfairnessAccumulator {
            criterion,
            lo: f64::INFINITY,
            hi: f64::NEG_INFINITY,
            scores: Vec::new(),
        }
    }

    pub fn add_score(&mut self, s: f64) {
        self.lo = self.lo.min(s);
        self.hi = self.hi.max(s);
        self.scores.push(s);
    }

    pub fn add(
        &mut self,
        p: &PredictionVector,
        z: &SensitiveVector,
        labels: &Bits,
    ) -> Result<f64, MetricsError> {
        let s = self.criterion.score(p, z, labels)?;
        self.add_score(s);
        Ok(s)
    }

    pub fn merge(&mut self, other: &UnfairnessAccumulator) {
        assert_eq!(self.criterion, other.criterion);
        self.lo = self.lo.min(other.lo);
        self.hi = self.hi.max(other.hi);
        self.scores.extend_from_slice(&other.scores);
    }

    pub fn finish(&self) -> Result<UnfairnessRange, MetricsError> {
        if self.scores.is_empty() {
            return Err(MetricsError::EmptySet);
        }
        Ok(UnfairnessRange {
            criterion: self.criterion,
            lo: self.lo,
            hi: self.hi,
            per_model_score: self.scores.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnfairnessRange {
    pub criterion: Criterion,
    pub lo: f64,
    pub hi: f64,
    pub per_model_score: Vec<f64>,
}

/// `[min, max]` of the criterion over the set, in one pass.
pub fn unfairness_range(
    set: &RashomonSet,
    z: &SensitiveVector,
    labels: &Bits,
    criterion: Criterion,
) -> Result<UnfairnessRange, MetricsError> {
    let mut acc = UnfairnessAccumulator::new(criterion);
    for p in set.predictions() {
        acc.add(p, z, labels)?;
    }
    acc.finish()
}

/// Summary for one tolerance level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub epsilon: f64,
    pub n_models: u64,
    pub ambiguity: f64,
    pub discrepancy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dp_range: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eo_range: Option<[f64; 2]>,
}
