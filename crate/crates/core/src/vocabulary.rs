//! Candidate terms: conjunctions of binary features and their captures.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::bits::Bits;
use crate::dataset::BinaryDataset;
use crate::exact::Decimal;

#[derive(Debug, Error)]
pub enum VocabularyError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset has no positive examples but a positive coverage of {0} was requested")]
    NoPositives(f64),
    #[error("minimum positive coverage {0} is outside [0, 1]")]
    InvalidCoverage(f64),
    #[error("maximum conjunction length must be at least 1")]
    InvalidLength,
    #[error("line {line}: term `{name}` has {found} bits, expected {expected}")]
    LengthMismatch {
        line: usize,
        name: String,
        found: usize,
        expected: usize,
    },
    #[error("line {line}: duplicate term name `{name}`")]
    DuplicateName { line: usize, name: String },
    #[error("line {line}: malformed term line: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("feature index {index} out of range for {n_features} features")]
    IndexOutOfRange { index: usize, n_features: usize },
    #[error("unknown term `{0}`")]
    UnknownTerm(String),
}

/// Dense term id within a [`Vocabulary`].
pub type TermId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub id: TermId,
    pub name: String,
    /// Sorted feature columns of the conjunction. `None` when the term was
    /// loaded from a capture file and its structure is unknown.
    pub features: Option<Vec<usize>>,
    pub capture: Bits,
}

impl Term {
    /// Evaluates the conjunction on a feature vector.
    pub fn evaluate(&self, x: &[bool]) -> Option<bool> {
        self.features.as_ref().map(|fs| fs.iter().all(|&f| x[f]))
    }
}

/// The ordered term set. The constant-true test of the default rule is
/// implicit and never stored here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<Term>,
    n_examples: usize,
}

impl Vocabulary {
    /// Builds a vocabulary from `(name, features, capture)` triples, assigning
    /// ids in order.
    pub fn from_terms(
        n_examples: usize,
        terms: impl IntoIterator<Item = (String, Option<Vec<usize>>, Bits)>,
    ) -> Result<Self, VocabularyError> {
        let mut out = Vec::new();
        let mut names = HashSet::new();
        for (i, (name, features, capture)) in terms.into_iter().enumerate() {
            if capture.len() != n_examples {
                return Err(VocabularyError::LengthMismatch {
                    line: i + 1,
                    name,
                    found: capture.len(),
                    expected: n_examples,
                });
            }
            if !names.insert(name.clone()) {
                return Err(VocabularyError::DuplicateName { line: i + 1, name });
            }
            out.push(Term {
                id: out.len(),
                name,
                features,
                capture,
            });
        }
        Ok(Vocabulary {
            terms: out,
            n_examples,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_examples(&self) -> usize {
        self.n_examples
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn term(&self, id: TermId) -> &Term {
        &self.terms[id]
    }

    pub fn capture(&self, id: TermId) -> &Bits {
        &self.terms[id].capture
    }

    pub fn id_of(&self, name: &str) -> Option<TermId> {
        self.terms.iter().position(|t| t.name == name)
    }

    /// Recomputes every structured term's capture on another dataset with the
    /// same feature columns (e.g. a held-out split). Opaque terms are kept
    /// only when `N` is unchanged.
    pub fn recapture(&self, dataset: &BinaryDataset) -> Result<Vocabulary, VocabularyError> {
        let n = dataset.n_examples();
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let capture = match &t.features {
                Some(fs) => term_capture(fs, dataset)?,
                None if n == self.n_examples => t.capture.clone(),
                None => {
                    return Err(VocabularyError::Malformed {
                        line: t.id + 1,
                        reason: format!(
                            "term `{}` has no feature structure to re-evaluate",
                            t.name
                        ),
                    })
                }
            };
            terms.push(Term {
                capture,
                ..t.clone()
            });
        }
        Ok(Vocabulary {
            terms,
            n_examples: n,
        })
    }

    /// Restriction of every capture to the given example indices.
    pub fn select(&self, indices: &[usize]) -> Vocabulary {
        Vocabulary {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    capture: t.capture.select(indices),
                    ..t.clone()
                })
                .collect(),
            n_examples: indices.len(),
        }
    }

    /// Writes the `{NAME} b1 b2 ... bN` capture format, one term per line.
    pub fn write_terms<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for t in &self.terms {
            write!(w, "{{{}}}", t.name)?;
            for b in t.capture.iter() {
                w.write_all(if b { b" 1" } else { b" 0" })?;
            }
            writeln!(w)?;
        }
        w.flush()
    }
}

/// Bitwise AND of the referenced columns; the empty conjunction is all ones.
pub fn term_capture(features: &[usize], dataset: &BinaryDataset) -> Result<Bits, VocabularyError> {
    let mut capture = Bits::ones(dataset.n_examples());
    for &f in features {
        if f >= dataset.n_features() {
            return Err(VocabularyError::IndexOutOfRange {
                index: f,
                n_features: dataset.n_features(),
            });
        }
        capture.and_assign(dataset.feature(f));
    }
    Ok(capture)
}

/// Human-readable conjunction name, e.g. `age=18-20 & sex=Male`.
pub fn conjunction_name(dataset: &BinaryDataset, features: &[usize]) -> String {
    features
        .iter()
        .map(|&f| dataset.feature_names()[f].as_str())
        .collect::<Vec<_>>()
        .join(" & ")
}

/// All conjunctions of at most `max_len` features whose capture holds at
/// least `min_pos_coverage` of the positive examples, in lexicographic order
/// of their sorted feature indices.
pub fn mine_terms(
    dataset: &BinaryDataset,
    max_len: usize,
    min_pos_coverage: f64,
) -> Result<Vocabulary, VocabularyError> {
    if max_len == 0 {
        return Err(VocabularyError::InvalidLength);
    }
    let coverage = Decimal::from_f64(min_pos_coverage)
        .ok()
        .filter(|c| c.le_one())
        .ok_or(VocabularyError::InvalidCoverage(min_pos_coverage))?;
    let positives = dataset.positive_count();
    if positives == 0 && coverage.numer > 0 {
        return Err(VocabularyError::NoPositives(min_pos_coverage));
    }
    let needed = coverage.ceil_mul(positives);

    let mut found = Vec::new();
    let mut stack = Vec::new();
    let all = Bits::ones(dataset.n_examples());
    mine_from(dataset, max_len, needed, 0, &all, &mut stack, &mut found);

    Vocabulary::from_terms(
        dataset.n_examples(),
        found
            .into_iter()
            .map(|(fs, cap)| (conjunction_name(dataset, &fs), Some(fs), cap)),
    )
}

// Depth-first over increasing feature indices. Positive coverage only shrinks
// as features are added, so a failing conjunction cuts its whole subtree.
fn mine_from(
    dataset: &BinaryDataset,
    max_len: usize,
    needed: u64,
    start: usize,
    capture: &Bits,
    stack: &mut Vec<usize>,
    found: &mut Vec<(Vec<usize>, Bits)>,
) {
    for f in start..dataset.n_features() {
        let next = capture.and(dataset.feature(f));
        if next.count_and(dataset.labels()) < needed {
            continue;
        }
        stack.push(f);
        found.push((stack.clone(), next.clone()));
        if stack.len() < max_len {
            mine_from(dataset, max_len, needed, f + 1, &next, stack, found);
        }
        stack.pop();
    }
}

pub fn load_terms_file(
    path: impl AsRef<Path>,
    n_examples: usize,
) -> Result<Vocabulary, VocabularyError> {
    read_terms(std::fs::File::open(path)?, n_examples)
}

/// Parses the `{NAME} b1 ... bN` capture format. Blank lines are skipped.
pub fn read_terms<R: Read>(reader: R, n_examples: usize) -> Result<Vocabulary, VocabularyError> {
    let mut terms = Vec::new();
    let mut names = HashSet::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let malformed = |reason: &str| VocabularyError::Malformed {
            line: line_no,
            reason: reason.to_string(),
        };
        let rest = line
            .strip_prefix('{')
            .ok_or_else(|| malformed("expected `{` at start"))?;
        let (name, bits) = rest
            .split_once('}')
            .ok_or_else(|| malformed("missing closing `}`"))?;
        let mut capture = Vec::with_capacity(n_examples);
        for tok in bits.split_ascii_whitespace() {
            match tok {
                "0" => capture.push(false),
                "1" => capture.push(true),
                _ => return Err(malformed(&format!("non-binary token `{tok}`"))),
            }
        }
        if capture.len() != n_examples {
            return Err(VocabularyError::LengthMismatch {
                line: line_no,
                name: name.to_string(),
                found: capture.len(),
                expected: n_examples,
            });
        }
        if !names.insert(name.to_string()) {
            return Err(VocabularyError::DuplicateName {
                line: line_no,
                name: name.to_string(),
            });
        }
        terms.push((name.to_string(), None, Bits::from_bools(capture)));
    }
    Vocabulary::from_terms(n_examples, terms)
}

/// Resolves opaque file-loaded terms whose names are `&`-joined feature names
/// of `dataset`, so that they can be evaluated on fresh inputs.
pub fn attach_structure(vocab: &Vocabulary, dataset: &BinaryDataset) -> Vocabulary {
    let mut out = vocab.clone();
    for t in out.terms.iter_mut().filter(|t| t.features.is_none()) {
        let parts: Option<Vec<usize>> = t
            .name
            .split('&')
            .map(|p| dataset.feature_index(p.trim()))
            .collect();
        if let Some(mut fs) = parts {
            fs.sort_unstable();
            fs.dedup();
            if term_capture(&fs, dataset).ok().as_ref() == Some(&t.capture) {
                t.features = Some(fs);
            }
        }
    }
    out
}
