//! Binarized classification data held column-major as bitvectors.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bits::Bits;
use crate::exact::Decimal;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("non-binary value `{value}` at row {row}, column `{column}`")]
    NonBinaryValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("dataset has no examples")]
    EmptyDataset,
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("empty column name at position {0}")]
    EmptyColumnName(usize),
    #[error("train fraction {0} is outside (0, 1]")]
    InvalidFraction(f64),
    #[error("column `{name}` has length {found}, expected {expected}")]
    LengthMismatch {
        name: String,
        found: usize,
        expected: usize,
    },
}

/// N examples over J binary features plus binary labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryDataset {
    features: Vec<Bits>,
    labels: Bits,
    feature_names: Vec<String>,
    label_name: String,
}

/// The sensitive attribute `z`, kept apart from the features so it can never
/// become a rule term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensitiveVector {
    pub values: Bits,
    pub name: String,
}

impl SensitiveVector {
    pub fn new(name: impl Into<String>, values: Bits) -> Self {
        SensitiveVector {
            values,
            name: name.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> SensitiveVector {
        SensitiveVector {
            values: self.values.select(indices),
            name: self.name.clone(),
        }
    }
}

impl BinaryDataset {
    pub fn new(
        feature_names: Vec<String>,
        features: Vec<Bits>,
        labels: Bits,
    ) -> Result<Self, DatasetError> {
        let n = labels.len();
        assert_eq!(
            feature_names.len(),
            features.len(),
            "one name per feature column"
        );
        let mut seen = HashSet::new();
        for (i, (name, col)) in feature_names.iter().zip(&features).enumerate() {
            if name.is_empty() {
                return Err(DatasetError::EmptyColumnName(i));
            }
            if !seen.insert(name.as_str()) {
                return Err(DatasetError::DuplicateColumn(name.clone()));
            }
            if col.len() != n {
                return Err(DatasetError::LengthMismatch {
                    name: name.clone(),
                    found: col.len(),
                    expected: n,
                });
            }
        }
        Ok(BinaryDataset {
            features,
            labels,
            feature_names,
            label_name: "label".to_string(),
        })
    }

    /// Builds a dataset from a row-major 0/1 matrix.
    pub fn from_rows(
        feature_names: &[&str],
        rows: &[Vec<u8>],
        labels: &[u8],
    ) -> Result<Self, DatasetError> {
        let j = feature_names.len();
        let features = (0..j)
            .map(|c| rows.iter().map(|r| r[c] == 1).collect())
            .collect();
        BinaryDataset::new(
            feature_names.iter().map(|s| s.to_string()).collect(),
            features,
            labels.iter().map(|&y| y == 1).collect(),
        )
    }

    pub fn with_label_name(mut self, name: impl Into<String>) -> Self {
        self.label_name = name.into();
        self
    }

    pub fn n_examples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn feature(&self, j: usize) -> &Bits {
        &self.features[j]
    }

    pub fn features(&self) -> &[Bits] {
        &self.features
    }

    pub fn labels(&self) -> &Bits {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Feature values of example `n`, in column order.
    pub fn row(&self, n: usize) -> Vec<bool> {
        self.features.iter().map(|c| c.get(n)).collect()
    }

    pub fn positive_count(&self) -> u64 {
        self.labels.count_ones()
    }

    /// Restriction to the given example indices, in that order.
    pub fn select(&self, indices: &[usize]) -> BinaryDataset {
        BinaryDataset {
            features: self.features.iter().map(|c| c.select(indices)).collect(),
            labels: self.labels.select(indices),
            feature_names: self.feature_names.clone(),
            label_name: self.label_name.clone(),
        }
    }

    /// Short hex digest of names, columns and labels.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n_examples() as u64).to_le_bytes());
        for (name, col) in self.feature_names.iter().zip(&self.features) {
            h.update(name.as_bytes());
            h.update([0]);
            for w in col.words() {
                h.update(w.to_le_bytes());
            }
        }
        for w in self.labels.words() {
            h.update(w.to_le_bytes());
        }
        let digest = h.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Splits into (train, test) with `floor(train_fraction * N)` training
    /// examples drawn by a seeded shuffle. Both parts keep file order.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<Split, DatasetError> {
        let frac = Decimal::from_f64(train_fraction)
            .map_err(|_| DatasetError::InvalidFraction(train_fraction))?;
        if frac.numer == 0 || !frac.le_one() {
            return Err(DatasetError::InvalidFraction(train_fraction));
        }
        let n = self.n_examples();
        if n == 0 {
            return Err(DatasetError::EmptyDataset);
        }
        let n_train = frac.floor_mul(n as u64) as usize;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut train_indices = order[..n_train].to_vec();
        let mut test_indices = order[n_train..].to_vec();
        train_indices.sort_unstable();
        test_indices.sort_unstable();
        Ok(Split {
            train: self.select(&train_indices),
            test: self.select(&test_indices),
            train_indices,
            test_indices,
        })
    }

    /// Writes features, then the label column, then the sensitive column.
    pub fn write_csv<W: Write>(
        &self,
        writer: W,
        sensitive: Option<&SensitiveVector>,
    ) -> Result<(), DatasetError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(&self.label_name);
        if let Some(z) = sensitive {
            header.push(&z.name);
        }
        w.write_record(&header)?;
        let bit = |b: bool| if b { "1" } else { "0" };
        for n in 0..self.n_examples() {
            let mut rec: Vec<&str> = self.features.iter().map(|c| bit(c.get(n))).collect();
            rec.push(bit(self.labels.get(n)));
            if let Some(z) = sensitive {
                rec.push(bit(z.values.get(n)));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: BinaryDataset,
    pub test: BinaryDataset,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

impl Split {
    /// `train_fraction = 1` leaves the test part empty.
    pub fn test_is_empty(&self) -> bool {
        self.test_indices.is_empty()
    }
}

pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &str,
    sensitive_column: Option<&str>,
) -> Result<(BinaryDataset, Option<SensitiveVector>), DatasetError> {
    let file = std::fs::File::open(path)?;
    read_csv(file, label_column, sensitive_column)
}

/// Reads a header-first 0/1 CSV. Every column other than the label and the
/// sensitive column becomes a feature.
pub fn read_csv<R: Read>(
    reader: R,
    label_column: &str,
    sensitive_column: Option<&str>,
) -> Result<(BinaryDataset, Option<SensitiveVector>), DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    };
    let label_idx = find(label_column)?;
    let sensitive_idx = sensitive_column.map(find).transpose()?;
    let feature_idx: Vec<usize> = (0..header.len())
        .filter(|&c| c != label_idx && Some(c) != sensitive_idx)
        .collect();

    let mut columns: Vec<Vec<bool>> = vec![Vec::new(); header.len()];
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if record.len() != header.len() {
            return Err(DatasetError::RaggedRow {
                row,
                found: record.len(),
                expected: header.len(),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            let v = match cell {
                "0" => false,
                "1" => true,
                other => {
                    return Err(DatasetError::NonBinaryValue {
                        row,
                        column: header[c].clone(),
                        value: other.to_string(),
                    })
                }
            };
            columns[c].push(v);
        }
    }
    if columns[label_idx].is_empty() {
        return Err(DatasetError::EmptyDataset);
    }

    let mut columns: Vec<Option<Bits>> = columns
        .into_iter()
        .map(|c| Some(Bits::from_bools(c)))
        .collect();
    let labels = columns[label_idx].take().unwrap();
    let sensitive = sensitive_idx.map(|i| SensitiveVector {
        values: columns[i].take().unwrap(),
        name: header[i].clone(),
    });
    let names = feature_idx.iter().map(|&c| header[c].clone()).collect();
    let features = feature_idx
        .iter()
        .map(|&c| columns[c].take().unwrap())
        .collect();
    let dataset = BinaryDataset::new(names, features, labels)?.with_label_name(label_column);
    Ok((dataset, sensitive))
}
