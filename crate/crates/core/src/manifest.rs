//! Run manifests: enough to reproduce a result file.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::enumerator::Prunings;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Parameters {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_total_len: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub epsilons: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_errors: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_capture: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prunings: Option<Prunings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branching: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timeout_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_conj: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_pos_coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    /// Input role (`data`, `terms`, ...) to path.
    pub inputs: BTreeMap<String, String>,
    pub parameters: Parameters,
    pub dataset_fingerprint: String,
    pub n_examples: usize,
    pub n_terms: usize,
}

impl RunManifest {
    pub fn new(
        command: &str,
        dataset_fingerprint: String,
        n_examples: usize,
        n_terms: usize,
    ) -> Self {
        RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: BTreeMap::new(),
            parameters: Parameters::default(),
            dataset_fingerprint,
            n_examples,
            n_terms,
        }
    }

    pub fn input(mut self, role: &str, path: impl std::fmt::Display) -> Self {
        self.inputs.insert(role.to_string(), path.to_string());
        self
    }
}
