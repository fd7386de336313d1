//! Exact enumeration of Rashomon sets of rule lists.
//!
//! Given a binarized dataset and a vocabulary of candidate terms, this crate
//! finds the optimal rule list ([`optimizer`]), enumerates every rule list
//! whose risk is within a tolerance of a reference model ([`enumerator`]),
//! lists the top-K rule lists by repeated re-optimization ([`lawler`]) and
//! measures predictive multiplicity and fairness over the resulting set
//! ([`metrics`]).
//!
//! ```
//! use rashomon::prelude::*;
//!
//! let (data, _) = read_csv("a,b,y\n1,0,1\n1,1,1\n0,1,0\n0,0,0\n".as_bytes(), "y", None).unwrap();
//! let vocab = mine_terms(&data, 1, 0.5).unwrap();
//! let best = fit_optimal(&data, &vocab, &OptimizerConfig::new(2, Regularizer::none())).unwrap();
//! assert_eq!(best.evaluation.errors, 0);
//!
//! let mut count = CountingSink::default();
//! let config = EnumConfig::new(2, Threshold::Errors(2));
//! enumerate_rashomon(&data, &vocab, &config, &mut count).unwrap();
//! assert!(count.0 > 1);
//! ```

pub mod bits;
pub mod cli;
pub mod dataset;
pub mod enumerator;
pub mod exact;
pub mod lawler;
pub mod manifest;
pub mod memory;
pub mod metrics;
pub mod optimizer;
pub mod rulelist;
pub mod synthetic;
pub mod vocabulary;

pub mod prelude {
    pub use crate::bits::Bits;
    pub use crate::dataset::{load_csv, read_csv, BinaryDataset, SensitiveVector};
    pub use crate::enumerator::{
        enumerate_parallel, enumerate_rashomon, sweep_tolerances, CollectingSink, CountingSink,
        EmitOrder, EnumConfig, EnumStats, Prunings, Solution, SolutionSink, SweepOptions,
        Threshold,
    };
    pub use crate::lawler::{topk, Branching, TopKConfig, TopKResult};
    pub use crate::metrics::{
        ambiguity, demographic_parity, discrepancy, equal_opportunity, hamming_distance,
        unfairness_range, Criterion, Member, MultiplicityAccumulator, RashomonSet,
        UnfairnessAccumulator,
    };
    pub use crate::optimizer::{fit_optimal, OptResult, OptimizerConfig};
    pub use crate::rulelist::{
        empirical_risk, objective, predict, prediction_vector, PredictionVector, Prefix,
        Regularizer, Rule, RuleList,
    };
    pub use crate::vocabulary::{load_terms_file, mine_terms, read_terms, Vocabulary};
}
