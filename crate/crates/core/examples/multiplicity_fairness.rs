//! Ambiguity, discrepancy and unfairness ranges of a Rashomon set.

use rashomon::enumerator::SinkError;
use rashomon::prelude::*;
use rashomon::synthetic::{planted, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (data, z) = planted(&SyntheticConfig {
        n_examples: 1000,
        n_features: 8,
        noise: 0.15,
        sensitive_correlation: 0.7,
        ..Default::default()
    });
    let vocab = mine_terms(&data, 2, 0.2)?;
    let h0 = fit_optimal(
        &data,
        &vocab,
        &OptimizerConfig::new(3, Regularizer::new(0.015)?),
    )?;
    let reference = prediction_vector(&h0.best, &vocab);

    for eps in [0.01, 0.03, 0.05] {
        let max_errors =
            rashomon::enumerator::threshold_from_errors(h0.evaluation.errors, eps, 1000)?;
        let mut mult = MultiplicityAccumulator::new(&reference);
        let mut dp = UnfairnessAccumulator::new(Criterion::DemographicParity);
        let mut eo = UnfairnessAccumulator::new(Criterion::EqualOpportunity);
        let mut sink = |s: &Solution<'_>| -> Result<(), SinkError> {
            let p = prediction_vector(&s.to_rule_list(), &vocab);
            mult.add(&p)?;
            dp.add(&p, &z, data.labels())?;
            eo.add(&p, &z, data.labels())?;
            Ok(())
        };
        enumerate_rashomon(
            &data,
            &vocab,
            &EnumConfig::new(3, Threshold::Errors(max_errors)),
            &mut sink,
        )?;
        let (dp, eo) = (dp.finish()?, eo.finish()?);
        println!(
            "eps {eps}: {} models, ambiguity {:.3}, discrepancy {:.3}, DP [{:+.3}, {:+.3}], EO [{:+.3}, {:+.3}]",
            mult.n_models(),
            mult.ambiguity()?,
            mult.discrepancy()?,
            dp.lo,
            dp.hi,
            eo.lo,
            eo.hi
        );
    }
    Ok(())
}
