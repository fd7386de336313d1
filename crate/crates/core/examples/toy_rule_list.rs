//! Builds the four-row toy dataset by hand, writes down two rule lists and
//! evaluates them.

use rashomon::prelude::*;
use rashomon::rulelist::evaluate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = BinaryDataset::from_rows(
        &["a", "b"],
        &[vec![1, 0], vec![1, 1], vec![0, 1], vec![0, 0]],
        &[1, 1, 0, 0],
    )?;
    let vocab = mine_terms(&data, 2, 0.0)?;
    let reg = Regularizer::new(0.1)?;

    let a = vocab.id_of("a").unwrap();
    let b = vocab.id_of("b").unwrap();
    for list in [
        RuleList::new(vec![Rule::new(a, 1)], 0),
        RuleList::new(vec![Rule::new(b, 0), Rule::new(a, 1)], 0),
        RuleList::constant(1),
    ] {
        let eval = evaluate(&list, &data, &vocab);
        println!(
            "{:<40} predictions {}  risk {:.2}  objective {:.2}",
            list.display(&vocab).to_string(),
            prediction_vector(&list, &vocab).0.to_01_string(),
            eval.risk(),
            objective(&list, &data, &vocab, reg),
        );
    }

    // Row-wise prediction works on raw feature vectors too.
    let list = RuleList::new(vec![Rule::new(a, 1)], 0);
    println!(
        "predict([a=1, b=0]) = {}",
        predict(&list, &[true, false], &vocab)?
    );
    Ok(())
}
