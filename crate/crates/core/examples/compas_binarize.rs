//! Binarizes the ProPublica `compas-scores-two-years.csv` extract into the
//! 0/1 CSV the library and CLI read.
//!
//! ```text
//! cargo run --release --example compas_binarize -- compas-scores-two-years.csv compas_binary.csv [--negate]
//! ```
//!
//! Features are one-hot buckets of sex, age, juvenile felony / misdemeanor /
//! total counts, prior counts and charge degree. The label is
//! `two_year_recid`; `race_african_american` is written as a separate column
//! for use as the sensitive attribute and is not a feature. With `--negate`
//! every feature also gets a `not <feature>` complement column, as in the
//! term files shipped with CORELS.

use std::error::Error;

const COUNT_BUCKETS: [(&str, u32, u32); 3] = [("0", 0, 0), ("1-3", 1, 3), (">3", 4, u32::MAX)];
const PRIOR_BUCKETS: [(&str, u32, u32); 4] =
    [("0", 0, 0), ("1", 1, 1), ("2-3", 2, 3), (">3", 4, u32::MAX)];
const AGE_BUCKETS: [(&str, u32, u32); 5] = [
    ("18-20", 0, 20),
    ("21-22", 21, 22),
    ("23-25", 23, 25),
    ("26-45", 26, 45),
    (">45", 46, u32::MAX),
];

fn buckets(
    prefix: &str,
    table: &[(&str, u32, u32)],
    value: u32,
    names: &mut Vec<String>,
    row: &mut Vec<u8>,
) {
    for &(label, lo, hi) in table {
        names.push(format!("{prefix}:{label}"));
        row.push((lo..=hi).contains(&value) as u8);
    }
}

fn main() -> Result<(), Box<dyn Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let negate = args.iter().any(|a| a == "--negate");
    let paths: Vec<&String> = args.iter().filter(|a| *a != "--negate").collect();
    let [input, output] = paths[..] else {
        eprintln!("usage: compas_binarize <compas-scores-two-years.csv> <out.csv> [--negate]");
        std::process::exit(2);
    };

    let mut reader = csv::Reader::from_path(input)?;
    // The extract repeats some column names; the first occurrence wins.
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize, Box<dyn Error>> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format!("column `{name}` missing from {input}").into())
    };
    let (sex, age, race) = (col("sex")?, col("age")?, col("race")?);
    let (jf, jm, jo) = (
        col("juv_fel_count")?,
        col("juv_misd_count")?,
        col("juv_other_count")?,
    );
    let (priors, degree, label) = (
        col("priors_count")?,
        col("c_charge_degree")?,
        col("two_year_recid")?,
    );

    let mut writer = csv::Writer::from_path(output)?;
    let mut wrote_header = false;
    let (mut rows, mut positives) = (0usize, 0usize);
    for record in reader.records() {
        let r = record?;
        let num = |i: usize| -> Result<u32, Box<dyn Error>> { Ok(r[i].trim().parse()?) };
        let mut names = Vec::new();
        let mut row = Vec::new();
        for s in ["Male", "Female"] {
            names.push(format!("sex:{s}"));
            row.push((&r[sex] == s) as u8);
        }
        buckets("age", &AGE_BUCKETS, num(age)?, &mut names, &mut row);
        buckets(
            "juvenile-felonies",
            &COUNT_BUCKETS,
            num(jf)?,
            &mut names,
            &mut row,
        );
        buckets(
            "juvenile-misdemeanors",
            &COUNT_BUCKETS,
            num(jm)?,
            &mut names,
            &mut row,
        );
        buckets(
            "juvenile-crimes",
            &COUNT_BUCKETS,
            num(jf)? + num(jm)? + num(jo)?,
            &mut names,
            &mut row,
        );
        buckets("priors", &PRIOR_BUCKETS, num(priors)?, &mut names, &mut row);
        for (code, name) in [("F", "Felony"), ("M", "Misdemeanor")] {
            names.push(format!("current-charge-degree:{name}"));
            row.push((&r[degree] == code) as u8);
        }
        if negate {
            let n = names.len();
            for i in 0..n {
                names.push(format!("not {}", names[i]));
                row.push(1 - row[i]);
            }
        }
        let y: u8 = r[label].trim().parse()?;
        names.push("two_year_recid".into());
        row.push(y);
        names.push("race_african_american".into());
        row.push((&r[race] == "African-American") as u8);

        if !wrote_header {
            writer.write_record(&names)?;
            wrote_header = true;
        }
        writer.write_record(row.iter().map(|v| v.to_string()))?;
        rows += 1;
        positives += y as usize;
    }
    writer.flush()?;
    println!("{rows} rows ({positives} positive) written to {output}");
    Ok(())
}
