//! Load a CSV with its schema and test a few conditional independencies.

use catci::citest::{ci_test, g2_test, CiQuery};
use catci::data::load_csv;
use catci::estimators::{EstimatorKind, FitOptions};

fn main() -> catci::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");
    let (ds, report) = load_csv(format!("{dir}/lung.csv").as_ref(), format!("{dir}/lung_schema.json").as_ref())?;
    println!("{} rows, {} dropped", ds.n(), report.rows_dropped());

    let queries = [
        CiQuery::new("Smoker", "Pollution", &[]),
        CiQuery::new("Smoker", "Xray", &[]),
        CiQuery::new("Smoker", "Xray", &["Cancer"]),
        CiQuery::new("Xray", "Dyspnoea", &["Cancer"]),
    ];
    let opts = FitOptions::default();
    for q in &queries {
        let r = ci_test(&ds, q, EstimatorKind::MultinomialLogistic, &opts)?;
        let g = g2_test(&ds, q)?;
        println!(
            "{q:<40} {} = {:8.3} (df {}) p = {:.4}   G2 p = {:.4}",
            r.family, r.statistic, r.df, r.p_value, g.p_value
        );
    }
    Ok(())
}
