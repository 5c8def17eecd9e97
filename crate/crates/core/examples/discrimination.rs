//! Accuracy of classifying dependent versus independent datasets.

use catci::bench::{run, Experiment, ExperimentConfig};

fn main() -> catci::Result<()> {
    let mut cfg = ExperimentConfig::new(Experiment::Discrimination);
    cfg.k = vec![5];
    cfg.beta = vec![0.0, 0.25, 0.5, 1.0];
    cfg.replicates = 50;
    cfg.tests = vec!["qtest:glm".parse()?, "g2".parse()?];
    println!("{:<10} {:>5} {:>9}", "test", "beta", "accuracy");
    for r in run(&cfg)?.iter().filter(|r| r.metric == "accuracy") {
        println!("{:<10} {:>5} {:>9.3}", format!("{}{}", r.test, r.estimator), r.beta.unwrap_or(0.0), r.value);
    }

    cfg.ordinal = true;
    cfg.k = vec![1];
    for r in run(&cfg)?.iter().filter(|r| r.metric == "accuracy") {
        println!("ordinal {:<10} accuracy {:.3}", format!("{}{}", r.test, r.estimator), r.value);
    }
    Ok(())
}
