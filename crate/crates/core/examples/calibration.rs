//! Type-I error of each test on null data, at a reduced replicate count.

use catci::bench::{run, write_rows, Experiment, ExperimentConfig};

fn main() -> catci::Result<()> {
    let mut cfg = ExperimentConfig::new(Experiment::Calibration);
    cfg.n = vec![80];
    cfg.k = vec![1, 5];
    cfg.alpha = vec![0.01, 0.05, 0.1];
    cfg.replicates = 200;
    cfg.tests = vec!["qtest:glm".parse()?, "qtest:saturated".parse()?, "g2".parse()?];
    let rows = run(&cfg)?;
    let rows: Vec<_> = rows.into_iter().filter(|r| r.metric != "degenerate_rate").collect();
    write_rows(&rows, std::io::stdout())
}
