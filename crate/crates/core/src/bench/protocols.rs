//! Experiments on the two-variable test protocols.

use std::time::Instant;

use super::{
    fraction, protocol_query, replicates, run_spec, BenchTest, Coords, Experiment, ExperimentConfig, MetricRow,
    Outcome,
};
use crate::error::Result;
use crate::rng::derive_seed;
use crate::sim::{simulate_calibration_null_variant, simulate_discrimination_binary, simulate_discrimination_ordinal};
use crate::stats::{ks_uniform_distance, mean_se};

/// Rows of one calibration cell: the rejection rate at every level in
/// `alpha`, the KS distance to the uniform law and the degenerate rate.
pub fn calibration_rows(
    test: &BenchTest,
    n: Option<usize>,
    k: Option<usize>,
    p_values: &[f64],
    degenerate: &[bool],
    alpha: &[f64],
) -> Vec<MetricRow> {
    let coords = Coords {
        n,
        k,
        ..Coords::for_test(test)
    };
    let reps = p_values.len();
    let e = Experiment::Calibration;
    let mut rows = Vec::with_capacity(alpha.len() + 2);
    for &a in alpha {
        let (rate, se) = mean_se(&fraction(p_values.iter().map(|&p| p <= a)));
        rows.push(coords.row(e, Some(a), "type1_error", rate, Some(se), reps));
    }
    rows.push(coords.row(e, None, "ks_uniform", ks_uniform_distance(p_values), None, reps));
    let (rate, se) = mean_se(&fraction(degenerate.iter().copied()));
    rows.push(coords.row(e, None, "degenerate_rate", rate, Some(se), reps));
    rows
}

/// Null datasets with `x ⟂ y | z1..zk`; every test sees the same datasets.
pub fn run_calibration(cfg: &ExperimentConfig) -> Result<Vec<MetricRow>> {
    let specs = cfg
        .tests
        .iter()
        .map(|t| t.data_spec(cfg.experiment))
        .collect::<Result<Vec<_>>>()?;
    let code = Experiment::Calibration.code();
    let mut rows = Vec::new();
    for &n in &cfg.n {
        for &k in &cfg.k {
            log::info!("calibration n={n} k={k}");
            let q = protocol_query(k);
            let per_rep = replicates(cfg.replicates, |r| -> Result<Vec<Outcome>> {
                let seed = derive_seed(cfg.seed, &[code, n as u64, k as u64, r as u64]);
                let ds = simulate_calibration_null_variant(k, n, cfg.null_variant, seed)?;
                Ok(specs
                    .iter()
                    .map(|s| run_spec(s, &ds, &q, derive_seed(seed, &[1]), &cfg.fit))
                    .collect())
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            for (t, test) in cfg.tests.iter().enumerate() {
                let p: Vec<f64> = per_rep.iter().map(|o| o[t].p).collect();
                let d: Vec<bool> = per_rep.iter().map(|o| o[t].degenerate).collect();
                rows.extend(calibration_rows(test, Some(n), Some(k), &p, &d, &cfg.alpha));
            }
        }
    }
    Ok(rows)
}

/// `replicates` independent plus `replicates` dependent datasets per cell,
/// classified at the first significance level. The ordinal protocol has no
/// effect size and runs once per `(n, k)`.
pub fn run_discrimination(cfg: &ExperimentConfig) -> Result<Vec<MetricRow>> {
    let specs = cfg
        .tests
        .iter()
        .map(|t| t.data_spec(cfg.experiment))
        .collect::<Result<Vec<_>>>()?;
    let code = Experiment::Discrimination.code();
    let alpha = cfg.decision_alpha();
    let betas: Vec<Option<f64>> = if cfg.ordinal {
        vec![None]
    } else {
        cfg.beta.iter().map(|&b| Some(b)).collect()
    };
    let reps = cfg.replicates;
    let mut rows = Vec::new();
    for &n in &cfg.n {
        for &k in &cfg.k {
            for &beta in &betas {
                log::info!("discrimination n={n} k={k} beta={beta:?}");
                let q = protocol_query(k);
                let beta_bits = beta.map_or(u64::MAX, f64::to_bits);
                let per_rep = replicates(2 * reps, |r| -> Result<Vec<Outcome>> {
                    let dependent = r >= reps;
                    let seed = derive_seed(cfg.seed, &[code, n as u64, k as u64, beta_bits, r as u64]);
                    let ds = match beta {
                        Some(b) => simulate_discrimination_binary(k, b, n, dependent, seed)?,
                        None => simulate_discrimination_ordinal(k, n, dependent, seed)?,
                    };
                    Ok(specs
                        .iter()
                        .map(|s| run_spec(s, &ds, &q, derive_seed(seed, &[1]), &cfg.fit))
                        .collect())
                })
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
                for (t, test) in cfg.tests.iter().enumerate() {
                    let coords = Coords {
                        n: Some(n),
                        k: Some(k),
                        beta,
                        ..Coords::for_test(test)
                    };
                    let reject = |o: &Vec<Outcome>| o[t].p <= alpha;
                    let correct = fraction(per_rep.iter().enumerate().map(|(r, o)| reject(o) == (r >= reps)));
                    let power = fraction(per_rep[reps..].iter().map(reject));
                    let type1 = fraction(per_rep[..reps].iter().map(reject));
                    let degenerate = fraction(per_rep.iter().map(|o| o[t].degenerate));
                    let e = cfg.experiment;
                    for (metric, values) in [
                        ("accuracy", &correct),
                        ("power", &power),
                        ("type1_error", &type1),
                        ("degenerate_rate", &degenerate),
                    ] {
                        let (m, se) = mean_se(values);
                        rows.push(coords.row(e, Some(alpha), metric, m, Some(se), values.len()));
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Wall time of single tests on binary discrimination data, alternating
/// independent and dependent datasets with effect `beta[0]`. Runs
/// sequentially so that timings are not inflated by contention.
pub fn run_runtime(cfg: &ExperimentConfig) -> Result<Vec<MetricRow>> {
    let code = Experiment::Runtime.code();
    let beta = cfg.beta[0];
    let mut rows = Vec::new();
    for &n in &cfg.n {
        for &k in &cfg.k {
            let q = protocol_query(k);
            let data = (0..cfg.replicates)
                .map(|r| {
                    let seed = derive_seed(cfg.seed, &[code, n as u64, k as u64, r as u64]);
                    simulate_discrimination_binary(k, beta, n, r % 2 == 1, seed).map(|ds| (ds, seed))
                })
                .collect::<Result<Vec<_>>>()?;
            for test in &cfg.tests {
                let spec = test.data_spec(cfg.experiment)?;
                log::info!("runtime n={n} k={k} test={test}");
                let seconds: Vec<f64> = data
                    .iter()
                    .map(|(ds, seed)| {
                        let start = Instant::now();
                        let _ = run_spec(&spec, ds, &q, *seed, &cfg.fit);
                        start.elapsed().as_secs_f64()
                    })
                    .collect();
                let coords = Coords {
                    n: Some(n),
                    k: Some(k),
                    beta: Some(beta),
                    ..Coords::for_test(test)
                };
                let (m, se) = mean_se(&seconds);
                rows.push(coords.row(cfg.experiment, None, "seconds", m, Some(se), seconds.len()));
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_p_values_reject_at_the_nominal_rate() {
        let m = 1000;
        let p: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
        let alpha = super::super::alpha_grid();
        let rows = calibration_rows(&BenchTest::Oracle, None, None, &p, &vec![false; m], &alpha);
        for (row, a) in rows.iter().zip(&alpha) {
            assert_eq!(row.metric, "type1_error");
            assert!((row.value - a).abs() < 1e-12, "{} vs {a}", row.value);
        }
        assert!(rows[alpha.len()].value <= 0.5 / m as f64 + 1e-12);
    }

    #[test]
    fn zero_effect_discrimination_is_near_one_half() {
        let mut cfg = ExperimentConfig::new(Experiment::Discrimination);
        cfg.tests = vec!["g2".parse().unwrap()];
        cfg.n = vec![300];
        cfg.k = vec![1];
        cfg.beta = vec![0.0];
        cfg.replicates = 100;
        let rows = run_discrimination(&cfg).unwrap();
        let acc = rows.iter().find(|r| r.metric == "accuracy").unwrap();
        assert!((acc.value - 0.5).abs() < 0.06, "accuracy {}", acc.value);
        assert_eq!(acc.replicates, 200);
    }
}
