//! Seeded synthetic data generators.
//!
//! Every column draws from its own ChaCha8 stream selected by
//! `(seed, column index)`, so adding columns never changes earlier ones.
//! Columns are laid out as `x, y, z1, ..., zk` for the test protocols.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, VariableKind, VariableMeta};
use crate::error::{Error, Result};
use crate::graph::{random_dag, Dag};
use crate::rng::{derive_seed, stream_rng};

/// Stream used to permute `z1` in the ordinal protocol.
const PERMUTATION_STREAM: u64 = 0x7065_726d;

/// Distribution of `x` and `y` in the null calibration protocol, given a
/// binary `z1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullVariant {
    /// `Binomial(2, z1/3)`: three ordinal levels, constant 0 when `z1 = 0`.
    AsWritten,
    /// `Bernoulli((z1+1)/3)`: binary.
    StrictBinary,
    /// `Binomial(k-1, (z1+1)/3)` for `x` and `y` with `kx` and `ky` levels;
    /// a side with more than 2 levels is categorical.
    Categorical { kx: usize, ky: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    CalibrationNull(NullVariant),
    BinaryDiscrimination,
    OrdinalDiscrimination,
    DagLogistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub protocol: Protocol,
    pub n: usize,
    /// conditioner count, or variable count of the random DAG
    pub k: usize,
    pub beta: f64,
    pub p_edge: f64,
    pub dependent: bool,
    pub seed: u64,
}

/// A generated dataset with the DAG that produced it, when there is one.
#[derive(Debug, Clone)]
pub struct Simulated {
    pub data: Dataset,
    pub dag: Option<Dag>,
}

pub fn simulate(spec: &SimSpec) -> Result<Simulated> {
    if spec.n == 0 {
        return Err(Error::InvalidArgument("sample size must be positive".into()));
    }
    let data = match spec.protocol {
        Protocol::CalibrationNull(v) => simulate_calibration_null_variant(spec.k, spec.n, v, spec.seed)?,
        Protocol::BinaryDiscrimination => {
            simulate_discrimination_binary(spec.k, spec.beta, spec.n, spec.dependent, spec.seed)?
        }
        Protocol::OrdinalDiscrimination => simulate_discrimination_ordinal(spec.k, spec.n, spec.dependent, spec.seed)?,
        Protocol::DagLogistic => {
            let dag = random_dag(spec.k, spec.p_edge, derive_seed(spec.seed, &[0]))?;
            let data = simulate_binary_dag(&dag, spec.beta, spec.n, derive_seed(spec.seed, &[1]))?;
            return Ok(Simulated { data, dag: Some(dag) });
        }
    };
    Ok(Simulated { data, dag: None })
}

fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

fn binomial(rng: &mut ChaCha8Rng, trials: usize, p: f64) -> usize {
    (0..trials).filter(|_| rng.random_bool(p)).count()
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("at least one conditioner is required".into()));
    }
    Ok(())
}

fn test_names(k: usize) -> Vec<String> {
    ["x".to_string(), "y".to_string()]
        .into_iter()
        .chain((1..=k).map(|i| format!("z{i}")))
        .collect()
}

fn meta(name: &str, kind: VariableKind, levels: usize) -> VariableMeta {
    VariableMeta::numbered(name, kind, levels).expect("generator metadata is valid")
}

fn kind_for(levels: usize) -> VariableKind {
    if levels == 2 {
        VariableKind::Binary
    } else {
        VariableKind::Categorical
    }
}

/// Null protocol as written: binary `z1..zk`, and `x`, `y` independently
/// `Binomial(2, z1/3)`.
pub fn simulate_calibration_null(k: usize, n: usize, seed: u64) -> Result<Dataset> {
    simulate_calibration_null_variant(k, n, NullVariant::AsWritten, seed)
}

pub fn simulate_calibration_null_variant(k: usize, n: usize, variant: NullVariant, seed: u64) -> Result<Dataset> {
    check_k(k)?;
    let names = test_names(k);
    let zs: Vec<Vec<usize>> = (0..k)
        .map(|i| {
            let mut rng = stream_rng(seed, (i + 2) as u64);
            (0..n).map(|_| usize::from(rng.random_bool(0.5))).collect()
        })
        .collect();
    let (x_levels, y_levels, x_kind, y_kind) = match variant {
        NullVariant::AsWritten => (3, 3, VariableKind::Ordinal, VariableKind::Ordinal),
        NullVariant::StrictBinary => (2, 2, VariableKind::Binary, VariableKind::Binary),
        NullVariant::Categorical { kx, ky } => {
            if kx < 2 || ky < 2 {
                return Err(Error::InvalidArgument("x and y need at least 2 levels".into()));
            }
            (kx, ky, kind_for(kx), kind_for(ky))
        }
    };
    let success = |z1: usize| match variant {
        NullVariant::AsWritten => z1 as f64 / 3.0,
        _ => (z1 as f64 + 1.0) / 3.0,
    };
    let draw = |stream: u64, levels: usize| -> Vec<usize> {
        let mut rng = stream_rng(seed, stream);
        zs[0].iter().map(|&z1| binomial(&mut rng, levels - 1, success(z1))).collect()
    };
    let mut columns = vec![draw(0, x_levels), draw(1, y_levels)];
    columns.extend(zs);
    let mut metas = vec![meta(&names[0], x_kind, x_levels), meta(&names[1], y_kind, y_levels)];
    metas.extend(names[2..].iter().map(|nm| meta(nm, VariableKind::Binary, 2)));
    Dataset::new(metas, columns)
}

/// Binary data from a logistic model on `g`: roots are `Bernoulli(0.5)`,
/// other variables `Bernoulli(logistic(beta * sum of parents))`. Variables
/// are named `v0, v1, ...`.
pub fn simulate_binary_dag(g: &Dag, beta: f64, n: usize, seed: u64) -> Result<Dataset> {
    let names: Vec<String> = (0..g.n_vars()).map(|v| format!("v{v}")).collect();
    simulate_binary_dag_named(g, beta, n, seed, &names)
}

pub fn simulate_binary_dag_named(g: &Dag, beta: f64, n: usize, seed: u64, names: &[String]) -> Result<Dataset> {
    if names.len() != g.n_vars() {
        return Err(Error::InvalidArgument("one name per variable is required".into()));
    }
    let mut columns: Vec<Vec<usize>> = vec![Vec::new(); g.n_vars()];
    for &v in g.topo_order() {
        let mut rng = stream_rng(seed, v as u64);
        let parents = g.parents(v);
        columns[v] = (0..n)
            .map(|i| {
                let p = if parents.is_empty() {
                    0.5
                } else {
                    logistic(beta * parents.iter().map(|&u| columns[u][i] as f64).sum::<f64>())
                };
                usize::from(rng.random_bool(p))
            })
            .collect();
    }
    let metas = names.iter().map(|nm| meta(nm, VariableKind::Binary, 2)).collect();
    Dataset::new(metas, columns)
}

/// `z1 -> x`, `z1 -> y`, plus `x -> y` when dependent, with nuisance
/// `z2..zk`; all binary with effect `beta` on every edge.
pub fn simulate_discrimination_binary(k: usize, beta: f64, n: usize, dependent: bool, seed: u64) -> Result<Dataset> {
    check_k(k)?;
    let mut edges = vec![(2, 0), (2, 1)];
    if dependent {
        edges.push((0, 1));
    }
    let g = Dag::new(k + 2, &edges)?;
    simulate_binary_dag_named(&g, beta, n, seed, &test_names(k))
}

/// Nine-level ordinal data: `z_i ~ Binomial(8, 1/2)` and `x`, `y`
/// independently `Binomial(8, z1/9)`. When dependent, `z1` is shuffled after
/// `x` and `y` are drawn, so the recorded `z1` no longer explains them.
pub fn simulate_discrimination_ordinal(k: usize, n: usize, dependent: bool, seed: u64) -> Result<Dataset> {
    check_k(k)?;
    let names = test_names(k);
    let mut zs: Vec<Vec<usize>> = (0..k)
        .map(|i| {
            let mut rng = stream_rng(seed, (i + 2) as u64);
            (0..n).map(|_| binomial(&mut rng, 8, 0.5)).collect()
        })
        .collect();
    let draw = |stream: u64| -> Vec<usize> {
        let mut rng = stream_rng(seed, stream);
        zs[0].iter().map(|&z1| binomial(&mut rng, 8, z1 as f64 / 9.0)).collect()
    };
    let mut columns = vec![draw(0), draw(1)];
    if dependent {
        zs[0].shuffle(&mut stream_rng(seed, PERMUTATION_STREAM));
    }
    columns.extend(zs);
    let metas = names.iter().map(|nm| meta(nm, VariableKind::Ordinal, 9)).collect();
    Dataset::new(metas, columns)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn as_written_null_is_zero_when_z1_is_zero() {
        let ds = simulate_calibration_null(2, 500, 3).unwrap();
        let (x, y, z1) = (ds.column(0), ds.column(1), ds.column(2));
        for i in 0..ds.n() {
            if z1[i] == 0 {
                assert_eq!((x[i], y[i]), (0, 0));
            }
        }
        assert_eq!(ds.meta(0).n_levels(), 3);
    }

    #[test]
    fn adding_conditioners_keeps_earlier_columns() {
        let a = simulate_calibration_null_variant(1, 200, NullVariant::StrictBinary, 5).unwrap();
        let b = simulate_calibration_null_variant(4, 200, NullVariant::StrictBinary, 5).unwrap();
        for v in 0..3 {
            assert_eq!(a.column(v), b.column(v));
        }
    }

    #[test]
    fn zero_effect_gives_fair_coins() {
        let ds = simulate_discrimination_binary(3, 0.0, 20_000, true, 1).unwrap();
        for v in 0..ds.n_vars() {
            let mean = ds.column(v).iter().sum::<usize>() as f64 / ds.n() as f64;
            assert!((mean - 0.5).abs() < 0.015, "column {v} mean {mean}");
        }
    }

    #[test]
    fn ordinal_permutation_leaves_x_and_y() {
        let a = simulate_discrimination_ordinal(2, 300, false, 8).unwrap();
        let b = simulate_discrimination_ordinal(2, 300, true, 8).unwrap();
        assert_eq!(a.column(0), b.column(0));
        assert_eq!(a.column(1), b.column(1));
        assert_ne!(a.column(2), b.column(2));
        let mut sa = a.column(2).to_vec();
        let mut sb = b.column(2).to_vec();
        sa.sort_unstable();
        sb.sort_unstable();
        assert_eq!(sa, sb);
    }

    #[test]
    fn same_spec_same_data() {
        let spec = SimSpec {
            protocol: Protocol::DagLogistic,
            n: 100,
            k: 6,
            beta: 1.0,
            p_edge: 0.4,
            dependent: false,
            seed: 11,
        };
        let a = simulate(&spec).unwrap();
        let b = simulate(&spec).unwrap();
        assert_eq!(a.data, b.data);
        assert_eq!(a.dag, b.dag);
    }
}
