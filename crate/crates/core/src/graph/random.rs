//! Random DAGs and conditional independence claims on them.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{d_separated, Dag};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// `x ⟂ y | z` by variable index, with its d-separation truth value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CiClaim {
    pub x: usize,
    pub y: usize,
    pub z: Vec<usize>,
    pub holds: bool,
}

/// DAG on `0..n` in that topological order; each pair `i < j` gets the edge
/// `i -> j` with probability `p_edge`.
pub fn random_dag(n: usize, p_edge: f64, seed: u64) -> Result<Dag> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("a random DAG needs at least 2 variables, got {n}")));
    }
    if !(0.0..=1.0).contains(&p_edge) {
        return Err(Error::InvalidArgument(format!("edge probability {p_edge} is outside [0, 1]")));
    }
    let mut rng = stream_rng(seed, 0);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p_edge) {
                edges.push((i, j));
            }
        }
    }
    Dag::new(n, &edges)
}

/// One claim per non-adjacent pair: the earlier variable is independent of
/// the later one given the later one's parents.
pub fn implied_cis(g: &Dag) -> Vec<CiClaim> {
    let topo = g.topo_order();
    let mut claims = Vec::new();
    for (pos, &y) in topo.iter().enumerate() {
        for &x in &topo[..pos] {
            if g.adjacent(x, y) {
                continue;
            }
            let z: Vec<usize> = g.parents(y).iter().copied().filter(|&p| p != x).collect();
            let holds = d_separated(g, x, y, &z).expect("indices come from the graph");
            assert!(holds, "parents of {y} fail to separate it from {x}");
            claims.push(CiClaim { x, y, z, holds });
        }
    }
    claims.sort_by_key(|a| (a.x.min(a.y), a.x.max(a.y)));
    claims
}

/// `count` random claims: a uniform pair, a uniform conditioning-set size in
/// `0..=max_z`, and a uniform subset of the remaining variables.
pub fn random_ci_queries(g: &Dag, count: usize, max_z: usize, seed: u64) -> Result<Vec<CiClaim>> {
    let n = g.n_vars();
    if n < 2 {
        return Err(Error::InvalidArgument("need at least 2 variables".into()));
    }
    if max_z > n - 2 {
        return Err(Error::InvalidArgument(format!(
            "conditioning sets of size {max_z} do not fit in {n} variables"
        )));
    }
    let mut rng = stream_rng(seed, 1);
    let mut claims = Vec::with_capacity(count);
    for _ in 0..count {
        let x = rng.random_range(0..n);
        let mut y = rng.random_range(0..n - 1);
        if y >= x {
            y += 1;
        }
        let rest: Vec<usize> = (0..n).filter(|&v| v != x && v != y).collect();
        let size = rng.random_range(0..=max_z);
        let mut z: Vec<usize> = index::sample(&mut rng, rest.len(), size).iter().map(|i| rest[i]).collect();
        z.sort_unstable();
        let holds = d_separated(g, x, y, &z)?;
        claims.push(CiClaim { x, y, z, holds });
    }
    Ok(claims)
}
