//! Brute-force oracles shared by the integration tests. None of them call
//! the library routine they check.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use catci::data::{Dataset, VariableKind, VariableMeta};
use catci::graph::Dag;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dataset(columns: Vec<(&str, VariableKind, usize, Vec<usize>)>) -> Dataset {
    let mut metas = Vec::new();
    let mut cols = Vec::new();
    for (name, kind, levels, col) in columns {
        metas.push(VariableMeta::numbered(name, kind, levels).unwrap());
        cols.push(col);
    }
    Dataset::new(metas, cols).unwrap()
}

pub fn uniform_codes(rng: &mut ChaCha8Rng, n: usize, levels: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..levels)).collect()
}

/// Random DAG over `n` nodes in a random topological order.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Dag {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((order[i], order[j]));
            }
        }
    }
    Dag::new(n, &edges).unwrap()
}

/// Every DAG on `n` labelled nodes, by enumerating edge subsets with all
/// three states per pair and discarding cyclic ones.
pub fn all_dags(n: usize) -> Vec<Dag> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let total = 3usize.pow(pairs.len() as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut c = code;
        let mut edges = Vec::new();
        for &(a, b) in &pairs {
            match c % 3 {
                1 => edges.push((a, b)),
                2 => edges.push((b, a)),
                _ => {}
            }
            c /= 3;
        }
        if let Ok(g) = Dag::new(n, &edges) {
            out.push(g);
        }
    }
    out
}

fn descendants(n: usize, edges: &[(usize, usize)], v: usize) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut stack = vec![v];
    seen[v] = true;
    while let Some(u) = stack.pop() {
        for &(a, b) in edges {
            if a == u && !seen[b] {
                seen[b] = true;
                stack.push(b);
            }
        }
    }
    seen
}

/// Every simple path from `x` to `y` in the skeleton of `g`.
pub fn simple_paths(g: &Dag, x: usize, y: usize) -> Vec<Vec<usize>> {
    fn walk(g: &Dag, y: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let last = *path.last().unwrap();
        if last == y {
            out.push(path.clone());
            return;
        }
        for w in 0..g.n_vars() {
            if !path.contains(&w) && (g.has_edge(last, w) || g.has_edge(w, last)) {
                path.push(w);
                walk(g, y, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(g, y, &mut vec![x], &mut out);
    out
}

/// Whether `z` blocks `path`: some collider has no descendant in `z`, or
/// some non-collider is in `z`.
pub fn path_blocked(g: &Dag, path: &[usize], z: &[usize]) -> bool {
    let edges = g.edges();
    (1..path.len() - 1).any(|i| {
        let (a, m, b) = (path[i - 1], path[i], path[i + 1]);
        if g.has_edge(a, m) && g.has_edge(b, m) {
            let desc = descendants(g.n_vars(), &edges, m);
            !z.iter().any(|&d| desc[d])
        } else {
            z.contains(&m)
        }
    })
}

/// d-separation by listing every simple path between `x` and `y` in the
/// skeleton and checking that each is blocked.
pub fn dsep_by_paths(g: &Dag, x: usize, y: usize, z: &[usize]) -> bool {
    simple_paths(g, x, y).iter().all(|p| path_blocked(g, p, z))
}

/// Q1 by explicit sums: `n * mean(w)^2 / var(w)` with divisor `n`.
pub fn q1_oracle(rx: &[f64], ry: &[f64]) -> f64 {
    let n = rx.len() as f64;
    let mut s = 0.0;
    let mut ss = 0.0;
    for i in 0..rx.len() {
        let w = rx[i] * ry[i];
        s += w;
        ss += w * w;
    }
    let mean = s / n;
    let var = ss / n - mean * mean;
    n * mean * mean / var
}

/// `(1/n) d S^{-1} d'` with `d` the column sums of `v` and `S` the centered
/// covariance (divisor n), using an explicit LU inverse.
pub fn quadratic_oracle(v: &DMatrix<f64>) -> f64 {
    let n = v.nrows();
    let p = v.ncols();
    let d: DVector<f64> = DVector::from_iterator(p, (0..p).map(|j| v.column(j).sum()));
    let mean = &d / n as f64;
    let mut s = DMatrix::<f64>::zeros(p, p);
    for i in 0..n {
        for a in 0..p {
            for b in 0..p {
                s[(a, b)] += (v[(i, a)] - mean[a]) * (v[(i, b)] - mean[b]);
            }
        }
    }
    s /= n as f64;
    let inv = s.try_inverse().expect("well-conditioned covariance");
    (d.transpose() * inv * &d)[(0, 0)] / n as f64
}

/// Product vectors for Q3 in y-major order: all x columns for the first y
/// column, then for the second, and so on.
pub fn q3_products(rx: &DMatrix<f64>, ry: &DMatrix<f64>) -> DMatrix<f64> {
    let n = rx.nrows();
    let (kx, ky) = (rx.ncols(), ry.ncols());
    DMatrix::from_fn(n, kx * ky, |i, c| rx[(i, c % kx)] * ry[(i, c / kx)])
}

/// Stratified G² from its definition `2 Σ o ln(o n_s / (r c))`.
pub fn g2_oracle(x: &[usize], y: &[usize], strata: &[Vec<usize>]) -> f64 {
    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for i in 0..x.len() {
        let key: Vec<usize> = strata.iter().map(|s| s[i]).collect();
        groups.entry(key).or_default().push(i);
    }
    let mut total = 0.0;
    for rows in groups.values() {
        let mut cell: HashMap<(usize, usize), f64> = HashMap::new();
        let mut rx: HashMap<usize, f64> = HashMap::new();
        let mut ry: HashMap<usize, f64> = HashMap::new();
        for &i in rows {
            *cell.entry((x[i], y[i])).or_default() += 1.0;
            *rx.entry(x[i]).or_default() += 1.0;
            *ry.entry(y[i]).or_default() += 1.0;
        }
        let ns = rows.len() as f64;
        for (&(a, b), &o) in &cell {
            total += 2.0 * o * (o * ns / (rx[&a] * ry[&b])).ln();
        }
    }
    total
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let mut grid: Vec<f64> = a.iter().chain(&b).copied().collect();
    grid.sort_by(f64::total_cmp);
    let cdf = |s: &[f64], t: f64| s.partition_point(|&v| v <= t) as f64 / s.len() as f64;
    grid.iter().map(|&t| (cdf(&a, t) - cdf(&b, t)).abs()).fold(0.0, f64::max)
}

/// Random probability rows with entries bounded away from 0.
pub fn random_simplex(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DMatrix<f64> {
    let mut m = DMatrix::from_fn(n, k, |_, _| 0.05 + rng.random::<f64>());
    for mut row in m.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    m
}
