//! DAGs, CPDAGs and the ground-truth machinery built on them.

mod cpdag;
mod dsep;
mod random;

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use cpdag::{consistent_extension, cpdag_of, d_connected_pairs, meek_closure, Pdag};
pub use dsep::{ancestors, d_separated};
pub use random::{implied_cis, random_ci_queries, random_dag, CiClaim};

use crate::error::{Error, Result};

/// Unordered pairs stored as `(min, max)`.
pub type EdgeSet = BTreeSet<(usize, usize)>;

pub fn pair(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    n: usize,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl Dag {
    /// Builds a DAG from directed edges `(from, to)`; fails on cycles,
    /// self-loops and out-of-range indices.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Dag> {
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n || a == b {
                return Err(Error::Graph(format!("invalid edge {a} -> {b} for {n} variables")));
            }
            if !children[a].contains(&b) {
                children[a].push(b);
                parents[b].push(a);
            }
        }
        parents.iter_mut().for_each(|p| p.sort_unstable());
        children.iter_mut().for_each(|c| c.sort_unstable());
        // Kahn's algorithm, smallest index first
        let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            topo.push(v);
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if topo.len() != n {
            return Err(Error::Graph("edges contain a directed cycle".into()));
        }
        Ok(Dag {
            n,
            parents,
            children,
            topo,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn topo_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.children[from].binary_search(&to).is_ok()
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    /// Directed edges in ascending order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|a| self.children[a].iter().map(move |&b| (a, b)))
            .collect()
    }

    pub fn n_edges(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    pub fn skeleton(&self) -> EdgeSet {
        self.edges().into_iter().map(|(a, b)| pair(a, b)).collect()
    }

    /// Colliders `a -> c <- b` with `a < b` non-adjacent, as `(a, c, b)`.
    pub fn v_structures(&self) -> BTreeSet<(usize, usize, usize)> {
        let mut out = BTreeSet::new();
        for c in 0..self.n {
            let ps = &self.parents[c];
            for (i, &a) in ps.iter().enumerate() {
                for &b in &ps[i + 1..] {
                    if !self.adjacent(a, b) {
                        out.insert((a, c, b));
                    }
                }
            }
        }
        out
    }

    /// Same skeleton and v-structures.
    pub fn markov_equivalent(&self, other: &Dag) -> bool {
        self.n == other.n && self.skeleton() == other.skeleton() && self.v_structures() == other.v_structures()
    }

    pub fn to_edge_list(&self) -> String {
        edge_list_text(self.n, &self.edges(), &[])
    }
}

/// Partially directed graph with disjoint directed and undirected edge sets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Cpdag {
    n: usize,
    directed: BTreeSet<(usize, usize)>,
    undirected: EdgeSet,
}

impl Cpdag {
    pub fn new(n: usize, directed: &[(usize, usize)], undirected: &[(usize, usize)]) -> Result<Cpdag> {
        let mut seen = EdgeSet::new();
        for &(a, b) in directed.iter().chain(undirected) {
            if a >= n || b >= n || a == b {
                return Err(Error::Graph(format!("invalid edge between {a} and {b} for {n} variables")));
            }
            if !seen.insert(pair(a, b)) {
                return Err(Error::Graph(format!("pair {a}, {b} appears twice")));
            }
        }
        Ok(Cpdag {
            n,
            directed: directed.iter().copied().collect(),
            undirected: undirected.iter().map(|&(a, b)| pair(a, b)).collect(),
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn directed(&self) -> &BTreeSet<(usize, usize)> {
        &self.directed
    }

    pub fn undirected(&self) -> &EdgeSet {
        &self.undirected
    }

    pub fn skeleton(&self) -> EdgeSet {
        self.directed
            .iter()
            .map(|&(a, b)| pair(a, b))
            .chain(self.undirected.iter().copied())
            .collect()
    }

    pub fn n_edges(&self) -> usize {
        self.directed.len() + self.undirected.len()
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.directed.contains(&(a, b)) || self.directed.contains(&(b, a)) || self.undirected.contains(&pair(a, b))
    }

    /// Colliders formed by directed edges with non-adjacent tails.
    pub fn v_structures(&self) -> BTreeSet<(usize, usize, usize)> {
        let mut out = BTreeSet::new();
        for &(a, c) in &self.directed {
            for &(b, c2) in &self.directed {
                if c == c2 && a < b && !self.adjacent(a, b) {
                    out.insert((a, c, b));
                }
            }
        }
        out
    }

    pub fn to_edge_list(&self) -> String {
        let directed: Vec<_> = self.directed.iter().copied().collect();
        let undirected: Vec<_> = self.undirected.iter().copied().collect();
        edge_list_text(self.n, &directed, &undirected)
    }
}

fn edge_list_text(n: usize, directed: &[(usize, usize)], undirected: &[(usize, usize)]) -> String {
    let mut s = format!("{n}\n");
    for (a, b) in directed {
        let _ = writeln!(s, "{a} -> {b}");
    }
    for (a, b) in undirected {
        let _ = writeln!(s, "{a} -- {b}");
    }
    s
}

/// Parsed edge-list file.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EdgeList {
    pub n_vars: usize,
    pub directed: Vec<(usize, usize)>,
    pub undirected: Vec<(usize, usize)>,
}

impl EdgeList {
    pub fn skeleton(&self) -> EdgeSet {
        self.directed
            .iter()
            .chain(&self.undirected)
            .map(|&(a, b)| pair(a, b))
            .collect()
    }

    pub fn to_dag(&self) -> Result<Dag> {
        if !self.undirected.is_empty() {
            return Err(Error::Graph("edge list has undirected edges".into()));
        }
        Dag::new(self.n_vars, &self.directed)
    }

    pub fn to_cpdag(&self) -> Result<Cpdag> {
        Cpdag::new(self.n_vars, &self.directed, &self.undirected)
    }
}

/// Parses the edge-list text format: a header line with the variable count,
/// then one `a -> b` or `a -- b` per line. Endpoints are indices, or names
/// when `names` is given. Blank lines and `#` comments are skipped.
pub fn parse_edge_list(text: &str, names: Option<&[String]>) -> Result<EdgeList> {
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .enumerate()
        .filter(|(_, l)| !l.is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Graph("empty edge list".into()))?;
    let n_vars: usize = header
        .parse()
        .map_err(|_| Error::Graph(format!("header `{header}` is not a variable count")))?;
    if let Some(names) = names {
        if names.len() != n_vars {
            return Err(Error::Graph(format!(
                "edge list declares {n_vars} variables but {} names were given",
                names.len()
            )));
        }
    }
    let resolve = |tok: &str, line: usize| -> Result<usize> {
        let idx = match names.and_then(|ns| ns.iter().position(|n| n == tok)) {
            Some(i) => i,
            None => tok
                .parse()
                .map_err(|_| Error::Graph(format!("line {}: unknown variable `{tok}`", line + 1)))?,
        };
        if idx >= n_vars {
            return Err(Error::Graph(format!("line {}: variable {idx} out of range", line + 1)));
        }
        Ok(idx)
    };
    let mut out = EdgeList {
        n_vars,
        ..Default::default()
    };
    for (line, l) in lines {
        let (a, b, directed) = if let Some((a, b)) = l.split_once("->") {
            (a, b, true)
        } else if let Some((a, b)) = l.split_once("--") {
            (a, b, false)
        } else {
            return Err(Error::Graph(format!("line {}: expected `a -> b` or `a -- b`", line + 1)));
        };
        let (a, b) = (resolve(a.trim(), line)?, resolve(b.trim(), line)?);
        if directed {
            out.directed.push((a, b));
        } else {
            out.undirected.push((a, b));
        }
    }
    Ok(out)
}

/// Precision, recall and F1 over unordered pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision is 1 when nothing is predicted, recall is 1 when nothing is
/// true, and F1 is 0 when both precision and recall are 0.
pub fn precision_recall(predicted: &EdgeSet, truth: &EdgeSet) -> F1Score {
    let tp = predicted.intersection(truth).count() as f64;
    let precision = if predicted.is_empty() { 1.0 } else { tp / predicted.len() as f64 };
    let recall = if truth.is_empty() { 1.0 } else { tp / truth.len() as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    F1Score { precision, recall, f1 }
}

pub fn skeleton_f1(learned: &EdgeSet, truth: &EdgeSet) -> F1Score {
    precision_recall(learned, truth)
}

/// Nodes reachable from `start` along `next`.
pub(crate) fn reach(n: usize, start: &[usize], next: impl Fn(usize) -> Vec<usize>) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut queue: VecDeque<usize> = start.iter().copied().collect();
    for &s in start {
        seen[s] = true;
    }
    while let Some(v) = queue.pop_front() {
        for w in next(v) {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen
}
