//! Orientation rules, CPDAGs of DAGs and consistent extensions.

use super::{ancestors, pair, reach, Cpdag, Dag, EdgeSet};
use crate::error::{Error, Result};

/// Mutable partially directed graph used while orienting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pdag {
    n: usize,
    arrow: Vec<Vec<bool>>,
    undirected: Vec<Vec<bool>>,
}

impl Pdag {
    pub fn from_skeleton(n: usize, skeleton: &EdgeSet) -> Pdag {
        let mut p = Pdag {
            n,
            arrow: vec![vec![false; n]; n],
            undirected: vec![vec![false; n]; n],
        };
        for &(a, b) in skeleton {
            p.undirected[a][b] = true;
            p.undirected[b][a] = true;
        }
        p
    }

    pub fn from_cpdag(c: &Cpdag) -> Pdag {
        let mut p = Pdag::from_skeleton(c.n_vars(), c.undirected());
        for &(a, b) in c.directed() {
            p.arrow[a][b] = true;
        }
        p
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn is_arrow(&self, a: usize, b: usize) -> bool {
        self.arrow[a][b]
    }

    pub fn is_undirected(&self, a: usize, b: usize) -> bool {
        self.undirected[a][b]
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.arrow[a][b] || self.arrow[b][a] || self.undirected[a][b]
    }

    /// Turns `a -- b` into `a -> b`. Returns false, leaving the graph
    /// unchanged, when the pair is not currently undirected.
    pub fn orient(&mut self, a: usize, b: usize) -> bool {
        if !self.undirected[a][b] {
            return false;
        }
        self.undirected[a][b] = false;
        self.undirected[b][a] = false;
        self.arrow[a][b] = true;
        true
    }

    pub fn to_cpdag(&self) -> Cpdag {
        let mut directed = Vec::new();
        let mut undirected = Vec::new();
        for a in 0..self.n {
            for b in 0..self.n {
                if self.arrow[a][b] {
                    directed.push((a, b));
                }
                if a < b && self.undirected[a][b] {
                    undirected.push((a, b));
                }
            }
        }
        Cpdag::new(self.n, &directed, &undirected).expect("pdag holds each pair once")
    }

    fn rule1(&self, a: usize, b: usize) -> bool {
        (0..self.n).any(|c| self.arrow[c][a] && !self.adjacent(c, b))
    }

    fn rule2(&self, a: usize, b: usize) -> bool {
        (0..self.n).any(|c| self.arrow[a][c] && self.arrow[c][b])
    }

    fn rule3(&self, a: usize, b: usize) -> bool {
        let mids: Vec<usize> = (0..self.n)
            .filter(|&c| self.undirected[a][c] && self.arrow[c][b])
            .collect();
        mids.iter()
            .enumerate()
            .any(|(i, &c)| mids[i + 1..].iter().any(|&d| !self.adjacent(c, d)))
    }

    fn rule4(&self, a: usize, b: usize) -> bool {
        (0..self.n).any(|k| {
            self.undirected[a][k]
                && !self.adjacent(k, b)
                && (0..self.n).any(|l| self.arrow[k][l] && self.arrow[l][b] && self.adjacent(a, l))
        })
    }
}

/// Applies the four orientation rules until nothing changes, scanning pairs
/// in ascending order.
pub fn meek_closure(p: &mut Pdag) {
    loop {
        let mut changed = false;
        for a in 0..p.n {
            for b in 0..p.n {
                if p.undirected[a][b] && (p.rule1(a, b) || p.rule2(a, b) || p.rule3(a, b) || p.rule4(a, b)) {
                    p.orient(a, b);
                    changed = true;
                }
            }
        }
        if !changed {
            return;
        }
    }
}

/// The CPDAG representing the Markov equivalence class of `g`.
pub fn cpdag_of(g: &Dag) -> Cpdag {
    let mut p = Pdag::from_skeleton(g.n_vars(), &g.skeleton());
    for (a, c, b) in g.v_structures() {
        p.orient(a, c);
        p.orient(b, c);
    }
    meek_closure(&mut p);
    p.to_cpdag()
}

/// A DAG with the skeleton and v-structures of `c`, built by repeatedly
/// removing a sink whose undirected neighbours are adjacent to all its
/// other neighbours. Ties go to the highest index.
pub fn consistent_extension(c: &Cpdag) -> Result<Dag> {
    let p = Pdag::from_cpdag(c);
    let n = p.n;
    let mut alive = vec![true; n];
    let mut edges: Vec<(usize, usize)> = c.directed().iter().copied().collect();
    for _ in 0..n {
        let eligible = (0..n).rev().find(|&v| {
            alive[v]
                && !(0..n).any(|w| alive[w] && p.arrow[v][w])
                && (0..n).filter(|&u| alive[u] && p.undirected[v][u]).all(|u| {
                    (0..n).all(|w| w == u || !alive[w] || !p.adjacent(v, w) || p.adjacent(u, w))
                })
        });
        let Some(v) = eligible else {
            return Err(Error::Graph("the graph has no consistent extension".into()));
        };
        for u in 0..n {
            if alive[u] && p.undirected[v][u] {
                edges.push((u, v));
            }
        }
        alive[v] = false;
    }
    Dag::new(n, &edges)
}

/// Pairs that are marginally d-connected, i.e. share a common ancestor, in a
/// consistent extension of `c`. When no extension exists, undirected edges
/// are followed in both directions. The flag reports that fallback.
pub fn d_connected_pairs(c: &Cpdag) -> (EdgeSet, bool) {
    let n = c.n_vars();
    let (anc, fallback): (Vec<Vec<bool>>, bool) = match consistent_extension(c) {
        Ok(g) => ((0..n).map(|v| ancestors(&g, &[v])).collect(), false),
        Err(_) => {
            let p = Pdag::from_cpdag(c);
            let up = |v: usize| (0..n).filter(|&u| p.arrow[u][v] || p.undirected[u][v]).collect();
            ((0..n).map(|v| reach(n, &[v], up)).collect(), true)
        }
    };
    let mut out = EdgeSet::new();
    for a in 0..n {
        for b in a + 1..n {
            if (0..n).any(|v| anc[a][v] && anc[b][v]) {
                out.insert(pair(a, b));
            }
        }
    }
    (out, fallback)
}
