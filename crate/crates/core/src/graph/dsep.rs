//! d-separation by reachability over (node, direction) states.

use std::collections::VecDeque;

use super::{reach, Dag};
use crate::error::{Error, Result};

/// `set` together with all of its ancestors.
pub fn ancestors(g: &Dag, set: &[usize]) -> Vec<bool> {
    reach(g.n_vars(), set, |v| g.parents(v).to_vec())
}

/// Whether every path between `x` and `y` is blocked by `z`.
pub fn d_separated(g: &Dag, x: usize, y: usize, z: &[usize]) -> Result<bool> {
    let n = g.n_vars();
    if x >= n || y >= n || z.iter().any(|&v| v >= n) {
        return Err(Error::Graph(format!("variable index out of range for {n} variables")));
    }
    if x == y || z.contains(&x) || z.contains(&y) {
        return Err(Error::InvalidArgument("x, y and z must be disjoint".into()));
    }
    let mut in_z = vec![false; n];
    for &v in z {
        in_z[v] = true;
    }
    let opens_collider = ancestors(g, z);
    // state index: 2 * node + (0 = arrived from a child, 1 = arrived from a parent)
    let mut visited = vec![false; 2 * n];
    let mut queue = VecDeque::from([(x, false)]);
    while let Some((v, from_parent)) = queue.pop_front() {
        let state = 2 * v + usize::from(from_parent);
        if visited[state] {
            continue;
        }
        visited[state] = true;
        if v == y {
            return Ok(false);
        }
        if !from_parent {
            if !in_z[v] {
                queue.extend(g.parents(v).iter().map(|&p| (p, false)));
                queue.extend(g.children(v).iter().map(|&c| (c, true)));
            }
        } else {
            if !in_z[v] {
                queue.extend(g.children(v).iter().map(|&c| (c, true)));
            }
            if opens_collider[v] {
                queue.extend(g.parents(v).iter().map(|&p| (p, false)));
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_is_blocked_by_middle() {
        let g = Dag::new(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(d_separated(&g, 0, 2, &[1]).unwrap());
        assert!(!d_separated(&g, 0, 2, &[]).unwrap());
    }

    #[test]
    fn conditioning_on_collider_or_descendant_opens() {
        let g = Dag::new(4, &[(0, 2), (1, 2), (2, 3)]).unwrap();
        assert!(d_separated(&g, 0, 1, &[]).unwrap());
        assert!(!d_separated(&g, 0, 1, &[2]).unwrap());
        assert!(!d_separated(&g, 0, 1, &[3]).unwrap());
    }

    #[test]
    fn invalid_arguments() {
        let g = Dag::new(3, &[(0, 1)]).unwrap();
        assert!(d_separated(&g, 0, 0, &[]).is_err());
        assert!(d_separated(&g, 0, 1, &[1]).is_err());
        assert!(d_separated(&g, 0, 5, &[]).is_err());
    }
}
