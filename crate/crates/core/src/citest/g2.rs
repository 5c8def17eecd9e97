//! Stratified likelihood-ratio (G²) test and its within-stratum permutation
//! variant.

use std::collections::HashMap;

use rand::seq::SliceRandom;

use super::{CiQuery, Diagnostics, TestFamily, TestResult};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::stats::chi_square_sf;

/// Rows grouped by their joint conditioning pattern, in order of first
/// appearance.
pub(crate) struct Strata {
    pub of_row: Vec<usize>,
    pub count: usize,
}

pub(crate) fn strata(ds: &Dataset, z: &[usize]) -> Strata {
    let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
    let of_row = (0..ds.n())
        .map(|i| {
            let key: Vec<usize> = z.iter().map(|&v| ds.column(v)[i]).collect();
            let next = ids.len();
            *ids.entry(key).or_insert(next)
        })
        .collect();
    Strata { of_row, count: ids.len() }
}

struct Layout<'a> {
    strata: &'a Strata,
    y: &'a [usize],
    kx: usize,
    ky: usize,
}

impl Layout<'_> {
    /// G² and its df summed over strata for the given x column.
    fn statistic(&self, x: &[usize]) -> (f64, usize) {
        let cells = self.kx * self.ky;
        let mut counts = vec![0u32; self.strata.count * cells];
        for (i, &s) in self.strata.of_row.iter().enumerate() {
            counts[s * cells + x[i] * self.ky + self.y[i]] += 1;
        }
        let mut g2 = 0.0;
        let mut df = 0;
        let mut rows = vec![0u32; self.kx];
        let mut cols = vec![0u32; self.ky];
        for table in counts.chunks(cells) {
            rows.iter_mut().for_each(|r| *r = 0);
            cols.iter_mut().for_each(|c| *c = 0);
            let mut total = 0u32;
            for a in 0..self.kx {
                for b in 0..self.ky {
                    let o = table[a * self.ky + b];
                    rows[a] += o;
                    cols[b] += o;
                    total += o;
                }
            }
            let k = rows.iter().filter(|&&r| r > 0).count();
            let r = cols.iter().filter(|&&c| c > 0).count();
            if k < 2 || r < 2 {
                continue;
            }
            df += (k - 1) * (r - 1);
            let t = f64::from(total);
            for a in 0..self.kx {
                for b in 0..self.ky {
                    let o = table[a * self.ky + b];
                    if o > 0 {
                        let o = f64::from(o);
                        let e = f64::from(rows[a]) * f64::from(cols[b]) / t;
                        g2 += o * (o / e).ln();
                    }
                }
            }
        }
        ((2.0 * g2).max(0.0), df)
    }
}

fn resolve(ds: &Dataset, q: &CiQuery) -> Result<(usize, usize, Vec<usize>)> {
    q.validate()?;
    Ok((
        ds.index_of(&q.x)?,
        ds.index_of(&q.y)?,
        q.z.iter().map(|v| ds.index_of(v)).collect::<Result<Vec<_>>>()?,
    ))
}

fn diagnostics(n: usize, degenerate: bool) -> Diagnostics {
    Diagnostics {
        sigma_rank: 0,
        estimator: None,
        n_used: n,
        degenerate,
        converged: true,
    }
}

/// Stratified G² with df summed over strata using the non-empty levels of
/// each stratum.
pub fn g2_test(ds: &Dataset, q: &CiQuery) -> Result<TestResult> {
    let q = q.canonical();
    let (x, y, z) = resolve(ds, &q)?;
    let st = strata(ds, &z);
    let layout = Layout {
        strata: &st,
        y: ds.column(y),
        kx: ds.meta(x).n_levels(),
        ky: ds.meta(y).n_levels(),
    };
    let (stat, df) = layout.statistic(ds.column(x));
    if df == 0 {
        return Ok(TestResult::degenerate(TestFamily::G2, diagnostics(ds.n(), true)));
    }
    Ok(TestResult {
        statistic: stat,
        df,
        p_value: chi_square_sf(stat, df),
        family: TestFamily::G2,
        diagnostics: diagnostics(ds.n(), false),
    })
}

/// Permutation p-value of the stratified G²: `x` is shuffled within each
/// stratum `b` times.
pub fn g2_montecarlo_test(ds: &Dataset, q: &CiQuery, b: usize, seed: u64) -> Result<TestResult> {
    if b < 100 {
        return Err(Error::InvalidArgument(format!("at least 100 permutations are required, got {b}")));
    }
    let q = q.canonical();
    let (x, y, z) = resolve(ds, &q)?;
    let st = strata(ds, &z);
    let layout = Layout {
        strata: &st,
        y: ds.column(y),
        kx: ds.meta(x).n_levels(),
        ky: ds.meta(y).n_levels(),
    };
    let xs = ds.column(x);
    let (observed, _) = layout.statistic(xs);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); st.count];
    for (i, &s) in st.of_row.iter().enumerate() {
        members[s].push(i);
    }
    let mut rng = stream_rng(q.seed_key(seed), 0x6d63);
    let mut perm = xs.to_vec();
    let mut pool = Vec::new();
    let threshold = observed - 1e-9 * observed.max(1.0);
    let mut exceed = 0usize;
    for _ in 0..b {
        for rows in &members {
            pool.clear();
            pool.extend(rows.iter().map(|&i| xs[i]));
            pool.shuffle(&mut rng);
            for (&i, &v) in rows.iter().zip(&pool) {
                perm[i] = v;
            }
        }
        if layout.statistic(&perm).0 >= threshold {
            exceed += 1;
        }
    }
    Ok(TestResult {
        statistic: observed,
        df: 0,
        p_value: (1 + exceed) as f64 / (b + 1) as f64,
        family: TestFamily::G2MonteCarlo,
        diagnostics: diagnostics(ds.n(), false),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{VariableKind, VariableMeta};

    fn dataset(cols: Vec<Vec<usize>>) -> Dataset {
        let metas = (0..cols.len())
            .map(|j| {
                let l = cols[j].iter().max().unwrap() + 1;
                VariableMeta::numbered(format!("v{j}"), VariableKind::Categorical, l.max(2)).unwrap()
            })
            .collect();
        Dataset::new(metas, cols).unwrap()
    }

    #[test]
    fn independent_within_every_stratum_gives_zero() {
        // each stratum holds a full 2x2 grid with equal counts
        let x = vec![0, 0, 1, 1, 0, 0, 1, 1];
        let y = vec![0, 1, 0, 1, 0, 1, 0, 1];
        let z = vec![0, 0, 0, 0, 1, 1, 1, 1];
        let ds = dataset(vec![x, y, z]);
        let r = g2_test(&ds, &CiQuery::new("v0", "v1", &["v2"])).unwrap();
        assert!(r.statistic.abs() < 1e-12);
        assert_eq!(r.df, 2);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn matches_hand_summed_likelihood_ratio() {
        // z=0: [[3,1],[1,3]]; z=1: [[2,2],[1,3]]
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut z = Vec::new();
        for (s, table) in [[[3, 1], [1, 3]], [[2, 2], [1, 3]]].iter().enumerate() {
            for a in 0..2 {
                for b in 0..2 {
                    for _ in 0..table[a][b] {
                        x.push(a);
                        y.push(b);
                        z.push(s);
                    }
                }
            }
        }
        let ds = dataset(vec![x, y, z]);
        let r = g2_test(&ds, &CiQuery::new("v0", "v1", &["v2"])).unwrap();
        let term = |o: f64, e: f64| o * (o / e).ln();
        let s0 = term(3.0, 2.0) * 2.0 + term(1.0, 2.0) * 2.0;
        let s1 = term(2.0, 1.5) + term(2.0, 2.5) + term(1.0, 1.5) + term(3.0, 2.5);
        assert!((r.statistic - 2.0 * (s0 + s1)).abs() < 1e-10);
        assert_eq!(r.df, 2);
    }

    #[test]
    fn empty_levels_in_a_stratum_reduce_df() {
        let x = vec![0, 1, 2, 0, 1, 0, 1];
        let y = vec![0, 1, 1, 1, 0, 0, 1];
        let z = vec![0, 0, 0, 0, 0, 1, 1];
        let ds = dataset(vec![x, y, z]);
        let r = g2_test(&ds, &CiQuery::new("v0", "v1", &["v2"])).unwrap();
        // stratum 0 is 3x2, stratum 1 is 2x2
        assert_eq!(r.df, 2 + 1);
    }

    #[test]
    fn montecarlo_is_deterministic_and_one_at_zero() {
        let x = vec![0, 0, 1, 1, 0, 0, 1, 1];
        let y = vec![0, 1, 0, 1, 0, 1, 0, 1];
        let ds = dataset(vec![x, y]);
        let q = CiQuery::new("v0", "v1", &[]);
        let r = g2_montecarlo_test(&ds, &q, 199, 3).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.df, 0);
        let ds2 = dataset(vec![vec![0, 0, 0, 1, 1, 1, 0, 1], vec![0, 0, 1, 1, 1, 1, 0, 0]]);
        let a = g2_montecarlo_test(&ds2, &q, 199, 3).unwrap();
        let b = g2_montecarlo_test(&ds2, &q, 199, 3).unwrap();
        assert_eq!(a.p_value, b.p_value);
        assert!(g2_montecarlo_test(&ds2, &q, 50, 3).is_err());
    }
}
