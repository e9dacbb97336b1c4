//! Ball Divergence two-sample test for multivariate equality in distribution.
//!
//! For samples `X` (n rows) and `Y` (m rows) the statistic is
//!
//! ```text
//! BD = 1/n^2 sum_{i,j in X} (A^X_ij - A^Y_ij)^2 + 1/m^2 sum_{k,l in Y} (C^X_kl - C^Y_kl)^2
//! ```
//!
//! where `A^X_ij` is the fraction of `X` inside the closed ball centred at
//! `x_i` with radius `|x_j - x_i|`, `A^Y_ij` the fraction of `Y` inside the
//! same ball, and the `C` terms are the same with balls centred on and sized
//! by points of `Y`. Distances are Euclidean.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::{TestMethod, TestResult};
use crate::math;
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Smallest permutation count accepted by [`ball_divergence_test`].
pub const MIN_PERMUTATIONS: usize = 99;

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    math::sqrt(a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum())
}

/// Pairwise distances of the pooled sample with every row's neighbours
/// pre-sorted, so that the statistic for any split into sizes `(n, m)`
/// costs `O((n + m)^2)`.
#[derive(Debug, Clone)]
pub struct BallPool {
    size: usize,
    dist: Vec<f64>,
    order: Vec<u32>,
}

impl BallPool {
    pub fn new<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let size = rows.len();
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::Shape {
                    expected: dim,
                    got: r.len(),
                });
            }
            if !r.iter().all(|v| v.is_finite()) {
                return Err(Error::Data(format!("row {i} has a non-finite value")));
            }
        }
        let mut dist = alloc::vec![0.0; size * size];
        for i in 0..size {
            for j in (i + 1)..size {
                let d = euclidean(rows[i].as_ref(), rows[j].as_ref());
                dist[i * size + j] = d;
                dist[j * size + i] = d;
            }
        }
        let mut order = Vec::with_capacity(size * size);
        for i in 0..size {
            let row = &dist[i * size..(i + 1) * size];
            let mut idx: Vec<u32> = (0..size as u32).collect();
            idx.sort_by(|&a, &b| row[a as usize].total_cmp(&row[b as usize]));
            order.extend(idx);
        }
        Ok(BallPool { size, dist, order })
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// Statistic for the split where `in_x[i]` marks membership of the first sample.
    pub fn statistic(&self, in_x: &[bool]) -> f64 {
        let size = self.size;
        let n = in_x.iter().filter(|&&b| b).count();
        let m = size - n;
        let (nf, mf) = (n as f64, m as f64);
        let (mut sum_x, mut sum_y) = (0.0, 0.0);
        for c in 0..size {
            let own = in_x[c];
            let row = &self.dist[c * size..(c + 1) * size];
            let ord = &self.order[c * size..(c + 1) * size];
            let (mut cx, mut cy) = (0usize, 0usize);
            let mut start = 0;
            while start < size {
                let radius = row[ord[start] as usize];
                let mut end = start;
                while end < size && row[ord[end] as usize] == radius {
                    if in_x[ord[end] as usize] {
                        cx += 1;
                    } else {
                        cy += 1;
                    }
                    end += 1;
                }
                let same = ord[start..end]
                    .iter()
                    .filter(|&&q| in_x[q as usize] == own)
                    .count();
                if same > 0 {
                    let diff = cx as f64 / nf - cy as f64 / mf;
                    let term = same as f64 * diff * diff;
                    if own {
                        sum_x += term;
                    } else {
                        sum_y += term;
                    }
                }
                start = end;
            }
        }
        sum_x / (nf * nf) + sum_y / (mf * mf)
    }
}

fn check_sizes<R: AsRef<[f64]>>(x: &[R], y: &[R]) -> Result<()> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::Argument(format!(
            "Ball Divergence needs at least 2 rows per sample, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let d = x[0].as_ref().len();
    if d == 0 {
        return Err(Error::Argument("rows must have at least one column".to_string()));
    }
    if let Some(r) = x.iter().chain(y).find(|r| r.as_ref().len() != d) {
        return Err(Error::Shape {
            expected: d,
            got: r.as_ref().len(),
        });
    }
    Ok(())
}

fn pooled<R: AsRef<[f64]>>(x: &[R], y: &[R]) -> Result<(BallPool, Vec<bool>)> {
    check_sizes(x, y)?;
    let rows: Vec<&[f64]> = x.iter().chain(y).map(|r| r.as_ref()).collect();
    let pool = BallPool::new(&rows)?;
    let labels = (0..rows.len()).map(|i| i < x.len()).collect();
    Ok((pool, labels))
}

pub fn ball_divergence_statistic<R: AsRef<[f64]>>(x: &[R], y: &[R]) -> Result<f64> {
    let (pool, labels) = pooled(x, y)?;
    Ok(pool.statistic(&labels))
}

/// Permutation test: `p = (1 + #{BD_perm >= BD_obs}) / (B + 1)`, where each
/// replicate shuffles the pooled row labels keeping sizes `(n, m)`.
pub fn ball_divergence_test<R: AsRef<[f64]>>(
    x: &[R],
    y: &[R],
    permutations: usize,
    seed: u64,
) -> Result<TestResult> {
    if permutations < MIN_PERMUTATIONS {
        return Err(Error::Argument(format!(
            "need at least {MIN_PERMUTATIONS} permutations, got {permutations}"
        )));
    }
    let (pool, mut labels) = pooled(x, y)?;
    let observed = pool.statistic(&labels);
    let mut rng = rng_from_seed(seed);
    let mut exceed = 0usize;
    for _ in 0..permutations {
        labels.shuffle(&mut rng);
        if pool.statistic(&labels) >= observed {
            exceed += 1;
        }
    }
    Ok(TestResult {
        statistic: observed,
        p_value: (1 + exceed) as f64 / (permutations + 1) as f64,
        method: TestMethod::BallPermutation,
        n: x.len(),
        m: y.len(),
        permutations: Some(permutations),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn identical_samples_are_zero_with_unit_p() {
        let x = vec![[0.0, 1.0], [2.0, 0.5], [1.0, 1.0], [3.0, -1.0]];
        assert_eq!(ball_divergence_statistic(&x, &x).unwrap(), 0.0);
        let r = ball_divergence_test(&x, &x, 99, 1).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.permutations, Some(99));
    }

    #[test]
    fn size_and_count_errors() {
        let x = vec![[0.0]];
        let y = vec![[0.0], [1.0]];
        assert!(matches!(ball_divergence_statistic(&x, &y), Err(Error::Argument(_))));
        assert!(matches!(ball_divergence_test(&y, &y, 98, 0), Err(Error::Argument(_))));
        let a: Vec<Vec<f64>> = vec![vec![0.0, 1.0], vec![1.0, 1.0]];
        let b: Vec<Vec<f64>> = vec![vec![0.0], vec![1.0]];
        assert!(matches!(ball_divergence_statistic(&a, &b), Err(Error::Shape { .. })));
    }

    #[test]
    fn hand_computed_one_dimensional_case() {
        // x = {0, 1}, y = {10, 11} (1-D), n = m = 2.
        // Centre 0: radii 0 -> A^X = 1/2, A^Y = 0; radius 1 -> A^X = 1, A^Y = 0.
        // Same for centre 1. X part: (0.25 + 1 + 0.25 + 1) / 4 = 0.625; Y part mirrors.
        let x = vec![[0.0], [1.0]];
        let y = vec![[10.0], [11.0]];
        assert_eq!(ball_divergence_statistic(&x, &y).unwrap(), 1.25);
    }
}
