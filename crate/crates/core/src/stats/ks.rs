//! Two-sample Kolmogorov–Smirnov test.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use super::{check_finite, TestMethod, TestResult};
use crate::math;
use crate::{Error, Result};

/// How the p-value is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum KsMethod {
    /// Limiting Kolmogorov distribution of `D * sqrt(nm / (n + m))`.
    #[default]
    Asymptotic,
    /// Exact permutation distribution of `D` given the pooled sample,
    /// counted over lattice paths (ties handled by only scoring the path at
    /// the end of each tie block).
    Exact,
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// `max |F_x(t) - F_y(t)| * n * m` as an integer, over all pooled points.
fn scaled_statistic(xs: &[f64], ys: &[f64]) -> u128 {
    let (n, m) = (xs.len() as u128, ys.len() as u128);
    let (mut i, mut j) = (0usize, 0usize);
    let mut best = 0u128;
    while i < xs.len() || j < ys.len() {
        let t = match (xs.get(i), ys.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        while i < xs.len() && xs[i] == t {
            i += 1;
        }
        while j < ys.len() && ys[j] == t {
            j += 1;
        }
        best = best.max((i as u128 * m).abs_diff(j as u128 * n));
    }
    best
}

fn validate(x: &[f64], y: &[f64]) -> Result<()> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::Argument("KS test needs two non-empty samples".to_string()));
    }
    check_finite(x, "first")?;
    check_finite(y, "second")
}

/// `D = sup_t |F_x(t) - F_y(t)|`.
pub fn ks_statistic(x: &[f64], y: &[f64]) -> Result<f64> {
    validate(x, y)?;
    let num = scaled_statistic(&sorted(x), &sorted(y));
    Ok(num as f64 / (x.len() as f64 * y.len() as f64))
}

pub fn ks_two_sample(x: &[f64], y: &[f64], method: KsMethod) -> Result<TestResult> {
    validate(x, y)?;
    let (xs, ys) = (sorted(x), sorted(y));
    let (n, m) = (xs.len(), ys.len());
    let num = scaled_statistic(&xs, &ys);
    let statistic = num as f64 / (n as f64 * m as f64);
    let (p_value, method) = match method {
        KsMethod::Asymptotic => {
            let lambda = statistic * math::sqrt((n as f64 * m as f64) / (n + m) as f64);
            (kolmogorov_survival(lambda), TestMethod::KsAsymptotic)
        }
        KsMethod::Exact => (exact_p_value(&xs, &ys, num), TestMethod::KsExact),
    };
    Ok(TestResult {
        statistic,
        p_value,
        method,
        n,
        m,
        permutations: None,
    })
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if !(lambda > 0.0) {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        // Jacobi theta form of the CDF converges fast for small lambda.
        let c = core::f64::consts::PI * core::f64::consts::PI / (8.0 * lambda * lambda);
        let mut cdf = 0.0;
        for k in 1..=50u32 {
            let odd = f64::from(2 * k - 1);
            let term = math::exp(-odd * odd * c);
            cdf += term;
            if term < 1e-18 {
                break;
            }
        }
        1.0 - math::sqrt(2.0 * core::f64::consts::PI) / lambda * cdf
    } else {
        let mut sum = 0.0;
        for k in 1..=100u32 {
            let kf = f64::from(k);
            let term = math::exp(-2.0 * kf * kf * lambda * lambda);
            sum += if k % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        2.0 * sum
    };
    p.clamp(0.0, 1.0)
}

fn binomial(n: usize, k: usize) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Fraction of label assignments of the pooled sample whose scaled
/// statistic is at least `observed`.
fn exact_p_value(xs: &[f64], ys: &[f64], observed: u128) -> f64 {
    if observed == 0 {
        return 1.0;
    }
    let (n, m) = (xs.len(), ys.len());
    let mut pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let total = pooled.len();
    // block_end[pos]: the first `pos` pooled values end a tie block
    let block_end: Vec<bool> = (0..=total)
        .map(|pos| pos == 0 || pos == total || pooled[pos - 1] != pooled[pos])
        .collect();
    let outside = |i: usize, j: usize| (i as u128 * m as u128).abs_diff(j as u128 * n as u128) >= observed;

    match binomial(n + m, n) {
        Some(paths) => {
            // inside[i]: paths with i first-sample labels so far that never
            // reached the observed statistic at a block end
            let mut inside = vec![0u128; n + 1];
            inside[0] = 1;
            for pos in 0..total {
                let next_pos = pos + 1;
                for i in (0..=n.min(next_pos)).rev() {
                    let j = next_pos - i;
                    if j > m {
                        inside[i] = 0;
                        continue;
                    }
                    let from_y = if j >= 1 && i <= pos { inside[i] } else { 0 };
                    let from_x = if i >= 1 { inside[i - 1] } else { 0 };
                    inside[i] = from_y + from_x;
                    if block_end[next_pos] && outside(i, j) {
                        inside[i] = 0;
                    }
                }
            }
            (paths - inside[n]) as f64 / paths as f64
        }
        None => {
            // same recursion on path probabilities when counts overflow
            let mut inside = vec![0f64; n + 1];
            inside[0] = 1.0;
            for pos in 0..total {
                let next_pos = pos + 1;
                let denom = next_pos as f64;
                for i in (0..=n.min(next_pos)).rev() {
                    let j = next_pos - i;
                    if j > m {
                        inside[i] = 0.0;
                        continue;
                    }
                    let from_y = if j >= 1 && i <= pos { inside[i] * j as f64 / denom } else { 0.0 };
                    let from_x = if i >= 1 { inside[i - 1] * i as f64 / denom } else { 0.0 };
                    inside[i] = from_y + from_x;
                    if block_end[next_pos] && outside(i, j) {
                        inside[i] = 0.0;
                    }
                }
            }
            (1.0 - inside[n]).clamp(0.0, 1.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let x = [3.0, 1.0, 2.0, 2.0];
        for method in [KsMethod::Asymptotic, KsMethod::Exact] {
            let r = ks_two_sample(&x, &x, method).unwrap();
            assert_eq!(r.statistic, 0.0);
            assert_eq!(r.p_value, 1.0);
        }
    }

    #[test]
    fn disjoint_supports() {
        let x = [1.0, 2.0, 3.0];
        let y = [10.0, 11.0];
        assert_eq!(ks_statistic(&x, &y).unwrap(), 1.0);
        // all C(5, 2) = 10 labelings; only the two fully separated ones give D = 1
        let r = ks_two_sample(&x, &y, KsMethod::Exact).unwrap();
        assert_eq!(r.p_value, 2.0 / 10.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(ks_statistic(&[], &[1.0]), Err(Error::Argument(_))));
        assert!(matches!(ks_statistic(&[f64::NAN], &[1.0]), Err(Error::Data(_))));
    }

    #[test]
    fn kolmogorov_limits() {
        assert_eq!(kolmogorov_survival(0.0), 1.0);
        assert!(kolmogorov_survival(0.1) > 0.999_999);
        assert!(kolmogorov_survival(5.0) < 1e-20);
        // classical 5% critical value
        assert!((kolmogorov_survival(1.358_098_8) - 0.05).abs() < 1e-6);
        // both branches agree at the switch point
        let c = core::f64::consts::PI.powi(2) / (8.0 * 1.18 * 1.18);
        let mut cdf = 0.0;
        for k in 1..=50 {
            cdf += math::exp(-f64::from(2 * k - 1).powi(2) * c);
        }
        let theta = 1.0 - math::sqrt(2.0 * core::f64::consts::PI) / 1.18 * cdf;
        assert!((theta - kolmogorov_survival(1.18)).abs() < 1e-14);
    }

    #[test]
    fn large_samples_use_probability_recursion() {
        // n = m = 80 overflows the path count; the exact p must still sit
        // close to the asymptotic one for a mid-range statistic
        let x: Vec<f64> = (0..80).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..80).map(|i| i as f64 + 12.5).collect();
        let e = ks_two_sample(&x, &y, KsMethod::Exact).unwrap();
        let a = ks_two_sample(&x, &y, KsMethod::Asymptotic).unwrap();
        assert!(binomial(160, 80).is_none());
        assert!((e.p_value - a.p_value).abs() < 0.05, "{} vs {}", e.p_value, a.p_value);
        assert!(e.p_value > 0.0 && e.p_value < 1.0);
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(20, 10), Some(184_756));
        assert_eq!(binomial(5, 0), Some(1));
        assert_eq!(binomial(60, 30), Some(118_264_581_564_861_424));
    }
}
