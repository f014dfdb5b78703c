//! Mann-Whitney U test and sample summaries.

use std::io::Write;

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Exact p-values are used when the smaller sample has at most this many
/// values and there are no ties.
pub const EXACT_MAX_N: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub label: String,
    pub values: Vec<f64>,
}

impl SampleSet {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        SampleSet {
            label: label.into(),
            values,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// U statistic of the first sample: pairs where it is larger, ties
    /// counting one half.
    pub u: f64,
    pub p: f64,
    pub exact: bool,
}

/// Midranks (1-based) of `values`, and the sizes of every tie group.
pub fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        if j > i {
            ties.push(j - i + 1);
        }
        i = j + 1;
    }
    (ranks, ties)
}

/// Number of arrangements of `m` and `n` distinct values giving each U of
/// the first sample, `0..=m·n`.
pub fn u_distribution(m: usize, n: usize) -> Vec<u128> {
    // f[j][u] for the current m, built up one element of the first sample
    // at a time: adding the largest value overall contributes j to U.
    let max = m * n;
    let mut prev: Vec<Vec<u128>> = (0..=n)
        .map(|_| {
            let mut v = vec![0u128; max + 1];
            v[0] = 1;
            v
        })
        .collect();
    for _ in 1..=m {
        let mut cur: Vec<Vec<u128>> = vec![vec![0u128; max + 1]; n + 1];
        for j in 0..=n {
            for u in 0..=max {
                let from_x = if u >= j { prev[j][u - j] } else { 0 };
                let from_y = if j > 0 { cur[j - 1][u] } else { 0 };
                cur[j][u] = from_x + from_y;
            }
        }
        prev = cur;
    }
    prev.swap_remove(n)
}

/// Two-sided exact p: twice the smaller tail at `u`, capped at 1.
pub fn exact_p(u: f64, m: usize, n: usize) -> f64 {
    let dist = u_distribution(m, n);
    let total: u128 = dist.iter().sum();
    let k = u.round() as usize;
    let lower: u128 = dist[..=k].iter().sum();
    let upper: u128 = dist[k..].iter().sum();
    let tail = lower.min(upper);
    ((2 * tail) as f64 / total as f64).min(1.0)
}

/// Two-sided Mann-Whitney U test of `x` against `y`.
///
/// Ties get midranks. With no ties and `min(|x|, |y|) <= 8` the p-value is
/// exact; otherwise it comes from the normal approximation with the tie
/// correction on the variance and a continuity correction of 1/2. If every
/// value is identical, `p = 1`.
pub fn mann_whitney_u(x: &[f64], y: &[f64]) -> Result<MannWhitney> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::Usage("Mann-Whitney test needs two non-empty samples".into()));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::Usage("Mann-Whitney test got a NaN".into()));
    }
    let (m, n) = (x.len(), y.len());
    let all: Vec<f64> = x.iter().chain(y).copied().collect();
    let (ranks, ties) = midranks(&all);
    let rank_sum: f64 = ranks[..m].iter().sum();
    let u = rank_sum - (m * (m + 1)) as f64 / 2.0;

    if all.iter().all(|&v| v == all[0]) {
        return Ok(MannWhitney {
            u,
            p: 1.0,
            exact: false,
        });
    }
    if ties.is_empty() && m.min(n) <= EXACT_MAX_N {
        return Ok(MannWhitney {
            u,
            p: exact_p(u, m, n),
            exact: true,
        });
    }
    let big_n = (m + n) as f64;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum();
    let var = (m * n) as f64 / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
    let mean = (m * n) as f64 / 2.0;
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let p = erfc(z / std::f64::consts::SQRT_2).min(1.0);
    Ok(MannWhitney { u, p, exact: false })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// Standard error of the mean (sample standard deviation / √n; 0 for
    /// a single value).
    pub std_error: f64,
    pub n: usize,
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::Usage("cannot summarize an empty sample".into()));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std_error = if n < 2 {
        0.0
    } else {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
    };
    Ok(Summary { mean, std_error, n })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub label_a: String,
    pub label_b: String,
    pub mean_a: f64,
    pub mean_b: f64,
    pub test: MannWhitney,
}

/// All pairwise comparisons, in input order.
pub fn compare_all(sets: &[SampleSet]) -> Result<Vec<Comparison>> {
    let mut out = Vec::new();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            let (a, b) = (&sets[i], &sets[j]);
            out.push(Comparison {
                label_a: a.label.clone(),
                label_b: b.label.clone(),
                mean_a: summarize(&a.values)?.mean,
                mean_b: summarize(&b.values)?.mean,
                test: mann_whitney_u(&a.values, &b.values)?,
            });
        }
    }
    Ok(out)
}

pub fn write_comparisons<W: Write>(rows: &[Comparison], mut w: W) -> std::io::Result<()> {
    writeln!(w, "label_a,label_b,mean_a,mean_b,U,p")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.label_a, r.label_b, r.mean_a, r.mean_b, r.test.u, r.test.p
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_against_three() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.u, 0.0);
        assert!(r.exact);
        assert_eq!(r.p, 0.1);
    }

    #[test]
    fn identical_samples() {
        let x = [3.0, 1.0, 4.0, 1.0, 5.0];
        let r = mann_whitney_u(&x, &x).unwrap();
        assert_eq!(r.u, 12.5);
        assert_eq!(r.p, 1.0);
        let c = mann_whitney_u(&[2.0; 4], &[2.0; 3]).unwrap();
        assert_eq!((c.u, c.p), (6.0, 1.0));
    }

    #[test]
    fn distribution_counts_sum_to_binomial() {
        let d = u_distribution(3, 3);
        assert_eq!(d, vec![1, 1, 2, 3, 3, 3, 3, 2, 1, 1]);
        assert_eq!(u_distribution(8, 20).iter().sum::<u128>(), 3_108_105);
    }

    #[test]
    fn midranks_average_ties() {
        let (r, t) = midranks(&[5.0, 1.0, 5.0, 3.0]);
        assert_eq!(r, vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(t, vec![2]);
    }

    #[test]
    fn normal_approximation_matches_reference() {
        // 12 vs 12 with one tie; reference from the textbook formula
        let x: Vec<f64> = (0..12).map(|i| i as f64 * 2.0).collect();
        let y: Vec<f64> = (0..12).map(|i| i as f64 * 2.0 + 5.0).collect();
        let r = mann_whitney_u(&x, &y).unwrap();
        assert!(!r.exact);
        let (ranks, ties) = midranks(&x.iter().chain(&y).copied().collect::<Vec<_>>());
        let u = ranks[..12].iter().sum::<f64>() - 78.0;
        assert_eq!(r.u, u);
        let t: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum();
        let sd = (144.0 / 12.0 * (25.0 - t / (24.0 * 23.0))).sqrt();
        let z = ((u - 72.0).abs() - 0.5) / sd;
        assert!((r.p - erfc(z / std::f64::consts::SQRT_2)).abs() < 1e-15);
        assert!(r.p > 0.01 && r.p < 0.2, "{}", r.p);
    }

    #[test]
    fn summaries() {
        assert_eq!(
            summarize(&[5.0]).unwrap(),
            Summary {
                mean: 5.0,
                std_error: 0.0,
                n: 1
            }
        );
        let s = summarize(&[0.0, 10.0]).unwrap();
        assert_eq!((s.mean, s.std_error, s.n), (5.0, 5.0, 2));
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn comparison_report_has_every_pair() {
        let sets = vec![
            SampleSet::new("a", vec![1.0, 2.0]),
            SampleSet::new("b", vec![3.0, 4.0]),
            SampleSet::new("c", vec![0.0, 9.0]),
        ];
        let rows = compare_all(&sets).unwrap();
        assert_eq!(rows.len(), 3);
        let mut csv = Vec::new();
        write_comparisons(&rows, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().next(), Some("label_a,label_b,mean_a,mean_b,U,p"));
        assert_eq!(text.lines().count(), 4);
    }

    fn sample() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-50i32..50, 1..15).prop_map(|v| v.into_iter().map(f64::from).collect())
    }

    proptest! {
        #[test]
        fn swapping_samples_mirrors_u(x in sample(), y in sample()) {
            let a = mann_whitney_u(&x, &y).unwrap();
            let b = mann_whitney_u(&y, &x).unwrap();
            prop_assert_eq!(a.u, (x.len() * y.len()) as f64 - b.u);
            prop_assert!((a.p - b.p).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a.p));
        }

        #[test]
        fn summary_matches_direct_recomputation(x in prop::collection::vec(-1e3f64..1e3, 1..40)) {
            let s = summarize(&x).unwrap();
            let n = x.len() as f64;
            let mean = x.iter().sum::<f64>() / n;
            prop_assert!((s.mean - mean).abs() < 1e-12 * mean.abs().max(1.0));
            if x.len() > 1 {
                let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
                prop_assert!((s.std_error - (var / n).sqrt()).abs() < 1e-12 * var.sqrt().max(1.0));
            }
        }

        #[test]
        fn normal_and_exact_agree_without_ties(
            perm in Just((0..16).collect::<Vec<u32>>()).prop_shuffle(),
            m in 3usize..=8,
            extra in 0usize..=8,
        ) {
            // below three values per side the approximation is off by more
            // than 0.05 for some U
            let n = (m + extra).min(16 - m);
            let x: Vec<f64> = perm[..m].iter().map(|&v| f64::from(v)).collect();
            let y: Vec<f64> = perm[m..m + n].iter().map(|&v| f64::from(v)).collect();
            let exact = mann_whitney_u(&x, &y).unwrap();
            prop_assert!(exact.exact);
            let mean = (m * n) as f64 / 2.0;
            let sd = ((m * n) as f64 * (m + n + 1) as f64 / 12.0).sqrt();
            let z = ((exact.u - mean).abs() - 0.5).max(0.0) / sd;
            let approx = erfc(z / std::f64::consts::SQRT_2).min(1.0);
            prop_assert!((approx - exact.p).abs() <= 0.05, "exact {} approx {approx} m {m} n {n}", exact.p);
        }

        #[test]
        fn shifting_x_up_never_lowers_its_u(x in sample(), y in sample(), c in 0.5f64..20.0) {
            let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
            let u0 = mann_whitney_u(&x, &y).unwrap().u;
            let u1 = mann_whitney_u(&shifted, &y).unwrap().u;
            prop_assert!(u1 >= u0);
        }
    }
}
