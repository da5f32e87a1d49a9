//! Small statistical helpers: KS uniformity check and nearest-rank
//! percentiles.

/// One-sample Kolmogorov-Smirnov statistic against U(0, 1).
/// Sorts `xs` in place; values must already be rescaled to [0, 1].
pub fn ks_statistic_uniform(xs: &mut [f64]) -> f64 {
    assert!(!xs.is_empty());
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let hi = (i as f64 + 1.0) / n - x;
        let lo = x - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}

/// Asymptotic KS critical value at the 1% level: c(0.01) / sqrt(n).
pub fn ks_critical_value_1pct(n: usize) -> f64 {
    1.62762 / (n as f64).sqrt()
}

/// Nearest-rank percentile of a sorted slice: the smallest value such
/// that at least p% of the sample is <= it.
pub fn percentile_nearest_rank(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    assert!((0.0..=100.0).contains(&p));
    let n = sorted.len();
    let rank = ((p / 100.0 * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_detects_non_uniform() {
        let mut clumped: Vec<f64> = (0..1000).map(|i| 0.4 + 0.2 * i as f64 / 1000.0).collect();
        let d = ks_statistic_uniform(&mut clumped);
        assert!(d > ks_critical_value_1pct(1000));
    }

    #[test]
    fn ks_accepts_uniform_grid() {
        let n = 10_000;
        let mut grid: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic_uniform(&mut grid);
        assert!(d < ks_critical_value_1pct(n));
    }

    #[test]
    fn nearest_rank_basics() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile_nearest_rank(&xs, 5.0), 1.0);
        assert_eq!(percentile_nearest_rank(&xs, 50.0), 2.0);
        assert_eq!(percentile_nearest_rank(&xs, 95.0), 4.0);
        assert_eq!(percentile_nearest_rank(&xs, 100.0), 4.0);
        assert_eq!(percentile_nearest_rank(&[7.0], 5.0), 7.0);
    }
}
