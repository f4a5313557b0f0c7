//! Small descriptive statistics shared by the curvature and analytics modules.

use alloc::vec::Vec;

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

pub fn population_std(values: &[f64]) -> Option<f64> {
    let m = mean(values)?;
    let var = values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / values.len() as f64;
    Some(libm::sqrt(var))
}

/// Quantile of ascending `sorted` values by linear interpolation between order
/// statistics, with the k-th smallest value (1-based) sitting at probability
/// `(k - 0.5) / n`. Probabilities outside `[0.5/n, 1 - 0.5/n]` clamp to the
/// extremes; the median of an even count is the midpoint of the central pair.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> Option<f64> {
    let n = sorted.len();
    if n == 0 {
        return None;
    }
    let h = (n as f64 * p + 0.5).clamp(1.0, n as f64);
    let lo = libm::floor(h);
    let k = lo as usize;
    if k >= n {
        return Some(sorted[n - 1]);
    }
    let frac = h - lo;
    Some(sorted[k - 1] + frac * (sorted[k] - sorted[k - 1]))
}

/// Pearson correlation; `None` when either side has zero variance or fewer
/// than two points.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 {
        return None;
    }
    let mx = mean(x)?;
    let my = mean(y)?;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}
