//! Small numerical helpers shared across modules: trapezoidal integration,
//! rank transforms, Kendall's tau, and running mean/std.

/// Trapezoidal integral of `y` over abscissae `x`.
///
/// Panics in debug builds if the arrays differ in length; callers validate
/// lengths at their own API boundary.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mut area = 0.0;
    for i in 0..x.len().saturating_sub(1) {
        area += 0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1]);
    }
    area
}

/// Cumulative trapezoidal integral; `out[0] = 0`, `out[i] = ∫ y dx` up to `x[i]`.
pub fn cumulative_trapezoid(x: &[f64], y: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), y.len());
    let mut out = vec![0.0; x.len()];
    for i in 1..x.len() {
        out[i] = out[i - 1] + 0.5 * (x[i] - x[i - 1]) * (y[i - 1] + y[i]);
    }
    out
}

/// Ascending ranks 1..=n with ties assigned the average of their rank span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("non-finite value in rank input"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // ranks are 1-based; a tie block [i, j] shares the mean rank
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Kendall's tau-b between two equal-length samples.
///
/// Tau-b corrects for ties in either argument:
/// `τ_b = (C − D) / sqrt((n0 − n1)(n0 − n2))` with `n0 = n(n−1)/2` and
/// `n1`, `n2` the tie counts of each sample. Returns `None` when either
/// sample is constant (the denominator vanishes).
pub fn kendall_tau(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    let mut ties_x = 0i64;
    let mut ties_y = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = xs[i] - xs[j];
            let dy = ys[i] - ys[j];
            if dx == 0.0 && dy == 0.0 {
                ties_x += 1;
                ties_y += 1;
            } else if dx == 0.0 {
                ties_x += 1;
            } else if dy == 0.0 {
                ties_y += 1;
            } else if dx * dy > 0.0 {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    let denom = (((n0 - ties_x) as f64) * ((n0 - ties_y) as f64)).sqrt();
    if denom == 0.0 {
        return None;
    }
    Some((concordant - discordant) as f64 / denom)
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than 2 values.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_linear_exact() {
        // ∫0..1 x dx = 0.5, exact for the trapezoid rule on any grid
        let x = [0.0, 0.3, 0.7, 1.0];
        let y = x;
        assert!((trapezoid(&x, &y) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cumulative_matches_total() {
        let x: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.0 - v).collect();
        let c = cumulative_trapezoid(&x, &y);
        assert_eq!(c[0], 0.0);
        assert!((c[10] - trapezoid(&x, &y)).abs() < 1e-15);
        // analytic: x - x^2/2 at x=1 is 0.5
        assert!((c[10] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[0.3, 0.1, 0.2]), vec![3.0, 1.0, 2.0]);
        assert_eq!(average_ranks(&[0.5, 0.5]), vec![1.5, 1.5]);
        assert_eq!(average_ranks(&[1.0, 2.0, 2.0, 3.0]), vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn kendall_perfect_and_reversed() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [10.0, 20.0, 30.0, 40.0];
        assert!((kendall_tau(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        let rev = [40.0, 30.0, 20.0, 10.0];
        assert!((kendall_tau(&x, &rev).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn kendall_constant_is_none() {
        assert_eq!(kendall_tau(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), None);
    }

    #[test]
    fn kendall_known_value() {
        // scipy.stats.kendalltau([1,2,3,4,5], [3,1,4,2,5]) = 0.2
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [3.0, 1.0, 4.0, 2.0, 5.0];
        assert!((kendall_tau(&x, &y).unwrap() - 0.2).abs() < 1e-12);
    }
}
