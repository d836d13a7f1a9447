//! Power-series sums `sum_k k^{-s}` with Euler-Maclaurin tails.

/// `sum_{k >= n} k^{-s}` for `s > 1`, `n >= 1`, via Euler-Maclaurin
/// (accurate to roundoff once `n >= 128`).
pub fn power_tail(s: f64, n: usize) -> f64 {
    assert!(s > 1.0, "power_tail needs s > 1");
    assert!(n >= 1);
    const START: usize = 128;
    if n < START {
        let head: f64 = (n..START).map(|k| (k as f64).powf(-s)).sum();
        return head + power_tail(s, START);
    }
    let x = n as f64;
    let f = x.powf(-s);
    x.powf(1.0 - s) / (s - 1.0) + 0.5 * f + s * f / (12.0 * x)
        - s * (s + 1.0) * (s + 2.0) * f / (720.0 * x.powi(3))
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * f / (30240.0 * x.powi(5))
}

/// Riemann zeta `sum_{k >= 1} k^{-s}`, `s > 1`.
pub fn zeta(s: f64) -> f64 {
    power_tail(s, 1)
}

/// Integral-comparison upper bound on `sum_{k > n} k^{-s}`:
/// `n^{1-s} / (s - 1)`.
pub fn power_tail_bound(s: f64, n: usize) -> f64 {
    assert!(s > 1.0 && n >= 1);
    (n as f64).powf(1.0 - s) / (s - 1.0)
}
