//! Fixed-step integration helpers shared by the transition and dynamics modules.

use std::ops::{Add, Mul};

/// One classical fourth-order Runge-Kutta step of `y' = f(t, y)`.
pub fn rk4_step<S, F>(f: F, t: f64, y: &S, h: f64) -> S
where
    F: Fn(f64, &S) -> S,
    for<'a> &'a S: Add<&'a S, Output = S> + Mul<f64, Output = S>,
{
    let k1 = f(t, y);
    let y2 = y + &(&k1 * (0.5 * h));
    let k2 = f(t + 0.5 * h, &y2);
    let y3 = y + &(&k2 * (0.5 * h));
    let k3 = f(t + 0.5 * h, &y3);
    let y4 = y + &(&k3 * h);
    let k4 = f(t + h, &y4);
    let k23 = &k2 + &k3;
    let k14 = &k1 + &k4;
    let incr = &(&k14 + &(&k23 * 2.0)) * (h / 6.0);
    y + &incr
}

/// Uniform subdivision of `[s, t]` into steps no longer than `max_step`.
pub fn uniform_steps(s: f64, t: f64, max_step: f64) -> (usize, f64) {
    let span = t - s;
    if span <= 0.0 {
        return (0, 0.0);
    }
    let m = (span / max_step).ceil().max(1.0) as usize;
    (m, span / m as f64)
}

/// Composite Simpson weights for `m` uniform intervals of width `h`.
///
/// Odd `m` closes the last three intervals with Simpson's 3/8 rule.
pub fn simpson_weights(m: usize, h: f64) -> Vec<f64> {
    assert!(m >= 1, "need at least one interval");
    let mut w = vec![0.0; m + 1];
    if m == 1 {
        w[0] = 0.5 * h;
        w[1] = 0.5 * h;
        return w;
    }
    let (simpson_end, tail) = if m.is_multiple_of(2) { (m, false) } else { (m - 3, true) };
    let mut k = 0;
    while k + 2 <= simpson_end {
        w[k] += h / 3.0;
        w[k + 1] += 4.0 * h / 3.0;
        w[k + 2] += h / 3.0;
        k += 2;
    }
    if tail {
        let c = 3.0 * h / 8.0;
        w[m - 3] += c;
        w[m - 2] += 3.0 * c;
        w[m - 1] += 3.0 * c;
        w[m] += c;
    }
    w
}
