//! One-dimensional maximization helpers.

use crate::Result;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the maximum of a unimodal `f` on [lo, hi].
/// Stops when the bracket is narrower than `width`. Returns (argmax, max).
pub fn golden_max<F>(mut f: F, lo: f64, hi: f64, width: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > width {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        }
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid)?;
    // Keep the best point seen at the end, including the bracket ends.
    let mut best = (mid, fm);
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v > best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

/// Evaluates `f` on an even grid of `n + 1` points over [lo, hi].
pub fn grid<F>(mut f: F, lo: f64, hi: f64, n: usize) -> Result<Vec<(f64, f64)>>
where
    F: FnMut(f64) -> Result<f64>,
{
    (0..=n)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            f(x).map(|v| (x, v))
        })
        .collect()
}

/// Number of interior strict local maxima whose value exceeds `floor`.
pub fn count_local_maxima(values: &[(f64, f64)], floor: f64) -> usize {
    let n = values.len();
    let mut count = 0;
    for i in 0..n {
        let v = values[i].1;
        let left = if i == 0 {
            f64::NEG_INFINITY
        } else {
            values[i - 1].1
        };
        let right = if i + 1 == n {
            f64::NEG_INFINITY
        } else {
            values[i + 1].1
        };
        if v > left && v >= right && v > floor {
            count += 1;
        }
    }
    count
}

/// Index of the largest value.
pub fn argmax(values: &[(f64, f64)]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if v.1 > values[best].1 {
            best = i;
        }
    }
    best
}
