#![allow(dead_code)]

/// Fourth-order central difference of `f` at `x` with step `h`.
pub fn fd4(mut f: impl FnMut(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// `|a − b| ≤ rel · max(|a|, |b|) + abs`.
pub fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + abs
}

/// [`fd4`] with the step taken from `scale · {1e-3, 3e-4, 1e-4, 3e-5, 1e-5}`:
/// the smaller step of the adjacent pair whose estimates agree best.
pub fn fd4_settled(mut f: impl FnMut(f64) -> f64, x: f64, scale: f64) -> f64 {
    let v: Vec<f64> = [1e-3, 3e-4, 1e-4, 3e-5, 1e-5]
        .iter()
        .map(|h| fd4(&mut f, x, h * scale))
        .collect();
    let k = (0..v.len() - 1)
        .min_by(|&a, &b| (v[a] - v[a + 1]).abs().total_cmp(&(v[b] - v[b + 1]).abs()))
        .unwrap();
    v[k + 1]
}
