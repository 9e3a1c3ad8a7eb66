//! Gauss–Legendre rules, equidistant grids and tensor products.

use crate::error::{Error, Result};

/// One-dimensional weighted rule on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    interval: (f64, f64),
}

fn check_interval(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument(format!(
            "invalid interval [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// `n` points including both endpoints, uniformly spaced.
pub fn equidistant(n: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
    check_interval(lo, hi)?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "an equidistant grid needs at least 2 points, got {n}"
        )));
    }
    let h = (hi - lo) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i == n - 1 { hi } else { lo + i as f64 * h })
        .collect())
}

impl QuadratureRule {
    /// `n`-point Gauss–Legendre rule, exact for polynomials of degree `2n − 1`.
    /// Nodes are Newton-refined roots of `Pₙ`.
    pub fn gauss_legendre(n: usize, lo: f64, hi: f64) -> Result<Self> {
        check_interval(lo, hi)?;
        if n == 0 {
            return Err(Error::InvalidArgument(
                "Gauss–Legendre rule needs n ≥ 1".into(),
            ));
        }
        let (ref_nodes, ref_weights) = legendre_reference(n);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        Ok(Self {
            nodes: ref_nodes.iter().map(|x| mid + half * x).collect(),
            weights: ref_weights.iter().map(|w| half * w).collect(),
            interval: (lo, hi),
        })
    }

    /// Composite trapezoid rule on an equidistant grid of `n` points.
    pub fn trapezoid(n: usize, lo: f64, hi: f64) -> Result<Self> {
        let nodes = equidistant(n, lo, hi)?;
        let h = (hi - lo) / (n - 1) as f64;
        let mut weights = vec![h; n];
        weights[0] = 0.5 * h;
        weights[n - 1] = 0.5 * h;
        Ok(Self {
            nodes,
            weights,
            interval: (lo, hi),
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Newton iteration on the three-term recurrence, reference interval `[−1, 1]`.
fn legendre_reference(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        let dp = legendre_with_derivative(n, x).1;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // i-th root from the right; mirror to the left
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    // P'ₙ(x) = n (x Pₙ − Pₙ₋₁) / (x² − 1)
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Anything that can be summed as `Σ wᵢ f(xᵢ)`.
pub trait Quadrature {
    fn dim(&self) -> usize;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Writes node `i` into `out` (length `dim`).
    fn node(&self, i: usize, out: &mut [f64]);
    fn weight(&self, i: usize) -> f64;
}

impl Quadrature for QuadratureRule {
    fn dim(&self) -> usize {
        1
    }
    fn len(&self) -> usize {
        self.nodes.len()
    }
    fn node(&self, i: usize, out: &mut [f64]) {
        out[0] = self.nodes[i];
    }
    fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }
}

/// Product of one-dimensional rules. Points are ordered row-major: the last
/// axis varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGrid {
    axes: Vec<QuadratureRule>,
}

impl TensorGrid {
    pub fn new(axes: Vec<QuadratureRule>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidArgument(
                "tensor grid needs at least one axis".into(),
            ));
        }
        Ok(Self { axes })
    }

    /// The same rule repeated on every axis.
    pub fn cube(rule: QuadratureRule, dim: usize) -> Result<Self> {
        Self::new(vec![rule; dim])
    }

    pub fn axes(&self) -> &[QuadratureRule] {
        &self.axes
    }

    /// Multi-index of flat point `i`.
    pub fn unravel(&self, mut i: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            idx[k] = i % axis.len();
            i /= axis.len();
        }
        idx
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..Quadrature::len(self))
            .map(|i| {
                let mut p = vec![0.0; self.axes.len()];
                self.node(i, &mut p);
                p
            })
            .collect()
    }
}

impl Quadrature for TensorGrid {
    fn dim(&self) -> usize {
        self.axes.len()
    }
    fn len(&self) -> usize {
        self.axes.iter().map(|a| a.len()).product()
    }
    fn node(&self, mut i: usize, out: &mut [f64]) {
        for (k, axis) in self.axes.iter().enumerate().rev() {
            out[k] = axis.nodes[i % axis.len()];
            i /= axis.len();
        }
    }
    fn weight(&self, mut i: usize) -> f64 {
        let mut w = 1.0;
        for axis in self.axes.iter().rev() {
            w *= axis.weights[i % axis.len()];
            i /= axis.len();
        }
        w
    }
}

/// `Σ wᵢ f(xᵢ)`, reduced sequentially in node order.
pub fn integrate<Q, F>(rule: &Q, mut f: F) -> Result<f64>
where
    Q: Quadrature + ?Sized,
    F: FnMut(&[f64]) -> f64,
{
    let mut x = vec![0.0; rule.dim()];
    let mut acc = 0.0;
    for i in 0..rule.len() {
        rule.node(i, &mut x);
        let v = f(&x);
        if !v.is_finite() {
            return Err(Error::NonFinite { node: x, value: v });
        }
        acc += rule.weight(i) * v;
    }
    Ok(acc)
}

/// `|f(hi)| / max |f|` over the rule's nodes plus the right endpoint; used to
/// audit truncation of semi-infinite integrals.
pub fn endpoint_ratio<F: FnMut(f64) -> f64>(rule: &QuadratureRule, mut f: F) -> f64 {
    let end = f(rule.interval.1).abs();
    let max = rule.nodes.iter().map(|&x| f(x).abs()).fold(end, f64::max);
    if max == 0.0 {
        0.0
    } else {
        end / max
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classical_small_rules() {
        let r1 = QuadratureRule::gauss_legendre(1, -1.0, 1.0).unwrap();
        assert_eq!(r1.nodes(), &[0.0]);
        assert!((r1.weights()[0] - 2.0).abs() < 1e-15);

        let r2 = QuadratureRule::gauss_legendre(2, -1.0, 1.0).unwrap();
        let a = 1.0 / 3f64.sqrt();
        assert!((r2.nodes()[0] + a).abs() < 1e-15 && (r2.nodes()[1] - a).abs() < 1e-15);
        assert!((r2.weights()[0] - 1.0).abs() < 1e-15 && (r2.weights()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degree_nine_exact_with_five_points() {
        let r = QuadratureRule::gauss_legendre(5, 0.0, 1.0).unwrap();
        let v = integrate(&r, |x| x[0].powi(9)).unwrap();
        assert!((v - 0.1).abs() < 1e-14);
    }

    #[test]
    fn invalid_inputs() {
        assert!(QuadratureRule::gauss_legendre(3, 1.0, 1.0).is_err());
        assert!(QuadratureRule::gauss_legendre(0, 0.0, 1.0).is_err());
        assert!(equidistant(1, 0.0, 1.0).is_err());
    }

    #[test]
    fn equidistant_grids() {
        assert_eq!(equidistant(2, 0.0, 1.0).unwrap(), vec![0.0, 1.0]);
        assert_eq!(equidistant(3, 0.0, 2.0).unwrap(), vec![0.0, 1.0, 2.0]);
        let g = equidistant(150, -1.0, 2.0).unwrap();
        for w in g.windows(2) {
            assert!((w[1] - w[0] - 3.0 / 149.0).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_and_odd_integrands() {
        let r = QuadratureRule::gauss_legendre(80, 0.0, 40.0).unwrap();
        assert!((integrate(&r, |_| 1.0).unwrap() - 40.0).abs() < 1e-12);
        let s = QuadratureRule::gauss_legendre(31, -3.0, 3.0).unwrap();
        assert!(
            integrate(&s, |x| x[0].powi(3) * (x[0] * x[0]).cos())
                .unwrap()
                .abs()
                < 1e-13
        );
    }

    #[test]
    fn two_dimensional_gaussian() {
        let r = QuadratureRule::gauss_legendre(40, -6.0, 6.0).unwrap();
        let one_d = integrate(&r, |x| (-x[0] * x[0]).exp()).unwrap();
        let g = TensorGrid::cube(r, 2).unwrap();
        let two_d = integrate(&g, |x| (-x[0] * x[0] - x[1] * x[1]).exp()).unwrap();
        let pi = std::f64::consts::PI;
        assert!((two_d - pi).abs() < 1e-8, "{two_d}");
        assert!((two_d - one_d * one_d).abs() < 1e-12);
    }

    #[test]
    fn non_finite_integrand_names_node() {
        let r = QuadratureRule::trapezoid(3, 0.0, 2.0).unwrap();
        let err = integrate(&r, |x| 1.0 / (x[0] - 1.0)).unwrap_err();
        match err {
            Error::NonFinite { node, .. } => assert_eq!(node, vec![1.0]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tensor_ordering_is_row_major() {
        let a = QuadratureRule::trapezoid(2, 0.0, 1.0).unwrap();
        let b = QuadratureRule::trapezoid(3, 0.0, 2.0).unwrap();
        let g = TensorGrid::new(vec![a, b]).unwrap();
        let pts = g.points();
        assert_eq!(pts[0], vec![0.0, 0.0]);
        assert_eq!(pts[1], vec![0.0, 1.0]);
        assert_eq!(pts[3], vec![1.0, 0.0]);
        assert_eq!(g.unravel(4), vec![1, 1]);
    }

    #[test]
    fn endpoint_ratio_of_decaying_function() {
        let r = QuadratureRule::gauss_legendre(40, 0.0, 40.0).unwrap();
        assert!(endpoint_ratio(&r, |x| x * (-x).exp()) < 1e-10);
    }
}
