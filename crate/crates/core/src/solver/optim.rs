//! Gradient-based minimizers behind a common trait.

use crate::error::{Error, Result};

/// Objective value, gradient and one auxiliary number carried along for
/// logging. `None` marks an infeasible or non-finite point.
pub type Evaluation = Option<(f64, Vec<f64>, f64)>;

pub type ObjectiveFn<'a> = dyn FnMut(&[f64]) -> Evaluation + 'a;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimOptions {
    pub max_iterations: usize,
    /// Stop once the objective drops below this value.
    pub value_tolerance: f64,
    /// Stop once the gradient norm drops below this value.
    pub gradient_tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub value: f64,
    pub aux: f64,
    pub gradient_norm: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ValueTolerance,
    GradientTolerance,
    /// No further decrease representable in floating point.
    Stalled,
    MaxIterations,
    LineSearchFailed,
}

impl StopReason {
    pub fn converged(self) -> bool {
        matches!(
            self,
            StopReason::ValueTolerance | StopReason::GradientTolerance | StopReason::Stalled
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            StopReason::ValueTolerance => "value-tolerance",
            StopReason::GradientTolerance => "gradient-tolerance",
            StopReason::Stalled => "stalled",
            StopReason::MaxIterations => "max-iterations",
            StopReason::LineSearchFailed => "line-search-failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub aux: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub reason: StopReason,
}

pub trait Optimizer: Send + Sync {
    fn name(&self) -> &'static str;

    fn minimize(
        &self,
        f: &mut ObjectiveFn<'_>,
        x0: Vec<f64>,
        options: &OptimOptions,
        observer: &mut dyn FnMut(&IterationRecord),
    ) -> Result<OptimResult>;
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Point {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    aux: f64,
}

struct Counter<'a, 'b> {
    f: &'a mut ObjectiveFn<'b>,
    evaluations: usize,
}

impl Counter<'_, '_> {
    fn eval(&mut self, x: &[f64]) -> Evaluation {
        self.evaluations += 1;
        match (self.f)(x) {
            Some((v, g, a)) if v.is_finite() && g.iter().all(|c| c.is_finite()) => Some((v, g, a)),
            _ => None,
        }
    }
}

/// Line search returning a point satisfying the strong Wolfe conditions.
struct LineSearch {
    c1: f64,
    c2: f64,
    max_steps: usize,
}

impl LineSearch {
    fn probe(&self, fc: &mut Counter, p: &Point, d: &[f64], alpha: f64) -> Option<(Point, f64)> {
        let x: Vec<f64> = p.x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
        let (f, g, aux) = fc.eval(&x)?;
        let dphi = dot(&g, d);
        Some((Point { x, f, g, aux }, dphi))
    }

    fn search(&self, fc: &mut Counter, p: &Point, d: &[f64], alpha0: f64) -> Option<Point> {
        let phi0 = p.f;
        let dphi0 = dot(&p.g, d);
        if !(dphi0 < 0.0) {
            return None;
        }
        let mut lo = Bracket {
            alpha: 0.0,
            phi: phi0,
            dphi: dphi0,
            point: None,
        };
        let mut alpha = alpha0;
        for i in 0..self.max_steps {
            let Some((pt, dphi)) = self.probe(fc, p, d, alpha) else {
                return self.zoom(fc, p, d, lo, alpha, f64::INFINITY);
            };
            if pt.f > phi0 + self.c1 * alpha * dphi0 || (i > 0 && pt.f >= lo.phi) {
                let phi_hi = pt.f;
                return self.zoom(fc, p, d, lo, alpha, phi_hi);
            }
            if dphi.abs() <= -self.c2 * dphi0 {
                return Some(pt);
            }
            let here = Bracket {
                alpha,
                phi: pt.f,
                dphi,
                point: Some(pt),
            };
            if dphi >= 0.0 {
                let (a_hi, phi_hi) = (lo.alpha, lo.phi);
                return self.zoom(fc, p, d, here, a_hi, phi_hi);
            }
            lo = here;
            alpha *= 2.0;
        }
        lo.point
    }

    fn zoom(
        &self,
        fc: &mut Counter,
        p: &Point,
        d: &[f64],
        mut lo: Bracket,
        mut a_hi: f64,
        mut phi_hi: f64,
    ) -> Option<Point> {
        let phi0 = p.f;
        let dphi0 = dot(&p.g, d);
        for _ in 0..self.max_steps {
            let (a, b) = if lo.alpha < a_hi {
                (lo.alpha, a_hi)
            } else {
                (a_hi, lo.alpha)
            };
            let width = b - a;
            if width <= 1e-16 * b.abs() {
                break;
            }
            // quadratic through (lo.phi, lo.dphi) and phi_hi, safeguarded
            let delta = a_hi - lo.alpha;
            let curv = phi_hi - lo.phi - lo.dphi * delta;
            let mut alpha = if phi_hi.is_finite() && curv > 0.0 {
                lo.alpha - lo.dphi * delta * delta / (2.0 * curv)
            } else {
                f64::NAN
            };
            if !(alpha > a + 0.1 * width && alpha < b - 0.1 * width) {
                alpha = 0.5 * (lo.alpha + a_hi);
            }
            match self.probe(fc, p, d, alpha) {
                None => {
                    a_hi = alpha;
                    phi_hi = f64::INFINITY;
                }
                Some((pt, dphi)) => {
                    if pt.f > phi0 + self.c1 * alpha * dphi0 || pt.f >= lo.phi {
                        a_hi = alpha;
                        phi_hi = pt.f;
                    } else {
                        if dphi.abs() <= -self.c2 * dphi0 {
                            return Some(pt);
                        }
                        if dphi * (a_hi - lo.alpha) >= 0.0 {
                            a_hi = lo.alpha;
                            phi_hi = lo.phi;
                        }
                        lo = Bracket {
                            alpha,
                            phi: pt.f,
                            dphi,
                            point: Some(pt),
                        };
                    }
                }
            }
        }
        // accept the best sufficient-decrease point even without curvature
        lo.point.filter(|b| b.f < phi0)
    }
}

struct Bracket {
    alpha: f64,
    phi: f64,
    dphi: f64,
    point: Option<Point>,
}

fn start(fc: &mut Counter, x0: Vec<f64>) -> Result<Point> {
    let (f, g, aux) = fc
        .eval(&x0)
        .ok_or_else(|| Error::Degenerate("objective is not finite at the starting point".into()))?;
    Ok(Point { x: x0, f, g, aux })
}

fn check(p: &Point, options: &OptimOptions) -> Option<StopReason> {
    if p.f < options.value_tolerance {
        Some(StopReason::ValueTolerance)
    } else if norm(&p.g) < options.gradient_tolerance {
        Some(StopReason::GradientTolerance)
    } else {
        None
    }
}

fn finish(p: Point, iterations: usize, evaluations: usize, reason: StopReason) -> OptimResult {
    OptimResult {
        gradient_norm: norm(&p.g),
        x: p.x,
        value: p.f,
        aux: p.aux,
        iterations,
        evaluations,
        reason,
    }
}

/// Consecutive iterations with negligible relative decrease before stopping.
const STALL_WINDOW: usize = 8;

fn stalled(prev: f64, next: f64) -> bool {
    prev - next <= 1e-14 * prev.abs().max(f64::MIN_POSITIVE)
}

/// Quasi-Newton with a dense inverse-Hessian approximation.
#[derive(Debug, Clone, Copy)]
pub struct Bfgs;

impl Optimizer for Bfgs {
    fn name(&self) -> &'static str {
        "bfgs"
    }

    fn minimize(
        &self,
        f: &mut ObjectiveFn<'_>,
        x0: Vec<f64>,
        options: &OptimOptions,
        observer: &mut dyn FnMut(&IterationRecord),
    ) -> Result<OptimResult> {
        let ls = LineSearch {
            c1: 1e-4,
            c2: 0.9,
            max_steps: 40,
        };
        let mut fc = Counter { f, evaluations: 0 };
        let mut p = start(&mut fc, x0)?;
        let n = p.x.len();
        let mut h = identity(n);
        let mut fresh = true;
        let mut stall = 0;
        for it in 0..options.max_iterations {
            if let Some(r) = check(&p, options) {
                return Ok(finish(p, it, fc.evaluations, r));
            }
            let mut d = mat_vec(&h, &p.g, -1.0);
            if dot(&d, &p.g) >= 0.0 {
                h = identity(n);
                fresh = true;
                d = p.g.iter().map(|v| -v).collect();
            }
            let alpha0 = if fresh {
                (1.0 / norm(&d)).min(1.0)
            } else {
                1.0
            };
            let next = match ls.search(&mut fc, &p, &d, alpha0) {
                Some(q) => q,
                None if !fresh => {
                    h = identity(n);
                    fresh = true;
                    continue;
                }
                None => return Ok(finish(p, it, fc.evaluations, StopReason::LineSearchFailed)),
            };
            let s: Vec<f64> = next.x.iter().zip(&p.x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = next.g.iter().zip(&p.g).map(|(a, b)| a - b).collect();
            let ys = dot(&y, &s);
            if ys > 1e-12 * norm(&y) * norm(&s) {
                if fresh {
                    let scale = ys / dot(&y, &y);
                    h.iter_mut().for_each(|v| *v *= scale);
                }
                bfgs_update(&mut h, &s, &y, ys);
                fresh = false;
            }
            stall = if stalled(p.f, next.f) { stall + 1 } else { 0 };
            p = next;
            observer(&IterationRecord {
                iteration: it + 1,
                value: p.f,
                aux: p.aux,
                gradient_norm: norm(&p.g),
                evaluations: fc.evaluations,
            });
            if stall >= STALL_WINDOW {
                return Ok(finish(p, it + 1, fc.evaluations, StopReason::Stalled));
            }
        }
        let reason = check(&p, options).unwrap_or(StopReason::MaxIterations);
        let iters = options.max_iterations;
        Ok(finish(p, iters, fc.evaluations, reason))
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

fn mat_vec(h: &[f64], v: &[f64], scale: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| scale * dot(&h[i * n..(i + 1) * n], v))
        .collect()
}

/// `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], ys: f64) {
    let n = s.len();
    let rho = 1.0 / ys;
    let hy = mat_vec(h, y, 1.0);
    let yhy = dot(y, &hy);
    let coef = rho * rho * yhy + rho;
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

/// Nonlinear conjugate gradients, Polak–Ribière with non-negative β.
#[derive(Debug, Clone, Copy)]
pub struct ConjugateGradient;

impl Optimizer for ConjugateGradient {
    fn name(&self) -> &'static str {
        "cg"
    }

    fn minimize(
        &self,
        f: &mut ObjectiveFn<'_>,
        x0: Vec<f64>,
        options: &OptimOptions,
        observer: &mut dyn FnMut(&IterationRecord),
    ) -> Result<OptimResult> {
        first_order(f, x0, options, observer, true)
    }
}

/// Steepest descent with a Wolfe line search.
#[derive(Debug, Clone, Copy)]
pub struct GradientDescent;

impl Optimizer for GradientDescent {
    fn name(&self) -> &'static str {
        "gd"
    }

    fn minimize(
        &self,
        f: &mut ObjectiveFn<'_>,
        x0: Vec<f64>,
        options: &OptimOptions,
        observer: &mut dyn FnMut(&IterationRecord),
    ) -> Result<OptimResult> {
        first_order(f, x0, options, observer, false)
    }
}

fn first_order(
    f: &mut ObjectiveFn<'_>,
    x0: Vec<f64>,
    options: &OptimOptions,
    observer: &mut dyn FnMut(&IterationRecord),
    conjugate: bool,
) -> Result<OptimResult> {
    let ls = LineSearch {
        c1: 1e-4,
        c2: if conjugate { 0.1 } else { 0.9 },
        max_steps: 40,
    };
    let mut fc = Counter { f, evaluations: 0 };
    let mut p = start(&mut fc, x0)?;
    let mut d: Vec<f64> = p.g.iter().map(|v| -v).collect();
    let mut last_alpha = (1.0 / norm(&d)).min(1.0);
    let mut stall = 0;
    for it in 0..options.max_iterations {
        if let Some(r) = check(&p, options) {
            return Ok(finish(p, it, fc.evaluations, r));
        }
        if dot(&d, &p.g) >= 0.0 {
            d = p.g.iter().map(|v| -v).collect();
        }
        let next = match ls.search(&mut fc, &p, &d, last_alpha) {
            Some(q) => q,
            None => return Ok(finish(p, it, fc.evaluations, StopReason::LineSearchFailed)),
        };
        let step: f64 = next
            .x
            .iter()
            .zip(&p.x)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let beta = if conjugate {
            let gg = dot(&p.g, &p.g);
            let num: f64 = next.g.iter().zip(&p.g).map(|(a, b)| a * (a - b)).sum();
            (num / gg).max(0.0)
        } else {
            0.0
        };
        let dn = norm(&d);
        d = next
            .g
            .iter()
            .zip(&d)
            .map(|(g, dk)| -g + beta * dk)
            .collect();
        // reuse the previous step length as the next trial step
        last_alpha = (step / norm(&d)).max(1e-12 * dn.recip().min(1.0));
        stall = if stalled(p.f, next.f) { stall + 1 } else { 0 };
        p = next;
        observer(&IterationRecord {
            iteration: it + 1,
            value: p.f,
            aux: p.aux,
            gradient_norm: norm(&p.g),
            evaluations: fc.evaluations,
        });
        if stall >= STALL_WINDOW {
            return Ok(finish(p, it + 1, fc.evaluations, StopReason::Stalled));
        }
    }
    let reason = check(&p, options).unwrap_or(StopReason::MaxIterations);
    Ok(finish(p, options.max_iterations, fc.evaluations, reason))
}

/// Optimizers selectable by name.
pub struct OptimizerRegistry {
    entries: Vec<Box<dyn Optimizer>>,
}

impl OptimizerRegistry {
    pub fn standard() -> Self {
        Self {
            entries: vec![
                Box::new(Bfgs),
                Box::new(ConjugateGradient),
                Box::new(GradientDescent),
            ],
        }
    }

    pub fn register(&mut self, opt: Box<dyn Optimizer>) {
        self.entries.retain(|o| o.name() != opt.name());
        self.entries.push(opt);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|o| o.name()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn Optimizer> {
        self.entries
            .iter()
            .find(|o| o.name() == name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::Unknown {
                kind: "optimizer",
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> Evaluation {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![
            -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
            200.0 * (b - a * a),
        ];
        Some((f, g, 0.0))
    }

    fn opts(max: usize) -> OptimOptions {
        OptimOptions {
            max_iterations: max,
            value_tolerance: 1e-20,
            gradient_tolerance: 1e-9,
        }
    }

    #[test]
    fn bfgs_solves_rosenbrock_monotonically() {
        let mut last = f64::INFINITY;
        let mut monotone = true;
        let r = Bfgs
            .minimize(&mut rosenbrock, vec![-1.2, 1.0], &opts(500), &mut |rec| {
                monotone &= rec.value <= last;
                last = rec.value;
            })
            .unwrap();
        assert!(r.reason.converged(), "{:?}", r.reason);
        assert!(
            (r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6,
            "{:?}",
            r.x
        );
        assert!(monotone);
    }

    #[test]
    fn cg_and_gd_decrease_a_quadratic() {
        let mut quad = |x: &[f64]| -> Evaluation {
            let f = 0.5 * (x[0] * x[0] + 10.0 * x[1] * x[1]);
            Some((f, vec![x[0], 10.0 * x[1]], 0.0))
        };
        for opt in [&ConjugateGradient as &dyn Optimizer, &GradientDescent] {
            let r = opt
                .minimize(&mut quad, vec![3.0, -2.0], &opts(2000), &mut |_| {})
                .unwrap();
            assert!(r.value < 1e-12, "{}: {}", opt.name(), r.value);
        }
    }

    #[test]
    fn infeasible_region_is_avoided() {
        // x must stay positive; minimum of x − ln x at 1
        let mut f = |x: &[f64]| -> Evaluation {
            if x[0] <= 0.0 {
                None
            } else {
                Some((x[0] - x[0].ln(), vec![1.0 - 1.0 / x[0]], 0.0))
            }
        };
        let r = Bfgs
            .minimize(&mut f, vec![0.05], &opts(100), &mut |_| {})
            .unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn registry_lookup() {
        let reg = OptimizerRegistry::standard();
        assert_eq!(reg.get("bfgs").unwrap().name(), "bfgs");
        assert!(matches!(reg.get("newton"), Err(Error::Unknown { .. })));
    }
}
