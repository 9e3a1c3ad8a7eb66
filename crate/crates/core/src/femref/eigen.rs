use nalgebra::{DMatrix, DVector, Schur};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AssembledSystem, BandLu};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Spectral shift `σ`; eigenvalues closest above it converge first.
    pub shift: f64,
    pub count: usize,
    /// Arnoldi basis size per restart cycle.
    pub subspace: usize,
    /// Lock a Ritz pair once `‖Ax − θx‖ ≤ tolerance · |θ|`.
    pub tolerance: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            shift: 0.1,
            count: 6,
            subspace: 30,
            tolerance: 1e-13,
            max_restarts: 500,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// Unit-norm eigenvector.
    pub vector: Vec<f64>,
    /// `‖Kψ − εMψ‖ / ‖Kψ‖`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenReport {
    /// Finite eigenvalues in ascending order.
    pub pairs: Vec<EigenPair>,
    pub restarts: usize,
    /// Applications of the shift-inverted operator.
    pub applications: usize,
    /// Largest `|Im θ| / |θ|` among the reported Ritz values.
    pub max_imaginary: f64,
}

impl EigenReport {
    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(u, v)| *u += a * v);
}

/// Two passes of modified Gram–Schmidt against `basis`; returns the
/// accumulated coefficients.
fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut coef = vec![0.0; basis.len()];
    for _ in 0..2 {
        for (c, b) in coef.iter_mut().zip(basis) {
            let t = dot(b, w);
            *c += t;
            axpy(w, -t, b);
        }
    }
    coef
}

/// Eigenvector of the small dense `h` for the real eigenvalue `theta` by
/// two steps of shifted inverse iteration.
fn ritz_vector(h: &DMatrix<f64>, theta: f64) -> DVector<f64> {
    let n = h.nrows();
    let delta = 1e-10 * theta.abs().max(1e-300);
    let shifted = h - DMatrix::identity(n, n) * (theta + delta);
    let lu = shifted.lu();
    let mut y = DVector::from_element(n, 1.0);
    for _ in 0..2 {
        if let Some(z) = lu.solve(&y) {
            let s = z.norm();
            if s.is_finite() && s > 0.0 {
                y = z / s;
            }
        }
    }
    y
}

/// Eigenvalues of `h` sorted by decreasing modulus, as `(re, im)`.
fn sorted_eigenvalues(h: &DMatrix<f64>) -> Vec<(f64, f64)> {
    let mut ev: Vec<(f64, f64)> = Schur::new(h.clone())
        .complex_eigenvalues()
        .iter()
        .map(|c| (c.re, c.im))
        .collect();
    ev.sort_by(|a, b| b.0.hypot(b.1).total_cmp(&a.0.hypot(a.1)));
    ev
}

/// Lowest finite eigenvalues of `Kψ = εMψ` above `σ`.
///
/// The operator `A = (K − σM)⁻¹M` has eigenvalues `ν = 1/(ε − σ)`: the
/// wanted levels become the dominant ones and the infinite eigenvalues of
/// the pencil (rows where `M` vanishes) map to `ν = 0`. Dominant Ritz pairs
/// of restarted Arnoldi cycles are locked one at a time and later cycles are
/// kept orthogonal to the locked Schur vectors.
pub fn shift_invert_eigs(system: &AssembledSystem, options: &EigenOptions) -> Result<EigenReport> {
    let n = system.dim();
    if options.count == 0 || options.subspace < 2 {
        return Err(Error::InvalidArgument(
            "need count ≥ 1 and subspace ≥ 2".into(),
        ));
    }
    let shift = options.shift;
    let lu = BandLu::combine(&system.stiffness, &system.mass, -shift)?
        .factorize()
        .map_err(|reason| Error::Factorization { shift, reason })?;
    let mut applications = 0;
    let mut apply = |x: &[f64]| {
        let mut y = vec![0.0; n];
        system.mass.mul_vec(x, &mut y);
        lu.solve_in_place(&mut y);
        applications += 1;
        y
    };
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut random_start = |apply: &mut dyn FnMut(&[f64]) -> Vec<f64>| {
        let r: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        apply(&r)
    };

    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut start = random_start(&mut apply);
    let mut restarts = 0;
    let mut nu_max: f64 = 0.0;
    let mut exhausted = false;
    while !exhausted && locked.len() < options.count.min(n) && restarts < options.max_restarts {
        restarts += 1;
        let before = norm(&start);
        orthogonalize(&mut start, &locked);
        let s = norm(&start);
        if !(s > 1e-12 * before) {
            // the range of the operator is exhausted
            break;
        }
        start.iter_mut().for_each(|v| *v /= s);

        let m = options.subspace.min(n - locked.len());
        let mut v = vec![start];
        let mut h = DMatrix::zeros(m + 1, m);
        let mut steps = m;
        for j in 0..m {
            let mut w = apply(&v[j]);
            orthogonalize(&mut w, &locked);
            let coef = orthogonalize(&mut w, &v);
            for (i, c) in coef.iter().enumerate() {
                h[(i, j)] = *c;
            }
            let beta = norm(&w);
            h[(j + 1, j)] = beta;
            let scale = coef.iter().fold(0.0f64, |a, c| a.max(c.abs()));
            if !(beta > 1e-14 * scale) {
                steps = j + 1;
                h[(j + 1, j)] = 0.0;
                break;
            }
            w.iter_mut().for_each(|x| *x /= beta);
            v.push(w);
        }
        let hm = h.view((0, 0), (steps, steps)).into_owned();
        let beta = h[(steps, steps - 1)];
        let wanted = options.count.min(n) - locked.len();
        let mut next = vec![0.0; n];
        let mut locking = true;
        for &(re, im) in sorted_eigenvalues(&hm).iter().take(wanted) {
            if im.abs() > 1e-8 * re.abs() {
                locking = false;
                continue;
            }
            nu_max = nu_max.max(re.abs());
            let y = ritz_vector(&hm, re);
            let mut x = vec![0.0; n];
            for (k, &c) in y.iter().enumerate() {
                axpy(&mut x, c, &v[k]);
            }
            let converged = (beta * y[steps - 1]).abs() <= options.tolerance * re.abs();
            if locking && converged {
                if re.abs() <= 1e-10 * nu_max {
                    // only infinite eigenvalues remain
                    exhausted = true;
                    break;
                }
                orthogonalize(&mut x, &locked);
                let s = norm(&x);
                x.iter_mut().for_each(|v| *v /= s);
                locked.push(x);
            } else {
                locking = false;
                axpy(&mut next, 1.0, &x);
            }
        }
        if locked.len() >= options.count.min(n) {
            break;
        }
        start = if norm(&next) > 0.0 {
            next
        } else {
            random_start(&mut apply)
        };
    }

    // Ritz pairs of A on the locked subspace
    let k = locked.len();
    let aq: Vec<Vec<f64>> = locked.iter().map(|q| apply(q)).collect();
    let g = DMatrix::from_fn(k, k, |i, j| dot(&locked[i], &aq[j]));
    let mut pairs = Vec::new();
    let mut max_imaginary: f64 = 0.0;
    if k > 0 {
        for (re, im) in sorted_eigenvalues(&g) {
            let rel = im.abs() / re.hypot(im);
            max_imaginary = max_imaginary.max(rel);
            if rel > 1e-8 {
                return Err(Error::Degenerate(format!(
                    "Ritz value {re} + {im}i is not real; the pencil is not symmetric"
                )));
            }
            if re.abs() <= 1e-10 * nu_max.max(re.abs()) {
                continue;
            }
            let gy = ritz_vector(&g, re);
            let mut psi = vec![0.0; n];
            for (j, &c) in gy.iter().enumerate() {
                axpy(&mut psi, c, &locked[j]);
            }
            let s = norm(&psi);
            psi.iter_mut().for_each(|v| *v /= s);
            let value = shift + 1.0 / re;
            let (mut kp, mut mp) = (vec![0.0; n], vec![0.0; n]);
            system.stiffness.mul_vec(&psi, &mut kp);
            system.mass.mul_vec(&psi, &mut mp);
            let kn = norm(&kp);
            axpy(&mut kp, -value, &mp);
            pairs.push(EigenPair {
                value,
                vector: psi,
                residual: norm(&kp) / kn,
            });
        }
    }
    pairs.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(EigenReport {
        pairs,
        restarts,
        applications,
        max_imaginary,
    })
}
