//! Single-hidden-layer perceptron with closed-form derivatives.
//!
//! The network maps `r ∈ ℝⁿ` to `N(r) = Σᵢ vᵢ σ(zᵢ)` with
//! `zᵢ = Σⱼ wᵢⱼ rⱼ + uᵢ` and the logistic sigmoid `σ`. A mixed partial
//! derivative with orders `λ = (λ₁ … λₙ)` and total order `Λ` is
//! `Σᵢ vᵢ Pᵢ σ⁽ᴧ⁾(zᵢ)` where `Pᵢ = Πₖ wᵢₖ^λₖ`, so every input derivative
//! and every parameter gradient of such a derivative is exact.
//!
//! Parameters flatten as `(input_weights row-major, hidden_biases,
//! output_weights)`. Checkpoint files and the optimizer rely on that order.

use rand::Rng;

use crate::error::{Error, Result};

/// Highest input-derivative order available in closed form.
pub const MAX_INPUT_ORDER: usize = 4;

/// Highest derivative order whose parameter gradient is available
/// (needs `σ` one order above the derivative itself).
pub const MAX_GRADIENT_ORDER: usize = MAX_INPUT_ORDER - 1;

/// Orders of a mixed partial derivative, one entry per input.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    orders: Vec<u8>,
}

impl MultiIndex {
    pub fn new(orders: &[u8]) -> Self {
        Self {
            orders: orders.to_vec(),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            orders: vec![0; dim],
        }
    }

    /// `order`-th derivative along axis `axis`.
    pub fn axis(dim: usize, axis: usize, order: u8) -> Self {
        let mut orders = vec![0; dim];
        orders[axis] = order;
        Self { orders }
    }

    pub fn orders(&self) -> &[u8] {
        &self.orders
    }

    pub fn dim(&self) -> usize {
        self.orders.len()
    }

    pub fn total(&self) -> usize {
        self.orders.iter().map(|&o| o as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.orders.iter().all(|&o| o == 0)
    }

    /// Component-wise `self ≤ other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.dim() == other.dim() && self.orders.iter().zip(&other.orders).all(|(a, b)| a <= b)
    }

    /// All multi-indices `β` with `β ≤ self`, in lexicographic order.
    pub fn lower_set(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex::zeros(self.dim())];
        for k in 0..self.dim() {
            let mut next = Vec::with_capacity(out.len() * (self.orders[k] as usize + 1));
            for base in &out {
                for o in 0..=self.orders[k] {
                    let mut m = base.clone();
                    m.orders[k] = o;
                    next.push(m);
                }
            }
            out = next;
        }
        out.sort();
        out
    }

    /// `self − other`; caller guarantees `other ≤ self`.
    pub fn minus(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex {
            orders: self
                .orders
                .iter()
                .zip(&other.orders)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Product of binomial coefficients `Πₖ C(selfₖ, otherₖ)`.
    pub fn binomial(&self, other: &MultiIndex) -> f64 {
        self.orders
            .iter()
            .zip(&other.orders)
            .map(|(&n, &k)| binomial(n as u32, k as u32))
            .product()
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Logistic sigmoid evaluated without overflow for large `|z|`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `σ⁽ᵏ⁾(z)` for `k = 0..=4`, written in `s = σ(z)` and `t = 1 − s = σ(−z)`.
#[inline]
pub(crate) fn sigmoid_table(z: f64) -> [f64; MAX_INPUT_ORDER + 1] {
    let s = sigmoid(z);
    let t = sigmoid(-z);
    let st = s * t;
    let d = t - s;
    [
        s,
        st,
        st * d,
        st * (1.0 - 6.0 * st),
        st * d * (1.0 - 12.0 * st),
    ]
}

/// Closed-form `k`-th derivative of the sigmoid, `k ≤ 4`.
pub fn sigmoid_derivative(z: f64, order: usize) -> Result<f64> {
    if order > MAX_INPUT_ORDER {
        return Err(Error::UnsupportedOrder {
            order,
            max: MAX_INPUT_ORDER,
        });
    }
    Ok(sigmoid_table(z)[order])
}

/// Multilayer perceptron with `n` inputs, `m` sigmoid hidden units and a
/// linear output unit without bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    n_inputs: usize,
    n_hidden: usize,
    /// `m × n`, row `i` holds the weights into hidden unit `i`.
    input_weights: Vec<f64>,
    hidden_biases: Vec<f64>,
    output_weights: Vec<f64>,
}

impl Mlp {
    /// All-zero network.
    pub fn zeros(n_inputs: usize, n_hidden: usize) -> Result<Self> {
        if n_inputs == 0 || n_hidden == 0 {
            return Err(Error::InvalidArgument(format!(
                "network needs at least one input and one hidden unit (got n={n_inputs}, m={n_hidden})"
            )));
        }
        Ok(Self {
            n_inputs,
            n_hidden,
            input_weights: vec![0.0; n_inputs * n_hidden],
            hidden_biases: vec![0.0; n_hidden],
            output_weights: vec![0.0; n_hidden],
        })
    }

    /// Every parameter drawn uniformly from `[−1, 1]`.
    pub fn random<R: Rng + ?Sized>(n_inputs: usize, n_hidden: usize, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(n_inputs, n_hidden)?;
        let params: Vec<f64> = (0..net.n_params())
            .map(|_| rng.gen_range(-1.0..=1.0))
            .collect();
        net.set_params(&params)?;
        Ok(net)
    }

    pub fn from_parts(
        n_inputs: usize,
        input_weights: Vec<f64>,
        hidden_biases: Vec<f64>,
        output_weights: Vec<f64>,
    ) -> Result<Self> {
        let m = hidden_biases.len();
        let mut net = Self::zeros(n_inputs, m)?;
        check_len(input_weights.len(), m * n_inputs)?;
        check_len(output_weights.len(), m)?;
        let mut flat = input_weights;
        flat.extend_from_slice(&hidden_biases);
        flat.extend_from_slice(&output_weights);
        net.set_params(&flat)?;
        Ok(net)
    }

    pub fn from_params(n_inputs: usize, n_hidden: usize, params: &[f64]) -> Result<Self> {
        let mut net = Self::zeros(n_inputs, n_hidden)?;
        net.set_params(params)?;
        Ok(net)
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    /// `m·n + 2m`.
    pub fn n_params(&self) -> usize {
        self.n_hidden * (self.n_inputs + 2)
    }

    pub fn input_weights(&self) -> &[f64] {
        &self.input_weights
    }

    pub fn hidden_biases(&self) -> &[f64] {
        &self.hidden_biases
    }

    pub fn output_weights(&self) -> &[f64] {
        &self.output_weights
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        self.write_params(&mut p);
        p
    }

    pub(crate) fn write_params(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.input_weights);
        out.extend_from_slice(&self.hidden_biases);
        out.extend_from_slice(&self.output_weights);
    }

    /// Overwrites every parameter. Rejects non-finite values so the network
    /// never holds NaN or infinity.
    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        check_len(params.len(), self.n_params())?;
        if let Some(bad) = params.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite network parameter at flat index {bad}"
            )));
        }
        let nw = self.n_hidden * self.n_inputs;
        let m = self.n_hidden;
        self.input_weights.copy_from_slice(&params[..nw]);
        self.hidden_biases.copy_from_slice(&params[nw..nw + m]);
        self.output_weights.copy_from_slice(&params[nw + m..]);
        Ok(())
    }

    #[inline]
    fn activation(&self, i: usize, x: &[f64]) -> f64 {
        let row = &self.input_weights[i * self.n_inputs..(i + 1) * self.n_inputs];
        row.iter().zip(x).map(|(w, r)| w * r).sum::<f64>() + self.hidden_biases[i]
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        check_len(x.len(), self.n_inputs)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                node: x.to_vec(),
                value: f64::NAN,
            });
        }
        Ok(())
    }

    fn check_index(&self, mi: &MultiIndex, max: usize) -> Result<()> {
        check_len(mi.dim(), self.n_inputs)?;
        if mi.total() > max {
            return Err(Error::UnsupportedOrder {
                order: mi.total(),
                max,
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok((0..self.n_hidden)
            .map(|i| self.output_weights[i] * sigmoid(self.activation(i, x)))
            .sum())
    }

    /// Exact mixed partial derivative `∂^λ N / ∂r^λ` at `x`.
    pub fn input_derivative(&self, x: &[f64], mi: &MultiIndex) -> Result<f64> {
        self.check_point(x)?;
        self.check_index(mi, MAX_INPUT_ORDER)?;
        let mut out = [0.0];
        self.eval_set(x, std::slice::from_ref(mi), &mut out);
        Ok(out[0])
    }

    /// Gradient of `∂^λ N(x)` with respect to every parameter, in the
    /// flattening order.
    pub fn parameter_gradient_of_derivative(&self, x: &[f64], mi: &MultiIndex) -> Result<Vec<f64>> {
        self.check_point(x)?;
        self.check_index(mi, MAX_GRADIENT_ORDER)?;
        let mut grad = vec![0.0; self.n_params()];
        self.accumulate_set_gradient(x, std::slice::from_ref(mi), &[1.0], &mut grad);
        Ok(grad)
    }

    /// Evaluates `∂^β N(x)` for every `β` in `set` into `out`.
    ///
    /// Hot path: dimensions and orders are not re-validated here.
    pub(crate) fn eval_set(&self, x: &[f64], set: &[MultiIndex], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let n = self.n_inputs;
        for i in 0..self.n_hidden {
            let table = sigmoid_table(self.activation(i, x));
            let row = &self.input_weights[i * n..(i + 1) * n];
            let v = self.output_weights[i];
            for (o, beta) in out.iter_mut().zip(set) {
                *o += v * weight_monomial(row, beta) * table[beta.total()];
            }
        }
    }

    /// Adds `Σ_β bars[β] · ∂(∂^β N(x))/∂p` to `out` (flattened order).
    pub(crate) fn accumulate_set_gradient(
        &self,
        x: &[f64],
        set: &[MultiIndex],
        bars: &[f64],
        out: &mut [f64],
    ) {
        let n = self.n_inputs;
        let m = self.n_hidden;
        let (w_out, rest) = out.split_at_mut(m * n);
        let (u_out, v_out) = rest.split_at_mut(m);
        for i in 0..m {
            let table = sigmoid_table(self.activation(i, x));
            let row = &self.input_weights[i * n..(i + 1) * n];
            let v = self.output_weights[i];
            let mut dv = 0.0;
            let mut dz = 0.0;
            for (beta, &bar) in set.iter().zip(bars) {
                if bar == 0.0 {
                    continue;
                }
                let order = beta.total();
                let p = weight_monomial(row, beta);
                dv += bar * p * table[order];
                dz += bar * p * table[order + 1];
                for j in 0..n {
                    let bj = beta.orders[j];
                    if bj > 0 {
                        let dp = monomial_partial(row, beta, j);
                        w_out[i * n + j] += v * bar * dp * table[order];
                    }
                }
            }
            v_out[i] += dv;
            u_out[i] += v * dz;
            for j in 0..n {
                w_out[i * n + j] += v * dz * x[j];
            }
        }
    }
}

#[inline]
fn weight_monomial(row: &[f64], beta: &MultiIndex) -> f64 {
    let mut p = 1.0;
    for (w, &o) in row.iter().zip(&beta.orders) {
        if o > 0 {
            p *= w.powi(o as i32);
        }
    }
    p
}

/// `∂Pᵢ/∂wᵢⱼ` for `Pᵢ = Πₖ wᵢₖ^βₖ`.
#[inline]
fn monomial_partial(row: &[f64], beta: &MultiIndex, j: usize) -> f64 {
    let mut p = beta.orders[j] as f64 * row[j].powi(beta.orders[j] as i32 - 1);
    for (k, (w, &o)) in row.iter().zip(&beta.orders).enumerate() {
        if k != j && o > 0 {
            p *= w.powi(o as i32);
        }
    }
    p
}

fn check_len(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::Dimension { expected, got });
    }
    Ok(())
}
