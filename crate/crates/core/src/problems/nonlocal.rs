//! Radial Schrödinger equation with an additional nonlocal exchange kernel,
//! `−c φ'' + V φ + ∫ K(r, r') φ(r') dr' = ε φ`.

use super::constants::{Constant, NucleonMass, HBAR_C};
use super::{Problem, ProblemDefaults, ProblemOptions, Samples, SiteLayout};
use crate::error::{Error, Result};
use crate::network::MultiIndex;
use crate::quadrature::{equidistant, QuadratureRule};
use crate::trial::EnvelopeKind;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlocalParams {
    pub v0: f64,
    pub beta: f64,
    /// Kernel strength in `K = −A e^{−γ(r²+r'²)} (e^{2krr'} − e^{−2krr'})`.
    pub a: f64,
    pub gamma: f64,
    pub k: f64,
    pub mass: NucleonMass,
    pub r_max: f64,
}

impl Default for NonlocalParams {
    /// Positive `A` and `γ`: the only sign choice with a bounded kernel.
    fn default() -> Self {
        Self {
            v0: 41.28386,
            beta: 0.2751965,
            a: 62.03772,
            gamma: 0.8025,
            k: 0.46,
            mass: NucleonMass::Equal,
            r_max: 12.0,
        }
    }
}

impl NonlocalParams {
    /// Same magnitudes with explicit signs on `A` and `γ`.
    pub fn with_signs(a_positive: bool, gamma_positive: bool) -> Self {
        let d = Self::default();
        Self {
            a: if a_positive { d.a } else { -d.a },
            gamma: if gamma_positive { d.gamma } else { -d.gamma },
            ..d
        }
    }

    pub fn hbar2_over_2mu(&self) -> f64 {
        HBAR_C * HBAR_C / (2.0 * self.mass.reduced_mass())
    }

    pub fn potential(&self, r: f64) -> f64 {
        -self.v0 * (-self.beta * r * r).exp()
    }

    pub fn kernel(&self, r: f64, rp: f64) -> f64 {
        let g = -self.gamma * (r * r + rp * rp);
        let x = 2.0 * self.k * r * rp;
        -self.a * ((g + x).exp() - (g - x).exp())
    }

    pub fn constants(&self) -> Vec<Constant> {
        vec![
            Constant::new("n_alpha.V0", self.v0, "MeV", "Gaussian well depth"),
            Constant::new("n_alpha.beta", self.beta, "fm^-2", "Gaussian well range"),
            Constant::new("n_alpha.A", self.a, "MeV fm^-1", "kernel strength"),
            Constant::new("n_alpha.gamma", self.gamma, "fm^-2", "kernel range"),
            Constant::new("n_alpha.k", self.k, "fm^-2", "kernel coupling"),
            Constant::new(
                "n_alpha.mu",
                self.mass.reduced_mass(),
                "MeV",
                self.mass.name(),
            ),
            Constant::new(
                "n_alpha.hbar2_2mu",
                self.hbar2_over_2mu(),
                "MeV fm^2",
                "kinetic prefactor",
            ),
        ]
    }
}

pub struct NonlocalProblem {
    params: NonlocalParams,
    layout: SiteLayout,
    slots: Vec<MultiIndex>,
    c: f64,
    v: Vec<f64>,
    /// `K(r_i, x_q) w_q`, collocation × quadrature.
    k_colloc: Vec<f64>,
    /// `K(x_p, x_q)`, quadrature × quadrature.
    k_quad: Vec<f64>,
    defaults: ProblemDefaults,
}

const QUAD_NODES: usize = 80;

impl NonlocalProblem {
    pub fn new(params: NonlocalParams, collocation_points: usize) -> Result<Self> {
        let colloc: Vec<Vec<f64>> = equidistant(collocation_points, 0.0, params.r_max)?
            .into_iter()
            .map(|r| vec![r])
            .collect();
        let rule = QuadratureRule::gauss_legendre(QUAD_NODES, 0.0, params.r_max)?;
        let nodes: Vec<Vec<f64>> = rule.nodes().iter().map(|&r| vec![r]).collect();
        let layout = SiteLayout::split(1, &colloc, &nodes, rule.weights())?;
        let v: Vec<f64> = (0..layout.n_sites())
            .map(|i| params.potential(layout.site(i)[0]))
            .collect();
        let nq = rule.len();
        let mut k_colloc = Vec::with_capacity(colloc.len() * nq);
        for r in &colloc {
            for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
                k_colloc.push(params.kernel(r[0], x) * w);
            }
        }
        let mut k_quad = Vec::with_capacity(nq * nq);
        for &xp in rule.nodes() {
            for &xq in rule.nodes() {
                k_quad.push(params.kernel(xp, xq));
            }
        }
        if let Some(bad) = k_colloc.iter().chain(&k_quad).find(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                node: vec![params.r_max, params.r_max],
                value: *bad,
            });
        }
        Ok(Self {
            params,
            layout,
            slots: vec![
                MultiIndex::zeros(1),
                MultiIndex::new(&[1]),
                MultiIndex::new(&[2]),
            ],
            c: params.hbar2_over_2mu(),
            v,
            k_colloc,
            k_quad,
            defaults: ProblemDefaults {
                initial_shape: 1.0,
                max_iterations: 20000,
                ..ProblemDefaults::default()
            },
        })
    }

    pub fn n_alpha(o: &ProblemOptions) -> Result<Self> {
        o.shared_nodes_only("n-alpha")?;
        Self::new(NonlocalParams::default(), o.grid.unwrap_or(100))
    }

    pub fn params(&self) -> &NonlocalParams {
        &self.params
    }

    fn nq(&self) -> usize {
        self.layout.quadrature().len()
    }

    /// `Σ_q K(r_i, x_q) w_q φ(x_q)` for collocation point `n`.
    fn kernel_term(&self, s: &Samples, n: usize) -> f64 {
        let nq = self.nq();
        self.k_colloc[n * nq..(n + 1) * nq]
            .iter()
            .zip(self.layout.quadrature())
            .map(|(k, &(q, _))| k * s.get(q, 0, 0))
            .sum()
    }

    fn numerator_and_norm(&self, s: &Samples) -> (f64, f64) {
        let quad = self.layout.quadrature();
        let nq = quad.len();
        let (mut num, mut den) = (0.0, 0.0);
        for (p, &(sp, wp)) in quad.iter().enumerate() {
            let (phi, d1) = (s.get(sp, 0, 0), s.get(sp, 0, 1));
            den += wp * phi * phi;
            num += wp * (self.c * d1 * d1 + self.v[sp] * phi * phi);
            let row = &self.k_quad[p * nq..(p + 1) * nq];
            let inner: f64 = row
                .iter()
                .zip(quad)
                .map(|(k, &(sq, wq))| k * wq * s.get(sq, 0, 0))
                .sum();
            num += wp * phi * inner;
        }
        (num, den)
    }
}

impl Problem for NonlocalProblem {
    fn id(&self) -> &str {
        "n-alpha"
    }

    fn dim(&self) -> usize {
        1
    }

    fn layout(&self) -> &SiteLayout {
        &self.layout
    }

    fn slots(&self) -> &[MultiIndex] {
        &self.slots
    }

    fn envelope_kind(&self) -> EnvelopeKind {
        EnvelopeKind::RadialExp
    }

    fn defaults(&self) -> &ProblemDefaults {
        &self.defaults
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        vec![(0.0, self.params.r_max)]
    }

    fn radial(&self) -> bool {
        true
    }

    fn energy(&self, s: &Samples) -> Result<f64> {
        let (num, den) = self.numerator_and_norm(s);
        if !(den > 0.0) {
            return Err(Error::Degenerate("state has zero quadrature norm".into()));
        }
        Ok(num / den)
    }

    fn energy_vjp(&self, s: &Samples, eps_bar: f64, s_bar: &mut Samples) {
        let (num, den) = self.numerator_and_norm(s);
        if !(den > 0.0) {
            return;
        }
        let eps = num / den;
        let num_bar = eps_bar / den;
        let den_bar = -eps_bar * eps / den;
        let quad = self.layout.quadrature();
        let nq = quad.len();
        for (p, &(sp, wp)) in quad.iter().enumerate() {
            let (phi, d1) = (s.get(sp, 0, 0), s.get(sp, 0, 1));
            // symmetric kernel: ∂/∂φ_p of Σ w_p w_q K_pq φ_p φ_q is 2 w_p Σ_q K_pq w_q φ_q
            let row = &self.k_quad[p * nq..(p + 1) * nq];
            let inner: f64 = row
                .iter()
                .zip(quad)
                .map(|(k, &(sq, wq))| k * wq * s.get(sq, 0, 0))
                .sum();
            *s_bar.get_mut(sp, 0, 0) += num_bar * (2.0 * wp * self.v[sp] * phi + 2.0 * wp * inner)
                + den_bar * 2.0 * wp * phi;
            *s_bar.get_mut(sp, 0, 1) += num_bar * 2.0 * self.c * wp * d1;
        }
    }

    fn residuals(&self, s: &Samples, eps: f64, out: &mut [f64]) {
        for (n, &i) in self.layout.collocation().iter().enumerate() {
            out[n] = -self.c * s.get(i, 0, 2)
                + (self.v[i] - eps) * s.get(i, 0, 0)
                + self.kernel_term(s, n);
        }
    }

    fn residual_vjp(&self, s: &Samples, eps: f64, r_bar: &[f64], s_bar: &mut Samples) -> f64 {
        let nq = self.nq();
        let quad = self.layout.quadrature();
        let mut eps_bar = 0.0;
        for (n, &i) in self.layout.collocation().iter().enumerate() {
            let rb = r_bar[n];
            *s_bar.get_mut(i, 0, 2) -= self.c * rb;
            *s_bar.get_mut(i, 0, 0) += (self.v[i] - eps) * rb;
            for (k, &(q, _)) in self.k_colloc[n * nq..(n + 1) * nq].iter().zip(quad) {
                *s_bar.get_mut(q, 0, 0) += rb * k;
            }
            eps_bar -= rb * s.get(i, 0, 0);
        }
        eps_bar
    }

    fn constants(&self) -> Vec<Constant> {
        self.params.constants()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_symmetric_and_vanishing_on_axes() {
        let p = NonlocalParams::default();
        assert_eq!(p.kernel(1.0, 2.0), p.kernel(2.0, 1.0));
        for r in [0.0, 0.5, 3.0, 11.0] {
            assert_eq!(p.kernel(r, 0.0), 0.0);
            assert_eq!(p.kernel(0.0, r), 0.0);
        }
    }

    #[test]
    fn printed_signs_give_unbounded_kernel() {
        let printed = NonlocalParams::with_signs(false, false);
        assert!(printed.kernel(12.0, 12.0).abs() > 1e50);
        assert!(NonlocalParams::default().kernel(12.0, 12.0).abs() < 1e-30);
    }
}
