//! Schrödinger operators `H = −c ∇² + V(r)` with a local potential.

use std::sync::Arc;

use super::constants::{Constant, HBAR_C};
use super::muonic::{MuonicField, MuonicParams};
use super::{Problem, ProblemDefaults, ProblemOptions, Samples, SiteLayout};
use crate::error::{Error, Result};
use crate::network::MultiIndex;
use crate::quadrature::{Quadrature, QuadratureRule, TensorGrid};
use crate::trial::{EnvelopeKind, State};

/// How the kinetic part of the energy functional is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyForm {
    /// `∫ ψ (−c∇²ψ + Vψ)`.
    Direct,
    /// `∫ c|∇ψ|² + Vψ²`, valid when boundary terms vanish.
    Gradient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorseParams {
    pub depth: f64,
    pub alpha: f64,
    pub mass: f64,
    pub zeta: f64,
    pub xi: f64,
}

impl Default for MorseParams {
    fn default() -> Self {
        Self {
            depth: 0.0224,
            alpha: 0.9374,
            mass: 119406.0,
            zeta: 156.047612535,
            xi: 5.741837286e-4,
        }
    }
}

impl MorseParams {
    pub fn constants(&self) -> Vec<Constant> {
        vec![
            Constant::new("morse.D", self.depth, "hartree", "well depth"),
            Constant::new("morse.alpha", self.alpha, "1/bohr", "range"),
            Constant::new("morse.mu", self.mass, "m_e", "reduced mass"),
            Constant::new("morse.zeta", self.zeta, "1", "spectrum constant"),
            Constant::new("morse.xi", self.xi, "hartree", "spectrum constant"),
        ]
    }
}

pub fn morse_potential(p: &MorseParams, x: f64) -> f64 {
    let e = (-p.alpha * x).exp();
    p.depth * (e * e - 2.0 * e + 1.0)
}

/// Closed-form Morse level `(n+½)(1 − (n+½)/ζ) ξ`.
pub fn morse_exact_level(p: &MorseParams, n: usize) -> Result<f64> {
    let h = n as f64 + 0.5;
    if h >= p.zeta {
        return Err(Error::InvalidArgument(format!(
            "Morse level {n} does not exist"
        )));
    }
    Ok(h * (1.0 - h / p.zeta) * p.xi)
}

pub fn henon_heiles_potential(x: f64, y: f64) -> f64 {
    0.5 * (x * x + y * y) + (x * y * y - x * x * x / 3.0) / (4.0 * 5f64.sqrt())
}

pub fn sextic_potential(r: &[f64]) -> f64 {
    let one = |x: f64| {
        let x2 = x * x;
        0.5 * x2 + 2.0 * x2 * x2 + 0.5 * x2 * x2 * x2
    };
    r.iter().map(|&x| one(x)).sum::<f64>() + r[0] * r[1] + r[0] * r[2] + r[1] * r[2]
}

pub type Potential = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Everything needed to build a [`LocalSchrodinger`].
pub struct LocalSpec {
    pub id: String,
    pub kinetic: f64,
    pub form: EnergyForm,
    pub layout: SiteLayout,
    pub envelope: EnvelopeKind,
    pub domain: Vec<(f64, f64)>,
    pub potential: Potential,
    pub defaults: ProblemDefaults,
    pub radial: bool,
    pub constants: Vec<Constant>,
}

pub struct LocalSchrodinger {
    spec: LocalSpec,
    slots: Vec<MultiIndex>,
    /// Potential cached at every site.
    v: Vec<f64>,
    lap: Vec<usize>,
    grad: Vec<usize>,
}

impl LocalSchrodinger {
    pub fn new(spec: LocalSpec) -> Result<Self> {
        let dim = spec.layout.dim();
        if spec.domain.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: spec.domain.len(),
            });
        }
        let mut slots = vec![MultiIndex::zeros(dim)];
        let mut grad = Vec::new();
        if spec.form == EnergyForm::Gradient {
            for k in 0..dim {
                grad.push(slots.len());
                slots.push(MultiIndex::axis(dim, k, 1));
            }
        }
        let mut lap = Vec::new();
        for k in 0..dim {
            lap.push(slots.len());
            slots.push(MultiIndex::axis(dim, k, 2));
        }
        let mut v = Vec::with_capacity(spec.layout.n_sites());
        for i in 0..spec.layout.n_sites() {
            let x = spec.layout.site(i);
            let value = (spec.potential)(x);
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    node: x.to_vec(),
                    value,
                });
            }
            v.push(value);
        }
        Ok(Self {
            spec,
            slots,
            v,
            lap,
            grad,
        })
    }

    pub fn kinetic(&self) -> f64 {
        self.spec.kinetic
    }

    pub fn form(&self) -> EnergyForm {
        self.spec.form
    }

    pub fn potential(&self, x: &[f64]) -> f64 {
        (self.spec.potential)(x)
    }

    /// `Hψ(x)` for an arbitrary state.
    pub fn apply_hamiltonian(&self, state: &dyn State, x: &[f64]) -> Result<f64> {
        let mut lap = 0.0;
        for k in 0..x.len() {
            lap += state.derivative(x, 0, &MultiIndex::axis(x.len(), k, 2))?;
        }
        Ok(-self.spec.kinetic * lap + self.potential(x) * state.value(x, 0)?)
    }

    /// `Hψ(x) − εψ(x)`.
    pub fn residual_at(&self, state: &dyn State, x: &[f64], eps: f64) -> Result<f64> {
        Ok(self.apply_hamiltonian(state, x)? - eps * state.value(x, 0)?)
    }

    fn laplacian(&self, s: &Samples, site: usize) -> f64 {
        self.lap.iter().map(|&k| s.get(site, 0, k)).sum()
    }

    pub fn morse(o: &ProblemOptions) -> Result<Self> {
        let p = MorseParams::default();
        Self::new(LocalSpec {
            id: "morse".into(),
            kinetic: 0.5 / p.mass,
            form: EnergyForm::Direct,
            layout: equidistant_layout(o.grid.unwrap_or(150), (-1.0, 2.0), 1, o.quadrature)?,
            envelope: EnvelopeKind::Gaussian1d,
            domain: vec![(-1.0, 2.0)],
            potential: Arc::new(move |x| morse_potential(&p, x[0])),
            defaults: ProblemDefaults {
                initial_shape: 30.0,
                error_tolerance: 1e-16,
                gradient_tolerance: 1e-12,
                ..ProblemDefaults::default()
            },
            radial: false,
            constants: p.constants(),
        })
    }

    pub fn harmonic(o: &ProblemOptions) -> Result<Self> {
        o.shared_nodes_only("harmonic")?;
        let rule = QuadratureRule::gauss_legendre(o.grid.unwrap_or(40), -8.0, 8.0)?;
        let points: Vec<Vec<f64>> = rule.nodes().iter().map(|&x| vec![x]).collect();
        Self::new(LocalSpec {
            id: "harmonic".into(),
            kinetic: 0.5,
            form: EnergyForm::Direct,
            layout: SiteLayout::shared(1, &points, rule.weights())?,
            envelope: EnvelopeKind::Gaussian1d,
            domain: vec![(-8.0, 8.0)],
            potential: Arc::new(|x| 0.5 * x[0] * x[0]),
            defaults: ProblemDefaults {
                initial_shape: 0.3,
                hidden_units: 4,
                ..ProblemDefaults::default()
            },
            radial: false,
            constants: Vec::new(),
        })
    }

    pub fn henon_heiles(o: &ProblemOptions) -> Result<Self> {
        Self::new(LocalSpec {
            id: "henon-heiles".into(),
            kinetic: 0.5,
            form: EnergyForm::Direct,
            layout: equidistant_layout(o.grid.unwrap_or(20), (-6.0, 6.0), 2, o.quadrature)?,
            envelope: EnvelopeKind::GaussianNd,
            domain: vec![(-6.0, 6.0); 2],
            potential: Arc::new(|x| henon_heiles_potential(x[0], x[1])),
            defaults: ProblemDefaults {
                initial_shape: 0.5,
                levels: 4,
                variational_quadrature: Some(40),
                ..ProblemDefaults::default()
            },
            radial: false,
            constants: Vec::new(),
        })
    }

    pub fn sextic_3d(o: &ProblemOptions) -> Result<Self> {
        Self::new(LocalSpec {
            id: "sextic-3d".into(),
            kinetic: 0.5,
            form: EnergyForm::Gradient,
            layout: equidistant_layout(o.grid.unwrap_or(28), (-4.0, 4.0), 3, o.quadrature)?,
            envelope: EnvelopeKind::GaussianNd,
            domain: vec![(-4.0, 4.0); 3],
            potential: Arc::new(sextic_potential),
            defaults: ProblemDefaults {
                hidden_units: 25,
                initial_shape: 1.0,
                restarts: 2,
                max_iterations: 1500,
                warm_start_iterations: 400,
                ..ProblemDefaults::default()
            },
            radial: false,
            constants: Vec::new(),
        })
    }

    pub fn muonic(o: &ProblemOptions) -> Result<Self> {
        o.shared_nodes_only("muonic-schrodinger")?;
        let params = MuonicParams::pb208();
        let field = Arc::new(MuonicField::new(params)?);
        let rule = QuadratureRule::gauss_legendre(o.grid.unwrap_or(80), 0.0, params.r_max)?;
        let points: Vec<Vec<f64>> = rule.nodes().iter().map(|&x| vec![x]).collect();
        let mu = params.reduced_mass();
        Self::new(LocalSpec {
            id: "muonic-schrodinger".into(),
            kinetic: HBAR_C * HBAR_C / (2.0 * mu),
            form: EnergyForm::Gradient,
            layout: SiteLayout::shared(1, &points, rule.weights())?,
            envelope: EnvelopeKind::RadialExp,
            domain: vec![(0.0, params.r_max)],
            potential: Arc::new(move |x| field.total(x[0])),
            defaults: ProblemDefaults {
                initial_shape: 0.25,
                max_iterations: 20000,
                ..ProblemDefaults::default()
            },
            radial: true,
            constants: params.constants(),
        })
    }
}

/// Equidistant collocation points on `[lo, hi]^dim`, integrated by the
/// trapezoid rule on the same points or by a separate Gauss–Legendre grid.
fn equidistant_layout(
    n: usize,
    (lo, hi): (f64, f64),
    dim: usize,
    quadrature: Option<usize>,
) -> Result<SiteLayout> {
    let grid = TensorGrid::cube(QuadratureRule::trapezoid(n, lo, hi)?, dim)?;
    let points = grid.points();
    match quadrature {
        None => {
            let weights: Vec<f64> = (0..grid.len()).map(|i| grid.weight(i)).collect();
            SiteLayout::shared(dim, &points, &weights)
        }
        Some(q) => {
            let nodes = TensorGrid::cube(QuadratureRule::gauss_legendre(q, lo, hi)?, dim)?;
            let weights: Vec<f64> = (0..nodes.len()).map(|i| nodes.weight(i)).collect();
            SiteLayout::split(dim, &points, &nodes.points(), &weights)
        }
    }
}

impl Problem for LocalSchrodinger {
    fn id(&self) -> &str {
        &self.spec.id
    }

    fn dim(&self) -> usize {
        self.spec.layout.dim()
    }

    fn layout(&self) -> &SiteLayout {
        &self.spec.layout
    }

    fn slots(&self) -> &[MultiIndex] {
        &self.slots
    }

    fn envelope_kind(&self) -> EnvelopeKind {
        self.spec.envelope
    }

    fn defaults(&self) -> &ProblemDefaults {
        &self.spec.defaults
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        self.spec.domain.clone()
    }

    fn radial(&self) -> bool {
        self.spec.radial
    }

    fn energy(&self, s: &Samples) -> Result<f64> {
        let c = self.spec.kinetic;
        let (mut num, mut den) = (0.0, 0.0);
        for &(q, w) in self.spec.layout.quadrature() {
            let psi = s.get(q, 0, 0);
            den += w * psi * psi;
            num += w * match self.spec.form {
                EnergyForm::Direct => psi * (-c * self.laplacian(s, q) + self.v[q] * psi),
                EnergyForm::Gradient => {
                    let g2: f64 = self.grad.iter().map(|&k| s.get(q, 0, k).powi(2)).sum();
                    c * g2 + self.v[q] * psi * psi
                }
            };
        }
        if !(den > 0.0) {
            return Err(Error::Degenerate("state has zero quadrature norm".into()));
        }
        Ok(num / den)
    }

    fn energy_vjp(&self, s: &Samples, eps_bar: f64, s_bar: &mut Samples) {
        let c = self.spec.kinetic;
        let den = self.norm(s);
        let eps = match self.energy(s) {
            Ok(e) => e,
            Err(_) => return,
        };
        let num_bar = eps_bar / den;
        let den_bar = -eps_bar * eps / den;
        for &(q, w) in self.spec.layout.quadrature() {
            let psi = s.get(q, 0, 0);
            let mut d_psi = den_bar * 2.0 * w * psi;
            match self.spec.form {
                EnergyForm::Direct => {
                    d_psi += num_bar * w * (-c * self.laplacian(s, q) + 2.0 * self.v[q] * psi);
                    for &k in &self.lap {
                        *s_bar.get_mut(q, 0, k) += num_bar * w * (-c * psi);
                    }
                }
                EnergyForm::Gradient => {
                    d_psi += num_bar * 2.0 * w * self.v[q] * psi;
                    for &k in &self.grad {
                        *s_bar.get_mut(q, 0, k) += num_bar * 2.0 * c * w * s.get(q, 0, k);
                    }
                }
            }
            *s_bar.get_mut(q, 0, 0) += d_psi;
        }
    }

    fn residuals(&self, s: &Samples, eps: f64, out: &mut [f64]) {
        let c = self.spec.kinetic;
        for (r, &i) in out.iter_mut().zip(self.spec.layout.collocation()) {
            *r = -c * self.laplacian(s, i) + (self.v[i] - eps) * s.get(i, 0, 0);
        }
    }

    fn residual_vjp(&self, s: &Samples, eps: f64, r_bar: &[f64], s_bar: &mut Samples) -> f64 {
        let c = self.spec.kinetic;
        let mut eps_bar = 0.0;
        for (&rb, &i) in r_bar.iter().zip(self.spec.layout.collocation()) {
            *s_bar.get_mut(i, 0, 0) += (self.v[i] - eps) * rb;
            for &k in &self.lap {
                *s_bar.get_mut(i, 0, k) -= c * rb;
            }
            eps_bar -= rb * s.get(i, 0, 0);
        }
        eps_bar
    }

    fn constants(&self) -> Vec<Constant> {
        self.spec.constants.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn morse_potential_values() {
        let p = MorseParams::default();
        assert_eq!(morse_potential(&p, 0.0), 0.0);
        assert!((morse_potential(&p, 60.0) - 0.0224).abs() < 1e-15);
        let direct = 0.0224 * ((-1.8748f64).exp() - 2.0 * (-0.9374f64).exp() + 1.0);
        assert!((morse_potential(&p, 1.0) - direct).abs() < 1e-16);
    }

    #[test]
    fn morse_levels() {
        let p = MorseParams::default();
        let e0 = morse_exact_level(&p, 0).unwrap();
        assert!((e0 - 0.286171979e-3).abs() < 1e-12);
        let e1 = morse_exact_level(&p, 1).unwrap();
        assert_eq!(e1, 1.5 * (1.0 - 1.5 / 156.047612535) * 5.741837286e-4);
        assert!(e1 > e0);
    }

    #[test]
    fn potential_symmetries() {
        assert_eq!(henon_heiles_potential(0.0, 0.0), 0.0);
        assert_eq!(
            henon_heiles_potential(0.7, 1.3),
            henon_heiles_potential(0.7, -1.3)
        );
        assert_eq!(sextic_potential(&[0.0, 0.0, 0.0]), 0.0);
        let a = sextic_potential(&[0.3, -1.1, 0.8]);
        for perm in [[-1.1, 0.3, 0.8], [0.8, -1.1, 0.3], [0.3, 0.8, -1.1]] {
            assert!((sextic_potential(&perm) - a).abs() < 1e-14);
        }
    }
}
