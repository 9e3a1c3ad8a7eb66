//! Eigenproblem catalog.
//!
//! A problem fixes a set of sample sites (collocation points plus quadrature
//! nodes), the derivative slots it needs at every site, and two functions of
//! those samples: the energy functional and the residual vector. Both come
//! with a vector-Jacobian product so the solver can chain exact gradients back
//! to the trial parameters without knowing anything about the physics.

mod constants;
mod dirac;
mod local;
mod muonic;
mod nonlocal;

use std::fmt;

pub use constants::{constants_table, Constant, NucleonMass};
pub use dirac::DiracProblem;
pub use local::{
    henon_heiles_potential, morse_exact_level, morse_potential, sextic_potential, EnergyForm,
    LocalSchrodinger, MorseParams,
};
pub use muonic::{MuonicField, MuonicParams};
pub use nonlocal::{NonlocalParams, NonlocalProblem};

use crate::error::{Error, Result};
use crate::network::MultiIndex;
use crate::trial::{EnvelopeKind, State};

/// Sample sites shared by the residual and the energy functional.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteLayout {
    dim: usize,
    coords: Vec<f64>,
    collocation: Vec<usize>,
    quadrature: Vec<(usize, f64)>,
}

impl SiteLayout {
    /// Every site is both a collocation point and a weighted quadrature node.
    pub fn shared(dim: usize, points: &[Vec<f64>], weights: &[f64]) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::Dimension {
                expected: points.len(),
                got: weights.len(),
            });
        }
        let coords = flatten(dim, points)?;
        Ok(Self {
            dim,
            coords,
            collocation: (0..points.len()).collect(),
            quadrature: weights.iter().copied().enumerate().collect(),
        })
    }

    /// Separate collocation points and quadrature nodes.
    pub fn split(
        dim: usize,
        collocation: &[Vec<f64>],
        nodes: &[Vec<f64>],
        weights: &[f64],
    ) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::Dimension {
                expected: nodes.len(),
                got: weights.len(),
            });
        }
        let mut coords = flatten(dim, collocation)?;
        coords.extend(flatten(dim, nodes)?);
        let nc = collocation.len();
        Ok(Self {
            dim,
            coords,
            collocation: (0..nc).collect(),
            quadrature: weights
                .iter()
                .enumerate()
                .map(|(i, &w)| (nc + i, w))
                .collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_sites(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn site(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn collocation(&self) -> &[usize] {
        &self.collocation
    }

    pub fn quadrature(&self) -> &[(usize, f64)] {
        &self.quadrature
    }
}

fn flatten(dim: usize, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(points.len() * dim);
    for p in points {
        if p.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: p.len(),
            });
        }
        out.extend_from_slice(p);
    }
    Ok(out)
}

/// State values at every site, component and derivative slot.
///
/// Stored site-major: `data[(site · components + c) · slots + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    sites: usize,
    components: usize,
    slots: usize,
    data: Vec<f64>,
}

impl Samples {
    pub fn zeros(sites: usize, components: usize, slots: usize) -> Self {
        Self {
            sites,
            components,
            slots,
            data: vec![0.0; sites * components * slots],
        }
    }

    /// Samples an arbitrary state; slow path used for checks and reloads.
    pub fn from_state(
        state: &dyn State,
        layout: &SiteLayout,
        slots: &[MultiIndex],
    ) -> Result<Self> {
        let mut s = Self::zeros(layout.n_sites(), state.components(), slots.len());
        for site in 0..layout.n_sites() {
            for c in 0..state.components() {
                for (k, mi) in slots.iter().enumerate() {
                    *s.get_mut(site, c, k) = state.derivative(layout.site(site), c, mi)?;
                }
            }
        }
        Ok(s)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    #[inline]
    pub fn get(&self, site: usize, c: usize, k: usize) -> f64 {
        self.data[(site * self.components + c) * self.slots + k]
    }

    #[inline]
    pub fn get_mut(&mut self, site: usize, c: usize, k: usize) -> &mut f64 {
        &mut self.data[(site * self.components + c) * self.slots + k]
    }

    /// All slots of all components at one site.
    pub fn site(&self, site: usize) -> &[f64] {
        let n = self.components * self.slots;
        &self.data[site * n..(site + 1) * n]
    }

    pub fn site_mut(&mut self, site: usize) -> &mut [f64] {
        let n = self.components * self.slots;
        &mut self.data[site * n..(site + 1) * n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }
}

/// Benchmark defaults a problem ships with; every one is overridable.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemDefaults {
    pub hidden_units: usize,
    pub initial_shape: f64,
    pub optimize_shape: bool,
    pub max_iterations: usize,
    pub restarts: usize,
    pub levels: usize,
    /// Rayleigh-quotient iterations run before the collocation phase.
    pub warm_start_iterations: usize,
    pub error_tolerance: f64,
    pub gradient_tolerance: f64,
    pub scale_penalty: f64,
    /// Energy quadrature for variational runs (see [`ProblemOptions::quadrature`]).
    pub variational_quadrature: Option<usize>,
}

impl Default for ProblemDefaults {
    fn default() -> Self {
        Self {
            hidden_units: 8,
            initial_shape: 1.0,
            optimize_shape: true,
            max_iterations: 5000,
            restarts: 5,
            levels: 1,
            warm_start_iterations: 100,
            error_tolerance: 1e-8,
            gradient_tolerance: 1e-7,
            scale_penalty: 1e-2,
            variational_quadrature: None,
        }
    }
}

/// An eigenproblem expressed over a fixed [`SiteLayout`].
pub trait Problem: Send + Sync {
    fn id(&self) -> &str;
    fn dim(&self) -> usize;
    fn layout(&self) -> &SiteLayout;
    fn slots(&self) -> &[MultiIndex];
    fn envelope_kind(&self) -> EnvelopeKind;
    fn defaults(&self) -> &ProblemDefaults;
    fn domain(&self) -> Vec<(f64, f64)>;

    fn components(&self) -> usize {
        1
    }

    fn component_names(&self) -> Vec<String> {
        vec!["psi".to_string()]
    }

    /// Radial problems report `φ(r)/r` in wavefunction dumps.
    fn radial(&self) -> bool {
        false
    }

    /// Relative size of each component's network output at initialization.
    fn initial_output_scale(&self, _component: usize) -> f64 {
        1.0
    }

    /// Number of residuals; one per collocation point and equation.
    fn residual_count(&self) -> usize {
        self.layout().collocation().len() * self.components()
    }

    /// Energy functional `ε[ψ]` from samples.
    fn energy(&self, s: &Samples) -> Result<f64>;

    /// Adds `ε_bar · ∂ε/∂samples` into `s_bar`.
    fn energy_vjp(&self, s: &Samples, eps_bar: f64, s_bar: &mut Samples);

    /// Residuals of the eigen-equation at the collocation points.
    fn residuals(&self, s: &Samples, eps: f64, out: &mut [f64]);

    /// Adds `Σ r_bar · ∂r/∂samples` into `s_bar`; returns `Σ r_bar · ∂r/∂ε`.
    fn residual_vjp(&self, s: &Samples, eps: f64, r_bar: &[f64], s_bar: &mut Samples) -> f64;

    /// Quadrature norm `Σ_q w_q Σ_c ψ_c(x_q)²`.
    fn norm(&self, s: &Samples) -> f64 {
        let mut acc = 0.0;
        for &(q, w) in self.layout().quadrature() {
            for c in 0..s.components() {
                let v = s.get(q, c, 0);
                acc += w * v * v;
            }
        }
        acc
    }

    /// Physical constants used by this problem, for audit dumps.
    fn constants(&self) -> Vec<Constant> {
        Vec::new()
    }
}

impl fmt::Debug for dyn Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem").field("id", &self.id()).finish()
    }
}

/// Build-time knobs shared by every problem.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProblemOptions {
    /// Collocation points per axis.
    pub grid: Option<usize>,
    /// Gauss–Legendre nodes per axis for the energy integrals, separate
    /// from the collocation points. Only equidistant-grid problems accept it.
    pub quadrature: Option<usize>,
}

impl ProblemOptions {
    pub fn with_grid(grid: Option<usize>) -> Self {
        Self {
            grid,
            quadrature: None,
        }
    }

    /// Errors when a separate quadrature is requested from `id`.
    pub(crate) fn shared_nodes_only(&self, id: &str) -> Result<()> {
        match self.quadrature {
            None => Ok(()),
            Some(_) => Err(Error::InvalidArgument(format!(
                "`{id}` integrates on its collocation nodes and takes no separate quadrature"
            ))),
        }
    }
}

type Builder = fn(&ProblemOptions) -> Result<Box<dyn Problem>>;

/// Problems selectable by string id.
pub struct ProblemRegistry {
    entries: Vec<(&'static str, &'static str, Builder)>,
}

impl ProblemRegistry {
    pub fn empty() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register("morse", "Morse oscillator for I2 (atomic units)", |o| {
            Ok(Box::new(LocalSchrodinger::morse(o)?))
        });
        r.register(
            "muonic-schrodinger",
            "muon bound to Pb-208, Schrodinger s-state",
            |o| Ok(Box::new(LocalSchrodinger::muonic(o)?)),
        );
        r.register("muonic-dirac", "muon bound to Pb-208, Dirac s-state", |o| {
            Ok(Box::new(DiracProblem::muonic(o)?))
        });
        r.register("n-alpha", "nonlocal n+alpha cluster equation", |o| {
            Ok(Box::new(NonlocalProblem::n_alpha(o)?))
        });
        r.register(
            "henon-heiles",
            "two-dimensional Henon-Heiles oscillator",
            |o| Ok(Box::new(LocalSchrodinger::henon_heiles(o)?)),
        );
        r.register(
            "sextic-3d",
            "three coupled sextic anharmonic oscillators",
            |o| Ok(Box::new(LocalSchrodinger::sextic_3d(o)?)),
        );
        r.register("harmonic", "one-dimensional harmonic oscillator", |o| {
            Ok(Box::new(LocalSchrodinger::harmonic(o)?))
        });
        r
    }

    pub fn register(&mut self, id: &'static str, description: &'static str, build: Builder) {
        self.entries.retain(|(k, _, _)| *k != id);
        self.entries.push((id, description, build));
    }

    pub fn ids(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(k, _, _)| *k).collect()
    }

    pub fn describe(&self) -> Vec<(&'static str, &'static str)> {
        self.entries.iter().map(|(k, d, _)| (*k, *d)).collect()
    }

    pub fn build(&self, id: &str, options: &ProblemOptions) -> Result<Box<dyn Problem>> {
        match self.entries.iter().find(|(k, _, _)| *k == id) {
            Some((_, _, b)) => b(options),
            None => Err(Error::Unknown {
                kind: "problem",
                name: id.to_string(),
                known: self.ids().join(", "),
            }),
        }
    }
}
