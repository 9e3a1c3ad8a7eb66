//! Coupled radial Dirac s-state equations for the muon.
//!
//! Component 0 is the small part `f`, component 1 the large part `g`. With
//! binding `ε = E − μc²` the residuals are
//!
//! ```text
//! f' + f/r − (V − ε) g / ħc
//! g' − g/r − (2μc² + ε − V) f / ħc
//! ```
//!
//! and the energy functional is rearranged to
//! `ε = (2μc² F + ∫V(g² − f²)) / (G − F)` with `F = ∫f²`, `G = ∫g²`,
//! which avoids subtracting two numbers of size `μc²`.

use std::sync::Arc;

use super::constants::Constant;
use super::muonic::{MuonicField, MuonicParams};
use super::{Problem, ProblemDefaults, ProblemOptions, Samples, SiteLayout};
use crate::error::{Error, Result};
use crate::network::MultiIndex;
use crate::quadrature::QuadratureRule;
use crate::trial::EnvelopeKind;

const F: usize = 0;
const G: usize = 1;

pub struct DiracProblem {
    layout: SiteLayout,
    slots: Vec<MultiIndex>,
    v: Vec<f64>,
    mc2: f64,
    hbar_c: f64,
    defaults: ProblemDefaults,
    params: MuonicParams,
    field: Arc<MuonicField>,
}

impl DiracProblem {
    pub fn muonic(o: &ProblemOptions) -> Result<Self> {
        o.shared_nodes_only("muonic-dirac")?;
        let params = MuonicParams::pb208();
        let field = Arc::new(MuonicField::new(params)?);
        let rule = QuadratureRule::gauss_legendre(o.grid.unwrap_or(80), 0.0, params.r_max)?;
        let points: Vec<Vec<f64>> = rule.nodes().iter().map(|&x| vec![x]).collect();
        let layout = SiteLayout::shared(1, &points, rule.weights())?;
        let mut v = Vec::with_capacity(points.len());
        for p in &points {
            let value = field.total(p[0]);
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    node: p.clone(),
                    value,
                });
            }
            v.push(value);
        }
        if rule.nodes().iter().any(|&r| r <= 0.0) {
            return Err(Error::InvalidArgument(
                "Dirac collocation points must be positive".into(),
            ));
        }
        Ok(Self {
            layout,
            slots: vec![MultiIndex::zeros(1), MultiIndex::new(&[1])],
            v,
            mc2: params.reduced_mass(),
            hbar_c: params.hbar_c,
            defaults: ProblemDefaults {
                initial_shape: 0.25,
                ..ProblemDefaults::default()
            },
            params,
            field,
        })
    }

    pub fn rest_energy(&self) -> f64 {
        self.mc2
    }

    pub fn field(&self) -> &MuonicField {
        &self.field
    }

    fn moments(&self, s: &Samples) -> (f64, f64, f64) {
        let (mut ff, mut gg, mut w_v) = (0.0, 0.0, 0.0);
        for &(q, w) in self.layout.quadrature() {
            let (f, g) = (s.get(q, F, 0), s.get(q, G, 0));
            ff += w * f * f;
            gg += w * g * g;
            w_v += w * self.v[q] * (g * g - f * f);
        }
        (ff, gg, w_v)
    }
}

impl Problem for DiracProblem {
    fn id(&self) -> &str {
        "muonic-dirac"
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

    fn components(&self) -> usize {
        2
    }

    fn component_names(&self) -> Vec<String> {
        vec!["f".into(), "g".into()]
    }

    fn radial(&self) -> bool {
        true
    }

    fn initial_output_scale(&self, component: usize) -> f64 {
        if component == F {
            0.1
        } else {
            1.0
        }
    }

    fn energy(&self, s: &Samples) -> Result<f64> {
        let (ff, gg, w_v) = self.moments(s);
        let den = gg - ff;
        if !(den > 0.0) {
            return Err(Error::Degenerate(format!(
                "large component does not dominate: ∫g² − ∫f² = {den}"
            )));
        }
        Ok((2.0 * self.mc2 * ff + w_v) / den)
    }

    fn energy_vjp(&self, s: &Samples, eps_bar: f64, s_bar: &mut Samples) {
        let (ff, gg, _) = self.moments(s);
        let den = gg - ff;
        let eps = match self.energy(s) {
            Ok(e) => e,
            Err(_) => return,
        };
        for &(q, w) in self.layout.quadrature() {
            let (f, g) = (s.get(q, F, 0), s.get(q, G, 0));
            *s_bar.get_mut(q, F, 0) +=
                eps_bar * 2.0 * w * f * (2.0 * self.mc2 - self.v[q] + eps) / den;
            *s_bar.get_mut(q, G, 0) += eps_bar * 2.0 * w * g * (self.v[q] - eps) / den;
        }
    }

    fn residuals(&self, s: &Samples, eps: f64, out: &mut [f64]) {
        for (n, &i) in self.layout.collocation().iter().enumerate() {
            let r = self.layout.site(i)[0];
            let (f, df) = (s.get(i, F, 0), s.get(i, F, 1));
            let (g, dg) = (s.get(i, G, 0), s.get(i, G, 1));
            out[2 * n] = df + f / r - (self.v[i] - eps) * g / self.hbar_c;
            out[2 * n + 1] = dg - g / r - (2.0 * self.mc2 + eps - self.v[i]) * f / self.hbar_c;
        }
    }

    fn residual_vjp(&self, s: &Samples, eps: f64, r_bar: &[f64], s_bar: &mut Samples) -> f64 {
        let mut eps_bar = 0.0;
        for (n, &i) in self.layout.collocation().iter().enumerate() {
            let r = self.layout.site(i)[0];
            let (b1, b2) = (r_bar[2 * n], r_bar[2 * n + 1]);
            let (f, g) = (s.get(i, F, 0), s.get(i, G, 0));
            *s_bar.get_mut(i, F, 1) += b1;
            *s_bar.get_mut(i, F, 0) +=
                b1 / r - b2 * (2.0 * self.mc2 + eps - self.v[i]) / self.hbar_c;
            *s_bar.get_mut(i, G, 1) += b2;
            *s_bar.get_mut(i, G, 0) += -b2 / r - b1 * (self.v[i] - eps) / self.hbar_c;
            eps_bar += b1 * g / self.hbar_c - b2 * f / self.hbar_c;
        }
        eps_bar
    }

    fn constants(&self) -> Vec<Constant> {
        let mut c = self.params.constants();
        c.push(Constant::new(
            "dirac.mu_c2",
            self.mc2,
            "MeV",
            "reduced-mass rest energy",
        ));
        c
    }
}
