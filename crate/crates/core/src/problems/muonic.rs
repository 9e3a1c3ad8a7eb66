//! Nuclear charge distribution of Pb-208 and the potentials a bound muon sees.

use std::f64::consts::PI;

use super::constants::{Constant, ALPHA, HBAR_C, LAMBDA_E, M_MUON, M_NEUTRON, M_PROTON};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuonicParams {
    /// Fermi density normalization `A` (fm⁻³).
    pub rho0: f64,
    /// Half-density radius `b` (fm).
    pub radius: f64,
    /// Surface diffuseness `c` (fm).
    pub diffuseness: f64,
    pub alpha: f64,
    /// Constant inside the vacuum-polarization logarithm.
    pub c_log: f64,
    pub lambda_e: f64,
    pub z: f64,
    pub n: f64,
    pub m_muon: f64,
    pub m_proton: f64,
    pub m_neutron: f64,
    pub hbar_c: f64,
    /// Truncation radius of every radial integral (fm).
    pub r_max: f64,
}

impl MuonicParams {
    pub fn pb208() -> Self {
        Self {
            rho0: 0.0614932,
            radius: 6.685,
            diffuseness: 0.545,
            alpha: ALPHA,
            c_log: 1.781,
            lambda_e: LAMBDA_E,
            z: 82.0,
            n: 126.0,
            m_muon: M_MUON,
            m_proton: M_PROTON,
            m_neutron: M_NEUTRON,
            hbar_c: HBAR_C,
            r_max: 40.0,
        }
    }

    /// `e² = α ħc` in MeV·fm.
    pub fn e2(&self) -> f64 {
        self.alpha * self.hbar_c
    }

    /// Muon–nucleus reduced mass (MeV).
    pub fn reduced_mass(&self) -> f64 {
        let nucleus = self.z * self.m_proton + self.n * self.m_neutron;
        1.0 / (1.0 / self.m_muon + 1.0 / nucleus)
    }

    pub fn density(&self, r: f64) -> f64 {
        self.rho0 / (1.0 + ((r - self.radius) / self.diffuseness).exp())
    }

    pub fn constants(&self) -> Vec<Constant> {
        vec![
            Constant::new(
                "muonic.A",
                self.rho0,
                "fm^-3",
                "Fermi density normalization",
            ),
            Constant::new("muonic.b", self.radius, "fm", "half-density radius"),
            Constant::new("muonic.c", self.diffuseness, "fm", "surface diffuseness"),
            Constant::new(
                "muonic.C",
                self.c_log,
                "1",
                "vacuum-polarization log constant",
            ),
            Constant::new("muonic.Z", self.z, "1", "protons"),
            Constant::new("muonic.N", self.n, "1", "neutrons"),
            Constant::new("muonic.r_max", self.r_max, "fm", "radial truncation"),
            Constant::new("muonic.mu", self.reduced_mass(), "MeV", "muon reduced mass"),
        ]
    }
}

/// `t (ln(C t / λ_e) − 1)`, continuous at 0.
fn log_kernel(p: &MuonicParams, t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * ((p.c_log * t / p.lambda_e).ln() - 1.0)
    }
}

/// Potentials of a [`MuonicParams`] charge distribution, by composite
/// Gauss–Legendre quadrature split at the evaluation radius and the surface.
#[derive(Debug, Clone)]
pub struct MuonicField {
    params: MuonicParams,
    unit: QuadratureRule,
}

impl MuonicField {
    pub fn new(params: MuonicParams) -> Result<Self> {
        Ok(Self {
            params,
            unit: QuadratureRule::gauss_legendre(48, -1.0, 1.0)?,
        })
    }

    pub fn params(&self) -> &MuonicParams {
        &self.params
    }

    fn integrate<F: Fn(f64) -> f64>(&self, lo: f64, hi: f64, extra: f64, f: F) -> f64 {
        let p = &self.params;
        let mut cuts = vec![lo, hi];
        for c in [
            extra,
            p.radius - 4.0 * p.diffuseness,
            p.radius,
            p.radius + 4.0 * p.diffuseness,
        ] {
            if c > lo && c < hi {
                cuts.push(c);
            }
        }
        cuts.sort_by(|a, b| a.total_cmp(b));
        cuts.dedup();
        let mut acc = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (&x, &wt) in self.unit.nodes().iter().zip(self.unit.weights()) {
                acc += wt * half * f(mid + half * x);
            }
        }
        acc
    }

    /// `∫ ρ d³r` over the truncated ball.
    pub fn charge(&self) -> f64 {
        let p = self.params;
        4.0 * PI * self.integrate(0.0, p.r_max, p.r_max, |s| p.density(s) * s * s)
    }

    /// `V_e(r) = −4π e² [ (1/r)∫_0^r ρ s² ds + ∫_r^R ρ s ds ]`.
    pub fn electrostatic(&self, r: f64) -> Result<f64> {
        let p = self.params;
        if !(r >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "radius must be non-negative, got {r}"
            )));
        }
        let r = r.min(p.r_max);
        let inner = if r > 0.0 {
            self.integrate(0.0, r, r, |s| p.density(s) * s * s) / r
        } else {
            0.0
        };
        let outer = self.integrate(r, p.r_max, r, |s| p.density(s) * s);
        Ok(-4.0 * PI * p.e2() * (inner + outer))
    }

    /// `V_L(r) = −2π (e²/r) ∫ ρ(s) s [f(|r−s|) − f(r+s)] ds` with
    /// `f(t) = t (ln(C t/λ_e) − 1)`; the `r → 0` limit is used at the origin.
    pub fn uehling_log(&self, r: f64) -> Result<f64> {
        let p = self.params;
        if !(r >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "radius must be non-negative, got {r}"
            )));
        }
        if r == 0.0 {
            let i = self.integrate(0.0, p.r_max, 0.0, |s| {
                p.density(s) * s * (p.c_log * s / p.lambda_e).ln()
            });
            return Ok(4.0 * PI * p.e2() * i);
        }
        let i = self.integrate(0.0, p.r_max, r, |s| {
            p.density(s) * s * (log_kernel(&p, (r - s).abs()) - log_kernel(&p, r + s))
        });
        Ok(-2.0 * PI * p.e2() / r * i)
    }

    /// `V_p = (2α/3π)(V_L − 5/6 V_e)`.
    pub fn vacuum_polarization(&self, r: f64) -> Result<f64> {
        let p = self.params;
        Ok(2.0 * p.alpha / (3.0 * PI)
            * (self.uehling_log(r)? - 5.0 / 6.0 * self.electrostatic(r)?))
    }

    /// `V_e + V_p`; NaN for invalid radii.
    pub fn total(&self, r: f64) -> f64 {
        match (self.electrostatic(r), self.vacuum_polarization(r)) {
            (Ok(e), Ok(v)) => e + v,
            _ => f64::NAN,
        }
    }
}
