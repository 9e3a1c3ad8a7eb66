use std::str::FromStr;

use crate::error::{Error, Result};

/// `ħc` in MeV·fm.
pub const HBAR_C: f64 = 197.3270;
/// Fine-structure constant.
pub const ALPHA: f64 = 1.0 / 137.037;
/// Reduced electron Compton wavelength `ħ/(m_e c)` in fm.
pub const LAMBDA_E: f64 = 386.159;
pub const M_MUON: f64 = 105.6584;
pub const M_PROTON: f64 = 938.2720;
pub const M_NEUTRON: f64 = 939.5654;

#[derive(Debug, Clone, PartialEq)]
pub struct Constant {
    pub name: &'static str,
    pub value: f64,
    pub unit: &'static str,
    pub note: &'static str,
}

impl Constant {
    pub const fn new(
        name: &'static str,
        value: f64,
        unit: &'static str,
        note: &'static str,
    ) -> Self {
        Self {
            name,
            value,
            unit,
            note,
        }
    }
}

/// Nucleon mass used in the n+α reduced mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NucleonMass {
    /// One common nucleon mass `(m_n + m_p)/2`, so `μ = 4/5 m_N`.
    Equal,
    /// `1/μ = 1/m_n + 1/(2m_n + 2m_p)` with distinct masses.
    Physical,
}

impl NucleonMass {
    pub fn name(self) -> &'static str {
        match self {
            NucleonMass::Equal => "equal",
            NucleonMass::Physical => "physical",
        }
    }

    /// n+α reduced mass in MeV.
    pub fn reduced_mass(self) -> f64 {
        match self {
            NucleonMass::Equal => 0.8 * 0.5 * (M_NEUTRON + M_PROTON),
            NucleonMass::Physical => {
                1.0 / (1.0 / M_NEUTRON + 1.0 / (2.0 * M_NEUTRON + 2.0 * M_PROTON))
            }
        }
    }
}

impl FromStr for NucleonMass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal" => Ok(NucleonMass::Equal),
            "physical" => Ok(NucleonMass::Physical),
            other => Err(Error::Parse(format!(
                "unknown nucleon mass convention `{other}`"
            ))),
        }
    }
}

/// Every physical constant the catalog uses.
pub fn constants_table() -> Vec<Constant> {
    let mut out = vec![
        Constant::new("hbar_c", HBAR_C, "MeV fm", "shared"),
        Constant::new("alpha", ALPHA, "1", "shared"),
        Constant::new(
            "lambda_e",
            LAMBDA_E,
            "fm",
            "reduced electron Compton wavelength",
        ),
        Constant::new("m_muon", M_MUON, "MeV", "muon rest energy"),
        Constant::new("m_proton", M_PROTON, "MeV", "proton rest energy"),
        Constant::new("m_neutron", M_NEUTRON, "MeV", "neutron rest energy"),
    ];
    out.extend(super::local::MorseParams::default().constants());
    out.extend(super::muonic::MuonicParams::pb208().constants());
    out.extend(super::nonlocal::NonlocalParams::default().constants());
    out
}
