//! Plain-text state snapshots.
//!
//! A snapshot is a versioned list of `key = value` lines. Real lists are
//! whitespace separated and written with 17 significant digits, so every
//! value round-trips exactly. An excited state carries the deflation basis it
//! was solved against, which makes the file self-contained.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::network::Mlp;
use crate::problems::Problem;
use crate::solver::{rayleigh_quotient, EigenSolution};
use crate::trial::{Ansatz, Deflated, DeflationBasis, Envelope, EnvelopeKind, ShapeParam};

pub const FORMAT_VERSION: u32 = 1;
const HEADER: &str = "# nneig state snapshot";

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub problem: String,
    pub level: usize,
    pub eigenvalue: f64,
    pub error: f64,
    /// `sqrt(∫|ψ|²)` of the deflated state.
    pub normalization: f64,
    pub ansatz: Ansatz,
    /// Overlaps with every basis state, frozen at the solution.
    pub overlaps: Vec<f64>,
    pub basis: DeflationBasis,
}

impl Snapshot {
    /// `basis` must be the basis `solution` was deflated against.
    pub fn from_solution(
        problem: &str,
        solution: &EigenSolution,
        basis: &DeflationBasis,
    ) -> Result<Self> {
        if solution.overlaps.len() != basis.len() {
            return Err(Error::Dimension {
                expected: basis.len(),
                got: solution.overlaps.len(),
            });
        }
        Ok(Self {
            problem: problem.to_string(),
            level: basis.len(),
            eigenvalue: solution.eigenvalue,
            error: solution.error,
            normalization: solution.normalization,
            ansatz: solution.ansatz.clone(),
            overlaps: solution.overlaps.clone(),
            basis: basis.clone(),
        })
    }

    /// The stored (unnormalized) deflated state.
    pub fn state(&self) -> Result<Deflated<'_>> {
        Deflated::with_overlaps(&self.ansatz, &self.basis, self.overlaps.clone())
    }

    /// Energy of the stored state recomputed through `problem`.
    pub fn rayleigh_quotient(&self, problem: &dyn Problem) -> Result<f64> {
        if problem.id() != self.problem {
            return Err(Error::InvalidArgument(format!(
                "snapshot belongs to `{}`, not `{}`",
                self.problem,
                problem.id()
            )));
        }
        rayleigh_quotient(&self.state()?, problem)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_string())?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }
}

fn reals(v: &[f64]) -> String {
    let mut s = String::new();
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{x:.16e}");
    }
    s
}

fn write_ansatz(out: &mut String, prefix: &str, a: &Ansatz) {
    let net = &a.nets()[0];
    let _ = writeln!(out, "{prefix}envelope = {}", a.envelope().kind());
    let _ = writeln!(out, "{prefix}shape = {:.16e}", a.envelope().shape());
    let _ = writeln!(out, "{prefix}components = {}", a.nets().len());
    let _ = writeln!(out, "{prefix}inputs = {}", net.n_inputs());
    let _ = writeln!(out, "{prefix}hidden = {}", net.n_hidden());
    let _ = writeln!(out, "{prefix}optimize_shape = {}", a.optimize_shape());
    let _ = writeln!(out, "{prefix}shape_param = {}", a.shape_param().name());
    let _ = writeln!(out, "{prefix}params = {}", reals(&a.params()));
}

impl fmt::Display for Snapshot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let _ = writeln!(out, "{HEADER}");
        let _ = writeln!(out, "format = {FORMAT_VERSION}");
        let _ = writeln!(out, "problem = {}", self.problem);
        let _ = writeln!(out, "level = {}", self.level);
        let _ = writeln!(out, "eigenvalue = {:.16e}", self.eigenvalue);
        let _ = writeln!(out, "error = {:.16e}", self.error);
        let _ = writeln!(out, "normalization = {:.16e}", self.normalization);
        let _ = writeln!(out, "overlaps = {}", reals(&self.overlaps));
        write_ansatz(&mut out, "state.", &self.ansatz);
        let _ = writeln!(out, "basis.len = {}", self.basis.len());
        for k in 0..self.basis.len() {
            let p = format!("basis.{k}.");
            let _ = writeln!(out, "{p}eigenvalue = {:.16e}", self.basis.eigenvalues()[k]);
            let _ = writeln!(
                out,
                "{p}normalization = {:.16e}",
                self.basis.normalization(k)
            );
            let _ = writeln!(out, "{p}row = {}", reals(self.basis.row(k)));
            write_ansatz(&mut out, &p, &self.basis.raw_states()[k]);
        }
        f.write_str(&out)
    }
}

struct Fields(BTreeMap<String, String>);

impl Fields {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", n + 1)))?;
            if map
                .insert(k.trim().to_string(), v.trim().to_string())
                .is_some()
            {
                return Err(Error::Parse(format!(
                    "line {}: duplicate key `{}`",
                    n + 1,
                    k.trim()
                )));
            }
        }
        Ok(Self(map))
    }

    fn raw(&self, key: &str) -> Result<&str> {
        self.0
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Parse(format!("missing key `{key}`")))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self.raw(key)?;
        v.parse()
            .map_err(|_| Error::Parse(format!("bad value `{v}` for `{key}`")))
    }

    fn reals(&self, key: &str) -> Result<Vec<f64>> {
        self.raw(key)?
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::Parse(format!("bad real `{t}` in `{key}`")))
            })
            .collect()
    }

    fn ansatz(&self, prefix: &str) -> Result<Ansatz> {
        let kind: EnvelopeKind = self.raw(&format!("{prefix}envelope"))?.parse()?;
        let shape: f64 = self.get(&format!("{prefix}shape"))?;
        let components: usize = self.get(&format!("{prefix}components"))?;
        let inputs: usize = self.get(&format!("{prefix}inputs"))?;
        let hidden: usize = self.get(&format!("{prefix}hidden"))?;
        let optimize_shape: bool = self.get(&format!("{prefix}optimize_shape"))?;
        let shape_param: ShapeParam = self.raw(&format!("{prefix}shape_param"))?.parse()?;
        let nets = (0..components)
            .map(|_| Mlp::zeros(inputs, hidden))
            .collect::<Result<Vec<_>>>()?;
        let mut a = Ansatz::new(
            Envelope::new(kind, shape)?,
            nets,
            optimize_shape,
            shape_param,
        )?;
        a.set_params(&self.reals(&format!("{prefix}params"))?)?;
        Ok(a)
    }
}

impl FromStr for Snapshot {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let f = Fields::parse(text)?;
        let version: u32 = f.get("format")?;
        if version != FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "snapshot format {version} is not supported (expected {FORMAT_VERSION})"
            )));
        }
        let n: usize = f.get("basis.len")?;
        let (mut raw, mut rows, mut eigenvalues, mut norms) =
            (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for k in 0..n {
            let p = format!("basis.{k}.");
            raw.push(f.ansatz(&p)?);
            rows.push(f.reals(&format!("{p}row"))?);
            eigenvalues.push(f.get(&format!("{p}eigenvalue"))?);
            norms.push(f.get(&format!("{p}normalization"))?);
        }
        let snapshot = Snapshot {
            problem: f.raw("problem")?.to_string(),
            level: f.get("level")?,
            eigenvalue: f.get("eigenvalue")?,
            error: f.get("error")?,
            normalization: f.get("normalization")?,
            ansatz: f.ansatz("state.")?,
            overlaps: f.reals("overlaps")?,
            basis: DeflationBasis::from_parts(raw, rows, eigenvalues, norms)?,
        };
        if snapshot.overlaps.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: snapshot.overlaps.len(),
            });
        }
        Ok(snapshot)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ansatz(seed: u64, components: usize) -> Ansatz {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ansatz::random(
            Envelope::new(EnvelopeKind::RadialExp, 0.4).unwrap(),
            components,
            1,
            3,
            true,
            ShapeParam::Log,
            &mut rng,
        )
        .unwrap()
    }

    #[test]
    fn text_round_trip_is_exact() {
        let mut basis = DeflationBasis::new();
        basis.push(ansatz(1, 2), &[], 0.7, -3.0).unwrap();
        basis.push(ansatz(2, 2), &[0.1], 1.3, -1.0).unwrap();
        let s = Snapshot {
            problem: "muonic-dirac".into(),
            level: 2,
            eigenvalue: -0.123456789012345678,
            error: 1e-9,
            normalization: 2.5,
            ansatz: ansatz(3, 2),
            overlaps: vec![0.25, -1.0 / 3.0],
            basis,
        };
        let back: Snapshot = s.to_string().parse().unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!("format = 2\n".parse::<Snapshot>().is_err());
        assert!("format = 1\nformat = 1\n".parse::<Snapshot>().is_err());
        assert!("no equals sign\n".parse::<Snapshot>().is_err());
    }
}
