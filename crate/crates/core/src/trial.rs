//! Trial wavefunctions `ψ(r) = B(r) · N(r)` and projection deflation.
//!
//! The envelope `B` carries the boundary behaviour for any parameter vector;
//! the network `N` does the approximation. Multi-component states (the Dirac
//! pair) share one envelope shape and carry one network per component.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::network::{Mlp, MultiIndex};
use crate::quadrature::Quadrature;

/// Highest total derivative order a trial function provides.
pub const MAX_TRIAL_ORDER: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvelopeKind {
    /// `exp(−β x²)` on the real line.
    Gaussian1d,
    /// `r · exp(−β r)` on the half line; vanishes at the origin.
    RadialExp,
    /// `exp(−λ Σ rₖ²)` in any dimension.
    GaussianNd,
}

impl EnvelopeKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvelopeKind::Gaussian1d => "gaussian-1d",
            EnvelopeKind::RadialExp => "radial-exp",
            EnvelopeKind::GaussianNd => "gaussian-nd",
        }
    }

    fn accepts_dim(self, dim: usize) -> bool {
        match self {
            EnvelopeKind::Gaussian1d | EnvelopeKind::RadialExp => dim == 1,
            EnvelopeKind::GaussianNd => dim >= 1,
        }
    }
}

impl fmt::Display for EnvelopeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvelopeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian-1d" => Ok(EnvelopeKind::Gaussian1d),
            "radial-exp" => Ok(EnvelopeKind::RadialExp),
            "gaussian-nd" => Ok(EnvelopeKind::GaussianNd),
            other => Err(Error::Parse(format!("unknown envelope kind `{other}`"))),
        }
    }
}

/// Boundary-condition factor with a positive shape parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    kind: EnvelopeKind,
    shape: f64,
}

impl Envelope {
    pub fn new(kind: EnvelopeKind, shape: f64) -> Result<Self> {
        check_shape(shape)?;
        Ok(Self { kind, shape })
    }

    pub fn kind(&self) -> EnvelopeKind {
        self.kind
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.derivative_with_sensitivity(x, &MultiIndex::zeros(x.len()))
            .0
    }

    /// Closed-form mixed partial of the envelope (per-axis order ≤ 2).
    pub fn derivative(&self, x: &[f64], mi: &MultiIndex) -> Result<f64> {
        if !self.kind.accepts_dim(x.len()) || mi.dim() != x.len() {
            return Err(Error::Dimension {
                expected: if self.kind == EnvelopeKind::GaussianNd {
                    mi.dim()
                } else {
                    1
                },
                got: x.len(),
            });
        }
        if mi.orders().iter().any(|&o| o > 2) {
            return Err(Error::UnsupportedOrder {
                order: mi.total(),
                max: MAX_TRIAL_ORDER,
            });
        }
        Ok(self.derivative_with_sensitivity(x, mi).0)
    }

    /// `(∂^γ B, ∂/∂shape ∂^γ B)`; orders already validated.
    pub(crate) fn derivative_with_sensitivity(&self, x: &[f64], mi: &MultiIndex) -> (f64, f64) {
        let s = self.shape;
        match self.kind {
            EnvelopeKind::RadialExp => {
                let r = x[0];
                let e = (-s * r).exp();
                match mi.orders()[0] {
                    0 => (r * e, -r * r * e),
                    1 => ((1.0 - s * r) * e, (-2.0 * r + s * r * r) * e),
                    _ => (
                        (s * s * r - 2.0 * s) * e,
                        (-2.0 + 4.0 * s * r - s * s * r * r) * e,
                    ),
                }
            }
            EnvelopeKind::Gaussian1d | EnvelopeKind::GaussianNd => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let e = (-s * r2).exp();
                let mut poly = 1.0;
                let mut polys = [0.0; 8];
                let mut dpolys = [0.0; 8];
                for (k, (&xk, &o)) in x.iter().zip(mi.orders()).enumerate() {
                    let (h, dh) = match o {
                        0 => (1.0, 0.0),
                        1 => (-2.0 * s * xk, -2.0 * xk),
                        _ => (4.0 * s * s * xk * xk - 2.0 * s, 8.0 * s * xk * xk - 2.0),
                    };
                    polys[k] = h;
                    dpolys[k] = dh;
                    poly *= h;
                }
                let mut dpoly = -r2 * poly;
                for k in 0..x.len() {
                    if dpolys[k] != 0.0 {
                        let others: f64 =
                            (0..x.len()).filter(|&j| j != k).map(|j| polys[j]).product();
                        dpoly += dpolys[k] * others;
                    }
                }
                (e * poly, e * dpoly)
            }
        }
    }
}

fn check_shape(shape: f64) -> Result<()> {
    if !(shape.is_finite() && shape > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "envelope shape must be positive and finite, got {shape}"
        )));
    }
    Ok(())
}

/// How the envelope shape enters the optimization vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeParam {
    /// The optimizer sees `log(shape)`, so positivity cannot be violated.
    Log,
    /// The optimizer sees `shape` itself; non-positive proposals are rejected.
    Direct,
}

impl ShapeParam {
    pub fn name(self) -> &'static str {
        match self {
            ShapeParam::Log => "log",
            ShapeParam::Direct => "direct",
        }
    }
}

impl FromStr for ShapeParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log" => Ok(ShapeParam::Log),
            "direct" => Ok(ShapeParam::Direct),
            other => Err(Error::Parse(format!(
                "unknown shape parametrization `{other}`"
            ))),
        }
    }
}

/// Anything that can be evaluated as a (possibly multi-component) state.
pub trait State {
    fn components(&self) -> usize;
    fn dim(&self) -> usize;
    fn derivative(&self, x: &[f64], component: usize, mi: &MultiIndex) -> Result<f64>;

    fn value(&self, x: &[f64], component: usize) -> Result<f64> {
        self.derivative(x, component, &MultiIndex::zeros(self.dim()))
    }
}

/// `ψ_t(r) = B(r) · N(r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialFunction {
    envelope: Envelope,
    net: Mlp,
    optimize_shape: bool,
}

impl TrialFunction {
    pub fn new(envelope: Envelope, net: Mlp, optimize_shape: bool) -> Result<Self> {
        if !envelope.kind.accepts_dim(net.n_inputs()) {
            return Err(Error::InvalidArgument(format!(
                "{} envelope cannot wrap a network with {} inputs",
                envelope.kind,
                net.n_inputs()
            )));
        }
        Ok(Self {
            envelope,
            net,
            optimize_shape,
        })
    }

    pub fn envelope(&self) -> &Envelope {
        &self.envelope
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn optimize_shape(&self) -> bool {
        self.optimize_shape
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.envelope.value(x) * self.net.forward(x)?)
    }

    /// Mixed partial via the Leibniz rule over closed-form envelope and
    /// network derivatives. No division by `r` ever happens, so radial trial
    /// functions are well-defined at the origin.
    pub fn derivative(&self, x: &[f64], mi: &MultiIndex) -> Result<f64> {
        if mi.total() > MAX_TRIAL_ORDER {
            return Err(Error::UnsupportedOrder {
                order: mi.total(),
                max: MAX_TRIAL_ORDER,
            });
        }
        let mut acc = 0.0;
        for beta in mi.lower_set() {
            let gamma = mi.minus(&beta);
            acc += mi.binomial(&beta)
                * self.envelope.derivative(x, &gamma)?
                * self.net.input_derivative(x, &beta)?;
        }
        Ok(acc)
    }
}

impl State for TrialFunction {
    fn components(&self) -> usize {
        1
    }
    fn dim(&self) -> usize {
        self.net.n_inputs()
    }
    fn derivative(&self, x: &[f64], component: usize, mi: &MultiIndex) -> Result<f64> {
        check_component(component, 1)?;
        TrialFunction::derivative(self, x, mi)
    }
}

fn check_component(c: usize, n: usize) -> Result<()> {
    if c >= n {
        return Err(Error::Dimension {
            expected: n,
            got: c + 1,
        });
    }
    Ok(())
}

/// Trial state with one network per component and a shared envelope.
///
/// The optimization vector is the concatenation of every network's flat
/// parameters followed, when the shape is optimized, by one entry for the
/// shape (`log(shape)` or `shape` depending on [`ShapeParam`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Ansatz {
    envelope: Envelope,
    nets: Vec<Mlp>,
    optimize_shape: bool,
    shape_param: ShapeParam,
}

impl Ansatz {
    pub fn new(
        envelope: Envelope,
        nets: Vec<Mlp>,
        optimize_shape: bool,
        shape_param: ShapeParam,
    ) -> Result<Self> {
        let first = nets
            .first()
            .ok_or_else(|| Error::InvalidArgument("ansatz needs at least one network".into()))?;
        let (n, m) = (first.n_inputs(), first.n_hidden());
        if nets
            .iter()
            .any(|net| net.n_inputs() != n || net.n_hidden() != m)
        {
            return Err(Error::InvalidArgument(
                "all component networks must share their shape".into(),
            ));
        }
        if !envelope.kind.accepts_dim(n) {
            return Err(Error::InvalidArgument(format!(
                "{} envelope cannot wrap a network with {n} inputs",
                envelope.kind
            )));
        }
        Ok(Self {
            envelope,
            nets,
            optimize_shape,
            shape_param,
        })
    }

    /// Random networks (uniform `[−1, 1]`) around a fixed envelope.
    pub fn random<R: Rng + ?Sized>(
        envelope: Envelope,
        components: usize,
        dim: usize,
        hidden: usize,
        optimize_shape: bool,
        shape_param: ShapeParam,
        rng: &mut R,
    ) -> Result<Self> {
        let nets = (0..components)
            .map(|_| Mlp::random(dim, hidden, rng))
            .collect::<Result<Vec<_>>>()?;
        Self::new(envelope, nets, optimize_shape, shape_param)
    }

    pub fn single(tf: TrialFunction, shape_param: ShapeParam) -> Self {
        Self {
            envelope: tf.envelope,
            optimize_shape: tf.optimize_shape,
            nets: vec![tf.net],
            shape_param,
        }
    }

    pub fn envelope(&self) -> &Envelope {
        &self.envelope
    }

    pub fn nets(&self) -> &[Mlp] {
        &self.nets
    }

    pub fn optimize_shape(&self) -> bool {
        self.optimize_shape
    }

    pub fn shape_param(&self) -> ShapeParam {
        self.shape_param
    }

    pub fn hidden_units(&self) -> usize {
        self.nets[0].n_hidden()
    }

    pub fn component(&self, c: usize) -> TrialFunction {
        TrialFunction {
            envelope: self.envelope,
            net: self.nets[c].clone(),
            optimize_shape: self.optimize_shape,
        }
    }

    pub fn n_params(&self) -> usize {
        self.nets.iter().map(Mlp::n_params).sum::<usize>() + usize::from(self.optimize_shape)
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        for net in &self.nets {
            net.write_params(&mut p);
        }
        if self.optimize_shape {
            p.push(match self.shape_param {
                ShapeParam::Log => self.envelope.shape.ln(),
                ShapeParam::Direct => self.envelope.shape,
            });
        }
        p
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::Dimension {
                expected: self.n_params(),
                got: params.len(),
            });
        }
        if self.optimize_shape {
            let raw = params[params.len() - 1];
            let shape = match self.shape_param {
                ShapeParam::Log => raw.exp(),
                ShapeParam::Direct => raw,
            };
            check_shape(shape)?;
            self.envelope.shape = shape;
        }
        let mut offset = 0;
        for net in &mut self.nets {
            let k = net.n_params();
            net.set_params(&params[offset..offset + k])?;
            offset += k;
        }
        Ok(())
    }

    /// `d shape / d (shape entry of the optimization vector)`.
    fn shape_chain(&self) -> f64 {
        match self.shape_param {
            ShapeParam::Log => self.envelope.shape,
            ShapeParam::Direct => 1.0,
        }
    }

    /// Values of every slot of `plan` for every component at `x`, written
    /// component-major into `out` (`out[c * slots + k]`).
    pub fn eval_plan(
        &self,
        plan: &DerivPlan,
        x: &[f64],
        scratch: &mut PlanScratch,
        out: &mut [f64],
    ) {
        scratch.fill_envelope(plan, &self.envelope, x);
        let k_slots = plan.slots.len();
        for (c, net) in self.nets.iter().enumerate() {
            net.eval_set(x, &plan.net_set, &mut scratch.net);
            for (k, terms) in plan.terms.iter().enumerate() {
                out[c * k_slots + k] = terms
                    .iter()
                    .map(|t| t.coef * scratch.env[t.env] * scratch.net[t.net])
                    .sum();
            }
        }
    }

    /// Adds `Σ_{c,k} bars[c·slots + k] · ∂(slot value)/∂θ` to `grad`.
    pub fn accumulate_plan_gradient(
        &self,
        plan: &DerivPlan,
        x: &[f64],
        bars: &[f64],
        scratch: &mut PlanScratch,
        grad: &mut [f64],
    ) {
        scratch.fill_envelope(plan, &self.envelope, x);
        let k_slots = plan.slots.len();
        let mut offset = 0;
        let mut shape_bar = 0.0;
        for (c, net) in self.nets.iter().enumerate() {
            let n_p = net.n_params();
            let bars_c = &bars[c * k_slots..(c + 1) * k_slots];
            if bars_c.iter().all(|&b| b == 0.0) {
                offset += n_p;
                continue;
            }
            scratch.net_bar.iter_mut().for_each(|v| *v = 0.0);
            if self.optimize_shape {
                net.eval_set(x, &plan.net_set, &mut scratch.net);
            }
            for (terms, &bar) in plan.terms.iter().zip(bars_c) {
                if bar == 0.0 {
                    continue;
                }
                for t in terms {
                    scratch.net_bar[t.net] += bar * t.coef * scratch.env[t.env];
                    if self.optimize_shape {
                        shape_bar += bar * t.coef * scratch.env_shape[t.env] * scratch.net[t.net];
                    }
                }
            }
            net.accumulate_set_gradient(
                x,
                &plan.net_set,
                &scratch.net_bar,
                &mut grad[offset..offset + n_p],
            );
            offset += n_p;
        }
        if self.optimize_shape {
            grad[offset] += shape_bar * self.shape_chain();
        }
    }
}

impl State for Ansatz {
    fn components(&self) -> usize {
        self.nets.len()
    }
    fn dim(&self) -> usize {
        self.nets[0].n_inputs()
    }
    fn derivative(&self, x: &[f64], component: usize, mi: &MultiIndex) -> Result<f64> {
        check_component(component, self.nets.len())?;
        self.component(component).derivative(x, mi)
    }
}

#[derive(Debug, Clone, Copy)]
struct PlanTerm {
    coef: f64,
    env: usize,
    net: usize,
}

/// Precomputed Leibniz expansion of a fixed list of derivative slots.
#[derive(Debug, Clone)]
pub struct DerivPlan {
    slots: Vec<MultiIndex>,
    net_set: Vec<MultiIndex>,
    env_set: Vec<MultiIndex>,
    terms: Vec<Vec<PlanTerm>>,
}

impl DerivPlan {
    pub fn new(slots: &[MultiIndex]) -> Result<Self> {
        let dim = slots.first().map(MultiIndex::dim).ok_or_else(|| {
            Error::InvalidArgument("derivative plan needs at least one slot".into())
        })?;
        let mut net_set: Vec<MultiIndex> = Vec::new();
        let mut env_set: Vec<MultiIndex> = Vec::new();
        let mut terms = Vec::with_capacity(slots.len());
        for alpha in slots {
            if alpha.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: alpha.dim(),
                });
            }
            if alpha.total() > MAX_TRIAL_ORDER {
                return Err(Error::UnsupportedOrder {
                    order: alpha.total(),
                    max: MAX_TRIAL_ORDER,
                });
            }
            let mut slot_terms = Vec::new();
            for beta in alpha.lower_set() {
                let gamma = alpha.minus(&beta);
                let net = index_of(&mut net_set, beta.clone());
                let env = index_of(&mut env_set, gamma);
                slot_terms.push(PlanTerm {
                    coef: alpha.binomial(&beta),
                    env,
                    net,
                });
            }
            terms.push(slot_terms);
        }
        Ok(Self {
            slots: slots.to_vec(),
            net_set,
            env_set,
            terms,
        })
    }

    pub fn slots(&self) -> &[MultiIndex] {
        &self.slots
    }

    pub fn scratch(&self) -> PlanScratch {
        PlanScratch {
            env: vec![0.0; self.env_set.len()],
            env_shape: vec![0.0; self.env_set.len()],
            net: vec![0.0; self.net_set.len()],
            net_bar: vec![0.0; self.net_set.len()],
        }
    }
}

fn index_of(set: &mut Vec<MultiIndex>, mi: MultiIndex) -> usize {
    if let Some(i) = set.iter().position(|m| *m == mi) {
        i
    } else {
        set.push(mi);
        set.len() - 1
    }
}

/// Per-thread work buffers for [`DerivPlan`] evaluation.
#[derive(Debug, Clone)]
pub struct PlanScratch {
    env: Vec<f64>,
    env_shape: Vec<f64>,
    net: Vec<f64>,
    net_bar: Vec<f64>,
}

impl PlanScratch {
    fn fill_envelope(&mut self, plan: &DerivPlan, envelope: &Envelope, x: &[f64]) {
        for (i, gamma) in plan.env_set.iter().enumerate() {
            let (v, dv) = envelope.derivative_with_sensitivity(x, gamma);
            self.env[i] = v;
            self.env_shape[i] = dv;
        }
    }
}

/// Orthonormal computed states, each a fixed linear combination of frozen
/// trial snapshots: `ψ_k = Σ_{j ≤ k} A_kj ψ̃_j`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeflationBasis {
    raw: Vec<Ansatz>,
    rows: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
    norms: Vec<f64>,
}

impl DeflationBasis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn raw_states(&self) -> &[Ansatz] {
        &self.raw
    }

    /// Expansion coefficients of state `k` over the raw snapshots `0..=k`.
    pub fn row(&self, k: usize) -> &[f64] {
        &self.rows[k]
    }

    /// Norm of the deflated state before it was normalized.
    pub fn normalization(&self, k: usize) -> f64 {
        self.norms[k]
    }

    /// Appends `(raw − Σ overlaps[a] ψ_a) / norm`.
    pub fn push(
        &mut self,
        raw: Ansatz,
        overlaps: &[f64],
        norm: f64,
        eigenvalue: f64,
    ) -> Result<()> {
        if overlaps.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: overlaps.len(),
            });
        }
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Degenerate(format!(
                "cannot normalize a state with norm {norm}"
            )));
        }
        let k = self.len();
        let mut row = vec![0.0; k + 1];
        row[k] = 1.0;
        for (a, &c) in overlaps.iter().enumerate() {
            for (j, &coef) in self.rows[a].iter().enumerate() {
                row[j] -= c * coef;
            }
        }
        row.iter_mut().for_each(|v| *v /= norm);
        self.raw.push(raw);
        self.rows.push(row);
        self.eigenvalues.push(eigenvalue);
        self.norms.push(norm);
        Ok(())
    }

    /// Rebuilds a basis from stored pieces (snapshot reload).
    pub fn from_parts(
        raw: Vec<Ansatz>,
        rows: Vec<Vec<f64>>,
        eigenvalues: Vec<f64>,
        norms: Vec<f64>,
    ) -> Result<Self> {
        let n = raw.len();
        if rows.len() != n || eigenvalues.len() != n || norms.len() != n {
            return Err(Error::InvalidArgument("inconsistent basis parts".into()));
        }
        for (k, row) in rows.iter().enumerate() {
            if row.len() != k + 1 {
                return Err(Error::Dimension {
                    expected: k + 1,
                    got: row.len(),
                });
            }
        }
        Ok(Self {
            raw,
            rows,
            eigenvalues,
            norms,
        })
    }

    /// The first `k` states.
    pub fn prefix(&self, k: usize) -> Self {
        let k = k.min(self.len());
        Self {
            raw: self.raw[..k].to_vec(),
            rows: self.rows[..k].to_vec(),
            eigenvalues: self.eigenvalues[..k].to_vec(),
            norms: self.norms[..k].to_vec(),
        }
    }

    /// State `k` as an evaluable object.
    pub fn state(&self, k: usize) -> BasisState<'_> {
        BasisState { basis: self, k }
    }
}

/// One member of a [`DeflationBasis`].
#[derive(Debug, Clone, Copy)]
pub struct BasisState<'a> {
    basis: &'a DeflationBasis,
    k: usize,
}

impl State for BasisState<'_> {
    fn components(&self) -> usize {
        self.basis.raw[0].components()
    }
    fn dim(&self) -> usize {
        self.basis.raw[0].dim()
    }
    fn derivative(&self, x: &[f64], component: usize, mi: &MultiIndex) -> Result<f64> {
        let mut acc = 0.0;
        for (j, &a) in self.basis.rows[self.k].iter().enumerate() {
            acc += a * self.basis.raw[j].derivative(x, component, mi)?;
        }
        Ok(acc)
    }
}

/// `ψ = ψ̃ − Σ_a ψ_a ⟨ψ_a|ψ̃⟩` with overlaps frozen at construction.
pub struct Deflated<'a> {
    raw: &'a dyn State,
    basis: &'a DeflationBasis,
    overlaps: Vec<f64>,
}

impl<'a> Deflated<'a> {
    /// Deflation with overlaps computed elsewhere (stored snapshots).
    pub fn with_overlaps(
        raw: &'a dyn State,
        basis: &'a DeflationBasis,
        overlaps: Vec<f64>,
    ) -> Result<Self> {
        if overlaps.len() != basis.len() {
            return Err(Error::Dimension {
                expected: basis.len(),
                got: overlaps.len(),
            });
        }
        Ok(Self {
            raw,
            basis,
            overlaps,
        })
    }

    pub fn overlaps(&self) -> &[f64] {
        &self.overlaps
    }
}

impl State for Deflated<'_> {
    fn components(&self) -> usize {
        self.raw.components()
    }
    fn dim(&self) -> usize {
        self.raw.dim()
    }
    fn derivative(&self, x: &[f64], component: usize, mi: &MultiIndex) -> Result<f64> {
        let mut v = self.raw.derivative(x, component, mi)?;
        for (a, &c) in self.overlaps.iter().enumerate() {
            v -= c * self.basis.state(a).derivative(x, component, mi)?;
        }
        Ok(v)
    }
}

/// Quadrature inner product `Σ_q w_q Σ_c a_c(x_q) b_c(x_q)`.
pub fn inner_product(a: &dyn State, b: &dyn State, quad: &dyn Quadrature) -> Result<f64> {
    if a.components() != b.components() || a.dim() != b.dim() || quad.dim() != a.dim() {
        return Err(Error::Dimension {
            expected: a.dim(),
            got: quad.dim(),
        });
    }
    let mut x = vec![0.0; quad.dim()];
    let mut acc = 0.0;
    for i in 0..quad.len() {
        quad.node(i, &mut x);
        for c in 0..a.components() {
            acc += quad.weight(i) * a.value(&x, c)? * b.value(&x, c)?;
        }
    }
    Ok(acc)
}

/// Projects every basis state out of `raw`. Overlaps use `quad`, the same
/// inner product the solver normalizes with. An empty basis is the identity.
pub fn deflate<'a>(
    raw: &'a dyn State,
    basis: &'a DeflationBasis,
    quad: &dyn Quadrature,
) -> Result<Deflated<'a>> {
    let overlaps = (0..basis.len())
        .map(|a| inner_product(&basis.state(a), raw, quad))
        .collect::<Result<Vec<_>>>()?;
    Ok(Deflated {
        raw,
        basis,
        overlaps,
    })
}
