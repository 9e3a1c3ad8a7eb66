//! Collocation eigensolver: objective assembly, exact gradients, restarts and
//! deflated excited-state sequences.

pub mod optim;

use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::network::Mlp;
use crate::problems::{Problem, Samples};
use crate::trial::{Ansatz, DeflationBasis, DerivPlan, Envelope, ShapeParam, State};

pub use optim::{
    Bfgs, ConjugateGradient, GradientDescent, IterationRecord, OptimOptions, OptimResult,
    Optimizer, OptimizerRegistry, StopReason,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMode {
    Analytic,
    /// Central differences with step `1e-6 · max(1, |θ_k|)`.
    FiniteDifference,
}

impl GradientMode {
    pub fn name(self) -> &'static str {
        match self {
            GradientMode::Analytic => "analytic",
            GradientMode::FiniteDifference => "finite-difference",
        }
    }
}

impl FromStr for GradientMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(GradientMode::Analytic),
            "finite-difference" | "fd" => Ok(GradientMode::FiniteDifference),
            other => Err(Error::Parse(format!("unknown gradient mode `{other}`"))),
        }
    }
}

/// What the optimizer minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Normalized sum of squared residuals with `ε` from the energy functional.
    Collocation,
    /// The energy functional itself.
    Variational,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::Collocation => "collocation",
            Objective::Variational => "variational",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub optimizer: String,
    pub max_iterations: usize,
    pub gradient_mode: GradientMode,
    pub error_tolerance: f64,
    pub gradient_tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
    pub hidden_units: usize,
    pub initial_shape: f64,
    pub optimize_shape: bool,
    pub shape_param: ShapeParam,
    /// Energy-functional iterations before each collocation solve.
    pub warm_start_iterations: usize,
    /// Fixed-order reductions; bit-identical reruns.
    pub deterministic: bool,
    /// `κ` in the collocation objective `E · (1 + κ (ln ∫|ψ|²)²)`. The
    /// error is invariant under rescaling the state, and without this factor
    /// the network can drift to nearly cancelling hidden units with vanishing
    /// norm. Zeros of the error are unaffected.
    pub scale_penalty: f64,
}

impl SolveConfig {
    pub fn for_problem(problem: &dyn Problem) -> Self {
        let d = problem.defaults();
        Self {
            optimizer: "bfgs".into(),
            max_iterations: d.max_iterations,
            gradient_mode: GradientMode::Analytic,
            error_tolerance: d.error_tolerance,
            gradient_tolerance: d.gradient_tolerance,
            restarts: d.restarts,
            seed: 1,
            hidden_units: d.hidden_units,
            initial_shape: d.initial_shape,
            optimize_shape: d.optimize_shape,
            shape_param: ShapeParam::Log,
            warm_start_iterations: d.warm_start_iterations,
            deterministic: true,
            scale_penalty: d.scale_penalty,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.restarts < 1 {
            return bad("restarts must be at least 1");
        }
        if self.hidden_units < 1 {
            return bad("hidden units must be at least 1");
        }
        if !(self.error_tolerance > 0.0 && self.gradient_tolerance > 0.0) {
            return bad("convergence thresholds must be positive");
        }
        if !(self.scale_penalty >= 0.0 && self.scale_penalty.is_finite()) {
            return bad("scale penalty must be non-negative");
        }
        if !(self.initial_shape > 0.0 && self.initial_shape.is_finite()) {
            return bad("initial envelope shape must be positive");
        }
        OptimizerRegistry::standard().get(&self.optimizer)?;
        Ok(())
    }

    fn options(&self, max_iterations: usize) -> OptimOptions {
        OptimOptions {
            max_iterations,
            value_tolerance: self.error_tolerance,
            gradient_tolerance: self.gradient_tolerance,
        }
    }
}

/// Sites handled per parallel work item. Fixed so reductions have a fixed
/// shape regardless of thread count.
const CHUNK: usize = 64;

/// Everything derived from one parameter vector.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// Deflated (unnormalized) state samples.
    pub samples: Samples,
    /// `⟨ψ_a|ψ̃⟩` for every basis state.
    pub overlaps: Vec<f64>,
    /// Quadrature norm `∫|ψ|²`.
    pub norm: f64,
    pub eps: f64,
    pub residuals: Vec<f64>,
    /// Normalized collocation error.
    pub error: f64,
}

/// Evaluates objectives and gradients of one problem against a fixed basis.
pub struct Engine<'a> {
    problem: &'a dyn Problem,
    plan: DerivPlan,
    basis: Vec<Samples>,
    deterministic: bool,
    scale_penalty: f64,
}

impl<'a> Engine<'a> {
    pub fn new(
        problem: &'a dyn Problem,
        basis: &DeflationBasis,
        deterministic: bool,
    ) -> Result<Self> {
        let plan = DerivPlan::new(problem.slots())?;
        let mut engine = Self {
            problem,
            plan,
            basis: Vec::new(),
            deterministic,
            scale_penalty: 0.0,
        };
        let raw: Vec<Samples> = basis
            .raw_states()
            .iter()
            .map(|a| engine.sample(a))
            .collect();
        for k in 0..basis.len() {
            let mut s = Samples::zeros(raw[0].sites(), raw[0].components(), raw[0].slots());
            for (j, &a) in basis.row(k).iter().enumerate() {
                for (t, v) in s.as_mut_slice().iter_mut().zip(raw[j].as_slice()) {
                    *t += a * v;
                }
            }
            engine.basis.push(s);
        }
        Ok(engine)
    }

    /// Scales the collocation objective by `1 + κ (ln ∫|ψ|²)²`.
    pub fn with_scale_penalty(mut self, kappa: f64) -> Self {
        self.scale_penalty = kappa;
        self
    }

    pub fn problem(&self) -> &dyn Problem {
        self.problem
    }

    /// Raw trial samples at every site.
    pub fn sample(&self, ansatz: &Ansatz) -> Samples {
        let layout = self.problem.layout();
        let (comps, slots) = (ansatz.components(), self.plan.slots().len());
        let mut s = Samples::zeros(layout.n_sites(), comps, slots);
        let per_site = comps * slots;
        s.as_mut_slice()
            .par_chunks_mut(CHUNK * per_site)
            .enumerate()
            .for_each(|(chunk, out)| {
                let mut scratch = self.plan.scratch();
                for (j, site_out) in out.chunks_mut(per_site).enumerate() {
                    let site = chunk * CHUNK + j;
                    ansatz.eval_plan(&self.plan, layout.site(site), &mut scratch, site_out);
                }
            });
        s
    }

    fn overlap(&self, basis: &Samples, raw: &Samples) -> f64 {
        let mut acc = 0.0;
        for &(q, w) in self.problem.layout().quadrature() {
            for c in 0..raw.components() {
                acc += w * basis.get(q, c, 0) * raw.get(q, c, 0);
            }
        }
        acc
    }

    fn deflate(&self, mut raw: Samples) -> (Samples, Vec<f64>) {
        let overlaps: Vec<f64> = self.basis.iter().map(|b| self.overlap(b, &raw)).collect();
        for (b, &c) in self.basis.iter().zip(&overlaps) {
            for (t, v) in raw.as_mut_slice().iter_mut().zip(b.as_slice()) {
                *t -= c * v;
            }
        }
        (raw, overlaps)
    }

    pub fn evaluate(&self, ansatz: &Ansatz) -> Result<Evaluation> {
        let (samples, overlaps) = self.deflate(self.sample(ansatz));
        let norm = self.problem.norm(&samples);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Degenerate(format!(
                "deflated state has quadrature norm {norm}"
            )));
        }
        let eps = self.problem.energy(&samples)?;
        if !eps.is_finite() {
            return Err(Error::Degenerate(format!("energy functional is {eps}")));
        }
        let mut residuals = vec![0.0; self.problem.residual_count()];
        self.problem.residuals(&samples, eps, &mut residuals);
        let neq = self.problem.residual_count() / self.problem.layout().collocation().len();
        if let Some(i) = residuals.iter().position(|r| !r.is_finite()) {
            let site = self.problem.layout().collocation()[i / neq];
            return Err(Error::NonFinite {
                node: self.problem.layout().site(site).to_vec(),
                value: residuals[i],
            });
        }
        let error = residuals.iter().map(|r| r * r).sum::<f64>() / norm;
        Ok(Evaluation {
            samples,
            overlaps,
            norm,
            eps,
            residuals,
            error,
        })
    }

    pub fn value(&self, ansatz: &Ansatz, objective: Objective) -> Result<f64> {
        Ok(self.objective_value(&self.evaluate(ansatz)?, objective))
    }

    /// Objective of an evaluation, including the scale penalty.
    pub fn objective_value(&self, e: &Evaluation, objective: Objective) -> f64 {
        match objective {
            Objective::Collocation => e.error * (1.0 + self.scale_penalty * e.norm.ln().powi(2)),
            Objective::Variational => e.eps,
        }
    }

    /// Objective value, exact gradient over the optimization vector, and the
    /// evaluation it was computed from.
    pub fn value_and_gradient(
        &self,
        ansatz: &Ansatz,
        objective: Objective,
    ) -> Result<(f64, Vec<f64>, Evaluation)> {
        let e = self.evaluate(ansatz)?;
        let s = &e.samples;
        let mut bar = Samples::zeros(s.sites(), s.components(), s.slots());
        match objective {
            Objective::Collocation => {
                let ln = e.norm.ln();
                let factor = 1.0 + self.scale_penalty * ln * ln;
                let r_bar: Vec<f64> = e
                    .residuals
                    .iter()
                    .map(|r| 2.0 * factor * r / e.norm)
                    .collect();
                let eps_bar = self.problem.residual_vjp(s, e.eps, &r_bar, &mut bar);
                self.problem.energy_vjp(s, eps_bar, &mut bar);
                let norm_bar = e.error * (2.0 * self.scale_penalty * ln - factor) / e.norm;
                for &(q, w) in self.problem.layout().quadrature() {
                    for c in 0..s.components() {
                        *bar.get_mut(q, c, 0) += norm_bar * 2.0 * w * s.get(q, c, 0);
                    }
                }
            }
            Objective::Variational => self.problem.energy_vjp(s, 1.0, &mut bar),
        }
        let value = self.objective_value(&e, objective);
        // adjoint of the projection onto the complement of the basis
        for b in &self.basis {
            let t: f64 = bar
                .as_slice()
                .iter()
                .zip(b.as_slice())
                .map(|(x, y)| x * y)
                .sum();
            for &(q, w) in self.problem.layout().quadrature() {
                for c in 0..s.components() {
                    *bar.get_mut(q, c, 0) -= t * w * b.get(q, c, 0);
                }
            }
        }
        let grad = self.pullback(ansatz, &bar);
        Ok((value, grad, e))
    }

    fn pullback(&self, ansatz: &Ansatz, bar: &Samples) -> Vec<f64> {
        let layout = self.problem.layout();
        let n = ansatz.n_params();
        let n_chunks = layout.n_sites().div_ceil(CHUNK);
        let partial = |chunk: usize| {
            let mut g = vec![0.0; n];
            let mut scratch = self.plan.scratch();
            let end = ((chunk + 1) * CHUNK).min(layout.n_sites());
            for site in chunk * CHUNK..end {
                let b = bar.site(site);
                if b.iter().any(|&v| v != 0.0) {
                    ansatz.accumulate_plan_gradient(
                        &self.plan,
                        layout.site(site),
                        b,
                        &mut scratch,
                        &mut g,
                    );
                }
            }
            g
        };
        let add = |mut a: Vec<f64>, b: Vec<f64>| {
            a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            a
        };
        if self.deterministic {
            let parts: Vec<Vec<f64>> = (0..n_chunks).into_par_iter().map(partial).collect();
            parts.into_iter().fold(vec![0.0; n], add)
        } else {
            (0..n_chunks)
                .into_par_iter()
                .map(partial)
                .reduce(|| vec![0.0; n], add)
        }
    }

    /// Central finite-difference gradient of the objective.
    pub fn finite_difference_gradient(
        &self,
        ansatz: &Ansatz,
        objective: Objective,
    ) -> Result<Vec<f64>> {
        let p0 = ansatz.params();
        let mut probe = ansatz.clone();
        let mut grad = Vec::with_capacity(p0.len());
        for k in 0..p0.len() {
            let h = 1e-6 * p0[k].abs().max(1.0);
            let mut p = p0.clone();
            p[k] = p0[k] + h;
            probe.set_params(&p)?;
            let up = self.value(&probe, objective)?;
            p[k] = p0[k] - h;
            probe.set_params(&p)?;
            let dn = self.value(&probe, objective)?;
            grad.push((up - dn) / (2.0 * h));
        }
        Ok(grad)
    }
}

/// Rayleigh quotient of an arbitrary state through the problem's energy
/// functional (slow path: every derivative is evaluated independently).
pub fn rayleigh_quotient(state: &dyn State, problem: &dyn Problem) -> Result<f64> {
    let s = Samples::from_state(state, problem.layout(), problem.slots())?;
    if !(problem.norm(&s) > 0.0) {
        return Err(Error::Degenerate("state has zero quadrature norm".into()));
    }
    problem.energy(&s)
}

/// Normalized collocation error of `ansatz` deflated against `basis`.
pub fn collocation_error(
    ansatz: &Ansatz,
    problem: &dyn Problem,
    basis: &DeflationBasis,
) -> Result<f64> {
    Ok(Engine::new(problem, basis, true)?.evaluate(ansatz)?.error)
}

/// Gradient of [`collocation_error`] over the full optimization vector.
pub fn error_gradient(
    ansatz: &Ansatz,
    problem: &dyn Problem,
    basis: &DeflationBasis,
    mode: GradientMode,
) -> Result<Vec<f64>> {
    let engine = Engine::new(problem, basis, true)?;
    match mode {
        GradientMode::Analytic => Ok(engine.value_and_gradient(ansatz, Objective::Collocation)?.1),
        GradientMode::FiniteDifference => {
            engine.finite_difference_gradient(ansatz, Objective::Collocation)
        }
    }
}

/// One row of an iteration log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub restart: usize,
    pub phase: Objective,
    pub iteration: usize,
    pub objective: f64,
    pub eps: f64,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartSummary {
    pub restart: usize,
    pub seed: u64,
    pub initial_error: f64,
    pub error: f64,
    pub eps: f64,
    pub iterations: usize,
    pub reason: StopReason,
}

#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub eigenvalue: f64,
    /// Normalized collocation error at the returned parameters.
    pub error: f64,
    /// Raw trial state; the solution is `(ψ̃ − Σ overlaps·ψ_a) / normalization`.
    pub ansatz: Ansatz,
    pub overlaps: Vec<f64>,
    /// `sqrt(∫|ψ|²)` of the deflated state.
    pub normalization: f64,
    /// `R_i² / ∫|ψ|²` per collocation point (all equations summed).
    pub residual_map: Vec<f64>,
    /// Normalized state at the collocation points, `[point][component]`.
    pub wavefunction: Vec<f64>,
    pub objective: Objective,
    pub iterations: usize,
    pub evaluations: usize,
    pub wall_time: Duration,
    pub converged: bool,
    pub reason: StopReason,
    pub seed: u64,
    pub restart: usize,
    pub log: Vec<LogRow>,
    pub restarts: Vec<RestartSummary>,
}

impl EigenSolution {
    /// Appends this solution to `basis`.
    pub fn push_into(&self, basis: &mut DeflationBasis) -> Result<()> {
        basis.push(
            self.ansatz.clone(),
            &self.overlaps,
            self.normalization,
            self.eigenvalue,
        )
    }
}

fn restart_seed(seed: u64, level: usize, restart: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((level as u64) << 32)
        .wrapping_add(restart as u64)
}

/// Seeded random trial state for `problem`.
pub fn initial_ansatz(problem: &dyn Problem, config: &SolveConfig, seed: u64) -> Result<Ansatz> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let envelope = Envelope::new(problem.envelope_kind(), config.initial_shape)?;
    let mut nets = Vec::new();
    for c in 0..problem.components() {
        let net = Mlp::random(problem.dim(), config.hidden_units, &mut rng)?;
        let scale = problem.initial_output_scale(c);
        let v: Vec<f64> = net.output_weights().iter().map(|v| v * scale).collect();
        nets.push(Mlp::from_parts(
            problem.dim(),
            net.input_weights().to_vec(),
            net.hidden_biases().to_vec(),
            v,
        )?);
    }
    Ansatz::new(envelope, nets, config.optimize_shape, config.shape_param)
}

struct RunOutcome {
    ansatz: Ansatz,
    result: OptimResult,
    initial_error: f64,
    log: Vec<LogRow>,
}

fn minimize_phase(
    engine: &Engine,
    config: &SolveConfig,
    objective: Objective,
    ansatz: &mut Ansatz,
    max_iterations: usize,
    restart: usize,
    log: &mut Vec<LogRow>,
) -> Result<OptimResult> {
    let registry = OptimizerRegistry::standard();
    let optimizer = registry.get(&config.optimizer)?;
    let template = ansatz.clone();
    let mut probe = template.clone();
    let mut f = |theta: &[f64]| -> optim::Evaluation {
        probe.set_params(theta).ok()?;
        match config.gradient_mode {
            GradientMode::Analytic => {
                let (v, g, e) = engine.value_and_gradient(&probe, objective).ok()?;
                Some((v, g, e.eps))
            }
            GradientMode::FiniteDifference => {
                let e = engine.evaluate(&probe).ok()?;
                let g = engine.finite_difference_gradient(&probe, objective).ok()?;
                Some((engine.objective_value(&e, objective), g, e.eps))
            }
        }
    };
    let mut options = config.options(max_iterations);
    if objective == Objective::Variational {
        // the energy has no natural zero
        options.value_tolerance = f64::NEG_INFINITY;
    }
    let result = optimizer.minimize(
        &mut f,
        template.params(),
        &options,
        &mut |rec: &IterationRecord| {
            log.push(LogRow {
                restart,
                phase: objective,
                iteration: rec.iteration,
                objective: rec.value,
                eps: rec.aux,
                gradient_norm: rec.gradient_norm,
            })
        },
    )?;
    ansatz.set_params(&result.x)?;
    Ok(result)
}

fn run_once(
    engine: &Engine,
    config: &SolveConfig,
    objective: Objective,
    seed: u64,
    restart: usize,
) -> Result<RunOutcome> {
    let mut ansatz = initial_ansatz(engine.problem, config, seed)?;
    let initial_error = engine.evaluate(&ansatz)?.error;
    let mut log = Vec::new();
    if objective == Objective::Collocation && config.warm_start_iterations > 0 {
        minimize_phase(
            engine,
            config,
            Objective::Variational,
            &mut ansatz,
            config.warm_start_iterations,
            restart,
            &mut log,
        )?;
    }
    let result = minimize_phase(
        engine,
        config,
        objective,
        &mut ansatz,
        config.max_iterations,
        restart,
        &mut log,
    )?;
    Ok(RunOutcome {
        ansatz,
        result,
        initial_error,
        log,
    })
}

fn solve_with(
    problem: &dyn Problem,
    config: &SolveConfig,
    basis: &DeflationBasis,
    objective: Objective,
    level: usize,
) -> Result<EigenSolution> {
    config.validate()?;
    let start = Instant::now();
    let engine =
        Engine::new(problem, basis, config.deterministic)?.with_scale_penalty(config.scale_penalty);
    let mut best: Option<(RunOutcome, Evaluation, u64, usize)> = None;
    let mut summaries = Vec::new();
    let mut all_logs = Vec::new();
    let mut last_err = None;
    for restart in 0..config.restarts {
        let seed = restart_seed(config.seed, level, restart);
        let run = match run_once(&engine, config, objective, seed, restart) {
            Ok(r) => r,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let eval = engine.evaluate(&run.ansatz)?;
        summaries.push(RestartSummary {
            restart,
            seed,
            initial_error: run.initial_error,
            error: eval.error,
            eps: eval.eps,
            iterations: run.result.iterations,
            reason: run.result.reason,
        });
        all_logs.extend(run.log.iter().copied());
        let better = match &best {
            None => true,
            Some((b, be, _, _)) => {
                let (conv, bconv) = (run.result.reason.converged(), b.result.reason.converged());
                match objective {
                    Objective::Collocation => {
                        (conv && !bconv) || (conv == bconv && eval.error < be.error)
                    }
                    Objective::Variational => eval.eps < be.eps,
                }
            }
        };
        if better {
            best = Some((run, eval, seed, restart));
        }
    }
    let Some((run, eval, seed, restart)) = best else {
        return Err(
            last_err.unwrap_or_else(|| Error::Degenerate("no restart produced a state".into()))
        );
    };
    let normalization = eval.norm.sqrt();
    let neq = problem.residual_count() / problem.layout().collocation().len();
    let residual_map: Vec<f64> = eval
        .residuals
        .chunks(neq)
        .map(|r| r.iter().map(|v| v * v).sum::<f64>() / eval.norm)
        .collect();
    let mut wavefunction = Vec::new();
    for &i in problem.layout().collocation() {
        for c in 0..problem.components() {
            wavefunction.push(eval.samples.get(i, c, 0) / normalization);
        }
    }
    Ok(EigenSolution {
        eigenvalue: eval.eps,
        error: eval.error,
        ansatz: run.ansatz,
        overlaps: eval.overlaps,
        normalization,
        residual_map,
        wavefunction,
        objective,
        iterations: run.result.iterations,
        evaluations: run.result.evaluations,
        wall_time: start.elapsed(),
        converged: run.result.reason.converged(),
        reason: run.result.reason,
        seed,
        restart,
        log: all_logs,
        restarts: summaries,
    })
}

/// Collocation solve: minimizes the normalized residual over restarts and
/// returns the lowest-error result (converged runs preferred).
pub fn solve(
    problem: &dyn Problem,
    config: &SolveConfig,
    basis: &DeflationBasis,
) -> Result<EigenSolution> {
    solve_with(problem, config, basis, Objective::Collocation, basis.len())
}

/// Minimizes the energy functional directly; keeps the lowest energy.
pub fn solve_variational(
    problem: &dyn Problem,
    config: &SolveConfig,
    basis: &DeflationBasis,
) -> Result<EigenSolution> {
    solve_with(problem, config, basis, Objective::Variational, basis.len())
}

/// Largest `|⟨ψ_a|ψ⟩|` of the normalized solution against basis states.
pub fn max_basis_overlap(
    problem: &dyn Problem,
    basis: &DeflationBasis,
    solution: &EigenSolution,
) -> Result<f64> {
    if basis.is_empty() {
        return Ok(0.0);
    }
    let engine = Engine::new(problem, basis, true)?;
    let e = engine.evaluate(&solution.ansatz)?;
    let n = e.norm.sqrt();
    Ok(engine
        .basis
        .iter()
        .map(|b| (engine.overlap(b, &e.samples) / n).abs())
        .fold(0.0, f64::max))
}

/// Attempts per level before a level that keeps landing on a known state is
/// accepted anyway.
const LEVEL_ATTEMPTS: usize = 3;

/// `|Δε|` and overlap thresholds that together mark a repeated level.
const REPEAT_EPS: f64 = 1e-4;
const REPEAT_OVERLAP: f64 = 1e-3;

/// Successive deflated solves for the lowest `levels` states.
pub fn solve_levels(
    problem: &dyn Problem,
    config: &SolveConfig,
    levels: usize,
    objective: Objective,
) -> Result<(Vec<EigenSolution>, DeflationBasis)> {
    if levels < 1 {
        return Err(Error::InvalidArgument(
            "level count must be at least 1".into(),
        ));
    }
    let mut basis = DeflationBasis::new();
    let mut out = Vec::new();
    for level in 0..levels {
        let mut attempt_cfg = config.clone();
        let mut sol = None;
        for attempt in 0..LEVEL_ATTEMPTS {
            attempt_cfg.seed = config.seed.wrapping_add(attempt as u64 * 7919);
            let s = solve_with(problem, &attempt_cfg, &basis, objective, level)?;
            let overlap = max_basis_overlap(problem, &basis, &s)?;
            let repeated = basis
                .eigenvalues()
                .iter()
                .any(|&e| (e - s.eigenvalue).abs() < REPEAT_EPS)
                && overlap > REPEAT_OVERLAP;
            let last = attempt + 1 == LEVEL_ATTEMPTS;
            if !repeated || last {
                sol = Some(s);
                break;
            }
        }
        let s = sol.expect("at least one attempt");
        s.push_into(&mut basis)?;
        out.push(s);
    }
    Ok((out, basis))
}
