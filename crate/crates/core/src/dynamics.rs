//! Pollution trajectories, steady states, welfare and admissibility.
//!
//! The state obeys `dP/dt = G(t) P + N(t)` with `G = L - diag(delta)`.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::network::Generator;
use crate::ode::{rk4_step, simpson_weights, uniform_steps};
use crate::policy::{utility, EconomyParams, GrowthBound, NodePolicy, SiteParams};
use crate::table::format_float;
use crate::transition::matrix_exponential;

/// Default trajectory step.
pub const DEFAULT_STEP: f64 = 1e-2;

/// Condition estimate above which a steady-state solve is refused.
pub const MAX_CONDITION: f64 = 1e12;

type VectorFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;
type ControlFn = Arc<dyn Fn(f64) -> (DVector<f64>, DVector<f64>) + Send + Sync>;

/// Per-node emission flow `N(t)`.
#[derive(Clone)]
pub enum EmissionPath {
    Constant(DVector<f64>),
    Function(VectorFn),
}

impl EmissionPath {
    pub fn at(&self, t: f64) -> DVector<f64> {
        match self {
            EmissionPath::Constant(v) => v.clone(),
            EmissionPath::Function(f) => f(t),
        }
    }
}

impl fmt::Debug for EmissionPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmissionPath::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            EmissionPath::Function(_) => f.write_str("Function(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    /// Exact propagation when the generator and emissions are constant, RK4 otherwise.
    #[default]
    Auto,
    RungeKutta,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub emissions: EmissionPath,
    /// Produced by the closed-form propagator rather than RK4.
    pub exact: bool,
    decay_min: f64,
}

impl Trajectory {
    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("nonempty grid")
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("nonempty grid")
    }

    pub fn min_entry(&self) -> f64 {
        self.states.iter().map(|p| p.min()).fold(f64::INFINITY, f64::min)
    }

    /// Long-format CSV `time,node,P`, keeping every `stride`-th grid time.
    pub fn write_csv(&self, mut w: impl Write, stride: usize) -> Result<()> {
        writeln!(w, "time,node,P")?;
        let stride = stride.max(1);
        let last = self.times.len() - 1;
        for (k, (t, p)) in self.times.iter().zip(&self.states).enumerate() {
            if k % stride != 0 && k != last {
                continue;
            }
            for (i, v) in p.iter().enumerate() {
                writeln!(w, "{},{},{}", format_float(*t), i + 1, format_float(*v))?;
            }
        }
        Ok(())
    }
}

fn check_nonnegative(v: &DVector<f64>, what: &str) -> Result<()> {
    for (i, &x) in v.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFinite(format!("{what} at node {}", i + 1)));
        }
        if x < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "{what} must be nonnegative, node {} has {x}",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Integrates the pollution equation on `[0, horizon]`.
pub fn simulate(
    gen: &Generator,
    initial: &DVector<f64>,
    emissions: &EmissionPath,
    horizon: f64,
    step: f64,
) -> Result<Trajectory> {
    simulate_with(gen, initial, emissions, horizon, step, Integrator::Auto)
}

pub fn simulate_with(
    gen: &Generator,
    initial: &DVector<f64>,
    emissions: &EmissionPath,
    horizon: f64,
    step: f64,
    integrator: Integrator,
) -> Result<Trajectory> {
    let n = gen.n();
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {step}")));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be >= 0, got {horizon}")));
    }
    if initial.len() != n {
        return Err(Error::InvalidParameter(format!(
            "initial state has length {}, expected {n}",
            initial.len()
        )));
    }
    check_nonnegative(initial, "initial pollution")?;
    let (m, h) = uniform_steps(0.0, horizon, step);
    let times: Vec<f64> = (0..=m).map(|k| k as f64 * h).collect();
    let decay_min = gen.decay_bounds().0;

    if let (Integrator::Auto, Some(g), EmissionPath::Constant(flow)) =
        (integrator, gen.constant_matrix(), emissions)
    {
        check_len(flow, n)?;
        check_nonnegative(flow, "emission")?;
        let rest = steady_state(gen, flow)?.values;
        let mut states = Vec::with_capacity(m + 1);
        let mut gap = initial - &rest;
        states.push(initial.clone());
        if m > 0 {
            let e = matrix_exponential(g, h)?;
            for _ in 0..m {
                gap = &e * &gap;
                states.push(&rest + &gap);
            }
        }
        return Ok(Trajectory {
            times,
            states,
            emissions: emissions.clone(),
            exact: true,
            decay_min,
        });
    }

    let constant = gen.constant_matrix().cloned();
    let drift_matrix = |t: f64| match &constant {
        Some(g) => g.clone(),
        None => gen.eval(t),
    };
    let mut states = Vec::with_capacity(m + 1);
    let mut p = initial.clone();
    states.push(p.clone());
    for &tk in &times[..m] {
        let flow = emissions.at(tk);
        check_len(&flow, n)?;
        check_nonnegative(&flow, &format!("emission at t = {tk}"))?;
        p = rk4_step(
            |t, y: &DVector<f64>| drift_matrix(t) * y + emissions.at(t),
            tk,
            &p,
            h,
        );
        states.push(p.clone());
    }
    Ok(Trajectory {
        times,
        states,
        emissions: emissions.clone(),
        exact: false,
        decay_min,
    })
}

fn check_len(v: &DVector<f64>, n: usize) -> Result<()> {
    if v.len() == n {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "vector has length {}, expected {n}",
            v.len()
        )))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub values: DVector<f64>,
    /// `|G P + N|` per node.
    pub node_residuals: DVector<f64>,
    /// Max-norm of `G P + N`.
    pub residual: f64,
    pub condition: f64,
}

impl SteadyState {
    /// CSV `node,P_inf,residual`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "node,P_inf,residual")?;
        for (i, (p, r)) in self.values.iter().zip(self.node_residuals.iter()).enumerate() {
            writeln!(w, "{},{},{}", i + 1, format_float(*p), format_float(*r))?;
        }
        Ok(())
    }
}

/// Solves `G P + N = 0` for an autonomous generator.
pub fn steady_state(gen: &Generator, emissions: &DVector<f64>) -> Result<SteadyState> {
    let g = gen.constant_matrix().ok_or_else(|| {
        Error::InvalidParameter("steady state needs an autonomous generator".into())
    })?;
    check_len(emissions, gen.n())?;
    if emissions.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("steady-state emissions".into()));
    }
    let sv = g.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Conditioning { estimate: condition });
    }
    let neg: DMatrix<f64> = -g;
    let values = neg
        .lu()
        .solve(emissions)
        .ok_or_else(|| Error::Singular("generator is not invertible".into()))?;
    let node_residuals = (g * &values + emissions).abs();
    let residual = node_residuals.max();
    Ok(SteadyState {
        values,
        node_residuals,
        residual,
        condition,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// `sum_i |P_i(t_k) - P_inf_i|^2` at each grid time.
    pub squared_errors: Vec<f64>,
    /// Non-increasing from the second grid point on, up to round-off.
    pub monotone: bool,
    /// `10 e^{-2 delta_min T}` times the initial squared error.
    pub bound: f64,
    pub within_bound: bool,
}

impl ConvergenceReport {
    pub fn final_error(&self) -> f64 {
        *self.squared_errors.last().expect("nonempty")
    }

    pub fn initial_error(&self) -> f64 {
        self.squared_errors[0]
    }
}

pub fn convergence_check(traj: &Trajectory, ss: &SteadyState) -> ConvergenceReport {
    let squared_errors: Vec<f64> = traj
        .states
        .iter()
        .map(|p| (p - &ss.values).norm_squared())
        .collect();
    let scale = 1.0 + ss.values.amax();
    let floor = traj.states[0].len() as f64 * (1e-13 * scale).powi(2);
    let monotone = squared_errors
        .windows(2)
        .skip(1)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-12) + floor);
    let bound = 10.0 * (-2.0 * traj.decay_min * traj.horizon()).exp() * squared_errors[0];
    let within_bound = *squared_errors.last().expect("nonempty") <= bound + floor;
    ConvergenceReport {
        squared_errors,
        monotone,
        bound,
        within_bound,
    }
}

/// Brown and green investment paths for every node.
#[derive(Clone)]
pub enum ControlPaths {
    Constant {
        investment: DVector<f64>,
        green: DVector<f64>,
    },
    Function(ControlFn),
}

impl ControlPaths {
    pub fn from_policies(policies: &[NodePolicy]) -> Self {
        ControlPaths::Constant {
            investment: DVector::from_iterator(policies.len(), policies.iter().map(|p| p.investment)),
            green: DVector::from_iterator(
                policies.len(),
                policies.iter().map(|p| p.green_investment),
            ),
        }
    }

    pub fn zero(n: usize) -> Self {
        ControlPaths::Constant {
            investment: DVector::zeros(n),
            green: DVector::zeros(n),
        }
    }

    pub fn at(&self, t: f64) -> (DVector<f64>, DVector<f64>) {
        match self {
            ControlPaths::Constant { investment, green } => (investment.clone(), green.clone()),
            ControlPaths::Function(f) => f(t),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ControlPaths::Constant { .. })
    }

    /// `N = I + eps R` at time `t`.
    pub fn emissions_at(&self, t: f64, sites: &[SiteParams]) -> DVector<f64> {
        let (i, r) = self.at(t);
        DVector::from_iterator(
            sites.len(),
            sites.iter().enumerate().map(|(k, s)| i[k] + s.green_intensity * r[k]),
        )
    }

    pub fn emission_path(&self, sites: &[SiteParams]) -> EmissionPath {
        match self {
            ControlPaths::Constant { .. } => EmissionPath::Constant(self.emissions_at(0.0, sites)),
            ControlPaths::Function(_) => {
                let this = self.clone();
                let sites = sites.to_vec();
                EmissionPath::Function(Arc::new(move |t| this.emissions_at(t, &sites)))
            }
        }
    }
}

impl fmt::Debug for ControlPaths {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlPaths::Constant { investment, green } => f
                .debug_struct("Constant")
                .field("investment", investment)
                .field("green", green)
                .finish(),
            ControlPaths::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// A real number or a signed infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    PosInfinity,
    NegInfinity,
}

impl Extended {
    pub fn as_f64(self) -> f64 {
        match self {
            Extended::Finite(x) => x,
            Extended::PosInfinity => f64::INFINITY,
            Extended::NegInfinity => f64::NEG_INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(x) => Some(x),
            _ => None,
        }
    }
}

impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(x) => s.serialize_f64(*x),
            Extended::PosInfinity => s.serialize_str("inf"),
            Extended::NegInfinity => s.serialize_str("-inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelfareValue {
    pub value: Extended,
    pub horizon: f64,
    /// Bound on the neglected integral over `[horizon, inf)`.
    pub truncation_bound: f64,
}

/// Everything the welfare functional depends on besides the horizon.
#[derive(Clone, Copy)]
pub struct WelfareProblem<'a> {
    pub generator: &'a Generator,
    pub sites: &'a [SiteParams],
    pub economy: &'a EconomyParams,
    pub initial: &'a DVector<f64>,
    pub controls: &'a ControlPaths,
}

impl WelfareProblem<'_> {
    fn validate(&self) -> Result<()> {
        self.economy.validate()?;
        let n = self.generator.n();
        if self.sites.len() != n {
            return Err(Error::InvalidParameter(format!(
                "{} site parameter sets for {n} nodes",
                self.sites.len()
            )));
        }
        check_len(self.initial, n)?;
        check_nonnegative(self.initial, "initial pollution")
    }

    fn awareness_max(&self) -> f64 {
        self.sites.iter().map(|s| s.awareness).fold(0.0, f64::max)
    }

    /// Utility sum and green-cost sum at `t`.
    fn running_terms(&self, t: f64) -> (f64, f64, DVector<f64>) {
        let (inv, green) = self.controls.at(t);
        let gamma = self.economy.gamma;
        let mut u = 0.0;
        let mut cost = 0.0;
        for (k, s) in self.sites.iter().enumerate() {
            let c = (s.brown_productivity - 1.0) * inv[k] + (s.green_productivity - 1.0) * green[k];
            u += utility(c, gamma);
            cost += s.cost.value(green[k]);
        }
        let flow = DVector::from_iterator(
            self.sites.len(),
            self.sites.iter().enumerate().map(|(k, s)| inv[k] + s.green_intensity * green[k]),
        );
        (u, cost, flow)
    }

    /// Growth envelope `(A, B, g)`: `|sum U| + sum f <= A e^{gt}` and `|N|_1 <= B e^{gt}`.
    fn envelope(&self, samples: &[f64]) -> Result<(f64, f64, f64)> {
        let cert = check_admissibility(self.controls, self.sites, self.economy.rho, samples)?;
        let g = cert.g;
        let mut a: f64 = 0.0;
        let mut b: f64 = 0.0;
        for &t in samples {
            let (u, cost, flow) = self.running_terms(t);
            let scale = (-g * t).exp();
            if u.is_finite() {
                a = a.max((u.abs() + cost) * scale);
            }
            b = b.max(flow.lp_norm(1) * scale);
        }
        Ok((a, b, g))
    }

    /// Bound on `int_T^inf` of the discounted running welfare, for either form.
    fn tail_bound(&self, envelope: (f64, f64, f64), horizon: f64) -> f64 {
        let (a, b, g) = envelope;
        let rho = self.economy.rho;
        let dmin = self.generator.decay_bounds().0;
        let omega = self.awareness_max();
        let growing = (a + omega * b / (g + dmin)) * (-(rho - g) * horizon).exp() / (rho - g);
        let initial = omega * self.initial.lp_norm(1) * (-(rho + dmin) * horizon).exp() / (rho + dmin);
        growing + initial
    }
}

/// Shortest horizon whose tail bound is at most `rel_tol` times the bound at `T = 0`.
pub fn truncation_horizon(problem: &WelfareProblem<'_>, rel_tol: f64) -> Result<f64> {
    problem.validate()?;
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidParameter(format!("rel_tol must lie in (0,1), got {rel_tol}")));
    }
    let samples: Vec<f64> = if problem.controls.is_constant() {
        vec![0.0]
    } else {
        (0..=2000).map(|k| k as f64 * 0.5).collect()
    };
    let env = problem.envelope(&samples)?;
    let target = rel_tol * problem.tail_bound(env, 0.0);
    let (mut lo, mut hi) = (0.0, 1.0);
    while problem.tail_bound(env, hi) > target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::InvalidParameter("no finite truncation horizon".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if problem.tail_bound(env, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 * hi {
            break;
        }
    }
    Ok(hi)
}

fn quadrature(
    problem: &WelfareProblem<'_>,
    horizon: f64,
    step: f64,
    mut integrand: impl FnMut(usize, f64, f64, f64, &DVector<f64>) -> f64,
) -> Result<(Extended, Vec<f64>)> {
    let (m, h) = uniform_steps(0.0, horizon, step);
    let times: Vec<f64> = (0..=m).map(|k| k as f64 * h).collect();
    if m == 0 {
        return Ok((Extended::Finite(0.0), times));
    }
    let weights = simpson_weights(m, h);
    let rho = problem.economy.rho;
    let mut total = 0.0;
    for (k, &t) in times.iter().enumerate() {
        let (u, cost, flow) = problem.running_terms(t);
        if u == f64::NEG_INFINITY {
            return Ok((Extended::NegInfinity, times));
        }
        total += weights[k] * (-rho * t).exp() * integrand(k, t, u, cost, &flow);
    }
    if !total.is_finite() {
        return Err(Error::NonFinite("welfare quadrature".into()));
    }
    Ok((Extended::Finite(total), times))
}

/// Welfare from the simulated pollution path:
/// `int_0^T e^{-rho t} [sum U(C) - <omega, P> - sum f(R)] dt`.
pub fn objective_direct(problem: &WelfareProblem<'_>, horizon: f64, step: f64) -> Result<WelfareValue> {
    problem.validate()?;
    let emissions = problem.controls.emission_path(problem.sites);
    let traj = simulate(problem.generator, problem.initial, &emissions, horizon, step)?;
    let omega = DVector::from_iterator(problem.sites.len(), problem.sites.iter().map(|s| s.awareness));
    let (value, times) = quadrature(problem, horizon, step, |k, _, u, cost, _| {
        u - omega.dot(&traj.states[k]) - cost
    })?;
    let envelope = problem.envelope(&times)?;
    Ok(WelfareValue {
        value,
        horizon,
        truncation_bound: problem.tail_bound(envelope, horizon),
    })
}

/// Welfare through the shadow cost:
/// `-<alpha(0), p> + int_0^T e^{-rho t} [sum U(C) - <alpha(t), N> - sum f(R)] dt`.
pub fn objective_reduced(
    problem: &WelfareProblem<'_>,
    alpha_at: impl Fn(f64) -> DVector<f64>,
    horizon: f64,
    step: f64,
) -> Result<WelfareValue> {
    problem.validate()?;
    let (value, times) = quadrature(problem, horizon, step, |_, t, u, cost, flow| {
        u - alpha_at(t).dot(flow) - cost
    })?;
    let value = match value {
        Extended::Finite(x) => Extended::Finite(x - alpha_at(0.0).dot(problem.initial)),
        other => other,
    };
    let envelope = problem.envelope(&times)?;
    Ok(WelfareValue {
        value,
        horizon,
        truncation_bound: problem.tail_bound(envelope, horizon),
    })
}

/// Checks nonnegativity and finiteness of the controls on `samples` and fits a
/// growth certificate `|N(t)|_1, sum f(R(t)) <= c e^{g t}` with `g < rho`.
///
/// The rate is the average logarithmic growth over the second half of the
/// samples, floored at zero.
pub fn check_admissibility(
    controls: &ControlPaths,
    sites: &[SiteParams],
    rho: f64,
    samples: &[f64],
) -> Result<GrowthBound> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("admissibility needs at least one sample".into()));
    }
    if samples.windows(2).any(|w| !(w[1] > w[0])) || samples.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("samples must be finite and increasing".into()));
    }
    let mut flow_norms = Vec::with_capacity(samples.len());
    let mut costs = Vec::with_capacity(samples.len());
    for &t in samples {
        let (inv, green) = controls.at(t);
        if inv.len() != sites.len() || green.len() != sites.len() {
            return Err(Error::InvalidParameter(format!(
                "control vectors at t = {t} do not match {} nodes",
                sites.len()
            )));
        }
        for (label, v) in [("I", &inv), ("R", &green)] {
            if let Some((k, x)) = v.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x >= 0.0)) {
                return Err(Error::Inadmissible {
                    time: t,
                    quantity: format!("{label} at node {}", k + 1),
                    detail: format!("value {x} is negative or not finite"),
                });
            }
        }
        let flow: f64 = sites
            .iter()
            .enumerate()
            .map(|(k, s)| inv[k] + s.green_intensity * green[k])
            .sum();
        let cost: f64 = sites.iter().enumerate().map(|(k, s)| s.cost.value(green[k])).sum();
        if !cost.is_finite() {
            return Err(Error::Inadmissible {
                time: t,
                quantity: "green cost".into(),
                detail: "not finite".into(),
            });
        }
        flow_norms.push(flow);
        costs.push(cost);
    }

    let last = samples.len() - 1;
    let mid = last / 2;
    let rate = |q: &[f64]| -> f64 {
        if last == 0 || q[mid] <= 0.0 || q[last] <= 0.0 {
            return 0.0;
        }
        ((q[last].ln() - q[mid].ln()) / (samples[last] - samples[mid])).max(0.0)
    };
    let (g_flow, g_cost) = (rate(&flow_norms), rate(&costs));
    for (g, quantity) in [(g_flow, "emission norm"), (g_cost, "green cost")] {
        if g >= rho - 1e-12 {
            return Err(Error::Inadmissible {
                time: samples[last],
                quantity: quantity.into(),
                detail: format!("growth rate {g:.6} is not below rho = {rho}"),
            });
        }
    }
    let g = g_flow.max(g_cost);
    let c = samples
        .iter()
        .zip(flow_norms.iter().zip(&costs))
        .map(|(t, (a, b))| a.max(*b) * (-g * t).exp())
        .fold(0.0, f64::max);
    Ok(GrowthBound { c, g })
}
