//! Pointwise optimal investment at one node.
//!
//! Given the shadow cost `alpha` of emissions at a node, the optimal controls
//! maximize
//!
//! ```text
//! F(I, R) = C^(1-gamma) / (1-gamma) - alpha (I + eps R) - f(R),
//! C = (aI - 1) I + (aR - 1) R
//! ```
//!
//! over `I, R >= 0`. Closed forms cover strictly convex green costs, linear
//! green costs and the brown-only economy (`aR = 1`). [`brute_force_maximize`]
//! is an independent grid-plus-pattern-search oracle for all of them.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute width under which a regime condition is treated as an equality.
pub const KNIFE_EDGE: f64 = 1e-12;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied convex green-investment cost with its first two derivatives.
#[derive(Clone)]
pub struct CustomCost {
    pub name: String,
    value: ScalarFn,
    slope: ScalarFn,
    curvature: ScalarFn,
    /// Lower bound on `f''` the cost promises.
    pub curvature_floor: f64,
}

impl CustomCost {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        slope: impl Fn(f64) -> f64 + Send + Sync + 'static,
        curvature: impl Fn(f64) -> f64 + Send + Sync + 'static,
        curvature_floor: f64,
    ) -> Self {
        Self {
            name: name.into(),
            value: Arc::new(value),
            slope: Arc::new(slope),
            curvature: Arc::new(curvature),
            curvature_floor,
        }
    }

    /// `f(R) = lambda (e^R - 1 - R)`, with `f'' >= lambda`.
    pub fn exponential(lambda: f64) -> Self {
        Self::new(
            "exponential",
            move |r| lambda * (r.exp_m1() - r),
            move |r| lambda * r.exp_m1(),
            move |r| lambda * r.exp(),
            lambda,
        )
    }
}

impl fmt::Debug for CustomCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomCost")
            .field("name", &self.name)
            .field("curvature_floor", &self.curvature_floor)
            .finish_non_exhaustive()
    }
}

/// Running cost `f(R)` of green investment.
#[derive(Debug, Clone)]
pub enum CostSpec {
    None,
    Linear { lambda: f64 },
    Quadratic { lambda: f64 },
    Custom(CustomCost),
}

impl CostSpec {
    pub fn value(&self, r: f64) -> f64 {
        match self {
            CostSpec::None => 0.0,
            CostSpec::Linear { lambda } => lambda * r,
            CostSpec::Quadratic { lambda } => lambda * r * r,
            CostSpec::Custom(c) => (c.value)(r),
        }
    }

    /// `f'(r)`.
    pub fn slope(&self, r: f64) -> f64 {
        match self {
            CostSpec::None => 0.0,
            CostSpec::Linear { lambda } => *lambda,
            CostSpec::Quadratic { lambda } => 2.0 * lambda * r,
            CostSpec::Custom(c) => (c.slope)(r),
        }
    }

    /// `f''(r)`.
    pub fn curvature(&self, r: f64) -> f64 {
        match self {
            CostSpec::None | CostSpec::Linear { .. } => 0.0,
            CostSpec::Quadratic { lambda } => 2.0 * lambda,
            CostSpec::Custom(c) => (c.curvature)(r),
        }
    }

    pub fn is_strictly_convex(&self) -> bool {
        matches!(self, CostSpec::Quadratic { .. } | CostSpec::Custom(_))
    }

    /// `(f')^{-1}(y)`, clamped to `0` when `y <= f'(0)`.
    pub fn slope_inverse(&self, y: f64) -> Result<f64> {
        match self {
            CostSpec::Quadratic { lambda } => Ok((y / (2.0 * lambda)).max(0.0)),
            CostSpec::Custom(_) => {
                if y <= self.slope(0.0) {
                    return Ok(0.0);
                }
                let g = |x: f64| self.slope(x) - y;
                let mut hi = 1.0;
                let mut doublings = 0;
                while g(hi) < 0.0 {
                    hi *= 2.0;
                    doublings += 1;
                    if doublings > 200 {
                        return Err(Error::InvalidCost(format!(
                            "f' never reaches {y}; cost slope is bounded"
                        )));
                    }
                }
                Ok(bisect_decreasing(|x| -g(x), 0.0, hi))
            }
            CostSpec::None | CostSpec::Linear { .. } => Err(Error::InvalidCost(
                "f' is constant and has no inverse".into(),
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CostSpec::None => Ok(()),
            CostSpec::Linear { lambda } | CostSpec::Quadratic { lambda } => {
                if lambda.is_finite() && *lambda > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidCost(format!("lambda must be > 0, got {lambda}")))
                }
            }
            CostSpec::Custom(c) => {
                if !(c.curvature_floor > 0.0) {
                    return Err(Error::InvalidCost(format!(
                        "custom cost '{}' needs a positive curvature floor",
                        c.name
                    )));
                }
                let f0 = (c.value)(0.0);
                if f0.abs() > 1e-12 {
                    return Err(Error::InvalidCost(format!(
                        "custom cost '{}' has f(0) = {f0}",
                        c.name
                    )));
                }
                let mut prev_slope = f64::NEG_INFINITY;
                for k in 0..=100 {
                    let r = 0.1 * k as f64;
                    let s = (c.slope)(r);
                    let k2 = (c.curvature)(r);
                    if !(s >= 0.0) || s < prev_slope || !(k2 >= c.curvature_floor * (1.0 - 1e-12)) {
                        return Err(Error::InvalidCost(format!(
                            "custom cost '{}' is not convex with f' >= 0 at R = {r}",
                            c.name
                        )));
                    }
                    prev_slope = s;
                }
                Ok(())
            }
        }
    }
}

/// Economic and environmental coefficients of one node.
#[derive(Debug, Clone)]
pub struct SiteParams {
    pub decay: f64,
    /// `aI`, productivity of brown investment.
    pub brown_productivity: f64,
    /// `aR`, productivity of green investment; `1` means no green option.
    pub green_productivity: f64,
    /// `eps`, pollution per unit of green investment.
    pub green_intensity: f64,
    /// `omega`, environmental awareness.
    pub awareness: f64,
    pub cost: CostSpec,
}

impl SiteParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.decay > 0.0 && self.decay.is_finite()) {
            return Err(Error::assumption(
                "1(ii)",
                format!("decay rate delta must be strictly positive, got {}", self.decay),
            ));
        }
        if !(self.green_intensity >= 0.0 && self.green_intensity < 1.0) {
            return Err(Error::assumption(
                "1(ii)",
                format!("green intensity eps must lie in [0, 1), got {}", self.green_intensity),
            ));
        }
        if !(self.green_productivity >= 1.0 && self.green_productivity.is_finite()) {
            return Err(Error::assumption(
                "1(ii)",
                format!("green productivity aR must be >= 1, got {}", self.green_productivity),
            ));
        }
        if !(self.brown_productivity > 1.0 && self.brown_productivity.is_finite()) {
            return Err(Error::assumption(
                "2(i)",
                format!("brown productivity aI must be > 1, got {}", self.brown_productivity),
            ));
        }
        if !(self.awareness > 0.0 && self.awareness.is_finite()) {
            return Err(Error::assumption(
                "1(iii)",
                format!("awareness omega must be > 0, got {}", self.awareness),
            ));
        }
        self.cost.validate()
    }

    fn brown_margin(&self) -> f64 {
        self.brown_productivity - 1.0
    }

    fn green_margin(&self) -> f64 {
        self.green_productivity - 1.0
    }

    /// `(aR - 1) / (aI - 1)`.
    pub fn productivity_ratio(&self) -> f64 {
        self.green_margin() / self.brown_margin()
    }
}

/// Growth certificate `C e^{g t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthBound {
    pub c: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EconomyParams {
    pub rho: f64,
    pub gamma: f64,
    pub growth: Option<GrowthBound>,
}

impl EconomyParams {
    pub fn new(rho: f64, gamma: f64) -> Result<Self> {
        let e = Self {
            rho,
            gamma,
            growth: None,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::assumption("1(iii)", format!("rho must be > 0, got {}", self.rho)));
        }
        if self.gamma == 1.0 {
            return Err(Error::UnsupportedGamma);
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::assumption(
                "1(iii)",
                format!("gamma must lie in (0,1) or (1,inf), got {}", self.gamma),
            ));
        }
        if let Some(b) = self.growth {
            if !(self.rho > b.g) {
                return Err(Error::assumption(
                    "2(iii)",
                    format!("rho = {} must exceed the growth rate g = {}", self.rho, b.g),
                ));
            }
        }
        Ok(())
    }
}

/// Which branch of the first-order analysis produced a policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Inner,
    GreenOnly,
    BrownOnly,
    BrownOnlyModel,
    LinearIndifference,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Inner => "inner",
            Regime::GreenOnly => "green-only",
            Regime::BrownOnly => "brown-only",
            Regime::BrownOnlyModel => "brown-only-model",
            Regime::LinearIndifference => "linear-indifference",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Lagrange multipliers of the sign constraints, reported for diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Multipliers {
    pub brown: f64,
    pub green: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodePolicy {
    /// `I`, brown investment.
    pub investment: f64,
    /// `R`, green investment.
    pub green_investment: f64,
    pub consumption: f64,
    /// `N = I + eps R`.
    pub emission: f64,
    pub regime: Regime,
    /// Objective value at the returned point.
    pub objective: f64,
    /// A regime condition held with equality (within [`KNIFE_EDGE`]).
    pub knife_edge: bool,
    /// Endpoints `(I, R)` of the optimal segment in the linear indifference case.
    pub segment: Option<[(f64, f64); 2]>,
    pub multipliers: Multipliers,
}

impl NodePolicy {
    fn assemble(
        p: &SiteParams,
        e: &EconomyParams,
        alpha: f64,
        investment: f64,
        green_investment: f64,
        regime: Regime,
    ) -> Self {
        let consumption = p.brown_margin() * investment + p.green_margin() * green_investment;
        Self {
            investment,
            green_investment,
            consumption,
            emission: investment + p.green_intensity * green_investment,
            regime,
            objective: objective_value(p, e.gamma, alpha, investment, green_investment),
            knife_edge: false,
            segment: None,
            multipliers: Multipliers::default(),
        }
    }

    /// `Y = aI I + aR R`.
    pub fn production(&self, p: &SiteParams) -> f64 {
        p.brown_productivity * self.investment + p.green_productivity * self.green_investment
    }
}

/// CRRA utility `c^(1-gamma) / (1-gamma)`; `-inf` at `c = 0` when `gamma > 1`.
pub fn utility(c: f64, gamma: f64) -> f64 {
    if c <= 0.0 {
        return if gamma > 1.0 { f64::NEG_INFINITY } else { 0.0 };
    }
    c.powf(1.0 - gamma) / (1.0 - gamma)
}

fn objective_value(p: &SiteParams, gamma: f64, alpha: f64, i: f64, r: f64) -> f64 {
    let c = p.brown_margin() * i + p.green_margin() * r;
    utility(c, gamma) - alpha * (i + p.green_intensity * r) - p.cost.value(r)
}

/// Objective `F(I, R)` at one node.
pub fn evaluate_f(p: &SiteParams, e: &EconomyParams, alpha: f64, i: f64, r: f64) -> Result<f64> {
    if e.gamma == 1.0 {
        return Err(Error::UnsupportedGamma);
    }
    if !(i >= 0.0 && r >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "controls must be nonnegative, got I={i}, R={r}"
        )));
    }
    Ok(objective_value(p, e.gamma, alpha, i, r))
}

/// Partial derivatives `(dF/dI, dF/dR)` at an interior point.
pub fn objective_gradient(p: &SiteParams, e: &EconomyParams, alpha: f64, i: f64, r: f64) -> (f64, f64) {
    let c = p.brown_margin() * i + p.green_margin() * r;
    let marginal = c.powf(-e.gamma);
    (
        marginal * p.brown_margin() - alpha,
        marginal * p.green_margin() - p.green_intensity * alpha - p.cost.slope(r),
    )
}

/// Consumption level `((aI - 1) / alpha)^(1/gamma)` that equates the marginal
/// utility of brown investment with its pollution cost.
pub fn target_consumption(p: &SiteParams, e: &EconomyParams, alpha: f64) -> f64 {
    (p.brown_margin() / alpha).powf(1.0 / e.gamma)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")))
    }
}

/// Outcome of the regime tests for a strictly convex cost, after tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeConditions {
    /// Green intensity low enough for green investment to pay off.
    pub green_viable: bool,
    /// Marginal cost grows fast enough to keep brown investment positive.
    pub brown_positive: bool,
    pub knife_edge: bool,
}

impl RegimeConditions {
    pub fn regime(&self) -> Regime {
        match (self.green_viable, self.brown_positive) {
            (true, true) => Regime::Inner,
            (true, false) => Regime::GreenOnly,
            (false, _) => Regime::BrownOnly,
        }
    }
}

/// Evaluates the case split for a strictly convex cost.
///
/// Equality in the green-viability test goes to the green-viable branch and
/// equality in the brown-positivity test goes to the inner regime, which keeps
/// the policy continuous in the parameters.
pub fn regime_conditions(p: &SiteParams, e: &EconomyParams, alpha: f64) -> RegimeConditions {
    let ratio = p.productivity_ratio();
    let eps = p.green_intensity;
    let green_margin = ratio - p.cost.slope(0.0) / alpha - eps;
    let mut knife_edge = green_margin.abs() < KNIFE_EDGE;
    let green_viable = green_margin >= 0.0 || knife_edge;
    if !green_viable {
        return RegimeConditions {
            green_viable,
            brown_positive: true,
            knife_edge,
        };
    }
    let c_star = target_consumption(p, e, alpha);
    let lhs = p.cost.slope(c_star / p.green_margin());
    let rhs = alpha * (ratio - eps);
    let brown_margin = lhs - rhs;
    let tie = brown_margin.abs() < KNIFE_EDGE;
    knife_edge |= tie;
    RegimeConditions {
        green_viable,
        brown_positive: brown_margin >= 0.0 || tie,
        knife_edge,
    }
}

/// `((aR - 1) x)^(-gamma) (aR - 1) - eps alpha - f'(x)`; its unique root is
/// the green-only investment.
pub fn green_only_equation(p: &SiteParams, e: &EconomyParams, alpha: f64, x: f64) -> f64 {
    let m = p.green_margin();
    (m * x).powf(-e.gamma) * m - p.green_intensity * alpha - p.cost.slope(x)
}

/// Bracket used for the green-only root: `[1e-12, hi]` with `hi` doubled from 1
/// until the equation turns negative.
pub fn green_only_bracket(p: &SiteParams, e: &EconomyParams, alpha: f64) -> Result<(f64, f64)> {
    let lo = 1e-12;
    let mut hi = 1.0;
    let mut doublings = 0;
    while green_only_equation(p, e, alpha, hi) >= 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 1100 {
            return Err(Error::InvalidParameter(
                "green-only equation has no sign change".into(),
            ));
        }
    }
    Ok((lo, hi))
}

/// Root of a decreasing function on `[lo, hi]` by bisection to width `1e-12`.
fn bisect_decreasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    if f(lo) <= 0.0 {
        return lo;
    }
    for _ in 0..400 {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn check_two_source(p: &SiteParams, e: &EconomyParams, alpha: f64) -> Result<()> {
    check_alpha(alpha)?;
    e.validate()?;
    p.validate()?;
    if p.green_productivity <= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "two-source solver needs aR > 1, got {}",
            p.green_productivity
        )));
    }
    Ok(())
}

/// Closed-form optimum for a strictly convex green cost.
pub fn solve_strictly_convex(p: &SiteParams, e: &EconomyParams, alpha: f64) -> Result<NodePolicy> {
    check_two_source(p, e, alpha)?;
    if !p.cost.is_strictly_convex() {
        return Err(Error::InvalidCost(
            "strictly convex solver needs a quadratic or custom convex cost".into(),
        ));
    }
    let cond = regime_conditions(p, e, alpha);
    let ratio = p.productivity_ratio();
    let eps = p.green_intensity;
    let mut policy = match cond.regime() {
        Regime::Inner => {
            let c_star = target_consumption(p, e, alpha);
            let r = p.cost.slope_inverse(alpha * (ratio - eps))?;
            let i = ((c_star - p.green_margin() * r) / p.brown_margin()).max(0.0);
            NodePolicy::assemble(p, e, alpha, i, r, Regime::Inner)
        }
        Regime::GreenOnly => {
            let (lo, hi) = green_only_bracket(p, e, alpha)?;
            let r = bisect_decreasing(|x| green_only_equation(p, e, alpha, x), lo, hi);
            let mut pol = NodePolicy::assemble(p, e, alpha, 0.0, r, Regime::GreenOnly);
            pol.multipliers.brown =
                alpha - pol.consumption.powf(-e.gamma) * p.brown_margin();
            pol
        }
        _ => {
            let c_star = target_consumption(p, e, alpha);
            let mut pol = NodePolicy::assemble(
                p,
                e,
                alpha,
                c_star / p.brown_margin(),
                0.0,
                Regime::BrownOnly,
            );
            pol.multipliers.green = alpha * (eps - ratio) + p.cost.slope(0.0);
            pol
        }
    };
    policy.knife_edge = cond.knife_edge;
    Ok(policy)
}

/// Closed-form optimum for `f(R) = lambda R`.
pub fn solve_linear(p: &SiteParams, e: &EconomyParams, alpha: f64) -> Result<NodePolicy> {
    let lambda = match p.cost {
        CostSpec::Linear { lambda } => lambda,
        _ => return Err(Error::InvalidCost("linear solver needs a linear cost".into())),
    };
    check_two_source(p, e, alpha)?;
    let gamma = e.gamma;
    let eps = p.green_intensity;
    let margin = p.productivity_ratio() - lambda / alpha - eps;
    if margin.abs() <= KNIFE_EDGE {
        let c_star = target_consumption(p, e, alpha);
        let brown_end = (c_star / p.brown_margin(), 0.0);
        let green_end = (0.0, c_star / p.green_margin());
        let mut pol = NodePolicy::assemble(
            p,
            e,
            alpha,
            brown_end.0,
            0.0,
            Regime::LinearIndifference,
        );
        pol.knife_edge = true;
        pol.segment = Some([brown_end, green_end]);
        Ok(pol)
    } else if margin > 0.0 {
        let r = p.green_margin().powf((1.0 - gamma) / gamma) * (lambda + eps * alpha).powf(-1.0 / gamma);
        let mut pol = NodePolicy::assemble(p, e, alpha, 0.0, r, Regime::GreenOnly);
        pol.multipliers.brown = alpha - pol.consumption.powf(-gamma) * p.brown_margin();
        Ok(pol)
    } else {
        let i = p.brown_margin().powf((1.0 - gamma) / gamma) * alpha.powf(-1.0 / gamma);
        let mut pol = NodePolicy::assemble(p, e, alpha, i, 0.0, Regime::BrownOnly);
        pol.multipliers.green = -alpha * margin;
        Ok(pol)
    }
}

/// Optimum when only brown investment is productive (`aR = 1`).
pub fn solve_brown_only(p: &SiteParams, e: &EconomyParams, alpha: f64) -> Result<NodePolicy> {
    check_alpha(alpha)?;
    e.validate()?;
    if !(p.brown_productivity > 1.0) {
        return Err(Error::assumption(
            "2(i)",
            format!("brown productivity aI must be > 1, got {}", p.brown_productivity),
        ));
    }
    if p.green_productivity != 1.0 {
        return Err(Error::InvalidParameter(format!(
            "brown-only model needs aR = 1, got {}",
            p.green_productivity
        )));
    }
    let gamma = e.gamma;
    let i = alpha.powf(-1.0 / gamma) * p.brown_margin().powf((1.0 - gamma) / gamma);
    Ok(NodePolicy::assemble(p, e, alpha, i, 0.0, Regime::BrownOnlyModel))
}

/// Routes to the closed form matching the node's productivity and cost.
pub fn solve_node(p: &SiteParams, e: &EconomyParams, alpha: f64) -> Result<NodePolicy> {
    if p.green_productivity == 1.0 {
        return solve_brown_only(p, e, alpha);
    }
    match p.cost {
        CostSpec::Linear { .. } => solve_linear(p, e, alpha),
        CostSpec::Quadratic { .. } | CostSpec::Custom(_) => solve_strictly_convex(p, e, alpha),
        CostSpec::None => Err(Error::InvalidCost(
            "cost 'none' is only valid in the brown-only model (aR = 1)".into(),
        )),
    }
}

/// Resolution of the brute-force oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleGrid {
    /// Grid points per axis in the coarse scan.
    pub points: usize,
    /// Pattern-search stops once its step is below this, in control units.
    pub tolerance: f64,
    /// How many times the box may be doubled when the optimum sits on its far edge.
    pub max_expansions: usize,
}

impl Default for OracleGrid {
    fn default() -> Self {
        Self {
            points: 400,
            tolerance: 1e-9,
            max_expansions: 12,
        }
    }
}

/// Grid scan over `[0, I_max] x [0, R_max]` followed by projected pattern search.
///
/// The box starts at ten times the brown-only investment (and the matching
/// green level) and is doubled while the optimum lies on its outer edge.
pub fn brute_force_maximize(
    p: &SiteParams,
    e: &EconomyParams,
    alpha: f64,
    grid: OracleGrid,
) -> Result<NodePolicy> {
    check_alpha(alpha)?;
    e.validate()?;
    let gamma = e.gamma;
    let f = |i: f64, r: f64| objective_value(p, gamma, alpha, i, r);

    let c_star = target_consumption(p, e, alpha);
    let mut i_max = 10.0 * c_star / p.brown_margin();
    let mut r_max = if p.green_margin() > 0.0 {
        10.0 * c_star / p.green_margin()
    } else {
        i_max
    };
    let points = grid.points.max(3);

    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    for _ in 0..=grid.max_expansions {
        let di = i_max / (points - 1) as f64;
        let dr = r_max / (points - 1) as f64;
        best = (0.0, 0.0, f64::NEG_INFINITY);
        for a in 0..points {
            for b in 0..points {
                let (i, r) = (a as f64 * di, b as f64 * dr);
                let v = f(i, r);
                if v > best.2 {
                    best = (i, r, v);
                }
            }
        }
        best = pattern_search(&f, best, di, dr, p, grid.tolerance);
        let on_edge = best.0 > i_max - 2.0 * di || best.1 > r_max - 2.0 * dr;
        if !on_edge {
            break;
        }
        i_max *= 2.0;
        r_max *= 2.0;
    }

    let (i, r, _) = best;
    let resolution = 1e-6;
    let regime = if p.green_margin() == 0.0 {
        Regime::BrownOnlyModel
    } else if i <= resolution {
        Regime::GreenOnly
    } else if r <= resolution {
        Regime::BrownOnly
    } else {
        Regime::Inner
    };
    Ok(NodePolicy::assemble(p, e, alpha, i, r, regime))
}

fn pattern_search(
    f: &impl Fn(f64, f64) -> f64,
    start: (f64, f64, f64),
    di: f64,
    dr: f64,
    p: &SiteParams,
    tolerance: f64,
) -> (f64, f64, f64) {
    let (mut i, mut r, mut v) = start;
    let base = di.min(dr);
    // iso-consumption and steepest-consumption directions
    let (bm, gm) = (p.brown_margin(), p.green_margin());
    let scale = base / bm.max(gm).max(f64::MIN_POSITIVE);
    let dirs = [
        (di, 0.0),
        (0.0, dr),
        (di, dr),
        (di, -dr),
        (gm * scale, -bm * scale),
        (bm * scale, gm * scale),
    ];
    let mut h = 1.0;
    let mut iterations = 0;
    while h * di.max(dr) > tolerance && iterations < 200_000 {
        iterations += 1;
        let mut improved = false;
        for &(a, b) in &dirs {
            for sign in [1.0, -1.0] {
                let ni = (i + sign * h * a).max(0.0);
                let nr = (r + sign * h * b).max(0.0);
                let nv = f(ni, nr);
                if nv > v {
                    i = ni;
                    r = nr;
                    v = nv;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    (i, r, v)
}

/// Emission levels with and without the green option at the same shadow cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionComparison {
    pub two_source: f64,
    pub brown_only: f64,
    /// `brown_only - R (ratio - eps)`, which must equal `two_source`.
    pub identity_value: f64,
}

/// Compares optimal emissions with both technologies against the brown-only economy.
pub fn emission_comparison(p: &SiteParams, e: &EconomyParams, alpha: f64) -> Result<EmissionComparison> {
    check_two_source(p, e, alpha)?;
    if !p.cost.is_strictly_convex() {
        return Err(Error::ComparisonNotApplicable(
            "comparison needs a strictly convex green cost".into(),
        ));
    }
    let cond = regime_conditions(p, e, alpha);
    if cond.regime() != Regime::Inner {
        return Err(Error::ComparisonNotApplicable(format!(
            "node is in the {} regime, not inner",
            cond.regime()
        )));
    }
    let two = solve_strictly_convex(p, e, alpha)?;
    let gamma = e.gamma;
    let brown_only = alpha.powf(-1.0 / gamma) * p.brown_margin().powf((1.0 - gamma) / gamma);
    let gap = p.productivity_ratio() - p.green_intensity;
    Ok(EmissionComparison {
        two_source: two.emission,
        brown_only,
        identity_value: brown_only - two.green_investment * gap,
    })
}
