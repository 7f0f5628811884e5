//! Closed-form policies checked against the brute-force oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::policy::{
    brute_force_maximize, solve_node, CostSpec, CustomCost, EconomyParams, NodePolicy, OracleGrid,
    Regime, SiteParams,
};
use crate::scenario::{run_scenario, CostConfig, ScenarioConfig};

/// Largest tolerated `F(oracle) - F(closed form)`.
pub const OBJECTIVE_TOL: f64 = 1e-6;
/// Largest tolerated distance between closed-form and oracle controls.
pub const CONTROL_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostVariant {
    Quadratic,
    Linear,
    BrownOnly,
    Exponential,
}

impl CostVariant {
    pub const ALL: [CostVariant; 4] = [
        CostVariant::Quadratic,
        CostVariant::Linear,
        CostVariant::BrownOnly,
        CostVariant::Exponential,
    ];

    pub fn of_config(cost: &CostConfig) -> Self {
        match cost {
            CostConfig::None => CostVariant::BrownOnly,
            CostConfig::Linear { .. } => CostVariant::Linear,
            CostConfig::Quadratic { .. } => CostVariant::Quadratic,
            CostConfig::Exponential { .. } => CostVariant::Exponential,
        }
    }
}

/// One node problem: parameters plus the shadow cost it faces.
#[derive(Debug, Clone)]
pub struct Instance {
    pub site: SiteParams,
    pub economy: EconomyParams,
    pub alpha: f64,
}

/// Draws an admissible node problem.
///
/// `gamma` is uniform on `[0.4, 0.9]` or `[1.2, 3]` with equal odds; `alpha`,
/// `aI`, `aR`, `eps` and `lambda` are uniform on `[1, 4]`, `[1.5, 6]`,
/// `[1.2, 3]`, `[0, 0.9]` and `[0.2, 3]`.
pub fn draw_instance(rng: &mut impl Rng, variant: CostVariant) -> Instance {
    let gamma = if rng.gen_bool(0.5) {
        rng.gen_range(0.4..=0.9)
    } else {
        rng.gen_range(1.2..=3.0)
    };
    let alpha = rng.gen_range(1.0..=4.0);
    let brown = rng.gen_range(1.5..=6.0);
    let green = rng.gen_range(1.2..=3.0);
    let eps = rng.gen_range(0.0..=0.9);
    let lambda = rng.gen_range(0.2..=3.0);
    let (green, cost) = match variant {
        CostVariant::Quadratic => (green, CostSpec::Quadratic { lambda }),
        CostVariant::Linear => (green, CostSpec::Linear { lambda }),
        CostVariant::BrownOnly => (1.0, CostSpec::None),
        CostVariant::Exponential => (green, CostSpec::Custom(CustomCost::exponential(lambda))),
    };
    Instance {
        site: SiteParams {
            decay: 0.4,
            brown_productivity: brown,
            green_productivity: green,
            green_intensity: eps,
            awareness: 1.0,
            cost,
        },
        economy: EconomyParams {
            rho: 0.03,
            gamma,
            growth: None,
        },
        alpha,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certification {
    pub closed: NodePolicy,
    pub oracle: NodePolicy,
    /// `F(oracle) - F(closed form)`; positive means the oracle found more.
    pub objective_gap: f64,
    /// Euclidean distance of `(I, R)`; `None` on the linear indifference segment.
    pub control_distance: Option<f64>,
}

impl Certification {
    pub fn passed(&self) -> bool {
        self.objective_gap <= OBJECTIVE_TOL
            && self.control_distance.is_none_or(|d| d <= CONTROL_TOL)
    }
}

pub fn certify(instance: &Instance, grid: OracleGrid) -> Result<Certification> {
    let closed = solve_node(&instance.site, &instance.economy, instance.alpha)?;
    let oracle = brute_force_maximize(&instance.site, &instance.economy, instance.alpha, grid)?;
    let objective_gap = oracle.objective - closed.objective;
    let control_distance = (closed.regime != Regime::LinearIndifference).then(|| {
        (closed.investment - oracle.investment).hypot(closed.green_investment - oracle.green_investment)
    });
    Ok(Certification {
        closed,
        oracle,
        objective_gap,
        control_distance,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OracleReport {
    pub nodes_checked: usize,
    pub samples: usize,
    pub seed: u64,
    pub max_objective_gap: f64,
    pub max_control_distance: f64,
    pub failures: usize,
    pub passed: bool,
}

impl OracleReport {
    fn record(&mut self, c: &Certification) {
        self.max_objective_gap = self.max_objective_gap.max(c.objective_gap);
        if let Some(d) = c.control_distance {
            self.max_control_distance = self.max_control_distance.max(d);
        }
        if !c.passed() {
            self.failures += 1;
        }
    }
}

/// Certifies every node of a scenario, then `samples` random instances with
/// the scenario's cost variant.
pub fn certify_config(cfg: &ScenarioConfig, samples: usize, seed: u64) -> Result<OracleReport> {
    let result = run_scenario(cfg)?;
    let mut report = OracleReport {
        seed,
        max_objective_gap: f64::NEG_INFINITY,
        ..Default::default()
    };
    for (site, &alpha) in result.scenario.sites.iter().zip(result.alpha.iter()) {
        let inst = Instance {
            site: site.clone(),
            economy: result.scenario.economy.clone(),
            alpha,
        };
        report.record(&certify(&inst, OracleGrid::default())?);
        report.nodes_checked += 1;
    }
    let variant = CostVariant::of_config(&cfg.cost);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let inst = draw_instance(&mut rng, variant);
        report.record(&certify(&inst, OracleGrid::default())?);
        report.samples += 1;
    }
    report.passed = report.failures == 0;
    Ok(report)
}
