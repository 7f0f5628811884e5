//! Declarative experiments: JSON configs, runs, CSV/JSON outputs and the
//! built-in figure configurations.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::alpha::{alpha_autonomous, alpha_bounds_for};
use crate::dynamics::{
    objective_direct, objective_reduced, simulate, steady_state, truncation_horizon, ControlPaths,
    EmissionPath, SteadyState, Trajectory, WelfareProblem, WelfareValue,
};
use crate::error::{Error, Result};
use crate::network::{
    build_blocked, build_distance_based, build_nearest_neighbor, build_wind, Generator, NetworkSpec,
};
use crate::policy::{solve_node, CostSpec, CustomCost, EconomyParams, NodePolicy, SiteParams};
use crate::table::format_float;

pub const SCHEMA_VERSION: u32 = 1;

/// Header of the per-node CSV.
pub const NODES_HEADER: &str = "node,alpha,regime,I,R,C,N,Y,P_inf,F_value,delta,aI,aR";

/// Header of the renewable comparison CSV.
pub const COMPARISON_HEADER: &str = "node,I_brown_only,I_two_source,delta_I_pct,\
N_brown_only,N_two_source,delta_N_pct,P_inf_brown_only,P_inf_two_source,delta_P_inf_pct";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "snake_case", deny_unknown_fields)]
pub enum NetworkConfig {
    NearestNeighbor {
        n: usize,
    },
    DistanceBased {
        n: usize,
    },
    Wind {
        n: usize,
        wind: f64,
        affected: Vec<usize>,
    },
    Blocked {
        base: Box<NetworkConfig>,
        zeta: f64,
        from: Vec<usize>,
        to: Vec<usize>,
    },
}

impl NetworkConfig {
    pub fn build(&self) -> Result<NetworkSpec> {
        match self {
            NetworkConfig::NearestNeighbor { n } => build_nearest_neighbor(*n),
            NetworkConfig::DistanceBased { n } => build_distance_based(*n),
            NetworkConfig::Wind { n, wind, affected } => build_wind(*n, *wind, affected),
            NetworkConfig::Blocked {
                base,
                zeta,
                from,
                to,
            } => build_blocked(&base.build()?, *zeta, from, to),
        }
    }
}

/// Inclusive 1-based node range carrying a common value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRange {
    pub from: usize,
    pub to: usize,
    pub value: f64,
}

/// Per-node parameter values.
///
/// `triangular` and `cosine` peak at the central node and fall to `periphery`
/// at the outermost nodes, linearly or along a raised cosine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant { value: f64 },
    Triangular { core: f64, periphery: f64 },
    Cosine { core: f64, periphery: f64 },
    List { values: Vec<f64> },
    Piecewise { default: f64, ranges: Vec<NodeRange> },
}

impl Profile {
    pub fn resolve(&self, n: usize, field: &str) -> Result<Vec<f64>> {
        let center = (n as f64 + 1.0) / 2.0;
        let reach = (center - 1.0).max(f64::MIN_POSITIVE);
        let shape = |core: f64, periphery: f64, bump: fn(f64) -> f64| -> Vec<f64> {
            (1..=n)
                .map(|i| {
                    let d = ((i as f64 - center).abs() / reach).min(1.0);
                    periphery + (core - periphery) * bump(d)
                })
                .collect()
        };
        let values = match self {
            Profile::Constant { value } => vec![*value; n],
            Profile::Triangular { core, periphery } => shape(*core, *periphery, |d| 1.0 - d),
            Profile::Cosine { core, periphery } => {
                shape(*core, *periphery, |d| 0.5 * (1.0 + (PI * d).cos()))
            }
            Profile::List { values } => {
                if values.len() != n {
                    return Err(Error::Config(format!(
                        "profile '{field}' has {} values, network has {n} nodes",
                        values.len()
                    )));
                }
                values.clone()
            }
            Profile::Piecewise { default, ranges } => {
                let mut v = vec![*default; n];
                for r in ranges {
                    if r.from == 0 || r.from > r.to || r.to > n {
                        return Err(Error::Config(format!(
                            "profile '{field}' range {}..={} outside 1..={n}",
                            r.from, r.to
                        )));
                    }
                    v[r.from - 1..r.to].fill(r.value);
                }
                v
            }
        };
        if let Some(x) = values.iter().find(|x| !x.is_finite()) {
            return Err(Error::Config(format!("profile '{field}' has non-finite value {x}")));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeProfiles {
    pub decay: Profile,
    pub brown_productivity: Profile,
    pub green_productivity: Profile,
    pub green_intensity: Profile,
    pub awareness: Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomyConfig {
    pub rho: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostConfig {
    None,
    Linear { lambda: f64 },
    Quadratic { lambda: f64 },
    /// `lambda (e^R - 1 - R)`.
    Exponential { lambda: f64 },
}

impl CostConfig {
    pub fn to_spec(&self) -> CostSpec {
        match *self {
            CostConfig::None => CostSpec::None,
            CostConfig::Linear { lambda } => CostSpec::Linear { lambda },
            CostConfig::Quadratic { lambda } => CostSpec::Quadratic { lambda },
            CostConfig::Exponential { lambda } => CostSpec::Custom(CustomCost::exponential(lambda)),
        }
    }
}

fn default_horizon() -> f64 {
    50.0
}
fn default_step() -> f64 {
    crate::dynamics::DEFAULT_STEP
}
fn default_stride() -> usize {
    100
}
fn default_welfare_tolerance() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    /// Emit the pollution trajectory on `[0, horizon]`.
    #[serde(default)]
    pub trajectory: bool,
    /// Keep every k-th grid time in the trajectory CSV.
    #[serde(default = "default_stride")]
    pub trajectory_stride: usize,
    /// Evaluate welfare in both forms.
    #[serde(default)]
    pub welfare: bool,
    /// Relative truncation tolerance for the welfare horizon.
    #[serde(default = "default_welfare_tolerance")]
    pub welfare_tolerance: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            horizon: default_horizon(),
            step: default_step(),
            trajectory: false,
            trajectory_stride: default_stride(),
            welfare: false,
            welfare_tolerance: default_welfare_tolerance(),
        }
    }
}

fn default_initial() -> Profile {
    Profile::Constant { value: 1.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    pub name: String,
    pub network: NetworkConfig,
    pub nodes: NodeProfiles,
    #[serde(default = "default_initial")]
    pub initial_pollution: Profile,
    pub economy: EconomyConfig,
    pub cost: CostConfig,
    #[serde(default)]
    pub run: RunConfig,
}

/// A validated config with every profile expanded to per-node values.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub network: NetworkSpec,
    pub generator: Generator,
    pub sites: Vec<SiteParams>,
    pub economy: EconomyParams,
    pub initial: DVector<f64>,
}

impl Scenario {
    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn awareness(&self) -> DVector<f64> {
        DVector::from_iterator(self.n(), self.sites.iter().map(|s| s.awareness))
    }
}

impl ScenarioConfig {
    /// Parses and validates a JSON config.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks the config against the model assumptions and expands profiles.
    pub fn resolve(&self) -> Result<Scenario> {
        if self.version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema version {}, expected {SCHEMA_VERSION}",
                self.version
            )));
        }
        let network = self.network.build()?;
        let n = network.n();
        let p = &self.nodes;
        let decay = p.decay.resolve(n, "decay")?;
        let brown = p.brown_productivity.resolve(n, "brown_productivity")?;
        let green = p.green_productivity.resolve(n, "green_productivity")?;
        let intensity = p.green_intensity.resolve(n, "green_intensity")?;
        let awareness = p.awareness.resolve(n, "awareness")?;
        let initial = self.initial_pollution.resolve(n, "initial_pollution")?;
        if let Some((k, x)) = initial.iter().enumerate().find(|(_, x)| **x < 0.0) {
            return Err(Error::Config(format!(
                "initial pollution at node {} is negative ({x})",
                k + 1
            )));
        }
        let economy = EconomyParams::new(self.economy.rho, self.economy.gamma)?;
        let cost = self.cost.to_spec();
        let mut sites = Vec::with_capacity(n);
        for k in 0..n {
            let site = SiteParams {
                decay: decay[k],
                brown_productivity: brown[k],
                green_productivity: green[k],
                green_intensity: intensity[k],
                awareness: awareness[k],
                cost: cost.clone(),
            };
            site.validate().map_err(|e| at_node(e, k + 1))?;
            if site.green_productivity > 1.0 && matches!(site.cost, CostSpec::None) {
                return Err(Error::InvalidCost(format!(
                    "node {} has aR > 1 but cost 'none'; green investment needs a cost",
                    k + 1
                )));
            }
            sites.push(site);
        }
        let run = &self.run;
        if !(run.horizon >= 0.0 && run.horizon.is_finite()) || !(run.step > 0.0 && run.step.is_finite()) {
            return Err(Error::Config(format!(
                "run needs horizon >= 0 and step > 0, got {} and {}",
                run.horizon, run.step
            )));
        }
        if !(run.welfare_tolerance > 0.0 && run.welfare_tolerance < 1.0) {
            return Err(Error::Config("welfare_tolerance must lie in (0, 1)".into()));
        }
        let generator = Generator::autonomous(&network, &DVector::from_vec(decay))?;
        Ok(Scenario {
            network,
            generator,
            sites,
            economy,
            initial: DVector::from_vec(initial),
        })
    }

    /// The same config with `aR = 1` at every node.
    pub fn brown_only_counterpart(&self) -> Self {
        let mut cfg = self.clone();
        cfg.name = format!("{}-brown-only", self.name);
        cfg.nodes.green_productivity = Profile::Constant { value: 1.0 };
        cfg
    }
}

fn at_node(e: Error, node: usize) -> Error {
    match e {
        Error::Assumption { label, detail } => Error::Assumption {
            label,
            detail: format!("node {node}: {detail}"),
        },
        other => other,
    }
}

/// One row of the per-node output table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeRow {
    pub node: usize,
    pub alpha: f64,
    pub regime: String,
    #[serde(rename = "I")]
    pub investment: f64,
    #[serde(rename = "R")]
    pub green_investment: f64,
    #[serde(rename = "C")]
    pub consumption: f64,
    #[serde(rename = "N")]
    pub emission: f64,
    #[serde(rename = "Y")]
    pub production: f64,
    #[serde(rename = "P_inf")]
    pub pollution: f64,
    #[serde(rename = "F_value")]
    pub objective: f64,
    pub delta: f64,
    #[serde(rename = "aI")]
    pub brown_productivity: f64,
    #[serde(rename = "aR")]
    pub green_productivity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WelfareSummary {
    pub direct: WelfareValue,
    pub reduced: WelfareValue,
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    pub scenario: Scenario,
    pub alpha: DVector<f64>,
    pub policies: Vec<NodePolicy>,
    pub steady: SteadyState,
    pub trajectory: Option<Trajectory>,
    pub welfare: Option<WelfareSummary>,
}

/// Computes shadow costs, node policies, the steady state and the optional
/// trajectory and welfare of a config.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    let scenario = cfg.resolve()?;
    let alpha = alpha_autonomous(&scenario.generator, &scenario.awareness(), scenario.economy.rho)?;
    let policies = scenario
        .sites
        .iter()
        .zip(alpha.iter())
        .map(|(site, &a)| solve_node(site, &scenario.economy, a))
        .collect::<Result<Vec<_>>>()?;
    let emissions = DVector::from_iterator(policies.len(), policies.iter().map(|p| p.emission));
    let steady = steady_state(&scenario.generator, &emissions)?;
    let trajectory = if cfg.run.trajectory {
        Some(simulate(
            &scenario.generator,
            &scenario.initial,
            &EmissionPath::Constant(emissions),
            cfg.run.horizon,
            cfg.run.step,
        )?)
    } else {
        None
    };
    let welfare = if cfg.run.welfare {
        let controls = ControlPaths::from_policies(&policies);
        let problem = WelfareProblem {
            generator: &scenario.generator,
            sites: &scenario.sites,
            economy: &scenario.economy,
            initial: &scenario.initial,
            controls: &controls,
        };
        let horizon = truncation_horizon(&problem, cfg.run.welfare_tolerance)?;
        Some(WelfareSummary {
            direct: objective_direct(&problem, horizon, cfg.run.step)?,
            reduced: objective_reduced(&problem, |_| alpha.clone(), horizon, cfg.run.step)?,
        })
    } else {
        None
    };
    Ok(ScenarioResult {
        config: cfg.clone(),
        scenario,
        alpha,
        policies,
        steady,
        trajectory,
        welfare,
    })
}

#[derive(Debug, Clone, Serialize)]
struct Meta<'a> {
    name: &'a str,
    schema_version: u32,
    nodes: usize,
    regimes: BTreeMap<String, usize>,
    knife_edge_nodes: Vec<usize>,
    alpha_bounds: [f64; 2],
    spectral_abscissa: Option<f64>,
    steady_state_residual: f64,
    steady_state_condition: f64,
    welfare: Option<&'a WelfareSummary>,
    config: &'a ScenarioConfig,
}

impl ScenarioResult {
    pub fn rows(&self) -> Vec<NodeRow> {
        self.policies
            .iter()
            .zip(&self.scenario.sites)
            .enumerate()
            .map(|(k, (pol, site))| NodeRow {
                node: k + 1,
                alpha: self.alpha[k],
                regime: pol.regime.to_string(),
                investment: pol.investment,
                green_investment: pol.green_investment,
                consumption: pol.consumption,
                emission: pol.emission,
                production: pol.production(site),
                pollution: self.steady.values[k],
                objective: pol.objective,
                delta: site.decay,
                brown_productivity: site.brown_productivity,
                green_productivity: site.green_productivity,
            })
            .collect()
    }

    pub fn emissions(&self) -> DVector<f64> {
        DVector::from_iterator(self.policies.len(), self.policies.iter().map(|p| p.emission))
    }

    pub fn write_nodes_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{NODES_HEADER}")?;
        for r in self.rows() {
            let cells = [
                r.alpha,
                r.investment,
                r.green_investment,
                r.consumption,
                r.emission,
                r.production,
                r.pollution,
                r.objective,
                r.delta,
                r.brown_productivity,
                r.green_productivity,
            ]
            .map(format_float);
            writeln!(
                w,
                "{},{},{},{}",
                r.node,
                cells[0],
                r.regime,
                cells[1..].join(",")
            )?;
        }
        Ok(())
    }

    pub fn nodes_json(&self) -> String {
        serde_json::to_string_pretty(&self.rows()).expect("rows serialize")
    }

    pub fn meta_json(&self) -> String {
        let mut regimes = BTreeMap::new();
        for p in &self.policies {
            *regimes.entry(p.regime.to_string()).or_insert(0) += 1;
        }
        let omega = self.scenario.awareness();
        let (lo, hi) = alpha_bounds_for(&self.scenario.generator, &omega, self.scenario.economy.rho);
        let meta = Meta {
            name: &self.config.name,
            schema_version: SCHEMA_VERSION,
            nodes: self.policies.len(),
            regimes,
            knife_edge_nodes: (1..=self.policies.len())
                .filter(|k| self.policies[k - 1].knife_edge)
                .collect(),
            alpha_bounds: [lo, hi],
            spectral_abscissa: self.scenario.generator.spectral_abscissa(),
            steady_state_residual: self.steady.residual,
            steady_state_condition: self.steady.condition,
            welfare: self.welfare.as_ref(),
            config: &self.config,
        };
        serde_json::to_string_pretty(&meta).expect("meta serializes")
    }

    /// Writes `<prefix>_nodes.csv` (or `.json`), `<prefix>_steady_state.csv`,
    /// `<prefix>_trajectory.csv` when present and `<prefix>_meta.json`.
    pub fn write_outputs(&self, dir: &Path, prefix: &str, format: OutputFormat) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        match format {
            OutputFormat::Csv => {
                let path = dir.join(format!("{prefix}_nodes.csv"));
                self.write_nodes_csv(fs::File::create(&path)?)?;
                written.push(path);
                let path = dir.join(format!("{prefix}_steady_state.csv"));
                self.steady.write_csv(fs::File::create(&path)?)?;
                written.push(path);
                if let Some(tr) = &self.trajectory {
                    let path = dir.join(format!("{prefix}_trajectory.csv"));
                    tr.write_csv(
                        std::io::BufWriter::new(fs::File::create(&path)?),
                        self.config.run.trajectory_stride,
                    )?;
                    written.push(path);
                }
            }
            OutputFormat::Json => {
                let path = dir.join(format!("{prefix}_nodes.json"));
                fs::write(&path, self.nodes_json() + "\n")?;
                written.push(path);
            }
        }
        let path = dir.join(format!("{prefix}_meta.json"));
        fs::write(&path, self.meta_json() + "\n")?;
        written.push(path);
        Ok(written)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Per-node percent changes when green investment becomes available.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub node: usize,
    pub investment_brown_only: f64,
    pub investment_two_source: f64,
    pub delta_investment_pct: f64,
    pub emission_brown_only: f64,
    pub emission_two_source: f64,
    pub delta_emission_pct: f64,
    pub pollution_brown_only: f64,
    pub pollution_two_source: f64,
    pub delta_pollution_pct: f64,
}

#[derive(Debug, Clone)]
pub struct RenewableComparison {
    pub brown_only: ScenarioResult,
    pub two_source: ScenarioResult,
    pub rows: Vec<ComparisonRow>,
}

fn percent_change(base: f64, new: f64) -> f64 {
    if base == new {
        0.0
    } else {
        100.0 * (new - base) / base
    }
}

impl RenewableComparison {
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{COMPARISON_HEADER}")?;
        for r in &self.rows {
            let cells = [
                r.investment_brown_only,
                r.investment_two_source,
                r.delta_investment_pct,
                r.emission_brown_only,
                r.emission_two_source,
                r.delta_emission_pct,
                r.pollution_brown_only,
                r.pollution_two_source,
                r.delta_pollution_pct,
            ]
            .map(format_float);
            writeln!(w, "{},{}", r.node, cells.join(","))?;
        }
        Ok(())
    }

    pub fn row(&self, node: usize) -> &ComparisonRow {
        &self.rows[node - 1]
    }
}

/// Runs `cfg` and its `aR = 1` counterpart and reports per-node percent changes.
pub fn compare_renewable(cfg: &ScenarioConfig) -> Result<RenewableComparison> {
    let two_source = run_scenario(cfg)?;
    let brown_only = run_scenario(&cfg.brown_only_counterpart())?;
    let rows = (0..two_source.policies.len())
        .map(|k| {
            let (b, g) = (&brown_only.policies[k], &two_source.policies[k]);
            let (pb, pg) = (brown_only.steady.values[k], two_source.steady.values[k]);
            ComparisonRow {
                node: k + 1,
                investment_brown_only: b.investment,
                investment_two_source: g.investment,
                delta_investment_pct: percent_change(b.investment, g.investment),
                emission_brown_only: b.emission,
                emission_two_source: g.emission,
                delta_emission_pct: percent_change(b.emission, g.emission),
                pollution_brown_only: pb,
                pollution_two_source: pg,
                delta_pollution_pct: percent_change(pb, pg),
            }
        })
        .collect();
    Ok(RenewableComparison {
        brown_only,
        two_source,
        rows,
    })
}

/// A baseline/variant pair reproducing one of the built-in figures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureConfig {
    pub figure: u8,
    pub title: String,
    pub baseline: ScenarioConfig,
    pub variant: ScenarioConfig,
}

const FIGURE_DATA: [&str; 5] = [
    include_str!("../data/figures/fig1.json"),
    include_str!("../data/figures/fig2.json"),
    include_str!("../data/figures/fig3.json"),
    include_str!("../data/figures/fig4.json"),
    include_str!("../data/figures/fig5.json"),
];

pub const FIGURES: std::ops::RangeInclusive<u8> = 1..=5;

pub fn figure_config(id: u8) -> Result<FigureConfig> {
    if !FIGURES.contains(&id) {
        return Err(Error::Config(format!("unknown figure {id}, expected 1..=5")));
    }
    let fig: FigureConfig = serde_json::from_str(FIGURE_DATA[id as usize - 1])?;
    fig.baseline.resolve()?;
    fig.variant.resolve()?;
    Ok(fig)
}

#[derive(Debug, Clone)]
pub struct FigureResult {
    pub config: FigureConfig,
    pub baseline: ScenarioResult,
    pub variant: ScenarioResult,
}

pub fn run_figure(id: u8) -> Result<FigureResult> {
    let config = figure_config(id)?;
    let baseline = run_scenario(&config.baseline)?;
    let variant = run_scenario(&config.variant)?;
    Ok(FigureResult {
        config,
        baseline,
        variant,
    })
}

impl FigureResult {
    /// Writes `figN_nodes.csv` (baseline), `figN_variant_nodes.csv` and
    /// `figN_meta.json`, plus trajectories and steady states of both runs.
    pub fn write_outputs(&self, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
        let id = self.config.figure;
        let base = format!("fig{id}");
        let variant = format!("fig{id}_variant");
        let mut written = self.baseline.write_outputs(dir, &base, format)?;
        written.extend(self.variant.write_outputs(dir, &variant, format)?);
        let meta_path = dir.join(format!("{base}_meta.json"));
        let meta = serde_json::json!({
            "figure": id,
            "title": self.config.title,
            "baseline": serde_json::from_str::<serde_json::Value>(&self.baseline.meta_json())?,
            "variant": serde_json::from_str::<serde_json::Value>(&self.variant.meta_json())?,
        });
        fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n")?;
        // the variant meta is folded into the figure meta
        let variant_meta = dir.join(format!("{variant}_meta.json"));
        fs::remove_file(&variant_meta)?;
        written.retain(|p| p != &variant_meta);
        Ok(written)
    }
}
