//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use polnet::alpha::alpha_autonomous;
use polnet::certify::{draw_instance, CostVariant};
use polnet::dynamics::{
    convergence_check, objective_direct, objective_reduced, simulate_with,
    truncation_horizon, ControlPaths, EmissionPath, Integrator, WelfareProblem,
};
use polnet::network::{
    build_blocked, build_distance_based, build_nearest_neighbor, build_wind, Generator,
};
use polnet::policy::{
    brute_force_maximize, regime_conditions, solve_node, CostSpec, EconomyParams, OracleGrid,
    Regime, SiteParams,
};
use polnet::scenario::{compare_renewable, figure_config, run_figure, ScenarioResult};
use polnet::transition::{peano_baker, transition_matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Check = fn() -> Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn all_figure_runs() -> Vec<ScenarioResult> {
    (1..=5)
        .flat_map(|id| {
            let f = run_figure(id).unwrap();
            [f.baseline, f.variant]
        })
        .collect()
}

fn alpha_baseline() -> Result<String, String> {
    let n = 21;
    let builders = [
        ("L1", build_nearest_neighbor(n).unwrap()),
        ("L2", build_distance_based(n).unwrap()),
        ("L3", build_wind(n, 0.4, &[14, 15, 16, 17, 18, 19]).unwrap()),
        (
            "L4",
            build_blocked(&build_nearest_neighbor(n).unwrap(), 0.0, &[8, 14], &[9, 13]).unwrap(),
        ),
    ];
    let mut worst: f64 = 0.0;
    for (name, spec) in builders {
        let gen = Generator::autonomous(&spec, &DVector::from_element(n, 0.4)).unwrap();
        let alpha = alpha_autonomous(&gen, &DVector::from_element(n, 1.0), 0.03).unwrap();
        let err = alpha.add_scalar(-1.0 / 0.43).amax();
        ensure(err <= 1e-9, || format!("{name}: max error {err:.3e}"))?;
        worst = worst.max(err);
    }
    Ok(format!("max |alpha - 1/0.43| = {worst:.2e} over L1..L4"))
}

fn cost_fn(cost: &CostSpec) -> impl Fn(f64) -> f64 + '_ {
    move |r| match cost {
        CostSpec::None => 0.0,
        CostSpec::Linear { lambda } => lambda * r,
        CostSpec::Quadratic { lambda } => lambda * r * r,
        // the only custom cost drawn is lambda (e^R - 1 - R)
        CostSpec::Custom(c) => c.curvature_floor * (r.exp() - 1.0 - r),
    }
}

fn closed_form_certification() -> Result<String, String> {
    let mut summary = Vec::new();
    for (k, variant) in CostVariant::ALL.into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + k as u64);
        let mut max_gap = f64::NEG_INFINITY;
        let mut max_dist: f64 = 0.0;
        for draw in 0..200 {
            let inst = draw_instance(&mut rng, variant);
            let (p, e, a) = (&inst.site, &inst.economy, inst.alpha);
            let closed = solve_node(p, e, a).map_err(|err| format!("{variant:?} #{draw}: {err}"))?;
            let oracle = brute_force_maximize(p, e, a, OracleGrid::default()).unwrap();
            let f = |i, r| {
                literal_objective(
                    p.brown_productivity,
                    p.green_productivity,
                    p.green_intensity,
                    e.gamma,
                    a,
                    cost_fn(&p.cost),
                    i,
                    r,
                )
            };
            let f_closed = f(closed.investment, closed.green_investment);
            let f_oracle = f(oracle.investment, oracle.green_investment);
            let gap = f_oracle - f_closed;
            ensure(gap <= 1e-6, || {
                format!("{variant:?} #{draw}: F(oracle) - F(closed) = {gap:.3e} ({inst:?})")
            })?;
            max_gap = max_gap.max(gap);
            if closed.regime != Regime::LinearIndifference {
                let d = (closed.investment - oracle.investment)
                    .hypot(closed.green_investment - oracle.green_investment);
                ensure(d <= 1e-3, || {
                    format!("{variant:?} #{draw}: control distance {d:.3e} ({inst:?})")
                })?;
                max_dist = max_dist.max(d);
            }
        }
        summary.push(format!("{variant:?}: gap {max_gap:.1e}, dist {max_dist:.1e}"));
    }
    Ok(format!("4 x 200 draws; {}", summary.join("; ")))
}

fn random_small_problem(rng: &mut impl Rng) -> (Generator, Vec<SiteParams>, EconomyParams, DVector<f64>) {
    let n = rng.gen_range(3..=6);
    let spec = random_network(rng, n);
    let decay: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..0.6)).collect();
    let gen = Generator::autonomous(&spec, &DVector::from_vec(decay.clone())).unwrap();
    let gamma = if rng.gen_bool(0.5) {
        rng.gen_range(0.4..0.9)
    } else {
        rng.gen_range(1.2..3.0)
    };
    let economy = EconomyParams::new(rng.gen_range(0.02..0.1), gamma).unwrap();
    let lambda = rng.gen_range(0.5..2.0);
    let sites = decay
        .iter()
        .map(|&d| {
            let green = if rng.gen_bool(0.2) { 1.0 } else { rng.gen_range(1.2..3.0) };
            SiteParams {
                decay: d,
                brown_productivity: rng.gen_range(2.0..6.0),
                green_productivity: green,
                green_intensity: rng.gen_range(0.0..0.5),
                awareness: rng.gen_range(0.5..1.5),
                cost: CostSpec::Quadratic { lambda },
            }
        })
        .collect();
    let p0 = DVector::from_fn(n, |_, _| rng.gen_range(0.0..2.0));
    (gen, sites, economy, p0)
}

fn objective_identity() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for res in all_figure_runs() {
        let w = res.welfare.as_ref().ok_or("figure run without welfare")?;
        let (d, r) = (w.direct.value.as_f64(), w.reduced.value.as_f64());
        ensure(d.is_finite() && r.is_finite(), || format!("{}: non-finite welfare", res.config.name))?;
        let rel = (d - r).abs() / (1.0 + r.abs());
        ensure(rel <= 1e-4, || format!("{}: direct {d} vs reduced {r}", res.config.name))?;
        worst = worst.max(rel);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for k in 0..50 {
        let (gen, sites, economy, p0) = random_small_problem(&mut rng);
        let omega = DVector::from_iterator(sites.len(), sites.iter().map(|s| s.awareness));
        let alpha = alpha_autonomous(&gen, &omega, economy.rho).unwrap();
        let pols: Vec<_> = sites
            .iter()
            .zip(alpha.iter())
            .map(|(s, &a)| solve_node(s, &economy, a).unwrap())
            .collect();
        let controls = ControlPaths::from_policies(&pols);
        let problem = WelfareProblem {
            generator: &gen,
            sites: &sites,
            economy: &economy,
            initial: &p0,
            controls: &controls,
        };
        let horizon = truncation_horizon(&problem, 1e-6).unwrap();
        let d = objective_direct(&problem, horizon, 1e-2).unwrap().value.as_f64();
        let r = objective_reduced(&problem, |_| alpha.clone(), horizon, 1e-2)
            .unwrap()
            .value
            .as_f64();
        let rel = (d - r).abs() / (1.0 + r.abs());
        ensure(rel <= 1e-4, || format!("random #{k}: direct {d} vs reduced {r}"))?;
        worst = worst.max(rel);
    }
    Ok(format!("10 figure runs + 50 random instances, max relative gap {worst:.2e}"))
}

fn steady_state_and_convergence() -> Result<String, String> {
    let mut worst_res: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for res in all_figure_runs() {
        let name = &res.config.name;
        let decay: Vec<f64> = res.scenario.sites.iter().map(|s| s.decay).collect();
        let g = assemble_generator(res.scenario.network.weights(), &decay);
        let n_star = res.emissions();
        let residual = (&g * &res.steady.values + &n_star).amax();
        ensure(residual <= 1e-10, || format!("{name}: residual {residual:.3e}"))?;
        worst_res = worst_res.max(residual);

        let dmin = decay.iter().cloned().fold(f64::INFINITY, f64::min);
        ensure(dmin >= 0.3, || format!("{name}: delta_min {dmin}"))?;
        let path = EmissionPath::Constant(n_star);
        for mode in [Integrator::Auto, Integrator::RungeKutta] {
            let tr = simulate_with(&res.scenario.generator, &res.scenario.initial, &path, 50.0, 1e-2, mode)
                .unwrap();
            let rep = convergence_check(&tr, &res.steady);
            let ratio = rep.final_error() / rep.initial_error();
            ensure(ratio <= 1e-5, || format!("{name} {mode:?}: ratio {ratio:.3e}"))?;
            ensure(rep.within_bound, || format!("{name} {mode:?}: above decay bound"))?;
            worst_ratio = worst_ratio.max(ratio);
        }
    }
    Ok(format!(
        "10 runs: max residual {worst_res:.2e}, max squared-distance ratio at T=50 {worst_ratio:.2e}"
    ))
}

fn emission_dominance() -> Result<String, String> {
    let mut checked = 0;
    let mut min_margin = f64::INFINITY;
    for res in all_figure_runs() {
        for (k, (pol, site)) in res.policies.iter().zip(&res.scenario.sites).enumerate() {
            if site.green_productivity > 1.0 && pol.regime == Regime::Inner {
                let brown = brown_only_emission(res.alpha[k], site.brown_productivity, res.scenario.economy.gamma);
                let margin = brown - pol.emission;
                ensure(margin > 0.0, || format!("{} node {}: margin {margin}", res.config.name, k + 1))?;
                min_margin = min_margin.min(margin);
                checked += 1;
            }
        }
    }
    let scenario_nodes = checked;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut draws = 0;
    let mut attempts = 0;
    while draws < 100 {
        attempts += 1;
        ensure(attempts < 100_000, || "too few inner-regime draws".into())?;
        let variant = if attempts % 2 == 0 { CostVariant::Quadratic } else { CostVariant::Exponential };
        let inst = draw_instance(&mut rng, variant);
        if regime_conditions(&inst.site, &inst.economy, inst.alpha).regime() != Regime::Inner {
            continue;
        }
        let pol = solve_node(&inst.site, &inst.economy, inst.alpha).unwrap();
        let brown = brown_only_emission(inst.alpha, inst.site.brown_productivity, inst.economy.gamma);
        let margin = brown - pol.emission;
        ensure(margin > 0.0, || format!("draw {draws}: margin {margin} ({inst:?})"))?;
        min_margin = min_margin.min(margin);
        draws += 1;
    }
    Ok(format!(
        "{scenario_nodes} scenario nodes + 100 random draws, min margin {min_margin:.3e}"
    ))
}

fn figure1_percentages() -> Result<String, String> {
    let cfg = figure_config(1).unwrap().variant;
    let cmp = compare_renewable(&cfg).unwrap();
    let center = cmp.row(11);
    let di = center.delta_investment_pct;
    let dp = center.delta_pollution_pct;
    // independent closed form at the center node: alpha = 1/0.43, aR = 2.75
    let alpha: f64 = 1.0 / 0.43;
    let green = alpha * (1.75 / 4.0 - 0.1) / 2.0;
    let c = (4.0 / alpha).powi(2);
    let brown = c / 4.0;
    let two = (c - 1.75 * green) / 4.0;
    let di_oracle = 100.0 * (two - brown) / brown;
    ensure((di - di_oracle).abs() < 1e-9, || format!("dI {di} vs closed form {di_oracle}"))?;
    ensure((-30.0..=-20.0).contains(&di), || format!("dI at node 11 = {di:.2}%"))?;
    ensure((-25.0..=-15.0).contains(&dp), || format!("dP_inf at node 11 = {dp:.2}%"))?;
    Ok(format!("node 11: dI = {di:.2}%, dP_inf = {dp:.2}%"))
}

fn columns(res: &ScenarioResult) -> Vec<(&'static str, Vec<f64>)> {
    let rows = res.rows();
    let col = |f: fn(&polnet::scenario::NodeRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    vec![
        ("alpha", col(|r| r.alpha)),
        ("I", col(|r| r.investment)),
        ("R", col(|r| r.green_investment)),
        ("C", col(|r| r.consumption)),
        ("N", col(|r| r.emission)),
        ("Y", col(|r| r.production)),
        ("P_inf", col(|r| r.pollution)),
        ("F_value", col(|r| r.objective)),
    ]
}

fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    hi - lo
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, &x)| if x > b.1 { (i, x) } else { b })
        .0
        + 1
}

fn figure_shapes() -> Result<String, String> {
    let f2 = run_figure(2).unwrap();
    for ((name, l1), (_, l2)) in columns(&f2.baseline).into_iter().zip(columns(&f2.variant)) {
        let (a, b) = (spread(&l1), spread(&l2));
        ensure(b < a, || format!("fig2 {name}: range L2 {b} not below L1 {a}"))?;
    }
    let f3 = run_figure(3).unwrap();
    let p3: Vec<f64> = f3.variant.steady.values.iter().cloned().collect();
    ensure(argmax(&p3) == 13, || format!("fig3 argmax P_inf = node {}", argmax(&p3)))?;
    let f4 = run_figure(4).unwrap();
    let (b, v) = (&f4.baseline.steady.values, &f4.variant.steady.values);
    for node in [9, 13] {
        ensure(v[node - 1] > b[node - 1], || format!("fig4 node {node} not above baseline"))?;
    }
    for node in [8, 14] {
        ensure(v[node - 1] < b[node - 1], || format!("fig4 node {node} not below baseline"))?;
    }
    let f5 = run_figure(5).unwrap();
    let inv: Vec<f64> = f5.variant.policies.iter().map(|p| p.investment).collect();
    let top = argmax(&inv);
    ensure((7..=15).contains(&top), || format!("fig5 argmax I = node {top}"))?;
    let base_top = argmax(&f5.baseline.policies.iter().map(|p| p.investment).collect::<Vec<_>>());
    Ok(format!(
        "fig2 all ranges shrink; fig3 argmax node 13; fig4 9,13 up and 8,14 down; fig5 argmax I node {base_top} -> {top}"
    ))
}

fn transition_suite() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let step: f64 = 1e-3;
    let mut worst_cocycle: f64 = 0.0;
    let mut worst_pb: f64 = 0.0;
    for k in 0..100 {
        let n = rng.gen_range(2..=6);
        let autonomous = k % 2 == 0;
        let gen = if autonomous {
            random_autonomous(&mut rng, n).0
        } else {
            random_time_varying(&mut rng, n)
        };
        let s = rng.gen_range(0.0..1.0);
        let u = s + rng.gen_range(0.1..1.0);
        let t = u + rng.gen_range(0.1..1.0);
        let id = transition_matrix(&gen, s, s, step).unwrap();
        ensure(id.phi == DMatrix::identity(n, n), || format!("#{k}: Phi(s,s) != I"))?;

        let full = transition_matrix(&gen, s, t, step).unwrap();
        let (dmin, dmax) = gen.decay_bounds();
        for (j, sum) in full.column_sums().iter().enumerate() {
            let lo = (-dmax * (t - s)).exp() - 1e-8;
            let hi = (-dmin * (t - s)).exp() + 1e-8;
            ensure(*sum >= lo && *sum <= hi, || format!("#{k}: column {j} sum {sum} outside [{lo}, {hi}]"))?;
        }
        ensure(full.min_entry() >= -1e-10, || format!("#{k}: negative entry {}", full.min_entry()))?;

        let first = transition_matrix(&gen, s, u, step).unwrap();
        let second = transition_matrix(&gen, u, t, step).unwrap();
        let err = max_abs_diff(&full.phi, &(&second.phi * &first.phi));
        let tol = if autonomous { 1e-8 } else { 100.0 * step.powi(4) };
        ensure(err <= tol, || format!("#{k}: cocycle error {err:.3e} > {tol:.1e}"))?;
        worst_cocycle = worst_cocycle.max(err);

        if autonomous {
            let g = gen.constant_matrix().unwrap();
            let norm = g.column_iter().map(|c| c.lp_norm(1)).fold(0.0, f64::max) * (t - s);
            if norm <= 5.0 {
                let pb = peano_baker(&gen, s, t, 30, 2001).unwrap();
                let err = max_abs_diff(&pb, &full.phi);
                ensure(err <= 1e-8, || format!("#{k}: Peano-Baker error {err:.3e}"))?;
                worst_pb = worst_pb.max(err);
            }
        }
    }
    Ok(format!(
        "100 generators: identity exact, sandwich ok, max cocycle error {worst_cocycle:.2e}, max series error {worst_pb:.2e}"
    ))
}

fn main() {
    let criteria: [(&str, Check, Duration); 8] = [
        ("alpha baseline", alpha_baseline, Duration::from_secs(1)),
        ("closed-form certification", closed_form_certification, Duration::from_secs(120)),
        ("objective-form identity", objective_identity, Duration::from_secs(120)),
        ("steady state + convergence", steady_state_and_convergence, Duration::from_secs(30)),
        ("emission dominance", emission_dominance, Duration::from_secs(60)),
        ("figure 1 percentages", figure1_percentages, Duration::from_secs(10)),
        ("figure-shape regressions", figure_shapes, Duration::from_secs(60)),
        ("transition-matrix suite", transition_suite, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panic".into())));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > limit => Err(format!("{msg}; took {:.2}s, limit {}s", elapsed.as_secs_f64(), limit.as_secs())),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS {name}: {msg} [{:.2}s]", elapsed.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name}: {msg} [{:.2}s]", elapsed.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
