//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saddleflow::convex::{compute_bounds, AffineConstraint, AffineRow, BoxSet, QuadraticCost};
use saddleflow::experiment::{self, ModeOutcome};
use saddleflow::oracle::{grid_oracle, solve_clairvoyant, ProgramTerm, SampledProgram};
use saddleflow::sim::{output_flow_residual, MetricsReport};
use saddleflow::{load_scenario, ConstraintFamily, CostFamily, Mode, Scenario};

/// Elementwise tolerance on printed gain matrices (printed to three places).
const GAIN_TOL: f64 = 5e-3;
/// Multiplicative slack on the analytic bounds.
const BOUND_SLACK: f64 = 1.05;
/// Discretisation allowance `C h T`; pinned from the h versus h/2 run
/// (observed calibration constant 229).
const C_SLACK: f64 = 250.0;
/// Last-quarter regret increase allowed, as a fraction of peak |regret|.
const FLATTEN_FRAC: f64 = 0.05;
/// `F^T/T` at the horizon relative to its value at T = 3.
const FIT_DECAY: f64 = 0.25;
/// Event-mode broadcasts relative to continuous.
const BROADCAST_BAR: f64 = 0.5;
/// Residual ratio that counts as halving.
const HALVING_RATIO: f64 = 0.55;
/// Round-off floor multiplier: residuals below `ROUNDOFF * eps * max|y| / h`
/// are indistinguishable from zero.
const ROUNDOFF: f64 = 64.0;
const ORACLE_RESOLUTION: f64 = 1e-3;
const PROPERTY_DRAWS: usize = 10_000;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

struct Fixture {
    scenario: Scenario,
    half: Scenario,
    continuous: ModeOutcome,
    event: ModeOutcome,
    continuous_half: ModeOutcome,
    /// Half-step run measured against the full-step comparator.
    half_same_star: MetricsReport,
}

impl Fixture {
    fn build() -> Self {
        let scenario = load_scenario(common::shipped_path()).expect("shipped scenario loads");
        let half = common::shipped_with(|f| f.params.step = scenario.step / 2.0);
        let y_star = DVector::from_vec(experiment::clairvoyant(&scenario, None).unwrap().y_star);
        let y_star_half = DVector::from_vec(experiment::clairvoyant(&half, None).unwrap().y_star);
        let seed = scenario.seed;
        let continuous = experiment::simulate(&scenario, Mode::Continuous, seed, &y_star).unwrap();
        let event = experiment::simulate(&scenario, Mode::EventTriggered, seed, &y_star).unwrap();
        let continuous_half = experiment::simulate(&half, Mode::Continuous, seed, &y_star_half).unwrap();
        let half_same_star =
            saddleflow::sim::compute_metrics(&continuous_half.trajectory, &y_star, &half).unwrap();
        Self {
            scenario,
            half,
            continuous,
            event,
            continuous_half,
            half_same_star,
        }
    }
}

fn mat(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, data)
}

fn criterion_1(fx: &Fixture) -> Verdict {
    let start = Instant::now();
    let printed: [(&[usize], &str, DMatrix<f64>); 6] = [
        (&[0, 1], "alpha", mat(2, 2, &[-3.0, 2.0, 1.0, 0.0])),
        (&[2], "alpha", mat(2, 2, &[-1.0, 1.0, 2.0, 0.0])),
        (&[3, 4], "alpha", mat(3, 3, &[2.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 2.0])),
        (&[0, 1], "beta", mat(2, 2, &[-1.5, 1.0, 0.5, 0.0])),
        (&[2], "beta", mat(2, 2, &[1.0, 2.0, -2.0, -5.0])),
        (&[3, 4], "beta", mat(3, 3, &[0.333, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -0.5, 0.5])),
    ];
    let mut worst: f64 = 0.0;
    for (agents, which, expected) in &printed {
        for &agent in *agents {
            let gains = fx.scenario.agents[agent].plant.synthesize_gains().unwrap();
            let got = if *which == "alpha" { gains.k_alpha } else { gains.k_beta };
            worst = worst.max((got - expected).amax());
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst <= GAIN_TOL && elapsed < Duration::from_secs(1),
        format!("max elementwise error {worst:.2e} (tol {GAIN_TOL:e}), {elapsed:.2?}"),
    )
}

fn max_abs(rows: &[Vec<f64>]) -> f64 {
    rows.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn criterion_2(fx: &Fixture) -> Verdict {
    let start = Instant::now();
    let full = output_flow_residual(&fx.continuous.trajectory, &fx.scenario);
    let half = output_flow_residual(&fx.continuous_half.trajectory, &fx.half);
    let h = fx.scenario.step;
    let bound_ok = full.max_residual <= 10.0 * h * full.lipschitz
        && half.max_residual <= 10.0 * (h / 2.0) * half.lipschitz;
    let floor = |rows: &[Vec<f64>], step: f64| ROUNDOFF * f64::EPSILON * max_abs(rows) / step;
    let floor_full = floor(&fx.continuous.trajectory.raw_outputs, h);
    let floor_half = floor(&fx.continuous_half.trajectory.raw_outputs, h / 2.0);
    let at_floor = full.max_residual <= floor_full && half.max_residual <= floor_half;
    let halves = half.max_residual <= HALVING_RATIO * full.max_residual;
    let overshoot_ratio = half.max_overshoot / full.max_overshoot;
    let overshoot_first_order = overshoot_ratio <= HALVING_RATIO;
    let elapsed = start.elapsed();
    verdict(
        bound_ok && (halves || at_floor) && overshoot_first_order && elapsed < Duration::from_secs(60),
        format!(
            "residual {:.2e} at h (bound {:.2e}, round-off floor {:.2e}), {:.2e} at h/2 (floor {:.2e}){}; \
             box overshoot {:.2e} -> {:.2e} (ratio {:.2}); {elapsed:.2?}",
            full.max_residual,
            10.0 * h * full.lipschitz,
            floor_full,
            half.max_residual,
            floor_half,
            if halves { ", halved" } else if at_floor { ", both at round-off floor" } else { ", NOT halved" },
            full.max_overshoot,
            half.max_overshoot,
            overshoot_ratio,
        ),
    )
}

/// Largest `|R_h(T) - R_{h/2}(T)| / (h T)` over the coarse grid.
fn calibrated_slack(fx: &Fixture) -> f64 {
    let coarse = &fx.continuous.metrics;
    let fine = &fx.half_same_star;
    let h = fx.scenario.step;
    (1..coarse.times.len())
        .map(|k| (coarse.regret_curve[k] - fine.regret_curve[2 * k]).abs() / (h * coarse.times[k]))
        .fold(0.0, f64::max)
}

fn regret_checks(m: &MetricsReport, h: f64) -> (bool, bool, String) {
    let bound = m.bounds.regret(m.mode);
    let mut worst = f64::NEG_INFINITY;
    for (r, t) in m.regret_curve.iter().zip(&m.times) {
        worst = worst.max(r - (bound * BOUND_SLACK + C_SLACK * h * t));
    }
    let within = worst <= 0.0;
    let peak = m.regret_curve.iter().fold(0.0_f64, |p, r| p.max(r.abs()));
    let end = m.times.len() - 1;
    let q3 = m.index_at(0.75 * m.times[end]);
    let increase = m.regret_curve[end] - m.regret_curve[q3];
    let flat = increase < FLATTEN_FRAC * peak;
    (
        within,
        flat,
        format!(
            "max R {:.3} vs bound {:.3}, final R {:.3}, last-quarter change {:.3} (limit {:.3})",
            m.regret_curve.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            bound,
            m.final_regret(),
            increase,
            FLATTEN_FRAC * peak
        ),
    )
}

fn fit_checks(m: &MetricsReport, h: f64) -> (bool, bool, String) {
    let bounds = m.bounds.fit(m.mode);
    let within = m
        .fit_curve
        .iter()
        .zip(bounds)
        .zip(&m.times)
        .all(|((f, b), t)| *f <= b * BOUND_SLACK + C_SLACK * h * t);
    let end = m.times.len() - 1;
    let early = m.fit_rate(m.index_at(3.0));
    let late = m.fit_rate(end);
    let decays = late <= FIT_DECAY * early;
    let peak = m.fit_curve.iter().cloned().fold(0.0, f64::max);
    let last_positive = m
        .fit_curve
        .iter()
        .rposition(|f| *f > 0.0)
        .map_or(0.0, |k| m.times[k]);
    (
        within,
        decays,
        format!(
            "max F {:.3e} (last positive at t = {:.3}), F/T {:.3e} at T=3 and {:.3e} at T={}, fit bound at T {:.3}",
            peak, last_positive, early, late, m.times[end], bounds[end]
        ),
    )
}

fn criterion_3(fx: &Fixture) -> Verdict {
    let c = calibrated_slack(fx);
    let (within, flat, detail) = regret_checks(&fx.continuous.metrics, fx.scenario.step);
    verdict(
        within && flat && c <= C_SLACK,
        format!("{detail}; slack constant calibrated {c:.1} <= pinned {C_SLACK}"),
    )
}

fn criterion_4(fx: &Fixture) -> Verdict {
    let (within, decays, detail) = fit_checks(&fx.continuous.metrics, fx.scenario.step);
    verdict(within && decays, detail)
}

fn criterion_5(fx: &Fixture) -> Verdict {
    let h = fx.scenario.step;
    let (r_within, flat, r_detail) = regret_checks(&fx.event.metrics, h);
    let (f_within, decays, f_detail) = fit_checks(&fx.event.metrics, h);
    verdict(r_within && flat && f_within && decays, format!("{r_detail}; {f_detail}"))
}

fn criterion_6(fx: &Fixture) -> Verdict {
    let traj = &fx.event.trajectory;
    let steps = traj.steps();
    let h = traj.step;
    let zeno = &fx.event.metrics.zeno;
    let sparse = zeno.iter().all(|z| z.count < steps && !z.saturated);
    let gaps = zeno.iter().all(|z| z.min_gap.is_none_or(|g| g >= h));
    let ratio = traj.broadcasts() as f64 / fx.continuous.trajectory.broadcasts() as f64;
    let saves = ratio <= BROADCAST_BAR;
    verdict(
        sparse && gaps && saves,
        format!(
            "trigger counts {:?} of {steps} steps, min gaps {:?}, broadcasts {} vs {} (ratio {:.3}, bar {BROADCAST_BAR})",
            zeno.iter().map(|z| z.count).collect::<Vec<_>>(),
            zeno.iter().map(|z| z.min_gap.unwrap_or(f64::NAN)).collect::<Vec<_>>(),
            traj.broadcasts(),
            fx.continuous.trajectory.broadcasts(),
            ratio
        ),
    )
}

fn static_term(center: f64, coef: f64, offset: f64, lo: f64, hi: f64) -> ProgramTerm {
    ProgramTerm {
        cost: Arc::new(QuadraticCost::fixed(vec![1.0], vec![center]).unwrap()),
        constraint: Arc::new(AffineConstraint::fixed(vec![(vec![coef], offset)]).unwrap()),
        output_box: BoxSet::uniform(1, lo, hi).unwrap(),
    }
}

fn varying_term(w: f64, freq: f64, cf: f64, offset: f64) -> ProgramTerm {
    ProgramTerm {
        cost: Arc::new(QuadraticCost::new(vec![w], vec![1.0], vec![0.5], vec![freq]).unwrap()),
        constraint: Arc::new(
            AffineConstraint::new(
                1,
                vec![AffineRow {
                    coef_base: vec![1.0],
                    coef_amplitude: vec![0.2],
                    coef_frequency: vec![cf],
                    offset,
                }],
            )
            .unwrap(),
        ),
        output_box: BoxSet::uniform(1, 0.4, 0.6).unwrap(),
    }
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    let instances: Vec<(&str, SampledProgram)> = vec![
        ("clamped scalar", SampledProgram::new(vec![static_term(3.0, 1.0, 2.0, 0.0, 4.0)], vec![0.0, 1.0]).unwrap()),
        ("inactive scalar", SampledProgram::new(vec![static_term(1.0, 1.0, 2.0, 0.0, 4.0)], vec![0.0, 1.0]).unwrap()),
        (
            "coupled pair",
            SampledProgram::new(
                vec![static_term(3.0, 1.0, 1.0, 0.0, 4.0), static_term(3.0, 1.0, 1.0, 0.0, 4.0)],
                vec![0.0, 1.0],
            )
            .unwrap(),
        ),
        (
            "time-varying triple",
            SampledProgram::on_grid(
                vec![varying_term(1.0, 1.0, 2.0, 0.5), varying_term(2.0, 2.0, 3.0, 0.55), varying_term(3.0, 3.0, 5.0, 0.6)],
                3.0,
                31,
            )
            .unwrap(),
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, prog) in &instances {
        let grid = grid_oracle(prog, ORACLE_RESOLUTION).unwrap();
        let sol = solve_clairvoyant(prog, 200_000, 0).unwrap();
        let gap = prog.resolution_gap(ORACLE_RESOLUTION);
        let diff = (sol.objective - prog.objective(&grid)).abs();
        let ok = diff <= gap && prog.is_feasible(&sol.y_star, saddleflow::oracle::FEASIBILITY_TOL);
        pass &= ok;
        parts.push(format!("{name} |diff| {diff:.2e} <= {gap:.2e}: {ok}"));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(120);
    verdict(pass, format!("{}; {elapsed:.2?}", parts.join(", ")))
}

fn random_cost(rng: &mut ChaCha8Rng, d: usize) -> QuadraticCost {
    let mut r = |lo: f64, hi: f64| (0..d).map(|_| rng.random_range(lo..hi)).collect::<Vec<_>>();
    QuadraticCost::new(r(0.0, 3.0), r(-2.0, 3.0), r(-1.5, 1.5), r(0.0, 4.0)).unwrap()
}

fn random_constraint(rng: &mut ChaCha8Rng, d: usize, q: usize) -> AffineConstraint {
    let rows = (0..q)
        .map(|_| AffineRow {
            coef_base: (0..d).map(|_| rng.random_range(-2.0..2.0)).collect(),
            coef_amplitude: (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(),
            coef_frequency: (0..d).map(|_| rng.random_range(0.0..25.0)).collect(),
            offset: rng.random_range(-5.0..5.0),
        })
        .collect();
    AffineConstraint::new(d, rows).unwrap()
}

fn random_box(rng: &mut ChaCha8Rng, d: usize) -> BoxSet {
    let lo = DVector::from_fn(d, |_, _| rng.random_range(-5.0..0.0));
    let hi = DVector::from_fn(d, |k, _| lo[k] + rng.random_range(0.0..6.0));
    BoxSet::new(lo, hi).unwrap()
}

fn point_in(rng: &mut ChaCha8Rng, s: &BoxSet) -> DVector<f64> {
    DVector::from_fn(s.dim(), |k, _| match rng.random_range(0..4) {
        0 => s.lower()[k],
        1 => s.upper()[k],
        _ => rng.random_range(s.lower()[k]..=s.upper()[k]),
    })
}

fn criterion_8(fx: &Fixture) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut notes = Vec::new();

    let mut projection_violations = 0;
    for _ in 0..PROPERTY_DRAWS {
        let d = rng.random_range(1..6);
        let s = random_box(&mut rng, d);
        let x = point_in(&mut rng, &s);
        let y = point_in(&mut rng, &s);
        let v = DVector::from_fn(d, |_, _| rng.random_range(-10.0..10.0));
        let pv = s.dir_project(&x, &v).unwrap();
        if (&x - &y).dot(&pv) > (&x - &y).dot(&v) + 1e-12 {
            projection_violations += 1;
        }
    }
    notes.push(format!("projection inequality violations {projection_violations}"));

    let mut convexity_violations = 0;
    for _ in 0..PROPERTY_DRAWS {
        let d = rng.random_range(1..4);
        let f = random_cost(&mut rng, d);
        let g = random_constraint(&mut rng, d, 2);
        let t = rng.random_range(0.0..30.0);
        let y = DVector::from_fn(d, |_, _| rng.random_range(-1.0..5.0));
        let z = DVector::from_fn(d, |_, _| rng.random_range(-1.0..5.0));
        let (fy, grad) = f.value_and_subgrad(t, &y);
        if f.value(t, &z) < fy + grad.dot(&(&z - &y)) - 1e-9 {
            convexity_violations += 1;
        }
        let (gy, jac) = g.value_and_jacobian(t, &y);
        let lin = gy + &jac * (&z - &y);
        let gz = g.value(t, &z);
        convexity_violations += (0..2).filter(|&j| gz[j] < lin[j] - 1e-9).count();
    }
    notes.push(format!("convexity violations {convexity_violations}"));

    let mut sign_violations = 0;
    let mut box_violations = 0;
    for out in [&fx.continuous, &fx.event, &fx.continuous_half] {
        let traj = &out.trajectory;
        sign_violations += traj.multipliers.iter().flatten().filter(|m| **m < 0.0).count();
        let scenario = if traj.step == fx.scenario.step { &fx.scenario } else { &fx.half };
        for row in &traj.outputs {
            let mut offset = 0;
            for agent in &scenario.agents {
                let d = agent.output_box.dim();
                let y = DVector::from_row_slice(&row[offset..offset + d]);
                if agent.output_box.distance(&y) != 0.0 {
                    box_violations += 1;
                }
                offset += d;
            }
        }
    }
    notes.push(format!("negative multipliers {sign_violations}, out-of-box outputs {box_violations}"));

    let mut bound_violations = 0;
    let horizon = fx.scenario.horizon;
    for _ in 0..PROPERTY_DRAWS {
        let (f, g, s): (Arc<dyn CostFamily>, Arc<dyn ConstraintFamily>, BoxSet) = if rng.random_bool(0.5) {
            let a = &fx.scenario.agents[rng.random_range(0..fx.scenario.agent_count())];
            (a.cost.clone(), a.constraint.clone(), a.output_box.clone())
        } else {
            let d = rng.random_range(1..4);
            (
                Arc::new(random_cost(&mut rng, d)),
                Arc::new(random_constraint(&mut rng, d, 2)),
                random_box(&mut rng, d),
            )
        };
        let b = compute_bounds(f.as_ref(), g.as_ref(), &s, horizon).unwrap();
        let y = point_in(&mut rng, &s);
        let t = rng.random_range(0.0..=horizon);
        if f.value(t, &y).abs() > b.k_f || g.value(t, &y).norm() > b.k_g {
            bound_violations += 1;
        }
    }
    notes.push(format!("bound violations {bound_violations}"));

    let scenario_dir = common::shipped_path().parent().unwrap().to_path_buf();
    let mut graph_failures = Vec::new();
    let mut shipped = 0;
    for entry in std::fs::read_dir(&scenario_dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            shipped += 1;
            match load_scenario(&path) {
                Ok(s) if s.graph.is_symmetric() && s.graph.is_connected() => {}
                _ => graph_failures.push(path.display().to_string()),
            }
        }
    }
    notes.push(format!("{shipped} shipped scenarios, graph failures {graph_failures:?}"));

    verdict(
        projection_violations == 0
            && convexity_violations == 0
            && sign_violations == 0
            && box_violations == 0
            && bound_violations == 0
            && graph_failures.is_empty()
            && shipped > 0,
        notes.join(", "),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let fx = Fixture::build();
    println!("fixture built in {:.2?}", start.elapsed());
    let suite: [(&str, Box<dyn Fn() -> Verdict + '_>); 8] = [
        ("1 gain reproduction", Box::new(|| criterion_1(&fx))),
        ("2 closed-loop output identity", Box::new(|| criterion_2(&fx))),
        ("3 continuous regret bound", Box::new(|| criterion_3(&fx))),
        ("4 continuous fit bound", Box::new(|| criterion_4(&fx))),
        ("5 event-triggered bounds", Box::new(|| criterion_5(&fx))),
        ("6 zeno and communication savings", Box::new(|| criterion_6(&fx))),
        ("7 oracle equivalence", Box::new(criterion_7)),
        ("8 property suites", Box::new(|| criterion_8(&fx))),
    ];
    let mut failed = 0;
    for (name, check) in suite.iter() {
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!("criterion {name}: {} | {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("{} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
