//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use rsdesign::adaptive::{initialize, Mode, Response, RunPlan};
use rsdesign::cli::{fig1_config, fig2_config, table1_config, Fig2Design, FIG1_SEED, FIG2_SEED, TABLE1_SEED};
use rsdesign::designs::{builtin_design, BuiltinName, Criterion, CriterionKind};
use rsdesign::error_models::ErrorModel;
use rsdesign::information::{relevant_info_eta, SupportGroup};
use rsdesign::estimation::mle_location;
use rsdesign::montecarlo::{
    compare_var_eff, ordering_check, simulate, DesignSpec, ScenarioConfig, SimulationRun, Strategy, SCHEMA_VERSION,
};
use rsdesign::rng::stream;

const R: usize = 2000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn near(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

/// Fixed-design runs shared with the ordering suite.
#[derive(Default)]
struct FixedRuns(Vec<(String, SimulationRun)>);

fn contrast_of(run: &SimulationRun) -> (f64, f64, f64) {
    let c = run.report.contrast.as_ref().expect("contrast configured");
    (c.mean_hinv, c.mean_hinv_se, c.lb_eff)
}

fn criterion_1() -> Outcome {
    let model = ErrorModel::hetero_normal_gamma(0.25, 0.25).unwrap();
    let design = builtin_design(BuiltinName::Balanced2, 36).unwrap().deterministic;
    let responses = |a: &[(f64, f64)]| -> Vec<Response> {
        a.iter()
            .map(|&(y, p)| Response {
                response: y,
                precision: Some(p),
            })
            .collect()
    };
    let first = responses(&[(0.3, 0.8), (-0.4, 1.1), (1.2, 1.8), (0.9, 2.2)]);
    let mut checks = Vec::new();
    for mode in [Mode::Rrsd, Mode::Drsd] {
        let mut state = initialize(design.clone(), model, 4, mode, 1).unwrap();
        let alloc = state.pending_allocations().unwrap().to_vec();
        checks.push(alloc == [0, 0, 1, 1]);
        state.record_run(&first).unwrap();
        let u = &state.u_current;
        checks.push(near(u[0], -1.05, 1e-12) && near(u[1], 1.05, 1e-12));
        match (mode, &state.pending.as_ref().unwrap().plan) {
            (Mode::Rrsd, RunPlan::Randomized { size, probs, capped }) => {
                checks.push(*size == 3 && !capped && near(probs[0], 0.85, 1e-12) && near(probs[1], 0.15, 1e-12));
            }
            (Mode::Drsd, RunPlan::Deterministic { index, .. }) => checks.push(*index == 0),
            _ => checks.push(false),
        }
    }
    outcome(
        checks.iter().all(|&c| c),
        "u = (-1.05, 1.05), N = 3, P = (0.85, 0.15), DRSD picks treatment 1".into(),
    )
}

fn criterion_2(fixed: &mut FixedRuns) -> Outcome {
    let quarter = simulate(&fig1_config(0.25, Strategy::Fixed, 36, FIG1_SEED, R).unwrap()).unwrap();
    let eighth = simulate(&fig1_config(0.125, Strategy::Fixed, 36, FIG1_SEED, R).unwrap()).unwrap();
    let (m, se, _) = contrast_of(&quarter);
    let (_, _, eff) = contrast_of(&eighth);
    let target = 0.25 * (2.0 / (0.25 * 18.0 - 1.0));
    let pass = (m - target).abs() <= 3.0 * se && near(eff, 0.5556, 0.03);
    fixed.0.push(("heteroscedastic 1/4 fixed".into(), quarter));
    fixed.0.push(("heteroscedastic 1/8 fixed".into(), eighth));
    outcome(
        pass,
        format!("c'E[H^-1]c = {m:.6} ± {se:.6} (target {target:.6}); lb_eff(1/8) = {eff:.4} (target 0.5556 ± 0.03)"),
    )
}

fn criterion_3() -> Outcome {
    let effs: Vec<f64> = [Strategy::Fixed, Strategy::Rrsd, Strategy::Drsd]
        .iter()
        .map(|&s| contrast_of(&simulate(&fig1_config(0.125, s, 36, FIG1_SEED, R).unwrap()).unwrap()).2)
        .collect();
    let targets = [0.56, 0.71, 0.76];
    let levels = effs.iter().zip(targets).all(|(e, t)| near(*e, t, 0.04));
    let ordered = effs[2] > effs[1] && effs[1] > effs[0];
    outcome(
        levels && ordered,
        format!(
            "lb_eff fixed {:.4}, rrsd {:.4}, drsd {:.4} (targets 0.56, 0.71, 0.76 ± 0.04, strictly increasing)",
            effs[0], effs[1], effs[2]
        ),
    )
}

fn criterion_4(fixed: &mut FixedRuns) -> Outcome {
    let targets = [(9.2, 10.1), (8.8, 9.4), (8.3, 8.5)];
    let mut pass = true;
    let mut parts = Vec::new();
    let mut crlb = f64::NAN;
    for (s, (t_bound, t_var)) in [Strategy::Fixed, Strategy::Rrsd, Strategy::Drsd].into_iter().zip(targets) {
        let run = simulate(&table1_config(s, TABLE1_SEED, R).unwrap()).unwrap();
        let n = run.report.n as f64;
        let bound = n * run.report.mean_hinv[(0, 0)];
        let var = n * run.report.var_mle[(0, 0)];
        crlb = n * run.report.crlb[(0, 0)];
        pass &= near(bound, t_bound, 0.5) && near(var, t_var, 0.8);
        parts.push(format!("{} {bound:.2}/{var:.2}", s.label()));
        if s == Strategy::Fixed {
            fixed.0.push(("cauchy factorial fixed".into(), run));
        }
    }
    pass &= near(crlb, 8.0, 1e-10);
    outcome(pass, format!("n*E[H^-1]/n*Var: {}; n*CRLB = {crlb:.12}", parts.join(", ")))
}

fn criterion_5(fixed: &mut FixedRuns) -> Outcome {
    let g = Criterion::new(CriterionKind::G);
    let det = simulate(&fig2_config(Fig2Design::Deterministic, 8, FIG2_SEED, R).unwrap()).unwrap();
    let adapt = simulate(&fig2_config(Fig2Design::AdaptiveRandomized, 8, FIG2_SEED, R).unwrap()).unwrap();
    let rand = simulate(&fig2_config(Fig2Design::Randomized, 8, FIG2_SEED, R).unwrap()).unwrap();
    let adapt_det = simulate(&fig2_config(Fig2Design::AdaptiveDeterministic, 8, FIG2_SEED, R).unwrap()).unwrap();
    let eff = |r: &SimulationRun| r.report.criterion.as_ref().unwrap().var_eff;
    let (e_det, e_adapt) = (eff(&det), eff(&adapt));
    let mut pass = near(e_det, 0.24, 0.05) && near(e_adapt, 0.35, 0.05);
    let mut detail = format!(
        "n=8 Var-EFF_G xi_G {e_det:.3}, DRSD from pi_G {e_adapt:.3} (recorded: pi_G {:.3}, DRSD from xi_G {:.3})",
        eff(&rand),
        eff(&adapt_det)
    );
    fixed.0.push(("gnd xi_G n=8".into(), det));
    fixed.0.push(("gnd pi_G n=8".into(), rand));

    for n in [13, 25, 49, 100] {
        for (init, adaptive) in [
            (Fig2Design::Deterministic, Fig2Design::AdaptiveDeterministic),
            (Fig2Design::Randomized, Fig2Design::AdaptiveRandomized),
        ] {
            let a = simulate(&fig2_config(adaptive, n, FIG2_SEED, R).unwrap()).unwrap();
            let b = simulate(&fig2_config(init, n, FIG2_SEED, R).unwrap()).unwrap();
            let cmp = compare_var_eff(&a, &b, g).unwrap();
            let ok = cmp.lower_95 > 0.0;
            pass &= ok;
            detail.push_str(&format!(
                "; n={n} {}-{} = {:.3} [{:.3}, {:.3}]",
                adaptive.label(),
                init.label(),
                cmp.difference,
                cmp.lower_95,
                cmp.upper_95
            ));
        }
    }
    outcome(pass, detail)
}

fn uv_config(strategy: Strategy) -> ScenarioConfig {
    ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        model: ErrorModel::cauchy(1.0).unwrap(),
        design: DesignSpec::Builtin {
            name: BuiltinName::Balanced2,
            randomized: false,
        },
        basis: None,
        strategy,
        theta_true: vec![1.0, 1.0],
        n: 200,
        n1: Some(20),
        first_run_counts: None,
        iterations: R,
        seed: 0x0077_0007,
        contrast: Some(vec![0.0, 1.0]),
        criterion: None,
        sweep: None,
    }
}

fn criterion_7(fixed: &mut FixedRuns) -> Outcome {
    let model = ErrorModel::cauchy(1.0).unwrap();
    let gamma2 = model.moment_table().gamma_alt.powi(2);
    let fixed_run = simulate(&uv_config(Strategy::Fixed)).unwrap();
    let rrsd_run = simulate(&uv_config(Strategy::Rrsd)).unwrap();
    let n = 200.0;
    let var_u = fixed_run.report.var_u[(0, 0)] / n;
    let var_v = fixed_run.report.var_v[(0, 0)] / n;
    let var_u_rrsd = rrsd_run.report.var_u[(0, 0)] / n;
    let target = gamma2 * 0.25;
    let pass = (var_u / target - 1.0).abs() <= 0.10
        && (var_v / target - 1.0).abs() <= 0.10
        && var_u_rrsd <= 0.5 * var_u;
    fixed.0.push(("cauchy balanced n=200 fixed".into(), fixed_run));
    outcome(
        pass,
        format!(
            "Var[u1]/n = {var_u:.4}, Var[v1]/n = {var_v:.4} (target {target:.4} ± 10%); rrsd Var[u1]/n = {var_u_rrsd:.4}"
        ),
    )
}

fn normal_config(strategy: Strategy) -> ScenarioConfig {
    ScenarioConfig {
        model: ErrorModel::generalized_normal(2.0, 1.0).unwrap(),
        seed: 0x0088_0008,
        n: 36,
        n1: Some(4),
        ..fig1_config(0.25, strategy, 36, 0, R).unwrap()
    }
}

fn criterion_8(fixed: &mut FixedRuns) -> Outcome {
    let mut failures: Vec<String> = Vec::new();
    let mut parts = Vec::new();
    for s in [Strategy::Fixed, Strategy::Rrsd, Strategy::Drsd] {
        let run = simulate(&normal_config(s)).unwrap();
        let c = run.report.contrast.as_ref().unwrap();
        if (c.lb_eff - 1.0).abs() > 3.0 * c.lb_eff_se + 1e-9 {
            failures.push(format!("{} lb_eff {}", s.label(), c.lb_eff));
        }
        if let Some(r) = run.records.iter().find(|r| r.counts != [18, 18]) {
            failures.push(format!("{} iteration {} ended with counts {:?}", s.label(), r.iteration, r.counts));
        }
        let spread = run.report.var_u.abs().max().max(run.report.var_v.abs().max());
        if spread > 1e-20 {
            failures.push(format!("{} u/v spread {spread:e}", s.label()));
        }
        parts.push(format!("{} {:.12}", s.label(), c.lb_eff));
        if s == Strategy::Fixed {
            fixed.0.push(("normal balanced fixed".into(), run));
        }
    }

    // Every randomized plan moves expected counts exactly onto the target weights.
    let model = ErrorModel::generalized_normal(2.0, 1.0).unwrap();
    let design = builtin_design(BuiltinName::Factorial22, 60).unwrap().deterministic;
    let w = design.weights.clone();
    let mut rng = stream(99, 0);
    let mut plans = 0;
    for mode in [Mode::Rrsd, Mode::Drsd] {
        let mut state = initialize(design.clone(), model, 8, mode, 5).unwrap();
        while let Some(alloc) = state.pending_allocations().map(<[usize]>::to_vec) {
            let responses: Vec<Response> = alloc
                .iter()
                .map(|_| Response {
                    response: rng.sample::<f64, _>(StandardNormal),
                    precision: None,
                })
                .collect();
            state.record_run(&responses).unwrap();
            let Some(p) = &state.pending else { break };
            let done = 60 - state.remaining;
            let counts: Vec<f64> = (0..4).map(|i| state.groups[i].count as f64).collect();
            match &p.plan {
                RunPlan::Randomized { size, probs, capped: false } => {
                    let total = (done + size) as f64;
                    let clamped = (0..4).any(|i| counts[i] > w[i] * total + 1e-9);
                    if !clamped {
                        plans += 1;
                        if !(0..4).all(|i| near(counts[i] + *size as f64 * probs[i], w[i] * total, 1e-9)) {
                            failures.push(format!("run {} plan {probs:?} x {size} from {counts:?}", p.run));
                        }
                    }
                }
                RunPlan::Deterministic { index, .. } => {
                    plans += 1;
                    let deficit: Vec<f64> = (0..4).map(|i| w[i] * done as f64 - counts[i]).collect();
                    let best = deficit.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    if !near(deficit[*index], best, 1e-9) {
                        failures.push(format!("run {} chose {index} with deficits {deficit:?}", p.run));
                    }
                }
                RunPlan::Randomized { capped: true, .. } => {}
            }
        }
        // A capped final RRSD run is a random draw from w, so only DRSD is
        // guaranteed to land exactly on n·w.
        let final_counts: Vec<usize> = state.groups.iter().map(|g| g.count).collect();
        if mode == Mode::Drsd && final_counts != [15; 4] {
            failures.push(format!("{mode:?} ended with counts {final_counts:?}"));
        }
    }
    let mut detail = format!("lb_eff {}; {plans} plans checked against w", parts.join(", "));
    if !failures.is_empty() {
        detail.push_str(&format!("; failures: {}", failures.join("; ")));
    }
    outcome(failures.is_empty(), detail)
}

fn criterion_6(fixed: &FixedRuns) -> Outcome {
    let mut rng = stream(0x0066_0006, 0);
    let mut pass = true;
    let mut worst = f64::INFINITY;
    let mut checked = 0;
    for (name, run) in &fixed.0 {
        let p = run.report.crlb.nrows();
        for _ in 0..20 {
            let raw: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
            let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            let c: Vec<f64> = raw.iter().map(|x| x / norm).collect();
            let chk = ordering_check(run, &c).unwrap();
            checked += 1;
            let z = |gap: f64, se: f64| if gap.abs() <= 1e-12 { 0.0 } else { gap / se };
            worst = worst
                .min(z(chk.variance_over_bound, chk.variance_over_bound_se))
                .min(z(chk.bound_over_crlb, chk.bound_over_crlb_se));
            if !chk.holds(3.0) {
                pass = false;
                eprintln!("  ordering violated in {name}: {chk:?}");
            }
        }
    }
    outcome(
        pass,
        format!("{checked} contrasts over {} fixed scenarios; smallest gap {worst:.2} se", fixed.0.len()),
    )
}

fn criterion_9() -> Outcome {
    let mut pass = true;
    let models = [
        ErrorModel::generalized_normal(2.0, 1.0).unwrap(),
        ErrorModel::generalized_normal(10.0, 1.0).unwrap(),
        ErrorModel::generalized_normal(3.5, 0.7).unwrap(),
        ErrorModel::cauchy(1.0).unwrap(),
        ErrorModel::cauchy(2.5).unwrap(),
    ];
    let mut worst_fd: f64 = 0.0;
    for m in &models {
        for k in -40..=40 {
            let e = 0.05 * k as f64 + 0.013;
            let step = 1e-5;
            let fd_score = -(m.log_density(e + step).unwrap() - m.log_density(e - step).unwrap()) / (2.0 * step);
            let fd_info = (m.score(e + step).unwrap() - m.score(e - step).unwrap()) / (2.0 * step);
            let s = m.score(e).unwrap();
            let i = m.observed_info(e).unwrap();
            worst_fd = worst_fd
                .max((fd_score - s).abs() / s.abs().max(1.0))
                .max((fd_info - i).abs() / i.abs().max(1.0));
        }
    }
    pass &= worst_fd <= 1e-6;

    let mut worst_shift: f64 = 0.0;
    let cauchy = ErrorModel::cauchy(1.0).unwrap();
    let ys = [0.3, -1.2, 0.8, 2.5, 0.1, -0.4];
    let eta = mle_location(&cauchy, &ys).unwrap();
    let base = relevant_info_eta(
        &cauchy,
        &SupportGroup {
            support_index: 0,
            responses: ys.to_vec(),
            precisions: None,
            eta_hat: eta,
        },
    )
    .unwrap();
    for shift in [-50.0, -3.3, 0.7, 12.0, 1e3] {
        let moved: Vec<f64> = ys.iter().map(|y| y + shift).collect();
        let eta = mle_location(&cauchy, &moved).unwrap();
        let h = relevant_info_eta(
            &cauchy,
            &SupportGroup {
                support_index: 0,
                responses: moved,
                precisions: None,
                eta_hat: eta,
            },
        )
        .unwrap();
        worst_shift = worst_shift.max((h / base - 1.0).abs());
    }
    pass &= worst_shift <= 1e-8;

    let cfg = ScenarioConfig {
        iterations: 200,
        ..table1_config(Strategy::Drsd, 42, 200).unwrap()
    };
    let reports: Vec<String> = [1, 2, 4]
        .iter()
        .map(|&t| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
            let r = pool.install(|| simulate(&cfg).unwrap().report);
            serde_json::to_string(&r).unwrap()
        })
        .collect();
    let identical = reports.windows(2).all(|w| w[0] == w[1]);
    pass &= identical;
    outcome(
        pass,
        format!(
            "finite-difference error {worst_fd:.2e}; shift invariance {worst_shift:.2e}; reports identical across 1/2/4 threads: {identical}"
        ),
    )
}

fn main() {
    let mut fixed = FixedRuns::default();
    let mut results: Vec<(u32, Outcome)> = Vec::new();
    let mut run = |id: u32, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        println!(
            "criterion {id}: {} ({:.1}s) {}",
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
        results.push((id, o));
    };
    run(1, &mut criterion_1);
    run(2, &mut || criterion_2(&mut fixed));
    run(3, &mut criterion_3);
    run(4, &mut || criterion_4(&mut fixed));
    run(5, &mut || criterion_5(&mut fixed));
    run(7, &mut || criterion_7(&mut fixed));
    run(8, &mut || criterion_8(&mut fixed));
    run(6, &mut || criterion_6(&fixed));
    run(9, &mut criterion_9);

    let failed: Vec<u32> = results.iter().filter(|(_, o)| !o.pass).map(|(id, _)| *id).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", results.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
