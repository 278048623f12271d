//! The acceptance criteria, one line of output each. Runs without the test
//! harness so every line prints; the process fails if any criterion fails.

mod common;

use std::path::Path;
use std::time::Instant;

use sibling_td::approx::{greedy_policy, GreedyMode};
use sibling_td::bmdp::exact_value;
use sibling_td::envs::{dt_counterexample, three_state, two_state, AcrobotEnv};
use sibling_td::experiment::output::TRACE_FILE;
use sibling_td::experiment::presets::{
    acrobot_energy_drift, acrobot_reward_range, acrobot_rollouts, PROP1_GRID, SEC4_4_ALPHAS,
};
use sibling_td::experiment::{reproduce, ReproduceSummary, RunOverrides, RunStatus};
use sibling_td::learners::{run_learner, Behavior, LearnerConfig, RunSpec, StepSchedule, Variant};
use sibling_td::oracle::{
    counterexample_std_limit, dt_limit_ls, std_limit_ls, td_limit_ls, theorem1_bound_check, two_state_closed_form,
    PolicyAnalysis,
};

type Verdict = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Verdict {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn run_figure(figure: &str, out: &Path) -> Result<ReproduceSummary, String> {
    let s = reproduce(figure, out, RunOverrides::default()).map_err(|e| e.to_string())?;
    for r in &s.runs {
        if r.manifest.status != RunStatus::Completed {
            return Err(format!("{figure}/{} ended {:?}: {:?}", r.name, r.manifest.status, r.manifest.message));
        }
    }
    Ok(s)
}

fn final_w(s: &ReproduceSummary, run: &str) -> Result<Vec<f64>, String> {
    s.run(run).map(|m| m.final_weights.clone()).ok_or_else(|| format!("{} has no run {run}", s.figure))
}

fn failed_checks(s: &ReproduceSummary) -> Vec<String> {
    s.checks.iter().filter(|c| !c.pass).map(|c| format!("{} ({})", c.name, c.detail)).collect()
}

fn rel_within(x: f64, target: f64, rel: f64) -> bool {
    (x - target).abs() <= rel * target.abs()
}

fn exact_two_state() -> Verdict {
    let env = two_state();
    let j = exact_value(&env.bmdp, &env.optimal, 0.5).map_err(|e| e.to_string())?;
    let (a, b) = two_state_closed_form(0.5).map_err(|e| e.to_string())?;
    let ok = [j[0] - 0.64, j[1] - 1.44, a - 0.64, b - 1.44].iter().all(|d| d.abs() <= 1e-10);
    ensure(ok, format!("exact J = ({:.12}, {:.12}), closed form ({a:.12}, {b:.12})", j[0], j[1]))
}

fn td_limit_over_seeds() -> Verdict {
    let env = two_state();
    let cfg = LearnerConfig {
        lambda: 1.0,
        alpha: env.alpha,
        schedule: StepSchedule::Harmonic { a: 1.0, b: 100.0 },
        variant: Variant::Td,
    };
    let mut ends = Vec::new();
    for seed in 1..=5 {
        let spec = RunSpec::new(cfg, Behavior::Fixed(env.optimal.clone()), vec![-10.0], 200_000, seed);
        ends.push(run_learner(&env.bmdp, &env.features, &spec).map_err(|e| e.to_string())?.final_state.w[0]);
    }
    let ok = ends.iter().all(|w| (w - 0.88).abs() <= 0.05);
    ensure(ok, format!("final w over seeds 1..5: {ends:.4?}"))
}

fn figure2(out: &Path) -> Verdict {
    let s = run_figure("fig2", out)?;
    let trace = s.runs.iter().find(|r| r.name == "td").map(|r| r.dir.join(TRACE_FILE)).ok_or("no td run")?;
    let mut reader = csv::Reader::from_path(&trace).map_err(|e| e.to_string())?;
    let mut w = Vec::new();
    let mut regions = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        w.push(rec[1].parse::<f64>().map_err(|e| e.to_string())?);
        regions.push(rec[4].to_string());
    }
    let crossed = w[0] < 0.0 && regions[0] == "optimal" && w.iter().zip(&regions).any(|(x, r)| *x > 0.0 && r == "suboptimal");
    let end = *w.last().ok_or("empty trace")?;
    let bad = failed_checks(&s);
    ensure(
        crossed && (end - 0.88).abs() <= 0.05 && bad.is_empty(),
        format!("w from {} to {end:.4}, crossed into the suboptimal region: {crossed}; failed checks {bad:?}", w[0]),
    )
}

fn figure10(s: &ReproduceSummary) -> Verdict {
    let env = two_state();
    let mode = GreedyMode::SuccessorPreference;
    let oracle = std_limit_ls(&env, &env.optimal, env.alpha).map_err(|e| e.to_string())?[0];
    let w = final_w(s, "std-online")?[0];
    let mut ok = w < 0.0 && rel_within(w, oracle, 0.1);
    let mut grid = Vec::new();
    for w0 in PROP1_GRID {
        let w_inf = final_w(s, &format!("std-frozen-w0={w0}"))?[0];
        let j = |x: f64| {
            greedy_policy(&env.bmdp, &[x], &env.features, mode, env.alpha)
                .and_then(|p| exact_value(&env.bmdp, &p, env.alpha))
                .map_err(|e| e.to_string())
        };
        let (before, after) = (j(w0)?, j(w_inf)?);
        ok &= after.iter().zip(&before).all(|(a, b)| a >= b);
        grid.push(format!("{w0}->{w_inf:.3}"));
    }
    let reference = s.references.join("; ");
    ensure(ok, format!("online w = {w:.5} (oracle {oracle:.5}); grid {}; {reference}", grid.join(", ")))
}

fn three_state_criterion(out: &Path) -> Verdict {
    let env = three_state();
    let j = exact_value(&env.bmdp, &env.optimal, env.alpha).map_err(|e| e.to_string())?;
    let exact_ok = j.iter().zip([12.16, 12.16, 12.96]).all(|(a, b)| (a - b).abs() <= 0.005);
    let s = run_figure("fig4", out)?;
    let w = final_w(&s, "td")?;
    let oracle = td_limit_ls(&env, &env.optimal, env.alpha).map_err(|e| e.to_string())?;
    let quadrant = w.iter().all(|&x| x > 0.0);
    let near = w.iter().zip(&oracle).all(|(a, b)| rel_within(*a, *b, 0.1));
    ensure(
        exact_ok && quadrant && near,
        format!("J = {j:.4?}; TD w = {w:.4?}, oracle {oracle:.4?}; {}", s.references.join("; ")),
    )
}

fn sign_separation(s: &ReproduceSummary) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in SEC4_4_ALPHAS {
        let env = dt_counterexample(alpha);
        let an = PolicyAnalysis::new(&env, &env.optimal, alpha).map_err(|e| e.to_string())?;
        let std_l = std_limit_ls(&env, &env.optimal, alpha).map_err(|e| e.to_string())?[0];
        let dt_l = dt_limit_ls(&env, &env.optimal, alpha).map_err(|e| e.to_string())?[0];
        let brute = an.dt_objective().brute_force_minimize().map_err(|e| e.to_string())?;
        let st = final_w(s, &format!("std-alpha={alpha}"))?[0];
        let dt = final_w(s, &format!("dt-alpha={alpha}"))?[0];
        ok &= dt < 0.0 && rel_within(dt, dt_l, 0.05);
        ok &= st > 0.0 && rel_within(st, std_l, 0.05);
        ok &= (std_l - counterexample_std_limit(alpha)).abs() <= 1e-6;
        ok &= dt_l < 0.0 && (dt_l - brute).abs() <= 1e-8;
        parts.push(format!("α={alpha}: STD {st:.4} ({std_l:.4}), DT {dt:.4} ({dt_l:.4}, brute {brute:.10})"));
    }
    ensure(ok, parts.join("; "))
}

fn bound_criterion(fig10: &ReproduceSummary, sec4_4: &ReproduceSummary) -> Verdict {
    let mode = GreedyMode::SuccessorPreference;
    let two = two_state();
    let mut runs = Vec::new();
    let w = final_w(fig10, "std-online")?;
    let p = greedy_policy(&two.bmdp, &w, &two.features, mode, two.alpha).map_err(|e| e.to_string())?;
    runs.push(("std-online".to_string(), two.clone(), p, w));
    for w0 in PROP1_GRID {
        let name = format!("std-frozen-w0={w0}");
        let p = greedy_policy(&two.bmdp, &[w0], &two.features, mode, two.alpha).map_err(|e| e.to_string())?;
        runs.push((name.clone(), two.clone(), p, final_w(fig10, &name)?));
    }
    for alpha in SEC4_4_ALPHAS {
        let env = dt_counterexample(alpha);
        let name = format!("std-alpha={alpha}");
        let w = final_w(sec4_4, &name)?;
        let p = env.optimal.clone();
        runs.push((name, env, p, w));
    }
    let mut ok = true;
    let mut worst = f64::INFINITY;
    for (name, env, policy, w) in &runs {
        let b = theorem1_bound_check(env, policy, env.alpha, 1.0, w, 1e-6).map_err(|e| format!("{name}: {e}"))?;
        ok &= b.pass;
        worst = worst.min(b.margin);
    }
    ensure(ok, format!("{} STD endpoints checked, smallest margin {worst:.3e}", runs.len()))
}

fn equivalence() -> Verdict {
    let mut states = 0;
    for seed in 0..100u64 {
        let case = common::random_case(1000 + seed, 6);
        states += case.env.bmdp.n_states();
        let lambda = [0.0, 0.5, 0.9, 1.0][(seed % 4) as usize];
        common::check_equivalence(&case, lambda, 1000).map_err(|e| format!("case {seed}: {e}"))?;
    }
    Ok(format!("100 random systems ({states} states in total), 1000 steps each, weights bit-identical"))
}

fn acrobot(s: &ReproduceSummary) -> Verdict {
    let env = AcrobotEnv::default();
    let td = final_w(s, "td")?[0];
    let st = final_w(s, "std")?[0];
    let (hand, conv) = acrobot_rollouts(&env, 99).map_err(|e| e.to_string())?;
    let (lo, hi) = acrobot_reward_range(&env, 20_000).map_err(|e| e.to_string())?;
    let drift = acrobot_energy_drift(10.0);
    let ok = td > 0.0 && st < 0.0 && hand.mean > 10.0 * conv.mean && lo >= 0.0 && hi <= 4.0 && drift < 1e-3;
    ensure(
        ok && env.alpha == 0.95,
        format!(
            "TD w = {td:.3}, STD w = {st:.3}; rollouts {:.3} vs {:.3}; rewards in [{lo:.3}, {hi:.3}]; drift {drift:.2e}; {}",
            hand.mean,
            conv.mean,
            s.references.join("; ")
        ),
    )
}

fn invariants() -> Verdict {
    let cases = 128u64;
    for seed in 0..cases {
        let case = common::random_case(50_000 + seed, 6);
        let w = common::random_weights(&case, seed);
        let tag = |e: String| format!("case {seed}: {e}");
        common::check_distributions(&case).map_err(tag)?;
        common::check_decomposition(&case, &w).map_err(tag)?;
        common::check_eta(&case).map_err(tag)?;
        common::check_trace_recurrence(&case, 0.8, 200).map_err(tag)?;
        common::check_gradients(&case, &w).map_err(tag)?;
    }
    Ok(format!("normalization, decomposition, η identity, trace recurrences and gradients on {cases} random systems"))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let out = tmp.path();
    let mut results: Vec<(u32, &str, Verdict, f64)> = Vec::new();
    let mut timed = |id: u32, title: &'static str, f: &mut dyn FnMut() -> Verdict| {
        let t = Instant::now();
        let v = f();
        let secs = t.elapsed().as_secs_f64();
        let (tag, detail) = match &v {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {id:>2} [{tag}] {title} ({secs:.1} s): {detail}");
        results.push((id, title, v, secs));
    };

    timed(1, "two-state exact values", &mut exact_two_state);
    timed(2, "TD(1) limit over five seeds", &mut td_limit_over_seeds);
    timed(3, "TD degradation from the optimal region", &mut || figure2(out));
    let mut fig10 = Err("not run".to_string());
    timed(4, "STD improvement and the greedy-frozen grid", &mut || {
        fig10 = run_figure("fig10", out);
        figure10(fig10.as_ref()?)
    });
    timed(5, "three-state values and TD endpoint", &mut || three_state_criterion(out));
    let mut sec4_4 = Err("not run".to_string());
    timed(6, "STD/DT sign separation", &mut || {
        sec4_4 = run_figure("sec4_4", out);
        sign_separation(sec4_4.as_ref()?)
    });
    timed(7, "error bound at STD endpoints", &mut || bound_criterion(fig10.as_ref()?, sec4_4.as_ref()?));
    timed(8, "STD equals TD on the sibling-pair chain", &mut equivalence);
    timed(9, "acrobot signs, rollouts, rewards, energy", &mut || acrobot(&run_figure("acrobot", out)?));
    timed(10, "randomized invariants", &mut invariants);

    let failed: Vec<u32> = results.iter().filter(|r| r.2.is_err()).map(|r| r.0).collect();
    let total: f64 = results.iter().map(|r| r.3).sum();
    println!("{} of {} criteria passed in {total:.0} s", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
