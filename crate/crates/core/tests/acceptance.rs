//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs without the libtest harness so the lines always show.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use pgs_core::baselines::approx_bounds;
use pgs_core::benchgen::{ClassSizeMode, Instance};
use pgs_core::harness::InstanceRow;
use pgs_core::metrics::strategy_reach;
use pgs_core::{
    brute_force_uniform, gen_drone, gen_random, is_winning, metric_ep, optimize, run_suite,
    strat_synth, verify_uniform, verify_winning, ActionId, Criterion, DroneModelSpec, InfoMode,
    Model, OptimizationTrace, OptimizerConfig, RandomModelSpec, ReachabilityGoal, StateId,
    StateSet, SuiteConfig, SynthesisOutput,
};

type Check = (&'static str, fn() -> Verdict);

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

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(2, |n| n.get())
}

fn random(n: usize, mode: ClassSizeMode, seed: u64) -> Instance {
    gen_random(&RandomModelSpec::new(n, mode, seed)).unwrap()
}

fn run(
    inst: &Instance,
    seed: u64,
    cfg: &OptimizerConfig,
) -> Option<(SynthesisOutput, OptimizationTrace)> {
    let synth = strat_synth(&inst.model, &inst.goal, seed).unwrap()?;
    let cfg = OptimizerConfig {
        seed,
        ..cfg.clone()
    };
    let trace = optimize(&inst.model, &inst.goal, &synth, &cfg);
    Some((synth, trace))
}

/// Flagged-uniform profiles are uniform on their reach and win from every
/// state the coalition confuses with the initial one.
fn soundness() -> Verdict {
    let mut jobs: Vec<(Instance, u64)> = Vec::new();
    for n in [10, 50] {
        for mode in [ClassSizeMode::Logarithmic, ClassSizeMode::Linear] {
            jobs.extend((0..50).map(|s| (random(n, mode, s), s)));
        }
    }
    for map in [3, 5] {
        jobs.extend((0..10).map(|s| (gen_drone(&DroneModelSpec::new(1, map, s)).unwrap(), s)));
    }
    let cfg = OptimizerConfig::default();
    let results: Vec<Option<bool>> = jobs
        .par_iter()
        .map(|(inst, seed)| {
            let (_, trace) = run(inst, *seed, &cfg)?;
            let (m, goal, p) = (&inst.model, &inst.goal, &trace.final_profile);
            if metric_ep(m, goal, p) != 0 {
                return None;
            }
            let uniform =
                verify_uniform(m, &goal.coalition, p, &strategy_reach(m, goal, p)).uniform;
            Some(uniform && is_winning(m, goal, p, InfoMode::Imperfect))
        })
        .collect();
    let flagged = results.iter().flatten().count();
    let sound = results.iter().flatten().filter(|&&ok| ok).count();
    verdict(
        jobs.len() >= 200 && sound == flagged,
        format!(
            "{} instances, {flagged} flagged uniform, {sound} sound",
            jobs.len()
        ),
    )
}

/// Backtracking over memoryless coalition choices, assigning only states
/// the current partial profile reaches.
fn oracle_realizable(m: &Model, goal: &ReachabilityGoal) -> bool {
    let targets = goal.targets(m);
    let mut choice: Vec<Option<Vec<ActionId>>> = vec![None; m.num_states()];
    search(m, goal, &targets, &mut choice)
}

fn successors(m: &Model, goal: &ReachabilityGoal, q: StateId, joint: &[ActionId]) -> Vec<StateId> {
    m.moves(q)
        .iter()
        .filter(|mv| {
            goal.coalition
                .iter()
                .zip(joint)
                .all(|(a, x)| mv.actions[a.index()] == *x)
        })
        .map(|mv| mv.to)
        .collect()
}

fn search(
    m: &Model,
    goal: &ReachabilityGoal,
    targets: &StateSet,
    choice: &mut Vec<Option<Vec<ActionId>>>,
) -> bool {
    let mut reached = vec![goal.initial_state];
    let mut seen = vec![false; m.num_states()];
    seen[goal.initial_state.index()] = true;
    let mut open = None;
    let mut i = 0;
    while i < reached.len() {
        let q = reached[i];
        i += 1;
        if targets.contains(q.index()) {
            continue;
        }
        match &choice[q.index()] {
            None => {
                open = Some(open.map_or(q, |o: StateId| o.min(q)));
            }
            Some(j) => {
                for s in successors(m, goal, q, j) {
                    if !seen[s.index()] {
                        seen[s.index()] = true;
                        reached.push(s);
                    }
                }
            }
        }
    }
    // peel assigned non-target states whose successors are all peeled,
    // open or targets; anything left sits on a target-free cycle
    let mut alive: Vec<StateId> = reached
        .iter()
        .copied()
        .filter(|q| !targets.contains(q.index()) && choice[q.index()].is_some())
        .collect();
    loop {
        let before = alive.len();
        let snapshot = alive.clone();
        alive.retain(|&q| {
            successors(m, goal, q, choice[q.index()].as_ref().unwrap())
                .iter()
                .any(|s| snapshot.contains(s))
        });
        if alive.len() == before {
            break;
        }
    }
    if !alive.is_empty() {
        return false;
    }
    let Some(q) = open else { return true };
    let options: Vec<Vec<ActionId>> = goal.coalition.iter().fold(vec![vec![]], |acc, &a| {
        acc.into_iter()
            .flat_map(|p| {
                m.protocol(a, q).iter().map(move |&x| {
                    let mut p = p.clone();
                    p.push(x);
                    p
                })
            })
            .collect()
    });
    for j in options {
        choice[q.index()] = Some(j);
        if search(m, goal, targets, choice) {
            choice[q.index()] = None;
            return true;
        }
    }
    choice[q.index()] = None;
    false
}

fn oracle_bracket() -> Verdict {
    let mut specs = Vec::new();
    for (n, mode) in [
        (10, ClassSizeMode::Logarithmic),
        (12, ClassSizeMode::Logarithmic),
        (12, ClassSizeMode::Linear),
    ] {
        for seed in 0..40 {
            specs.push(RandomModelSpec {
                actions: Some(3),
                ..RandomModelSpec::new(n, mode, seed)
            });
        }
    }
    let cfg = OptimizerConfig::default();
    let results: Vec<(Tally, Option<String>)> = specs
        .par_iter()
        .map(|spec| {
            let inst = gen_random(spec).unwrap();
            let (m, goal) = (&inst.model, &inst.goal);
            let tag = format!("n={} seed={}", spec.n_states, spec.seed);
            let mut tally = Tally::default();
            let mut bad = Vec::new();
            let oracle = oracle_realizable(m, goal);
            let synth = strat_synth(m, goal, spec.seed).unwrap();
            if synth.is_some() != oracle {
                bad.push("synthesis disagrees with enumeration");
            }
            tally.realizable = oracle;
            let brute =
                brute_force_uniform(m, goal, Some(Instant::now() + Duration::from_secs(90)))
                    .unwrap();
            let Some(brute) = brute.answer else {
                return (tally, Some(format!("{tag}: brute force undecided")));
            };
            tally.brute = brute;
            if let Some(synth) = synth {
                let trace = optimize(
                    m,
                    goal,
                    &synth,
                    &OptimizerConfig {
                        seed: spec.seed,
                        ..cfg.clone()
                    },
                );
                let p = &trace.final_profile;
                tally.uniform =
                    metric_ep(m, goal, p) == 0 && is_winning(m, goal, p, InfoMode::Imperfect);
                if tally.uniform && !brute {
                    bad.push("uniform optimizer result but brute force says no");
                }
            }
            let bounds = approx_bounds(m, goal).unwrap();
            tally.conclusive = bounds.conclusive();
            if bounds.lower && !brute {
                bad.push("lower bound holds but brute force says no");
            }
            if !bounds.upper && brute {
                bad.push("upper bound fails but brute force says yes");
            }
            (
                tally,
                (!bad.is_empty()).then(|| format!("{tag}: {}", bad.join(", "))),
            )
        })
        .collect();
    let count = |f: fn(&Tally) -> bool| results.iter().filter(|(t, _)| f(t)).count();
    let failures: Vec<&String> = results.iter().filter_map(|(_, f)| f.as_ref()).collect();
    verdict(
        failures.is_empty(),
        format!(
            "{} instances ({} realizable, {} optimizer-uniform, {} brute yes, {} approx conclusive), {} disagreements {}",
            specs.len(),
            count(|t| t.realizable),
            count(|t| t.uniform),
            count(|t| t.brute),
            count(|t| t.conclusive),
            failures.len(),
            failures.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("; ")
        ),
    )
}

#[derive(Default)]
struct Tally {
    realizable: bool,
    uniform: bool,
    brute: bool,
    conclusive: bool,
}

fn suite(name: &str) -> (Vec<InstanceRow>, Vec<pgs_core::harness::Aggregate>) {
    let cfg = SuiteConfig::load(&configs().join(format!("{name}.json"))).unwrap();
    let report = run_suite(&cfg, None, workers(), false).unwrap();
    (report.rows, report.aggregates)
}

fn ir_of(aggs: &[pgs_core::harness::Aggregate], config: &str) -> f64 {
    aggs.iter()
        .find(|a| a.config == config)
        .and_then(|a| a.ir)
        .unwrap_or(0.0)
}

fn row_errors(rows: &[InstanceRow]) -> usize {
    rows.iter().filter(|r| r.error.is_some()).count()
}

fn random_log() -> Verdict {
    let (rows, aggs) = suite("random-log");
    let small = ir_of(&aggs, "random-logarithmic-10");
    let large = ir_of(&aggs, "random-logarithmic-100");
    let slowest = rows
        .iter()
        .map(|r| r.gen_time + r.synth_time + r.opt_time.unwrap_or(0.0))
        .fold(0.0, f64::max);
    verdict(
        small >= 0.8 && large >= 0.8 && slowest < 90.0 && row_errors(&rows) == 0,
        format!(
            "%ir n=10 {:.0}%, n=100 {:.0}%, slowest instance {slowest:.3}s",
            small * 100.0,
            large * 100.0
        ),
    )
}

fn random_linear() -> Verdict {
    let (rows, aggs) = suite("random-linear");
    let done: Vec<&InstanceRow> = rows.iter().filter(|r| r.realizable).collect();
    let before: usize = done.iter().filter_map(|r| r.ep_before).sum();
    let after: usize = done.iter().filter_map(|r| r.ep_after).sum();
    let reduction = if before == 0 {
        0.0
    } else {
        1.0 - after as f64 / before as f64
    };
    let small = ir_of(&aggs, "random-linear-10");
    verdict(
        reduction >= 0.3 && small >= 0.05 && row_errors(&rows) == 0,
        format!(
            "#ep {before} -> {after} over {} realizable (reduction {:.0}%), %ir n=10 {:.0}%",
            done.len(),
            reduction * 100.0,
            small * 100.0
        ),
    )
}

fn drones() -> Verdict {
    let (rows, aggs) = suite("drones");
    let one = ir_of(&aggs, "drone-1-map5");
    let two = ir_of(&aggs, "drone-2-map3");
    verdict(
        one >= 0.4 && two >= 0.25 && row_errors(&rows) == 0,
        format!(
            "%ir 1 drone map 5 {:.0}%, 2 drones map 3 {:.0}%",
            one * 100.0,
            two * 100.0
        ),
    )
}

fn anytime() -> Verdict {
    let mut found = Vec::new();
    'outer: for n in [10, 50, 100] {
        for seed in 0..200 {
            let inst = random(n, ClassSizeMode::Logarithmic, seed);
            if let Some(synth) = strat_synth(&inst.model, &inst.goal, seed).unwrap() {
                found.push((inst, synth, seed));
                if found.len() == 50 {
                    break 'outer;
                }
            }
        }
    }
    let mut checked = 0;
    let mut ok = 0;
    for budget in [Duration::ZERO, Duration::from_millis(10)] {
        for (inst, synth, seed) in &found {
            let cfg = OptimizerConfig {
                optimize_budget: budget,
                seed: *seed,
                ..OptimizerConfig::default()
            };
            let trace = optimize(&inst.model, &inst.goal, synth, &cfg);
            checked += 1;
            let total = trace.final_profile.to_file().choices.len() == inst.model.num_states();
            if total
                && verify_winning(
                    &inst.model,
                    &inst.goal,
                    &trace.final_profile,
                    InfoMode::Perfect,
                )
                .winning
            {
                ok += 1;
            }
        }
    }
    verdict(
        found.len() == 50 && ok == checked,
        format!(
            "{} realizable instances, {ok}/{checked} runs winning",
            found.len()
        ),
    )
}

fn monotone() -> Verdict {
    let cfg = OptimizerConfig {
        record_events: true,
        ..OptimizerConfig::default()
    };
    let mut events = 0usize;
    let mut good = 0usize;
    let mut instances = 0usize;
    let mut seed = 0u64;
    while events < 1000 && seed < 5000 {
        let batch: Vec<(usize, usize)> = [
            (100, ClassSizeMode::Linear),
            (50, ClassSizeMode::Linear),
            (100, ClassSizeMode::Logarithmic),
        ]
        .par_iter()
        .flat_map_iter(|&(n, mode)| (seed..seed + 20).map(move |s| (n, mode, s)))
        .filter_map(|(n, mode, s)| {
            let inst = random(n, mode, s);
            let (_, trace) = run(&inst, s, &cfg)?;
            let ok = trace
                .events
                .iter()
                .filter(|e| {
                    let reach_strict =
                        e.reach_after.is_subset(&e.reach_before) && e.reach_after != e.reach_before;
                    let reach_weak = e.reach_after.is_subset(&e.reach_before);
                    let conf_strict = e.conflicts_after.is_subset(&e.conflicts_before)
                        && e.conflicts_after != e.conflicts_before;
                    let conf_weak = e.conflicts_after.is_subset(&e.conflicts_before);
                    match e.dominance.primary {
                        Criterion::Uniformity => conf_strict && reach_weak,
                        Criterion::Outcome => reach_strict && conf_weak,
                    }
                })
                .count();
            Some((trace.events.len(), ok))
        })
        .collect();
        instances += batch.len();
        events += batch.iter().map(|b| b.0).sum::<usize>();
        good += batch.iter().map(|b| b.1).sum::<usize>();
        seed += 20;
    }
    verdict(
        events >= 1000 && good == events,
        format!(
            "{events} replacement events over {instances} realizable instances, {good} monotone"
        ),
    )
}

fn determinism() -> Verdict {
    let cfg = SuiteConfig::load(&configs().join("random-log.json")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for (tag, w) in [("a", workers()), ("b", 1)] {
        let out = dir.path().join(tag);
        run_suite(&cfg, Some(&out), w, true).unwrap();
        reports.push(std::fs::read(out.join("report.csv")).unwrap());
    }
    let same = reports[0] == reports[1];
    verdict(
        same && !reports[0].is_empty(),
        format!("report.csv {} bytes, identical: {same}", reports[0].len()),
    )
}

fn main() -> ExitCode {
    let criteria: [Check; 8] = [
        ("1 soundness", soundness),
        ("2 oracle bracket", oracle_bracket),
        ("3 random logarithmic classes", random_log),
        ("4 random linear classes", random_linear),
        ("5 drones", drones),
        ("6 anytime", anytime),
        ("7 monotone replacements", monotone),
        ("8 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let v = check();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "{status} criterion {name}: {} [{:.1}s]",
            v.detail,
            started.elapsed().as_secs_f64()
        );
        failed += usize::from(!v.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
