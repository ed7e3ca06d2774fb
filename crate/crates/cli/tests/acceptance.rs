//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use assumegen::assume::{build_assume, check_context};
use assumegen::dtmc::{bounded_reachability, build_monitored_dtmc, reachability_curve, ConfusionProfile, Dtmc};
use assumegen::fsp::{parse, parse_process, print};
use assumegen::localspec::{concretize, satisfies_specs, synthesize_local_specs, SpecMode};
use assumegen::lts::{accepts, check_safety, compose, is_isomorphic, Acceptance, Lts};
use assumegen::random::{random_context, random_instance, random_lts, random_m2, random_walk};
use assumegen::taxinet::*;
use assumegen::Action;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn bin(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_assumegen"))
        .args(args)
        .output()
        .unwrap()
}

fn assumption_sizes() -> Outcome {
    let expected = [(2, 7), (4, 13), (6, 19), (14, 43), (30, 91), (50, 151), (100, 301)];
    let mut seen = Vec::new();
    for (m, states) in expected {
        let start = Instant::now();
        let o = bin(&["assume", "--taxinet", &m.to_string(), "--alphabet", "est"]);
        let secs = start.elapsed().as_secs_f64();
        ensure(o.status.success(), format!("m={m} exited with {:?}", o.status))?;
        let line = String::from_utf8_lossy(&o.stdout).trim().to_string();
        let got: u32 = line
            .split_whitespace()
            .find_map(|w| w.strip_prefix("states="))
            .and_then(|v| v.parse().ok())
            .ok_or(format!("no stats line: {line}"))?;
        ensure(got == states, format!("m={m}: states={got}, expected {states}"))?;
        ensure(secs <= 600.0, format!("m={m} took {secs:.1}s"))?;
        seen.push(format!("{m}:{got}"));
    }
    Ok(format!("states {}", seen.join(" ")))
}

fn m1_sizes() -> Outcome {
    let expected = [
        (2, 99),
        (4, 261),
        (6, 495),
        (14, 2151),
        (30, 8919),
        (50, 23859),
        (100, 92709),
    ];
    for (m, states) in expected {
        let l = m1(&DiscretizationConfig::new(m));
        ensure(states == 9 * (m * m + 3 * m + 1), "size law")?;
        ensure(
            l.num_non_err_states() == states,
            format!("m={m}: {} states", l.num_non_err_states()),
        )?;
    }
    let t = m1(&DiscretizationConfig::new(2)).num_transitions();
    ensure(t == 155, format!("m=2 has {t} transitions"))?;
    Ok("99..92709 states, 155 transitions at m=2".into())
}

fn closed_loops() -> Outcome {
    let cfg = DiscretizationConfig::new(2);
    let m = m1(&cfg);
    ensure(
        check_safety(&compose(&m, &perfect_perception(&cfg))).safe,
        "perfect loop unsafe",
    )?;
    let worst = compose(&m, &worst_perception(&cfg));
    let v = check_safety(&worst);
    ensure(!v.safe, "worst loop safe")?;
    let trace = v.counterexample.ok_or("no counterexample")?;
    ensure(
        matches!(accepts(&worst, &trace), Acceptance::Violates { .. }),
        "counterexample does not replay",
    )?;
    Ok(format!("counterexample of length {}", trace.len()))
}

fn weakest_assumption() -> Outcome {
    let start = Instant::now();
    let (mut agree, mut safe_ctx) = (0usize, 0usize);
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let r = build_assume(&inst.m, &inst.p_err, &inst.iface).map_err(|e| e.to_string())?;
        if !r.assumption.no_safe_context {
            let closed = compose(&r.assumption.lts, &compose(&inst.m, &inst.p_err));
            ensure(check_safety(&closed).safe, format!("seed {seed}: A || M violates P"))?;
        }
        for _ in 0..50 {
            let n = random_context(&mut rng, &inst.iface, 4);
            let oracle = check_safety(&compose(&compose(&inst.m, &inst.p_err), &n)).safe;
            ensure(
                check_context(&n, &r.assumption) == oracle,
                format!("seed {seed}: verdict differs from oracle"),
            )?;
            agree += 1;
            safe_ctx += usize::from(oracle);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs <= 120.0, format!("took {secs:.1}s"))?;
    Ok(format!(
        "200 instances, {agree} contexts agree ({safe_ctx} safe), {secs:.2}s"
    ))
}

fn monotonicity() -> Outcome {
    let cfg = DiscretizationConfig::new(2);
    let m = m1(&cfg);
    let small = build_assume(&m, &Lts::universal(), &est_alphabet(&cfg)).map_err(|e| e.to_string())?;
    let big = build_assume(&m, &Lts::universal(), &est_act_alphabet(&cfg)).map_err(|e| e.to_string())?;
    let extra = est_act_alphabet(&cfg).actions();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..1000 {
        let ext: &[Action] = if i % 2 == 0 { &[] } else { &extra };
        let w = random_walk(&mut rng, &small.assumption.lts, ext, 12);
        ensure(
            accepts(&big.assumption.lts, &w) == Acceptance::Accepted,
            format!("rejected {w}"),
        )?;
    }
    let mut checked = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let full = inst.iface.actions();
        let keep: Vec<Action> = full.iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
        let sub = inst.iface.restrict(|a, _| keep.contains(a));
        let a = build_assume(&inst.m, &inst.p_err, &sub).map_err(|e| e.to_string())?;
        let b = build_assume(&inst.m, &inst.p_err, &inst.iface).map_err(|e| e.to_string())?;
        if a.assumption.no_safe_context {
            continue;
        }
        for _ in 0..20 {
            let w = random_walk(&mut rng, &a.assumption.lts, &full, 8);
            ensure(
                accepts(&b.assumption.lts, &w) == Acceptance::Accepted,
                format!("seed {seed}: rejected {w}"),
            )?;
            checked += 1;
        }
    }
    Ok(format!("1000 TaxiNet traces, {checked} random-instance traces"))
}

fn local_spec_goldens() -> Outcome {
    let cfg = DiscretizationConfig::new(2);
    let r = build_assume(&m1(&cfg), &Lts::universal(), &est_act_alphabet(&cfg)).map_err(|e| e.to_string())?;
    let specs = synthesize_local_specs(&r.err_automaton, &r.iface, SpecMode::Merged).map_err(|e| e.to_string())?;
    let find = |a: &str| {
        specs
            .iter()
            .find(|s| s.actual.to_string() == a)
            .ok_or(format!("no spec for {a}"))
    };
    let names = |s: &assumegen::localspec::LocalSpec| s.allowed.iter().map(ToString::to_string).collect::<Vec<_>>();
    let s22 = find("act[2][2]")?;
    ensure(
        names(s22) == ["est[1][2]", "est[2][0]", "est[2][2]"],
        format!("[2][2] allows {:?}", names(s22)),
    )?;
    let s20 = find("act[2][0]")?;
    let expected: Vec<String> = cfg
        .states()
        .map(|s| s.est().to_string())
        .filter(|e| !["est[0][0]", "est[0][1]", "est[1][1]"].contains(&e.as_str()))
        .collect();
    ensure(names(s20) == expected, format!("[2][0] allows {:?}", names(s20)))?;
    let text = concretize(s22, &cfg).map_err(|e| e.to_string())?.to_string();
    let golden = "(cte* ∈ [2.7,8) ∧ he* ∈ (11.66,35.0]) ⇒ ((cte∈[-2.7,2.7] ∧ he∈(11.66,35.0]) ∨ (cte∈[2.7,8) ∧ he∈[-11.67,11.66]) ∨ (cte∈[2.7,8) ∧ he∈(11.66,35.0]))";
    let squash = |s: &str| s.split_whitespace().collect::<String>();
    ensure(squash(&text) == squash(golden), format!("[2][2] interval text {text}"))?;
    let cli = String::from_utf8_lossy(&bin(&["localspec", "--taxinet", "2"]).stdout).into_owned();
    ensure(cli.contains(golden), "CLI output lacks the [2][2] interval text")?;
    Ok("[2][2] and [2][0] sets and [2][2] interval text match".into())
}

fn local_spec_soundness() -> Outcome {
    let mut report = Vec::new();
    for m in [2u32, 4] {
        let cfg = DiscretizationConfig::new(m);
        let r = build_assume(&m1(&cfg), &Lts::universal(), &est_act_alphabet(&cfg)).map_err(|e| e.to_string())?;
        let specs = synthesize_local_specs(&r.err_automaton, &r.iface, SpecMode::Merged).map_err(|e| e.to_string())?;
        let pool: BTreeMap<Action, Vec<Action>> = specs
            .iter()
            .map(|s| (s.actual.clone(), s.allowed.iter().cloned().collect()))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(100 + u64::from(m));
        let (mut passing, mut total) = (0, 0);
        while passing < 100 && total < 5000 {
            total += 1;
            let m2 = random_m2(&mut rng, &cfg, 3, Some((&pool, 0.97)));
            if satisfies_specs(&m2, &r.iface, &specs) {
                passing += 1;
                ensure(
                    check_context(&m2, &r.assumption),
                    format!("m={m}: spec-satisfying m2 rejected"),
                )?;
            }
        }
        ensure(passing >= 100, format!("m={m}: only {passing} passing instances"))?;
        report.push(format!("m={m}: {passing}/{total} passing, 0 violations"));
    }
    Ok(report.join("; "))
}

fn random_profile(cfg: &DiscretizationConfig, rng: &mut ChaCha8Rng) -> ConfusionProfile {
    let states: Vec<SystemState> = cfg.states().collect();
    let dist = states
        .iter()
        .map(|&a| {
            let w: Vec<f64> = states.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
            let total: f64 = w.iter().sum();
            (a, states.iter().zip(&w).map(|(&e, &x)| (e, x / total)).collect())
        })
        .collect();
    ConfusionProfile::from_distributions(cfg, dist).unwrap()
}

fn enumerate_paths(d: &Dtmc, s: u32, target: &[bool], n: usize) -> f64 {
    if target[s as usize] {
        return 1.0;
    }
    if n == 0 {
        return 0.0;
    }
    d.row(s).map(|(t, p)| p * enumerate_paths(d, t, target, n - 1)).sum()
}

fn dtmc_suite() -> Outcome {
    let mut notes = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for m in [2u32, 4] {
        let cfg = DiscretizationConfig::new(m);
        let model = m1(&cfg);
        let r = build_assume(&model, &Lts::universal(), &est_alphabet(&cfg)).map_err(|e| e.to_string())?;
        let build =
            |p: &ConfusionProfile| build_monitored_dtmc(&model, p, &r.err_automaton, &cfg).map_err(|e| e.to_string());
        for _ in 0..10 {
            let d = build(&random_profile(&cfg, &mut rng))?;
            let p = bounded_reachability(&d.dtmc, &d.safety_err_target(), 200);
            ensure(p == 0.0, format!("(a) m={m}: P[F safety-err] = {p}"))?;
        }
        let id = build(&ConfusionProfile::identity(&cfg))?;
        ensure(
            id.abort_curve(100).iter().all(|&p| p == 0.0),
            format!("(b) m={m}: identity profile aborts"),
        )?;
    }
    notes.push("(a) 20 random profiles never reach safety-err; (b) identity never aborts".to_string());

    let cfg = DiscretizationConfig::new(2);
    let model = m1(&cfg);
    let r = build_assume(&model, &Lts::universal(), &est_alphabet(&cfg)).map_err(|e| e.to_string())?;
    let curve = |acc: f64| -> Result<Vec<f64>, String> {
        let p = ConfusionProfile::with_accuracy(&cfg, acc);
        Ok(build_monitored_dtmc(&model, &p, &r.err_automaton, &cfg)
            .map_err(|e| e.to_string())?
            .abort_curve(2000))
    };
    let (high, low) = (curve(0.9)?, curve(0.7)?);
    for c in [&high, &low] {
        ensure(c.windows(2).all(|w| w[0] <= w[1]), "(c) curve decreases")?;
    }
    ensure(
        high.iter().zip(&low).all(|(h, l)| *h <= *l + 1e-12),
        "(d) high accuracy curve exceeds low",
    )?;
    let hit = |c: &[f64]| c.iter().position(|&p| p >= 0.99);
    let (nh, nl) = (
        hit(&high).ok_or("(d) high curve stays below 0.99")?,
        hit(&low).ok_or("(d) low curve stays below 0.99")?,
    );
    notes.push(format!(
        "(c) monotone; (d) 0.99 reached at n={nl} (acc 0.7) and n={nh} (acc 0.9)"
    ));

    let d = Dtmc::from_rows(
        vec![
            vec![(0, 0.2), (1, 0.5), (2, 0.3)],
            vec![(0, 0.4), (2, 0.1), (3, 0.5)],
            vec![(1, 0.6), (2, 0.4)],
            vec![(3, 1.0)],
        ],
        0,
    )
    .map_err(|e| e.to_string())?;
    let target = [false, false, false, true];
    let err = (reachability_curve(&d, &target, 10)[10] - enumerate_paths(&d, 0, &target, 10)).abs();
    ensure(err < 1e-12, format!("(e) deviation {err:e}"))?;
    notes.push(format!("(e) deviation {err:.1e}"));
    Ok(notes.join("; "))
}

fn digest_dir(dir: &Path) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "stats.json")
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, format!("{:x}", Sha256::digest(fs::read(&p).unwrap())))
        })
        .collect();
    out.sort();
    out
}

fn frontend() -> Outcome {
    let mut corpus = 0;
    for m in [2u32, 4] {
        let cfg = DiscretizationConfig::new(m);
        for (name, l) in parse(&fsp_source(&cfg)).map_err(|e| e.to_string())? {
            let text = print(&l, &name.to_uppercase());
            let back = parse_process(&text, &name.to_uppercase()).map_err(|e| format!("{name}: {e}"))?;
            ensure(
                is_isomorphic(&back, &l.trim()),
                format!("{name} at m={m} does not round-trip"),
            )?;
            corpus += 1;
        }
    }
    let alphabet: Vec<Action> = ["a", "b[0]", "b[1]", "c"].iter().map(|s| s.parse().unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for i in 0..100 {
        let l = random_lts(&mut rng, &alphabet, 8, i % 2 == 0, i % 3 == 0);
        let back = parse_process(&print(&l, "P"), "P").map_err(|e| e.to_string())?;
        ensure(
            is_isomorphic(&back, &l.trim()),
            format!("random LTS {i} does not round-trip"),
        )?;
    }
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let o = bin(&[
            "assume",
            "--taxinet",
            "4",
            "--alphabet",
            "est-act",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        ensure(o.status.success(), "assume failed")?;
    }
    let (a, b) = (digest_dir(dirs[0].path()), digest_dir(dirs[1].path()));
    ensure(!a.is_empty() && a == b, "artifacts differ between runs")?;
    Ok(format!(
        "{corpus} corpus processes and 100 random LTSs round-trip; {} artifacts hash-equal",
        a.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "assumption sizes", assumption_sizes),
        (2, "M1 sizes", m1_sizes),
        (3, "optimistic and pessimistic loops", closed_loops),
        (4, "weakest assumption", weakest_assumption),
        (5, "alphabet monotonicity", monotonicity),
        (6, "local spec goldens", local_spec_goldens),
        (7, "local spec soundness", local_spec_soundness),
        (8, "DTMC suite", dtmc_suite),
        (9, "frontend round trip and determinism", frontend),
    ];
    let mut failed = Vec::new();
    for (n, name, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {n} PASS {name}: {detail}"),
            Err(why) => {
                println!("criterion {n} FAIL {name}: {why}");
                failed.push(n);
            }
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
