//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with
//! status 1 if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use crowdship::format::load_instance;
use crowdship::runtime::WallClock;
use crowdship_core::bench::{
    best_known, compute_gaps, generate_instance, sensitivity_summary, ClassPattern, GeneratorConfig, GroupBy,
};
use crowdship_core::geometry::{bundle_detour, corridor_tasks, detour_increment, distance, initial_detour};
use crowdship_core::orchestrator::{gap_h, SequentialExecutor};
use crowdship_core::pricing::{can_prune, extend, init_labels, DualPrices, Label, PricingConfig, RC_TOL};
use crowdship_core::probability::{
    acceptance_probability, expected_savings, lambert_w0, lambert_w_of_exp, optimal_compensation, reduced_cost,
};
use crowdship_core::{
    BehaviorCoefficients, Bundle, DepotSpec, DriverSpec, Instance, Point, PredictorVector, RunReport, Solver,
    SolveStatus, TaskSpec, Variant, VariantConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn solve(instance: &Instance, variant: Variant) -> RunReport {
    let clock = WallClock::new();
    Solver::new(&clock, &SequentialExecutor).run(instance, &VariantConfig::new(variant))
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crowdship"))
}

fn run_bin(args: &[&str]) -> std::process::Output {
    let out = bin().args(args).output().expect("binary runs");
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("crowdship-acceptance-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn coefficients(rng: &mut ChaCha8Rng) -> BehaviorCoefficients {
    BehaviorCoefficients::new(
        rng.gen_range(-6.0..=-3.0),
        rng.gen_range(-3.0..=-1.0),
        rng.gen_range(-4.0..=-2.0),
        rng.gen_range(1.0..=3.0),
    )
}

/// Detour, bundle size and the matching flat-rate outsourcing total.
fn predictors(rng: &mut ChaCha8Rng) -> (PredictorVector, f64) {
    let k = rng.gen_range(1..=7u32);
    (PredictorVector::new(rng.gen_range(0.0..=5.0), k as f64), 4.95 * k as f64)
}

/// Exact solves shared by several criteria.
#[derive(Default)]
struct Shared {
    exact_slice: Option<(Vec<(Instance, RunReport)>, f64)>,
    timing_run: Option<RunReport>,
}

impl Shared {
    /// E-DDC on every 30-task/p=0.1 instance, with the total time spent.
    fn exact_slice(&mut self) -> &(Vec<(Instance, RunReport)>, f64) {
        self.exact_slice.get_or_insert_with(|| {
            let config = GeneratorConfig::default();
            let start = Instant::now();
            let mut out = Vec::new();
            for pattern in ClassPattern::ALL {
                for base in 0..config.n_full_instances {
                    let inst = generate_instance(&config, base, pattern, 30, 0.1).unwrap();
                    let r = solve(&inst, Variant::EDDC);
                    out.push((inst, r));
                }
            }
            (out, start.elapsed().as_secs_f64())
        })
    }

    /// The first 30-task/15-driver instance of the library.
    fn timing_run(&mut self) -> &RunReport {
        self.timing_run.get_or_insert_with(|| {
            let inst = generate_instance(&GeneratorConfig::default(), 0, ClassPattern::ALL[0], 30, 0.5).unwrap();
            assert_eq!(inst.drivers().len(), 15);
            solve(&inst, Variant::EDDC)
        })
    }
}

fn closed_form_vs_grid(_: &mut Shared) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let step = 1e-4;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let b = coefficients(&mut rng);
        let (x, cbar) = predictors(&mut rng);
        let c = optimal_compensation(&b, &x, cbar).unwrap();
        let closed = if c > 0.0 { expected_savings(acceptance_probability(&b, &x, c), cbar, c) } else { 0.0 };
        let n = (cbar / step).ceil() as usize;
        let grid = (0..=n)
            .map(|i| (i as f64 * step).min(cbar))
            .map(|c| expected_savings(acceptance_probability(&b, &x, c), cbar, c))
            .fold(0.0, f64::max);
        worst = worst.max((closed - grid).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst <= 1e-3 && secs < 10.0, format!("1000 draws, max |diff| {worst:.2e} (<= 1e-3), {secs:.1} s (< 10 s)"))
}

fn reduced_cost_identity(_: &mut Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut max_z = f64::NEG_INFINITY;
    for i in 0..1000 {
        let b = coefficients(&mut rng);
        let (x, mut cbar) = predictors(&mut rng);
        if i % 2 == 1 {
            // large totals push the exponent towards 1e3
            cbar = 10f64.powf(rng.gen_range(1.0..2.6));
        }
        max_z = max_z.max(b.pricing_exponent(&x, cbar));
        let pi = rng.gen_range(0.0..cbar);
        let mu = rng.gen_range(0.0..5.0);
        let c = optimal_compensation(&b, &x, cbar).unwrap();
        let direct = acceptance_probability(&b, &x, c) * (cbar - c) - pi - mu;
        let closed = reduced_cost(&b, &x, cbar, pi, mu);
        assert!(closed.is_finite());
        worst = worst.max((closed - direct).abs());
    }
    check(
        worst <= 1e-9 && max_z >= 900.0,
        format!("1000 draws, max |diff| {worst:.2e} (<= 1e-9), largest exponent {max_z:.0}"),
    )
}

fn tiny_library() -> Vec<Instance> {
    let dir = scratch("tiny");
    run_bin(&["generate", "--out-dir", s(&dir), "--tiny", "50"]);
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    paths.sort();
    assert_eq!(paths.len(), 50);
    paths.iter().map(|p| load_instance(p).unwrap()).collect()
}

fn oracle_objective(path: &Path) -> f64 {
    let out = run_bin(&["oracle", "--instance", s(path)]);
    String::from_utf8_lossy(&out.stdout).trim().parse().unwrap()
}

fn exactness_oracle(_: &mut Shared) -> Outcome {
    let start = Instant::now();
    let dir = scratch("oracle");
    run_bin(&["generate", "--out-dir", s(&dir), "--tiny", "50"]);
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    paths.sort();
    assert_eq!(paths.len(), 50);
    let mut worst = 0.0f64;
    for p in &paths {
        let inst = load_instance(p).unwrap();
        assert!(inst.tasks().len() <= 7 && inst.drivers().len() <= 2);
        let mut loads: Vec<f64> = inst.tasks().iter().map(|t| t.load).collect();
        loads.sort_by(f64::total_cmp);
        for w in inst.drivers() {
            assert!(loads.len() < 4 || loads[..4].iter().sum::<f64>() > w.capacity, "{}", inst.name());
        }
        let opt = oracle_objective(p);
        for v in [Variant::EDD, Variant::EDDC] {
            let r = solve(&inst, v);
            assert_eq!(r.status, SolveStatus::Optimal);
            worst = worst.max((r.solution.objective - opt).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-6 && secs < 60.0,
        format!("50 instances, max |E-DD/E-DDC - oracle| {worst:.2e} (<= 1e-6), {secs:.1} s (< 60 s)"),
    )
}

fn all_extensions_non_positive(instance: &Instance, label: &Label, duals: &DualPrices) -> bool {
    label.reachable.iter().all(|t| {
        let child = extend(instance, label, t, duals).unwrap();
        child.reduced_cost <= RC_TOL && all_extensions_non_positive(instance, &child, duals)
    })
}

fn pricing_safety(_: &mut Shared) -> Outcome {
    let tiny = tiny_library();
    let mut worst = 0.0f64;
    for inst in &tiny {
        let mut off = VariantConfig::new(Variant::EDD);
        off.use_dominance = false;
        off.use_rc_pruning = false;
        off.use_detour_limit = false;
        let reference = Solver::new(&WallClock::new(), &SequentialExecutor).run(inst, &off).solution.objective;
        for flag in 0..3 {
            let mut c = off.clone();
            match flag {
                0 => c.use_dominance = true,
                1 => c.use_rc_pruning = true,
                _ => c.use_detour_limit = true,
            }
            let got = Solver::new(&WallClock::new(), &SequentialExecutor).run(inst, &c).solution.objective;
            worst = worst.max((got - reference).abs());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut pruned, mut violations, mut draws) = (0, 0, 0);
    while pruned < 10_000 {
        draws += 1;
        assert!(draws < 2_000_000, "too few prunable labels");
        let inst = crowdship_core::bench::tiny_instance(rng.gen());
        let scale = rng.gen_range(0.02..0.6);
        let duals = DualPrices::new(
            (0..inst.tasks().len()).map(|_| rng.gen_range(0.0..4.0 * scale)).collect(),
            (0..inst.drivers().len()).map(|_| rng.gen_range(0.0..3.0 * scale)).collect(),
        );
        let w = rng.gen_range(0..inst.drivers().len());
        let mut labels = init_labels(&inst, w, &duals, &PricingConfig::exhaustive());
        let mut label = labels.swap_remove(rng.gen_range(0..labels.len()));
        for _ in 0..rng.gen_range(0..3) {
            let options: Vec<usize> = label.reachable.iter().collect();
            if options.is_empty() {
                break;
            }
            label = extend(&inst, &label, options[rng.gen_range(0..options.len())], &duals).unwrap();
        }
        assert!(label.reachable.len() <= 8);
        if can_prune(&inst, &label, &duals) {
            pruned += 1;
            violations += usize::from(!all_extensions_non_positive(&inst, &label, &duals));
        }
    }
    check(
        worst <= 1e-6 && violations == 0,
        format!(
            "50 instances x 3 flags, max |diff| {worst:.2e} (<= 1e-6); {pruned} pruned labels, {violations} with an improving extension"
        ),
    )
}

fn bound_sandwich(shared: &mut Shared) -> Outcome {
    let mut runs: Vec<RunReport> = shared.exact_slice().0.iter().map(|(_, r)| r.clone()).collect();
    runs.push(shared.timing_run().clone());
    let mut bad = Vec::new();
    for r in &runs {
        let opt = r.solution.objective;
        let (Some(lb), Some(ub), Some(gap)) = (r.lb_mip, r.upper_bound, r.gap_h) else {
            bad.push(format!("{}: missing bound", r.instance_name));
            continue;
        };
        let formula = (ub - lb) / ub;
        if r.status != SolveStatus::Optimal
            || lb > opt + 1e-6
            || opt > ub + 1e-6
            || (gap - formula).abs() > 1e-12
            || gap_h(Some(ub), lb) != Some(gap)
        {
            bad.push(format!("{}: lb {lb} opt {opt} ub {ub} gap {gap} status {}", r.instance_name, r.status));
        }
    }
    let first = bad.first().map(|b| format!(", first: {b}")).unwrap_or_default();
    check(bad.is_empty(), format!("{} exact solves, {} violations{first}", runs.len(), bad.len()))
}

fn heuristic_quality(_: &mut Shared) -> Outcome {
    let start = Instant::now();
    let config = GeneratorConfig::default();
    let mut sums = BTreeMap::new();
    let mut count = 0;
    for pattern in ClassPattern::ALL.iter().filter(|p| matches!(p, ClassPattern::Mixed(_))) {
        for base in 0..config.n_full_instances {
            let inst = generate_instance(&config, base, *pattern, 30, 0.5).unwrap();
            count += 1;
            for v in [Variant::HDD, Variant::HDDC] {
                let r = solve(&inst, v);
                *sums.entry(v.to_string()).or_insert(0.0) += r.gap_h.expect("heuristics report gap_h");
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let means: Vec<(String, f64)> = sums.into_iter().map(|(v, s)| (v, s / count as f64)).collect();
    let text: Vec<String> = means.iter().map(|(v, m)| format!("{v} {:.2}%", 100.0 * m)).collect();
    check(
        count == 50 && means.iter().all(|(_, m)| *m <= 0.05) && secs < 300.0,
        format!("{count} instances, mean gap_h {} (<= 5%), {secs:.1} s (< 300 s)", text.join(", ")),
    )
}

fn sequential_inferiority(shared: &mut Shared) -> Outcome {
    let (exact, exact_secs) = shared.exact_slice();
    let start = Instant::now();
    let mut reports: Vec<RunReport> = exact.iter().map(|(_, r)| r.clone()).collect();
    for (inst, _) in exact {
        reports.push(solve(inst, Variant::Seq));
    }
    let secs = exact_secs + start.elapsed().as_secs_f64();
    let reference = best_known(&reports);
    let rows = compute_gaps(&reports, &reference);
    let gaps: Vec<f64> = rows.iter().filter(|r| r.variant == "SEQ").map(|r| r.gap_bk.unwrap()).collect();
    let above = reports
        .iter()
        .filter(|r| r.variant == Variant::Seq && r.solution.objective > reference[&r.instance_name] + 1e-9)
        .count();
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    check(
        gaps.len() == 80 && above == 0 && mean > 0.05 && secs < 300.0,
        format!(
            "{} instances, SEQ above best known on {above}, mean gap_bk {:.2}% (> 5%), {secs:.1} s (< 300 s)",
            gaps.len(),
            100.0 * mean
        ),
    )
}

fn behavioral_orderings(_: &mut Shared) -> Outcome {
    let config = GeneratorConfig::default();
    let mut runs = Vec::new();
    for pattern in ClassPattern::ALL.iter().filter(|p| matches!(p, ClassPattern::Single(_))) {
        for base in 0..config.n_full_instances {
            let inst = generate_instance(&config, base, *pattern, 60, 0.3).unwrap();
            let r = solve(&inst, Variant::HDDC);
            runs.push((inst, r.solution));
        }
    }
    let pairs: Vec<(&Instance, &crowdship_core::Solution)> = runs.iter().map(|(i, s)| (i, s)).collect();
    let rows = sensitivity_summary(&pairs, GroupBy::Class);
    let by: BTreeMap<&str, (f64, f64)> =
        rows.iter().map(|r| (r.group.as_str(), (r.mean_compensation, r.mean_acceptance))).collect();
    let (c1, c2, c3) = (by["class1"], by["class2"], by["class3"]);
    check(
        c3.0 > c2.0 && c2.0 > c1.0 && c1.1 > c2.1 && c2.1 > c3.1,
        format!(
            "H-DDC on {} instances; compensation {:.2}/{:.2}/{:.2}, acceptance {:.3}/{:.3}/{:.3} (classes 1/2/3)",
            runs.len(),
            c1.0,
            c2.0,
            c3.0,
            c1.1,
            c2.1,
            c3.1
        ),
    )
}

fn desk_scale_performance(shared: &mut Shared) -> Outcome {
    let r = shared.timing_run();
    check(
        r.status == SolveStatus::Optimal && r.wall_time_seconds < 10.0,
        format!("{} E-DDC, 1 worker: {:.2} s (< 10 s), status {}", r.instance_name, r.wall_time_seconds, r.status),
    )
}

fn determinism(_: &mut Shared) -> Outcome {
    let mut outputs = Vec::new();
    for round in 0..2 {
        let dir = scratch(&format!("determinism{round}"));
        let lib = dir.join("lib");
        run_bin(&[
            "generate", "--out-dir", s(&lib), "--master-seed", "17", "--n-full-instances", "1", "--task-sizes", "30",
            "--driver-ratios", "0.3", "--patterns", "m2",
        ]);
        let inst = lib.join("inst00_m2_30_0.3.txt");
        let mut files = vec![fs::read(&inst).unwrap()];
        for v in ["e-ddc", "h-ddc", "seq"] {
            let (sol, rep) = (dir.join(format!("{v}.sol")), dir.join(format!("{v}.report")));
            run_bin(&["solve", "--variant", v, "--instance", s(&inst), "--out", s(&sol), "--report", s(&rep)]);
            files.push(fs::read(&sol).unwrap());
            files.push(fs::read(&rep).unwrap());
        }
        outputs.push(files);
    }
    let differing = outputs[0].iter().zip(&outputs[1]).filter(|(a, b)| a != b).count();
    check(differing == 0, format!("{} files per run, {differing} differ", outputs[0].len()))
}

fn kernel_invariants(_: &mut Shared) -> Outcome {
    const TRIALS: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut violations = BTreeMap::from([("lambert-w", 0), ("logistic", 0), ("telescoping", 0), ("corridor", 0)]);

    for k in -8..=8 {
        let x = 10f64.powi(k);
        let w = lambert_w0(x).unwrap();
        *violations.get_mut("lambert-w").unwrap() += usize::from((w * w.exp() - x).abs() > 1e-12 * x.max(1.0));
    }
    for _ in 0..TRIALS {
        let x = 10f64.powf(rng.gen_range(-8.0..8.0));
        let w = lambert_w0(x).unwrap();
        let z = rng.gen_range(1.0..1e6);
        let v = lambert_w_of_exp(z);
        let bad = (w * w.exp() - x).abs() > 1e-12 * x.max(1.0) || (v + v.ln() - z).abs() > 1e-10 * z;
        *violations.get_mut("lambert-w").unwrap() += usize::from(bad);
    }

    for _ in 0..TRIALS {
        let b = coefficients(&mut rng);
        let (x, cbar) = predictors(&mut rng);
        let c1 = rng.gen_range(0.0..cbar);
        let c2 = rng.gen_range(c1..=cbar);
        let (p1, p2) = (acceptance_probability(&b, &x, c1), acceptance_probability(&b, &x, c2));
        // strict only while the logistic is not saturated in floating point
        let strict = c2 > c1 && b.utility(&x, c2) < 30.0 && b.utility(&x, c1) > -30.0;
        let bad = p1 > p2 || (strict && p1 >= p2) || !(0.0..=1.0).contains(&p1);
        *violations.get_mut("logistic").unwrap() += usize::from(bad);
    }

    let point = |rng: &mut ChaCha8Rng| Point::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
    let class1 = BehaviorCoefficients::class(1).unwrap();
    for _ in 0..TRIALS {
        let (start, end, depot) = (point(&mut rng), point(&mut rng), point(&mut rng));
        let n = rng.gen_range(1..8);
        let tasks: Vec<Point> = (0..n).map(|_| point(&mut rng)).collect();
        let w = DriverSpec::new(0, start, end, 1e9, class1.clone());
        let specs = tasks.iter().enumerate().map(|(i, &p)| TaskSpec::new(i as u32, p, 1.0, 4.95)).collect();
        let inst = Instance::new("t", None, specs, vec![DepotSpec::new(0, depot, 0..n as u32)], vec![w.clone()]).unwrap();
        let mut sum = initial_detour(&w, &inst.depots()[0]);
        let mut last = depot;
        for &p in &tasks {
            let inc = detour_increment(last, p, &w);
            sum += inc;
            last = p;
            *violations.get_mut("telescoping").unwrap() += usize::from(inc < 0.0);
        }
        let direct = bundle_detour(&inst, &w, &Bundle::new(0, (0..n as u32).collect())).unwrap();
        let bad = (direct - sum).abs() > 1e-12 * (1.0 + distance(start, end) + sum);
        *violations.get_mut("telescoping").unwrap() += usize::from(bad);
    }

    for _ in 0..TRIALS {
        let (start, end) = (point(&mut rng), point(&mut rng));
        if distance(start, end) <= 1e-6 {
            continue;
        }
        let n = rng.gen_range(1..30);
        let specs = (0..n).map(|i| TaskSpec::new(i as u32, point(&mut rng), 1.0, 4.95)).collect();
        let w = DriverSpec::new(0, start, end, 1e9, class1.clone());
        let inst = Instance::new("c", None, specs, vec![DepotSpec::new(0, start, 0..n as u32)], vec![w]).unwrap();
        let w = &inst.drivers()[0];
        let (a, b) = (rng.gen_range(1.0..=180.0), rng.gen_range(1.0..=180.0));
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let small = corridor_tasks(&inst, w, lo).unwrap();
        let large = corridor_tasks(&inst, w, hi).unwrap();
        let bad = !small.is_subset(&large) || corridor_tasks(&inst, w, 180.0).unwrap().len() != n;
        *violations.get_mut("corridor").unwrap() += usize::from(bad);
    }

    let total: usize = violations.values().sum();
    let text: Vec<String> = violations.iter().map(|(k, v)| format!("{k} {v}")).collect();
    check(total == 0, format!("{TRIALS} trials per suite, violations: {}", text.join(", ")))
}

fn main() {
    let criteria: [(&str, fn(&mut Shared) -> Outcome); 11] = [
        ("closed-form compensation vs grid", closed_form_vs_grid),
        ("reduced-cost identity", reduced_cost_identity),
        ("exactness vs oracle", exactness_oracle),
        ("dominance and pruning safety", pricing_safety),
        ("bound sandwich", bound_sandwich),
        ("heuristic quality 30/0.5 mixed", heuristic_quality),
        ("sequential inferiority 30/0.1", sequential_inferiority),
        ("behavioral orderings 60/0.3", behavioral_orderings),
        ("desk-scale performance", desk_scale_performance),
        ("determinism", determinism),
        ("kernel invariants", kernel_invariants),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut shared = Shared::default();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(|| f(&mut shared))).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
