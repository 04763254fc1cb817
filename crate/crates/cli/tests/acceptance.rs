//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any failed.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use banmf_cli::{run_noise_sweep, run_rank_gap_study, Experiment, ExperimentConfig, Method};
use banmf_core::solver::DEFAULT_EPSILON;
use banmf_core::{
    booleanize, exhaustive_bmf, generate_planted, mat_mul, solve_with, AuxiliaryUpdate, BoolMatrix,
    SolverConfig, SolverState, SynthSpec, DEFAULT_NPOINT,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn random_bool(rng: &mut ChaCha8Rng, n: usize, m: usize, p: f64) -> BoolMatrix {
    BoolMatrix::from_fn(n, m, |_, _| rng.random::<f64>() < p)
}

fn method_aux(method: Method) -> AuxiliaryUpdate {
    match method {
        Method::Banmf | Method::BanmfReg => AuxiliaryUpdate::Project,
        _ => AuxiliaryUpdate::Freeze,
    }
}

/// Every consecutive objective pair is non-increasing (up to 1e-9) over 500
/// iterations on 50 random instances.
fn monotone_descent() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = f64::NEG_INFINITY;
    let mut done = 0;
    while done < 50 {
        let n = rng.random_range(2..=40);
        let m = rng.random_range(2..=40);
        let k = rng.random_range(1..=6);
        let d = rng.random_range(0.1..0.9);
        let x = random_bool(&mut rng, n, m, d);
        if x.is_zero() {
            continue;
        }
        let cfg = SolverConfig::new(k).with_max_iters(500).with_seed(rng.random());
        let state = solve_with(&x, &cfg, AuxiliaryUpdate::Project).map_err(|e| e.to_string())?;
        let trace = state.objective_trace();
        check(trace.len() == 500, format!("trace length {}", trace.len()))?;
        for (t, pair) in trace.windows(2).enumerate() {
            worst = worst.max(pair[1] - pair[0]);
            check(
                pair[1] <= pair[0] + 1e-9,
                format!("{n}x{m} k={k}: trace[{}]={} > trace[{t}]={}", t + 1, pair[1], pair[0]),
            )?;
        }
        done += 1;
    }
    Ok(format!("50 instances x 500 iterations, largest increase {worst:.3e}"))
}

/// Seeding with the planted factors and Y = W*H* gives objective 0 and a
/// feasible point.
fn planted_is_zero_objective() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..50 {
        let n = rng.random_range(3..=30);
        let m = rng.random_range(3..=30);
        let k = rng.random_range(1..=6.min(n).min(m));
        let d = rng.random_range(0.2..0.8);
        let inst = generate_planted(&SynthSpec::new(n, m, k, d).with_seed(i))
            .map_err(|e| e.to_string())?;
        let w = inst.w_true.to_dense();
        let h = inst.h_true.to_dense();
        let y = mat_mul(&w, &h).map_err(|e| e.to_string())?;
        let state = SolverState::from_parts(y, w, h).map_err(|e| e.to_string())?;
        check(state.objective() == 0.0, format!("instance {i}: objective {}", state.objective()))?;
        check(state.is_feasible(&inst.x, k), format!("instance {i}: infeasible"))?;
    }
    Ok("50 planted instances, objective exactly 0, all constraints hold".into())
}

/// Runs that reach objective < 1e-9 Booleanize with zero Hamming error.
fn exact_runs_booleanize_exactly() -> Outcome {
    let mut runs = 0;
    let mut exact = 0;
    let mut seed = 0u64;
    while runs < 100 || exact < 30 {
        if runs >= 1000 {
            return Err(format!("only {exact} exact runs in {runs}"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n = rng.random_range(5..=20);
        let m = rng.random_range(5..=20);
        let k = rng.random_range(1..=3);
        let inst = generate_planted(&SynthSpec::new(n, m, k, 0.4).with_seed(seed))
            .map_err(|e| e.to_string())?;
        seed += 1;
        let cfg = SolverConfig::new(k).with_seed(rng.random());
        let state = solve_with(&inst.x, &cfg, AuxiliaryUpdate::Project).map_err(|e| e.to_string())?;
        runs += 1;
        if state.final_objective() < 1e-9 {
            exact += 1;
            let choice = booleanize(&inst.x, state.w(), state.h(), DEFAULT_NPOINT)
                .map_err(|e| e.to_string())?;
            check(
                choice.hamming == 0,
                format!("run {runs}: objective {:.2e} but hamming {}", state.final_objective(), choice.hamming),
            )?;
        }
    }
    Ok(format!("{exact} of {runs} runs reached objective < 1e-9, all with hamming 0"))
}

/// No method beats the exhaustive optimum; the projected solver matches it
/// often.
fn oracle_lower_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let methods = [Method::Banmf, Method::BanmfReg, Method::Nmf, Method::NmfReg];
    let mut matched = 0;
    let mut count = 0;
    while count < 200 {
        let n = rng.random_range(3..=4);
        let k = rng.random_range(1..=2);
        let x = random_bool(&mut rng, n, n, 0.5);
        if x.is_zero() {
            continue;
        }
        let best = exhaustive_bmf(&x, k, 1 << 24).map_err(|e| e.to_string())?.min_hamming;
        let seed = rng.random();
        for method in methods {
            let cfg = method.solver_config(k, 1000, 0.1, DEFAULT_EPSILON, seed);
            let state = solve_with(&x, &cfg, method_aux(method)).map_err(|e| e.to_string())?;
            let h = booleanize(&x, state.w(), state.h(), DEFAULT_NPOINT)
                .map_err(|e| e.to_string())?
                .hamming;
            check(h >= best, format!("{method} got {h} below the optimum {best}"))?;
            if method == Method::Banmf && h == best {
                matched += 1;
            }
        }
        count += 1;
    }
    let rate = matched as f64 / count as f64;
    check(rate >= 0.6, format!("banmf matched the optimum on {:.1}%", 100.0 * rate))?;
    Ok(format!("200 instances, banmf optimal on {:.1}%", 100.0 * rate))
}

/// Mean density of generated matrices is within 0.05 of the target.
fn density_fidelity() -> Outcome {
    let mut parts = Vec::new();
    for (j, &d) in [0.2, 0.5, 0.8].iter().enumerate() {
        let mut sum = 0.0;
        for s in 0..100u64 {
            let inst = generate_planted(&SynthSpec::new(50, 50, 5, d).with_seed(10_000 * j as u64 + s))
                .map_err(|e| e.to_string())?;
            sum += inst.x.density();
        }
        let mean = sum / 100.0;
        check((mean - d).abs() <= 0.05, format!("target {d}: mean density {mean:.4}"))?;
        parts.push(format!("{d}->{mean:.4}"));
    }
    Ok(format!("100 draws per level: {}", parts.join(", ")))
}

/// Regularized BANMF beats plain NMF on every gap >= 2 bucket holding at
/// least 30 instances, and on those buckets pooled.
fn rank_gap_ordering() -> Outcome {
    let mut cfg = ExperimentConfig::desk(Experiment::RankGap);
    cfg.methods = vec![Method::BanmfReg, Method::Nmf];
    let out = run_rank_gap_study(&cfg).map_err(|e| e.to_string())?;
    let mut buckets: BTreeMap<(usize, Method), Vec<f64>> = BTreeMap::new();
    for r in &out.records {
        buckets.entry((r.gap.unwrap(), r.method)).or_default().push(r.relative_error);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mut report = Vec::new();
    let (mut reg_all, mut nmf_all) = (Vec::new(), Vec::new());
    for gap in 2.. {
        let (Some(reg), Some(nmf)) = (buckets.get(&(gap, Method::BanmfReg)), buckets.get(&(gap, Method::Nmf)))
        else {
            break;
        };
        if reg.len() < 30 {
            continue;
        }
        let (a, b) = (mean(reg), mean(nmf));
        check(a < b, format!("gap {gap} ({} instances): banmf-reg {a:.5} vs nmf {b:.5}", reg.len()))?;
        report.push(format!("gap {gap} n={}: {a:.5} < {b:.5}", reg.len()));
        reg_all.extend_from_slice(reg);
        nmf_all.extend_from_slice(nmf);
    }
    check(!report.is_empty(), "no gap >= 2 bucket with 30 instances")?;
    let (a, b) = (mean(&reg_all), mean(&nmf_all));
    check(a < b, format!("pooled: banmf-reg {a:.5} vs nmf {b:.5}"))?;
    Ok(report.join("; "))
}

/// Mean error of each method does not decrease as the noise level rises.
fn noise_ordering() -> Outcome {
    let cfg = ExperimentConfig::desk(Experiment::Noise);
    check(cfg.noises == [0.0, 0.01, 0.05] && cfg.trials == 20, "unexpected noise defaults")?;
    let out = run_noise_sweep(&cfg).map_err(|e| e.to_string())?;
    let mut report = Vec::new();
    for &method in &cfg.methods {
        let means: Vec<f64> = cfg
            .noises
            .iter()
            .map(|&p| {
                let v: Vec<f64> = out
                    .records
                    .iter()
                    .filter(|r| r.method == method && r.noise == p)
                    .map(|r| r.relative_error)
                    .collect();
                assert_eq!(v.len(), 20);
                v.iter().sum::<f64>() / v.len() as f64
            })
            .collect();
        check(
            means.windows(2).all(|w| w[0] <= w[1]),
            format!("{method}: means {means:?} decrease"),
        )?;
        report.push(format!("{method} {:.4}/{:.4}/{:.4}", means[0], means[1], means[2]));
    }
    Ok(report.join(", "))
}

fn banmf(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_banmf"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("banmf {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn read_csv(path: &Path) -> Result<Vec<BTreeMap<String, String>>, String> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let headers = rdr.headers().map_err(|e| e.to_string())?.clone();
    rdr.records()
        .map(|r| {
            let r = r.map_err(|e| e.to_string())?;
            Ok(headers.iter().map(String::from).zip(r.iter().map(String::from)).collect())
        })
        .collect()
}

/// `bench time`: 1000 iterations in every row, the 500x500 BANMF cell within
/// ten minutes, and median wall time increasing across 50², 100², 200².
fn timing_protocol() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    banmf(&["bench", "time", "--out", dir.path().to_str().unwrap()])?;
    let elapsed = start.elapsed().as_secs_f64();
    let rows = read_csv(&dir.path().join("timings.csv"))?;
    check(rows.iter().all(|r| r["iterations"] == "1000"), "a run did not record 1000 iterations")?;
    let big: Vec<f64> = rows
        .iter()
        .filter(|r| r["method"] == "banmf" && r["n"] == "500")
        .map(|r| r["wall_time_us"].parse::<f64>().unwrap() / 1e6)
        .collect();
    check(big.len() == 5, format!("{} runs in the 500x500 banmf cell", big.len()))?;
    let big_total: f64 = big.iter().sum();
    check(big_total < 600.0, format!("500x500 banmf cell took {big_total:.1} s"))?;
    let summary = read_csv(&dir.path().join("timing_summary.csv"))?;
    let mut report = Vec::new();
    for method in ["banmf", "nmf"] {
        let medians: Vec<f64> = ["50", "100", "200"]
            .iter()
            .map(|n| {
                summary
                    .iter()
                    .find(|r| r["method"] == method && r["n"] == *n)
                    .map(|r| r["median_wall_time_ms"].parse().unwrap())
                    .unwrap_or(f64::NAN)
            })
            .collect();
        check(
            medians[0] < medians[1] && medians[1] < medians[2],
            format!("{method}: medians {medians:?} ms not increasing"),
        )?;
        report.push(format!("{method} {:.0}/{:.0}/{:.0} ms", medians[0], medians[1], medians[2]));
    }
    Ok(format!(
        "{}; 500x500 banmf cell {big_total:.1} s; whole study {elapsed:.0} s",
        report.join(", ")
    ))
}

// Measured wall-clock times; everything else must repeat exactly.
const TIMING_FILES: [&str; 3] = ["timings.csv", "timing_summary.csv", "timing.json"];

fn snapshot(dir: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.is_dir() {
                stack.push(path);
            } else if !TIMING_FILES.iter().any(|t| path.ends_with(t)) {
                let bytes = fs::read(&path).map_err(|e| e.to_string())?;
                out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), bytes);
            }
        }
    }
    Ok(out)
}

/// Every command, run twice with the same seed and config, writes identical
/// CSV and JSON files.
fn determinism() -> Outcome {
    let input_dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let synth_dir = input_dir.path().join("synth");
    banmf(&[
        "synth", "--rows", "12", "--cols", "9", "--rank", "3", "--density", "0.5", "--noise", "0.02",
        "--seed", "9", "--out", synth_dir.to_str().unwrap(),
    ])?;
    let x = synth_dir.join("x.csv");
    let x = x.to_str().unwrap();
    let small = input_dir.path().join("small.csv");
    fs::write(&small, "1,1,0\n0,1,1\n1,0,1\n").map_err(|e| e.to_string())?;
    let small = small.to_str().unwrap();
    let cfg = input_dir.path().join("bench.cfg");
    fs::write(&cfg, "trials = 2\nsizes = 10\nranks = 2\niters = 50\nseed = 5\n").map_err(|e| e.to_string())?;
    let cfg = cfg.to_str().unwrap();

    let commands: Vec<Vec<&str>> = vec![
        vec!["synth", "--rows", "12", "--cols", "9", "--rank", "3", "--density", "0.5", "--noise", "0.02", "--seed", "9"],
        vec!["factorize", x, "--rank", "3", "--seed", "4", "--iters", "200"],
        vec!["factorize", x, "--rank", "3", "--method", "nmf-reg", "--iters", "200"],
        vec!["oracle", small, "--rank", "2"],
        vec!["bench", "density", "--config", cfg, "--trace-every", "10"],
        vec!["bench", "noise", "--config", cfg, "--methods", "banmf,nmf,oracle", "--sizes", "4", "--ranks", "1"],
        vec!["bench", "rankgap", "--config", cfg, "--rows", "6..7", "--cols", "6..7", "--gap-ranks", "2..3"],
        vec!["bench", "time", "--config", cfg, "--sizes", "10,20"],
    ];
    let mut files = 0;
    for cmd in &commands {
        let mut snaps = Vec::new();
        for _ in 0..2 {
            let out = tempfile::tempdir().map_err(|e| e.to_string())?;
            let mut args = cmd.clone();
            args.extend(["--out", out.path().to_str().unwrap()]);
            banmf(&args)?;
            snaps.push(snapshot(out.path())?);
        }
        check(!snaps[0].is_empty(), format!("{cmd:?} wrote nothing"))?;
        check(
            snaps[0].keys().eq(snaps[1].keys()),
            format!("{cmd:?} wrote different file sets"),
        )?;
        for (name, bytes) in &snaps[0] {
            check(&snaps[1][name] == bytes, format!("{cmd:?}: {} differs", name.display()))?;
        }
        files += snaps[0].len();
    }
    Ok(format!("{} commands, {files} files identical across repeats", commands.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("monotone descent", monotone_descent),
        ("planted factors are an exact feasible point", planted_is_zero_objective),
        ("zero objective booleanizes exactly", exact_runs_booleanize_exactly),
        ("oracle lower bound", oracle_lower_bound),
        ("synthetic density fidelity", density_fidelity),
        ("rank-gap ordering", rank_gap_ordering),
        ("noise ordering", noise_ordering),
        ("timing protocol", timing_protocol),
        ("determinism", determinism),
    ];
    // Filter arguments from `cargo test` are ignored; the suite always runs whole.
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({secs:.1} s) {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({secs:.1} s) {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
