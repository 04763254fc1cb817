//! Experiment runners. Trials fan out over a bounded rayon pool and are
//! merged in `(cell, trial, method)` order, so the thread count never
//! changes the output.

use std::time::Instant;

use banmf_core::seed::derive_seed;
use banmf_core::{
    apply_flip_noise, boolean_relative_error, booleanize, exhaustive_bmf, generate_planted,
    generate_rank_gap_suite, hamming_error, init_state, AuxiliaryUpdate, BmfError, BoolMatrix,
    RankGapSuite, SynthSpec, ThresholdChoice,
};
use log::{info, warn};
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentConfig, Method};
use crate::error::{HarnessError, Result};
use crate::record::{ExperimentOutput, Failure, TracePoint, TrialRecord};

// Salt separating the solver's initialization stream from instance seeds.
const SOLVER_SALT: u64 = 0x5eed;

/// One generated input plus the bookkeeping that ends up in its records.
#[derive(Debug, Clone)]
pub struct Instance {
    pub experiment: Experiment,
    pub cell: usize,
    pub trial: usize,
    pub k: usize,
    pub density: f64,
    pub noise: f64,
    pub gap: Option<usize>,
    pub seed: u64,
    /// Initialization seed shared by every method (and, in the noise sweep,
    /// every noise level) on this instance.
    pub solver_seed: u64,
    pub x: BoolMatrix,
    pub x_clean: Option<BoolMatrix>,
}

/// Result of one method on one instance.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub record: TrialRecord,
    pub traces: Vec<TracePoint>,
    pub choice: ThresholdChoice,
}

fn aux_for(method: Method) -> AuxiliaryUpdate {
    match method {
        Method::Banmf | Method::BanmfReg => AuxiliaryUpdate::Project,
        _ => AuxiliaryUpdate::Freeze,
    }
}

fn micros(t: Instant) -> u64 {
    t.elapsed().as_micros() as u64
}

/// Runs `method` on `inst`: the iterative solve (timed on its own), then
/// Booleanization (timed separately), or the exhaustive search for the
/// oracle.
pub fn run_method(inst: &Instance, method: Method, cfg: &ExperimentConfig) -> Result<MethodRun> {
    let (n, m) = inst.x.shape();
    let mut traces = Vec::new();
    let (choice, objective_final, iterations, loop_us, bool_us) = if method == Method::Oracle {
        let t0 = Instant::now();
        let sol = exhaustive_bmf(&inst.x, inst.k, cfg.oracle_budget)?;
        let us = micros(t0);
        let choice = ThresholdChoice {
            delta_w: f64::NAN,
            delta_h: f64::NAN,
            hamming: sol.min_hamming,
            w_hat: sol.w,
            h_hat: sol.h,
        };
        (choice, None, 0, us, 0)
    } else {
        let scfg = method.solver_config(inst.k, cfg.iters, cfg.lambda, cfg.epsilon, inst.solver_seed);
        let aux = aux_for(method);
        let mut state = init_state(&inst.x, &scfg)?;
        let t0 = Instant::now();
        for it in 1..=cfg.iters {
            let obj = state.step(&inst.x, &scfg, aux);
            if cfg.trace || cfg.trace_every.is_some() {
                let hamming = match cfg.trace_every {
                    Some(every) if it % every == 0 || it == cfg.iters => {
                        Some(booleanize(&inst.x, state.w(), state.h(), cfg.npoint)?.hamming)
                    }
                    _ => None,
                };
                traces.push(TracePoint {
                    experiment: inst.experiment,
                    cell: inst.cell,
                    trial: inst.trial,
                    method,
                    iteration: it,
                    objective: obj,
                    hamming,
                });
            }
        }
        let loop_us = micros(t0);
        let t1 = Instant::now();
        let choice = booleanize(&inst.x, state.w(), state.h(), cfg.npoint)?;
        (choice, Some(state.final_objective()), state.iterations_run(), loop_us, micros(t1))
    };
    let recon = choice.reconstruction();
    let (clean_hamming, clean_relative_error) = match &inst.x_clean {
        Some(c) => (Some(hamming_error(c, &recon)?), Some(boolean_relative_error(c, &recon)?)),
        None => (None, None),
    };
    let record = TrialRecord {
        experiment: inst.experiment,
        cell: inst.cell,
        trial: inst.trial,
        method,
        n,
        m,
        k: inst.k,
        density: inst.density,
        noise: inst.noise,
        gap: inst.gap,
        seed: inst.seed,
        hamming: choice.hamming,
        relative_error: choice.hamming as f64 / (n * m) as f64,
        clean_hamming,
        clean_relative_error,
        objective_final,
        iterations,
        delta_w: (method != Method::Oracle).then_some(choice.delta_w),
        delta_h: (method != Method::Oracle).then_some(choice.delta_h),
        wall_time_ms: loop_us / 1000,
        wall_time_us: loop_us,
        booleanize_us: bool_us,
    };
    Ok(MethodRun { record, traces, choice })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start worker pool: {e}")))
}

/// Runs every configured method on every instance. Budget overruns of the
/// oracle become failures; any other error aborts the experiment.
pub fn run_instances(
    instances: &[Instance],
    cfg: &ExperimentConfig,
    jobs: usize,
) -> Result<ExperimentOutput> {
    let work: Vec<(&Instance, Method)> = instances
        .iter()
        .flat_map(|inst| cfg.methods.iter().map(move |&m| (inst, m)))
        .collect();
    let results: Vec<(usize, usize, Method, Result<MethodRun>)> = pool(jobs)?.install(|| {
        work.par_iter()
            .map(|&(inst, m)| (inst.cell, inst.trial, m, run_method(inst, m, cfg)))
            .collect()
    });
    let mut out = ExperimentOutput::default();
    for (cell, trial, method, res) in results {
        match res {
            Ok(run) => {
                out.records.push(run.record);
                out.traces.extend(run.traces);
            }
            Err(HarnessError::Core(e @ BmfError::BudgetExceeded { .. })) => {
                warn!("cell {cell} trial {trial} {method}: {e}");
                out.failures.push(Failure {
                    experiment: cfg.experiment,
                    cell,
                    trial,
                    method: Some(method),
                    reason: e.to_string(),
                });
            }
            Err(e) => return Err(e),
        }
    }
    out.records.sort_by_key(|r| (r.cell, r.trial, r.method));
    out.traces.sort_by_key(|t| (t.cell, t.trial, t.method, t.iteration));
    out.failures.sort_by_key(|f| (f.cell, f.trial, f.method));
    Ok(out)
}

/// Planted instances over sizes × ranks × densities × noises. Within a trial
/// the clean matrix is shared by all noise levels of the same
/// (size, rank, density) so the noise comparison is paired; the flip mask of
/// trial `t` in cell `c` is seeded by `hash(base, c, t)`.
fn planted_grid(cfg: &ExperimentConfig) -> (Vec<Instance>, Vec<Failure>) {
    let mut instances = Vec::new();
    let mut failures = Vec::new();
    let mut base_cell = 0u64;
    let mut cell = 0usize;
    for &n in &cfg.sizes {
        for &k in &cfg.ranks {
            for &d in &cfg.densities {
                for trial in 0..cfg.trials {
                    let clean_seed = derive_seed(cfg.seed, &[base_cell, trial as u64]);
                    let spec = SynthSpec::new(n, n, k, d).with_seed(clean_seed);
                    let planted = generate_planted(&spec);
                    for (j, &p) in cfg.noises.iter().enumerate() {
                        let c = cell + j;
                        let seed = derive_seed(cfg.seed, &[c as u64, trial as u64]);
                        match &planted {
                            Ok(inst) => instances.push(Instance {
                                experiment: cfg.experiment,
                                cell: c,
                                trial,
                                k,
                                density: d,
                                noise: p,
                                gap: None,
                                seed,
                                solver_seed: derive_seed(clean_seed, &[SOLVER_SALT]),
                                x: apply_flip_noise(&inst.x_clean, p, seed),
                                x_clean: Some(inst.x_clean.clone()),
                            }),
                            Err(e) => {
                                warn!("cell {c} trial {trial}: generation failed: {e}");
                                failures.push(Failure {
                                    experiment: cfg.experiment,
                                    cell: c,
                                    trial,
                                    method: None,
                                    reason: e.to_string(),
                                });
                            }
                        }
                    }
                }
                base_cell += 1;
                cell += cfg.noises.len();
            }
        }
    }
    (instances, failures)
}

fn run_planted(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let (instances, failures) = planted_grid(cfg);
    info!("{}: {} instances, {} methods", cfg.experiment, instances.len(), cfg.methods.len());
    let mut out = run_instances(&instances, cfg, jobs)?;
    out.failures.extend(failures);
    out.failures.sort_by_key(|f| (f.cell, f.trial, f.method));
    Ok(out)
}

pub fn run_density_sweep(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_planted(cfg, cfg.jobs)
}

/// Same grid as the density sweep; errors are measured against the
/// corrupted matrix, with the clean-matrix error kept alongside.
pub fn run_noise_sweep(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_planted(cfg, cfg.jobs)
}

pub fn rank_gap_suite(cfg: &ExperimentConfig) -> RankGapSuite {
    RankGapSuite {
        rows: cfg.gap_rows.clone(),
        cols: cfg.gap_cols.clone(),
        ranks: cfg.gap_ranks.clone(),
        densities: cfg.densities.clone(),
        per_cell: cfg.trials,
        seed: cfg.seed,
        retries: cfg.retries,
    }
}

pub fn run_rank_gap_study(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let suite = rank_gap_suite(cfg);
    let generated = generate_rank_gap_suite(&suite)?;
    let instances: Vec<Instance> = generated
        .into_iter()
        .map(|s| Instance {
            experiment: cfg.experiment,
            cell: s.cell,
            trial: s.index,
            k: s.instance.spec.rank,
            density: s.instance.spec.density,
            noise: 0.0,
            gap: s.instance.rank_lower_bound_gap,
            seed: s.instance.spec.seed,
            solver_seed: derive_seed(s.instance.spec.seed, &[SOLVER_SALT]),
            x: s.instance.x.clone(),
            x_clean: Some(s.instance.x_clean),
        })
        .collect();
    // Cells the suite gave up on are reported rather than silently dropped.
    let mut failures = Vec::new();
    for (cell, spec) in suite.cells().iter().enumerate() {
        if spec.rank > spec.rows.min(spec.cols) {
            continue;
        }
        for trial in 0..suite.per_cell {
            if !instances.iter().any(|i| i.cell == cell && i.trial == trial) {
                failures.push(Failure {
                    experiment: cfg.experiment,
                    cell,
                    trial,
                    method: None,
                    reason: format!("no instance with rank >= {} after {} retries", spec.rank, suite.retries),
                });
            }
        }
    }
    info!("rankgap: {} instances, {} missing", instances.len(), failures.len());
    let mut out = run_instances(&instances, cfg, cfg.jobs)?;
    out.failures.extend(failures);
    out.failures.sort_by_key(|f| (f.cell, f.trial, f.method));
    Ok(out)
}

/// Exactly `cfg.iters` iterations per run, one run at a time.
pub fn run_timing_study(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let mut cfg = cfg.clone();
    cfg.noises = vec![0.0];
    run_planted(&cfg, 1)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    match cfg.experiment {
        Experiment::Density => run_density_sweep(cfg),
        Experiment::Noise => run_noise_sweep(cfg),
        Experiment::RankGap => run_rank_gap_study(cfg),
        Experiment::Time => run_timing_study(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(experiment: Experiment) -> ExperimentConfig {
        ExperimentConfig {
            trials: 2,
            sizes: vec![8],
            ranks: vec![2],
            densities: vec![0.3, 0.6],
            iters: 30,
            jobs: 2,
            ..ExperimentConfig::desk(experiment)
        }
    }

    #[test]
    fn density_sweep_row_count_and_order() {
        let cfg = tiny(Experiment::Density);
        let out = run_density_sweep(&cfg).unwrap();
        assert_eq!(out.records.len(), 2 * 2 * cfg.methods.len());
        let keys: Vec<_> = out.records.iter().map(|r| (r.cell, r.trial, r.method)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        for r in &out.records {
            assert_eq!(r.relative_error, r.hamming as f64 / (r.n * r.m) as f64);
            assert_eq!(r.iterations, 30);
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let mut cfg = tiny(Experiment::Density);
        cfg.jobs = 1;
        let a = run_density_sweep(&cfg).unwrap();
        cfg.jobs = 4;
        let b = run_density_sweep(&cfg).unwrap();
        let strip = |o: &ExperimentOutput| {
            o.records
                .iter()
                .map(|r| (r.cell, r.trial, r.method, r.hamming, r.objective_final.map(f64::to_bits)))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn zero_noise_matches_density_cell() {
        let mut noise = tiny(Experiment::Noise);
        noise.densities = vec![0.5];
        noise.noises = vec![0.0, 0.05];
        let mut dens = noise.clone();
        dens.experiment = Experiment::Density;
        dens.noises = vec![0.0];
        let a = run_noise_sweep(&noise).unwrap();
        let b = run_density_sweep(&dens).unwrap();
        assert_eq!(a.records.len(), 2 * 2 * noise.methods.len());
        for rb in &b.records {
            let ra = a
                .records
                .iter()
                .find(|r| r.noise == 0.0 && r.trial == rb.trial && r.method == rb.method)
                .unwrap();
            assert_eq!(ra.hamming, rb.hamming);
        }
        assert!(a.records.iter().all(|r| r.clean_hamming.is_some()));
    }

    #[test]
    fn noise_levels_share_the_clean_matrix() {
        let mut cfg = tiny(Experiment::Noise);
        cfg.noises = vec![0.0, 0.01, 0.05];
        let (instances, failures) = planted_grid(&cfg);
        assert!(failures.is_empty());
        assert_eq!(instances.len(), 2 * 2 * 3);
        for a in &instances {
            for b in &instances {
                let same_group = a.cell / 3 == b.cell / 3 && a.trial == b.trial;
                assert_eq!(same_group, a.x_clean == b.x_clean);
                assert_eq!(same_group, a.solver_seed == b.solver_seed);
            }
            if a.noise == 0.0 {
                assert_eq!(Some(&a.x), a.x_clean.as_ref());
            }
        }
    }

    #[test]
    fn oracle_over_budget_is_a_failure_not_an_abort() {
        let mut cfg = tiny(Experiment::Density);
        cfg.methods = vec![Method::Banmf, Method::Oracle];
        cfg.oracle_budget = 1 << 10;
        let out = run_density_sweep(&cfg).unwrap();
        assert_eq!(out.records.len(), 4);
        assert_eq!(out.failures.len(), 4);
        assert!(out.failures.iter().all(|f| f.method == Some(Method::Oracle)));
    }

    #[test]
    fn oracle_is_a_lower_bound() {
        let mut cfg = tiny(Experiment::Density);
        cfg.sizes = vec![3];
        cfg.ranks = vec![1];
        cfg.trials = 5;
        cfg.methods = Method::ALL.to_vec();
        let out = run_density_sweep(&cfg).unwrap();
        for r in &out.records {
            let best = out
                .records
                .iter()
                .find(|o| o.method == Method::Oracle && o.cell == r.cell && o.trial == r.trial)
                .unwrap();
            assert!(r.hamming >= best.hamming);
        }
    }

    #[test]
    fn traces_cover_every_iteration() {
        let mut cfg = tiny(Experiment::Density);
        cfg.trials = 1;
        cfg.densities = vec![0.5];
        cfg.methods = vec![Method::Banmf];
        cfg.trace = true;
        cfg.trace_every = Some(10);
        let out = run_density_sweep(&cfg).unwrap();
        assert_eq!(out.traces.len(), 30);
        assert_eq!(out.traces.iter().filter(|t| t.hamming.is_some()).count(), 3);
        let last = out.traces.last().unwrap();
        assert_eq!(last.hamming, Some(out.records[0].hamming));
        assert_eq!(Some(last.objective), out.records[0].objective_final);
    }

    #[test]
    fn rank_gap_records_carry_gap() {
        let mut cfg = ExperimentConfig::desk(Experiment::RankGap);
        cfg.gap_rows = 6..=7;
        cfg.gap_cols = 6..=6;
        cfg.gap_ranks = 2..=2;
        cfg.densities = vec![0.5];
        cfg.trials = 2;
        cfg.iters = 20;
        let out = run_rank_gap_study(&cfg).unwrap();
        assert!(!out.records.is_empty());
        assert!(out.records.iter().all(|r| r.gap.is_some()));
        assert_eq!(out.records.len() + out.failures.len() * cfg.methods.len(), 2 * 2 * cfg.methods.len());
    }
}
