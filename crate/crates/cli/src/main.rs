use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use banmf_core::io::{load_bool_csv, save_bool_csv, write_bool_csv};
use banmf_core::{exhaustive_bmf, generate_planted, SynthSpec};
use banmf_cli::error::{exit, HarnessError};
use banmf_cli::record::write_outputs;
use banmf_cli::{factorize_file, run_experiment, Experiment, ExperimentConfig, FactorizeOptions, Method};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "banmf", version, about = "Boolean matrix factorization via projected NMF")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Factorize a 0/1 CSV matrix.
    Factorize(FactorizeArgs),
    /// Draw a planted synthetic instance.
    Synth(SynthArgs),
    /// Exhaustive optimum for a small matrix.
    Oracle(OracleArgs),
    /// Run an experiment: density, noise, rankgap or time.
    Bench(BenchArgs),
}

/// Solver flags shared by `factorize` and `bench`. Unset flags fall back to
/// the config file, then to the built-in defaults.
#[derive(Args, Debug, Default)]
struct SolverFlags {
    #[arg(long)]
    iters: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    npoint: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    oracle_budget: Option<String>,
    /// `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl SolverFlags {
    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("iters", &self.iters),
            ("lambda", &self.lambda),
            ("epsilon", &self.epsilon),
            ("npoint", &self.npoint),
            ("seed", &self.seed),
            ("oracle_budget", &self.oracle_budget),
        ]
    }
}

#[derive(Args, Debug)]
struct FactorizeArgs {
    input: PathBuf,
    #[arg(long)]
    rank: Option<String>,
    #[arg(long)]
    method: Option<String>,
    /// Skip a header line in the input.
    #[arg(long)]
    header: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    #[arg(long)]
    rank: usize,
    #[arg(long)]
    density: f64,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct OracleArgs {
    input: PathBuf,
    #[arg(long)]
    rank: usize,
    #[arg(long)]
    header: bool,
    /// Largest number of candidate factor pairs to enumerate.
    #[arg(long, default_value_t = banmf_core::oracle::DEFAULT_BUDGET)]
    budget: u64,
    /// Write W.csv, H.csv and metrics.json here instead of printing.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    experiment: String,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    sizes: Option<String>,
    /// Ranks (density, noise and timing studies).
    #[arg(long, alias = "rank")]
    ranks: Option<String>,
    #[arg(long)]
    densities: Option<String>,
    #[arg(long)]
    noises: Option<String>,
    /// Rank-gap row range, e.g. `10..20`.
    #[arg(long)]
    rows: Option<String>,
    #[arg(long)]
    cols: Option<String>,
    #[arg(long)]
    gap_ranks: Option<String>,
    /// Comma-separated methods.
    #[arg(long, alias = "method")]
    methods: Option<String>,
    /// Worker threads (0 = all cores). The timing study always uses one.
    #[arg(long)]
    jobs: Option<String>,
    /// Start from the full-size grids instead of the desk defaults.
    #[arg(long)]
    full_scale: bool,
    /// Record per-iteration objective traces.
    #[arg(long)]
    trace: bool,
    /// Also record the Boolean error every N iterations (implies --trace).
    #[arg(long)]
    trace_every: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

fn base_config(
    experiment: Experiment,
    full_scale: bool,
    file: Option<&Path>,
) -> banmf_cli::Result<ExperimentConfig> {
    let mut cfg = if full_scale {
        ExperimentConfig::full(experiment)
    } else {
        ExperimentConfig::desk(experiment)
    };
    if let Some(path) = file {
        cfg.apply_file(path)?;
    }
    Ok(cfg)
}

fn apply_flags(cfg: &mut ExperimentConfig, pairs: &[(&str, &Option<String>)]) -> banmf_cli::Result<()> {
    for (key, value) in pairs {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    Ok(())
}

fn cmd_factorize(a: FactorizeArgs) -> anyhow::Result<()> {
    let mut cfg = ExperimentConfig::desk(Experiment::Density);
    cfg.ranks.clear();
    cfg.methods = vec![Method::Banmf];
    if let Some(path) = &a.solver.config {
        cfg.apply_file(path)?;
    }
    let mut pairs = a.solver.pairs();
    pairs.push(("ranks", &a.rank));
    pairs.push(("methods", &a.method));
    apply_flags(&mut cfg, &pairs)?;
    let rank = match cfg.ranks.as_slice() {
        [k] if *k > 0 => *k,
        [] => return Err(HarnessError::Config("--rank is required".into()).into()),
        _ => return Err(HarnessError::Config("factorize takes a single positive rank".into()).into()),
    };
    let method = match cfg.methods.as_slice() {
        [m] => *m,
        _ => return Err(HarnessError::Config("factorize takes a single method".into()).into()),
    };
    let opts = FactorizeOptions {
        method,
        rank,
        iters: cfg.iters,
        lambda: cfg.lambda,
        epsilon: cfg.epsilon,
        npoint: cfg.npoint,
        seed: cfg.seed,
        header: a.header,
        oracle_budget: cfg.oracle_budget,
    };
    let out = a.out.or(cfg.out).unwrap_or_else(|| PathBuf::from("."));
    let f = factorize_file(&a.input, &opts, &out)?;
    println!(
        "{method} k={rank}: hamming {} relative_error {:.6} ({} iterations, {} ms)",
        f.metrics.hamming, f.metrics.relative_error, f.metrics.iterations, f.timing.wall_time_ms
    );
    Ok(())
}

#[derive(Serialize)]
struct SynthMeta<'a> {
    spec: &'a SynthSpec,
    density_clean: f64,
    density: f64,
    flips: usize,
}

fn cmd_synth(a: SynthArgs) -> anyhow::Result<()> {
    let spec = SynthSpec::new(a.rows, a.cols, a.rank, a.density)
        .with_noise(a.noise)
        .with_seed(a.seed);
    let inst = generate_planted(&spec)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    save_bool_csv(a.out.join("x.csv"), &inst.x)?;
    save_bool_csv(a.out.join("x_clean.csv"), &inst.x_clean)?;
    save_bool_csv(a.out.join("w_true.csv"), &inst.w_true)?;
    save_bool_csv(a.out.join("h_true.csv"), &inst.h_true)?;
    let meta = SynthMeta {
        spec: &inst.spec,
        density_clean: inst.x_clean.density(),
        density: inst.x.density(),
        flips: banmf_core::hamming_error(&inst.x, &inst.x_clean)?,
    };
    fs::write(a.out.join("meta.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    println!("wrote {}x{} instance to {}", a.rows, a.cols, a.out.display());
    Ok(())
}

#[derive(Serialize)]
struct OracleMeta {
    rank: usize,
    min_hamming: usize,
    relative_error: f64,
}

fn cmd_oracle(a: OracleArgs) -> anyhow::Result<()> {
    let x = load_bool_csv(&a.input, a.header)?;
    let sol = exhaustive_bmf(&x, a.rank, a.budget)?;
    let meta = OracleMeta {
        rank: a.rank,
        min_hamming: sol.min_hamming,
        relative_error: sol.min_hamming as f64 / x.len() as f64,
    };
    match a.out {
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            save_bool_csv(dir.join("W.csv"), &sol.w)?;
            save_bool_csv(dir.join("H.csv"), &sol.h)?;
            fs::write(dir.join("metrics.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
            println!("min_hamming {}", sol.min_hamming);
        }
        None => {
            println!("min_hamming {}", sol.min_hamming);
            let stdout = std::io::stdout();
            println!("W");
            write_bool_csv(stdout.lock(), &sol.w)?;
            println!("H");
            write_bool_csv(stdout.lock(), &sol.h)?;
        }
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> anyhow::Result<()> {
    let experiment: Experiment = a.experiment.parse()?;
    let mut cfg = base_config(experiment, a.full_scale, a.solver.config.as_deref())?;
    let mut pairs = a.solver.pairs();
    pairs.extend([
        ("trials", &a.trials),
        ("sizes", &a.sizes),
        ("ranks", &a.ranks),
        ("densities", &a.densities),
        ("noises", &a.noises),
        ("rows", &a.rows),
        ("cols", &a.cols),
        ("gap_ranks", &a.gap_ranks),
        ("methods", &a.methods),
        ("jobs", &a.jobs),
        ("trace_every", &a.trace_every),
    ]);
    apply_flags(&mut cfg, &pairs)?;
    if a.trace {
        cfg.trace = true;
    }
    if let Some(out) = a.out {
        cfg.out = Some(out);
    }
    cfg.validate()?;
    let dir = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("results/{}", experiment.name())));
    let output = run_experiment(&cfg)?;
    write_outputs(&dir, &cfg, &output)?;
    println!(
        "{}: {} records, {} failures -> {}",
        experiment,
        output.records.len(),
        output.failures.len(),
        dir.display()
    );
    for row in banmf_cli::summarize(&output.records) {
        let group = match row.gap {
            Some(g) => format!("gap={g}"),
            None => format!(
                "{}x{} k={} d={} p={}",
                row.n.unwrap_or(0),
                row.m.unwrap_or(0),
                row.k.unwrap_or(0),
                row.density.unwrap_or(0.0),
                row.noise.unwrap_or(0.0)
            ),
        };
        println!(
            "  {group:<28} {:<10} n={:<4} mean {:.4} sd {:.4}",
            row.method.name(),
            row.count,
            row.mean_relative_error,
            row.std_relative_error
        );
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let code = if let Some(h) = err.downcast_ref::<HarnessError>() {
        h.exit_code()
    } else if let Some(b) = err.downcast_ref::<banmf_core::BmfError>() {
        HarnessError::exit_code_for(b)
    } else {
        exit::DATA
    };
    code as u8
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(exit::USAGE as u8)
            } else {
                ExitCode::from(exit::SUCCESS as u8)
            };
        }
    };
    let result = match cli.command {
        Command::Factorize(a) => cmd_factorize(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
