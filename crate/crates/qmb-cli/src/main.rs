//! Command-line driver: blanket searches, the spin-chain sweep, verification
//! suites, and the compatibility counterexample, with JSON/CSV artifacts that
//! embed the seed, version, and a hash of the resolved configuration.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or configuration
//! error, 3 numerical invariant violation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qmb::blanket::greedy_blanket;
use qmb::channel::choi_of_channel;
use qmb::experiments::{
    appendix_b_check, example_choi, figure3_sweep, spin_chain_channel, sweep_monotonicity_warnings,
    sweep_to_csv, SpinChainConfig,
};
use qmb::io::read_state_file;
use qmb::optim::OptimizerConfig;
use qmb::state::Region;
use qmb::verify::run_suite;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "qmb", version, about = "Quantum Markov blanket numerics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Greedy blanket search; writes a JSON report
    Blanket(BlanketArgs),
    /// Blanket sweep over evolution times and blanket sizes; writes CSV
    Spinchain(SpinchainArgs),
    /// Run a verification suite (ssa|chain|pinsker|choi|appendixb|examples|all)
    Verify(VerifyArgs),
    /// Compatibility counterexample checks; writes a JSON report
    Appendixb(AppendixbArgs),
}

#[derive(Args, Clone, Serialize, Deserialize, Default)]
struct CommonFlags {
    /// Master seed for all derived randomness
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the parallel evaluation grids (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Output path for the artifact
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optimizer restarts per measurement search
    #[arg(long)]
    restarts: Option<usize>,
    /// Nelder-Mead iterations per restart
    #[arg(long)]
    opt_iters: Option<usize>,
}

#[derive(Args, Clone, Serialize, Deserialize, Default)]
struct BlanketArgs {
    #[command(flatten)]
    common: CommonFlags,
    /// JSON config file; command-line flags win over its entries
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Built-in example channel: constant|ghz|identity-to-b1|haar
    #[arg(long)]
    example: Option<String>,
    /// Serialized state file (subsystem 0 is taken as A)
    #[arg(long)]
    state: Option<PathBuf>,
    /// Use the spin-chain channel with --n/--g/--h/--t
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    spin_chain: Option<bool>,
    /// Region size |R|
    #[arg(long)]
    r: Option<usize>,
    /// Blanket size budget q
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    g: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    h: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
}

#[derive(Args, Clone, Serialize, Deserialize, Default)]
struct SpinchainArgs {
    #[command(flatten)]
    common: CommonFlags,
    /// JSON config file; command-line flags win over its entries
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Total qubit count including the attached system qubit
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    g: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    h: Option<f64>,
    /// Largest evolution time of the grid
    #[arg(long)]
    tmax: Option<f64>,
    /// Number of time grid points (from 0 to tmax inclusive)
    #[arg(long)]
    steps: Option<usize>,
    /// Blanket sizes: "1..8" or "1,3,5"
    #[arg(long)]
    q: Option<String>,
}

#[derive(Args, Clone)]
struct VerifyArgs {
    /// Suite name
    suite: String,
    #[command(flatten)]
    common: CommonFlags,
}

#[derive(Args, Clone)]
struct AppendixbArgs {
    #[command(flatten)]
    common: CommonFlags,
    /// Number of grid points for the positivity sweep
    #[arg(long)]
    grid: Option<usize>,
}

enum CliError {
    Config(String),
    Numerical(String),
    VerificationFailed,
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::VerificationFailed => ExitCode::from(1),
            CliError::Config(_) => ExitCode::from(2),
            CliError::Numerical(_) => ExitCode::from(3),
        }
    }
}

impl From<qmb::Error> for CliError {
    fn from(e: qmb::Error) -> Self {
        match e {
            qmb::Error::InvalidConfig(_) | qmb::Error::Io(_) => CliError::Config(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Blanket(args) => cmd_blanket(args),
        Command::Spinchain(args) => cmd_spinchain(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Appendixb(args) => cmd_appendixb(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Config(msg) => eprintln!("config error: {msg}"),
                CliError::Numerical(msg) => eprintln!("numerical failure: {msg}"),
                CliError::VerificationFailed => eprintln!("verification failed"),
            }
            e.exit_code()
        }
    }
}

fn init_workers(workers: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = workers {
        if n == 0 {
            return Err(CliError::Config("workers must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

/// Merge a JSON config file under the parsed flags: flags win.
fn merge_config<T: Serialize + for<'de> Deserialize<'de>>(
    args: &T,
    config_path: Option<&Path>,
) -> Result<T, CliError> {
    let mut merged = match config_path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("reading {}: {e}", p.display())))?;
            serde_json::from_str::<serde_json::Value>(&text)
                .map_err(|e| CliError::Config(format!("parsing {}: {e}", p.display())))?
        }
        None => serde_json::Value::Object(Default::default()),
    };
    let flags = serde_json::to_value(args).map_err(|e| CliError::Config(e.to_string()))?;
    overlay_non_null(&mut merged, &flags);
    serde_json::from_value(merged).map_err(|e| CliError::Config(format!("config: {e}")))
}

fn overlay_non_null(base: &mut serde_json::Value, over: &serde_json::Value) {
    match (base, over) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                if v.is_null() {
                    continue;
                }
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => overlay_non_null(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => {
            if !o.is_null() {
                *b = o.clone();
            }
        }
    }
}

/// Hash of the fully-resolved effective parameters, i.e. everything that
/// determines the computed values (not the output path or worker count).
fn config_hash(resolved: &serde_json::Value) -> String {
    let digest = Sha256::digest(resolved.to_string().as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    hex[..16].to_string()
}

fn optimizer_config(common: &CommonFlags) -> OptimizerConfig {
    let mut cfg = OptimizerConfig::default();
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(r) = common.restarts {
        cfg.restarts = r;
    }
    if let Some(i) = common.opt_iters {
        cfg.max_iters = i;
    }
    cfg
}

fn cmd_blanket(args: BlanketArgs) -> Result<(), CliError> {
    let args: BlanketArgs = merge_config(&args, args.config.as_deref())?;
    init_workers(args.common.workers)?;
    let opt = optimizer_config(&args.common);

    let use_spin_chain = args.spin_chain.unwrap_or(false);
    let sources = [
        args.example.is_some(),
        args.state.is_some(),
        use_spin_chain,
    ]
    .iter()
    .filter(|&&x| x)
    .count();
    if sources != 1 {
        return Err(CliError::Config(
            "choose exactly one state source: --example, --state, or --spin-chain".into(),
        ));
    }

    let (state, source_desc) = if let Some(name) = &args.example {
        eprintln!("building Choi state of example '{name}'");
        (
            example_choi(name, opt.seed)?.state().clone(),
            serde_json::json!({"example": name}),
        )
    } else if let Some(path) = &args.state {
        eprintln!("loading state from {}", path.display());
        (
            read_state_file(path)?,
            serde_json::json!({"state_file": path.display().to_string()}),
        )
    } else {
        let chain = SpinChainConfig {
            n_total: args.n.unwrap_or(8),
            g: args.g.unwrap_or(-1.05),
            h: args.h.unwrap_or(0.5),
            t: args.t.unwrap_or(1.0),
        };
        eprintln!(
            "building spin-chain Choi state (n={}, g={}, h={}, t={})",
            chain.n_total, chain.g, chain.h, chain.t
        );
        let built = spin_chain_channel(&chain)?;
        if built.ground_state_degenerate {
            eprintln!("warning: degenerate environment ground state; using the lowest-index eigenvector");
        }
        (
            choi_of_channel(&built.channel)?.state().clone(),
            serde_json::json!({
                "spin_chain": {"n": chain.n_total, "g": chain.g, "h": chain.h, "t": chain.t}
            }),
        )
    };

    let r_size = args.r.unwrap_or(1);
    let q = args.q.unwrap_or(1);
    let hash = config_hash(&serde_json::json!({
        "command": "blanket",
        "source": source_desc,
        "r": r_size,
        "q": q,
        "seed": opt.seed,
        "restarts": opt.restarts,
        "max_iters": opt.max_iters,
    }));
    eprintln!(
        "greedy blanket: r={r_size}, q={q}, restarts={}, seed={}",
        opt.restarts, opt.seed
    );
    let report = greedy_blanket(&state, &Region::single(0), r_size, q, &opt)?;

    println!("step  region        cmi_bits");
    for (i, st) in report.steps.iter().enumerate() {
        let marker = if i + 1 == report.bottleneck_index {
            "  <- bottleneck"
        } else {
            ""
        };
        println!(
            "{:>4}  {:<12}  {:.9}{marker}",
            i + 1,
            format!("{:?}", st.region.indices()),
            st.cmi_bits
        );
    }
    println!(
        "Q = {:?} (core {:?}), alpha_Q = {:.9} bits, bound = {:.9} bits",
        report.q_padded.indices(),
        report.q_core.indices(),
        report.alpha_q_bits,
        report.bound_bits
    );

    let mut value = report.to_json();
    value["parameters"]["version"] = serde_json::json!(VERSION);
    value["parameters"]["config_hash"] = serde_json::json!(hash);
    let out = args
        .common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("blanket_report.json"));
    std::fs::write(&out, serde_json::to_string_pretty(&value).unwrap())
        .map_err(|e| CliError::Config(format!("writing {}: {e}", out.display())))?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn parse_q_list(spec: &str) -> Result<Vec<usize>, CliError> {
    let spec = spec.trim();
    let parse = |s: &str| -> Result<usize, CliError> {
        s.trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("bad q value '{s}'")))
    };
    if let Some((lo, hi)) = spec.split_once("..") {
        let (lo, hi) = (parse(lo)?, parse(hi)?);
        if lo == 0 || hi < lo {
            return Err(CliError::Config(format!("bad q range '{spec}'")));
        }
        Ok((lo..=hi).collect())
    } else {
        spec.split(',').map(parse).collect()
    }
}

fn cmd_spinchain(args: SpinchainArgs) -> Result<(), CliError> {
    let args: SpinchainArgs = merge_config(&args, args.config.as_deref())?;
    init_workers(args.common.workers)?;
    let opt = optimizer_config(&args.common);

    let chain = SpinChainConfig {
        n_total: args.n.unwrap_or(8),
        g: args.g.unwrap_or(-1.05),
        h: args.h.unwrap_or(0.5),
        t: 0.0,
    };
    let tmax = args.tmax.unwrap_or(3.0);
    let steps = args.steps.unwrap_or(13);
    if steps == 0 || tmax < 0.0 {
        return Err(CliError::Config("need steps >= 1 and tmax >= 0".into()));
    }
    let times: Vec<f64> = if steps == 1 {
        vec![0.0]
    } else {
        (0..steps)
            .map(|k| tmax * k as f64 / (steps - 1) as f64)
            .collect()
    };
    let qs = parse_q_list(&args.q.clone().unwrap_or_else(|| "1..8".into()))?;
    let hash = config_hash(&serde_json::json!({
        "command": "spinchain",
        "n": chain.n_total,
        "g": chain.g,
        "h": chain.h,
        "times": times,
        "qs": qs,
        "seed": opt.seed,
        "restarts": opt.restarts,
        "max_iters": opt.max_iters,
    }));

    eprintln!(
        "sweep: n={}, {} times up to {tmax}, q in {qs:?}, restarts={}, seed={}",
        chain.n_total,
        times.len(),
        opt.restarts,
        opt.seed
    );
    if spin_chain_channel(&chain.with_t(0.0))?.ground_state_degenerate {
        eprintln!("warning: degenerate environment ground state; using the lowest-index eigenvector");
    }
    let rows = figure3_sweep(&times, &qs, &chain, &opt);
    for warning in sweep_monotonicity_warnings(&rows) {
        eprintln!("warning: {warning}");
    }
    let mut csv = format!("# seed={} version={VERSION} config_hash={hash}\n", opt.seed);
    csv.push_str(&sweep_to_csv(&rows));

    let out = args
        .common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("spinchain_sweep.csv"));
    std::fs::write(&out, &csv)
        .map_err(|e| CliError::Config(format!("writing {}: {e}", out.display())))?;
    eprintln!("wrote {} ({} rows)", out.display(), rows.len());

    if rows.iter().any(|r| r.error.is_some()) {
        let msg = rows
            .iter()
            .filter_map(|r| r.error.as_deref())
            .next()
            .unwrap_or("unknown")
            .to_string();
        return Err(CliError::Numerical(format!("sweep cell failed: {msg}")));
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    init_workers(args.common.workers)?;
    let seed = args.common.seed.unwrap_or(7);
    let reports = run_suite(&args.suite, seed)?;
    let mut all_pass = true;
    for report in &reports {
        for check in &report.checks {
            let status = if check.pass { "PASS" } else { "FAIL" };
            println!("[{status}] {}/{}: {}", report.suite, check.name, check.detail);
            all_pass &= check.pass;
        }
    }
    if all_pass {
        Ok(())
    } else {
        Err(CliError::VerificationFailed)
    }
}

fn cmd_appendixb(args: AppendixbArgs) -> Result<(), CliError> {
    init_workers(args.common.workers)?;
    let grid = args.grid.unwrap_or(201);
    let seed = args.common.seed.unwrap_or(7);
    let report = appendix_b_check(grid)?;
    println!(
        "positivity window detected [{:.6}, {:.6}], expected [{:.6}, {:.6}]",
        report.positive_window_detected[0],
        report.positive_window_detected[1],
        report.expected[0],
        report.expected[1]
    );
    println!(
        "marginals match: {}, boundary |λ_min|: {:.2e}, {:.2e}",
        report.marginals_match,
        report.boundary_eigenvalue_abs[0],
        report.boundary_eigenvalue_abs[1]
    );
    let mut value = report.to_json();
    value["seed"] = serde_json::json!(seed);
    value["version"] = serde_json::json!(VERSION);
    value["config_hash"] = serde_json::json!(config_hash(&serde_json::json!({
        "command": "appendixb",
        "grid": grid,
    })));
    let out = args
        .common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("appendixb_report.json"));
    std::fs::write(&out, serde_json::to_string_pretty(&value).unwrap())
        .map_err(|e| CliError::Config(format!("writing {}: {e}", out.display())))?;
    eprintln!("wrote {}", out.display());
    if report.pass() {
        Ok(())
    } else {
        Err(CliError::VerificationFailed)
    }
}
