//! Command-line frontend: criticality, spectra, essential-spectrum
//! classification, entropies, and embezzlement scans for free-fermion
//! chain models, persisted as CSV/JSON artifacts.

mod report;
mod schedule;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use halfchain::embezzle::{
    self, bruteforce_unitary_oracle, monopartite_error, EmbezzleReport, ScanConfig, TargetPolicy,
    TargetState,
};
use halfchain::essspec::{
    classify_factor_type, essential_spectrum, trace_class_evidence, FactorType,
};
use halfchain::finchain::{
    finite_ground_projection, halfchain_modes, kernel_dimension, open_chain_hamiltonian,
    KernelFill,
};
use halfchain::fit::linear_fit;
use halfchain::hopping::HoppingModel;
use halfchain::quasifree::{entanglement_entropy, TruncatedSpectrum};
use halfchain::spectral::{ground_state_symbol, is_critical, KernelPolicy, Tolerances};
use halfchain::toeplitz::{
    correlation_spectrum, finite_section, hs_divergence_verdict, hs_offdiagonal_partial_sums,
    DEFAULT_CLIP_TOL, DEFAULT_SECTION_GRID,
};

use report::{atomic_write, csv_header, fmt_f64, json_artifact};
use schedule::{parse_eps_list, parse_schedule};

#[derive(Parser)]
#[command(
    name = "halfchain",
    version,
    about = "Criticality, essential spectra, and embezzlement errors for free-fermion chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModelArg {
    /// Path to a JSON hopping-model file
    #[arg(long)]
    model: PathBuf,
}

#[derive(Args, Clone)]
struct JumpArgs {
    /// Scan grid for discontinuity detection
    #[arg(long, default_value_t = 4096)]
    grid: usize,
    /// Frobenius jump threshold in (0,1)
    #[arg(long, default_value_t = 1e-3)]
    jump_threshold: f64,
}

impl JumpArgs {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            grid_size: self.grid,
            jump_threshold: self.jump_threshold,
            ..Tolerances::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decide criticality: scan the ground-state symbol for jumps
    Criticality {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        jumps: JumpArgs,
        /// Output JSON path
        #[arg(long, default_value = "criticality.json")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Eigenvalues of finite sections of the half-chain correlation operator
    Spectrum {
        #[command(flatten)]
        model: ModelArg,
        /// Section sizes, e.g. 16,32,64 or 16:1024:x2
        #[arg(long)]
        sizes: String,
        /// Quadrature grid (power of two)
        #[arg(long, default_value_t = DEFAULT_SECTION_GRID)]
        grid: usize,
        /// Eigenvalue clip tolerance
        #[arg(long, default_value_t = DEFAULT_CLIP_TOL)]
        clip_tol: f64,
        /// Output CSV path
        #[arg(long, default_value = "spectrum.csv")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Essential spectrum of q*pq from the symbol's jumps
    Essspec {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        jumps: JumpArgs,
        #[arg(long, default_value = "essspec.json")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Factor-type verdict: interval criterion, HS tail, section decay
    Classify {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        jumps: JumpArgs,
        /// Largest offset in the HS partial sums
        #[arg(long, default_value_t = 4096)]
        hs_max: usize,
        /// Section sizes probed for trace-class evidence
        #[arg(long, default_value = "128:1024:x2")]
        evidence_sizes: String,
        #[arg(long, default_value = "classify.json")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Half-chain entanglement entropy across chain sizes
    Entropy {
        #[command(flatten)]
        model: ModelArg,
        /// Chain sizes, e.g. 8,16,32 or 8:512:x2
        #[arg(long)]
        sizes: String,
        /// Cut position: "half" or a site index
        #[arg(long, default_value = "half")]
        cut: CutArg,
        #[arg(long, default_value = "entropy.csv")]
        out: PathBuf,
        /// Plot data (ln n, S) path
        #[arg(long, default_value = "entropy_plot.csv")]
        plot_out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Half-chain mode spectrum of one finite chain
    Modes {
        #[command(flatten)]
        model: ModelArg,
        /// Chain length
        #[arg(long)]
        n: usize,
        /// Cut position: "half" or a site index
        #[arg(long, default_value = "half")]
        cut: CutArg,
        #[arg(long, default_value = "modes.csv")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Embezzlement-error scan over chain lengths and target dimensions
    EmbezzleScan {
        #[command(flatten)]
        model: ModelArg,
        /// Chain lengths, e.g. 8:256:x2 (even)
        #[arg(long)]
        lengths: String,
        /// Target dimensions, e.g. 2,3,4
        #[arg(long, default_value = "2")]
        dims: String,
        /// Error thresholds for n(ε,d), e.g. 0.3,0.1,0.03
        #[arg(long, default_value = "0.3,0.1,0.03")]
        eps: String,
        /// Target policy
        #[arg(long, value_enum, default_value_t = PolicyArg::MaxEnt)]
        policy: PolicyArg,
        /// Product-spectrum truncation size
        #[arg(long, default_value_t = 4096)]
        topk: usize,
        /// Stop enumerating once 1 - mass_floor of the mass is retained
        #[arg(long, default_value_t = 1e-6)]
        mass_floor: f64,
        /// Worker threads (default: HALFCHAIN_JOBS or all cores)
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, default_value = "scan.csv")]
        out: PathBuf,
        #[arg(long, default_value = "thresholds.json")]
        thresholds_out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Validate the sorted-spectra alignment against the brute-force
    /// unitary oracle on random instances
    VerifyOracle {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 6000)]
        iterations: usize,
        #[arg(long, default_value = "oracle.json")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum PolicyArg {
    MaxEnt,
    Cover,
}

#[derive(Clone, Copy)]
enum CutArg {
    Half,
    At(usize),
}

impl FromStr for CutArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("half") {
            Ok(CutArg::Half)
        } else {
            s.parse::<usize>()
                .map(CutArg::At)
                .map_err(|_| format!("cut must be \"half\" or a site index, got {s:?}"))
        }
    }
}

impl CutArg {
    fn resolve(&self, n: usize) -> usize {
        match self {
            CutArg::Half => n / 2,
            CutArg::At(c) => *c,
        }
    }

    fn describe(&self) -> String {
        match self {
            CutArg::Half => "half".into(),
            CutArg::At(c) => c.to_string(),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(summary) => println!("{summary}"),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            std::process::exit(failure.code);
        }
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl From<halfchain::Error> for Failure {
    fn from(e: halfchain::Error) -> Self {
        Failure {
            code: if e.is_validation() { 2 } else { 3 },
            message: e.to_string(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure {
            code: 2,
            message: format!("{e:#}"),
        }
    }
}

fn load_model(path: &Path) -> Result<HoppingModel> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading model file {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing model file {}", path.display()))
}

fn run(command: Command) -> std::result::Result<String, Failure> {
    match command {
        Command::Criticality {
            model,
            jumps,
            out,
            seed,
        } => cmd_criticality(&model.model, &jumps, &out, seed),
        Command::Spectrum {
            model,
            sizes,
            grid,
            clip_tol,
            out,
            seed,
        } => cmd_spectrum(&model.model, &sizes, grid, clip_tol, &out, seed),
        Command::Essspec {
            model,
            jumps,
            out,
            seed,
        } => cmd_essspec(&model.model, &jumps, &out, seed),
        Command::Classify {
            model,
            jumps,
            hs_max,
            evidence_sizes,
            out,
            seed,
        } => cmd_classify(&model.model, &jumps, hs_max, &evidence_sizes, &out, seed),
        Command::Entropy {
            model,
            sizes,
            cut,
            out,
            plot_out,
            seed,
        } => cmd_entropy(&model.model, &sizes, cut, &out, &plot_out, seed),
        Command::Modes {
            model,
            n,
            cut,
            out,
            seed,
        } => cmd_modes(&model.model, n, cut, &out, seed),
        Command::EmbezzleScan {
            model,
            lengths,
            dims,
            eps,
            policy,
            topk,
            mass_floor,
            jobs,
            out,
            thresholds_out,
            seed,
        } => cmd_embezzle_scan(
            &model.model,
            &lengths,
            &dims,
            &eps,
            policy,
            topk,
            mass_floor,
            jobs,
            &out,
            &thresholds_out,
            seed,
        ),
        Command::VerifyOracle {
            seed,
            instances,
            iterations,
            out,
        } => cmd_verify_oracle(seed, instances, iterations, &out),
    }
}

fn cmd_criticality(
    model_path: &Path,
    jumps: &JumpArgs,
    out: &Path,
    seed: u64,
) -> std::result::Result<String, Failure> {
    #[derive(Serialize)]
    struct Config<'a> {
        model: &'a str,
        grid: usize,
        jump_threshold: f64,
    }
    let model = load_model(model_path)?;
    let report = is_critical(&model, &jumps.tolerances())?;
    let config = Config {
        model: model.name(),
        grid: jumps.grid,
        jump_threshold: jumps.jump_threshold,
    };
    let body = serde_json::json!({
        "critical": report.critical,
        "discontinuities": report.evidence,
    });
    atomic_write(out, &json_artifact("criticality", seed, &config, &body)?)?;
    Ok(format!(
        "criticality: {} — {} discontinuities -> {}",
        if report.critical { "critical" } else { "not critical" },
        report.evidence.len(),
        out.display()
    ))
}

fn cmd_spectrum(
    model_path: &Path,
    sizes_text: &str,
    grid: usize,
    clip_tol: f64,
    out: &Path,
    seed: u64,
) -> std::result::Result<String, Failure> {
    #[derive(Serialize)]
    struct Config<'a> {
        model: &'a str,
        sizes: &'a [usize],
        grid: usize,
        clip_tol: f64,
    }
    let model = load_model(model_path)?;
    let sizes = parse_schedule(sizes_text)?;
    let symbol = halfchain::hopping::build_symbol(&model)?;
    let psym = ground_state_symbol(&symbol, KernelPolicy::Empty, &Tolerances::default())?;
    let mut csv = csv_header(
        "spectrum",
        seed,
        &Config {
            model: model.name(),
            sizes: &sizes,
            grid,
            clip_tol,
        },
    )?;
    csv.push_str("N,index,lambda\n");
    let mut total = 0usize;
    for &n in &sizes {
        let section_grid = grid.max((4 * n).next_power_of_two());
        let section = finite_section(&psym, n, section_grid)?;
        let modes = correlation_spectrum(&section, clip_tol)?;
        for (index, lambda) in modes.values().iter().enumerate() {
            writeln!(csv, "{n},{index},{}", fmt_f64(*lambda)).map_err(anyhow::Error::from)?;
            total += 1;
        }
    }
    atomic_write(out, &csv)?;
    Ok(format!(
        "spectrum: {} eigenvalues across {} sizes -> {}",
        total,
        sizes.len(),
        out.display()
    ))
}

fn cmd_essspec(
    model_path: &Path,
    jumps: &JumpArgs,
    out: &Path,
    seed: u64,
) -> std::result::Result<String, Failure> {
    #[derive(Serialize)]
    struct Config<'a> {
        model: &'a str,
        grid: usize,
        jump_threshold: f64,
    }
    let model = load_model(model_path)?;
    let symbol = halfchain::hopping::build_symbol(&model)?;
    let psym = ground_state_symbol(&symbol, KernelPolicy::Empty, &jumps.tolerances())?;
    let ess = essential_spectrum(&psym)?;
    let config = Config {
        model: model.name(),
        grid: jumps.grid,
        jump_threshold: jumps.jump_threshold,
    };
    let body = serde_json::json!({
        "essential_spectrum": ess,
        "discontinuities": psym.discontinuities(),
    });
    atomic_write(out, &json_artifact("essspec", seed, &config, &body)?)?;
    Ok(format!(
        "essspec: {} intervals, {} points -> {}",
        ess.intervals.len(),
        ess.points.len(),
        out.display()
    ))
}

fn cmd_classify(
    model_path: &Path,
    jumps: &JumpArgs,
    hs_max: usize,
    evidence_sizes_text: &str,
    out: &Path,
    seed: u64,
) -> std::result::Result<String, Failure> {
    #[derive(Serialize)]
    struct Config<'a> {
        model: &'a str,
        grid: usize,
        jump_threshold: f64,
        hs_max: usize,
        evidence_sizes: &'a [usize],
    }
    let model = load_model(model_path)?;
    let evidence_sizes = parse_schedule(evidence_sizes_text)?;
    let symbol = halfchain::hopping::build_symbol(&model)?;
    let psym = ground_state_symbol(&symbol, KernelPolicy::Empty, &jumps.tolerances())?;
    let ess = essential_spectrum(&psym)?;
    let sums = hs_offdiagonal_partial_sums(&psym, hs_max)?;
    let (hs, hs_diag) = hs_divergence_verdict(&sums)?;
    // section evidence is only consulted when the interval criterion fails
    let evidence = if ess.endpoints_only() {
        Some(trace_class_evidence(
            &psym,
            &evidence_sizes,
            DEFAULT_SECTION_GRID,
            DEFAULT_CLIP_TOL,
        )?)
    } else {
        None
    };
    let classification = classify_factor_type(&ess, hs, evidence.as_ref());
    let config = Config {
        model: model.name(),
        grid: jumps.grid,
        jump_threshold: jumps.jump_threshold,
        hs_max,
        evidence_sizes: &evidence_sizes,
    };
    let body = serde_json::json!({
        "verdict": classification.verdict,
        "justification": classification.justification,
        "essential_spectrum": ess,
        "discontinuities": psym.discontinuities(),
        "hs_verdict": hs,
        "hs_diagnostics": hs_diag,
        "evidence": evidence,
    });
    atomic_write(out, &json_artifact("classify", seed, &config, &body)?)?;
    let verdict_name = match classification.verdict {
        FactorType::TypeIii1 => "TypeIII1",
        FactorType::TypeICandidate => "TypeI_candidate",
        FactorType::Indeterminate => "Indeterminate",
    };
    Ok(format!("classify: {verdict_name} -> {}", out.display()))
}

fn cmd_entropy(
    model_path: &Path,
    sizes_text: &str,
    cut: CutArg,
    out: &Path,
    plot_out: &Path,
    seed: u64,
) -> std::result::Result<String, Failure> {
    #[derive(Serialize)]
    struct Config<'a> {
        model: &'a str,
        sizes: &'a [usize],
        cut: String,
    }
    let model = load_model(model_path)?;
    let sizes = parse_schedule(sizes_text)?;
    let config = Config {
        model: model.name(),
        sizes: &sizes,
        cut: cut.describe(),
    };
    let mut rows = Vec::new();
    for &n in &sizes {
        let chain = open_chain_hamiltonian(&model, n, cut.resolve(n))?;
        let p = finite_ground_projection(&chain, KernelFill::Empty, 1e-10);
        let modes = halfchain_modes(&chain, &p)?;
        rows.push((n, entanglement_entropy(&modes)));
    }
    let mut csv = csv_header("entropy", seed, &config)?;
    csv.push_str("N,entropy_bits\n");
    for &(n, s) in &rows {
        writeln!(csv, "{n},{}", fmt_f64(s)).map_err(anyhow::Error::from)?;
    }
    atomic_write(out, &csv)?;
    let mut plot = csv_header("entropy", seed, &config)?;
    plot.push_str("ln_n,entropy_bits\n");
    for &(n, s) in &rows {
        writeln!(plot, "{},{}", fmt_f64((n as f64).ln()), fmt_f64(s))
            .map_err(anyhow::Error::from)?;
    }
    atomic_write(plot_out, &plot)?;
    let x: Vec<f64> = rows.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let y: Vec<f64> = rows.iter().map(|&(_, s)| s).collect();
    let fit = linear_fit(&x, &y);
    Ok(format!(
        "entropy: {} sizes, fit S ≈ {:.4}·ln n + {:.4} (R² = {:.4}) -> {}, {}",
        rows.len(),
        fit.slope,
        fit.intercept,
        fit.r_squared,
        out.display(),
        plot_out.display()
    ))
}

fn cmd_modes(
    model_path: &Path,
    n: usize,
    cut: CutArg,
    out: &Path,
    seed: u64,
) -> std::result::Result<String, Failure> {
    #[derive(Serialize)]
    struct Config<'a> {
        model: &'a str,
        n: usize,
        cut: usize,
    }
    let model = load_model(model_path)?;
    let cut = cut.resolve(n);
    let chain = open_chain_hamiltonian(&model, n, cut)?;
    let p = finite_ground_projection(&chain, KernelFill::Empty, 1e-10);
    let modes = halfchain_modes(&chain, &p)?;
    let mut csv = csv_header(
        "modes",
        seed,
        &Config {
            model: model.name(),
            n,
            cut,
        },
    )?;
    writeln!(csv, "# kernel_dim: {}", kernel_dimension(&chain, 1e-10))
        .map_err(anyhow::Error::from)?;
    csv.push_str("index,lambda\n");
    for (index, lambda) in modes.values().iter().enumerate() {
        writeln!(csv, "{index},{}", fmt_f64(*lambda)).map_err(anyhow::Error::from)?;
    }
    atomic_write(out, &csv)?;
    Ok(format!(
        "modes: n={n} cut={cut}, {} modes -> {}",
        modes.len(),
        out.display()
    ))
}

#[allow(clippy::too_many_arguments)]
fn cmd_embezzle_scan(
    model_path: &Path,
    lengths_text: &str,
    dims_text: &str,
    eps_text: &str,
    policy: PolicyArg,
    topk: usize,
    mass_floor: f64,
    jobs: Option<usize>,
    out: &Path,
    thresholds_out: &Path,
    seed: u64,
) -> std::result::Result<String, Failure> {
    let model = load_model(model_path)?;
    let mut cfg = ScanConfig::new(
        parse_schedule(lengths_text)?,
        parse_schedule(dims_text)?,
        parse_eps_list(eps_text)?,
    );
    cfg.policy = match policy {
        PolicyArg::MaxEnt => TargetPolicy::MaxEnt,
        PolicyArg::Cover => TargetPolicy::Cover,
    };
    cfg.top_k = topk;
    cfg.mass_floor = mass_floor;

    let jobs = jobs
        .or_else(|| {
            std::env::var("HALFCHAIN_JOBS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|v| v.get())
                .unwrap_or(1)
        });
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| anyhow::anyhow!("building worker pool: {e}"))?;

    let report = pool.install(|| -> std::result::Result<EmbezzleReport, Failure> {
        // cells are pure; fan out the heavy per-length spectra, then the
        // per-cell errors, and reassemble in deterministic order
        let spectra: Vec<(usize, (TruncatedSpectrum, usize))> = cfg
            .lengths
            .par_iter()
            .map(|&n| embezzle::halfchain_truncated(&model, n, &cfg).map(|s| (n, s)))
            .collect::<std::result::Result<_, _>>()?;
        let targets: Vec<(usize, Vec<TargetState>)> = cfg
            .dims
            .iter()
            .map(|&d| embezzle::cell_targets(&cfg, d).map(|t| (d, t)))
            .collect::<std::result::Result<_, _>>()?;
        let rows = spectra
            .par_iter()
            .flat_map_iter(|(n, (spectrum, _))| {
                targets
                    .iter()
                    .map(|(d, t)| embezzle::scan_row(spectrum, *n, *d, t))
            })
            .collect::<Vec<_>>();
        let kernel_dims = spectra.iter().map(|(n, (_, k))| (*n, *k)).collect();
        Ok(embezzle::assemble_report(&cfg, rows, kernel_dims))
    })?;

    let mut csv = csv_header("embezzle-scan", seed, &cfg)?;
    writeln!(csv, "# kernel_dims: {:?}", report.kernel_dims).map_err(anyhow::Error::from)?;
    writeln!(csv, "# non_monotone_cells: {:?}", report.non_monotone)
        .map_err(anyhow::Error::from)?;
    csv.push_str("n,d,policy,epsilon,uncertainty,bipartite_bound\n");
    let policy_name = match cfg.policy {
        TargetPolicy::MaxEnt => "max-ent",
        TargetPolicy::Cover => "cover",
    };
    for row in &report.rows {
        writeln!(
            csv,
            "{},{},{policy_name},{},{},{}",
            row.n,
            row.d,
            fmt_f64(row.epsilon),
            fmt_f64(row.uncertainty),
            fmt_f64(row.bipartite_bound)
        )
        .map_err(anyhow::Error::from)?;
    }
    atomic_write(out, &csv)?;

    let mut threshold_map = serde_json::Map::new();
    for t in &report.thresholds {
        threshold_map.insert(
            format!("eps={},d={}", t.eps, t.d),
            match t.n {
                Some(n) => serde_json::json!(n),
                None => serde_json::Value::Null,
            },
        );
    }
    let body = serde_json::json!({
        "thresholds": threshold_map,
        "kernel_dims": report.kernel_dims,
        "non_monotone_cells": report.non_monotone,
    });
    atomic_write(
        thresholds_out,
        &json_artifact("embezzle-scan", seed, &cfg, &body)?,
    )?;

    let reached: usize = report.thresholds.iter().filter(|t| t.n.is_some()).count();
    Ok(format!(
        "embezzle-scan: {} cells, {}/{} thresholds reached, {} non-monotone -> {}, {}",
        report.rows.len(),
        reached,
        report.thresholds.len(),
        report.non_monotone.len(),
        out.display(),
        thresholds_out.display()
    ))
}

fn cmd_verify_oracle(
    seed: u64,
    instances: usize,
    iterations: usize,
    out: &Path,
) -> std::result::Result<String, Failure> {
    #[derive(Serialize)]
    struct Config {
        instances: usize,
        iterations: usize,
    }
    // deterministic instance stream from a tiny LCG so the oracle's own
    // RNG stays independent
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
    let mut next = || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut max_abs_diff = 0.0f64;
    let mut max_below_closed = 0.0f64;
    let mut worst: Option<(usize, f64, f64)> = None;
    for instance in 0..instances {
        let rho_len = 1 + (next() * 4.0) as usize;
        let max_d = 8 / rho_len;
        let d = 1 + (next() * max_d as f64) as usize;
        let mut rho: Vec<f64> = (0..rho_len).map(|_| next() + 1e-3).collect();
        let total: f64 = rho.iter().sum();
        rho.iter_mut().for_each(|p| *p /= total);
        rho.sort_by(|a, b| b.total_cmp(a));
        let mut psi: Vec<f64> = (0..d).map(|_| next() + 1e-3).collect();
        let total: f64 = psi.iter().sum();
        psi.iter_mut().for_each(|p| *p /= total);
        let psi = TargetState::new(psi).map_err(halfchain::Error::from)?;

        let oracle = bruteforce_unitary_oracle(&rho, &psi, seed ^ instance as u64, iterations)?;
        let closed = {
            let spectrum = TruncatedSpectrum::new(rho.clone(), 0.0)?;
            monopartite_error(&spectrum, &psi).0
        };
        let diff = (oracle - closed).abs();
        if diff > max_abs_diff {
            max_abs_diff = diff;
            worst = Some((instance, oracle, closed));
        }
        max_below_closed = max_below_closed.max(closed - oracle);
    }
    let pass = max_abs_diff <= 1e-3 && max_below_closed <= 1e-6;
    let config = Config {
        instances,
        iterations,
    };
    let body = serde_json::json!({
        "pass": pass,
        "max_abs_diff": max_abs_diff,
        "max_below_closed": max_below_closed,
        "worst_instance": worst.map(|(i, o, c)| serde_json::json!({
            "instance": i, "oracle": o, "closed_form": c
        })),
    });
    atomic_write(out, &json_artifact("verify-oracle", seed, &config, &body)?)?;
    if pass {
        Ok(format!(
            "verify-oracle: {instances} instances, max |oracle - closed| = {max_abs_diff:.2e}, \
             never below closed form by more than {max_below_closed:.2e} -> {}",
            out.display()
        ))
    } else {
        Err(Failure {
            code: 3,
            message: format!(
                "oracle disagrees with sorted-spectra alignment: max |diff| = {max_abs_diff:.3e}, \
                 below-closed = {max_below_closed:.3e}"
            ),
        })
    }
}
