//! Command implementations behind the thin CLI binary: model generation,
//! factorization runs, the SNR sweep, assumption audits, restricted
//! isometry and coupon-collector estimates, and the end-to-end recovery
//! experiment. Everything is configuration-driven and reproducible from
//! `(config, seed)`.

pub mod config;

use std::path::{Path, PathBuf};

use crate::altmin::dict_error;
use crate::analysis::{complexity_expressions, coupon_collector_trials, rip_constant_estimate};
use crate::deepfact::{
    audit_assumptions_backward, audit_assumptions_forward, backward_factorize, forward_factorize,
    sparsity_levels, AuditOptions, FactorizationMode, FactorizationReport,
};
use crate::error::Error;
use crate::genmodel::{alpha_for_snr_db, perturb_dictionary, synthesize, DeepModelInstance};
use crate::io;
use crate::linalg::Matrix;
use config::{factorize_from_config, model_from_config, RawConfig};

/// Command-level failures, split by exit code: usage/config problems exit
/// with 2, compute aborts with 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Compute(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match &e {
            Error::Parameter(_) | Error::Format(_) | Error::Json(_) => CliError::Usage(e.to_string()),
            Error::Io(io_err) if io_err.kind() == std::io::ErrorKind::NotFound => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Compute(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Flags shared by every subcommand; all of them override config keys.
#[derive(Clone, Debug, Default)]
pub struct CommonOpts {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub mode: Option<String>,
    pub paper_scale: bool,
}

fn load_config(common: &CommonOpts) -> CliResult<RawConfig> {
    let mut cfg = match &common.config {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.set("seed", seed.to_string());
    }
    if let Some(out) = &common.out {
        cfg.set("out", out.display().to_string());
    }
    if let Some(mode) = &common.mode {
        cfg.set("mode", mode.clone());
    }
    if let Some(threads) = common.threads {
        cfg.set("threads", threads.to_string());
    }
    Ok(cfg)
}

fn init_threads(cfg: &mut RawConfig) -> CliResult<()> {
    if let Some(n) = cfg.get_usize("threads")? {
        // tolerate re-initialization inside one process (tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn out_dir(cfg: &mut RawConfig, default: &str) -> PathBuf {
    cfg.get("out").map(PathBuf::from).unwrap_or_else(|| PathBuf::from(default))
}

fn load_instance_arg(cfg: &mut RawConfig) -> CliResult<(PathBuf, DeepModelInstance)> {
    let path = cfg
        .get("instance")
        .map(PathBuf::from)
        .ok_or_else(|| CliError::Usage("missing `instance` (path to a generated model directory)".into()))?;
    if !path.join("manifest.json").is_file() {
        return Err(CliError::Usage(format!(
            "instance path {} does not contain a model (no manifest.json)",
            path.display()
        )));
    }
    let inst = io::load_instance(&path)?;
    Ok((path, inst))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeArg {
    Forward,
    Backward,
    Both,
}

fn parse_mode(cfg: &mut RawConfig) -> CliResult<ModeArg> {
    match cfg.get("mode").as_deref() {
        None | Some("both") => Ok(ModeArg::Both),
        Some("forward") => Ok(ModeArg::Forward),
        Some("backward") => Ok(ModeArg::Backward),
        Some(other) => Err(CliError::Usage(format!(
            "unknown mode `{other}` (forward | backward | both)"
        ))),
    }
}

/// Perturbed initializations for every forward stage (`A(l->L)(0)`).
pub fn forward_inits(inst: &DeepModelInstance, alpha: f64, seed: u64) -> crate::error::Result<Vec<Matrix>> {
    let l = inst.spec.layers();
    let mut inits = Vec::with_capacity(l);
    for ell in 1..=l {
        let truth = inst.product_from(ell)?;
        let (init, _) = perturb_dictionary(&truth, alpha, seed.wrapping_add(1000 + ell as u64))?;
        inits.push(init);
    }
    Ok(inits)
}

/// Perturbed initializations for every backward stage
/// (`A(L)(0), ..., A(1)(0)` in processing order).
pub fn backward_inits(inst: &DeepModelInstance, alpha: f64, seed: u64) -> crate::error::Result<Vec<Matrix>> {
    let l = inst.spec.layers();
    let mut inits = Vec::with_capacity(l);
    for ell in (1..=l).rev() {
        let (init, _) = perturb_dictionary(&inst.dicts[ell - 1], alpha, seed.wrapping_add(2000 + ell as u64))?;
        inits.push(init);
    }
    Ok(inits)
}

/// `generate`: sample a model instance and write it to the output
/// directory (matrix files plus manifest).
pub fn cmd_generate(common: &CommonOpts) -> CliResult<()> {
    let mut cfg = load_config(common)?;
    init_threads(&mut cfg)?;
    let (spec, n) = model_from_config(&mut cfg, common.paper_scale)?;
    let seed = cfg.get_u64("seed")?.unwrap_or(0);
    let out = out_dir(&mut cfg, "runs/instance");
    cfg.reject_unknown()?;
    let inst = synthesize(&spec, n, seed)?;
    io::save_instance(&out, &inst)?;
    println!(
        "generated L={} model: {} samples, seed {}, wrote {}",
        spec.layers(),
        n,
        seed,
        out.display()
    );
    for (ell, a) in inst.dicts.iter().enumerate() {
        println!("  A{}: {}x{}", ell + 1, a.rows(), a.cols());
    }
    println!("  X: {}x{}", inst.codes.rows(), inst.codes.cols());
    println!(
        "  Y: {}x{}",
        inst.observations.rows(),
        inst.observations.cols()
    );
    Ok(())
}

fn run_mode(
    mode: FactorizationMode,
    inst: &DeepModelInstance,
    alpha: f64,
    seed: u64,
    fcfg: &crate::deepfact::FactorizeConfig,
) -> CliResult<FactorizationReport> {
    let ledger = sparsity_levels(&inst.spec);
    let mut report = match mode {
        FactorizationMode::Forward => {
            let inits = forward_inits(inst, alpha, seed)?;
            forward_factorize(&inst.observations, &inits, &ledger, fcfg, Some(inst))?
        }
        FactorizationMode::Backward => {
            let inits = backward_inits(inst, alpha, seed)?;
            backward_factorize(&inst.observations, &inits, &ledger, fcfg, Some(inst))?
        }
    };
    report.seed = Some(seed);
    Ok(report)
}

fn print_report(report: &FactorizationReport) {
    for st in &report.stages {
        let err = st
            .err_learned
            .map(|e| format!("{e:.3e}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "  {} stage {}: {} iterations, err {}",
            report.mode,
            st.stage,
            st.trace.iterations(),
            err
        );
    }
    if let Some(f) = &report.failure {
        println!("  {} ABORTED at stage {}: {}", report.mode, f.stage, f.message);
    }
}

/// `factorize`: run the chosen factorization direction(s) on a stored
/// instance; writes one report directory per direction.
pub fn cmd_factorize(common: &CommonOpts) -> CliResult<()> {
    let mut cfg = load_config(common)?;
    init_threads(&mut cfg)?;
    let (inst_path, inst) = load_instance_arg(&mut cfg)?;
    let mode = parse_mode(&mut cfg)?;
    let seed = cfg.get_u64("seed")?.unwrap_or(inst.seed);
    let alpha = match (cfg.get_f64("alpha")?, cfg.get_f64("snr_db")?) {
        (Some(a), _) => a,
        (None, Some(snr)) => alpha_for_snr_db(snr),
        (None, None) => 0.5,
    };
    let fcfg = factorize_from_config(&mut cfg)?;
    let out = out_dir(&mut cfg, "runs/factorize");
    cfg.reject_unknown()?;
    println!(
        "factorizing {} (alpha {:.4}, seed {seed})",
        inst_path.display(),
        alpha
    );
    let mut aborted = false;
    let modes: Vec<FactorizationMode> = match mode {
        ModeArg::Forward => vec![FactorizationMode::Forward],
        ModeArg::Backward => vec![FactorizationMode::Backward],
        ModeArg::Both => vec![FactorizationMode::Forward, FactorizationMode::Backward],
    };
    for m in modes {
        let report = run_mode(m, &inst, alpha, seed, &fcfg)?;
        print_report(&report);
        io::save_report(&io::report_dir(&out, &m.to_string()), &report)?;
        aborted |= !report.succeeded();
    }
    if aborted {
        return Err(CliError::Compute("a factorization stage aborted; partial report retained".into()));
    }
    Ok(())
}

/// `snr-sweep`: factorize one instance over a grid of initialization
/// SNRs and seeds; emits `sweep.csv` with one row per
/// (snr, algorithm, stage, seed).
pub fn cmd_snr_sweep(common: &CommonOpts) -> CliResult<()> {
    let mut cfg = load_config(common)?;
    init_threads(&mut cfg)?;
    let (_, inst) = load_instance_arg(&mut cfg)?;
    let mode = parse_mode(&mut cfg)?;
    let grid = cfg
        .get_list_f64("snr_grid_db")?
        .unwrap_or_else(|| vec![-3.0, 0.0, 3.0, 6.0, 9.0]);
    let seeds = cfg.get_list_u64("seeds")?.unwrap_or_else(|| vec![1]);
    let mut fcfg = factorize_from_config(&mut cfg)?;
    if cfg.get("max_iters").is_none() {
        fcfg.max_iters = 10;
    }
    let out = out_dir(&mut cfg, "runs/sweep");
    cfg.reject_unknown()?;

    let modes: Vec<FactorizationMode> = match mode {
        ModeArg::Forward => vec![FactorizationMode::Forward],
        ModeArg::Backward => vec![FactorizationMode::Backward],
        ModeArg::Both => vec![FactorizationMode::Forward, FactorizationMode::Backward],
    };
    let mut rows = Vec::new();
    for &snr in &grid {
        let alpha = alpha_for_snr_db(snr);
        for &seed in &seeds {
            for &m in &modes {
                let report = run_mode(m, &inst, alpha, seed, &fcfg)?;
                for st in &report.stages {
                    rows.push(io::SweepRow {
                        snr_db: snr,
                        algo: m.to_string(),
                        stage: st.stage,
                        final_err: st.err_learned.unwrap_or(f64::NAN),
                        seed,
                    });
                }
                println!(
                    "snr {snr:>5} dB, seed {seed}, {m}: {}",
                    report
                        .stages
                        .iter()
                        .map(|s| format!("stage {} err {:.3e}", s.stage, s.err_learned.unwrap_or(f64::NAN)))
                        .collect::<Vec<_>>()
                        .join(", ")
                );
            }
        }
    }
    std::fs::create_dir_all(&out).map_err(Error::from)?;
    io::atomic_write(&out.join("sweep.csv"), io::sweep_csv(&rows).as_bytes())?;
    println!("wrote {} rows to {}", rows.len(), out.join("sweep.csv").display());
    Ok(())
}

/// `audit`: measure the forward and backward assumption sets on a stored
/// instance and write `audit.json` plus the complexity table.
pub fn cmd_audit(common: &CommonOpts) -> CliResult<()> {
    let mut cfg = load_config(common)?;
    init_threads(&mut cfg)?;
    let (_, inst) = load_instance_arg(&mut cfg)?;
    let opts = AuditOptions {
        rip_target: cfg.get_f64("rip_target")?.unwrap_or(0.1),
        failure_delta: cfg.get_f64("delta")?.unwrap_or(0.1),
        rip_trials: cfg.get_usize("rip_trials")?.unwrap_or(500),
        seed: cfg.get_u64("seed")?.unwrap_or(0),
    };
    let out = out_dir(&mut cfg, "runs/audit");
    cfg.reject_unknown()?;
    let fwd = audit_assumptions_forward(&inst, &opts)?;
    let bwd = audit_assumptions_backward(&inst, &opts)?;
    let table = complexity_expressions(&inst.spec, &[opts.failure_delta])?;
    std::fs::create_dir_all(&out).map_err(Error::from)?;
    io::save_audit(&out.join("audit.json"), &[fwd.clone(), bwd.clone()])?;
    io::save_json(&out.join("complexity.json"), &table)?;
    for report in [&fwd, &bwd] {
        for rec in &report.records {
            let verdict = match rec.passes {
                Some(true) => "pass",
                Some(false) => "FAIL",
                None => "info",
            };
            let layer = rec.layer.map(|l| format!(" l={l}")).unwrap_or_default();
            println!(
                "{} {}{}: measured {:.4e} vs bound {:.4e} [{}{}]",
                report.mode,
                rec.assumption,
                layer,
                rec.measured,
                rec.bound,
                verdict,
                if rec.constant_free { ", constant-free" } else { "" }
            );
        }
    }
    println!("wrote {}", out.join("audit.json").display());
    Ok(())
}

/// `rip`: estimate the restricted isometry constant of a stored matrix
/// file (optionally normalized by `1/sqrt(rows)` first).
pub fn cmd_rip(common: &CommonOpts) -> CliResult<()> {
    let mut cfg = load_config(common)?;
    init_threads(&mut cfg)?;
    let matrix_path = cfg
        .get("matrix")
        .map(PathBuf::from)
        .ok_or_else(|| CliError::Usage("missing `matrix` (path to a DS2PMAT1 file)".into()))?;
    let order = cfg
        .get_usize("order")?
        .ok_or_else(|| CliError::Usage("missing `order` (restricted isometry order)".into()))?;
    let trials = cfg.get_usize("trials")?.unwrap_or(2000);
    let seed = cfg.get_u64("seed")?.unwrap_or(0);
    let normalize = matches!(cfg.get("normalize").as_deref(), Some("sqrt_d"));
    let out = out_dir(&mut cfg, "runs/rip");
    cfg.reject_unknown()?;
    let mut a = io::read_matrix(&matrix_path)?;
    if normalize {
        a = a.scaled(1.0 / (a.rows() as f64).sqrt());
    }
    let est = rip_constant_estimate(&a, order, trials, seed)?;
    println!(
        "delta_{}({}) {} {:.6} over {} supports ({}); worst sigma range [{:.4}, {:.4}]",
        order,
        matrix_path.display(),
        if est.exhaustive { "=" } else { ">=" },
        est.delta_hat,
        est.trials,
        if est.exhaustive { "exhaustive" } else { "sampled lower bound" },
        est.sigma_extremes.0,
        est.sigma_extremes.1
    );
    std::fs::create_dir_all(&out).map_err(Error::from)?;
    io::save_json(&out.join("rip.json"), &est)?;
    Ok(())
}

/// `coupon`: Monte Carlo estimate of the number of `s`-subset draws
/// needed to see all `r` atoms.
pub fn cmd_coupon(common: &CommonOpts) -> CliResult<()> {
    let mut cfg = load_config(common)?;
    init_threads(&mut cfg)?;
    let r = cfg.get_usize("r")?.unwrap_or(20);
    let s = cfg.get_usize("s")?.unwrap_or(1);
    let trials = cfg.get_usize("trials")?.unwrap_or(5000);
    let seed = cfg.get_u64("seed")?.unwrap_or(0);
    let out = out_dir(&mut cfg, "runs/coupon");
    cfg.reject_unknown()?;
    let (mean, stderr) = coupon_collector_trials(r, s, trials, seed)?;
    println!("coupon collector r={r} s={s}: mean {mean:.4} +- {stderr:.4} over {trials} trials");
    #[derive(serde::Serialize)]
    struct CouponReport {
        r: usize,
        s: usize,
        trials: usize,
        seed: u64,
        mean: f64,
        stderr: f64,
    }
    std::fs::create_dir_all(&out).map_err(Error::from)?;
    io::save_json(
        &out.join("coupon.json"),
        &CouponReport {
            r,
            s,
            trials,
            seed,
            mean,
            stderr,
        },
    )?;
    Ok(())
}

/// `experiment-recovery`: generate an instance, run both factorizations
/// to termination, and emit the error-vs-iteration series
/// (`recovery.csv`) alongside the instance and per-stage reports.
pub fn cmd_experiment_recovery(common: &CommonOpts) -> CliResult<()> {
    let mut cfg = load_config(common)?;
    init_threads(&mut cfg)?;
    let (spec, n) = model_from_config(&mut cfg, common.paper_scale)?;
    let seed = cfg.get_u64("seed")?.unwrap_or(2);
    let alpha = match (cfg.get_f64("alpha")?, cfg.get_f64("snr_db")?) {
        (Some(a), _) => a,
        (None, Some(snr)) => alpha_for_snr_db(snr),
        (None, None) => 0.5,
    };
    let mode = parse_mode(&mut cfg)?;
    let fcfg = factorize_from_config(&mut cfg)?;
    let out = out_dir(&mut cfg, "runs/recovery");
    cfg.reject_unknown()?;

    println!("synthesizing L={} model (n={n}, seed {seed})", spec.layers());
    let inst = synthesize(&spec, n, seed)?;
    io::save_instance(&io::instance_dir(&out), &inst)?;

    let modes: Vec<FactorizationMode> = match mode {
        ModeArg::Forward => vec![FactorizationMode::Forward],
        ModeArg::Backward => vec![FactorizationMode::Backward],
        ModeArg::Both => vec![FactorizationMode::Forward, FactorizationMode::Backward],
    };
    let mut rows = Vec::new();
    let mut aborted = false;
    for m in modes {
        let report = run_mode(m, &inst, alpha, seed, &fcfg)?;
        print_report(&report);
        for st in &report.stages {
            for (it, err) in st.trace.err.iter().enumerate() {
                if let Some(e) = err {
                    rows.push(io::RecoveryRow {
                        algo: m.to_string(),
                        stage: st.stage,
                        iter: it,
                        err: *e,
                    });
                }
            }
        }
        io::save_report(&io::report_dir(&out, &m.to_string()), &report)?;
        aborted |= !report.succeeded();
    }
    io::atomic_write(&out.join("recovery.csv"), io::recovery_csv(&rows).as_bytes())?;
    println!("wrote {}", out.join("recovery.csv").display());
    if aborted {
        return Err(CliError::Compute("a factorization stage aborted; partial report retained".into()));
    }
    Ok(())
}

/// `dict-error`: tiny helper used by scripts to compare two stored
/// matrices with the column-sign-invariant metric.
pub fn compare_matrices(a_path: &Path, b_path: &Path) -> CliResult<f64> {
    let a = io::read_matrix(a_path)?;
    let b = io::read_matrix(b_path)?;
    Ok(dict_error(&a, &b)?)
}
