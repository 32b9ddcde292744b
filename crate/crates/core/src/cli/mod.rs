//! Configuration-driven experiment runner behind the `sbminfo` binary.
//!
//! Every run writes one data file and a JSON manifest next to it
//! (`<out>.manifest.json`) holding the effective configuration, crate
//! version, seeds and wall time, which is enough to repeat the run.

mod config;
mod curves;

pub use config::{
    read_overrides, Cli, CliCommand, Command, CommandArgs, ExperimentConfig, Format, Model, Overrides, Sweep,
};
pub use curves::{curve_table, emit_curve, CurvePoint, Table, CURVE_COLUMNS};

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::amp::{amp_run_with, AmpOptions};
use crate::error::{Error, Result};
use crate::fixed_point::{se_trajectory, SolverOptions};
use crate::models::{
    labels_text, edge_list_text, sample_sbm, sample_side_info, sample_spiked, RescaledAdjacency, SbmParams,
};
use crate::oracle::{
    exact_mi, fixtures, immse_check, metric_sandwich_scan, sbm_theta_derivative_check, theta_error_scale,
    universality_gap, CheckReport, MiModel,
};
use crate::rng::derive_seed;

/// Environment variable capping the worker threads used for grid sweeps.
pub const THREADS_ENV: &str = "SBMINFO_THREADS";

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: ExperimentConfig,
    /// Seeds actually used, in order of use.
    pub seeds: Vec<u64>,
    pub outputs: Vec<PathBuf>,
    pub wall_time_secs: f64,
    /// Command-specific summary values.
    pub summary: serde_json::Value,
}

struct Output {
    files: Vec<(PathBuf, String)>,
    seeds: Vec<u64>,
    summary: serde_json::Value,
}

/// Runs one experiment and writes its files. Returns the manifest.
pub fn run(cfg: &ExperimentConfig) -> Result<Manifest> {
    let start = Instant::now();
    let out = match cfg.command {
        Command::MiCurve => mi_curve(cfg)?,
        Command::MmseCurve => mmse_curve(cfg)?,
        Command::Amp => amp(cfg)?,
        Command::Se => se(cfg)?,
        Command::OracleSuite => oracle_suite(cfg)?,
        Command::SbmSample => sbm_sample(cfg)?,
    };
    let mut outputs = Vec::new();
    for (path, text) in &out.files {
        std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
        outputs.push(path.clone());
    }
    let manifest = Manifest {
        tool: "sbminfo",
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        seeds: out.seeds,
        outputs,
        wall_time_secs: start.elapsed().as_secs_f64(),
        summary: out.summary,
    };
    let path = cfg.manifest_path();
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Machine-readable error record written to stderr on failure.
pub fn error_record(command: Option<&str>, kind: &str, message: &str) -> String {
    json!({ "error": kind, "command": command, "message": message }).to_string()
}

/// Thread pool honouring [`THREADS_ENV`].
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let k: usize = v
            .parse()
            .ok()
            .filter(|&k| k > 0)
            .ok_or_else(|| Error::param("SBMINFO_THREADS", format!("must be a positive integer, got {v:?}")))?;
        b = b.num_threads(k);
    }
    b.build().map_err(|e| Error::State(format!("thread pool: {e}")))
}

/// Evaluates `f` over the grid in parallel; results keep grid order.
fn par_grid<T: Send>(grid: &[f64], f: impl Fn(usize, f64) -> Result<T> + Sync) -> Result<Vec<T>> {
    let pool = thread_pool()?;
    pool.install(|| grid.par_iter().enumerate().map(|(k, &x)| f(k, x)).collect())
}

fn solver(cfg: &ExperimentConfig) -> SolverOptions {
    SolverOptions {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
    }
}

fn mi_curve(cfg: &ExperimentConfig) -> Result<Output> {
    let rule = cfg.rule()?;
    let opts = solver(cfg);
    let grid = cfg.grid();
    let table = match cfg.sweep {
        Sweep::Lambda => {
            let points = par_grid(&grid, |_, l| CurvePoint::compute(l, cfg.eps, &opts, &rule))?;
            curve_table(&points)
        }
        Sweep::Theta => {
            let rows = par_grid(&grid, |_, theta| {
                let params = SbmParams::from_lambda(cfg.n, cfg.pbar, theta)?;
                let p = CurvePoint::compute(params.lambda_n, cfg.eps, &opts, &rule)?;
                Ok(vec![
                    theta,
                    params.p,
                    params.q,
                    params.lambda_n,
                    p.gamma_star,
                    p.psi,
                    p.upper_bound,
                    p.mmse_limit,
                ])
            })?;
            let mut t = Table::new(&[
                "theta",
                "p",
                "q",
                "lambda_n",
                "gamma_star",
                "psi",
                "upper_bound",
                "mmse_limit",
            ]);
            rows.into_iter().for_each(|r| t.push(r));
            t
        }
    };
    Ok(Output {
        files: vec![(cfg.out.clone(), table.render(cfg.format))],
        seeds: vec![],
        summary: json!({ "points": grid.len() }),
    })
}

fn mmse_curve(cfg: &ExperimentConfig) -> Result<Output> {
    let rule = cfg.rule()?;
    let opts = solver(cfg);
    let grid = cfg.grid();
    let exact = cfg.n <= crate::oracle::MAX_EXACT_N;
    let rows = par_grid(&grid, |k, l| {
        let p = CurvePoint::compute(l, cfg.eps, &opts, &rule)?;
        let mut row = vec![l, p.gamma_star, p.mmse_limit, p.vmmse_lower, p.vmmse_upper, p.overlap_lower];
        if exact {
            let s = metric_sandwich_scan(cfg.n, l, cfg.eps, cfg.mc_samples, derive_seed(cfg.seed, k as u64))?;
            let se = s.mean.mc_stderr.expect("averaged report has stderr");
            row.extend([s.mean.mmse_matrix, se.mmse_matrix, s.mean.vmmse, se.vmmse]);
        }
        Ok(row)
    })?;
    let mut cols = vec!["lambda", "gamma_star", "mmse_limit", "vmmse_lower", "vmmse_upper", "overlap_lower"];
    if exact {
        cols.extend(["exact_mmse", "exact_mmse_stderr", "exact_vmmse", "exact_vmmse_stderr"]);
    }
    let mut t = Table::new(&cols);
    rows.into_iter().for_each(|r| t.push(r));
    let seeds = if exact {
        (0..grid.len()).map(|k| derive_seed(cfg.seed, k as u64)).collect()
    } else {
        vec![]
    };
    Ok(Output {
        files: vec![(cfg.out.clone(), t.render(cfg.format))],
        seeds,
        summary: json!({ "points": grid.len(), "exact_n": if exact { Some(cfg.n) } else { None } }),
    })
}

fn se(cfg: &ExperimentConfig) -> Result<Output> {
    let traj = se_trajectory(cfg.lambda_max, cfg.eps, cfg.iters, &cfg.rule()?)?;
    let mut t = Table::new(&["t", "gamma", "mu", "sigma2", "overlap", "mse"]);
    for k in 0..traj.gammas.len() {
        t.push(vec![
            k as f64,
            traj.gammas[k],
            traj.mus[k],
            traj.sigmas2[k],
            traj.overlap(k),
            traj.matrix_mse(k),
        ]);
    }
    Ok(Output {
        files: vec![(cfg.out.clone(), t.render(cfg.format))],
        seeds: vec![],
        summary: json!({ "converged": traj.converged, "final_gamma": traj.gammas.last() }),
    })
}

fn amp(cfg: &ExperimentConfig) -> Result<Output> {
    let rule = cfg.rule()?;
    let opts = AmpOptions::new(cfg.iters);
    let lambda = cfg.lambda_max;
    let traj = match cfg.model {
        Model::Spiked => {
            let inst = sample_spiked(cfg.n, lambda, None, cfg.seed)?;
            let side = sample_side_info(&inst.labels, cfg.eps, cfg.seed)?;
            amp_run_with(&inst.y, &side, lambda, &inst.labels, &opts, &rule)?
        }
        Model::Sbm => {
            let params = SbmParams::from_lambda(cfg.n, cfg.pbar, lambda)?;
            let inst = sample_sbm(&params, cfg.seed)?;
            let side = sample_side_info(&inst.labels, cfg.eps, cfg.seed)?;
            let op = RescaledAdjacency::new(&inst)?;
            amp_run_with(&op, &side, params.lambda_n, &inst.labels, &opts, &rule)?
        }
    };
    let text = match cfg.format {
        Format::Csv => traj.to_csv(),
        Format::Json => {
            let mut t = Table::new(&["t", "b_t", "empirical_overlap", "se_overlap", "empirical_mse", "se_mse"]);
            for s in &traj.steps {
                t.push(vec![s.t as f64, s.b, s.empirical_overlap, s.se_overlap, s.empirical_mse, s.se_mse]);
            }
            t.render(Format::Json)
        }
    };
    let last = traj.last();
    Ok(Output {
        files: vec![(cfg.out.clone(), text)],
        seeds: vec![cfg.seed],
        summary: json!({
            "final_empirical_mse": last.empirical_mse,
            "final_se_mse": last.se_mse,
            "final_empirical_overlap": last.empirical_overlap,
        }),
    })
}

fn sbm_sample(cfg: &ExperimentConfig) -> Result<Output> {
    let params = SbmParams::from_lambda(cfg.n, cfg.pbar, cfg.lambda_max)?;
    let inst = sample_sbm(&params, cfg.seed)?;
    let mut labels_path = cfg.out.clone().into_os_string();
    labels_path.push(".labels");
    Ok(Output {
        files: vec![
            (cfg.out.clone(), edge_list_text(&inst)),
            (PathBuf::from(labels_path), labels_text(&inst.labels)),
        ],
        seeds: vec![cfg.seed],
        summary: json!({ "p": params.p, "q": params.q, "edges": inst.adjacency.edge_count() }),
    })
}

/// The exact-oracle checks at `(n, λ, ε, p̄)`, each with its frozen
/// threshold.
pub fn oracle_checks(n: usize, lambda: f64, eps: f64, pbar: f64, mc: usize, seed: u64) -> Result<Vec<CheckReport>> {
    let mut reports = Vec::new();
    let params = |extra: serde_json::Value| {
        let mut v = json!({ "n": n, "lambda": lambda, "mc_samples": mc, "seed": seed });
        if let (Some(m), Some(e)) = (v.as_object_mut(), extra.as_object()) {
            m.extend(e.clone());
        }
        v
    };

    let mi = exact_mi(&MiModel::Gauss { n, lambda }, 0.0, mc, derive_seed(seed, 1))?;
    let bound = lambda / 4.0 + 1.0 / n as f64 + 3.0 * mi.stderr;
    reports.push(CheckReport {
        check_name: "elementary_bound".into(),
        params: params(json!({ "eps": 0.0 })),
        estimate: mi.mean,
        stderr: mi.stderr,
        bound,
        pass: mi.mean <= bound,
    });

    let dl = 0.05f64.min(lambda / 2.0);
    let r = immse_check(n, lambda, dl, eps, mc, derive_seed(seed, 2))?;
    reports.push(CheckReport::abs_within(
        "immse",
        params(json!({ "eps": eps, "dlambda": dl })),
        r,
        fixtures::IMMSE_FD_ALLOWANCE + 3.0 * r.stderr,
    ));

    let s = metric_sandwich_scan(n, lambda, eps, mc.max(500), derive_seed(seed, 3))?;
    let violations = (s.upper_violations + s.lower_violations + s.overlap_violations) as f64;
    reports.push(CheckReport {
        check_name: "metric_sandwich".into(),
        params: params(json!({ "eps": eps, "instances": s.instances })),
        estimate: violations,
        stderr: 0.0,
        bound: 0.0,
        pass: s.all_hold(),
    });

    let r = sbm_theta_derivative_check(n, lambda, 0.05, pbar, mc, derive_seed(seed, 4))?;
    reports.push(CheckReport::abs_within(
        "sbm_theta_derivative",
        params(json!({ "pbar": pbar, "theta": lambda, "dtheta": 0.05, "c_fix": fixtures::THETA_C_FIX })),
        r,
        fixtures::THETA_C_FIX * theta_error_scale(n, lambda, pbar) + 3.0 * r.stderr,
    ));

    let g = universality_gap(n, lambda, &[pbar], mc, derive_seed(seed, 5))?[0];
    let bound = fixtures::UNIVERSALITY_C * g.predictor + 3.0 * g.stderr;
    reports.push(CheckReport {
        check_name: "universality_gap".into(),
        params: params(json!({ "pbar": pbar, "predictor": g.predictor })),
        estimate: g.gap,
        stderr: g.stderr,
        bound,
        pass: g.gap <= bound,
    });
    Ok(reports)
}

fn oracle_suite(cfg: &ExperimentConfig) -> Result<Output> {
    let reports = oracle_checks(cfg.n, cfg.lambda_max, cfg.eps, cfg.pbar, cfg.mc_samples, cfg.seed)?;
    let text = match cfg.format {
        Format::Json => serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n",
        Format::Csv => {
            let mut s = String::from("check_name,estimate,stderr,bound,pass\n");
            for r in &reports {
                s += &format!(
                    "{},{},{},{},{}\n",
                    r.check_name,
                    crate::numfmt::g12(r.estimate),
                    crate::numfmt::g12(r.stderr),
                    crate::numfmt::g12(r.bound),
                    r.pass
                );
            }
            s
        }
    };
    let all = reports.iter().all(|r| r.pass);
    Ok(Output {
        files: vec![(cfg.out.clone(), text)],
        seeds: (1..=5).map(|k| derive_seed(cfg.seed, k)).collect(),
        summary: json!({ "all_pass": all }),
    })
}

/// Parses arguments, runs, and maps the outcome to an exit status: 0 on
/// success, 2 for usage errors, 1 for failures during the run.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            if code == 0 {
                let _ = e.print();
            } else {
                eprintln!("{}", error_record(None, "usage", e.to_string().trim()));
            }
            return code;
        }
    };
    let (command, args) = cli.command.split();
    let cfg = match ExperimentConfig::resolve(command, args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}", error_record(Some(command.name()), "usage", &e.to_string()));
            return 2;
        }
    };
    match run(&cfg) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("{}", error_record(Some(command.name()), e.kind(), &e.to_string()));
            1
        }
    }
}

/// Reads a data file written by the runner (for tests and tooling).
pub fn read_output(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
