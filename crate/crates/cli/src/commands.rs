//! The `run`, `convergence` and `verify` subcommands.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use mhdpp_core::ppcheck::{format_report, report_csv, run_verification_suite};
use mhdpp_core::problems::{convergence_orders, convergence_study, find_problem, problem_catalog, ProblemSpec, Simulation, VAR_NAMES};
use mhdpp_core::scheme::{ssp_rk3_advance, DgField, Disc1D, Disc2D, RunOutcome, StepDiagnostics};
use mhdpp_core::{Eos, MhdError};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::output::{diagnostics_row, write_profile_csv, write_vtk, DIAGNOSTICS_HEADER};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("solver aborted: {0}")]
    Solver(MhdError),
    #[error("verification failed")]
    VerifyFailed,
}

impl CliError {
    /// Process exit status: 2 for a solver abort, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Solver(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Setup problems are configuration errors; anything raised while stepping
/// is a solver abort.
fn setup_err(e: MhdError) -> CliError {
    CliError::Usage(e.to_string())
}

pub fn lookup_problem(name: &str) -> Result<ProblemSpec, CliError> {
    find_problem(name).ok_or_else(|| {
        let names: Vec<String> = problem_catalog().into_iter().map(|p| p.name).collect();
        CliError::Usage(format!("unknown problem {name:?}; available: {}", names.join(", ")))
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn write_snapshot_1d(dir: &Path, name: &str, f: &DgField, d: &Disc1D) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("{name}.csv"));
    let mut w = create(&path)?;
    write_profile_csv(&mut w, f, &d.mesh, &d.cfg.eos).and_then(|_| w.flush()).map_err(io_err(&path))?;
    Ok(path)
}

fn write_snapshot_2d(dir: &Path, name: &str, f: &DgField, d: &Disc2D, t: f64) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("{name}.vtk"));
    let div = d.interfaces(f).map(|ifs| d.div_ho(&ifs)).unwrap_or_default();
    let mut w = create(&path)?;
    write_vtk(&mut w, f, &d.mesh, &d.cfg.eos, &div, &format!("mhdpp t={t:.16e}")).and_then(|_| w.flush()).map_err(io_err(&path))?;
    Ok(path)
}

/// Summary of a completed `run`.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub outcome: RunOutcome,
    pub files: Vec<PathBuf>,
}

/// Runs a catalog problem, writing snapshots and `diagnostics.csv` into the
/// output directory.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunReport, CliError> {
    let spec = lookup_problem(&cfg.problem)?;
    let cells = cfg.cells.clone().unwrap_or_else(|| spec.default_cells.clone());
    if cells.len() != spec.dim() {
        return Err(CliError::Usage(format!("problem {} is {}D but {} cell counts were given", spec.name, spec.dim(), cells.len())));
    }
    let t_end = cfg.t_end.unwrap_or(spec.t_end);
    let solver = cfg.solver_config(spec.eos());
    solver.validate().map_err(setup_err)?;
    let dir = &cfg.out_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut sim = spec.setup(&cells, solver).map_err(setup_err)?;

    let diag_path = dir.join("diagnostics.csv");
    let mut diag = create(&diag_path)?;
    writeln!(diag, "{DIAGNOSTICS_HEADER}").map_err(io_err(&diag_path))?;
    let mut files = vec![diag_path.clone()];
    let mut pending: Option<CliError> = None;
    let every = cfg.snapshot_every;

    let mut on_step = |d: &StepDiagnostics, snap: &mut dyn FnMut(&str, f64) -> Result<PathBuf, CliError>| {
        if pending.is_some() {
            return;
        }
        let r = writeln!(diag, "{}", diagnostics_row(d)).map_err(io_err(&diag_path));
        let r = r.and_then(|_| if every > 0 && d.step % every == 0 { snap(&format!("snapshot_{:06}", d.step), d.t).map(|p| files.push(p)) } else { Ok(()) });
        if let Err(e) = r {
            pending = Some(e);
        }
    };

    let result = match &mut sim {
        Simulation::OneD(disc, field) => {
            let disc: &Disc1D = disc;
            let out = ssp_rk3_advance(disc, field, 0.0, t_end, |d, f| on_step(d, &mut |n, _| write_snapshot_1d(dir, n, f, disc)));
            (out, write_snapshot_1d(dir, "final", field, disc))
        }
        Simulation::TwoD(disc, field) => {
            let disc: &Disc2D = disc;
            let out = ssp_rk3_advance(disc, field, 0.0, t_end, |d, f| on_step(d, &mut |n, t| write_snapshot_2d(dir, n, f, disc, t)));
            let t = out.as_ref().map_or(0.0, |o| o.t);
            (out, write_snapshot_2d(dir, "final", field, disc, t))
        }
    };
    diag.flush().map_err(io_err(&diag_path))?;
    if let Some(e) = pending {
        return Err(e);
    }
    let (outcome, last) = result;
    // The last state is written even after an abort, for inspection.
    files.push(last?);
    let outcome = outcome.map_err(CliError::Solver)?;
    Ok(RunReport { outcome, files })
}

/// Table of a convergence study: human-readable text and a CSV twin.
pub fn cmd_convergence(cfg: &RunConfig) -> Result<(String, String), CliError> {
    let spec = lookup_problem(&cfg.problem)?;
    if !spec.has_exact() {
        return Err(CliError::Usage(format!("problem {} has no exact solution", spec.name)));
    }
    let solver = cfg.solver_config(spec.eos());
    solver.validate().map_err(setup_err)?;
    let reports = convergence_study(&spec, &solver, &cfg.resolutions).map_err(|e| match e {
        MhdError::PositivityFailure { .. } | MhdError::CflViolation { .. } | MhdError::LimiterPrecondition { .. } => CliError::Solver(e),
        e => setup_err(e),
    })?;
    let orders = convergence_orders(&reports);
    let mut text = format!("{:>6} {:>5} {:>12} {:>7} {:>12} {:>7} {:>12} {:>7}\n", "cells", "var", "L1", "order", "L2", "order", "Linf", "order");
    let mut csv = String::from("cells,var,l1,l2,linf,order_l1,order_l2,order_linf\n");
    for (i, r) in reports.iter().enumerate() {
        for (v, name) in VAR_NAMES.iter().enumerate() {
            let o = i.checked_sub(1).map(|p| &orders[p]);
            let ord = |x: Option<f64>| x.map_or("-".to_string(), |x| format!("{x:.3}"));
            let (o1, o2, oi) = (o.map(|o| o.l1[v]), o.map(|o| o.l2[v]), o.map(|o| o.linf[v]));
            text.push_str(&format!(
                "{:>6} {:>5} {:>12.4e} {:>7} {:>12.4e} {:>7} {:>12.4e} {:>7}\n",
                r.cells,
                name,
                r.l1[v],
                ord(o1),
                r.l2[v],
                ord(o2),
                r.linf[v],
                ord(oi)
            ));
            let c = |x: Option<f64>| x.map_or(String::new(), |x| format!("{x:.16e}"));
            csv.push_str(&format!("{},{},{:.16e},{:.16e},{:.16e},{},{},{}\n", r.cells, name, r.l1[v], r.l2[v], r.linf[v], c(o1), c(o2), c(oi)));
        }
    }
    Ok((text, csv))
}

/// Runs the randomized verification suite; returns the text report and its CSV.
pub fn cmd_verify(seed: u64, trials: usize) -> Result<(String, String, bool), CliError> {
    let eos = Eos::ideal(1.4).map_err(setup_err)?;
    let rows = run_verification_suite(seed, trials, &eos);
    let ok = rows.iter().all(|r| r.passed());
    Ok((format_report(&rows), report_csv(&rows), ok))
}
