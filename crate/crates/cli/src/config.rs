//! Line-based `key = value` configuration with `[problem]`, `[solver]` and
//! `[output]` sections.

use std::fmt;
use std::path::PathBuf;

use mhdpp_core::limiter::{CharMode, PpLimiterParams, TvbParams};
use mhdpp_core::scheme::{CflMode, LimiterOrder, LimiterSettings, OscLimiter, SolverConfig};
use mhdpp_core::{Eos, FluxMode};

/// A rejected configuration line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line number; 0 for command-line overrides.
    pub line_no: usize,
    pub line: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line_no == 0 {
            write!(f, "{}: `{}`", self.message, self.line)
        } else {
            write!(f, "line {}: {}: `{}`", self.line_no, self.message, self.line)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    Problem,
    Solver,
    Output,
}

impl Section {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "problem" => Some(Section::Problem),
            "solver" => Some(Section::Solver),
            "output" => Some(Section::Output),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    /// Cells per direction; the problem default when absent.
    pub cells: Option<Vec<usize>>,
    pub t_end: Option<f64>,
    /// Resolutions of a convergence study.
    pub resolutions: Vec<usize>,
    pub seed: u64,
    pub trials: usize,

    pub k: usize,
    pub flux: FluxMode,
    pub penalty: bool,
    pub practical_cfl: bool,
    pub cfl: f64,
    pub pp_limiter: bool,
    pub tvb: bool,
    pub tvb_m: f64,
    pub char_mode: CharMode,
    pub order: LimiterOrder,

    pub out_dir: PathBuf,
    /// Snapshot every this many steps; 0 writes the final state only.
    pub snapshot_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: "smooth1d".into(),
            cells: None,
            t_end: None,
            resolutions: vec![64, 128, 256],
            seed: 20180,
            trials: 10_000,
            k: 2,
            flux: FluxMode::Hll,
            penalty: true,
            practical_cfl: false,
            cfl: 0.15,
            pp_limiter: true,
            tvb: true,
            tvb_m: TvbParams::default().m,
            char_mode: CharMode::Characteristic,
            order: LimiterOrder::OscillationFirst,
            out_dir: PathBuf::from("out"),
            snapshot_every: 0,
        }
    }
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected on/off, got {v:?}")),
    }
}

fn parse_num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("invalid number {v:?}"))
}

/// `"64"`, `"64x64"`.
pub fn parse_cells(v: &str) -> Result<Vec<usize>, String> {
    let cells: Vec<usize> = v.split('x').map(|s| parse_num(s.trim())).collect::<Result<_, _>>()?;
    if cells.is_empty() || cells.len() > 2 || cells.contains(&0) {
        return Err(format!("invalid cell counts {v:?}"));
    }
    Ok(cells)
}

/// `"64,128,256"`.
pub fn parse_list(v: &str) -> Result<Vec<usize>, String> {
    let list: Vec<usize> = v.split(',').map(|s| parse_num(s.trim())).collect::<Result<_, _>>()?;
    if list.contains(&0) {
        return Err(format!("invalid resolution list {v:?}"));
    }
    Ok(list)
}

impl RunConfig {
    /// Sets one key; the error message does not include the line.
    pub fn set(&mut self, section: Section, key: &str, value: &str) -> Result<(), String> {
        match (section, key) {
            (Section::Problem, "name") => self.problem = value.to_string(),
            (Section::Problem, "cells") => self.cells = Some(parse_cells(value)?),
            (Section::Problem, "t_end") => {
                let t: f64 = parse_num(value)?;
                if !(t > 0.0 && t.is_finite()) {
                    return Err(format!("t_end must be positive, got {value}"));
                }
                self.t_end = Some(t);
            }
            (Section::Problem, "resolutions") => self.resolutions = parse_list(value)?,
            (Section::Problem, "seed") => self.seed = parse_num(value)?,
            (Section::Problem, "trials") => self.trials = parse_num(value)?,
            (Section::Solver, "k") => {
                self.k = parse_num(value)?;
                if self.k > 2 {
                    return Err(format!("k must be 0, 1 or 2, got {value}"));
                }
            }
            (Section::Solver, "flux") => {
                self.flux = match value {
                    "hll" => FluxMode::Hll,
                    "local_lf" => FluxMode::LocalLf,
                    "global_lf" => FluxMode::GlobalLf,
                    _ => return Err(format!("unknown flux {value:?}")),
                }
            }
            (Section::Solver, "penalty") => self.penalty = parse_bool(value)?,
            (Section::Solver, "cfl_mode") => {
                self.practical_cfl = match value {
                    "proven" => false,
                    "practical" => true,
                    _ => return Err(format!("unknown cfl_mode {value:?}")),
                }
            }
            (Section::Solver, "cfl") => {
                self.cfl = parse_num(value)?;
                if !(self.cfl > 0.0 && self.cfl.is_finite()) {
                    return Err(format!("cfl must be positive, got {value}"));
                }
            }
            (Section::Solver, "pp_limiter") => self.pp_limiter = parse_bool(value)?,
            (Section::Solver, "limiter") => {
                self.tvb = match value {
                    "tvb" => true,
                    "off" | "none" => false,
                    _ => return Err(format!("unknown limiter {value:?}")),
                }
            }
            (Section::Solver, "tvb_m") => {
                self.tvb_m = parse_num(value)?;
                if !(self.tvb_m >= 0.0) {
                    return Err(format!("tvb_m must be non-negative, got {value}"));
                }
            }
            (Section::Solver, "char_mode") => {
                self.char_mode = match value {
                    "characteristic" => CharMode::Characteristic,
                    "componentwise" => CharMode::Componentwise,
                    _ => return Err(format!("unknown char_mode {value:?}")),
                }
            }
            (Section::Solver, "limiter_order") => {
                self.order = match value {
                    "oscillation_first" => LimiterOrder::OscillationFirst,
                    "positivity_first" => LimiterOrder::PositivityFirst,
                    _ => return Err(format!("unknown limiter_order {value:?}")),
                }
            }
            (Section::Output, "dir") => self.out_dir = PathBuf::from(value),
            (Section::Output, "snapshot_every") => self.snapshot_every = parse_num(value)?,
            _ => return Err(format!("unknown key {key:?} in this section")),
        }
        Ok(())
    }

    /// Applies a whole file on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut section = None;
        for (i, raw) in text.lines().enumerate() {
            let err = |message: String| ConfigError { line_no: i + 1, line: raw.to_string(), message };
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = Some(Section::parse(name.trim()).ok_or_else(|| err(format!("unknown section {name:?}")))?);
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected `key = value`".into()))?;
            let section = section.ok_or_else(|| err("key outside of any section".into()))?;
            self.set(section, key.trim(), value.trim()).map_err(err)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    /// Applies a `section.key=value` or `key=value` override; bare keys are
    /// looked up in every section.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), ConfigError> {
        let err = |message: String| ConfigError { line_no: 0, line: spec.to_string(), message };
        let (key, value) = spec.split_once('=').ok_or_else(|| err("expected `key=value`".into()))?;
        let (key, value) = (key.trim(), value.trim());
        if let Some((sec, k)) = key.split_once('.') {
            let sec = Section::parse(sec).ok_or_else(|| err(format!("unknown section {sec:?}")))?;
            return self.set(sec, k, value).map_err(err);
        }
        let mut last = String::new();
        for sec in [Section::Problem, Section::Solver, Section::Output] {
            let mut trial = self.clone();
            match trial.set(sec, key, value) {
                Ok(()) => {
                    *self = trial;
                    return Ok(());
                }
                Err(e) => last = e,
            }
        }
        Err(err(last))
    }

    pub fn solver_config(&self, eos: Eos) -> SolverConfig {
        let mut cfg = SolverConfig::new(self.k, eos);
        cfg.flux = self.flux;
        cfg.penalty = self.penalty;
        cfg.cfl = if self.practical_cfl { CflMode::Practical(self.cfl) } else { CflMode::Proven };
        cfg.limiter = LimiterSettings {
            pp: self.pp_limiter,
            pp_params: PpLimiterParams::default(),
            oscillation: if self.tvb { OscLimiter::Tvb(TvbParams { m: self.tvb_m, mode: self.char_mode }) } else { OscLimiter::Off },
            order: self.order,
        };
        cfg
    }
}
