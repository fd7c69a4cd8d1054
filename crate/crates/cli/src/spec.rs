//! Experiment specifications: what to run, on which grid, and which fits to
//! apply. Presets expand into several members sharing one output grid.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use decaylab_core::config::RunConfig;
use decaylab_core::model::{diffusive_truncation, recommended_truncation};
use decaylab_core::{ModelParams64, TimeGrid64};
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    Master,
    Trajectory,
    Coherent,
    Spectral,
    Jc,
    JcSpectrum,
    Walk,
    WalkExact,
}

impl Solver {
    pub const ALL: [Solver; 8] = [
        Solver::Master,
        Solver::Trajectory,
        Solver::Coherent,
        Solver::Spectral,
        Solver::Jc,
        Solver::JcSpectrum,
        Solver::Walk,
        Solver::WalkExact,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Solver::Master => "master",
            Solver::Trajectory => "trajectory",
            Solver::Coherent => "coherent",
            Solver::Spectral => "spectral",
            Solver::Jc => "jc",
            Solver::JcSpectrum => "jc-spectrum",
            Solver::Walk => "walk",
            Solver::WalkExact => "walk-exact",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

pub const PRESETS: [&str; 6] = ["fig1b", "fig2a", "fig2bc", "fig3a", "fig3b", "fig4b"];

/// A `--fit` request, `exp:lo:hi`, `pow:lo:hi` or `plateau:alpha:lo:hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitRequest {
    Exponential { lo: f64, hi: f64 },
    PowerLaw { lo: f64, hi: f64 },
    Plateau { alpha: f64, lo: f64, hi: f64 },
}

impl FitRequest {
    pub fn window(&self) -> (f64, f64) {
        match *self {
            FitRequest::Exponential { lo, hi } | FitRequest::PowerLaw { lo, hi } | FitRequest::Plateau { lo, hi, .. } => (lo, hi),
        }
    }
}

impl FromStr for FitRequest {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut parts = s.split(':');
        let kind = parts.next().unwrap_or_default();
        let nums = parts
            .map(|f| f.parse::<f64>().map_err(|e| format!("`{f}` in fit `{s}`: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        if nums.iter().any(|x| !x.is_finite()) {
            return Err(format!("fit `{s}` has a non-finite value"));
        }
        let req = match (kind, nums.as_slice()) {
            ("exp", &[lo, hi]) => FitRequest::Exponential { lo, hi },
            ("pow", &[lo, hi]) => FitRequest::PowerLaw { lo, hi },
            ("plateau", &[alpha, lo, hi]) => FitRequest::Plateau { alpha, lo, hi },
            _ => return Err(format!("fit `{s}` is not exp:lo:hi, pow:lo:hi or plateau:alpha:lo:hi")),
        };
        let (lo, hi) = req.window();
        if lo >= hi {
            return Err(format!("fit `{s}` needs lo < hi"));
        }
        Ok(req)
    }
}

impl fmt::Display for FitRequest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FitRequest::Exponential { lo, hi } => write!(f, "exp:{lo}:{hi}"),
            FitRequest::PowerLaw { lo, hi } => write!(f, "pow:{lo}:{hi}"),
            FitRequest::Plateau { alpha, lo, hi } => write!(f, "plateau:{alpha}:{lo}:{hi}"),
        }
    }
}

/// Command-line settings that are not model parameters.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub fits: Vec<FitRequest>,
    pub out: PathBuf,
    pub ode: bool,
    pub ratio_max: Option<f64>,
}

/// One solver run. For `jc-spectrum` the grid holds `gamma / g0` values.
#[derive(Debug, Clone)]
pub struct Member {
    pub label: String,
    pub solver: Solver,
    pub params: ModelParams64,
    pub grid: TimeGrid64,
    pub dt: Option<f64>,
    pub seed: u64,
    pub trajectories: usize,
    pub ode: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub name: String,
    /// Merged configuration with every default filled in.
    pub config: RunConfig,
    pub members: Vec<Member>,
    pub fits: Vec<FitRequest>,
    pub out: PathBuf,
}

pub const DEFAULT_RATIO_MAX: f64 = 16.0;
pub const DEFAULT_SPECTRUM_POINTS: usize = 401;

fn spec_err(msg: impl Into<String>) -> CliError {
    CliError::Spec(msg.into())
}

struct Preset {
    base: RunConfig,
    /// Keys the preset sweeps over; they may not be overridden.
    locked: &'static [&'static str],
    fits: Vec<FitRequest>,
}

fn preset(name: &str) -> Option<Preset> {
    let strong = RunConfig {
        j: Some(1.0),
        g0: Some(0.3),
        n_sites: Some(150),
        t_max: Some(300.0),
        points: Some(601),
        ..RunConfig::default()
    };
    let p = match name {
        "fig1b" => Preset {
            base: RunConfig { j: Some(1.0), g0: Some(0.3), gamma: Some(0.0), t_max: Some(100.0), points: Some(1001), ..RunConfig::default() },
            locked: &[],
            fits: vec![FitRequest::Exponential { lo: 3.0, hi: 20.0 }],
        },
        "fig2a" => Preset {
            base: RunConfig { j: Some(0.0), g0: Some(1.0), t_max: Some(20.0), points: Some(401), ..RunConfig::default() },
            locked: &["gamma"],
            fits: vec![],
        },
        "fig2bc" => Preset {
            base: RunConfig { j: Some(0.0), g0: Some(1.0), points: Some(DEFAULT_SPECTRUM_POINTS), ..RunConfig::default() },
            locked: &["gamma"],
            fits: vec![],
        },
        "fig3a" => Preset {
            base: RunConfig { j: Some(1.0), g0: Some(0.3), t_max: Some(100.0), points: Some(501), ..RunConfig::default() },
            locked: &["gamma"],
            fits: vec![],
        },
        "fig3b" => Preset {
            base: strong,
            locked: &["gamma"],
            fits: vec![FitRequest::Plateau { alpha: 0.5, lo: 100.0, hi: 300.0 }],
        },
        "fig4b" => Preset { base: RunConfig { gamma: Some(10.0), ..strong }, locked: &[], fits: vec![] },
        _ => return None,
    };
    Some(p)
}

fn sets_key(cfg: &RunConfig, key: &str) -> bool {
    match key {
        "gamma" => cfg.gamma.is_some(),
        _ => false,
    }
}

/// Lattice size when `N` is not given: the light cone, shrunk to the
/// diffusive spread when dephasing is on.
pub fn default_sites(solver: Solver, j: f64, g0: f64, gamma: f64, t_max: f64) -> Result<usize, CliError> {
    let p = ModelParams64::new(j, g0, gamma, 1)?;
    Ok(match solver {
        Solver::Jc | Solver::JcSpectrum | Solver::WalkExact => 1,
        Solver::Walk => diffusive_truncation(&p, t_max),
        _ if gamma > 0.0 => recommended_truncation(&p, t_max).min(diffusive_truncation(&p, t_max)),
        _ => recommended_truncation(&p, t_max),
    })
}

fn resolved(cfg: &RunConfig) -> RunConfig {
    use decaylab_core::config::*;
    RunConfig {
        j: Some(cfg.j.unwrap_or(DEFAULT_J)),
        g0: Some(cfg.g0.unwrap_or(DEFAULT_G0)),
        gamma: Some(cfg.gamma.unwrap_or(DEFAULT_GAMMA)),
        delta: Some(cfg.delta.unwrap_or(DEFAULT_DELTA)),
        t_max: Some(cfg.t_max()),
        points: Some(cfg.points()),
        seed: Some(cfg.seed()),
        trajectories: Some(cfg.trajectories()),
        ..cfg.clone()
    }
}

fn member(label: String, solver: Solver, cfg: &RunConfig, gamma: f64, opts: &Options) -> Result<Member, CliError> {
    let (j, g0, delta) = (cfg.j.unwrap(), cfg.g0.unwrap(), cfg.delta.unwrap());
    let t_max = cfg.t_max();
    let n = match cfg.n_sites {
        Some(n) => n,
        None => default_sites(solver, j, g0, gamma, t_max)?,
    };
    let params = ModelParams64::new(j, g0, gamma, n)?.with_delta(delta)?;
    let grid = match solver {
        Solver::JcSpectrum => TimeGrid64::uniform(opts.ratio_max.unwrap_or(DEFAULT_RATIO_MAX), cfg.points())?,
        _ => TimeGrid64::uniform(t_max, cfg.points())?,
    };
    let m = Member { label, solver, params, grid, dt: cfg.dt, seed: cfg.seed(), trajectories: cfg.trajectories(), ode: opts.ode };
    check_member(&m)?;
    Ok(m)
}

fn check_member(m: &Member) -> Result<(), CliError> {
    let p = &m.params;
    let need = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(spec_err(format!("{}: {msg}", m.solver.name()))) };
    match m.solver {
        Solver::Jc => need(p.j == 0.0, "requires J = 0"),
        Solver::Spectral => {
            need(p.gamma == 0.0, "requires gamma = 0")?;
            need(p.j > 0.0, "requires J > 0")
        }
        Solver::Coherent => need(p.gamma == 0.0, "has no dephasing; requires gamma = 0"),
        Solver::Walk | Solver::WalkExact => {
            need(p.gamma > 0.0, "requires gamma > 0")?;
            need(p.j > 0.0, "requires J > 0")
        }
        Solver::JcSpectrum => {
            need(p.delta == 0.0, "requires delta = 0")?;
            need(p.g0 > 0.0, "requires g0 > 0")
        }
        Solver::Trajectory => need(m.trajectories >= 2, "requires at least 2 trajectories"),
        Solver::Master => Ok(()),
    }?;
    if let Some(dt) = m.dt {
        need(dt > 0.0 && dt.is_finite(), "dt must be positive")?;
    }
    Ok(())
}

/// Expands a solver or preset name into a validated spec. `file` holds keys
/// from `--config`, `flags` those given on the command line; flags win.
pub fn build(target: &str, file: &RunConfig, flags: &RunConfig, opts: &Options) -> Result<ExperimentSpec, CliError> {
    let (base, locked, default_fits) = match (Solver::parse(target), preset(target)) {
        (Some(_), _) => (RunConfig::default(), &[][..], vec![]),
        (None, Some(p)) => (p.base, p.locked, p.fits),
        (None, None) => {
            let solvers: Vec<_> = Solver::ALL.iter().map(|s| s.name()).collect();
            return Err(spec_err(format!(
                "unknown solver or preset `{target}` (solvers: {}; presets: {})",
                solvers.join(", "),
                PRESETS.join(", ")
            )));
        }
    };
    for key in locked {
        if sets_key(file, key) || sets_key(flags, key) {
            return Err(spec_err(format!("preset {target} sweeps `{key}`; it cannot be overridden")));
        }
    }
    let cfg = resolved(&base.overridden_by(file).overridden_by(flags));
    let gamma = cfg.gamma.unwrap();
    let swept = |solver: Solver, values: &[f64], scale: f64, prefix: &str| {
        values.iter().map(|&v| member(format!("{prefix}{v}"), solver, &cfg, v * scale, opts)).collect::<Result<Vec<_>, _>>()
    };

    let members = match target {
        "fig1b" => vec![
            member("coherent".into(), Solver::Coherent, &cfg, gamma, opts)?,
            member("spectral".into(), Solver::Spectral, &cfg, gamma, opts)?,
        ],
        "fig2a" => swept(Solver::Jc, &[0.0, 1.0, 2.0, 8.0, 20.0], cfg.g0.unwrap(), "ratio")?,
        "fig2bc" => vec![member("spectrum".into(), Solver::JcSpectrum, &cfg, 0.0, opts)?],
        "fig3a" => swept(Solver::Master, &[0.0, 0.1, 1.0, 3.0, 10.0], 1.0, "gamma")?,
        "fig3b" => swept(Solver::Master, &[3.0, 10.0], 1.0, "gamma")?,
        "fig4b" => vec![
            member("master".into(), Solver::Master, &cfg, gamma, opts)?,
            member("walk".into(), Solver::Walk, &cfg, gamma, &Options { ode: false, ..opts.clone() })?,
        ],
        _ => {
            let solver = Solver::parse(target).unwrap();
            vec![member(solver.name().into(), solver, &cfg, gamma, opts)?]
        }
    };

    if opts.ode && !members.iter().any(|m| m.solver == Solver::Walk) {
        return Err(spec_err("--ode applies only to the walk solver"));
    }
    if opts.ratio_max.is_some() && !members.iter().any(|m| m.solver == Solver::JcSpectrum) {
        return Err(spec_err("--ratio-max applies only to jc-spectrum"));
    }
    let fits = if opts.fits.is_empty() { default_fits } else { opts.fits.clone() };
    if !fits.is_empty() && members.iter().any(|m| m.solver == Solver::JcSpectrum) {
        return Err(spec_err("jc-spectrum output is not a decay curve; fits do not apply"));
    }
    let t_max = cfg.t_max();
    for f in &fits {
        let (lo, hi) = f.window();
        if lo < 0.0 || hi > t_max {
            return Err(spec_err(format!("fit window {f} lies outside [0, {t_max}]")));
        }
    }

    Ok(ExperimentSpec { name: target.to_string(), config: cfg, members, fits, out: opts.out.clone() })
}
