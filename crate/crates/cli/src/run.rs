//! Executes the members of a spec and collects their columns, run metadata
//! and fit reports.

use decaylab_core::analysis::{fit_exponential, fit_power_law, plateau_check, DEFAULT_PLATEAU_THRESHOLD};
use decaylab_core::closed::{evolve_coherent_with_norm, survival_spectral};
use decaylab_core::jc::{evolve_jc, jc_spectrum};
use decaylab_core::lindblad::evolve_master_with_diagnostics;
use decaylab_core::trajectory::{run_ensemble, TrajectoryOptions};
use decaylab_core::walk::{evolve_walk, walk_asymptotic, walk_exact_curve};
use decaylab_core::{DecayCurve64, Error, StepOptions64};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::spec::{ExperimentSpec, FitRequest, Member, Solver};
use crate::CliError;

pub struct MemberOutput {
    pub columns: Vec<(String, Vec<f64>)>,
    /// The decay curve that fits apply to.
    pub curve: Option<DecayCurve64>,
    pub meta: Value,
}

pub struct Outcome {
    pub x_label: &'static str,
    pub x: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
    pub runs: Vec<Value>,
    pub fits: Vec<Value>,
}

fn step_options(m: &Member) -> StepOptions64 {
    StepOptions64 { dt: m.dt, ..StepOptions64::default() }
}

fn walk_rates(m: &Member) -> Result<(f64, f64), Error> {
    let d = m.params.derive_rates();
    match (d.hop_atom, d.hop_photon) {
        (Some(r), Some(q)) => Ok((r, q)),
        _ => Err(Error::Undefined("the incoherent walk")),
    }
}

pub fn run_member(m: &Member) -> Result<MemberOutput, Error> {
    let p = &m.params;
    let opts = step_options(m);
    let mut meta = json!({
        "label": m.label,
        "solver": m.solver,
        "params": {"J": p.j, "g0": p.g0, "gamma": p.gamma, "delta": p.delta, "N": p.n_sites},
        "derived": p.derive_rates(),
    });
    let extra = |meta: &mut Value, more: Value| {
        if let (Value::Object(a), Value::Object(b)) = (meta, more) {
            a.extend(b);
        }
    };
    let single = |c: DecayCurve64| vec![("ps".to_string(), c.ps().to_vec())];

    let (columns, curve) = match m.solver {
        Solver::Master => {
            let (c, d) = evolve_master_with_diagnostics(p, &m.grid, &opts)?;
            extra(
                &mut meta,
                json!({
                    "dt": d.dt,
                    "diagnostics": {
                        "maxTraceError": d.max_trace_error,
                        "maxHermiticityError": d.max_hermiticity_error,
                        "minPopulation": d.min_population,
                    }
                }),
            );
            (single(c.clone()), Some(c))
        }
        Solver::Trajectory => {
            let topts = TrajectoryOptions { dt: m.dt, trajectories: m.trajectories, seed: m.seed };
            let r = run_ensemble(p, &m.grid, &topts)?;
            extra(&mut meta, json!({"dt": r.dt, "seed": r.seed, "trajectories": r.trajectories, "maxNormError": r.max_norm_error}));
            let se = r.curve.stderr().unwrap_or_default().to_vec();
            (vec![("ps".to_string(), r.curve.ps().to_vec()), ("stderr".to_string(), se)], Some(r.curve))
        }
        Solver::Coherent => {
            let (c, norm) = evolve_coherent_with_norm(p, &m.grid, &opts)?;
            extra(&mut meta, json!({"dt": opts.resolve_dt(p)?, "maxNormError": norm}));
            (single(c.clone()), Some(c))
        }
        Solver::Spectral => {
            let c = survival_spectral(p, &m.grid)?;
            (single(c.clone()), Some(c))
        }
        Solver::Jc => {
            let c = evolve_jc(p, &m.grid, &opts)?;
            extra(&mut meta, json!({"dt": opts.resolve_dt(p)?}));
            (single(c.clone()), Some(c))
        }
        Solver::JcSpectrum => {
            let mut cols: Vec<(String, Vec<f64>)> = (1..=4)
                .flat_map(|k| [format!("re{k}"), format!("im{k}")])
                .map(|name| (name, Vec::with_capacity(m.grid.len())))
                .collect();
            for &ratio in m.grid.times() {
                let s = jc_spectrum(ratio, p.g0)?;
                for (k, z) in s.eigenvalues.iter().enumerate() {
                    cols[2 * k].1.push(z.re);
                    cols[2 * k + 1].1.push(z.im);
                }
            }
            (cols, None)
        }
        Solver::Walk => {
            let (r, q) = walk_rates(m)?;
            let exact = walk_exact_curve(&m.grid, r, q)?;
            let asym = m.grid.times().iter().map(|&t| walk_asymptotic(t, q).unwrap_or(f64::INFINITY)).collect();
            let mut cols = vec![("exact".to_string(), exact.ps().to_vec()), ("asymptotic".to_string(), asym)];
            if m.ode {
                let ode = evolve_walk(p, &m.grid, &opts)?;
                cols.push(("ode".to_string(), ode.ps().to_vec()));
                extra(&mut meta, json!({"dt": m.dt}));
            }
            (cols, Some(exact))
        }
        Solver::WalkExact => {
            let (r, q) = walk_rates(m)?;
            let c = walk_exact_curve(&m.grid, r, q)?;
            (single(c.clone()), Some(c))
        }
    };
    Ok(MemberOutput { columns, curve, meta })
}

fn apply_fit(curve: &DecayCurve64, f: &FitRequest) -> Result<Value, Error> {
    let report = match *f {
        FitRequest::Exponential { lo, hi } => fit_exponential(curve, (lo, hi))?,
        FitRequest::PowerLaw { lo, hi } => fit_power_law(curve, (lo, hi))?,
        FitRequest::Plateau { alpha, lo, hi } => plateau_check(curve, alpha, (lo, hi), DEFAULT_PLATEAU_THRESHOLD)?,
    };
    Ok(serde_json::to_value(report).expect("fit reports serialize"))
}

/// Runs every member (in parallel, results kept in spec order) and applies
/// each fit request to each decay curve.
pub fn execute(spec: &ExperimentSpec) -> Result<Outcome, CliError> {
    let outputs = spec.members.par_iter().map(run_member).collect::<Result<Vec<_>, _>>()?;

    let first = &spec.members[0];
    let x_label = if first.solver == Solver::JcSpectrum { "gammaOverG0" } else { "t" };
    let multi = spec.members.len() > 1;
    let mut columns = Vec::new();
    let mut runs = Vec::new();
    let mut fits = Vec::new();
    for (m, out) in spec.members.iter().zip(outputs) {
        let one = out.columns.len() == 1;
        for (name, values) in out.columns {
            columns.push((if multi && one { m.label.clone() } else { name }, values));
        }
        if let Some(curve) = &out.curve {
            for f in &spec.fits {
                let mut v = apply_fit(curve, f)?;
                v["curve"] = json!(m.label);
                fits.push(v);
            }
        }
        runs.push(out.meta);
    }
    Ok(Outcome { x_label, x: first.grid.times().to_vec(), columns, runs, fits })
}
