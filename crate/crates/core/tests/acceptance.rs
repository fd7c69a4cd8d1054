//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line with the
//! measured quantities, then asserts at the stated tolerance.

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use decaylab_core::analysis::{
    envelope, fit_exponential, fit_power_law, plateau_check, short_time_coefficient, DEFAULT_PLATEAU_THRESHOLD,
};
use decaylab_core::closed::{evolve_coherent, survival_spectral, zeno_edge_times};
use decaylab_core::jc::{
    bisect_exceptional_point, eigenvector_coalescence, evolve_jc, jc_rate_approx, jc_spectrum, numerical_eigenvalues,
    relaxation_matrix,
};
use decaylab_core::lindblad::{evolve_master_with_diagnostics, MasterDiagnostics};
use decaylab_core::model::recommended_truncation;
use decaylab_core::trajectory::{run_ensemble, TrajectoryOptions};
use decaylab_core::walk::{evolve_walk_rates, walk_asymptotic, walk_exact, walk_exact_curve};
use decaylab_core::{DecayCurve64, ModelParams64, StepOptions64, TimeGrid64};

fn report(id: u32, name: &str, pass: bool, detail: String) {
    // The raw handle is not captured by the test harness, so passing
    // criteria show up in a plain `cargo test` run too.
    let line = format!("[{}] criterion {id}: {name}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    std::io::stdout().lock().write_all(line.as_bytes()).unwrap();
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn params(g0: f64, gamma: f64, n: usize) -> ModelParams64 {
    ModelParams64::new(1.0, g0, gamma, n).unwrap()
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// Master equation at g0 = 0.3, gamma = 10 on Jt in [0, 300], shared by
/// criteria 7 and 9.
struct StrongDephasing {
    curve: DecayCurve64,
    diag: MasterDiagnostics<f64>,
    elapsed: Duration,
}

const STRONG_N: usize = 150;

fn strong_dephasing() -> &'static StrongDephasing {
    static RUN: OnceLock<StrongDephasing> = OnceLock::new();
    RUN.get_or_init(|| {
        let grid = TimeGrid64::uniform(300.0, 601).unwrap();
        let start = Instant::now();
        let (curve, diag) =
            evolve_master_with_diagnostics(&params(0.3, 10.0, STRONG_N), &grid, &StepOptions64::default()).unwrap();
        StrongDephasing { curve, diag, elapsed: start.elapsed() }
    })
}

#[test]
fn criterion_1_golden_rule_rate() {
    let p = params(0.3, 0.0, 260);
    let grid = TimeGrid64::uniform(100.0, 1001).unwrap();
    let start = Instant::now();
    let curve = evolve_coherent(&p, &grid, &StepOptions64::default()).unwrap();
    let elapsed = start.elapsed();
    let fit = fit_exponential(&curve, (3.0, 20.0)).unwrap();
    let rel = (fit.value / 0.18 - 1.0).abs();
    report(
        1,
        "golden-rule rate",
        rel < 0.05 && secs(elapsed) < 10.0,
        format!("rate {:.5} vs 0.18 (rel err {:.2e}, tol 5e-2), {:.2} s (limit 10 s)", fit.value, rel, secs(elapsed)),
    );
}

#[test]
fn criterion_2_band_edge_tail() {
    let p = params(0.3, 0.0, 1);
    let grid = TimeGrid64::with_step(400.0, 0.05).unwrap();
    let start = Instant::now();
    let curve = survival_spectral(&p, &grid).unwrap();
    let elapsed = start.elapsed();
    let env = envelope(&curve);
    let peaks = env.window(120.0, 400.0).count();
    let fit = fit_power_law(&env, (120.0, 400.0)).unwrap();
    let (_, onset) = zeno_edge_times(&p).unwrap();
    let pass = (fit.value + 3.0).abs() <= 0.3 && peaks >= 5 && (onset - 77.0).abs() < 1.0 && secs(elapsed) < 30.0;
    report(
        2,
        "band-edge power-law tail",
        pass,
        format!(
            "envelope slope {:.4} (target -3 +/- 0.3) over {peaks} peaks, onset time {:.2} (expected ~77), {:.2} s (limit 30 s)",
            fit.value,
            onset,
            secs(elapsed)
        ),
    );
}

#[test]
fn criterion_3_zeno_quadratic_onset() {
    let g0 = 0.3;
    let p = params(g0, 0.0, recommended_truncation(&params(g0, 0.0, 1), 0.05));
    let grid = TimeGrid64::uniform(0.05, 51).unwrap();
    let curve = evolve_coherent(&p, &grid, &StepOptions64::default()).unwrap();
    let a = short_time_coefficient(&curve, (0.0, 0.05)).unwrap();
    let rel = (a / (g0 * g0) - 1.0).abs();
    report(3, "Zeno quadratic onset", rel < 0.02, format!("coefficient {a:.6e} vs g0^2 = 0.09 (rel err {rel:.2e}, tol 2e-2)"));
}

#[test]
fn criterion_4_exceptional_point() {
    let start = Instant::now();
    let ep: f64 = bisect_exceptional_point(0.0, 16.0, 1e-12).unwrap();
    let at = eigenvector_coalescence(&relaxation_matrix(8.0, 1.0, 0.0), 1e-6).unwrap();
    let over = numerical_eigenvalues(&relaxation_matrix(20.0, 1.0, 0.0)).unwrap();
    let max_imag = over.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let analytic_real = jc_spectrum(20.0, 1.0).unwrap().is_overdamped;
    let elapsed = start.elapsed();
    let pass = (ep - 8.0).abs() < 1e-9 && at.vector_sigma_min < 1e-6 && max_imag == 0.0 && analytic_real && secs(elapsed) < 1.0;
    report(
        4,
        "exceptional point",
        pass,
        format!(
            "critical ratio {ep:.12} (|err| {:.1e}), eigenvector sigma_min {:.2e} (tol 1e-6), null dim {}, max |Im| at 20: {max_imag:.1e}, {:.3} s",
            (ep - 8.0).abs(),
            at.vector_sigma_min,
            at.null_dim,
            secs(elapsed)
        ),
    );
}

#[test]
fn criterion_5_damped_rabi_limit() {
    let g0 = 1.0;
    let grid = TimeGrid64::uniform(20.0, 2001).unwrap();
    let closed = ModelParams64::new(0.0, g0, 0.0, 1).unwrap();
    let cos2_err = |opts: &StepOptions64| {
        let rabi = evolve_jc(&closed, &grid, opts).unwrap();
        rabi.iter().map(|(t, p)| (p - (g0 * t).cos().powi(2)).abs()).fold(0.0, f64::max)
    };
    // The default step (0.01 / g0) accumulates ~3e-8 of RK4 phase error by
    // g0 t = 20; the comparison runs at a quarter of it.
    let default_err = cos2_err(&StepOptions64::default());
    let rabi_err = cos2_err(&StepOptions64::with_dt(0.0025));
    let strong = ModelParams64::new(0.0, g0, 20.0 * g0, 1).unwrap();
    let exact = evolve_jc(&strong, &grid, &StepOptions64::default()).unwrap();
    let rate_err = exact.max_abs_diff(&jc_rate_approx(&strong, &grid).unwrap());
    report(
        5,
        "damped Rabi limit",
        rabi_err < 1e-8 && rate_err < 0.03,
        format!(
            "|P - cos^2| max {rabi_err:.2e} at dt = 0.0025 (tol 1e-8; {default_err:.1e} at the default step), \
             rate approximation max dev {rate_err:.4} (tol 0.03)"
        ),
    );
}

#[test]
fn criterion_6_walk_exactness() {
    let (q, r) = (0.2, 0.18);
    let r_atom = r * q;
    let grid = TimeGrid64::uniform(300.0, 301).unwrap();
    let ode = evolve_walk_rates(r_atom, q, 60, &grid, &StepOptions64::default()).unwrap();
    let exact = walk_exact_curve(&grid, r_atom, q).unwrap();
    let ode_diff = ode.max_abs_diff(&exact);
    let norm_err = [0.02, 0.18, 0.5, 1.0, 1.8]
        .iter()
        .map(|&r| (walk_exact(0.0, r * q, q).unwrap() - 1.0).abs())
        .fold(0.0, f64::max);
    let ratio_at = |qt: f64| walk_exact(qt / q, r_atom, q).unwrap() / walk_asymptotic(qt / q, q).unwrap() - 1.0;
    let (dev50, dev200) = (ratio_at(50.0), ratio_at(200.0));
    let pass = ode_diff < 1e-6 && norm_err < 1e-9 && dev50.abs() < 0.05 && dev200.abs() < 0.02;
    report(
        6,
        "walk exactness",
        pass,
        format!(
            "|exact - ode| max {ode_diff:.2e} (tol 1e-6), |P(0) - 1| max {norm_err:.1e} (tol 1e-9), \
             ratio - 1 at r = {r}: {dev50:.4} at Qt = 50 (tol 0.05), {dev200:.4} at Qt = 200 (tol 0.02)"
        ),
    );
}

#[test]
fn criterion_7a_diffusive_power_law() {
    let run = strong_dephasing();
    let fit = fit_power_law(&run.curve, (50.0, 300.0)).unwrap();
    report(
        7,
        "(a) diffusive exponent",
        (fit.value + 0.5).abs() <= 0.05 && secs(run.elapsed) < 300.0,
        format!("slope {:.4} on Jt in [50, 300] (target -0.5 +/- 0.05), master run {:.1} s (limit 300 s)", fit.value, secs(run.elapsed)),
    );
}

#[test]
fn criterion_7b_diffusive_plateau() {
    let run = strong_dephasing();
    let fit = plateau_check(&run.curve, 0.5, (100.0, 300.0), DEFAULT_PLATEAU_THRESHOLD).unwrap();
    report(
        7,
        "(b) sqrt(t) P plateau",
        fit.plateau == Some(true),
        format!("level {:.4}, max relative deviation {:.4} (threshold 0.1)", fit.value, fit.max_deviation.unwrap()),
    );
}

#[test]
fn criterion_7c_master_follows_walk() {
    let run = strong_dephasing();
    let exact = walk_exact_curve(&TimeGrid64::from_times(run.curve.times().to_vec()).unwrap(), 0.036, 0.2).unwrap();
    let worst = run
        .curve
        .iter()
        .zip(exact.ps())
        .filter(|((t, _), _)| (10.0..=300.0).contains(t))
        .map(|((_, m), &w)| ((m - w) / w).abs())
        .fold(0.0, f64::max);
    report(7, "(c) master vs exact walk", worst < 0.05, format!("max relative deviation {worst:.4} on Jt in [10, 300] (tol 0.05)"));
}

#[test]
fn criterion_8_trajectories_match_master() {
    let t_max = 20.0;
    let p = params(0.3, 1.0, recommended_truncation(&params(0.3, 1.0, 1), t_max));
    let grid = TimeGrid64::uniform(t_max, 201).unwrap();
    // Seed fixed in advance; never tuned.
    let opts = TrajectoryOptions::new(2000, 12345);
    let ens = run_ensemble(&p, &grid, &opts).unwrap();
    let again = run_ensemble(&p, &grid, &opts).unwrap();
    let (master, _) = evolve_master_with_diagnostics(&p, &grid, &StepOptions64::default()).unwrap();
    let se = ens.curve.stderr().unwrap();
    let inside = ens
        .curve
        .ps()
        .iter()
        .zip(master.ps())
        .zip(se)
        .filter(|((a, b), s)| (*a - *b).abs() <= 3.0 * *s)
        .count();
    let fraction = inside as f64 / grid.len() as f64;
    let identical = ens == again;
    report(
        8,
        "trajectory ensemble vs master",
        fraction >= 0.99 && identical,
        format!("{inside}/{} points within 3 stderr ({:.2}%, need 99%), rerun bit-identical: {identical}", grid.len(), 100.0 * fraction),
    );
}

#[test]
fn criterion_9_structural_invariants() {
    let strong = strong_dephasing();
    let moderate_grid = TimeGrid64::uniform(20.0, 201).unwrap();
    let n = recommended_truncation(&params(0.3, 1.0, 1), 20.0);
    let (moderate, moderate_diag) =
        evolve_master_with_diagnostics(&params(0.3, 1.0, n), &moderate_grid, &StepOptions64::default()).unwrap();
    let (moderate_2n, _) =
        evolve_master_with_diagnostics(&params(0.3, 1.0, 2 * n), &moderate_grid, &StepOptions64::default()).unwrap();

    // Half the strong-dephasing lattice still holds the diffusive horizon.
    let (strong_half, _) = evolve_master_with_diagnostics(
        &params(0.3, 10.0, STRONG_N / 2),
        &TimeGrid64::uniform(300.0, 601).unwrap(),
        &StepOptions64::default(),
    )
    .unwrap();

    let coherent_grid = TimeGrid64::uniform(100.0, 501).unwrap();
    let nc = recommended_truncation(&params(0.3, 0.0, 1), 100.0);
    let coherent = evolve_coherent(&params(0.3, 0.0, nc), &coherent_grid, &StepOptions64::default()).unwrap();
    let coherent_2n = evolve_coherent(&params(0.3, 0.0, 2 * nc), &coherent_grid, &StepOptions64::default()).unwrap();

    let diags = [strong.diag, moderate_diag];
    let trace = diags.iter().map(|d| d.max_trace_error).fold(0.0, f64::max);
    let herm = diags.iter().map(|d| d.max_hermiticity_error).fold(0.0, f64::max);
    let min_pop = diags.iter().map(|d| d.min_population).fold(f64::INFINITY, f64::min);
    let doubling = [
        moderate.max_abs_diff(&moderate_2n),
        strong.curve.max_abs_diff(&strong_half),
        coherent.max_abs_diff(&coherent_2n),
    ];
    let worst_doubling = doubling.iter().copied().fold(0.0, f64::max);
    let pass = trace < 1e-8 && herm < 1e-10 && min_pop >= -1e-10 && worst_doubling < 1e-8;
    report(
        9,
        "structural invariants",
        pass,
        format!(
            "trace err {trace:.1e} (tol 1e-8), hermiticity err {herm:.1e} (tol 1e-10), min population {min_pop:.1e} (tol -1e-10), \
             N-doubling max |dP| {worst_doubling:.1e} (tol 1e-8; master gamma=1 {:.1e}, master gamma=10 {:.1e}, coherent {:.1e})",
            doubling[0], doubling[1], doubling[2]
        ),
    );
}
