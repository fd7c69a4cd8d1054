//! Stochastic unraveling of the dephasing dynamics: each trajectory is a pure
//! state driven by the coherent Hamiltonian plus independent white-noise
//! shifts of the cavity frequencies. Averaging `|c_a|^2` over trajectories
//! converges to the master-equation survival probability.
//!
//! Seed policy: trajectory `k` of a run with seed `s` draws from a
//! `ChaCha8Rng` seeded with `seed_from_u64(s)` on stream `k`. Results depend
//! only on `(seed, trajectories, dt, grid, params)`, never on thread count.

use num_complex::Complex;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::closed::CoherentHamiltonian;
use crate::curve::{DecayCurve, TimeGrid};
use crate::error::{invalid, Error, Result};
use crate::integrate::{Rk4, StepOptions, StepPlan};
use crate::model::ModelParams;
use crate::Real;

/// `c_a |e,0> + sum_n C_n |g,n>`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState<T> {
    pub ca: Complex<T>,
    pub c: Vec<Complex<T>>,
}

impl<T: Real> PureState<T> {
    pub fn excited(n_sites: usize) -> Self {
        Self { ca: Complex::new(T::one(), T::zero()), c: vec![Complex::zero(); n_sites] }
    }

    pub fn norm_sqr(&self) -> T {
        self.ca.norm_sqr() + self.c.iter().map(|z| z.norm_sqr()).sum::<T>()
    }
}

/// Reusable buffers for Strang-split trajectory steps.
struct Stepper<T> {
    sys: CoherentHamiltonian<T>,
    rk: Rk4<Complex<T>>,
    half: T,
    kick: T,
}

impl<T: Real> Stepper<T> {
    fn new(p: &ModelParams<T>, dt: T) -> Self {
        Self {
            sys: CoherentHamiltonian::new(p),
            rk: Rk4::new(p.n_sites + 1),
            half: dt * T::lit(0.5),
            kick: (p.gamma * dt).sqrt(),
        }
    }

    /// Half coherent step, phase kick `C_n <- C_n exp(-i dW_n)`, half step.
    /// `y` is the flat `[c_a, C_0, ..]` state; `noise` holds one standard
    /// normal draw per cavity.
    fn step(&mut self, y: &mut [Complex<T>], noise: &[T]) {
        self.rk.step(&self.sys, y, self.half);
        if self.kick > T::zero() {
            for (z, &xi) in y[1..].iter_mut().zip(noise) {
                let (s, c) = (self.kick * xi).sin_cos();
                *z = *z * Complex::new(c, -s);
            }
        }
        self.rk.step(&self.sys, y, self.half);
    }
}

/// One Strang-split step of length `dt`. The emitter amplitude is never
/// kicked; only the cavity amplitudes see the noise.
pub fn trajectory_step<T: Real>(s: &PureState<T>, p: &ModelParams<T>, dt: T, noise: &[T]) -> Result<PureState<T>> {
    if s.c.len() != p.n_sites {
        return Err(Error::DimensionMismatch { expected: p.n_sites, found: s.c.len() });
    }
    if noise.len() != p.n_sites {
        return Err(Error::DimensionMismatch { expected: p.n_sites, found: noise.len() });
    }
    if !(dt > T::zero()) {
        return Err(invalid("dt", "must be positive"));
    }
    let mut y = Vec::with_capacity(p.n_sites + 1);
    y.push(s.ca);
    y.extend_from_slice(&s.c);
    Stepper::new(p, dt).step(&mut y, noise);
    Ok(PureState { ca: y[0], c: y[1..].to_vec() })
}

/// Wiener increments `sqrt(gamma dt) xi_n` as applied by the kick.
pub fn wiener_increments<T: Real>(gamma: T, dt: T, noise: &[T]) -> Vec<T> {
    let scale = (gamma * dt).sqrt();
    noise.iter().map(|&xi| scale * xi).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryOptions<T> {
    /// Step size; `None` selects `0.01 / max(J, gamma, g0, |delta|, 1)`.
    pub dt: Option<T>,
    pub trajectories: usize,
    pub seed: u64,
}

impl<T: Real> TrajectoryOptions<T> {
    pub fn new(trajectories: usize, seed: u64) -> Self {
        Self { dt: None, trajectories, seed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult<T> {
    /// Mean survival probability with its standard error.
    pub curve: DecayCurve<T>,
    pub trajectories: usize,
    pub seed: u64,
    pub dt: T,
    /// Largest `|1 - norm|` of any trajectory at the final time.
    pub max_norm_error: T,
}

/// RNG for trajectory `index` of a run seeded with `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn run_one<T: Real>(p: &ModelParams<T>, plan: &StepPlan<T>, rng: &mut impl Rng) -> (Vec<T>, T)
where
    StandardNormal: Distribution<T>,
{
    let mut stepper = Stepper::new(p, plan.dt);
    let mut y = vec![Complex::zero(); p.n_sites + 1];
    y[0] = Complex::new(T::one(), T::zero());
    let mut noise = vec![T::zero(); p.n_sites];
    let mut samples = Vec::with_capacity(plan.sample_steps.len());
    let mut step = 0;
    for &target in &plan.sample_steps {
        while step < target {
            if p.gamma > T::zero() {
                noise.iter_mut().for_each(|xi| *xi = StandardNormal.sample(rng));
            }
            stepper.step(&mut y, &noise);
            step += 1;
        }
        samples.push(y[0].norm_sqr());
    }
    let norm: T = y.iter().map(|z| z.norm_sqr()).sum();
    (samples, (norm - T::one()).abs())
}

/// Averages `|c_a(t)|^2` over `opts.trajectories` independent trajectories.
/// Trajectories run in parallel; the reduction sums them in index order.
pub fn run_ensemble<T: Real>(p: &ModelParams<T>, grid: &TimeGrid<T>, opts: &TrajectoryOptions<T>) -> Result<EnsembleResult<T>>
where
    StandardNormal: Distribution<T>,
{
    p.validate()?;
    let m = opts.trajectories;
    if m < 2 {
        return Err(invalid("trajectories", "at least two trajectories are needed for a standard error"));
    }
    let dt = StepOptions { dt: opts.dt, ..StepOptions::default() }.resolve_dt(p)?;
    let plan = StepPlan::new(grid, dt);

    let runs: Vec<(Vec<T>, T)> = (0..m)
        .into_par_iter()
        .map(|k| run_one(p, &plan, &mut trajectory_rng(opts.seed, k as u64)))
        .collect();

    let count = T::from_usize(m).unwrap();
    let points = grid.len();
    let mut mean = vec![T::zero(); points];
    for (samples, _) in &runs {
        for (acc, &x) in mean.iter_mut().zip(samples) {
            *acc += x;
        }
    }
    mean.iter_mut().for_each(|x| *x /= count);
    let mut var = vec![T::zero(); points];
    for (samples, _) in &runs {
        for ((acc, &x), &mu) in var.iter_mut().zip(samples).zip(&mean) {
            *acc += (x - mu) * (x - mu);
        }
    }
    let stderr = var
        .iter()
        .map(|&v| (v / (count - T::one())).sqrt() / count.sqrt())
        .collect();
    let max_norm_error = runs.iter().map(|(_, e)| *e).fold(T::zero(), T::max);

    Ok(EnsembleResult {
        curve: DecayCurve::with_stderr(grid.times().to_vec(), mean, stderr)?,
        trajectories: m,
        seed: opts.seed,
        dt: plan.dt,
        max_norm_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed::evolve_coherent;
    use crate::lindblad::evolve_master;
    use crate::model::recommended_truncation;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn noise_is_irrelevant_without_dephasing() {
        let p = ModelParams::new(1.0, 0.4, 0.0, 6).unwrap();
        let mut s = PureState::excited(6);
        s.c[0] = c(0.1, 0.2);
        s.ca = c((1.0f64 - 0.05).sqrt(), 0.0);
        let a = trajectory_step(&s, &p, 0.01, &[0.0; 6]).unwrap();
        let b = trajectory_step(&s, &p, 0.01, &[3.0, -1.0, 0.5, 2.0, -2.0, 1.0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_step_is_unitary() {
        let p = ModelParams::new(1.0, 1.0, 0.5, 8).unwrap();
        let mut rng = trajectory_rng(3, 0);
        let mut s = PureState::excited(8);
        for _ in 0..50 {
            let noise: Vec<f64> = (0..8).map(|_| StandardNormal.sample(&mut rng)).collect();
            let before = s.norm_sqr();
            s = trajectory_step(&s, &p, 1e-3, &noise).unwrap();
            assert!((s.norm_sqr() - before).abs() < 1e-12);
        }
    }

    #[test]
    fn wiener_statistics() {
        let (gamma, dt) = (2.5, 0.01);
        let mut rng = trajectory_rng(99, 0);
        let draws: Vec<f64> = (0..1_000_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let dw = wiener_increments(gamma, dt, &draws);
        let n = dw.len() as f64;
        let mean = dw.iter().sum::<f64>() / n;
        let var = dw.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        // standard error of the mean is sqrt(gamma dt / n) = 1.6e-4
        assert!(mean.abs() < 5.0 * (gamma * dt / n).sqrt());
        assert!((var / (gamma * dt) - 1.0).abs() < 0.01);
    }

    #[test]
    fn step_rejects_bad_input() {
        let p = ModelParams::new(1.0, 1.0, 0.5, 4).unwrap();
        let s = PureState::excited(4);
        assert!(trajectory_step(&s, &p, 0.01, &[0.0; 3]).is_err());
        assert!(trajectory_step(&PureState::excited(3), &p, 0.01, &[0.0; 4]).is_err());
        assert!(trajectory_step(&s, &p, 0.0, &[0.0; 4]).is_err());
    }

    #[test]
    fn closed_ensemble_is_the_coherent_solution() {
        let p = ModelParams::new(1.0, 0.3, 0.0, 40).unwrap();
        let grid = TimeGrid::uniform(10.0, 21).unwrap();
        let ens = run_ensemble(&p, &grid, &TrajectoryOptions::new(4, 1)).unwrap();
        assert!(ens.curve.stderr().unwrap().iter().all(|&s| s == 0.0));
        let exact = evolve_coherent(&p, &grid, &StepOptions::default()).unwrap();
        assert!(ens.curve.max_abs_diff(&exact) < 1e-9);
    }

    #[test]
    fn requires_two_trajectories() {
        let p = ModelParams::new(1.0, 0.3, 1.0, 10).unwrap();
        let grid = TimeGrid::uniform(1.0, 3).unwrap();
        assert!(run_ensemble(&p, &grid, &TrajectoryOptions::new(1, 0)).is_err());
    }

    #[test]
    fn same_seed_same_result() {
        let p = ModelParams::new(1.0, 0.3, 1.0, 20).unwrap();
        let grid = TimeGrid::uniform(5.0, 11).unwrap();
        let a = run_ensemble(&p, &grid, &TrajectoryOptions::new(16, 42)).unwrap();
        let b = run_ensemble(&p, &grid, &TrajectoryOptions::new(16, 42)).unwrap();
        assert_eq!(a, b);
        let other = run_ensemble(&p, &grid, &TrajectoryOptions::new(16, 43)).unwrap();
        assert_ne!(a.curve, other.curve);
        assert!(a.max_norm_error < 1e-8);
    }

    #[test]
    fn ensemble_tracks_master_equation() {
        let t_max = 10.0;
        let base = ModelParams::new(1.0, 0.3, 1.0, 1).unwrap();
        let p = base.with_sites(recommended_truncation(&base, t_max)).unwrap();
        let grid = TimeGrid::uniform(t_max, 41).unwrap();
        let ens = run_ensemble(&p, &grid, &TrajectoryOptions::new(400, 5)).unwrap();
        let master = evolve_master(&p, &grid, &StepOptions::default()).unwrap();
        let se = ens.curve.stderr().unwrap();
        let worst = ens
            .curve
            .ps()
            .iter()
            .zip(master.ps())
            .zip(se)
            .skip(1)
            .map(|((a, b), s): ((&f64, &f64), &f64)| (a - b).abs() / s)
            .fold(0.0, f64::max);
        assert!(worst < 4.0, "max deviation {worst} standard errors");
    }

    /// Exact ensemble average of the split scheme: coherent half steps act as
    /// `U rho U^+`; the averaged kick damps `rho[n][m]` by `exp(-gamma dt)`
    /// and `rho[n][e]` by `exp(-gamma dt / 2)`.
    fn mean_split_survival(p: &ModelParams<f64>, dt: f64, steps: usize) -> f64 {
        let dim = p.n_sites + 1;
        let sys = CoherentHamiltonian::new(p);
        // Columns of the half-step propagator (index 0 is the emitter).
        let mut u = vec![vec![c(0.0, 0.0); dim]; dim];
        for col in 0..dim {
            let mut y = vec![c(0.0, 0.0); dim];
            y[col] = c(1.0, 0.0);
            Rk4::new(dim).step(&sys, &mut y, dt / 2.0);
            for row in 0..dim {
                u[row][col] = y[row];
            }
        }
        let apply = |rho: &Vec<Vec<Complex<f64>>>| {
            let mut tmp = vec![vec![c(0.0, 0.0); dim]; dim];
            for a in 0..dim {
                for b in 0..dim {
                    tmp[a][b] = (0..dim).map(|k| u[a][k] * rho[k][b]).sum();
                }
            }
            let mut out = vec![vec![c(0.0, 0.0); dim]; dim];
            for a in 0..dim {
                for b in 0..dim {
                    out[a][b] = (0..dim).map(|k| tmp[a][k] * u[b][k].conj()).sum();
                }
            }
            out
        };
        let mut rho = vec![vec![c(0.0, 0.0); dim]; dim];
        rho[0][0] = c(1.0, 0.0);
        let full = (-p.gamma * dt).exp();
        let cross = (-p.gamma * dt / 2.0).exp();
        for _ in 0..steps {
            rho = apply(&rho);
            for a in 0..dim {
                for b in 0..dim {
                    if a == b {
                        continue;
                    }
                    rho[a][b] *= if a == 0 || b == 0 { cross } else { full };
                }
            }
            rho = apply(&rho);
        }
        rho[0][0].re
    }

    #[test]
    fn splitting_bias_is_second_order() {
        let p = ModelParams::new(1.0, 0.5, 2.0, 6).unwrap();
        let t = 2.0;
        let grid = TimeGrid::uniform(t, 2).unwrap();
        let reference = evolve_master(&p, &grid, &StepOptions::with_dt(1e-4)).unwrap().ps()[1];
        let err = |dt: f64| (mean_split_survival(&p, dt, (t / dt).round() as usize) - reference).abs();
        let (coarse, fine) = (err(0.1), err(0.05));
        let order = (coarse / fine).log2();
        assert!((order - 2.0).abs() < 0.2, "observed order {order}");
    }
}
