//! Fixed-step classic fourth-order Runge-Kutta for linear systems, with
//! output sampled at the integration step nearest to each grid time.

use std::ops::{Add, Mul};

use num_complex::Complex;
use num_traits::Zero;

use crate::curve::TimeGrid;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::Real;

/// Element type of an integrated state: a real or complex scalar.
pub trait Element<T>: Copy + Send + Sync + Zero + Add<Output = Self> + Mul<T, Output = Self> {}

impl<T: Real> Element<T> for T {}
impl<T: Real> Element<T> for Complex<T> {}

/// Autonomous system `dy/dt = f(y)` on a flat state vector.
pub trait Ode<T, E> {
    fn dim(&self) -> usize;
    /// Writes `f(y)` into `dy`. Both slices have length [`Ode::dim`].
    fn rhs(&self, y: &[E], dy: &mut [E]);
}

/// Scratch buffers for one RK4 integration.
pub struct Rk4<E> {
    k: Vec<E>,
    acc: Vec<E>,
    tmp: Vec<E>,
}

impl<E: Copy + Zero> Rk4<E> {
    pub fn new(dim: usize) -> Self {
        Self { k: vec![E::zero(); dim], acc: vec![E::zero(); dim], tmp: vec![E::zero(); dim] }
    }
}

impl<E> Rk4<E> {
    /// Advances `y` by one step of size `dt`.
    pub fn step<T, S>(&mut self, sys: &S, y: &mut [E], dt: T)
    where
        T: Real,
        E: Element<T>,
        S: Ode<T, E> + ?Sized,
    {
        let half = dt * T::lit(0.5);
        let two = T::lit(2.0);
        let Self { k, acc, tmp } = self;

        sys.rhs(y, k);
        for ((a, t), (&ki, &yi)) in acc.iter_mut().zip(tmp.iter_mut()).zip(k.iter().zip(y.iter())) {
            *a = ki;
            *t = yi + ki * half;
        }
        sys.rhs(tmp, k);
        for ((a, t), (&ki, &yi)) in acc.iter_mut().zip(tmp.iter_mut()).zip(k.iter().zip(y.iter())) {
            *a = *a + ki * two;
            *t = yi + ki * half;
        }
        sys.rhs(tmp, k);
        for ((a, t), (&ki, &yi)) in acc.iter_mut().zip(tmp.iter_mut()).zip(k.iter().zip(y.iter())) {
            *a = *a + ki * two;
            *t = yi + ki * dt;
        }
        sys.rhs(tmp, k);
        let sixth = dt / T::lit(6.0);
        for ((yi, &a), &ki) in y.iter_mut().zip(acc.iter()).zip(k.iter()) {
            *yi = *yi + (a + ki) * sixth;
        }
    }
}

/// Step control for the deterministic solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions<T> {
    /// Integration step; `None` selects `0.01 / max(J, gamma, g0, |delta|, 1)`.
    pub dt: Option<T>,
    /// Allowed drift of the conserved probability at every output point.
    pub tol: T,
    /// The step may be halved on a drift alarm at most this many times.
    pub max_halvings: u32,
}

impl<T: Real> Default for StepOptions<T> {
    fn default() -> Self {
        Self { dt: None, tol: T::lit(1e-8), max_halvings: 10 }
    }
}

impl<T: Real> StepOptions<T> {
    pub fn with_dt(dt: T) -> Self {
        Self { dt: Some(dt), ..Self::default() }
    }

    pub fn resolve_dt(&self, p: &ModelParams<T>) -> Result<T> {
        let dt = self.dt.unwrap_or_else(|| T::lit(0.01) / p.fastest_rate());
        if !(dt > T::zero() && dt.is_finite()) {
            return Err(crate::error::invalid("dt", format!("must be positive, got {dt}")));
        }
        Ok(dt)
    }
}

/// Step size and the step indices at which each grid time is sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPlan<T> {
    pub dt: T,
    pub sample_steps: Vec<usize>,
}

impl<T: Real> StepPlan<T> {
    /// On a uniform grid the step is shrunk so that every grid time is an
    /// integration node; otherwise each time is sampled at the nearest step.
    pub fn new(grid: &TimeGrid<T>, dt: T) -> Self {
        match grid.uniform_spacing() {
            Some(h) => {
                let ratio = h / dt;
                let sub = (ratio - T::lit(1e-9) * ratio).ceil().max(T::one());
                let sub_n = sub.to_usize().unwrap_or(1);
                Self {
                    dt: h / sub,
                    sample_steps: (0..grid.len()).map(|k| k * sub_n).collect(),
                }
            }
            None => Self {
                dt,
                sample_steps: grid
                    .times()
                    .iter()
                    .map(|&t| (t / dt).round().to_usize().unwrap_or(0))
                    .collect(),
            },
        }
    }

    pub fn total_steps(&self) -> usize {
        self.sample_steps.last().copied().unwrap_or(0)
    }
}

/// Integrates `y` in place through the plan, calling `observe(k, y)` at the
/// step that samples grid point `k`. An observer error aborts the run.
pub fn integrate_sampled<T, E, S, F>(sys: &S, y: &mut [E], plan: &StepPlan<T>, mut observe: F) -> Result<()>
where
    T: Real,
    E: Element<T>,
    S: Ode<T, E> + ?Sized,
    F: FnMut(usize, &[E]) -> Result<()>,
{
    let mut rk = Rk4::new(sys.dim());
    let mut step = 0;
    for (k, &target) in plan.sample_steps.iter().enumerate() {
        while step < target {
            rk.step(sys, y, plan.dt);
            step += 1;
        }
        observe(k, y)?;
    }
    Ok(())
}

/// Runs `attempt` with the resolved step, halving it whenever the attempt
/// reports a drift between `tol` and `100 tol`. Larger drift is an
/// instability and is returned as is.
pub(crate) fn with_step_halving<T, R>(
    opts: &StepOptions<T>,
    dt0: T,
    mut attempt: impl FnMut(T) -> Result<R>,
) -> Result<R>
where
    T: Real,
{
    let min = dt0 / T::lit(2.0).powi(opts.max_halvings as i32);
    let mut dt = dt0;
    loop {
        match attempt(dt) {
            Err(Error::TraceDrift { drift, .. }) if drift <= 100.0 * opts.tol.to_f64_lossy() => {
                dt = dt * T::lit(0.5);
                if dt < min {
                    return Err(Error::StepUnderflow { dt: dt.to_f64_lossy(), min: min.to_f64_lossy() });
                }
            }
            other => return other,
        }
    }
}
