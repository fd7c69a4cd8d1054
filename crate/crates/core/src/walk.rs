//! Strong-dephasing limit: the excitation performs a classical continuous-time
//! random walk. The emitter exchanges population with the edge cavity at rate
//! `R = 4 g0^2 / gamma` and the photon hops between cavities at rate
//! `Q = 2 J^2 / gamma`:
//!
//! ```text
//! dp_a/dt = R (p_0 - p_a)
//! dp_0/dt = R (p_a - p_0) + Q (p_1 - p_0)
//! dp_n/dt = Q (p_{n+1} + p_{n-1} - 2 p_n)
//! ```
//!
//! The survival `p_a(t)` is known in closed form as a spectral integral over
//! the band `E(w) = -2Q (1 - cos w)`, plus one isolated mode below the band
//! when `r = R/Q > 4/3`. Long times give the diffusive law `1/sqrt(pi Q t)`.

use rayon::prelude::*;

use crate::curve::{DecayCurve, TimeGrid};
use crate::error::{invalid, Error, Result};
use crate::integrate::{integrate_sampled, Ode, StepOptions, StepPlan};
use crate::model::ModelParams;
use crate::quadrature::adaptive_gauss_kronrod;
use crate::Real;

/// Absolute tolerance of the spectral integral.
pub const EXACT_TOL: f64 = 1e-10;
const MAX_SEGMENTS: usize = 2000;

/// Populations of the emitter and of cavities `0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkState<T> {
    pub p_atom: T,
    pub p_site: Vec<T>,
}

impl<T: Real> WalkState<T> {
    pub fn excited(n_sites: usize) -> Self {
        Self { p_atom: T::one(), p_site: vec![T::zero(); n_sites] }
    }

    pub fn total(&self) -> T {
        self.p_atom + self.p_site.iter().copied().sum::<T>()
    }

    pub fn min_population(&self) -> T {
        self.p_site.iter().copied().fold(self.p_atom, T::min)
    }

    fn from_flat(y: &[T]) -> Self {
        Self { p_atom: y[0], p_site: y[1..].to_vec() }
    }
}

/// Band structure and spectral weight of the walk generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkKernel<T> {
    /// `R / Q`.
    pub r: T,
    pub q: T,
}

impl<T: Real> WalkKernel<T> {
    pub fn new(r: T, q: T) -> Result<Self> {
        if !(r > T::zero() && r.is_finite()) {
            return Err(invalid("r", "must be positive"));
        }
        if !(q > T::zero() && q.is_finite()) {
            return Err(invalid("Q", "must be positive"));
        }
        Ok(Self { r, q })
    }

    pub fn from_rates(r_atom: T, q: T) -> Result<Self> {
        if !(q > T::zero()) {
            return Err(invalid("Q", "must be positive"));
        }
        Self::new(r_atom / q, q)
    }

    /// `E(w) = -2Q (1 - cos w)`.
    pub fn energy(&self, w: T) -> T {
        -T::lit(2.0) * self.q * (T::one() - w.cos())
    }

    /// `r^2 (1 + cos w) / (pi [r^2 + 4 (r - 1)(1 - cos w)(r - 1 + cos w)])`.
    pub fn weight(&self, w: T) -> T {
        let c = w.cos();
        self.r * self.r * (T::one() + c) / (T::PI() * self.denominator(c))
    }

    fn denominator(&self, c: T) -> T {
        let r = self.r;
        let rm1 = r - T::one();
        r * r + T::lit(4.0) * rm1 * (T::one() - c) * (rm1 + c)
    }

    /// Smallest weight on `samples + 1` equally spaced points of `[0, pi]`.
    pub fn min_weight(&self, samples: usize) -> T {
        let h = T::PI() / T::from_usize(samples.max(1)).unwrap();
        (0..=samples).map(|k| self.weight(h * T::from_usize(k).unwrap())).fold(T::infinity(), T::min)
    }

    /// Decay rate `E_b < -4Q` and survival weight of the mode split off below
    /// the band, present only for `r > 4/3`.
    pub fn bound_mode(&self) -> Option<(T, T)> {
        let r = self.r;
        if !(r > T::lit(4.0 / 3.0)) {
            return None;
        }
        // Localized eigenvector p_n ~ z^n with 1/z = (1 - r) - sqrt(r (r - 1)).
        let inv_z = (T::one() - r) - (r * (r - T::one())).sqrt();
        let z = inv_z.recip();
        let e = z + inv_z - T::lit(2.0);
        let atom = r / (e + r);
        let weight = atom * atom / (atom * atom + (T::one() - z * z).recip());
        Some((self.q * e, weight))
    }

    /// Survival probability `int_0^pi G(w) exp(E(w) t) dw` plus the isolated
    /// mode. For large `Q t` the integral is split at `w = 1/sqrt(Q t)` where
    /// the integrand concentrates.
    pub fn survival(&self, t: T) -> Result<T> {
        if !(t >= T::zero() && t.is_finite()) {
            return Err(invalid("t", "must be non-negative"));
        }
        let qt = self.q * t;
        let mut breaks = Vec::new();
        if qt > T::one() {
            let w = qt.sqrt().recip();
            breaks.extend([w, T::lit(4.0) * w].into_iter().filter(|&x| x < T::PI()));
        }
        let est = adaptive_gauss_kronrod(
            |w| self.weight(w) * (self.energy(w) * t).exp(),
            T::zero(),
            T::PI(),
            &breaks,
            T::lit(EXACT_TOL),
            MAX_SEGMENTS,
        )?;
        let bound = self.bound_mode().map_or(T::zero(), |(e, w)| w * (e * t).exp());
        Ok(est.value + bound)
    }
}

/// Survival probability of the walk at time `t` for hop rates `R`, `Q`.
pub fn walk_exact<T: Real>(t: T, r_atom: T, q: T) -> Result<T> {
    if !(r_atom > T::zero()) {
        return Err(invalid("R", "must be positive"));
    }
    WalkKernel::from_rates(r_atom, q)?.survival(t)
}

/// [`walk_exact`] on every grid time, evaluated in parallel.
pub fn walk_exact_curve<T: Real>(grid: &TimeGrid<T>, r_atom: T, q: T) -> Result<DecayCurve<T>> {
    if !(r_atom > T::zero()) {
        return Err(invalid("R", "must be positive"));
    }
    let kernel = WalkKernel::from_rates(r_atom, q)?;
    if kernel.min_weight(4096) < T::zero() {
        return Err(invalid("r", "the spectral weight is negative for this rate ratio"));
    }
    let ps = grid.times().par_iter().map(|&t| kernel.survival(t)).collect::<Result<Vec<_>>>()?;
    DecayCurve::new(grid.times().to_vec(), ps)
}

/// Diffusive asymptote `1 / sqrt(pi Q t)`.
pub fn walk_asymptotic<T: Real>(t: T, q: T) -> Result<T> {
    if !(q > T::zero()) {
        return Err(invalid("Q", "must be positive"));
    }
    if !(t > T::zero()) {
        return Err(invalid("t", "the asymptote diverges at t = 0"));
    }
    Ok((T::PI() * q * t).sqrt().recip())
}

struct RateEquations<T> {
    r: T,
    q: T,
    n: usize,
}

impl<T: Real> Ode<T, T> for RateEquations<T> {
    fn dim(&self) -> usize {
        self.n + 1
    }

    fn rhs(&self, y: &[T], dy: &mut [T]) {
        let n = self.n;
        let p = &y[1..];
        dy[0] = self.r * (p[0] - y[0]);
        let d = &mut dy[1..];
        for k in 0..n {
            let left = if k > 0 { p[k - 1] - p[k] } else { T::zero() };
            let right = if k + 1 < n { p[k + 1] - p[k] } else { T::zero() };
            d[k] = self.q * (left + right);
        }
        d[0] += self.r * (y[0] - p[0]);
    }
}

/// Integrates the rate equations with hop rates `R`, `Q` on `n_sites`
/// cavities (reflecting wall after the last), calling `inspect` at every
/// grid time. Probability is checked against `opts.tol` at each output.
pub fn evolve_walk_rates_observed<T: Real>(
    r_atom: T,
    q: T,
    n_sites: usize,
    grid: &TimeGrid<T>,
    opts: &StepOptions<T>,
    mut inspect: impl FnMut(&WalkState<T>),
) -> Result<DecayCurve<T>> {
    if !(r_atom >= T::zero() && r_atom.is_finite()) {
        return Err(invalid("R", "must be non-negative"));
    }
    if !(q >= T::zero() && q.is_finite()) {
        return Err(invalid("Q", "must be non-negative"));
    }
    if n_sites == 0 {
        return Err(invalid("N", "at least one cavity is required"));
    }
    let dt = opts.dt.unwrap_or_else(|| T::lit(0.01) / r_atom.max(q).max(T::one()));
    if !(dt > T::zero()) {
        return Err(invalid("dt", "must be positive"));
    }
    let plan = StepPlan::new(grid, dt);
    let sys = RateEquations { r: r_atom, q, n: n_sites };
    let mut y = vec![T::zero(); n_sites + 1];
    y[0] = T::one();
    let mut ps = Vec::with_capacity(grid.len());
    let bound = opts.tol;
    integrate_sampled(&sys, &mut y, &plan, |_, y| {
        let state = WalkState::from_flat(y);
        let drift = (state.total() - T::one()).abs();
        if drift > bound {
            return Err(Error::TraceDrift { drift: drift.to_f64_lossy(), bound: bound.to_f64_lossy() });
        }
        inspect(&state);
        ps.push(state.p_atom);
        Ok(())
    })?;
    DecayCurve::new(grid.times().to_vec(), ps)
}

pub fn evolve_walk_rates<T: Real>(r_atom: T, q: T, n_sites: usize, grid: &TimeGrid<T>, opts: &StepOptions<T>) -> Result<DecayCurve<T>> {
    evolve_walk_rates_observed(r_atom, q, n_sites, grid, opts, |_| {})
}

/// Rate equations for the walk rates derived from `p` (requires `gamma > 0`)
/// on `p.n_sites` cavities.
pub fn evolve_walk<T: Real>(p: &ModelParams<T>, grid: &TimeGrid<T>, opts: &StepOptions<T>) -> Result<DecayCurve<T>> {
    p.validate()?;
    let rates = p.derive_rates();
    let (r, q) = match (rates.hop_atom, rates.hop_photon) {
        (Some(r), Some(q)) => (r, q),
        _ => return Err(invalid("gamma", "the walk limit requires gamma > 0")),
    };
    evolve_walk_rates(r, q, p.n_sites, grid, opts)
}
