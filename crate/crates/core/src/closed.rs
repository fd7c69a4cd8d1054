//! Dephasing-free dynamics. The emitter and the field stay in a pure state,
//! computed either by integrating the amplitude equations in time or, for the
//! semi-infinite lattice, by integrating the branch-cut spectral density of
//! the emitter propagator against `exp(-iEt)`.

use std::io::{self, Write};

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;

use crate::curve::{fmt17, DecayCurve, TimeGrid};
use crate::error::{invalid, Error, Result};
use crate::integrate::{integrate_sampled, Ode, StepOptions, StepPlan};
use crate::model::ModelParams;
use crate::quadrature::GaussChebyshev2;
use crate::Real;

/// Amplitude equations of the closed system in the rotating frame, on the
/// flat state `[c_a, C_0, .., C_{N-1}]`:
/// `i dc_a/dt = delta c_a + g0 C_0`,
/// `i dC_n/dt = -J (C_{n+1} + C_{n-1}) + g0 delta_{n,0} c_a`.
pub struct CoherentHamiltonian<T> {
    n: usize,
    j: T,
    g0: T,
    delta: T,
}

impl<T: Real> CoherentHamiltonian<T> {
    pub fn new(p: &ModelParams<T>) -> Self {
        Self { n: p.n_sites, j: p.j, g0: p.g0, delta: p.delta }
    }
}

#[inline(always)]
fn minus_i<T: Real>(z: Complex<T>) -> Complex<T> {
    Complex::new(z.im, -z.re)
}

impl<T: Real> Ode<T, Complex<T>> for CoherentHamiltonian<T> {
    fn dim(&self) -> usize {
        self.n + 1
    }

    fn rhs(&self, y: &[Complex<T>], dy: &mut [Complex<T>]) {
        let n = self.n;
        let (ca, c) = (y[0], &y[1..]);
        dy[0] = minus_i(ca * self.delta + c[0] * self.g0);
        let d = &mut dy[1..];
        for k in 0..n {
            let mut hop = Complex::zero();
            if k > 0 {
                hop = hop + c[k - 1];
            }
            if k + 1 < n {
                hop = hop + c[k + 1];
            }
            d[k] = minus_i(-(hop * self.j));
        }
        d[0] = d[0] + minus_i(ca * self.g0);
    }
}

/// Survival probability `|c_a|^2` from the time-domain amplitude equations.
/// The dephasing rate of `p` is ignored.
pub fn evolve_coherent<T: Real>(p: &ModelParams<T>, grid: &TimeGrid<T>, opts: &StepOptions<T>) -> Result<DecayCurve<T>> {
    evolve_coherent_with_norm(p, grid, opts).map(|(c, _)| c)
}

/// As [`evolve_coherent`], also returning the worst norm error seen at the
/// output points.
pub fn evolve_coherent_with_norm<T: Real>(
    p: &ModelParams<T>,
    grid: &TimeGrid<T>,
    opts: &StepOptions<T>,
) -> Result<(DecayCurve<T>, T)> {
    p.validate()?;
    let closed = ModelParams { gamma: T::zero(), ..*p };
    let dt = opts.resolve_dt(&closed)?;
    let plan = StepPlan::new(grid, dt);
    let sys = CoherentHamiltonian::new(&closed);
    let mut y = vec![Complex::zero(); p.n_sites + 1];
    y[0] = Complex::new(T::one(), T::zero());
    let mut ps = Vec::with_capacity(grid.len());
    let mut worst = T::zero();
    integrate_sampled(&sys, &mut y, &plan, |_, y| {
        let norm: T = y.iter().map(|z| z.norm_sqr()).sum();
        worst = worst.max((norm - T::one()).abs());
        ps.push(y[0].norm_sqr());
        Ok(())
    })?;
    Ok((DecayCurve::new(grid.times().to_vec(), ps)?, worst))
}

/// Spectral density of the excited emitter on the band `(-2J, 2J)`: the
/// branch-cut discontinuity of the propagator
/// `G(E) = 1 / (E (1 - l^2/2) + (l^2/2) sqrt(E^2 - 4J^2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDensity<T> {
    pub lambda: T,
    pub j: T,
}

impl<T: Real> SpectralDensity<T> {
    pub fn new(lambda: T, j: T) -> Result<Self> {
        if !(j > T::zero() && j.is_finite()) {
            return Err(invalid("J", "the band needs a positive hopping rate"));
        }
        if !(lambda >= T::zero() && lambda.is_finite()) {
            return Err(invalid("lambda", "must be finite and non-negative"));
        }
        Ok(Self { lambda, j })
    }

    pub fn support(&self) -> (T, T) {
        let edge = T::lit(2.0) * self.j;
        (-edge, edge)
    }

    pub fn evaluate(&self, energy: T) -> Result<T> {
        let edge = T::lit(2.0) * self.j;
        if !(energy.abs() < edge) {
            return Err(Error::OutOfSupport { energy: energy.to_f64_lossy(), edge: edge.to_f64_lossy() });
        }
        Ok(self.density_unchecked(energy))
    }

    fn denominator(&self, energy: T) -> T {
        let half_l2 = self.lambda * self.lambda * T::lit(0.5);
        let a = energy * (T::one() - half_l2);
        let four_j2 = T::lit(4.0) * self.j * self.j;
        a * a + half_l2 * half_l2 * (four_j2 - energy * energy)
    }

    fn density_unchecked(&self, energy: T) -> T {
        let half_l2 = self.lambda * self.lambda * T::lit(0.5);
        let four_j2 = T::lit(4.0) * self.j * self.j;
        let root = (four_j2 - energy * energy).max(T::zero()).sqrt();
        half_l2 * root / (T::PI() * self.denominator(energy))
    }

    /// Density divided by its edge factor `sqrt(1 - x^2)`, in the scaled
    /// variable `x = E / 2J` and including the Jacobian `dE = 2J dx`.
    fn reduced(&self, x: T) -> T {
        let energy = T::lit(2.0) * self.j * x;
        T::lit(2.0) * self.lambda * self.lambda * self.j * self.j / (T::PI() * self.denominator(energy))
    }

    /// `int rho(E) dE` by an `nodes`-point Gauss-Chebyshev rule.
    pub fn normalization(&self, nodes: usize) -> T {
        GaussChebyshev2::new(nodes).integrate(|x| self.reduced(x))
    }

    /// Writes `E,rho` on `points` interior energies of the band.
    pub fn write_csv<W: Write>(&self, points: usize, mut out: W) -> io::Result<()> {
        writeln!(out, "E,rho")?;
        let (lo, hi) = self.support();
        let count = T::from_usize(points + 1).unwrap();
        for k in 1..=points {
            let e = lo + (hi - lo) * T::from_usize(k).unwrap() / count;
            writeln!(out, "{},{}", fmt17(e), fmt17(self.density_unchecked(e)))?;
        }
        out.flush()
    }
}

/// Free-function form of [`SpectralDensity::evaluate`].
pub fn spectral_density<T: Real>(energy: T, lambda: T, j: T) -> Result<T> {
    SpectralDensity::new(lambda, j)?.evaluate(energy)
}

/// Node-doubling convergence threshold on the survival probability.
const SPECTRAL_TOL: f64 = 1e-10;
const MAX_DOUBLINGS: u32 = 6;

/// Exact survival probability of the semi-infinite lattice (no truncation)
/// from `c_a(t) = int rho(E) exp(-iEt) dE`, for `gamma = 0`, resonance and
/// `lambda < 1`.
pub fn survival_spectral<T: Real>(p: &ModelParams<T>, grid: &TimeGrid<T>) -> Result<DecayCurve<T>> {
    survival_spectral_amplitudes(p, grid).map(|amps| {
        let ps = amps.iter().map(|a| a.norm_sqr()).collect();
        DecayCurve::new(grid.times().to_vec(), ps).expect("grid is valid")
    })
}

/// Emitter amplitudes `c_a(t)` behind [`survival_spectral`].
pub fn survival_spectral_amplitudes<T: Real>(p: &ModelParams<T>, grid: &TimeGrid<T>) -> Result<Vec<Complex<T>>> {
    p.validate()?;
    if p.gamma != T::zero() {
        return Err(invalid("gamma", "the spectral solution holds only without dephasing"));
    }
    if p.delta != T::zero() {
        return Err(invalid("delta", "the spectral solution is implemented at resonance only"));
    }
    if p.j == T::zero() {
        return Err(invalid("J", "the spectral solution needs a band (J > 0)"));
    }
    if p.g0 == T::zero() {
        return Ok(vec![Complex::new(T::one(), T::zero()); grid.len()]);
    }
    let lambda = p.g0 / p.j;
    if !(lambda < T::one()) {
        return Err(invalid("g0", "weak coupling (g0 < J) is required"));
    }
    let density = SpectralDensity::new(lambda, p.j)?;

    let mut nodes = spectral_nodes(p.j, lambda, grid.t_max());
    let mut current = spectral_amplitudes(&density, grid, nodes);
    for _ in 0..MAX_DOUBLINGS {
        nodes *= 2;
        let refined = spectral_amplitudes(&density, grid, nodes);
        let change = current
            .iter()
            .zip(&refined)
            .map(|(a, b)| (a.norm_sqr() - b.norm_sqr()).abs())
            .fold(T::zero(), T::max);
        current = refined;
        if change <= T::lit(SPECTRAL_TOL) {
            return Ok(current);
        }
    }
    Err(Error::QuadratureNotConverged(format!(
        "survival probability still changing at {nodes} Gauss-Chebyshev nodes"
    )))
}

/// Starting node count: resolves the fastest phase `2J t_max` and the
/// Lorentzian width `~lambda^2` of the density near the band center.
pub fn spectral_nodes<T: Real>(j: T, lambda: T, t_max: T) -> usize {
    let phase = (T::lit(2.0) * j * t_max).ceil().to_usize().unwrap_or(0);
    let width = (T::lit(30.0) / (lambda * lambda)).ceil().to_usize().unwrap_or(usize::MAX);
    (40 + 8 * phase).max(width.min(1 << 20))
}

fn spectral_amplitudes<T: Real>(density: &SpectralDensity<T>, grid: &TimeGrid<T>, nodes: usize) -> Vec<Complex<T>> {
    let rule = GaussChebyshev2::<T>::new(nodes);
    let two_j = T::lit(2.0) * density.j;
    let weighted: Vec<(T, T)> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| (two_j * x, w * density.reduced(x)))
        .collect();
    grid.times()
        .par_iter()
        .map(|&t| {
            weighted.iter().fold(Complex::zero(), |acc, &(e, w)| {
                let (s, c) = (e * t).sin_cos();
                acc + Complex::new(w * c, -w * s)
            })
        })
        .collect()
}

/// Zeno time `1/J` and band-edge onset time `ln(2 pi / lambda^10) / Gamma`.
pub fn zeno_edge_times<T: Real>(p: &ModelParams<T>) -> Result<(T, T)> {
    let rates = p.derive_rates();
    let zeno = rates.zeno_time.ok_or(Error::Undefined("the Zeno time (J = 0)"))?;
    let lambda = rates.lambda.unwrap_or(T::zero());
    if !(lambda < T::one()) {
        return Err(invalid("g0", "the time-scale estimates assume lambda < 1"));
    }
    let edge = rates.edge_time.ok_or(Error::Undefined("the edge time (lambda = 0)"))?;
    Ok((zeno, edge))
}
