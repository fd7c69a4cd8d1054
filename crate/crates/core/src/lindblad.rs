//! Single-excitation master equation with pure dephasing of the cavity modes.
//!
//! The density matrix restricted to the single-excitation sector has three
//! blocks: photon-photon coherences `rho[n][m]`, photon-emitter coherences
//! `rho[n][e]` and the emitter population `rho[e][e]`, which is the survival
//! probability. The emitter-photon block `rho[e][n]` is the conjugate of
//! `rho[n][e]` and is never stored.

use num_complex::Complex;
use num_traits::Zero;

use crate::curve::{DecayCurve, TimeGrid};
use crate::error::{Error, Result};
use crate::integrate::{integrate_sampled, with_step_halving, Ode, StepOptions, StepPlan};
use crate::model::ModelParams;
use crate::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityState<T> {
    n: usize,
    /// `rho[n][m]`, row-major `n * N + m`.
    pub rho_phot: Vec<Complex<T>>,
    /// `rho[n][e]`.
    pub rho_cross: Vec<Complex<T>>,
    /// `rho[e][e]`.
    pub rho_atom: T,
}

impl<T: Real> DensityState<T> {
    /// Excited emitter, empty waveguide.
    pub fn initial(n_sites: usize) -> Result<Self> {
        if n_sites == 0 {
            return Err(crate::error::invalid("N", "at least one cavity is required"));
        }
        Ok(Self {
            n: n_sites,
            rho_phot: vec![Complex::zero(); n_sites * n_sites],
            rho_cross: vec![Complex::zero(); n_sites],
            rho_atom: T::one(),
        })
    }

    pub fn from_parts(rho_phot: Vec<Complex<T>>, rho_cross: Vec<Complex<T>>, rho_atom: T) -> Result<Self> {
        let n = rho_cross.len();
        if rho_phot.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: rho_phot.len() });
        }
        Ok(Self { n, rho_phot, rho_cross, rho_atom })
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn phot(&self, n: usize, m: usize) -> Complex<T> {
        self.rho_phot[n * self.n + m]
    }

    pub fn population(&self, n: usize) -> T {
        self.phot(n, n).re
    }

    /// `rho[e][e] + sum_n rho[n][n]`, conserved by the dynamics.
    pub fn trace(&self) -> T {
        self.rho_atom + (0..self.n).map(|k| self.population(k)).sum::<T>()
    }

    /// Largest violation of `rho[n][m] = conj(rho[m][n])`, including the
    /// imaginary parts of the diagonal.
    pub fn hermiticity_error(&self) -> T {
        let mut worst = T::zero();
        for a in 0..self.n {
            for b in a..self.n {
                worst = worst.max((self.phot(a, b) - self.phot(b, a).conj()).norm());
            }
        }
        worst
    }

    /// Smallest of the emitter and cavity populations.
    pub fn min_population(&self) -> T {
        (0..self.n).map(|k| self.population(k)).fold(self.rho_atom, T::min)
    }

    fn to_flat(&self) -> Vec<Complex<T>> {
        let mut y = Vec::with_capacity(self.n * self.n + self.n + 1);
        y.extend_from_slice(&self.rho_phot);
        y.extend_from_slice(&self.rho_cross);
        y.push(Complex::new(self.rho_atom, T::zero()));
        y
    }

    fn from_flat(n: usize, y: &[Complex<T>]) -> Self {
        Self {
            n,
            rho_phot: y[..n * n].to_vec(),
            rho_cross: y[n * n..n * n + n].to_vec(),
            rho_atom: y[n * n + n].re,
        }
    }
}

/// Time derivative of `s`, a literal transcription of the master equation
/// on the full photon block. Sites outside `0..N` are empty (hard wall).
pub fn master_rhs<T: Real>(s: &DensityState<T>, p: &ModelParams<T>) -> Result<DensityState<T>> {
    if s.n != p.n_sites {
        return Err(Error::DimensionMismatch { expected: p.n_sites, found: s.n });
    }
    let n = s.n;
    let i = Complex::<T>::i();
    let zero = Complex::<T>::zero();
    let at = |a: isize, b: isize| -> Complex<T> {
        if a < 0 || b < 0 || a as usize >= n || b as usize >= n {
            zero
        } else {
            s.phot(a as usize, b as usize)
        }
    };
    let cross = |a: isize| -> Complex<T> {
        if a < 0 || a as usize >= n {
            zero
        } else {
            s.rho_cross[a as usize]
        }
    };
    let (j, g0, gamma) = (p.j, p.g0, p.gamma);

    let mut d_phot = vec![zero; n * n];
    for a in 0..n as isize {
        for b in 0..n as isize {
            let hop = (at(a + 1, b) + at(a - 1, b) - at(a, b - 1) - at(a, b + 1)) * i * j;
            let dephase = if a == b { zero } else { at(a, b) * gamma };
            let mut couple = zero;
            if b == 0 {
                couple += cross(a);
            }
            if a == 0 {
                // rho[e][b] = conj(rho[b][e])
                couple -= cross(b).conj();
            }
            d_phot[a as usize * n + b as usize] = hop - dephase + couple * i * g0;
        }
    }

    let mut d_cross = vec![zero; n];
    let damp = Complex::new(-gamma * T::lit(0.5), p.delta);
    for a in 0..n as isize {
        let mut d = damp * cross(a) + (cross(a - 1) + cross(a + 1)) * i * j + at(a, 0) * i * g0;
        if a == 0 {
            d -= i * g0 * s.rho_atom;
        }
        d_cross[a as usize] = d;
    }

    let r0e = s.rho_cross[0];
    let d_atom = (i * g0 * (r0e.conj() - r0e)).re;
    Ok(DensityState { n, rho_phot: d_phot, rho_cross: d_cross, rho_atom: d_atom })
}

/// Flat-vector form of the master equation used by the integrator. Only the
/// upper triangle of the photon block is computed; the lower one is its
/// conjugate, so Hermiticity is carried exactly from step to step.
pub(crate) struct MasterEquation<T> {
    n: usize,
    j: T,
    g0: T,
    gamma: T,
    delta: T,
}

impl<T: Real> MasterEquation<T> {
    pub(crate) fn new(p: &ModelParams<T>) -> Self {
        Self { n: p.n_sites, j: p.j, g0: p.g0, gamma: p.gamma, delta: p.delta }
    }
}

#[inline(always)]
fn times_i<T: Real>(z: Complex<T>) -> Complex<T> {
    Complex::new(-z.im, z.re)
}

impl<T: Real> Ode<T, Complex<T>> for MasterEquation<T> {
    fn dim(&self) -> usize {
        self.n * self.n + self.n + 1
    }

    fn rhs(&self, y: &[Complex<T>], dy: &mut [Complex<T>]) {
        let n = self.n;
        let zero = Complex::<T>::zero();
        let (phot, rest) = y.split_at(n * n);
        let (cross, atom) = rest.split_at(n);
        let (d_phot, d_rest) = dy.split_at_mut(n * n);
        let (d_cross, d_atom) = d_rest.split_at_mut(n);
        let (j, g0, gamma) = (self.j, self.g0, self.gamma);
        let row = |a: usize| &phot[a * n..(a + 1) * n];

        for a in 0..n {
            let cur = row(a);
            let up = (a > 0).then(|| row(a - 1));
            let down = (a + 1 < n).then(|| row(a + 1));
            let d_row = &mut d_phot[a * n..(a + 1) * n];
            for b in a..n {
                // i J (rho[a+1][b] + rho[a-1][b] - rho[a][b-1] - rho[a][b+1])
                let mut v = zero;
                if let Some(u) = up {
                    v = v + u[b];
                }
                if let Some(d) = down {
                    v = v + d[b];
                }
                if b > 0 {
                    v = v - cur[b - 1];
                }
                if b + 1 < n {
                    v = v - cur[b + 1];
                }
                d_row[b] = times_i(v) * j - cur[b] * gamma;
            }
            d_row[a] = d_row[a] + cur[a] * gamma;
        }
        // Emitter coupling at the edge cavity: column 0 and row 0.
        d_phot[0] = d_phot[0] + times_i(cross[0] - cross[0].conj()) * g0;
        for b in 1..n {
            d_phot[b] = d_phot[b] - times_i(cross[b].conj()) * g0;
        }
        for a in 1..n {
            for b in 0..a {
                d_phot[a * n + b] = d_phot[b * n + a].conj();
            }
        }

        let damp = Complex::new(-gamma * T::lit(0.5), self.delta);
        for a in 0..n {
            let left = if a > 0 { cross[a - 1] } else { zero };
            let right = if a + 1 < n { cross[a + 1] } else { zero };
            d_cross[a] = damp * cross[a] + times_i(left + right) * j + times_i(phot[a * n]) * g0;
        }
        d_cross[0] = d_cross[0] - times_i(atom[0]) * g0;

        let r0e = cross[0];
        d_atom[0] = Complex::new((times_i(r0e.conj() - r0e) * g0).re, T::zero());
    }
}

/// Worst-case structural diagnostics over all output points of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterDiagnostics<T> {
    pub dt: T,
    pub max_trace_error: T,
    pub max_hermiticity_error: T,
    pub min_population: T,
}

/// Survival probability from the master equation on `grid`.
pub fn evolve_master<T: Real>(p: &ModelParams<T>, grid: &TimeGrid<T>, opts: &StepOptions<T>) -> Result<DecayCurve<T>> {
    evolve_master_with_diagnostics(p, grid, opts).map(|(c, _)| c)
}

pub fn evolve_master_with_diagnostics<T: Real>(
    p: &ModelParams<T>,
    grid: &TimeGrid<T>,
    opts: &StepOptions<T>,
) -> Result<(DecayCurve<T>, MasterDiagnostics<T>)> {
    evolve_master_observed(p, grid, opts, |_, _| {})
}

/// As [`evolve_master_with_diagnostics`], also handing every sampled state to
/// `inspect` together with its grid index.
pub fn evolve_master_observed<T: Real>(
    p: &ModelParams<T>,
    grid: &TimeGrid<T>,
    opts: &StepOptions<T>,
    mut inspect: impl FnMut(usize, &DensityState<T>),
) -> Result<(DecayCurve<T>, MasterDiagnostics<T>)> {
    p.validate()?;
    let dt0 = opts.resolve_dt(p)?;
    let sys = MasterEquation::new(p);
    let n = p.n_sites;
    let tol = opts.tol;

    with_step_halving(opts, dt0, |dt| {
        let plan = StepPlan::new(grid, dt);
        let mut y = DensityState::initial(n)?.to_flat();
        let mut ps = Vec::with_capacity(grid.len());
        let mut diag = MasterDiagnostics {
            dt: plan.dt,
            max_trace_error: T::zero(),
            max_hermiticity_error: T::zero(),
            min_population: T::one(),
        };
        integrate_sampled(&sys, &mut y, &plan, |k, y| {
            let s = DensityState::from_flat(n, y);
            let drift = (s.trace() - T::one()).abs();
            if !(drift <= tol) {
                return Err(Error::TraceDrift { drift: drift.to_f64_lossy(), bound: tol.to_f64_lossy() });
            }
            diag.max_trace_error = diag.max_trace_error.max(drift);
            diag.max_hermiticity_error = diag.max_hermiticity_error.max(s.hermiticity_error());
            diag.min_population = diag.min_population.min(s.min_population());
            ps.push(s.rho_atom);
            inspect(k, &s);
            Ok(())
        })?;
        Ok((DecayCurve::new(grid.times().to_vec(), ps)?, diag))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    /// Random Hermitian state (not necessarily positive) with unit trace.
    fn random_hermitian(n: usize, rng: &mut impl Rng) -> DensityState<f64> {
        let mut phot = vec![c(0.0, 0.0); n * n];
        for a in 0..n {
            phot[a * n + a] = c(rng.random::<f64>(), 0.0);
            for b in a + 1..n {
                let z = c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                phot[a * n + b] = z;
                phot[b * n + a] = z.conj();
            }
        }
        let cross = (0..n).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let mut s = DensityState::from_parts(phot, cross, rng.random::<f64>()).unwrap();
        let tr = s.trace();
        s.rho_phot.iter_mut().for_each(|z| *z /= tr);
        s.rho_cross.iter_mut().for_each(|z| *z /= tr);
        s.rho_atom /= tr;
        s
    }

    #[test]
    fn initial_state() {
        let s = DensityState::<f64>::initial(1).unwrap();
        assert_eq!(s.rho_atom, 1.0);
        assert_eq!(s.rho_phot, vec![c(0.0, 0.0)]);
        assert_eq!(s.rho_cross, vec![c(0.0, 0.0)]);
        let s = DensityState::<f64>::initial(5).unwrap();
        assert_eq!(s.trace(), 1.0);
        assert_eq!(s.hermiticity_error(), 0.0);
        assert!(DensityState::<f64>::initial(0).is_err());
    }

    #[test]
    fn derivative_at_the_initial_state() {
        let p = ModelParams::new(1.0, 0.3, 0.7, 6).unwrap();
        let d = master_rhs(&DensityState::initial(6).unwrap(), &p).unwrap();
        assert_eq!(d.rho_atom, 0.0);
        assert_eq!(d.rho_cross[0], c(0.0, -0.3));
        assert!(d.rho_cross[1..].iter().all(|z| *z == c(0.0, 0.0)));
        assert!(d.rho_phot.iter().all(|z| *z == c(0.0, 0.0)));
    }

    #[test]
    fn dimension_mismatch() {
        let p = ModelParams::new(1.0, 0.3, 0.0, 4).unwrap();
        let err = master_rhs(&DensityState::initial(3).unwrap(), &p).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 4, found: 3 });
    }

    #[test]
    fn trace_derivative_vanishes_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in 0..100 {
            let n = 1 + k % 9;
            let p = ModelParams::new(1.0 + rng.random::<f64>(), rng.random::<f64>(), 3.0 * rng.random::<f64>(), n)
                .unwrap()
                .with_delta(rng.random::<f64>() - 0.5)
                .unwrap();
            let s = random_hermitian(n, &mut rng);
            let d = master_rhs(&s, &p).unwrap();
            assert!(d.trace().abs() < 1e-12, "trace derivative {}", d.trace());
            assert!(d.hermiticity_error() < 1e-14);
        }
    }

    #[test]
    fn fast_rhs_matches_literal_rhs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 3, 7, 12] {
            let p = ModelParams::new(1.3, 0.4, 2.0, n).unwrap().with_delta(0.2).unwrap();
            let s = random_hermitian(n, &mut rng);
            let literal = master_rhs(&s, &p).unwrap();
            let sys = MasterEquation::new(&p);
            let y = s.to_flat();
            let mut dy = vec![c(0.0, 0.0); y.len()];
            sys.rhs(&y, &mut dy);
            let fast = DensityState::from_flat(n, &dy);
            for (a, b) in fast.rho_phot.iter().zip(&literal.rho_phot).chain(fast.rho_cross.iter().zip(&literal.rho_cross)) {
                assert!((a - b).norm() < 1e-14, "n={n}: {a} vs {b}");
            }
            assert!((fast.rho_atom - literal.rho_atom).abs() < 1e-15);
        }
    }

    /// `-i[H, rho] + gamma sum_k (P_k rho P_k - {P_k, rho}/2)` on the full
    /// `(N+1) x (N+1)` matrix, emitter last.
    fn dense_generator(s: &DensityState<f64>, p: &ModelParams<f64>) -> nalgebra::DMatrix<Complex<f64>> {
        use nalgebra::DMatrix;
        let n = s.n_sites();
        let e = n;
        let mut h = DMatrix::<Complex<f64>>::zeros(n + 1, n + 1);
        for k in 0..n.saturating_sub(1) {
            h[(k, k + 1)] = c(-p.j, 0.0);
            h[(k + 1, k)] = c(-p.j, 0.0);
        }
        h[(e, e)] = c(p.delta, 0.0);
        h[(0, e)] = c(p.g0, 0.0);
        h[(e, 0)] = c(p.g0, 0.0);
        let rho = DMatrix::from_fn(n + 1, n + 1, |a, b| match (a == e, b == e) {
            (false, false) => s.phot(a, b),
            (false, true) => s.rho_cross[a],
            (true, false) => s.rho_cross[b].conj(),
            (true, true) => c(s.rho_atom, 0.0),
        });
        let mut d = (&h * &rho - &rho * &h) * c(0.0, -1.0);
        for k in 0..n {
            let mut proj = DMatrix::<Complex<f64>>::zeros(n + 1, n + 1);
            proj[(k, k)] = c(1.0, 0.0);
            let anti = &proj * &rho + &rho * &proj;
            d += (&proj * &rho * &proj - anti * c(0.5, 0.0)) * c(p.gamma, 0.0);
        }
        d
    }

    #[test]
    fn rhs_matches_dense_lindblad_generator() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for n in [1, 2, 5, 9] {
            let p = ModelParams::new(0.8, 0.45, 1.7, n).unwrap().with_delta(-0.3).unwrap();
            let s = random_hermitian(n, &mut rng);
            let fast = master_rhs(&s, &p).unwrap();
            let dense = dense_generator(&s, &p);
            for a in 0..n {
                for b in 0..n {
                    assert!((fast.phot(a, b) - dense[(a, b)]).norm() < 1e-14, "n={n} ({a},{b})");
                }
                assert!((fast.rho_cross[a] - dense[(a, n)]).norm() < 1e-14, "n={n} ({a},e)");
            }
            assert!((c(fast.rho_atom, 0.0) - dense[(n, n)]).norm() < 1e-14);
        }
    }

    #[test]
    fn decoupled_emitter_never_decays() {
        let p = ModelParams::new(1.0, 0.0, 1.0, 8).unwrap();
        let grid = TimeGrid::uniform(5.0, 11).unwrap();
        let curve = evolve_master(&p, &grid, &StepOptions::default()).unwrap();
        assert!(curve.ps().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn structural_invariants_hold() {
        let p = ModelParams::new(1.0, 0.3, 1.0, 40).unwrap();
        let grid = TimeGrid::uniform(10.0, 51).unwrap();
        let (_, d) = evolve_master_with_diagnostics(&p, &grid, &StepOptions::default()).unwrap();
        assert!(d.max_trace_error < 1e-8);
        assert!(d.max_hermiticity_error < 1e-10);
        assert!(d.min_population > -1e-10);
    }

    #[test]
    fn impossible_tolerance_underflows() {
        let p = ModelParams::new(1.0, 0.3, 1.0, 10).unwrap();
        let grid = TimeGrid::uniform(5.0, 6).unwrap();
        let opts = StepOptions { dt: Some(0.05), tol: 1e-17, max_halvings: 2 };
        // Rounding leaves a drift of a few ulps, inside the halving band.
        let err = evolve_master(&p, &grid, &opts).unwrap_err();
        assert!(matches!(err, Error::StepUnderflow { .. }), "{err:?}");
    }

    #[test]
    fn unstable_step_reports_drift() {
        // RK4 is unstable once gamma * dt exceeds ~2.8.
        let p = ModelParams::new(1.0, 0.3, 10.0, 5).unwrap();
        let grid = TimeGrid::uniform(40.0, 5).unwrap();
        let err = evolve_master(&p, &grid, &StepOptions::with_dt(0.5)).unwrap_err();
        assert!(matches!(err, Error::TraceDrift { .. }), "{err:?}");
    }
}
