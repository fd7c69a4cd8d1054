//! Single-cavity limit (`J = 0`): a dephased Jaynes-Cummings pair in the
//! single-excitation sector. Four density-matrix elements obey a linear
//! relaxation system whose spectrum has an exceptional point at
//! `gamma / g0 = 8`; at strong dephasing the coherences can be eliminated and
//! the populations relax at the rate `R = 4 g0^2 / gamma`.

use nalgebra::{Matrix4, Matrix4x2, Schur, Vector4};
use num_complex::{Complex, Complex64};

use crate::curve::{DecayCurve, TimeGrid};
use crate::error::{invalid, Error, Result};
use crate::integrate::{integrate_sampled, Ode, StepOptions, StepPlan};
use crate::model::ModelParams;
use crate::Real;

/// Populations of `|e,0>` and `|g,1>` and the coherence
/// `rho_0e = <g,1| rho |e,0>`; `rho_e0` is its conjugate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcState<T> {
    pub rho_ee: T,
    pub rho_00: T,
    pub rho_0e: Complex<T>,
}

impl<T: Real> JcState<T> {
    pub fn excited() -> Self {
        Self { rho_ee: T::one(), rho_00: T::zero(), rho_0e: Complex::new(T::zero(), T::zero()) }
    }

    pub fn rho_e0(&self) -> Complex<T> {
        self.rho_0e.conj()
    }

    pub fn trace(&self) -> T {
        self.rho_ee + self.rho_00
    }

    /// Flat order `[rho_ee, rho_00, rho_0e, rho_e0]`, the basis of
    /// [`relaxation_matrix`].
    fn to_flat(self) -> [Complex<T>; 4] {
        let z = T::zero();
        [Complex::new(self.rho_ee, z), Complex::new(self.rho_00, z), self.rho_0e, self.rho_e0()]
    }

    fn from_flat(y: &[Complex<T>]) -> Self {
        Self { rho_ee: y[0].re, rho_00: y[1].re, rho_0e: y[2] }
    }
}

struct JcSystem<T> {
    g0: T,
    gamma: T,
    delta: T,
}

impl<T: Real> Ode<T, Complex<T>> for JcSystem<T> {
    fn dim(&self) -> usize {
        4
    }

    fn rhs(&self, y: &[Complex<T>], dy: &mut [Complex<T>]) {
        let ig = Complex::new(T::zero(), self.g0);
        let half = self.gamma * T::lit(0.5);
        dy[0] = ig * (y[3] - y[2]);
        dy[1] = ig * (y[2] - y[3]);
        dy[2] = ig * (y[1] - y[0]) + y[2] * Complex::new(-half, self.delta);
        dy[3] = ig * (y[0] - y[1]) + y[3] * Complex::new(-half, -self.delta);
    }
}

fn require_single_cavity<T: Real>(p: &ModelParams<T>) -> Result<()> {
    p.validate()?;
    if p.j != T::zero() {
        return Err(invalid("J", "the single-cavity model requires J = 0"));
    }
    Ok(())
}

/// Survival probability `rho_ee(t)` from the excited state, integrated with
/// the same fixed-step scheme as the lattice solvers.
pub fn evolve_jc<T: Real>(p: &ModelParams<T>, grid: &TimeGrid<T>, opts: &StepOptions<T>) -> Result<DecayCurve<T>> {
    let states = evolve_jc_states(p, grid, opts)?;
    DecayCurve::new(grid.times().to_vec(), states.iter().map(|s| s.rho_ee).collect())
}

/// Full state at every grid time.
pub fn evolve_jc_states<T: Real>(p: &ModelParams<T>, grid: &TimeGrid<T>, opts: &StepOptions<T>) -> Result<Vec<JcState<T>>> {
    require_single_cavity(p)?;
    let plan = StepPlan::new(grid, opts.resolve_dt(p)?);
    let sys = JcSystem { g0: p.g0, gamma: p.gamma, delta: p.delta };
    let mut y = JcState::excited().to_flat();
    let mut out = Vec::with_capacity(grid.len());
    integrate_sampled(&sys, &mut y, &plan, |_, y| {
        out.push(JcState::from_flat(y));
        Ok(())
    })?;
    Ok(out)
}

/// Eigenvalues of the resonant relaxation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcSpectrum<T> {
    /// `[0, -gamma/2, -gamma/4 + s, -gamma/4 - s]`, `s = sqrt(gamma^2/16 - 4 g0^2)`.
    pub eigenvalues: [Complex<T>; 4],
    /// `gamma / g0 > 8`: every eigenvalue is real and distinct.
    pub is_overdamped: bool,
}

/// Discriminant `(gamma/g0)^2 / 16 - 4` of the oscillating pair, in units of
/// `g0^2`. It changes sign at the exceptional point.
pub fn discriminant<T: Real>(ratio: T) -> T {
    ratio * ratio / T::lit(16.0) - T::lit(4.0)
}

/// Closed-form spectrum at `gamma = ratio * g0`, `delta = 0`.
pub fn jc_spectrum<T: Real>(ratio: T, g0: T) -> Result<JcSpectrum<T>> {
    if !(g0 > T::zero() && g0.is_finite()) {
        return Err(invalid("g0", "must be positive"));
    }
    if !(ratio >= T::zero() && ratio.is_finite()) {
        return Err(invalid("gamma/g0", "must be non-negative"));
    }
    let gamma = ratio * g0;
    let disc = discriminant(ratio) * g0 * g0;
    let z = T::zero();
    let s = if disc >= z { Complex::new(disc.sqrt(), z) } else { Complex::new(z, (-disc).sqrt()) };
    let centre = Complex::new(-gamma / T::lit(4.0), z);
    Ok(JcSpectrum {
        eigenvalues: [Complex::new(z, z), Complex::new(-gamma / T::lit(2.0), z), centre + s, centre - s],
        is_overdamped: ratio > T::lit(8.0),
    })
}

/// Locates the root of [`discriminant`] in `[lo, hi]` by bisection, to
/// an interval width of `tol`.
pub fn bisect_exceptional_point<T: Real>(lo: T, hi: T, tol: T) -> Result<T> {
    let (mut a, mut b) = (lo, hi);
    let fa = discriminant(a);
    if fa.signum() == discriminant(b).signum() {
        return Err(invalid("bracket", "the discriminant does not change sign"));
    }
    let mut iterations = 0;
    while b - a > tol {
        let mid = (a + b) * T::lit(0.5);
        if mid <= a || mid >= b || iterations > 200 {
            break;
        }
        if discriminant(mid).signum() == fa.signum() {
            a = mid;
        } else {
            b = mid;
        }
        iterations += 1;
    }
    Ok((a + b) * T::lit(0.5))
}

/// Population relaxation after eliminating the coherence:
/// `P(t) = (1 + exp(-2 R t)) / 2`, `R = 4 g0^2 / gamma`.
pub fn jc_rate_approx<T: Real>(p: &ModelParams<T>, grid: &TimeGrid<T>) -> Result<DecayCurve<T>> {
    p.validate()?;
    let rate = p.derive_rates().hop_atom.ok_or(Error::Undefined("the rate approximation (gamma = 0)"))?;
    let two = T::lit(2.0);
    Ok(DecayCurve::from_fn(grid, |t| (T::one() + (-two * rate * t).exp()) / two))
}

/// Relaxation matrix in the real basis `[rho_ee, rho_00, Re rho_0e,
/// Im rho_0e]`, similar to the generator acting on
/// `[rho_ee, rho_00, rho_0e, rho_e0]`.
pub fn relaxation_matrix(gamma: f64, g0: f64, delta: f64) -> Matrix4<f64> {
    let h = -gamma / 2.0;
    Matrix4::new(
        0.0, 0.0, 0.0, 2.0 * g0,
        0.0, 0.0, 0.0, -2.0 * g0,
        0.0, 0.0, h, -delta,
        -g0, g0, delta, h,
    )
}

const SCHUR_MAX_ITER: usize = 10_000;

/// Eigenvalues from the real Schur form, sorted by real then imaginary part.
/// The QR iteration can stall in a shift cycle; it is then rerun on an
/// orthogonally similar matrix.
pub fn numerical_eigenvalues(m: &Matrix4<f64>) -> Result<[Complex64; 4]> {
    let schur = Schur::try_new(*m, f64::EPSILON, SCHUR_MAX_ITER).or_else(|| {
        let v = Vector4::new(1.0, 2.0, 3.0, 4.0).normalize();
        let h = Matrix4::identity() - v * v.transpose() * 2.0;
        Schur::try_new(h * m * h, f64::EPSILON, SCHUR_MAX_ITER)
    });
    let ev = schur.ok_or(Error::Undefined("the Schur iteration did not converge"))?.complex_eigenvalues();
    let mut out = [ev[0], ev[1], ev[2], ev[3]];
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(out)
}

fn complexify(m: &Matrix4<f64>) -> Matrix4<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Unit vector spanning the numerical null space of `m - lambda I`: the
/// right singular vector of its smallest singular value.
fn null_vector(m: &Matrix4<Complex64>, lambda: Complex64) -> Vector4<Complex64> {
    let shifted = m - Matrix4::identity() * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let k = svd.singular_values.imin();
    v_t.row(k).adjoint().normalize()
}

/// Numerical evidence that two eigenvalues and their eigenvectors coalesce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coalescence {
    /// Indices into the sorted numerical eigenvalues of the closest pair.
    pub pair: (usize, usize),
    pub eigen_gap: f64,
    /// Smallest singular value of the unit eigenvectors `[v1 v2]`; zero when
    /// they are parallel.
    pub vector_sigma_min: f64,
    /// Dimension of the numerical null space of `M - lambda I` at the mean of
    /// the pair, counted with singular values below `rank_tol`.
    pub null_dim: usize,
}

pub fn eigenvector_coalescence(m: &Matrix4<f64>, rank_tol: f64) -> Result<Coalescence> {
    let ev = numerical_eigenvalues(m)?;
    let m = &complexify(m);
    let mut pair = (0, 1);
    let mut gap = f64::INFINITY;
    for i in 0..4 {
        for j in i + 1..4 {
            let d = (ev[i] - ev[j]).norm();
            if d < gap {
                gap = d;
                pair = (i, j);
            }
        }
    }
    let v1 = null_vector(m, ev[pair.0]);
    let v2 = null_vector(m, ev[pair.1]);
    let basis = Matrix4x2::from_columns(&[v1, v2]);
    let vector_sigma_min = basis.singular_values().min();
    let mean = (ev[pair.0] + ev[pair.1]) / 2.0;
    let sv = (m - Matrix4::identity() * mean).singular_values();
    let null_dim = sv.iter().filter(|&&s| s < rank_tol).count();
    Ok(Coalescence { pair, eigen_gap: gap, vector_sigma_min, null_dim })
}
