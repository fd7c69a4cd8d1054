//! Physical parameters shared by every solver, the rates derived from them
//! and the lattice truncation policy.
//!
//! All solvers work in the frame rotating at the mean cavity frequency, so the
//! cavity frequency drops out and only the detuning `delta = omega0 - omega_c`
//! enters. Times and rates are in the same (arbitrary) unit; `hbar = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::Real;

/// Default number of extra cavities kept beyond the ballistic light cone.
pub const DEFAULT_MARGIN: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    /// Photon hopping rate between neighboring cavities.
    pub j: T,
    /// Emitter-cavity coupling at the edge cavity.
    pub g0: T,
    /// Pure dephasing rate of every cavity mode.
    pub gamma: T,
    /// Detuning of the emitter from the mean cavity frequency.
    pub delta: T,
    /// Number of cavities kept, sites `0..n_sites`.
    pub n_sites: usize,
}

impl<T: Real> ModelParams<T> {
    /// Resonant parameters (`delta = 0`), validated.
    pub fn new(j: T, g0: T, gamma: T, n_sites: usize) -> Result<Self> {
        let p = Self { j, g0, gamma, delta: T::zero(), n_sites };
        p.validate()?;
        Ok(p)
    }

    pub fn with_delta(mut self, delta: T) -> Result<Self> {
        if !delta.is_finite() {
            return Err(invalid("delta", "must be finite"));
        }
        self.delta = delta;
        Ok(self)
    }

    /// Sets the detuning from absolute emitter and cavity frequencies.
    pub fn with_frequencies(self, omega0: T, omega_c: T) -> Result<Self> {
        self.with_delta(omega0 - omega_c)
    }

    pub fn with_sites(mut self, n_sites: usize) -> Result<Self> {
        if n_sites == 0 {
            return Err(invalid("N", "at least one cavity is required"));
        }
        self.n_sites = n_sites;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("J", self.j), ("g0", self.g0), ("gamma", self.gamma)] {
            if !v.is_finite() || v < T::zero() {
                return Err(invalid(name, format!("must be finite and non-negative, got {v}")));
            }
        }
        if !self.delta.is_finite() {
            return Err(invalid("delta", "must be finite"));
        }
        if self.n_sites == 0 {
            return Err(invalid("N", "at least one cavity is required"));
        }
        Ok(())
    }

    /// Largest rate in the problem, floored at one; sets the default step.
    pub fn fastest_rate(&self) -> T {
        [self.j, self.gamma, self.g0, self.delta.abs()]
            .into_iter()
            .fold(T::one(), T::max)
    }

    pub fn derive_rates(&self) -> DerivedRates<T> {
        derive_rates(self)
    }
}

/// Rates and time scales derived from [`ModelParams`]. A field that cannot be
/// defined for the given parameters is `None`, never zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedRates<T> {
    /// Golden-rule decay rate `2 g0^2 / J`.
    pub gamma_golden: Option<T>,
    /// Dimensionless coupling `g0 / J`.
    pub lambda: Option<T>,
    /// Vacuum Rabi frequency `2 g0`.
    pub rabi_omega: T,
    /// Emitter-to-cavity hop rate of the incoherent walk, `4 g0^2 / gamma`.
    pub hop_atom: Option<T>,
    /// Cavity-to-cavity hop rate of the incoherent walk, `2 J^2 / gamma`.
    pub hop_photon: Option<T>,
    /// `hop_atom / hop_photon`, equal to `2 lambda^2`.
    pub hop_ratio: Option<T>,
    /// Zeno time `1 / J`.
    pub zeno_time: Option<T>,
    /// Onset of the band-edge tail, `ln(2 pi / lambda^10) / gamma_golden`.
    pub edge_time: Option<T>,
}

pub fn derive_rates<T: Real>(p: &ModelParams<T>) -> DerivedRates<T> {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let g2 = p.g0 * p.g0;
    let has_hopping = p.j > T::zero();
    let has_dephasing = p.gamma > T::zero();

    let gamma_golden = has_hopping.then(|| two * g2 / p.j);
    let lambda = has_hopping.then(|| p.g0 / p.j);
    let hop_atom = has_dephasing.then(|| four * g2 / p.gamma);
    let hop_photon = has_dephasing.then(|| two * p.j * p.j / p.gamma);
    let hop_ratio = match (hop_atom, hop_photon) {
        (Some(r), Some(q)) if q > T::zero() => Some(r / q),
        _ => None,
    };
    let edge_time = match (gamma_golden, lambda) {
        (Some(g), Some(l)) if l > T::zero() => Some((T::TAU() / l.powi(10)).ln() / g),
        _ => None,
    };

    DerivedRates {
        gamma_golden,
        lambda,
        rabi_omega: two * p.g0,
        hop_atom,
        hop_photon,
        hop_ratio,
        zeno_time: has_hopping.then(|| p.j.recip()),
        edge_time,
    }
}

/// Lattice size that keeps the ballistic light cone (group velocity at most
/// `2 J`) plus [`DEFAULT_MARGIN`] cavities away from the hard wall.
pub fn recommended_truncation<T: Real>(p: &ModelParams<T>, t_max: T) -> usize {
    recommended_truncation_with_margin(p, t_max, DEFAULT_MARGIN)
}

/// As [`recommended_truncation`] with an explicit margin. Any positive
/// evolution time occupies at least one cavity beyond the margin, so the
/// result is monotone in both `J` and `t_max`.
pub fn recommended_truncation_with_margin<T: Real>(
    p: &ModelParams<T>,
    t_max: T,
    margin: usize,
) -> usize {
    let t_max = t_max.max(T::zero());
    let reach = (T::lit(2.0) * p.j * t_max).ceil().to_usize().unwrap_or(usize::MAX);
    let reach = if t_max > T::zero() { reach.max(1) } else { reach };
    reach.saturating_add(margin).max(1)
}

/// Lattice size for the diffusive walk: three diffusion lengths
/// `sqrt(2 Q t_max)` plus the margin. Falls back to the light-cone rule when
/// the walk rates are undefined.
pub fn diffusive_truncation<T: Real>(p: &ModelParams<T>, t_max: T) -> usize {
    match p.derive_rates().hop_photon {
        Some(q) => {
            let spread = T::lit(3.0) * (T::lit(2.0) * q * t_max.max(T::zero())).sqrt();
            spread.ceil().to_usize().unwrap_or(usize::MAX).saturating_add(DEFAULT_MARGIN)
        }
        None => recommended_truncation(p, t_max),
    }
}
