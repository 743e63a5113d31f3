//! Zone geometry in the (t, |ξ|) half-plane.
//!
//! Low frequencies are handled while the damping integral still dominates
//! (the *dissipative* zone, t ≤ t_D(|ξ|)), high frequencies while the wave
//! oscillation dominates (the *hyperbolic* zone, t ≤ t_H(|ξ|)); what remains
//! is the intermediate zone, split at |ξ| = N.  The boundaries are
//!
//!   t_D(r) = μ⁻¹(μ₀ r / N) = N/r − 1,   t_H(r) = Θ⁻¹(ζ(r/N)),
//!
//! where ζ(r) = r/ρ(r) for the chosen weight ρ and Θ is the stabilization
//! rate.  Θ's scale is normalized at construction so that ζ⁻¹(Θ(0)) = 1,
//! which pins both boundaries to touch the frequency r = N at t = 0.

use serde::Serialize;

use crate::coeffs::PrincipalPart;
use crate::hypotheses::RateFunctions;
use crate::{Error, Result};

/// Radial weight ρ(r) measuring the extra regularity of the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum WeightFunction {
    /// ϱ ≡ 1 (no weight; bounded-multiplier regime).
    Unit,
    /// ρ(r) = log(e + r) (Sobolev-type regularity).
    Log,
    /// ρ_ν(r) = (1+r)^(1/ν), ν > 1 (Gevrey-type regularity).
    Gevrey { nu: f64 },
}

impl WeightFunction {
    pub fn gevrey(nu: f64) -> Result<Self> {
        if !(nu > 1.0) {
            return Err(Error::Config(format!("Gevrey weight needs nu > 1, got {nu}")));
        }
        Ok(WeightFunction::Gevrey { nu })
    }

    pub fn rho(&self, r: f64) -> f64 {
        match self {
            WeightFunction::Unit => 1.0,
            WeightFunction::Log => (std::f64::consts::E + r).ln(),
            WeightFunction::Gevrey { nu } => (1.0 + r).powf(1.0 / nu),
        }
    }

    /// ζ(r) = r / ρ(r); strictly increasing for all three variants.
    pub fn zeta(&self, r: f64) -> f64 {
        r / self.rho(r)
    }

    /// ζ⁻¹ by monotone bisection (identity for the unit weight), relative
    /// tolerance 1e−12.
    pub fn zeta_inverse(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::Domain(format!("zeta_inverse needs y > 0, got {y}")));
        }
        if matches!(self, WeightFunction::Unit) {
            return Ok(y);
        }
        let mut hi = 1.0f64;
        while self.zeta(hi) < y {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::Domain(format!("zeta_inverse: y = {y} out of range")));
            }
        }
        let mut lo = 0.0f64;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.zeta(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi.abs() {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Which regime a point (t, |ξ|) falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Zone {
    /// |ξ| ≤ N and t ≤ t_D(|ξ|).
    Dissipative,
    /// |ξ| ≥ N and t ≤ t_H(|ξ|).
    Hyperbolic,
    /// Past t_D at low frequency.
    IntermediateLow,
    /// Past t_H at high frequency.
    IntermediateHigh,
}

/// The zone partition for a frequency threshold N, principal damping μ,
/// stabilization rate Θ (rescaled here), and weight ρ.
#[derive(Debug, Clone, PartialEq)]
pub struct ZonePartition {
    n_param: f64,
    principal: PrincipalPart,
    theta: RateFunctions,
    weight: WeightFunction,
}

impl ZonePartition {
    /// Builds the partition, replacing Θ's scale with ζ(1) so that
    /// ζ⁻¹(Θ(0)) = 1 (both boundary curves then meet r = N at t = 0).
    pub fn new(
        n_param: f64,
        principal: PrincipalPart,
        theta: RateFunctions,
        weight: WeightFunction,
    ) -> Result<Self> {
        if !(n_param >= 1.0) || !n_param.is_finite() {
            return Err(Error::Config(format!("zone threshold N must be >= 1, got {n_param}")));
        }
        let theta = theta.rescaled(weight.zeta(1.0))?;
        Ok(ZonePartition { n_param, principal, theta, weight })
    }

    pub fn n_param(&self) -> f64 {
        self.n_param
    }

    pub fn principal(&self) -> &PrincipalPart {
        &self.principal
    }

    pub fn theta(&self) -> &RateFunctions {
        &self.theta
    }

    pub fn weight(&self) -> &WeightFunction {
        &self.weight
    }

    /// t_D(r) = N/r − 1 for 0 < r ≤ N (`None` when the zone is empty, i.e.
    /// r > N); r = 0 stays dissipative forever (+∞).
    pub fn t_dissipative(&self, r: f64) -> Option<f64> {
        assert!(r >= 0.0, "frequency must be nonnegative");
        if r > self.n_param {
            return None;
        }
        if r == 0.0 {
            return Some(f64::INFINITY);
        }
        Some(self.n_param / r - 1.0)
    }

    /// t_H(r) = Θ⁻¹(ζ(r/N)) for r ≥ N (`None` when the zone is empty).
    pub fn t_hyperbolic(&self, r: f64) -> Option<f64> {
        assert!(r >= 0.0, "frequency must be nonnegative");
        if r < self.n_param {
            return None;
        }
        let y = self.weight.zeta(r / self.n_param);
        Some(self.theta.theta_inverse(y).max(0.0))
    }

    /// Classify (t, |ξ|); ties resolve to Dissipative, then Hyperbolic, then
    /// IntermediateLow.
    pub fn classify(&self, t: f64, xi_norm: f64) -> Result<Zone> {
        if t < 0.0 || xi_norm < 0.0 || !t.is_finite() || !xi_norm.is_finite() {
            return Err(Error::Domain(format!(
                "classify needs finite t >= 0 and |ξ| >= 0, got ({t}, {xi_norm})"
            )));
        }
        if let Some(td) = self.t_dissipative(xi_norm) {
            if t <= td {
                return Ok(Zone::Dissipative);
            }
        }
        if let Some(th) = self.t_hyperbolic(xi_norm) {
            if t <= th {
                return Ok(Zone::Hyperbolic);
            }
        }
        if xi_norm <= self.n_param {
            Ok(Zone::IntermediateLow)
        } else {
            Ok(Zone::IntermediateHigh)
        }
    }

    /// Frequency boundaries (N μ(t)/μ₀, N, N ζ⁻¹(Θ(t))) splitting the
    /// spectrum at time t into the four radial regions used for energy
    /// bookkeeping.  The first equals N/(1+t) for the canonical μ.
    pub fn spectral_boundaries(&self, t: f64) -> Result<(f64, f64, f64)> {
        let low = self.n_param / (1.0 + t);
        // ζ⁻¹(Θ(t)) ≥ 1 for t ≥ 0 by the normalization; clamp the bisection.
        let high = self.n_param * self.weight.zeta_inverse(self.theta.theta(t))?.max(1.0);
        Ok((low, self.n_param, high))
    }
}
