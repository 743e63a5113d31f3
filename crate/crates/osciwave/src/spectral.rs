//! Initial data in frequency space, weighted spectral norms, and assembly of
//! the total energy by radial quadrature.
//!
//! Data is radial: v̂₀(ξ) = g₀(|ξ|), v̂₁(ξ) = g₁(|ξ|), with profiles drawn
//! from three families.  The weighted norm of a data pair is
//!
//!   ‖(v₀, v₁)‖² = ∫ e^{2κϱ(|ξ|)} ((1 + |ξ|²)|v̂₀|² + |v̂₁|²) dξ,
//!
//! and the total spectral energy is E(t) = ∫ 𝓔(t, ξ) dξ with the pointwise
//! density 𝓔 = |ξ|²|v|² + |∂_t v|².  (This is twice the physical field
//! energy; the constant cancels in every reported ratio.)  Radial integrals
//! carry the surface factor |S^{n−1}| r^{n−1}; the driver integrates one
//! mode per radial quadrature node and assembles E(t) with the same weights
//! used for E(0), so the zone decomposition E(t) = Σ_j I_j(t) is exact by
//! construction.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coeffs::DissipationCoefficient;
use crate::modes::{integrate_mode_hybrid, ModeState};
use crate::quad::{gl8, PanelGrid};
use crate::zones::{WeightFunction, ZonePartition};
use crate::{Error, Result};

/// Relative tail mass beyond the radial cutoff.
const TAIL_FRACTION: f64 = 1e-10;
/// Smallest resolved frequency of the mode grid.
const R_MIN: f64 = 1e-3;
/// Panels per decade for reference radial quadrature.
const NORM_PANELS_PER_DECADE: usize = 32;
/// Hard cap on the radial extent of any quadrature.
const R_CAP: f64 = 1e10;

/// Radial profile family for one data pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DataFamily {
    /// g(r) = (1 + r²)^(−s/2 − (n+1)/4): lies in H^(σ+1) × H^σ for σ < s − ½.
    Sobolev { s: f64 },
    /// g(r) = exp(−κ (1+r)^(1/ν)): compactly-supported-type Gevrey decay.
    GevreyExp { nu: f64, kappa: f64 },
    /// A C¹ bump (1 − (r/r_max)²)² supported on [0, r_max].
    Bandlimited { r_max: f64 },
}

/// Radial initial data (v̂₀, v̂₁) = (a₀ g(r), a₁ g(r)) in dimension n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialData {
    dimension: usize,
    family: DataFamily,
    amplitude0: f64,
    amplitude1: f64,
}

impl InitialData {
    pub fn new(dimension: usize, family: DataFamily) -> Result<Self> {
        Self::with_amplitudes(dimension, family, 1.0, 1.0)
    }

    pub fn with_amplitudes(
        dimension: usize,
        family: DataFamily,
        amplitude0: f64,
        amplitude1: f64,
    ) -> Result<Self> {
        if dimension < 1 {
            return Err(Error::Config(format!("dimension must be >= 1, got {dimension}")));
        }
        if !amplitude0.is_finite() || !amplitude1.is_finite() {
            return Err(Error::Config("data amplitudes must be finite".into()));
        }
        match family {
            DataFamily::Sobolev { s } => {
                // Finite initial energy needs the density r² g² r^(n−1) to be
                // integrable, i.e. s > 1/2 (dimension-independent by the
                // profile normalization).
                if !(s > 0.5) || !s.is_finite() {
                    return Err(Error::Config(format!(
                        "Sobolev data needs s > 1/2 for finite energy, got {s}"
                    )));
                }
            }
            DataFamily::GevreyExp { nu, kappa } => {
                if !(nu >= 1.0) || !nu.is_finite() {
                    return Err(Error::Config(format!("Gevrey order must satisfy ν >= 1, got {nu}")));
                }
                if !(kappa > 0.0) || !kappa.is_finite() {
                    return Err(Error::Config(format!(
                        "Gevrey data needs a positive decay rate, got {kappa}"
                    )));
                }
            }
            DataFamily::Bandlimited { r_max } => {
                if !(r_max > 0.0) || !r_max.is_finite() {
                    return Err(Error::Config(format!(
                        "band limit must be positive, got {r_max}"
                    )));
                }
            }
        }
        Ok(InitialData { dimension, family, amplitude0, amplitude1 })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn family(&self) -> DataFamily {
        self.family
    }

    fn profile(&self, r: f64) -> f64 {
        match self.family {
            DataFamily::Sobolev { s } => {
                (1.0 + r * r).powf(-0.5 * s - 0.25 * (self.dimension as f64 + 1.0))
            }
            DataFamily::GevreyExp { nu, kappa } => (-kappa * (1.0 + r).powf(1.0 / nu)).exp(),
            DataFamily::Bandlimited { r_max } => {
                if r >= r_max {
                    0.0
                } else {
                    let x = r / r_max;
                    let y = 1.0 - x * x;
                    y * y
                }
            }
        }
    }

    /// ln of the common profile; −∞ outside a bandlimited support.  Used to
    /// evaluate weighted densities in log scale, where the weight exponent
    /// and the profile decay cancel before exponentiation.
    fn log_profile(&self, r: f64) -> f64 {
        match self.family {
            DataFamily::Sobolev { s } => {
                (-0.5 * s - 0.25 * (self.dimension as f64 + 1.0)) * (1.0 + r * r).ln()
            }
            DataFamily::GevreyExp { nu, kappa } => -kappa * (1.0 + r).powf(1.0 / nu),
            DataFamily::Bandlimited { r_max } => {
                if r >= r_max {
                    f64::NEG_INFINITY
                } else {
                    let x = r / r_max;
                    2.0 * (1.0 - x * x).ln()
                }
            }
        }
    }

    /// Radial profile of v̂₀.
    pub fn g0(&self, r: f64) -> f64 {
        self.amplitude0 * self.profile(r)
    }

    /// Radial profile of v̂₁.
    pub fn g1(&self, r: f64) -> f64 {
        self.amplitude1 * self.profile(r)
    }

    /// Pointwise energy density at t = 0: 𝓔(0, r) = r²|g₀|² + |g₁|².
    pub fn energy_density_at_zero(&self, r: f64) -> f64 {
        let g0 = self.g0(r);
        let g1 = self.g1(r);
        r * r * g0 * g0 + g1 * g1
    }

    fn is_zero(&self) -> bool {
        self.amplitude0 == 0.0 && self.amplitude1 == 0.0
    }
}

/// |S^(n−1)| = 2 π^(n/2) / Γ(n/2) for integer n ≥ 1 (2, 2π, 4π, 2π², …).
pub fn surface_measure(n: usize) -> f64 {
    assert!(n >= 1);
    // Γ(n/2) by the half-integer recursion from Γ(1/2) = √π and Γ(1) = 1.
    let half = 0.5 * n as f64;
    let mut gamma = if n % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if n % 2 == 0 { 1.0 } else { 0.5 };
    while x < half - 0.25 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * std::f64::consts::PI.powf(half) / gamma
}

/// Exponential-order comparison: is the weighted norm integral finite?
fn norm_is_finite(data: &InitialData, w: &WeightFunction, kappa: f64) -> bool {
    if data.is_zero() || kappa <= 0.0 {
        // Nonpositive κ only dampens an integrable-by-construction density.
        return true;
    }
    match data.family {
        DataFamily::Bandlimited { .. } => true,
        DataFamily::GevreyExp { nu, kappa: kd } => match w {
            WeightFunction::Unit | WeightFunction::Log => true,
            WeightFunction::Gevrey { nu: nw } => {
                // Finite iff the data decay order dominates the weight
                // growth order, or they tie and the data rate wins.
                1.0 / nw < 1.0 / nu || ((nw - nu).abs() < 1e-12 && kappa < kd)
            }
        },
        DataFamily::Sobolev { s } => match w {
            // Density ~ r^(−2s) (e+r)^(2κ·{0 or 1}); algebraic weights shift
            // the exponent, genuine exponentials always win.
            WeightFunction::Unit => s > 0.5,
            WeightFunction::Log => kappa < s - 0.5,
            WeightFunction::Gevrey { .. } => false,
        },
    }
}

/// Radial quadrature of `f(r)` over [0, ∞): unit panels on [0, 1], then
/// geometric panels until a whole trailing decade contributes less than
/// 1e−13 of the running total (its geometric extrapolation is charged as the
/// tail).  Returns (integral, bounds, cumulative at bounds).
fn radial_integral(f: &dyn Fn(f64) -> f64, r_stop: Option<f64>) -> (f64, Vec<f64>, Vec<f64>) {
    let mut bounds = vec![0.0, 0.25, 0.5, 0.75, 1.0];
    let ratio = 10f64.powf(1.0 / NORM_PANELS_PER_DECADE as f64);
    let cap = r_stop.unwrap_or(R_CAP);
    let mut r = 1.0;
    while r < cap {
        r = (r * ratio).min(cap);
        bounds.push(r);
    }
    let mut cumulative = Vec::with_capacity(bounds.len());
    cumulative.push(0.0);
    let mut acc = 0.0;
    let mut decade_sum = 0.0f64;
    let mut decade_mark = 1.0;
    let mut done = bounds.len();
    for i in 1..bounds.len() {
        let piece = gl8(f, bounds[i - 1], bounds[i]);
        acc += piece;
        cumulative.push(acc);
        if bounds[i] >= 10.0 * decade_mark {
            if r_stop.is_none() && decade_sum.abs() < 1e-13 * acc.abs() && bounds[i] > 100.0 {
                done = i + 1;
                break;
            }
            decade_mark = bounds[i];
            decade_sum = 0.0;
        }
        decade_sum += piece;
    }
    bounds.truncate(done);
    cumulative.truncate(done);
    (acc, bounds, cumulative)
}

/// ‖(v₀, v₁)‖² in the weighted space with weight e^{2κϱ}: radial quadrature
/// with the surface factor.  Divergent combinations (detected by exponent
/// comparison) return +∞ rather than failing.
pub fn h_norm(data: &InitialData, w: &WeightFunction, kappa: f64) -> f64 {
    if data.is_zero() {
        return 0.0;
    }
    if !norm_is_finite(data, w, kappa) {
        return f64::INFINITY;
    }
    let surface = surface_measure(data.dimension);
    let nm1 = data.dimension as i32 - 1;
    let (a0, a1) = (data.amplitude0, data.amplitude1);
    let f = move |r: f64| -> f64 {
        // e^{2κϱ} g² evaluated as one exponential so a huge weight times a
        // vanishing profile never produces ∞ · 0.
        let expo = 2.0 * kappa * w.rho(r) + 2.0 * data.log_profile(r);
        if expo == f64::NEG_INFINITY {
            return 0.0;
        }
        surface * expo.exp() * ((1.0 + r * r) * a0 * a0 + a1 * a1) * r.powi(nm1)
    };
    let stop = match data.family {
        DataFamily::Bandlimited { r_max } => Some(r_max),
        _ => None,
    };
    radial_integral(&f, stop).0
}

/// Total-energy series assembled from one mode trajectory per radial node.
#[derive(Debug)]
pub struct EnergySeries {
    /// Sample times (shared by all nodes).
    pub times: Vec<f64>,
    /// E(t) = ∫ 𝓔(t, ξ) dξ at each sample.
    pub energy: Vec<f64>,
    /// E(0) from the same quadrature (exact densities, no integration error).
    pub e0: f64,
    /// Radial cutoff: the weighted tail of 𝓔(0, ·) beyond it is < 1e−10 E(0).
    pub r_cut: f64,
    /// The neglected tail mass of 𝓔(0, ·).
    pub tail_bound: f64,
    /// Spatial dimension (radial measure factor).
    pub dimension: usize,
    /// Radial quadrature nodes (one integrated mode per entry).
    pub radii: Vec<f64>,
    /// Energy density 𝓔(t_j, r_i), indexed [sample][node].
    pub densities: Vec<Vec<f64>>,
    grid: PanelGrid,
}

impl EnergySeries {
    /// Quadrature of `values` (one per radial node) against the energy
    /// measure |S^(n−1)| r^(n−1) dr.
    fn assemble(&self, values: &[f64]) -> f64 {
        let surface = surface_measure(self.dimension);
        let nm1 = self.dimension as i32 - 1;
        let weighted: Vec<Complex64> = values
            .iter()
            .zip(&self.radii)
            .map(|(&v, &r)| Complex64::new(surface * v * r.powi(nm1), 0.0))
            .collect();
        self.grid.total(&weighted).re
    }
}

/// Integrates one mode per radial node and assembles E(t) on `times`
/// (sorted, starting at ≥ 0).  `nodes` is the target count of radial nodes
/// (rounded up to full 8-point panels, log-spaced on [10⁻³, r_cut]).
/// `drop_eps` forwards to the hybrid mode integrator (None integrates the
/// full coefficient throughout).
pub fn total_energy(
    data: &InitialData,
    c: &DissipationCoefficient,
    times: &[f64],
    nodes: usize,
    rtol: f64,
    drop_eps: Option<f64>,
) -> Result<EnergySeries> {
    if times.is_empty() || times[0] < 0.0 || times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Domain("sample times must be sorted and nonnegative".into()));
    }
    if data.is_zero() {
        return Err(Error::Domain("zero initial data has no energy trajectory".into()));
    }
    if nodes == 0 {
        return Err(Error::Config("the radial grid needs at least one node".into()));
    }

    // Reference integral of 𝓔(0, ·) and the honest cutoff.
    let surface = surface_measure(data.dimension);
    let nm1 = data.dimension as i32 - 1;
    let density0 = move |r: f64| surface * data.energy_density_at_zero(r) * r.powi(nm1);
    let (r_cut, e_ref, tail_bound) = match data.family {
        DataFamily::Bandlimited { r_max } => {
            let (e_ref, _, _) = radial_integral(&density0, Some(r_max));
            (r_max, e_ref, 0.0)
        }
        _ => {
            let (e_ref, bounds, cumulative) = radial_integral(&density0, None);
            let idx = cumulative
                .iter()
                .position(|&cum| e_ref - cum <= TAIL_FRACTION * e_ref)
                .unwrap_or(bounds.len() - 1);
            let r_cut = bounds[idx].max(1.0);
            (r_cut, e_ref, e_ref - cumulative[idx])
        }
    };
    if !e_ref.is_finite() || e_ref <= 0.0 {
        return Err(Error::Domain(format!(
            "initial energy must be positive and finite, got {e_ref}"
        )));
    }

    // Log-spaced panels on [R_MIN, r_cut]; 8 Gauss–Legendre nodes per panel.
    let panels = nodes.div_ceil(8).max(1);
    let lo = R_MIN.ln();
    let hi = r_cut.ln();
    let bounds: Vec<f64> =
        (0..=panels).map(|i| (lo + (hi - lo) * i as f64 / panels as f64).exp()).collect();
    let grid = PanelGrid::from_bounds(bounds);
    let radii = grid.nodes().to_vec();

    let t_end = *times.last().unwrap();
    let per_node: Vec<Vec<f64>> = radii
        .par_iter()
        .enumerate()
        .map(|(i, &r)| -> Result<Vec<f64>> {
            let initial = ModeState::new(
                r,
                Complex64::new(0.0, r * data.g0(r)),
                Complex64::new(data.g1(r), 0.0),
                0.0,
            );
            let atol = 1e-12 * (1.0 + initial.energy_density().sqrt());
            match integrate_mode_hybrid(c, &initial, t_end, rtol, atol, times, drop_eps) {
                Ok(traj) => Ok(traj.samples.iter().map(|s| s.energy).collect()),
                Err(e @ (Error::Stiffness { .. } | Error::Blowup { .. })) => Err(e),
                Err(other) => {
                    Err(Error::Domain(format!("mode node {i} (r = {r:.6e}): {other}")))
                }
            }
        })
        .collect::<Result<_>>()?;

    let mut series = EnergySeries {
        times: times.to_vec(),
        energy: Vec::with_capacity(times.len()),
        e0: 0.0,
        r_cut,
        tail_bound,
        dimension: data.dimension,
        radii: radii.clone(),
        densities: Vec::with_capacity(times.len()),
        grid,
    };
    for j in 0..times.len() {
        let row: Vec<f64> = per_node.iter().map(|node| node[j]).collect();
        series.energy.push(series.assemble(&row));
        series.densities.push(row);
    }
    let exact0: Vec<f64> = radii.iter().map(|&r| data.energy_density_at_zero(r)).collect();
    series.e0 = series.assemble(&exact0);
    Ok(series)
}

/// Splits E(t) into the four radial regions cut by the zone boundaries
/// (N μ(t)/μ₀, N, N ζ⁻¹(Θ(t))) at a recorded sample time.  The four parts
/// sum to the recorded E(t) exactly (same nodes, same weights).
pub fn zone_split(
    series: &EnergySeries,
    zp: &ZonePartition,
    t: f64,
) -> Result<[f64; 4]> {
    let j = series
        .times
        .iter()
        .position(|&s| (s - t).abs() <= 1e-9 * (1.0 + t.abs()))
        .ok_or_else(|| Error::Domain(format!("t = {t} is not a recorded sample time")))?;
    let (b1, b2, b3) = zp.spectral_boundaries(t)?;
    let row = &series.densities[j];
    let mut parts = [0.0f64; 4];
    for region in 0..4 {
        let masked: Vec<f64> = row
            .iter()
            .zip(&series.radii)
            .map(|(&d, &r)| {
                let in_region = match region {
                    0 => r <= b1,
                    1 => r > b1 && r <= b2,
                    2 => r > b2 && r <= b3,
                    _ => r > b3,
                };
                if in_region {
                    d
                } else {
                    0.0
                }
            })
            .collect();
        parts[region] = series.assemble(&masked);
    }
    Ok(parts)
}

/// CSV of the energy series: t, E, the four zone integrals, and
/// bound_ratio = E(t) e^{∫₀ᵗ μ} / E(0).
pub fn energy_csv(
    series: &EnergySeries,
    c: &DissipationCoefficient,
    zp: &ZonePartition,
) -> Result<String> {
    let mut out = String::from("t,energy,i1,i2,i3,i4,bound_ratio\n");
    for (j, &t) in series.times.iter().enumerate() {
        let parts = zone_split(series, zp, t)?;
        let ratio = series.energy[j] * c.principal().integral(t).exp() / series.e0;
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            t, series.energy[j], parts[0], parts[1], parts[2], parts[3], ratio
        ));
    }
    Ok(out)
}
