//! Refined diagonalization of the symmetrised mode system, and the
//! intermediate-zone transform built from the oscillation primitive
//! ω(t) = exp(∫_t^∞ σ).
//!
//! After the constant rotation M = [[1, −1], [1, 1]] the mode system
//! ∂_t V = A(t,ξ) V takes the self-paired form ∂_t V₀ = A₀ V₀ with
//! A₀ = [[φ₀, r₀], [r̄₀, φ̄₀]], φ₀ = i|ξ| − b/2, r₀ = −b/2.  One
//! diagonalization step conjugates by M_k = [[1, δ_k], [δ̄_k, 1]] with
//!
//!   δ_k = i r_k / (Im φ_k (1 + s_k)),   s_k = √(1 − |r_k / Im φ_k|²),
//!
//! which diagonalizes the principal part exactly,
//!
//!   M_k⁻¹ [[φ_k, r_k], [r̄_k, φ̄_k]] M_k = diag(λ_k, λ̄_k),
//!   λ_k = Re φ_k + i Im φ_k s_k,
//!
//! and leaves the next remainder pair
//!
//!   φ_{k+1} = λ_k + δ_k δ̄_k′ / (1 − |δ_k|²),
//!   r_{k+1} = −δ_k′ / (1 − |δ_k|²).
//!
//! Each step trades one order of differentiability for one power of
//! frequency: |r_k| stays ≲ Ξ(t)^{k+1} / |ξ|^k on the hyperbolic zone.  Real
//! parts telescope,
//!
//!   Re φ_m = −b/2 − ½ ∂_t log ∏_{k<m} (1 − |δ_k|²),
//!
//! so the diagonalized flow decays exactly like the full damping integral up
//! to the bounded product correction and the residual Gronwall budget
//! ∫ 2|r_m|.  All derivatives are propagated as truncated Taylor jets; no
//! finite differences appear anywhere.
//!
//! On the intermediate zones the first transform is M̃₁ = diag(1, ω), which
//! absorbs σ entirely (since ω′ = −σω); the constant rotation M and one
//! eigenvalue step with δ̃ built from μ alone leave the residual
//!
//!   R̃ = M̃₂⁻¹ R̃₂ M̃₂ − M̃₂⁻¹ ∂_t M̃₂,
//!   R̃₂ = [[r̃₊, −r̃₋], [r̃₋, −r̃₊]],
//!   r̃₊ = i|ξ|(cosh I − 1),  r̃₋ = −i|ξ| sinh I,  I(t) = ∫_t^∞ σ,
//!
//! whose integral along the zone converges exactly when the stabilization
//! tail ∫ |I| does.

use num_complex::Complex64;
use serde::Serialize;

use crate::coeffs::DissipationCoefficient;
use crate::hypotheses::{self, RateFunctions};
use crate::jet::Jet;
use crate::modes::{coefficient_step_cap, sample_grid};
use crate::quad::PanelGrid;
use crate::rk::{integrate_sampled, Dopri5Options, IntegrationStats};
use crate::volterra::oscillation_panels;
use crate::zones::ZonePartition;
use crate::{Error, Result};

/// Largest zone threshold tried by the doubling scan for the admissible N.
const MAX_N_SCAN: u32 = 1 << 16;
/// Tail-envelope level below which the oscillatory residual is handled by
/// the linearized bound ‖R̃₂‖_F ≈ √2 |ξ| |I| (relative error ≤ envelope²).
const LINEAR_ENVELOPE: f64 = 1e-2;
/// Panels per decade in 1+t for quadrature of smooth (non-oscillatory)
/// residual pieces.
const SMOOTH_PANELS_PER_DECADE: f64 = 16.0;
/// Dense-output samples recorded along a diagonalized trajectory.
const TRAJECTORY_SAMPLES: usize = 257;

// ---------------------------------------------------------------------------
// One diagonalization step.
// ---------------------------------------------------------------------------

/// Output of one diagonalization step applied to the remainder pair (φ, r).
#[derive(Debug, Clone)]
pub struct RdStep {
    /// Off-diagonal transform entry δ (order matches the input).
    pub delta: Jet,
    /// Exact eigenvalue λ = Re φ + i Im φ √(1 − |r/Im φ|²).
    pub lambda: Jet,
    /// Next-level diagonal entry φ' = λ + δ δ̄′/(1 − |δ|²) (one order lower).
    pub next_phi: Jet,
    /// Next-level off-diagonal entry r' = −δ′/(1 − |δ|²) (one order lower).
    pub next_r: Jet,
}

/// δ and s for a remainder pair, with the admissibility check
/// |r| < |Im φ| at the base point.  Inputs must share one jet order.
fn delta_s_jets(phi: &Jet, r: &Jet) -> Result<(Jet, Jet)> {
    let phi_im = phi.im_part();
    let im0 = phi_im.value().re;
    let r0 = r.value().norm();
    if im0 == 0.0 || !(r0 < im0.abs()) {
        return Err(Error::DiagBreakdown { level: 0, r_abs: r0, phi_im: im0 });
    }
    let order = phi.order();
    let one = Jet::one(order);
    let ratio = r.mul(&r.conj())?.div(&phi_im.mul(&phi_im)?)?;
    let s = one.sub(&ratio)?.sqrt()?;
    let delta = r.div(&phi_im.mul(&one.add(&s)?)?)?.scaled(Complex64::i());
    Ok((delta, s))
}

/// Value-level δ and λ for a remainder pair (no derivatives involved).
fn delta_lambda_values(phi0: Complex64, r0: Complex64) -> Result<(Complex64, Complex64)> {
    let im = phi0.im;
    let rn = r0.norm();
    if im == 0.0 || !(rn < im.abs()) {
        return Err(Error::DiagBreakdown { level: 0, r_abs: rn, phi_im: im });
    }
    let s = (1.0 - (rn / im) * (rn / im)).sqrt();
    let delta = Complex64::i() * r0 / (im * (1.0 + s));
    let lambda = Complex64::new(phi0.re, im * s);
    Ok((delta, lambda))
}

/// One diagonalization step.  Requires jets of order ≥ 1 (the step spends
/// one derivative) and |r| < |Im φ| at the base point.
pub fn rd_step(phi: &Jet, r: &Jet) -> Result<RdStep> {
    let order = phi.order().min(r.order());
    if order == 0 {
        return Err(Error::CannotDifferentiate);
    }
    let phi = phi.truncated(order);
    let r = r.truncated(order);
    let (delta, s) = delta_s_jets(&phi, &r)?;
    let lambda = phi.re_part().add(&phi.im_part().mul(&s)?.scaled(Complex64::i()))?;
    let d_delta = delta.differentiate()?;
    let denom = Jet::one(order).sub(&delta.mul(&delta.conj())?)?.truncated(order - 1);
    let next_r = d_delta.div(&denom)?.scaled(Complex64::new(-1.0, 0.0));
    let next_phi = lambda
        .truncated(order - 1)
        .add(&delta.truncated(order - 1).mul(&d_delta.conj())?.div(&denom)?)?;
    Ok(RdStep { delta, lambda, next_phi, next_r })
}

/// Frobenius norm of M⁻¹ A M − diag(λ, λ̄) at the base point, where
/// A = [[φ, r], [r̄, φ̄]] and M, λ are built from the step formulas.  Exact
/// diagonalization makes this vanish to rounding for any admissible pair.
pub fn diagonalization_residual(phi0: Complex64, r0: Complex64) -> Result<f64> {
    let (delta, lambda) = delta_lambda_values(phi0, r0)?;
    let a = [[phi0, r0], [r0.conj(), phi0.conj()]];
    let m = [[c64(1.0), delta], [delta.conj(), c64(1.0)]];
    let lam = m2_diag(lambda, lambda.conj());
    let lhs = m2_mul(&m2_mul(&m2_inv(&m)?, &a), &m);
    Ok(frobenius(&m2_sub(&lhs, &lam)))
}

// ---------------------------------------------------------------------------
// The hierarchy over a coefficient.
// ---------------------------------------------------------------------------

/// One level of the diagonalization hierarchy at a fixed (t, ξ).
#[derive(Debug, Clone)]
pub struct DiagLevel {
    /// Level index k (0 is the rotated original system).
    pub k: usize,
    /// Diagonal remainder entry φ_k as a jet of order m − k.
    pub phi: Jet,
    /// Off-diagonal remainder entry r_k as a jet of order m − k.
    pub r: Jet,
    /// Transform entry δ_k (order m − k; order 0 at the top level).
    pub delta: Jet,
    /// Eigenvalue λ_k at the base point.
    pub lambda: Complex64,
}

/// Builds levels 0..=m of the hierarchy at (t, ξ).  Level k carries jets of
/// order m − k; the top level keeps only values.  Fails with
/// `SmoothnessExceeded` when m exceeds the coefficient's declared order and
/// with `DiagBreakdown` when |r_k| reaches |Im φ_k| at some level.
pub fn build_hierarchy(
    c: &DissipationCoefficient,
    t: f64,
    xi_norm: f64,
    m: usize,
) -> Result<Vec<DiagLevel>> {
    if !(xi_norm > 0.0) || !xi_norm.is_finite() || !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!(
            "hierarchy needs finite t >= 0 and |ξ| > 0, got ({t}, {xi_norm})"
        )));
    }
    if m == 0 {
        return Err(Error::Domain("the hierarchy needs at least one step (m >= 1)".into()));
    }
    if m > c.smoothness() {
        return Err(Error::SmoothnessExceeded { requested: m, available: c.smoothness() });
    }
    let minus_half_b = c.jet(t, m)?.scaled(Complex64::new(-0.5, 0.0));
    let mut phi = minus_half_b.add(&Jet::constant(Complex64::new(0.0, xi_norm), m))?;
    let mut r = minus_half_b;
    let mut levels = Vec::with_capacity(m + 1);
    for k in 0..m {
        let step = rd_step(&phi, &r).map_err(|e| remap_level(e, k))?;
        levels.push(DiagLevel { k, phi, r, delta: step.delta, lambda: step.lambda.value() });
        phi = step.next_phi;
        r = step.next_r;
    }
    let (delta, lambda) = delta_lambda_values(phi.value(), r.value()).map_err(|e| remap_level(e, m))?;
    levels.push(DiagLevel { k: m, phi, r, delta: Jet::constant(delta, 0), lambda });
    Ok(levels)
}

fn remap_level(e: Error, k: usize) -> Error {
    match e {
        Error::DiagBreakdown { r_abs, phi_im, .. } => Error::DiagBreakdown { level: k, r_abs, phi_im },
        other => other,
    }
}

/// Residual of the telescoped real-part identity
/// Re φ_m = −b/2 − ½ ∂_t log ∏_{k<m} (1 − |δ_k|²), evaluated with jets.
pub fn phi_identity_defect(
    c: &DissipationCoefficient,
    t: f64,
    xi_norm: f64,
    m: usize,
) -> Result<f64> {
    let levels = build_hierarchy(c, t, xi_norm, m)?;
    let mut prod = Jet::one(1);
    for lvl in &levels[..m] {
        let d = lvl.delta.truncated(1);
        prod = prod.mul(&Jet::one(1).sub(&d.mul(&d.conj())?)?)?;
    }
    // (log f)′ at the base point: f′/f with f′ = coeff(1)·1!.
    let dlog = prod.coeff(1) / prod.coeff(0);
    let phi_m_re = levels[m].phi.value().re;
    Ok((phi_m_re + 0.5 * c.eval(t) + 0.5 * dlog.re).abs())
}

// ---------------------------------------------------------------------------
// Symbol scans over the hyperbolic zone.
// ---------------------------------------------------------------------------

/// Log-spaced sample points of the hyperbolic zone: `n_xi` frequencies in
/// [N, xi_max], and for each, `n_t` times in [0, min(t_H(ξ), t_max)].
/// Frequencies start just above N so every point classifies hyperbolic.
pub fn hyperbolic_grid(
    zp: &ZonePartition,
    n_t: usize,
    n_xi: usize,
    t_max: f64,
    xi_max: f64,
) -> Vec<(f64, f64)> {
    let n = zp.n_param() * (1.0 + 1e-9);
    let mut pts = Vec::new();
    if !(xi_max > n) || n_xi == 0 || n_t == 0 {
        return pts;
    }
    for i in 0..n_xi {
        let f = if n_xi == 1 { 1.0 } else { i as f64 / (n_xi - 1) as f64 };
        let xi = n * (xi_max / n).powf(f);
        let Some(th) = zp.t_hyperbolic(xi) else { continue };
        let t_hi = th.min(t_max);
        for j in 0..n_t {
            let g = if n_t == 1 { 0.0 } else { j as f64 / (n_t - 1) as f64 };
            pts.push(((1.0 + t_hi).powf(g) - 1.0, xi));
        }
    }
    pts
}

/// One record of a symbol scan: the remainder magnitudes at one grid point
/// and level, and the ratio |r_k| |ξ|^k / Ξ(t)^{k+1} they are measured
/// against.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScanRow {
    pub level: usize,
    pub t: f64,
    pub xi: f64,
    pub delta_abs: f64,
    pub r_abs: f64,
    pub bound_ratio: f64,
}

/// Result of scanning the hierarchy over a hyperbolic-zone grid.
#[derive(Debug, Clone, Serialize)]
pub struct SymbolScan {
    /// Number of diagonalization steps taken.
    pub m: usize,
    /// sup over the grid of |r_k| |ξ|^k / Ξ(t)^{k+1}, for k = 0..=m.
    pub r_suprema: Vec<f64>,
    /// sup over the grid of |δ_k|, for k = 0..=m.
    pub delta_suprema: Vec<f64>,
    /// Minimal power-of-two zone threshold for which sup |δ_k| ≤ ½ over the
    /// regenerated zone grid (None when even 2^16 fails).
    pub n0: Option<u32>,
    /// Per-point, per-level records for reporting.
    pub rows: Vec<ScanRow>,
}

/// Scans the hierarchy over `grid`, recording per-level suprema of the
/// frequency-weighted remainders and of |δ_k|.  A breakdown at some point
/// contributes infinite suprema from its level upward (the scan itself does
/// not fail).  Also runs the doubling scan for the minimal admissible zone
/// threshold.
pub fn symbol_scan(
    c: &DissipationCoefficient,
    zp: &ZonePartition,
    rates: &RateFunctions,
    m: usize,
    grid: &[(f64, f64)],
) -> Result<SymbolScan> {
    let mut r_sup = vec![0.0f64; m + 1];
    let mut d_sup = vec![0.0f64; m + 1];
    let mut rows = Vec::with_capacity(grid.len() * (m + 1));
    for &(t, xi) in grid {
        match build_hierarchy(c, t, xi, m) {
            Ok(levels) => {
                for lvl in &levels {
                    let bound = rates.xi(t).powi(lvl.k as i32 + 1);
                    let r_abs = lvl.r.value().norm();
                    let d_abs = lvl.delta.value().norm();
                    let ratio = r_abs * xi.powi(lvl.k as i32) / bound;
                    r_sup[lvl.k] = r_sup[lvl.k].max(ratio);
                    d_sup[lvl.k] = d_sup[lvl.k].max(d_abs);
                    rows.push(ScanRow { level: lvl.k, t, xi, delta_abs: d_abs, r_abs, bound_ratio: ratio });
                }
            }
            Err(Error::DiagBreakdown { level, r_abs, .. }) => {
                for k in level..=m {
                    r_sup[k] = f64::INFINITY;
                    d_sup[k] = f64::INFINITY;
                }
                rows.push(ScanRow {
                    level,
                    t,
                    xi,
                    delta_abs: f64::INFINITY,
                    r_abs,
                    bound_ratio: f64::INFINITY,
                });
            }
            Err(other) => return Err(other),
        }
    }
    let t_cap = grid.iter().map(|p| p.0).fold(0.0, f64::max).max(100.0);
    let n0 = minimal_zone_threshold(c, zp, m, t_cap)?;
    Ok(SymbolScan { m, r_suprema: r_sup, delta_suprema: d_sup, n0, rows })
}

/// Doubling scan N = 1, 2, 4, …, 2^16 for the smallest threshold whose
/// hyperbolic zone keeps every |δ_k| ≤ ½ (on a 16×16 regenerated grid with
/// frequencies up to 64N).  `zp` supplies the principal part, rates, and
/// weight; its own N is ignored.
pub fn minimal_zone_threshold(
    c: &DissipationCoefficient,
    zp: &ZonePartition,
    m: usize,
    t_cap: f64,
) -> Result<Option<u32>> {
    let mut n: u32 = 1;
    loop {
        let cand =
            ZonePartition::new(n as f64, *zp.principal(), *zp.theta(), *zp.weight())?;
        let grid = hyperbolic_grid(&cand, 16, 16, t_cap, 64.0 * n as f64);
        let mut admissible = true;
        'points: for &(t, xi) in &grid {
            match build_hierarchy(c, t, xi, m) {
                Ok(levels) => {
                    for lvl in &levels {
                        if !(lvl.delta.value().norm() <= 0.5) {
                            admissible = false;
                            break 'points;
                        }
                    }
                }
                Err(Error::DiagBreakdown { .. }) => {
                    admissible = false;
                    break 'points;
                }
                Err(other) => return Err(other),
            }
        }
        if admissible {
            return Ok(Some(n));
        }
        if n >= MAX_N_SCAN {
            return Ok(None);
        }
        n *= 2;
    }
}

/// Least-squares slopes of log |r_k| against log |ξ| at fixed `t`, one per
/// level k = 0..=m, over `n_xi` log-spaced frequencies in [4N, xi_max].
/// Level-k remainders gain one reciprocal power of frequency per step, so
/// slopes should not exceed −k by more than fitting noise.
pub fn r_symbol_slopes(
    c: &DissipationCoefficient,
    zp: &ZonePartition,
    m: usize,
    t: f64,
    n_xi: usize,
    xi_max: f64,
) -> Result<Vec<f64>> {
    let xi_lo = 4.0 * zp.n_param();
    if !(xi_max > xi_lo) || n_xi < 4 {
        return Err(Error::Domain(format!(
            "slope fit needs at least 4 frequencies above 4N = {xi_lo}, got n_xi = {n_xi}, xi_max = {xi_max}"
        )));
    }
    let mut per_level: Vec<Vec<(f64, f64)>> = vec![Vec::new(); m + 1];
    for i in 0..n_xi {
        let f = i as f64 / (n_xi - 1) as f64;
        let xi = xi_lo * (xi_max / xi_lo).powf(f);
        match zp.t_hyperbolic(xi) {
            Some(th) if th >= t => {}
            _ => continue,
        }
        let levels = build_hierarchy(c, t, xi, m)?;
        for lvl in &levels {
            let r_abs = lvl.r.value().norm();
            if r_abs > 0.0 {
                per_level[lvl.k].push((xi.ln(), r_abs.ln()));
            }
        }
    }
    per_level
        .iter()
        .enumerate()
        .map(|(k, pts)| {
            if pts.len() < 3 {
                return Err(Error::Domain(format!(
                    "slope fit for level {k} has only {} usable frequencies",
                    pts.len()
                )));
            }
            Ok(ols_slope(pts))
        })
        .collect()
}

fn ols_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

// ---------------------------------------------------------------------------
// Integration of the fully diagonalized system.
// ---------------------------------------------------------------------------

/// Trajectory of the level-m system ∂_t V_m = (Φ_m + R_m) V_m together with
/// the back-mapped physical state and the accumulated Gronwall budget.
#[derive(Debug, Clone)]
pub struct DiagonalizedTrajectory {
    pub xi_norm: f64,
    pub m: usize,
    /// First recorded time (the requested start).
    pub entered_at: f64,
    /// True when the requested horizon extends past t_H(ξ) and the run was
    /// truncated at the zone boundary.
    pub exited: bool,
    pub times: Vec<f64>,
    /// Level-m state at each sample.
    pub vm: Vec<[Complex64; 2]>,
    /// ‖V_m‖² at each sample.
    pub vm_norm_sq: Vec<f64>,
    /// Back-mapped physical state V = M M₀ ⋯ M_{m−1} V_m.
    pub v: Vec<[Complex64; 2]>,
    /// Back-mapped pointwise energy 𝓔(t, ξ) = ‖V‖².
    pub energy: Vec<f64>,
    /// ∫ 2 |r_m| from the start to each sample (Gronwall corridor width).
    pub gronwall_integral: Vec<f64>,
    /// ∫ 2 Re φ_m from the start to each sample (corridor center).
    pub phi_re_integral: Vec<f64>,
    pub stats: IntegrationStats,
}

/// Integrates the level-m diagonalized system from `t_start` (which must lie
/// inside the hyperbolic zone for ξ) towards `t_end`, truncating at the zone
/// boundary t_H(ξ).  `v_entry` is the physical state (i|ξ|v, ∂_t v) at
/// `t_start`; it is pushed through M⁻¹ M₀⁻¹ ⋯ M_{m−1}⁻¹ before integration
/// and the recorded trajectory maps each sample back.  The exact corridor
///
///   d/dt log ‖V_m‖² ∈ 2 Re φ_m ± 2 |r_m|
///
/// is recorded through the two accumulated integrals.
#[allow(clippy::too_many_arguments)]
pub fn integrate_diagonalized(
    c: &DissipationCoefficient,
    zp: &ZonePartition,
    xi_norm: f64,
    m: usize,
    v_entry: [Complex64; 2],
    t_start: f64,
    t_end: f64,
    rtol: f64,
) -> Result<DiagonalizedTrajectory> {
    if !(xi_norm > 0.0) || !xi_norm.is_finite() || !(t_start >= 0.0) || !t_start.is_finite() {
        return Err(Error::Domain(format!(
            "diagonalized run needs finite t_start >= 0 and |ξ| > 0, got ({t_start}, {xi_norm})"
        )));
    }
    let Some(th) = zp.t_hyperbolic(xi_norm) else {
        return Err(Error::Domain(format!(
            "|ξ| = {xi_norm} lies below the hyperbolic zone threshold N = {}",
            zp.n_param()
        )));
    };
    if t_start > th {
        return Err(Error::Domain(format!(
            "entry time {t_start} is past the zone boundary t_H(ξ) = {th}"
        )));
    }
    let stop = t_end.min(th);
    if !(stop > t_start) {
        return Err(Error::Domain(format!(
            "integration window [{t_start}, {stop}] is empty"
        )));
    }
    let exited = t_end > th;

    // Forward transform of the entry state: V_m = M_{m−1}⁻¹ ⋯ M₀⁻¹ M⁻¹ V.
    let entry_levels = build_hierarchy(c, t_start, xi_norm, m)?;
    let mut w = [
        0.5 * (v_entry[0] + v_entry[1]),
        0.5 * (v_entry[1] - v_entry[0]),
    ];
    for lvl in &entry_levels[..m] {
        let d = lvl.delta.value();
        let den = 1.0 - d.norm_sqr();
        w = [(w[0] - d * w[1]) / den, (w[1] - d.conj() * w[0]) / den];
    }
    let vm0 = w;

    let mut breakdown: Option<(usize, f64, f64)> = None;
    let mut rhs = |t: f64, y: &[f64; 6]| -> [f64; 6] {
        if breakdown.is_some() {
            return [0.0; 6];
        }
        match build_hierarchy(c, t, xi_norm, m) {
            Ok(levels) => {
                let phi = levels[m].phi.value();
                let r = levels[m].r.value();
                let v1 = Complex64::new(y[0], y[1]);
                let v2 = Complex64::new(y[2], y[3]);
                let d1 = phi * v1 + r * v2;
                let d2 = r.conj() * v1 + phi.conj() * v2;
                [d1.re, d1.im, d2.re, d2.im, 2.0 * r.norm(), 2.0 * phi.re]
            }
            Err(Error::DiagBreakdown { level, r_abs, phi_im }) => {
                breakdown = Some((level, r_abs, phi_im));
                [0.0; 6]
            }
            Err(_) => {
                breakdown = Some((m + 1, f64::NAN, f64::NAN));
                [0.0; 6]
            }
        }
    };
    let samples = sample_grid(t_start, stop, TRAJECTORY_SAMPLES);
    let y0 = [vm0[0].re, vm0[0].im, vm0[1].re, vm0[1].im, 0.0, 0.0];
    let opts = Dopri5Options {
        rtol,
        atol: 1e-12 * (1.0 + vm0[0].norm() + vm0[1].norm()),
        ..Dopri5Options::default()
    };
    let cap = coefficient_step_cap(c, xi_norm);
    let (states, stats) = integrate_sampled(&mut rhs, t_start, stop, y0, &samples, &opts, &cap)?;
    if let Some((level, r_abs, phi_im)) = breakdown {
        return Err(Error::DiagBreakdown { level, r_abs, phi_im });
    }

    let n = states.len();
    let mut traj = DiagonalizedTrajectory {
        xi_norm,
        m,
        entered_at: t_start,
        exited,
        times: samples.clone(),
        vm: Vec::with_capacity(n),
        vm_norm_sq: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
        energy: Vec::with_capacity(n),
        gronwall_integral: Vec::with_capacity(n),
        phi_re_integral: Vec::with_capacity(n),
        stats,
    };
    for (i, y) in states.iter().enumerate() {
        let t = samples[i];
        let vm = [Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3])];
        let levels = build_hierarchy(c, t, xi_norm, m)?;
        let mut w = vm;
        for lvl in levels[..m].iter().rev() {
            let d = lvl.delta.value();
            w = [w[0] + d * w[1], d.conj() * w[0] + w[1]];
        }
        let v_phys = [w[0] - w[1], w[0] + w[1]];
        traj.vm.push(vm);
        traj.vm_norm_sq.push(vm[0].norm_sqr() + vm[1].norm_sqr());
        traj.v.push(v_phys);
        traj.energy.push(v_phys[0].norm_sqr() + v_phys[1].norm_sqr());
        traj.gronwall_integral.push(y[4]);
        traj.phi_re_integral.push(y[5]);
    }
    Ok(traj)
}

// ---------------------------------------------------------------------------
// The intermediate-zone transform.
// ---------------------------------------------------------------------------

/// All pieces of the intermediate-zone transform at one point (t, ξ).
#[derive(Debug, Clone)]
pub struct InterZoneTransform {
    pub t: f64,
    pub xi_norm: f64,
    /// ω(t) = exp(∫_t^∞ σ).
    pub omega: f64,
    /// μ(t).
    pub mu: f64,
    /// Transform entry δ̃ built from μ alone (purely imaginary).
    pub delta_tilde: Complex64,
    /// λ̃ = −μ/2 + i|ξ|√(1 − (μ/2|ξ|)²); the real part is exactly −μ/2.
    pub lambda_tilde: Complex64,
    /// M̃₁ = diag(1, ω).
    pub m1: [[Complex64; 2]; 2],
    /// The constant rotation M = [[1, −1], [1, 1]].
    pub m_const: [[Complex64; 2]; 2],
    /// M̃₂ = [[1, δ̃], [δ̃̄, 1]].
    pub m2: [[Complex64; 2]; 2],
    /// M̃ = M̃₁ M M̃₂.
    pub m_tilde: [[Complex64; 2]; 2],
    /// R̃₂: the rotated remainder produced by ω ≠ 1.
    pub r2: [[Complex64; 2]; 2],
    /// The full residual R̃ = M̃₂⁻¹ R̃₂ M̃₂ − M̃₂⁻¹ ∂_t M̃₂.
    pub r_tilde: [[Complex64; 2]; 2],
}

/// δ̃ as an order-`order` jet at `t`, built from the principal part alone.
fn delta_tilde_jet(c: &DissipationCoefficient, t: f64, xi_norm: f64, order: usize) -> Result<Jet> {
    let half_mu = c.principal().jet(t, order).scaled(Complex64::new(-0.5, 0.0));
    let phi = half_mu.add(&Jet::constant(Complex64::new(0.0, xi_norm), order))?;
    let (delta, _s) = delta_s_jets(&phi, &half_mu)?;
    Ok(delta)
}

/// Builds the intermediate-zone transform at (t, ξ).  Requires
/// μ(t) < 2|ξ| (automatic on the intermediate zones, where
/// μ(t)/(2|ξ|) ≤ μ₀/(2N)); σ's tail integral must converge.
pub fn interzone_transform(
    c: &DissipationCoefficient,
    t: f64,
    xi_norm: f64,
) -> Result<InterZoneTransform> {
    if !(xi_norm > 0.0) || !xi_norm.is_finite() || !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!(
            "interzone transform needs finite t >= 0 and |ξ| > 0, got ({t}, {xi_norm})"
        )));
    }
    let mu = c.principal().eval(t);
    let i_val = c.oscillating().tail_integral(t)?.value;
    let omega = i_val.exp();
    let (delta_tilde, lambda_tilde) =
        delta_lambda_values(Complex64::new(-0.5 * mu, xi_norm), c64(-0.5 * mu))?;
    let dj = delta_tilde_jet(c, t, xi_norm, 1)?;
    let d_prime = dj.coeff(1);

    let m1 = m2_diag(c64(1.0), c64(omega));
    let m_const = [[c64(1.0), c64(-1.0)], [c64(1.0), c64(1.0)]];
    let m2 = [[c64(1.0), delta_tilde], [delta_tilde.conj(), c64(1.0)]];
    let m_tilde = m2_mul(&m2_mul(&m1, &m_const), &m2);

    let r_plus = Complex64::new(0.0, xi_norm * (i_val.cosh() - 1.0));
    let r_minus = Complex64::new(0.0, -xi_norm * i_val.sinh());
    let r2 = [[r_plus, -r_minus], [r_minus, -r_plus]];
    let m2_inv = m2_inv(&m2)?;
    let m2_prime = [[c64(0.0), d_prime], [d_prime.conj(), c64(0.0)]];
    let r_tilde = m2_sub(&m2_mul(&m2_mul(&m2_inv, &r2), &m2), &m2_mul(&m2_inv, &m2_prime));

    Ok(InterZoneTransform {
        t,
        xi_norm,
        omega,
        mu,
        delta_tilde,
        lambda_tilde,
        m1,
        m_const,
        m2,
        m_tilde,
        r2,
        r_tilde,
    })
}

/// Consistency defect of the transform at (t, ξ): the Frobenius distance
/// between the residual assembled from the pieces,
/// R̃ = M̃₂⁻¹ (Ã₂ − Φ̃₂) M̃₂ − M̃₂⁻¹ ∂_t M̃₂, and its direct definition
/// M̃⁻¹ A M̃ − diag(λ̃, λ̃̄) − M̃⁻¹ ∂_t M̃, plus the distance of Ã₂ − Φ̃₂ from
/// the closed sinh/cosh form.  Exact identities make this vanish to
/// rounding.
pub fn interzone_defect(c: &DissipationCoefficient, t: f64, xi_norm: f64) -> Result<f64> {
    let tr = interzone_transform(c, t, xi_norm)?;
    let b = c.eval(t);
    let sigma_val = b - tr.mu;
    let omega_prime = -sigma_val * tr.omega;
    let dj = delta_tilde_jet(c, t, xi_norm, 1)?;
    let d_prime = dj.coeff(1);

    let ix = Complex64::new(0.0, xi_norm);
    let a = [[c64(0.0), ix], [ix, c64(-b)]];
    let m1p = m2_diag(c64(0.0), c64(omega_prime));
    let m2p = [[c64(0.0), d_prime], [d_prime.conj(), c64(0.0)]];

    // Direct route: R̃ = M̃⁻¹ A M̃ − Λ̃ − M̃⁻¹ ∂_t M̃ with
    // ∂_t M̃ = M̃₁′ M M̃₂ + M̃₁ M M̃₂′.
    let m_tilde_prime = m2_add(
        &m2_mul(&m2_mul(&m1p, &tr.m_const), &tr.m2),
        &m2_mul(&m2_mul(&tr.m1, &tr.m_const), &m2p),
    );
    let m_tilde_inv = m2_inv(&tr.m_tilde)?;
    let lam = m2_diag(tr.lambda_tilde, tr.lambda_tilde.conj());
    let direct = m2_sub(
        &m2_sub(&m2_mul(&m2_mul(&m_tilde_inv, &a), &tr.m_tilde), &lam),
        &m2_mul(&m_tilde_inv, &m_tilde_prime),
    );

    // Piecewise route: Ã₁ = M̃₁⁻¹ A M̃₁ − M̃₁⁻¹ M̃₁′, Ã₂ = M⁻¹ Ã₁ M,
    // R̃₂ = Ã₂ − Φ̃₂, R̃ = M̃₂⁻¹ R̃₂ M̃₂ − M̃₂⁻¹ M̃₂′.
    let m1_inv = m2_inv(&tr.m1)?;
    let a1 = m2_sub(&m2_mul(&m2_mul(&m1_inv, &a), &tr.m1), &m2_mul(&m1_inv, &m1p));
    let mc_inv = m2_inv(&tr.m_const)?;
    let a2 = m2_mul(&m2_mul(&mc_inv, &a1), &tr.m_const);
    let phi2 = [
        [Complex64::new(-0.5 * tr.mu, xi_norm), c64(-0.5 * tr.mu)],
        [c64(-0.5 * tr.mu), Complex64::new(-0.5 * tr.mu, -xi_norm)],
    ];
    let r2 = m2_sub(&a2, &phi2);
    let m2_inv_v = m2_inv(&tr.m2)?;
    let piecewise = m2_sub(&m2_mul(&m2_mul(&m2_inv_v, &r2), &tr.m2), &m2_mul(&m2_inv_v, &m2p));

    Ok(frobenius(&m2_sub(&direct, &piecewise)) + frobenius(&m2_sub(&r2, &tr.r2)))
}

// ---------------------------------------------------------------------------
// Residual integrals along the intermediate zones.
// ---------------------------------------------------------------------------

/// ∫ ‖R̃‖_F from a zone boundary to +∞, split into a resolved oscillatory
/// window, its linearized tail, the smooth μ-driven piece, and its tail.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InterzoneResidual {
    pub xi_norm: f64,
    /// Lower integration limit: t_D(ξ) for |ξ| ≤ N, else t_H(ξ).
    pub t_start: f64,
    /// Upper bound on ∫_{t_start}^∞ ‖R̃‖_F dt.
    pub integral: f64,
    /// Contribution of the conjugated R̃₂ piece (resolved + linearized tail).
    pub oscillatory_part: f64,
    /// Contribution of the −M̃₂⁻¹ ∂_t M̃₂ piece.
    pub smooth_part: f64,
    /// Analytic remainder charged beyond the numeric windows.
    pub tail_bound: f64,
    /// integral / ϱ(|ξ|): the weighted constant relevant above N.
    pub rho_ratio: f64,
}

/// Frobenius norm of M̃₂⁻¹ R̃₂ M̃₂ at one time (explicit sinh/cosh forms).
fn conjugated_oscillatory_norm(c: &DissipationCoefficient, xi_norm: f64, s: f64) -> Result<f64> {
    let i_val = c.oscillating().tail_integral(s)?.value;
    if i_val == 0.0 {
        return Ok(0.0);
    }
    let r_plus = Complex64::new(0.0, xi_norm * (i_val.cosh() - 1.0));
    let r_minus = Complex64::new(0.0, -xi_norm * i_val.sinh());
    let r2 = [[r_plus, -r_minus], [r_minus, -r_plus]];
    let (delta, _) =
        delta_lambda_values(Complex64::new(-0.5 * c.principal().eval(s), xi_norm), c64(-0.5 * c.principal().eval(s)))?;
    let m2 = [[c64(1.0), delta], [delta.conj(), c64(1.0)]];
    Ok(frobenius(&m2_mul(&m2_mul(&m2_inv(&m2)?, &r2), &m2)))
}

/// Frobenius norm of M̃₂⁻¹ ∂_t M̃₂ at one time:
/// √(2 |δ̃′|² (1 + |δ̃|²)) / (1 − |δ̃|²).
fn smooth_residual_norm(c: &DissipationCoefficient, xi_norm: f64, s: f64) -> Result<f64> {
    let dj = delta_tilde_jet(c, s, xi_norm, 1)?;
    let da = dj.value().norm_sqr();
    let dp = dj.coeff(1).norm_sqr();
    Ok((2.0 * dp * (1.0 + da)).sqrt() / (1.0 - da))
}

/// Upper bound on ∫_{boundary}^∞ ‖R̃‖_F dt for one frequency, starting from
/// t_D(ξ) when |ξ| ≤ N and from t_H(ξ) otherwise.  The oscillatory piece is
/// resolved by quadrature until the tail envelope of I falls below 10⁻²,
/// then bounded by κ₂ √2 |ξ| ∫|I| via the stabilization tail; the smooth
/// piece decays like μ′/|ξ| and gets a closed tail.  Divergent stabilization
/// tails surface as `Hypothesis` errors.
pub fn interzone_residual_integral(
    c: &DissipationCoefficient,
    zp: &ZonePartition,
    xi_norm: f64,
) -> Result<InterzoneResidual> {
    if !(xi_norm > 0.0) || !xi_norm.is_finite() {
        return Err(Error::Domain(format!(
            "residual integral needs |ξ| > 0, got {xi_norm}"
        )));
    }
    let t_start = if xi_norm <= zp.n_param() {
        zp.t_dissipative(xi_norm).expect("|ξ| <= N has a dissipative boundary")
    } else {
        zp.t_hyperbolic(xi_norm).expect("|ξ| > N has a hyperbolic boundary")
    };

    // Oscillatory piece: resolve until the envelope of I drops below the
    // linearization level, then charge κ₂ √2 |ξ| ∫_{T₁}^∞ |I|.
    let envelope = |t: f64| c.oscillating().tail_envelope(t);
    let mut osc_numeric = 0.0;
    let mut t_lin = t_start;
    if envelope(t_start) > LINEAR_ENVELOPE {
        let mut hi = t_start;
        while envelope(hi) > LINEAR_ENVELOPE {
            hi = 2.0 * (1.0 + hi) - 1.0;
            if hi > 1e12 {
                return Err(Error::Hypothesis(
                    "oscillation tail envelope does not decay below the linearization level; \
                     the residual integral cannot converge"
                        .into(),
                ));
            }
        }
        let mut lo = t_start;
        for _ in 0..60 {
            let mid = ((1.0 + lo) * (1.0 + hi)).sqrt() - 1.0;
            if envelope(mid) > LINEAR_ENVELOPE {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        t_lin = hi;
        let grid = oscillation_panels(c, t_start, t_lin)?;
        let vals: Vec<Complex64> = grid
            .nodes()
            .iter()
            .map(|&s| conjugated_oscillatory_norm(c, xi_norm, s).map(c64))
            .collect::<Result<_>>()?;
        osc_numeric = grid.total(&vals).re;
    }
    let stab = hypotheses::stabilization_tail(c, t_lin)?;
    let (delta0, _) = delta_lambda_values(
        Complex64::new(-0.5 * c.principal().eval(t_start), xi_norm),
        c64(-0.5 * c.principal().eval(t_start)),
    )?;
    let kappa2 = (1.0 + delta0.norm()) / (1.0 - delta0.norm());
    let osc_tail = kappa2 * std::f64::consts::SQRT_2 * 1.001 * xi_norm * stab.upper();

    // Smooth piece: quadrature on log panels out to T₂, then the closed
    // bound 0.8 μ(T₂)/|ξ| (|δ̃| ≤ 0.27 on the ray makes the constants mild).
    let mut smooth_numeric = 0.0;
    let mut smooth_tail = 0.0;
    if c.principal().mu0() > 0.0 {
        let t2 = 1e6f64.max(100.0 * (1.0 + t_start) - 1.0);
        let ratio = 10f64.powf(1.0 / SMOOTH_PANELS_PER_DECADE);
        let mut bounds = vec![t_start];
        let mut t = t_start;
        while t < t2 {
            t = ((1.0 + t) * ratio - 1.0).min(t2);
            bounds.push(t);
        }
        let grid = PanelGrid::from_bounds(bounds);
        let vals: Vec<Complex64> = grid
            .nodes()
            .iter()
            .map(|&s| smooth_residual_norm(c, xi_norm, s).map(c64))
            .collect::<Result<_>>()?;
        smooth_numeric = grid.total(&vals).re;
        smooth_tail = 0.8 * c.principal().eval(t2) / xi_norm;
    }

    let integral = osc_numeric + osc_tail + smooth_numeric + smooth_tail;
    Ok(InterzoneResidual {
        xi_norm,
        t_start,
        integral,
        oscillatory_part: osc_numeric + osc_tail,
        smooth_part: smooth_numeric + smooth_tail,
        tail_bound: osc_tail + smooth_tail,
        rho_ratio: integral / zp.weight().rho(xi_norm),
    })
}

// ---------------------------------------------------------------------------
// 2×2 complex value-level helpers.
// ---------------------------------------------------------------------------

type Mat2 = [[Complex64; 2]; 2];

fn c64(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn m2_diag(a: Complex64, d: Complex64) -> Mat2 {
    [[a, c64(0.0)], [c64(0.0), d]]
}

fn m2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[c64(0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn m2_add(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

fn m2_sub(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]]
}

fn m2_inv(a: &Mat2) -> Result<Mat2> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.norm() == 0.0 {
        return Err(Error::Domain("singular 2×2 transform".into()));
    }
    Ok([[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]])
}

fn frobenius(a: &Mat2) -> f64 {
    (a[0][0].norm_sqr() + a[0][1].norm_sqr() + a[1][0].norm_sqr() + a[1][1].norm_sqr()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{OscillatingPart, PrincipalPart};
    use crate::modes::{integrate_mode_sampled, ModeState};
    use crate::zones::{WeightFunction, Zone};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn coeff(mu0: f64, sigma: OscillatingPart, m: usize) -> DissipationCoefficient {
        DissipationCoefficient::new(
            PrincipalPart::new(mu0).unwrap(),
            sigma,
            m,
        )
        .unwrap()
    }

    fn sine(p: f64, q: f64) -> OscillatingPart {
        OscillatingPart::sine(p, q).unwrap()
    }

    fn partition(n: f64, mu0: f64, p: f64, q: f64, m: usize) -> ZonePartition {
        ZonePartition::new(
            n,
            PrincipalPart::new(mu0).unwrap(),
            RateFunctions::for_sine(p, q, m).unwrap(),
            WeightFunction::Unit,
        )
        .unwrap()
    }

    #[test]
    fn rd_step_keeps_zero_off_diagonal() {
        let phi = Jet::constant(Complex64::new(-0.3, 2.0), 2);
        let r = Jet::zero(2);
        let step = rd_step(&phi, &r).unwrap();
        assert_eq!(step.delta.max_coeff_norm(), 0.0);
        assert_eq!(step.next_r.max_coeff_norm(), 0.0);
        assert_relative_eq!(step.lambda.value().re, -0.3, max_relative = 1e-15);
        assert_relative_eq!(step.lambda.value().im, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn rd_step_matches_worked_value() {
        // φ = i − 1/2, r = −1/2: δ = i·(−1/2)/(1·(1+√(3/4))) ≈ −0.26795 i.
        let phi = Jet::constant(Complex64::new(-0.5, 1.0), 1);
        let r = Jet::constant(c64(-0.5), 1);
        let step = rd_step(&phi, &r).unwrap();
        let d = step.delta.value();
        assert_relative_eq!(d.re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(d.im, -0.5 / (1.0 + 0.75f64.sqrt()), max_relative = 1e-14);
        let lam = step.lambda.value();
        assert_relative_eq!(lam.re, -0.5, max_relative = 1e-15);
        assert_relative_eq!(lam.im, 0.75f64.sqrt(), max_relative = 1e-15);
        // Constant coefficients: the step terminates the hierarchy exactly.
        assert!(step.next_r.max_coeff_norm() < 1e-16);
    }

    #[test]
    fn diagonalization_residual_vanishes_on_random_pairs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let im: f64 = rng.gen_range(0.05..10.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let re: f64 = rng.gen_range(-3.0..3.0);
            let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let r_abs = rng.gen_range(0.0..0.95) * im.abs();
            let r = Complex64::from_polar(r_abs, angle);
            let res = diagonalization_residual(Complex64::new(re, im), r).unwrap();
            assert!(res < 1e-12, "residual {res} for phi = {re}+{im}i, r = {r}");
        }
    }

    #[test]
    fn breakdown_is_reported_with_magnitudes() {
        let err = diagonalization_residual(Complex64::new(0.0, 0.4), c64(0.5)).unwrap_err();
        match err {
            Error::DiagBreakdown { r_abs, phi_im, .. } => {
                assert_relative_eq!(r_abs, 0.5);
                assert_relative_eq!(phi_im, 0.4);
            }
            other => panic!("expected breakdown, got {other}"),
        }
    }

    #[test]
    fn hierarchy_orders_shrink_and_deltas_stay_small() {
        let c = coeff(0.5, OscillatingPart::Zero, 4);
        let levels = build_hierarchy(&c, 0.0, 10.0, 2).unwrap();
        assert_eq!(levels.len(), 3);
        for (k, lvl) in levels.iter().enumerate() {
            assert_eq!(lvl.k, k);
            assert_eq!(lvl.phi.order(), 2 - k);
            assert!(lvl.delta.value().norm() <= 0.5, "level {k}");
        }
        // δ₀ ≈ b/(4|ξ|) for small b/|ξ|: b(0) = 0.5, so ≈ 0.0125.
        assert_relative_eq!(levels[0].delta.value().norm(), 0.0125, max_relative = 1e-3);
    }

    #[test]
    fn hierarchy_rejects_excess_smoothness() {
        let c = coeff(0.5, OscillatingPart::Zero, 2);
        match build_hierarchy(&c, 0.0, 10.0, 3) {
            Err(Error::SmoothnessExceeded { requested: 3, available: 2 }) => {}
            other => panic!("expected smoothness error, got {other:?}"),
        }
    }

    #[test]
    fn phi_identity_holds_through_three_levels() {
        let c = coeff(0.5, sine(-1.0, 3.0), 4);
        for m in 1..=3 {
            for &(t, xi) in &[(0.0, 7.0), (2.0, 5.0), (0.5, 30.0)] {
                let defect = phi_identity_defect(&c, t, xi, m).unwrap();
                assert!(defect < 1e-9, "m = {m}, t = {t}, xi = {xi}: defect {defect}");
            }
        }
    }

    #[test]
    fn hyperbolic_grid_points_classify_hyperbolic() {
        let zp = partition(4.0, 0.3, -1.0, 3.0, 2);
        let grid = hyperbolic_grid(&zp, 6, 6, 50.0, 256.0);
        assert!(!grid.is_empty());
        for &(t, xi) in &grid {
            assert_eq!(zp.classify(t, xi).unwrap(), Zone::Hyperbolic, "({t}, {xi})");
        }
    }

    #[test]
    fn symbol_scan_finds_finite_suprema_and_threshold() {
        let m = 1;
        let c = coeff(0.5, sine(-1.0, 2.0), m + 1);
        let zp = partition(8.0, 0.5, -1.0, 2.0, m);
        let rates = RateFunctions::for_sine(-1.0, 2.0, m).unwrap();
        let grid = hyperbolic_grid(&zp, 12, 12, 100.0, 512.0);
        let scan = symbol_scan(&c, &zp, &rates, m, &grid).unwrap();
        assert_eq!(scan.r_suprema.len(), m + 1);
        for (k, sup) in scan.r_suprema.iter().enumerate() {
            assert!(sup.is_finite() && *sup > 0.0, "level {k}: {sup}");
        }
        let n0 = scan.n0.expect("a finite admissible threshold exists");
        assert!(n0 <= MAX_N_SCAN);
        assert_eq!(scan.rows.len(), grid.len() * (m + 1));
    }

    #[test]
    fn r_symbol_slopes_gain_one_power_per_level() {
        let c = coeff(0.5, sine(-1.0, 2.0), 3);
        let zp = partition(8.0, 0.5, -1.0, 2.0, 2);
        let slopes = r_symbol_slopes(&c, &zp, 2, 0.0, 24, 4096.0).unwrap();
        assert!(slopes[0].abs() < 0.1, "level 0 slope {}", slopes[0]);
        assert!(slopes[1] <= -0.9, "level 1 slope {}", slopes[1]);
        assert!(slopes[2] <= -1.9, "level 2 slope {}", slopes[2]);
    }

    #[test]
    fn diagonalized_free_wave_is_isometric() {
        // b ≡ 0: every level is already diagonal with purely imaginary λ.
        let c = DissipationCoefficient::new(
            PrincipalPart::new(0.0).unwrap(),
            OscillatingPart::Zero,
            3,
        )
        .unwrap();
        let zp = partition(4.0, 0.0, -1.0, 3.0, 2);
        let v0 = [Complex64::new(0.3, -1.1), Complex64::new(0.8, 0.2)];
        let traj = integrate_diagonalized(&c, &zp, 100.0, 2, v0, 0.0, 10.0, 1e-10).unwrap();
        assert!(traj.exited);
        let e0 = traj.energy[0];
        for (&e, &g) in traj.energy.iter().zip(&traj.gronwall_integral) {
            assert_relative_eq!(e, e0, max_relative = 1e-8);
            assert!(g.abs() < 1e-12);
        }
    }

    #[test]
    fn gronwall_corridor_confines_the_diagonal_norm() {
        let c = coeff(0.3, sine(-1.0, 3.0), 3);
        let zp = partition(4.0, 0.3, -1.0, 3.0, 2);
        let xi = 100.0;
        let th = zp.t_hyperbolic(xi).unwrap();
        assert_relative_eq!(th, 4.0, max_relative = 1e-12);
        let v0 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, -0.5)];
        let traj = integrate_diagonalized(&c, &zp, xi, 2, v0, 0.0, th, 1e-10).unwrap();
        let n0 = traj.vm_norm_sq[0];
        for i in 0..traj.times.len() {
            let growth = (traj.vm_norm_sq[i] / n0).ln();
            let center = traj.phi_re_integral[i];
            let width = traj.gronwall_integral[i];
            assert!(
                growth <= center + width + 1e-6 && growth >= center - width - 1e-6,
                "t = {}: log growth {growth} outside [{}, {}]",
                traj.times[i],
                center - width,
                center + width
            );
        }
    }

    #[test]
    fn back_mapped_state_matches_direct_integration() {
        let c = coeff(0.3, sine(-1.0, 3.0), 3);
        let zp = partition(4.0, 0.3, -1.0, 3.0, 2);
        let xi = 100.0;
        let th = zp.t_hyperbolic(xi).unwrap();
        let v0 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, -0.5)];
        let traj = integrate_diagonalized(&c, &zp, xi, 2, v0, 0.0, th, 1e-11).unwrap();
        let initial = ModeState::new(xi, v0[0], v0[1], 0.0);
        let direct =
            integrate_mode_sampled(&c, &initial, th, 1e-11, 1e-14, &traj.times).unwrap();
        assert_eq!(direct.samples.len(), traj.times.len());
        for (i, s) in direct.samples.iter().enumerate() {
            let scale = s.energy.sqrt();
            assert!(
                (traj.v[i][0] - s.state.v_scaled).norm() < 1e-6 * scale
                    && (traj.v[i][1] - s.state.v_t).norm() < 1e-6 * scale,
                "sample {i} at t = {}",
                traj.times[i]
            );
            assert_relative_eq!(traj.energy[i], s.energy, max_relative = 1e-7);
        }
    }

    #[test]
    fn diagonalized_run_rejects_low_frequencies() {
        let c = coeff(0.3, sine(-1.0, 3.0), 3);
        let zp = partition(4.0, 0.3, -1.0, 3.0, 2);
        let v0 = [c64(1.0), c64(0.0)];
        assert!(matches!(
            integrate_diagonalized(&c, &zp, 1.0, 2, v0, 0.0, 5.0, 1e-9),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn interzone_transform_is_trivial_without_oscillation() {
        let c = coeff(0.5, OscillatingPart::Zero, 3);
        let tr = interzone_transform(&c, 3.0, 2.0).unwrap();
        assert_eq!(tr.omega, 1.0);
        assert_eq!(frobenius(&tr.r2), 0.0);
        // λ̃ keeps Re = −μ/2 exactly by construction.
        assert_eq!(tr.lambda_tilde.re, -0.5 * tr.mu);
        // δ̃ is purely imaginary.
        assert_eq!(tr.delta_tilde.re, 0.0);
        // The only residual left is the derivative term, which is O(μ′/|ξ|).
        assert!(frobenius(&tr.r_tilde) < 0.1);
    }

    #[test]
    fn interzone_defect_vanishes_at_random_points() {
        let c = coeff(0.5, sine(-1.0, 3.0), 3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let t: f64 = rng.gen_range(0.5..50.0);
            let xi: f64 = rng.gen_range(0.5..40.0);
            let defect = interzone_defect(&c, t, xi).unwrap();
            assert!(defect < 1e-9, "t = {t}, xi = {xi}: defect {defect}");
        }
        let quiet = coeff(0.5, OscillatingPart::Zero, 3);
        assert!(interzone_defect(&quiet, 2.0, 1.0).unwrap() < 1e-12);
    }

    #[test]
    fn residual_integral_is_finite_from_both_boundaries() {
        let c = coeff(0.5, sine(-1.0, 3.0), 3);
        let zp = partition(2.0, 0.5, -1.0, 3.0, 2);
        // From the dissipative boundary t_D(1) = 1.
        let low = interzone_residual_integral(&c, &zp, 1.0).unwrap();
        assert_relative_eq!(low.t_start, 1.0, max_relative = 1e-12);
        assert!(low.integral.is_finite() && low.integral > 0.0);
        assert!(low.tail_bound < low.integral);
        // From the hyperbolic boundary for |ξ| > N.
        let high = interzone_residual_integral(&c, &zp, 8.0).unwrap();
        assert_relative_eq!(high.t_start, zp.t_hyperbolic(8.0).unwrap(), max_relative = 1e-12);
        assert!(high.integral.is_finite() && high.rho_ratio.is_finite());
    }

    #[test]
    fn residual_integral_rejects_divergent_tails() {
        // p ≥ q − 1 makes ∫^∞ σ divergent: the transform has no ω.
        let c = coeff(0.5, sine(2.5, 3.0), 2);
        let zp = partition(2.0, 0.5, -1.0, 3.0, 2);
        assert!(matches!(
            interzone_residual_integral(&c, &zp, 1.0),
            Err(Error::Hypothesis(_))
        ));
    }
}
