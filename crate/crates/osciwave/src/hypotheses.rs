//! Numerical verification of the structural hypotheses on b(t) and the
//! threshold exponents that decide when they are satisfiable.
//!
//! The machinery downstream only uses b through four quantitative facts:
//!
//! * stabilization: ∫_t^∞ |∫_s^∞ σ| ds ≤ Θ(t)⁻¹ for an increasing rate Θ;
//! * derivative bounds: |b^(k)(t)| ≤ Ξ(t)^(k+1) for k = 0..m;
//! * compatibility of Ξ with Θ (directly, or through ζ⁻¹∘Θ when energies are
//!   measured with a weight ρ);
//! * an averaged smallness condition involving ∫₀ᵗ Ξ^(m+1).
//!
//! This module measures the best constants in each on honest scan grids and
//! evaluates the closed-form admissibility thresholds (β₀, β̃₀, p₁, p̃₁, p₂,
//! p̃₂) for the two oscillation families.

use serde::Serialize;

use crate::coeffs::{DissipationCoefficient, OscillatingPart};
use crate::quad::Estimate;
use crate::zones::WeightFunction;
use crate::{Error, Result};

/// Power-law comparison rates Θ(t) = C₁(1+t)^(−α) (increasing: α < 0) and
/// Ξ(t) = (1+t)^(−β).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFunctions {
    alpha: f64,
    beta: f64,
    scale: f64,
}

impl RateFunctions {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        Self::with_scale(alpha, beta, 1.0)
    }

    pub fn with_scale(alpha: f64, beta: f64, scale: f64) -> Result<Self> {
        if !(alpha < 0.0) || !alpha.is_finite() {
            return Err(Error::Config(format!(
                "Θ must be strictly increasing: need alpha < 0, got {alpha}"
            )));
        }
        if !beta.is_finite() {
            return Err(Error::Config(format!("Ξ exponent beta must be finite, got {beta}")));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Config(format!("Θ scale must be positive, got {scale}")));
        }
        Ok(RateFunctions { alpha, beta, scale })
    }

    /// Same exponents with a new scale (used by the zone normalization).
    pub fn rescaled(&self, scale: f64) -> Result<Self> {
        Self::with_scale(self.alpha, self.beta, scale)
    }

    /// Rates matched to the sine family: the stabilization tail decays like
    /// (1+t)^(p−q+2) and the k-th derivative like (1+t)^(p+k(q−1)), giving
    /// α = p−q+2 and β = −q+1+(−p+q−1)/(m+1).
    pub fn for_sine(p: f64, q: f64, m: usize) -> Result<Self> {
        let alpha = p - q + 2.0;
        let beta = -q + 1.0 + (-p + q - 1.0) / (m as f64 + 1.0);
        Self::new(alpha, beta)
    }

    /// Rates matched to the bump-train family: burst cancellation improves
    /// the tail exponent to α = p−2q+2+(h+1)/r; derivative growth is as for
    /// the sine family.
    pub fn for_bump_train(p: f64, q: f64, r: f64, h: f64, m: usize) -> Result<Self> {
        let alpha = p - 2.0 * q + 2.0 + (h + 1.0) / r;
        let beta = -q + 1.0 + (-p + q - 1.0) / (m as f64 + 1.0);
        Self::new(alpha, beta)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn theta(&self, t: f64) -> f64 {
        self.scale * (1.0 + t).powf(-self.alpha)
    }

    /// Θ⁻¹(y) for y ≥ Θ(0); monotone closed form.
    pub fn theta_inverse(&self, y: f64) -> f64 {
        debug_assert!(y > 0.0);
        (y / self.scale).powf(-1.0 / self.alpha) - 1.0
    }

    pub fn xi(&self, t: f64) -> f64 {
        (1.0 + t).powf(-self.beta)
    }

    /// ∫₀ᵗ Ξ(s)^(m+1) ds in closed form; β(m+1) = 1 is the logarithmic
    /// degenerate case the power-law analysis excludes.
    pub fn xi_power_integral(&self, t: f64, m: usize) -> Result<f64> {
        let e = 1.0 - self.beta * (m as f64 + 1.0);
        if e.abs() < 1e-9 {
            return Err(Error::Domain(format!(
                "excluded parameter: beta*(m+1) = {} is too close to 1",
                self.beta * (m as f64 + 1.0)
            )));
        }
        Ok(((1.0 + t).powf(e) - 1.0) / e)
    }
}

/// Admissibility thresholds for the oscillation exponent p and the
/// derivative-rate exponent β.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Largest β compatible with the unweighted conditions: m/(m+1)·α + 1/(m+1).
    pub beta0: f64,
    /// Weighted (Gevrey-ν) counterpart: (m/(m+1) + 1/(ν−1))·α + 1/(m+1).
    pub beta0_tilde: f64,
    /// Largest sine amplitude exponent, unweighted: −1.
    pub p1: f64,
    /// Weighted: −1 + (q−1)/ν.
    pub p1_tilde: f64,
    /// Largest bump-train amplitude exponent, unweighted.
    pub p2: f64,
    /// Weighted bump-train threshold.
    pub p2_tilde: f64,
}

/// Closed-form thresholds.  `nu = f64::INFINITY` is allowed and yields the
/// unweighted limits for the tilde entries.
pub fn thresholds(alpha: f64, m: usize, q: f64, r: f64, h: f64, nu: f64) -> Result<Thresholds> {
    if !(alpha < 0.0) {
        return Err(Error::Domain(format!("threshold formulas need alpha < 0, got {alpha}")));
    }
    if m == 0 {
        return Err(Error::Domain("threshold formulas need m >= 1".into()));
    }
    if !(q > 1.0) {
        return Err(Error::Domain(format!("threshold formulas need q > 1, got {q}")));
    }
    if !(r >= 1.0) {
        return Err(Error::Domain(format!("threshold formulas need r >= 1, got {r}")));
    }
    if !(nu > 1.0) {
        return Err(Error::Domain(format!("threshold formulas need nu > 1, got {nu}")));
    }
    let mf = m as f64;
    let mm = mf / (mf + 1.0);
    // h = rq−1 makes the burst gap q−(h+1)/r vanish identically; compute it
    // as exactly zero there so the collapse p₂ = p₁ is bit-exact.
    let gap = if h + 1.0 == r * q { 0.0 } else { q - (h + 1.0) / r };
    Ok(Thresholds {
        beta0: mm * alpha + 1.0 / (mf + 1.0),
        beta0_tilde: (mm + 1.0 / (nu - 1.0)) * alpha + 1.0 / (mf + 1.0),
        p1: -1.0,
        p1_tilde: -1.0 + (q - 1.0) / nu,
        p2: -1.0 + mm * gap,
        p2_tilde: -1.0 + (q - 1.0) / nu + (mm + 1.0 / (nu * (mf + 1.0))) * gap,
    })
}

/// The stabilization double tail ∫_t^∞ |∫_s^∞ σ(τ) dτ| ds with an honest
/// error bar; zero for σ ≡ 0, hypothesis-violated error when divergent.
pub fn stabilization_tail(c: &DissipationCoefficient, t: f64) -> Result<Estimate> {
    c.oscillating().stabilization_tail(t)
}

/// sup over `grid` of Θ(t) · stabilization_tail(t); +∞ when the tail
/// diverges, so the caller can always compare against a finiteness claim.
pub fn check_stabilization_constant(
    c: &DissipationCoefficient,
    rf: &RateFunctions,
    grid: &[f64],
) -> f64 {
    let mut sup = 0.0f64;
    for &t in grid {
        match c.oscillating().stabilization_tail(t) {
            Ok(est) => sup = sup.max(rf.theta(t) * est.upper()),
            Err(_) => return f64::INFINITY,
        }
    }
    sup
}

/// Per-order suprema sup_t |b^(k)(t)| / Ξ(t)^(k+1) for k = 0..m.
pub fn check_cm_constant(
    c: &DissipationCoefficient,
    rf: &RateFunctions,
    grid: &[f64],
) -> Result<Vec<f64>> {
    let m = c.smoothness();
    let mut sup = vec![0.0f64; m + 1];
    for &t in grid {
        let jet = c.jet(t, m)?;
        for (k, s) in sup.iter_mut().enumerate() {
            let xi_pow = rf.xi(t).powi(k as i32 + 1);
            *s = s.max(jet.derivative(k).norm() / xi_pow);
        }
    }
    Ok(sup)
}

/// Suprema of the compatibility conditions over a log grid on [0, 10⁶].
///
/// Without a weight: (sup Ξ/Θ, sup Θ^(−m) ∫₀ᵗ Ξ^(m+1)).
/// With a weight ρ: (sup Ξ/ζ⁻¹(Θ), sup Θ/ζ⁻¹(Θ)^(m+1) · ∫₀ᵗ Ξ^(m+1)).
pub fn condition_suprema(
    rf: &RateFunctions,
    m: usize,
    weight: Option<&WeightFunction>,
) -> Result<(f64, f64)> {
    let grid = log_grid(1e6, 400);
    let mut xith = 0.0f64;
    let mut ass = 0.0f64;
    for &t in &grid {
        let theta = rf.theta(t);
        let xi = rf.xi(t);
        let integral = rf.xi_power_integral(t, m)?;
        match weight {
            None => {
                xith = xith.max(xi / theta);
                ass = ass.max(theta.powi(-(m as i32)) * integral);
            }
            Some(w) => {
                let k = w.zeta_inverse(theta)?;
                xith = xith.max(xi / k);
                ass = ass.max(theta / k.powi(m as i32 + 1) * integral);
            }
        }
    }
    Ok((xith, ass))
}

/// `points` log-spaced times with 1+t geometric on [1, 1+t_max]; starts at
/// exactly t = 0.
pub fn log_grid(t_max: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && t_max > 0.0);
    let top = (1.0 + t_max).ln();
    (0..points)
        .map(|i| (top * i as f64 / (points - 1) as f64).exp() - 1.0)
        .collect()
}

/// Default scan grid: 400 log-spaced points on [0, 10⁴], plus 32 interior
/// points in each of the first 50 bursts for bump trains (the burst
/// interiors are where the derivative bounds peak).
pub fn default_scan_grid(c: &DissipationCoefficient) -> Vec<f64> {
    let mut grid = log_grid(1e4, 400);
    if let OscillatingPart::BumpTrain { q, r, h, .. } = c.oscillating() {
        for n in 1..=50usize {
            let nf = n as f64;
            let start = nf.powf(*r);
            let width = nf.powf(*h).floor() * start.powf(1.0 - q);
            for i in 0..32 {
                grid.push(start + width * (i as f64 + 0.5) / 32.0);
            }
        }
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    grid
}

fn serialize_extended<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

fn serialize_extended_vec<S: serde::Serializer>(
    v: &[f64],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        if x.is_finite() {
            seq.serialize_element(x)?;
        } else {
            seq.serialize_element(if x.is_nan() {
                "nan"
            } else if *x > 0.0 {
                "inf"
            } else {
                "-inf"
            })?;
        }
    }
    seq.end()
}

/// Measured hypothesis constants plus the closed-form thresholds, ready for
/// JSON emission (non-finite entries serialize as "inf"/"nan" strings).
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    #[serde(serialize_with = "serialize_extended")]
    pub stabilization_constant: f64,
    #[serde(serialize_with = "serialize_extended_vec")]
    pub cm_constants: Vec<f64>,
    #[serde(serialize_with = "serialize_extended")]
    pub xith_supremum: f64,
    #[serde(serialize_with = "serialize_extended")]
    pub ass_supremum: f64,
    /// Absent for σ ≡ 0 (no oscillation exponents to threshold).
    pub thresholds: Option<Thresholds>,
}

/// Assemble the full report for a coefficient against rates and an optional
/// weight.  The sine family sits on the bump-train boundary h = rq−1 (its
/// thresholds collapse to p₁/p̃₁ there), so its record is reported that way;
/// non-Gevrey weights take the ν → ∞ limits of the tilde entries.
pub fn build_report(
    c: &DissipationCoefficient,
    rf: &RateFunctions,
    weight: Option<&WeightFunction>,
) -> Result<HypothesisReport> {
    let grid = default_scan_grid(c);
    let stabilization_constant = check_stabilization_constant(c, rf, &grid);
    let cm_constants = check_cm_constant(c, rf, &grid)?;
    let (xith_supremum, ass_supremum) = condition_suprema(rf, c.smoothness(), weight)?;
    let nu_eff = match weight {
        Some(WeightFunction::Gevrey { nu }) => *nu,
        _ => f64::INFINITY,
    };
    let m = c.smoothness();
    let thresholds = match c.oscillating() {
        OscillatingPart::Zero => None,
        OscillatingPart::Sine { q, .. } => {
            Some(thresholds(rf.alpha(), m, *q, 1.0, *q - 1.0, nu_eff)?)
        }
        OscillatingPart::BumpTrain { q, r, h, .. } => {
            Some(thresholds(rf.alpha(), m, *q, *r, *h, nu_eff)?)
        }
    };
    Ok(HypothesisReport {
        stabilization_constant,
        cm_constants,
        xith_supremum,
        ass_supremum,
        thresholds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{BumpProfile, PrincipalPart};
    use approx::assert_relative_eq;

    fn coefficient(sigma: OscillatingPart, m: usize) -> DissipationCoefficient {
        DissipationCoefficient::new(PrincipalPart::new(0.5).unwrap(), sigma, m).unwrap()
    }

    #[test]
    fn threshold_substitution_examples() {
        // q=4, ν=2: weighted sine threshold is −1 + 3/2 = 0.5.
        let th = thresholds(-1.0, 1, 4.0, 1.0, 3.0, 2.0).unwrap();
        assert_relative_eq!(th.p1_tilde, 0.5, epsilon = 1e-15);
        assert_eq!(th.p1, -1.0);

        // q=2, r=1, h=0, m=1: p₂ = −1 + (1/2)(2−1) = −0.5.
        let th = thresholds(-1.0, 1, 2.0, 1.0, 0.0, 2.0).unwrap();
        assert_relative_eq!(th.p2, -0.5, epsilon = 1e-15);

        // β₀(−1, 1) = 0 and β̃₀(−1, 1, 2) = −1.
        assert_relative_eq!(th.beta0, 0.0, epsilon = 1e-15);
        assert_relative_eq!(th.beta0_tilde, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn threshold_collapse_at_critical_burst_length() {
        // h = rq−1 ⇒ p₂ = p₁ and p̃₂ = p̃₁, exactly.
        for &(q, r, nu) in &[(2.0, 1.0, 2.0), (3.0, 1.5, 4.0), (2.5, 2.0, 1.5)] {
            let h = r * q - 1.0;
            for m in 1..=4 {
                let th = thresholds(-1.0, m, q, r, h, nu).unwrap();
                assert_eq!(th.p2, th.p1, "q={q} r={r} m={m}");
                assert_eq!(th.p2_tilde, th.p1_tilde, "q={q} r={r} m={m}");
            }
        }
    }

    #[test]
    fn threshold_monotonicity() {
        // p̃₁ strictly decreasing in ν with limit p₁.
        let mut prev = f64::INFINITY;
        for &nu in &[1.5, 2.0, 4.0, 16.0, 1e3, 1e6] {
            let th = thresholds(-1.0, 2, 3.0, 1.0, 0.5, nu).unwrap();
            assert!(th.p1_tilde < prev);
            prev = th.p1_tilde;
        }
        assert!((prev - (-1.0)).abs() < 1e-5, "limit p₁ at large ν");

        // β̃₀ increasing in ν with limit β₀.
        let mut prev = f64::NEG_INFINITY;
        let mut last = 0.0;
        for &nu in &[1.5, 2.0, 4.0, 16.0, 1e3, 1e6] {
            let th = thresholds(-0.7, 3, 3.0, 1.0, 0.5, nu).unwrap();
            assert!(th.beta0_tilde > prev);
            prev = th.beta0_tilde;
            last = th.beta0;
        }
        assert!((prev - last).abs() < 1e-5, "limit β₀ at large ν");

        // p₂ and p̃₂ increasing in q.
        let mut prev2 = f64::NEG_INFINITY;
        let mut prev2t = f64::NEG_INFINITY;
        for &q in &[1.5, 2.0, 3.0, 4.0, 6.0] {
            let th = thresholds(-1.0, 1, q, 2.0, 0.5, 2.0).unwrap();
            assert!(th.p2 > prev2 && th.p2_tilde > prev2t, "q={q}");
            prev2 = th.p2;
            prev2t = th.p2_tilde;
        }
    }

    #[test]
    fn threshold_domain_errors() {
        assert!(thresholds(-1.0, 1, 1.0, 1.0, 0.0, 2.0).is_err());
        assert!(thresholds(-1.0, 1, 2.0, 0.5, 0.0, 2.0).is_err());
        assert!(thresholds(-1.0, 1, 2.0, 1.0, 0.0, 1.0).is_err());
        assert!(thresholds(0.0, 1, 2.0, 1.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn stabilization_tail_zero_sigma() {
        let c = coefficient(OscillatingPart::Zero, 1);
        assert_eq!(stabilization_tail(&c, 3.0).unwrap().value, 0.0);
    }

    #[test]
    fn sine_stabilization_tail_scales_like_its_rate() {
        // T(t)/(1+t)^(p−q+2) bounded (and bounded below) on a grid, and T is
        // nonincreasing with an analytic envelope T ≤ 2(1+t)^(p−q+2)/(q²(ν−γ)).
        let c = coefficient(OscillatingPart::sine(-1.0, 3.0).unwrap(), 1);
        let (p, q) = (-1.0, 3.0);
        let nu = (q - 1.0 - p) / q;
        let gamma = 1.0 / q;
        let mut prev = f64::INFINITY;
        for &t in &[0.0, 1.0, 10.0, 100.0] {
            let est = stabilization_tail(&c, t).unwrap();
            let rate = (1.0 + t).powf(p - q + 2.0);
            let ratio = est.value / rate;
            assert!(ratio.is_finite() && ratio > 0.0 && ratio < 10.0, "t={t}: {ratio}");
            assert!(est.upper() <= 2.0 / (q * q * (nu - gamma)) * rate * 1.001, "t={t}");
            assert!(est.value <= prev + 1e-12, "monotone at t={t}");
            prev = est.value;
        }
    }

    #[test]
    fn bump_stabilization_tail_scales_like_its_rate() {
        let profile = BumpProfile::new(1);
        let sigma = OscillatingPart::bump_train(-1.0, 2.0, 1.0, 0.0, profile).unwrap();
        let c = coefficient(sigma, 1);
        // exponent p−2q+2+(h+1)/r = −2.
        let mut prev = f64::INFINITY;
        for &t in &[0.0, 1.0, 10.0, 100.0] {
            let est = stabilization_tail(&c, t).unwrap();
            let ratio = est.value / (1.0 + t).powf(-2.0);
            assert!(ratio.is_finite() && ratio > 0.0 && ratio < 10.0, "t={t}: {ratio}");
            assert!(est.value <= prev + 1e-12);
            prev = est.value;
        }
    }

    #[test]
    fn stabilization_constant_finite_for_matched_rates() {
        let c = coefficient(OscillatingPart::Zero, 1);
        let rf = RateFunctions::new(-1.0, 0.0).unwrap();
        assert_eq!(check_stabilization_constant(&c, &rf, &default_scan_grid(&c)), 0.0);

        // Sine p=−1, q=3 with α = α₁ = −2.
        let c = coefficient(OscillatingPart::sine(-1.0, 3.0).unwrap(), 1);
        let rf = RateFunctions::for_sine(-1.0, 3.0, 1).unwrap();
        assert_relative_eq!(rf.alpha(), -2.0);
        let k = check_stabilization_constant(&c, &rf, &default_scan_grid(&c));
        assert!(k.is_finite() && k > 0.0, "constant {k}");

        // Sine p=0, q=3 with α=−1.
        let c = coefficient(OscillatingPart::sine(0.0, 3.0).unwrap(), 1);
        let rf = RateFunctions::new(-1.0, 0.0).unwrap();
        let k = check_stabilization_constant(&c, &rf, &default_scan_grid(&c));
        assert!(k.is_finite() && k > 0.0, "constant {k}");

        // Divergent case reports +∞.
        let c = coefficient(OscillatingPart::sine(1.5, 3.0).unwrap(), 1);
        let k = check_stabilization_constant(&c, &rf, &default_scan_grid(&c));
        assert!(k.is_infinite());
    }

    #[test]
    fn cm_constants_for_pure_principal_part() {
        // b = 0.5/(1+t), Ξ = (1+t)^(−1): |b^(k)|/Ξ^(k+1) = 0.5·k! exactly.
        let c = coefficient(OscillatingPart::Zero, 3);
        let rf = RateFunctions::new(-1.0, 1.0).unwrap();
        let sup = check_cm_constant(&c, &rf, &default_scan_grid(&c)).unwrap();
        for (k, s) in sup.iter().enumerate() {
            let expected = 0.5 * (1..=k).product::<usize>() as f64;
            assert_relative_eq!(*s, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn cm_constants_finite_for_matched_rates() {
        // Sine p=−1, q=2, m=1: β₁ = 0, so Ξ ≡ 1.
        let c = coefficient(OscillatingPart::sine(-1.0, 2.0).unwrap(), 1);
        let rf = RateFunctions::for_sine(-1.0, 2.0, 1).unwrap();
        assert_relative_eq!(rf.beta(), 0.0);
        for s in check_cm_constant(&c, &rf, &default_scan_grid(&c)).unwrap() {
            assert!(s.is_finite() && s > 0.0 && s < 50.0, "sup {s}");
        }

        // BumpTrain p=−1, q=2, r=1, h=0, m=1.
        let profile = BumpProfile::new(1);
        let sigma = OscillatingPart::bump_train(-1.0, 2.0, 1.0, 0.0, profile).unwrap();
        let c = coefficient(sigma, 1);
        let rf = RateFunctions::for_bump_train(-1.0, 2.0, 1.0, 0.0, 1).unwrap();
        for s in check_cm_constant(&c, &rf, &default_scan_grid(&c)).unwrap() {
            assert!(s.is_finite() && s > 0.0, "sup {s}");
        }
    }

    #[test]
    fn derivative_growth_matches_rate_on_bursts() {
        // |σ^(k)| ≲ (1+t)^(p+k(q−1)) with the supremum attained inside
        // bursts; scan the matched Ξ ratio on burst interiors far out.
        let profile = BumpProfile::new(2);
        let sigma = OscillatingPart::bump_train(-1.0, 2.0, 1.0, 1.0, profile).unwrap();
        let c = coefficient(sigma, 2);
        let rf = RateFunctions::for_bump_train(-1.0, 2.0, 1.0, 1.0, 2).unwrap();
        let mut grid = Vec::new();
        for n in [5usize, 20, 80, 300] {
            let start = n as f64;
            let width = (n as f64) * (n as f64).powf(-1.0);
            for i in 0..64 {
                grid.push(start + width * (i as f64 + 0.5) / 64.0);
            }
        }
        let sup = check_cm_constant(&c, &rf, &grid).unwrap();
        for (k, s) in sup.iter().enumerate() {
            assert!(s.is_finite() && *s < 1e3, "k={k}: {s}");
        }
    }

    #[test]
    fn condition_suprema_examples() {
        // α=−1, β=β₀(−1,1)=0, m=1, no weight.
        let rf = RateFunctions::new(-1.0, 0.0).unwrap();
        let (xith, ass) = condition_suprema(&rf, 1, None).unwrap();
        assert!(xith.is_finite() && ass.is_finite(), "({xith}, {ass})");
        assert_relative_eq!(xith, 1.0, max_relative = 1e-9);

        // α=−1, m=1, ν=2, β=β̃₀=−1 with the Gevrey weight.
        let rf = RateFunctions::new(-1.0, -1.0).unwrap();
        let w = WeightFunction::gevrey(2.0).unwrap();
        let (xith, ass) = condition_suprema(&rf, 1, Some(&w)).unwrap();
        assert!(xith.is_finite() && ass.is_finite(), "({xith}, {ass})");

        // Below the threshold (β < β̃₀) the averaged condition blows up:
        // Ξ grows faster than ζ⁻¹(Θ)^(m+1) can absorb.
        let rf_bad = RateFunctions::new(-1.0, -2.0).unwrap();
        let (_, ass_bad) = condition_suprema(&rf_bad, 1, Some(&w)).unwrap();
        assert!(ass_bad > 1e3, "{ass_bad}");
    }

    #[test]
    fn excluded_parameter_is_rejected() {
        let rf = RateFunctions::new(-1.0, 0.5).unwrap();
        assert!(matches!(condition_suprema(&rf, 1, None), Err(Error::Domain(_))));
    }

    #[test]
    fn rate_constructor_contracts() {
        assert!(RateFunctions::new(0.0, 1.0).is_err());
        assert!(RateFunctions::new(1.0, 1.0).is_err());
        assert!(RateFunctions::with_scale(-1.0, 0.0, 0.0).is_err());
        let rf = RateFunctions::with_scale(-2.0, 0.5, 3.0).unwrap();
        assert_relative_eq!(rf.theta(2.0), 3.0 * 9.0);
        assert_relative_eq!(rf.theta_inverse(rf.theta(7.3)), 7.3, max_relative = 1e-12);
    }

    #[test]
    fn xi_power_integral_closed_form() {
        let rf = RateFunctions::new(-1.0, 0.25).unwrap();
        // ∫₀ᵗ (1+s)^(−0.5) ds = 2(√(1+t) − 1) for m=1.
        let t = 8.0;
        assert_relative_eq!(
            rf.xi_power_integral(t, 1).unwrap(),
            2.0 * ((1.0f64 + t).sqrt() - 1.0),
            max_relative = 1e-13
        );
    }

    #[test]
    fn report_assembles_and_serializes() {
        let c = coefficient(OscillatingPart::sine(-1.0, 3.0).unwrap(), 1);
        let rf = RateFunctions::for_sine(-1.0, 3.0, 1).unwrap();
        let report = build_report(&c, &rf, None).unwrap();
        assert!(report.stabilization_constant.is_finite());
        assert_eq!(report.cm_constants.len(), 2);
        let th = report.thresholds.expect("sine has thresholds");
        // Sine reports on the h = rq−1 boundary: p₂ collapses onto p₁.
        assert_eq!(th.p2, th.p1);
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("stabilization_constant"));

        // Divergent stabilization still serializes (as "inf").
        let c = coefficient(OscillatingPart::sine(1.5, 3.0).unwrap(), 1);
        let report = build_report(&c, &rf, None).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"inf\""), "{json}");
    }
}
