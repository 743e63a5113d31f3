//! Fourier-mode dynamics: ∂_t V = A(t,ξ) V with A = [[0, i|ξ|], [i|ξ|, −b]],
//! where V = (i|ξ|v, ∂_t v) and 𝓔(t,ξ) = ‖V‖² = |ξ|²|v|² + |∂_t v|².
//!
//! Along every mode the damping dissipates energy according to the exact
//! identity d𝓔/dt = −2 b(t) |∂_t v|²; the integrator carries the accumulated
//! damping work as an extra state component so the identity can be checked
//! (or its violation measured) without re-quadrature.
//!
//! Far-field sweeps can optionally *drop* the oscillating part of b once its
//! remaining influence (measured by the inner-tail envelope) falls below a
//! threshold; past that time the mode runs on the monotone part alone, which
//! removes the need to resolve ever-faster coefficient oscillations.

use num_complex::Complex64;

use crate::coeffs::DissipationCoefficient;
use crate::rk::{self, Dopri5Options, IntegrationStats};
use crate::{Error, Result};

/// Largest supported integration horizon.
pub const MAX_HORIZON: f64 = 1e6;

/// Fraction of the fastest local period used as the step cap.
pub const STEP_FRACTION: f64 = 0.2;

/// Instantaneous state of one Fourier mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState {
    pub xi_norm: f64,
    /// i|ξ|·v(t,ξ).
    pub v_scaled: Complex64,
    /// ∂_t v(t,ξ).
    pub v_t: Complex64,
    pub t: f64,
}

impl ModeState {
    pub fn new(xi_norm: f64, v_scaled: Complex64, v_t: Complex64, t: f64) -> Self {
        ModeState { xi_norm, v_scaled, v_t, t }
    }

    /// 𝓔(t,ξ) = |i|ξ|v|² + |∂_t v|².
    pub fn energy_density(&self) -> f64 {
        self.v_scaled.norm_sqr() + self.v_t.norm_sqr()
    }
}

/// One dense-output sample along a trajectory.
#[derive(Debug, Clone, Copy)]
pub struct ModeSample {
    pub state: ModeState,
    pub energy: f64,
    /// ∫_{t₀}^t 2 b(s) |∂_t v|² ds accumulated by the integrator.
    pub damping_integral: f64,
}

/// A sampled trajectory of one mode.
#[derive(Debug, Clone)]
pub struct ModeTrajectory {
    pub xi_norm: f64,
    pub samples: Vec<ModeSample>,
    pub stats: IntegrationStats,
    pub rtol: f64,
    pub atol: f64,
}

impl ModeTrajectory {
    pub fn final_state(&self) -> &ModeState {
        &self.samples.last().expect("trajectory has samples").state
    }
}

/// The system matrix A(t,ξ).
pub fn assemble_a(c: &DissipationCoefficient, t: f64, xi_norm: f64) -> [[Complex64; 2]; 2] {
    let ix = Complex64::new(0.0, xi_norm);
    [
        [Complex64::new(0.0, 0.0), ix],
        [ix, Complex64::new(-c.eval(t), 0.0)],
    ]
}

/// `n` log-spaced sample times covering [t0, t_end] (1+t geometric), with
/// both endpoints included exactly.
pub fn sample_grid(t0: f64, t_end: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && t_end >= t0 && t0 >= 0.0);
    if t_end == t0 {
        return vec![t0; n.min(2)];
    }
    let lo = (1.0 + t0).ln();
    let hi = (1.0 + t_end).ln();
    let mut out: Vec<f64> = (0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp() - 1.0)
        .collect();
    out[0] = t0;
    let last = out.len() - 1;
    out[last] = t_end;
    out
}

fn pack(v_scaled: Complex64, v_t: Complex64, damping: f64) -> [f64; 5] {
    [v_scaled.re, v_scaled.im, v_t.re, v_t.im, damping]
}

fn unpack(y: &[f64; 5]) -> (Complex64, Complex64, f64) {
    (Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3]), y[4])
}

/// Integrate one mode with an arbitrary damping evaluator and step cap.
/// `samples` must be sorted and lie in [initial.t, t_end].
pub fn integrate_with(
    b_eval: &impl Fn(f64) -> f64,
    step_cap: &impl Fn(f64) -> f64,
    initial: &ModeState,
    t_end: f64,
    rtol: f64,
    atol: f64,
    samples: &[f64],
) -> Result<ModeTrajectory> {
    let xi = initial.xi_norm;
    let mut rhs = |t: f64, y: &[f64; 5]| -> [f64; 5] {
        let b = b_eval(t);
        [
            -xi * y[3],
            xi * y[2],
            -xi * y[1] - b * y[2],
            xi * y[0] - b * y[3],
            2.0 * b * (y[2] * y[2] + y[3] * y[3]),
        ]
    };
    let opts = Dopri5Options { rtol, atol, ..Default::default() };
    let cap = |t: f64| step_cap(t).max(1e-13);
    let (ys, stats) = rk::integrate_sampled(
        &mut rhs,
        initial.t,
        t_end,
        pack(initial.v_scaled, initial.v_t, 0.0),
        samples,
        &opts,
        &cap,
    )?;
    let samples = ys
        .iter()
        .zip(samples)
        .map(|(y, &t)| {
            let (v_scaled, v_t, damping_integral) = unpack(y);
            let state = ModeState { xi_norm: xi, v_scaled, v_t, t };
            ModeSample { state, energy: state.energy_density(), damping_integral }
        })
        .collect();
    Ok(ModeTrajectory { xi_norm: xi, samples, stats, rtol, atol })
}

/// Step cap resolving both the wave oscillation (rate |ξ|), the coefficient
/// oscillation, and the burst structure.
pub fn coefficient_step_cap(c: &DissipationCoefficient, xi_norm: f64) -> impl Fn(f64) -> f64 + '_ {
    move |t: f64| {
        let rate = xi_norm.max(c.oscillating().oscillation_rate(t)).max(1.0);
        (STEP_FRACTION * 2.0 * std::f64::consts::PI / rate).min(c.oscillating().max_step(t))
    }
}

/// Integrate one mode of the full coefficient, sampling on `samples`.
/// |ξ| = 0 is handled in closed form: v stays put and ∂_t v = v_t(t₀)·η_b.
pub fn integrate_mode_sampled(
    c: &DissipationCoefficient,
    initial: &ModeState,
    t_end: f64,
    rtol: f64,
    atol: f64,
    samples: &[f64],
) -> Result<ModeTrajectory> {
    if t_end > MAX_HORIZON {
        return Err(Error::Config(format!(
            "integration horizon {t_end} exceeds the supported maximum {MAX_HORIZON}"
        )));
    }
    if initial.xi_norm == 0.0 {
        let b0 = c.integral(initial.t)?.value;
        let e0 = initial.v_t.norm_sqr();
        let out = samples
            .iter()
            .map(|&t| {
                let decay = (-(c.integral(t).map(|e| e.value).unwrap_or(b0) - b0)).exp();
                let state = ModeState {
                    xi_norm: 0.0,
                    v_scaled: initial.v_scaled,
                    v_t: initial.v_t * decay,
                    t,
                };
                ModeSample {
                    state,
                    energy: state.energy_density(),
                    damping_integral: e0 * (1.0 - decay * decay),
                }
            })
            .collect();
        return Ok(ModeTrajectory {
            xi_norm: 0.0,
            samples: out,
            stats: IntegrationStats::default(),
            rtol,
            atol,
        });
    }
    let b_eval = |t: f64| c.eval(t);
    let cap = coefficient_step_cap(c, initial.xi_norm);
    integrate_with(&b_eval, &cap, initial, t_end, rtol, atol, samples)
}

/// As `integrate_mode_sampled` with the default 512-point log-time grid.
pub fn integrate_mode(
    c: &DissipationCoefficient,
    initial: &ModeState,
    t_end: f64,
    rtol: f64,
    atol: f64,
) -> Result<ModeTrajectory> {
    let samples = sample_grid(initial.t, t_end, 512);
    integrate_mode_sampled(c, initial, t_end, rtol, atol, &samples)
}

/// First time at which the oscillating part's remaining influence on the
/// mode, (1+|ξ|)·sup_{s≥t}|∫_s^∞σ|, drops below `eps` (None if never, or if
/// there is nothing to drop).
pub fn drop_time(c: &DissipationCoefficient, xi_norm: f64, eps: f64) -> Option<f64> {
    let sigma = c.oscillating();
    let weight = 1.0 + xi_norm;
    if sigma.tail_envelope(0.0) == 0.0 {
        return None;
    }
    if weight * sigma.tail_envelope(0.0) <= eps {
        return Some(0.0);
    }
    let mut hi = 1.0f64;
    let mut tries = 0;
    while weight * sigma.tail_envelope(hi) > eps {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return None;
        }
    }
    let mut lo = hi / 2.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if weight * sigma.tail_envelope(mid) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(hi)
}

/// Integrate with the full coefficient until `drop_time`, then with the
/// principal part alone.  An approximation controlled by `drop_eps`,
/// intended for far-field energy sweeps where resolving the coefficient
/// oscillation forever is prohibitive; pass `None` to disable.
pub fn integrate_mode_hybrid(
    c: &DissipationCoefficient,
    initial: &ModeState,
    t_end: f64,
    rtol: f64,
    atol: f64,
    samples: &[f64],
    drop_eps: Option<f64>,
) -> Result<ModeTrajectory> {
    let t_drop = match drop_eps.and_then(|eps| drop_time(c, initial.xi_norm, eps)) {
        Some(td) if td < t_end => td.max(initial.t),
        _ => return integrate_mode_sampled(c, initial, t_end, rtol, atol, samples),
    };
    let split = samples.partition_point(|&s| s <= t_drop);
    let mut head =
        integrate_mode_sampled(c, initial, t_drop, rtol, atol, &samples[..split])?;
    // Resume on the principal part alone.
    let state = ModeState {
        xi_norm: initial.xi_norm,
        v_scaled: Complex64::new(0.0, 0.0),
        v_t: Complex64::new(0.0, 0.0),
        t: t_drop,
    };
    let resume = {
        let mut s = state;
        // Continue from the head's true endpoint: integrate the head once
        // more including t_drop itself if it was not a sample.
        let end = integrate_mode_sampled(c, initial, t_drop, rtol, atol, &[t_drop])?;
        let fin = end.final_state();
        s.v_scaled = fin.v_scaled;
        s.v_t = fin.v_t;
        s
    };
    let pp = c.principal();
    let b_eval = |t: f64| pp.eval(t);
    let xi = initial.xi_norm;
    let cap = move |_t: f64| STEP_FRACTION * 2.0 * std::f64::consts::PI / xi.max(1.0);
    let tail = integrate_with(&b_eval, &cap, &resume, t_end, rtol, atol, &samples[split..])?;
    let head_damp = head.samples.last().map(|s| s.damping_integral).unwrap_or(0.0);
    head.samples.extend(tail.samples.into_iter().map(|mut s| {
        s.damping_integral += head_damp;
        s
    }));
    head.stats.accepted += tail.stats.accepted;
    head.stats.rejected += tail.stats.rejected;
    head.stats.rhs_evals += tail.stats.rhs_evals;
    Ok(head)
}

/// Max over consecutive sample pairs of
/// |𝓔(t₂) − 𝓔(t₁) + ∫_{t₁}^{t₂} 2b|v_t|²| / 𝓔(t₀).
pub fn energy_identity_residual(traj: &ModeTrajectory) -> Result<f64> {
    if traj.samples.len() < 2 {
        return Err(Error::Domain("energy identity needs at least two samples".into()));
    }
    let e0 = traj.samples[0].energy;
    if e0 == 0.0 {
        return Ok(0.0);
    }
    let mut worst = 0.0f64;
    for w in traj.samples.windows(2) {
        let defect =
            w[1].energy - w[0].energy + (w[1].damping_integral - w[0].damping_integral);
        worst = worst.max(defect.abs() / e0);
    }
    Ok(worst)
}

/// CSV rendering of a trajectory (shortest round-trip floats).
pub fn trajectory_csv(traj: &ModeTrajectory) -> String {
    let mut out = String::from("t,re_v_scaled,im_v_scaled,re_v_t,im_v_t,energy_density\n");
    for s in &traj.samples {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.state.t,
            s.state.v_scaled.re,
            s.state.v_scaled.im,
            s.state.v_t.re,
            s.state.v_t.im,
            s.energy
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{OscillatingPart, PrincipalPart};
    use approx::assert_relative_eq;

    fn coeff(mu0: f64, sigma: OscillatingPart, m: usize) -> DissipationCoefficient {
        DissipationCoefficient::new(PrincipalPart::new(mu0).unwrap(), sigma, m).unwrap()
    }

    #[test]
    fn system_matrix_entries() {
        let c = coeff(0.5, OscillatingPart::Zero, 1);
        let a = assemble_a(&c, 0.0, 2.0);
        assert_eq!(a[0][0], Complex64::new(0.0, 0.0));
        assert_eq!(a[0][1], Complex64::new(0.0, 2.0));
        assert_eq!(a[1][0], Complex64::new(0.0, 2.0));
        assert_relative_eq!(a[1][1].re, -0.5);
        // |ξ| = 0 degenerates to pure damping.
        let a0 = assemble_a(&c, 3.0, 0.0);
        assert_eq!(a0[0][1], Complex64::new(0.0, 0.0));
        assert_relative_eq!(a0[1][1].re, -c.eval(3.0), epsilon = 1e-15);
        // Trace identity.
        let jet = c.jet(3.0, 0).unwrap();
        assert!((a0[0][0] + a0[1][1] + jet.coeff(0)).norm() < 1e-15);
    }

    #[test]
    fn free_wave_conserves_energy() {
        let c = coeff(0.0, OscillatingPart::Zero, 1);
        let initial =
            ModeState::new(1.0, Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0), 0.0);
        let traj = integrate_mode(&c, &initial, 100.0, 1e-12, 1e-14).unwrap();
        for s in &traj.samples {
            assert!((s.energy / 1.0 - 1.0).abs() < 1e-8, "t={}", s.state.t);
        }
        assert!(energy_identity_residual(&traj).unwrap() < 1e-8);
    }

    #[test]
    fn constant_damping_matches_characteristic_roots() {
        // v'' + v' + 4v = 0 with v(0)=1, v'(0)=1:
        // v = e^(−t/2)(cos ωt + (3/2ω) sin ωt), ω = √15/2.
        let initial =
            ModeState::new(2.0, Complex64::new(0.0, 2.0), Complex64::new(1.0, 0.0), 0.0);
        let cap = |_: f64| 0.3;
        let samples = [0.0, 1.0, 2.5, 5.0];
        let traj =
            integrate_with(&|_| 1.0, &cap, &initial, 5.0, 1e-10, 1e-13, &samples).unwrap();
        let w = 15f64.sqrt() / 2.0;
        let t = 5.0f64;
        let v = (-t / 2.0).exp() * ((w * t).cos() + 1.5 / w * (w * t).sin());
        let vt_exact =
            -v / 2.0 + (-t / 2.0).exp() * (-w * (w * t).sin() + 1.5 * (w * t).cos());
        let s = traj.final_state();
        assert_relative_eq!(s.v_scaled.im, 2.0 * v, epsilon = 1e-7);
        assert_relative_eq!(s.v_t.re, vt_exact, epsilon = 1e-7);
        assert!(energy_identity_residual(&traj).unwrap() < 1e-6);
    }

    #[test]
    fn principal_decay_rate_is_mu0() {
        // μ₀ = 0.5 < 2: 𝓔 ~ (1+t)^(−0.5); the scaled energy stays bounded
        // above and below on [1, 10⁴].
        let c = coeff(0.5, OscillatingPart::Zero, 1);
        let initial =
            ModeState::new(1.0, Complex64::new(0.0, 1.0), Complex64::new(0.3, 0.0), 0.0);
        let traj = integrate_mode(&c, &initial, 1e4, 1e-9, 1e-12).unwrap();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for s in traj.samples.iter().filter(|s| s.state.t >= 1.0) {
            let scaled = s.energy * (1.0 + s.state.t).powf(0.5);
            lo = lo.min(scaled);
            hi = hi.max(scaled);
        }
        assert!(hi.is_finite() && hi < 20.0 && lo > 0.01, "range [{lo}, {hi}]");
        // Nonincreasing energy for b ≥ 0 (up to integrator tolerance).
        for w in traj.samples.windows(2) {
            assert!(w[1].energy <= w[0].energy * (1.0 + 1e-7));
        }
    }

    #[test]
    fn energy_lower_bound_exp_minus_2_int_b() {
        let c = coeff(0.5, OscillatingPart::sine(0.0, 2.0).unwrap(), 1);
        let initial =
            ModeState::new(2.0, Complex64::new(0.0, 0.8), Complex64::new(0.1, 0.4), 0.0);
        let traj = integrate_mode(&c, &initial, 50.0, 1e-10, 1e-13).unwrap();
        let e0 = traj.samples[0].energy;
        for s in &traj.samples {
            let floor = (-2.0 * c.integral(s.state.t).unwrap().value).exp() * e0;
            assert!(s.energy >= floor * (1.0 - 1e-6), "t={}", s.state.t);
        }
    }

    #[test]
    fn energy_identity_residual_oscillating() {
        let c = coeff(0.5, OscillatingPart::sine(0.0, 2.0).unwrap(), 1);
        let initial =
            ModeState::new(5.0, Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0), 0.0);
        let traj = integrate_mode(&c, &initial, 100.0, 1e-9, 1e-12).unwrap();
        assert!(energy_identity_residual(&traj).unwrap() < 1e-5);
    }

    #[test]
    fn tolerance_halving_converges() {
        let c = coeff(0.5, OscillatingPart::sine(0.0, 2.0).unwrap(), 1);
        let initial =
            ModeState::new(3.0, Complex64::new(0.0, 1.0), Complex64::new(0.2, 0.0), 0.0);
        let run = |rtol: f64| {
            integrate_mode_sampled(&c, &initial, 100.0, rtol, 1e-14, &[100.0])
                .unwrap()
                .samples[0]
                .energy
        };
        let coarse = run(1e-8);
        let fine = run(1e-11);
        assert!((coarse - fine).abs() / fine < 1e-5, "{coarse} vs {fine}");
    }

    #[test]
    fn zero_frequency_closed_form() {
        let c = coeff(0.5, OscillatingPart::sine(0.0, 2.0).unwrap(), 1);
        let initial = ModeState::new(
            0.0,
            Complex64::new(0.0, 0.0),
            Complex64::new(0.7, 0.2),
            0.0,
        );
        let samples = sample_grid(0.0, 100.0, 64);
        let traj =
            integrate_mode_sampled(&c, &initial, 100.0, 1e-9, 1e-12, &samples).unwrap();
        assert_eq!(traj.stats.accepted, 0, "closed-form path takes no steps");
        for s in &traj.samples {
            let eta_ratio = (-c.integral(s.state.t).unwrap().value).exp();
            assert!((s.state.v_t - initial.v_t * eta_ratio).norm() < 1e-12);
            assert_eq!(s.state.v_scaled, Complex64::new(0.0, 0.0));
        }
        assert!(energy_identity_residual(&traj).unwrap() < 1e-12);
    }

    #[test]
    fn trajectory_samples_strictly_increase_and_energy_recomputes() {
        let c = coeff(0.3, OscillatingPart::sine(-1.0, 3.0).unwrap(), 1);
        let initial =
            ModeState::new(2.0, Complex64::new(0.1, 0.9), Complex64::new(0.0, 0.3), 0.0);
        let traj = integrate_mode(&c, &initial, 10.0, 1e-9, 1e-12).unwrap();
        for w in traj.samples.windows(2) {
            assert!(w[1].state.t > w[0].state.t);
        }
        for s in &traj.samples {
            assert_eq!(s.energy, s.state.energy_density());
        }
    }

    #[test]
    fn hybrid_drop_matches_full_integration() {
        // Moderate ξ where the full run is affordable: the hybrid result
        // must agree to within the drop budget.
        let c = coeff(0.5, OscillatingPart::sine(0.5, 4.0).unwrap(), 1);
        let initial =
            ModeState::new(2.0, Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0), 0.0);
        let samples = [30.0];
        let full =
            integrate_mode_sampled(&c, &initial, 30.0, 1e-10, 1e-13, &samples).unwrap();
        let hybrid = integrate_mode_hybrid(
            &c,
            &initial,
            30.0,
            1e-10,
            1e-13,
            &samples,
            Some(1e-3),
        )
        .unwrap();
        let ef = full.samples[0].energy;
        let eh = hybrid.samples[0].energy;
        assert!(
            (ef - eh).abs() / ef < 5e-3,
            "full {ef} vs hybrid {eh} (drop at {:?})",
            drop_time(&c, 2.0, 1e-3)
        );
        assert!(hybrid.stats.accepted < full.stats.accepted);
    }

    #[test]
    fn drop_time_scales_with_frequency_weight() {
        let c = coeff(0.5, OscillatingPart::sine(0.5, 4.0).unwrap(), 1);
        let t1 = drop_time(&c, 1.0, 1e-3).unwrap();
        let t2 = drop_time(&c, 100.0, 1e-3).unwrap();
        assert!(t2 > t1, "{t2} vs {t1}");
        assert!(drop_time(&coeff(0.5, OscillatingPart::Zero, 1), 1.0, 1e-3).is_none());
    }

    #[test]
    fn horizon_cap_is_enforced() {
        let c = coeff(0.5, OscillatingPart::Zero, 1);
        let initial =
            ModeState::new(1.0, Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0), 0.0);
        assert!(matches!(
            integrate_mode(&c, &initial, 2e6, 1e-9, 1e-12),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let c = coeff(0.5, OscillatingPart::Zero, 1);
        let initial =
            ModeState::new(1.0, Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0), 0.0);
        let samples = sample_grid(0.0, 1.0, 4);
        let traj = integrate_mode_sampled(&c, &initial, 1.0, 1e-9, 1e-12, &samples).unwrap();
        let csv = trajectory_csv(&traj);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].starts_with("t,re_v_scaled"));
    }
}
