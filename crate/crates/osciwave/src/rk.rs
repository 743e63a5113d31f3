//! Adaptive embedded Runge–Kutta integration (Dormand–Prince 5(4)).
//!
//! The pair advances with the 5th-order solution, estimates local error from
//! the embedded 4th-order weights, and reuses the last stage as the first
//! stage of the next step (FSAL).  A quartic interpolant provides dense
//! output inside each accepted step, so requested sample times never
//! constrain the step sequence.  Step sizes obey a caller-supplied cap
//! h ≤ max_step(t): oscillatory coefficients are resolved by capping at a
//! fraction of the fastest local period rather than by tightening tolerances.

use crate::{Error, Result};

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
/// 5th-order weights (also row 7 of A: FSAL).
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
/// b − b̂ (error-estimate weights, 7 stages).
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
/// Dense-output weights for the quartic interpolant.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Integration controls.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    /// Hard cap on accepted+rejected steps.
    pub max_steps: usize,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Dopri5Options { rtol: 1e-9, atol: 1e-12, max_steps: 50_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Interpolant for one accepted step [t0, t0+h].
struct DenseSegment<const N: usize> {
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseSegment<N> {
    fn eval(&self, theta: f64) -> [f64; N] {
        let th1 = 1.0 - theta;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = self.rcont[0][i]
                + theta
                    * (self.rcont[1][i]
                        + th1
                            * (self.rcont[2][i]
                                + theta * (self.rcont[3][i] + th1 * self.rcont[4][i])));
        }
        out
    }
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, coeffs: &[f64], ks: &[[f64; N]]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in coeffs.iter().zip(ks.iter()) {
        if *c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

/// Integrate y' = f(t, y) from `t0` to `t_end`, returning the state at each
/// requested sample time (samples must be nondecreasing and lie within
/// [t0, t_end]).  `max_step` caps the step size as a function of the step's
/// start time and also sets the initial trial step.
pub fn integrate_sampled<const N: usize>(
    f: &mut impl FnMut(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    t_end: f64,
    y0: [f64; N],
    samples: &[f64],
    opts: &Dopri5Options,
    max_step: &impl Fn(f64) -> f64,
) -> Result<(Vec<[f64; N]>, IntegrationStats)> {
    assert!(t_end >= t0, "integration runs forward");
    assert!(opts.rtol > 0.0 && opts.atol >= 0.0);
    debug_assert!(samples.windows(2).all(|w| w[0] <= w[1]), "samples must be sorted");
    if !samples.is_empty() {
        assert!(
            samples[0] >= t0 && samples[samples.len() - 1] <= t_end,
            "samples must lie within the integration span"
        );
    }

    let mut stats = IntegrationStats::default();
    let mut out: Vec<[f64; N]> = Vec::with_capacity(samples.len());
    let mut next_sample = 0usize;

    // Samples at (or numerically before) t0.
    while next_sample < samples.len() && samples[next_sample] <= t0 {
        out.push(y0);
        next_sample += 1;
    }
    if t_end == t0 {
        while next_sample < samples.len() {
            out.push(y0);
            next_sample += 1;
        }
        return Ok((out, stats));
    }

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    stats.rhs_evals += 1;

    let cap0 = max_step(t0);
    assert!(cap0 > 0.0, "max_step must be positive");
    let mut h = cap0.min(t_end - t0).min(1e-2 * (1.0 + t0.abs()));

    while t < t_end {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::Stiffness { t, h });
        }
        let cap = max_step(t);
        assert!(cap > 0.0, "max_step must be positive");
        h = h.min(cap).min(t_end - t);
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Stiffness { t, h });
        }

        // Stages.
        let k2 = f(t + C[1] * h, &axpy(&y, h, &A2, &[k1]));
        let k3 = f(t + C[2] * h, &axpy(&y, h, &A3, &[k1, k2]));
        let k4 = f(t + C[3] * h, &axpy(&y, h, &A4, &[k1, k2, k3]));
        let k5 = f(t + C[4] * h, &axpy(&y, h, &A5, &[k1, k2, k3, k4]));
        let k6 = f(t + C[5] * h, &axpy(&y, h, &A6, &[k1, k2, k3, k4, k5]));
        let y1 = axpy(&y, h, &B, &[k1, k2, k3, k4, k5, k6]);
        let k7 = f(t + h, &y1);
        stats.rhs_evals += 6;

        if y1.iter().any(|v| !v.is_finite()) {
            return Err(Error::Blowup { t });
        }

        // Error estimate, RMS-scaled.
        let ks = [k1, k2, k3, k4, k5, k6, k7];
        let mut err_sq = 0.0;
        for i in 0..N {
            let mut e = 0.0;
            for (c, k) in E.iter().zip(ks.iter()) {
                e += c * k[i];
            }
            e *= h;
            let scale = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
            err_sq += (e / scale).powi(2);
        }
        let err = (err_sq / N as f64).sqrt();

        if err <= 1.0 {
            // Serve samples inside [t, t+h] via the dense interpolant.
            if next_sample < samples.len() && samples[next_sample] <= t + h {
                let mut rcont = [[0.0; N]; 5];
                for i in 0..N {
                    let ydiff = y1[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    rcont[0][i] = y[i];
                    rcont[1][i] = ydiff;
                    rcont[2][i] = bspl;
                    rcont[3][i] = ydiff - h * k7[i] - bspl;
                    let mut dsum = 0.0;
                    for (c, k) in D.iter().zip(ks.iter()) {
                        dsum += c * k[i];
                    }
                    rcont[4][i] = h * dsum;
                }
                let seg = DenseSegment { rcont };
                while next_sample < samples.len() && samples[next_sample] <= t + h {
                    let theta = (samples[next_sample] - t) / h;
                    out.push(seg.eval(theta.clamp(0.0, 1.0)));
                    next_sample += 1;
                }
            }
            t += h;
            y = y1;
            k1 = k7; // FSAL
            stats.accepted += 1;
            let factor = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
            h *= factor;
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0).min(0.9);
        }
    }

    // Fill any trailing samples at t_end (within roundoff).
    while next_sample < samples.len() {
        out.push(y);
        next_sample += 1;
    }
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn no_cap(_: f64) -> f64 {
        f64::INFINITY
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        let mut f = |_t: f64, y: &[f64; 1]| [-y[0]];
        let samples = [0.0, 0.5, 1.0, 2.0, 5.0];
        let opts = Dopri5Options { rtol: 1e-10, atol: 1e-14, ..Default::default() };
        let (out, stats) =
            integrate_sampled(&mut f, 0.0, 5.0, [1.0], &samples, &opts, &no_cap).unwrap();
        for (y, &t) in out.iter().zip(&samples) {
            assert_relative_eq!(y[0], (-t).exp(), max_relative = 1e-9);
        }
        assert!(stats.accepted > 0 && stats.rhs_evals > 6 * stats.accepted);
    }

    #[test]
    fn harmonic_oscillator_dense_output_is_fifth_order_accurate() {
        // y'' = -y as a system; dense samples at irrational interior times.
        let mut f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let samples: Vec<f64> = (0..=100).map(|i| 20.0 * i as f64 / 100.0).collect();
        let opts = Dopri5Options { rtol: 1e-11, atol: 1e-13, ..Default::default() };
        let (out, _) =
            integrate_sampled(&mut f, 0.0, 20.0, [1.0, 0.0], &samples, &opts, &no_cap).unwrap();
        for (y, &t) in out.iter().zip(&samples) {
            assert_relative_eq!(y[0], t.cos(), epsilon = 1e-8);
            assert_relative_eq!(y[1], -t.sin(), epsilon = 1e-8);
        }
    }

    #[test]
    fn nonautonomous_quadrature_is_exact_for_low_degree() {
        // y' = t⁴: the 5th-order pair integrates degree-4 polynomials exactly
        // up to roundoff even with huge steps.
        let mut f = |t: f64, _y: &[f64; 1]| [t.powi(4)];
        let opts = Dopri5Options { rtol: 1e-6, atol: 1e-9, ..Default::default() };
        let (out, _) =
            integrate_sampled(&mut f, 0.0, 2.0, [0.0], &[2.0], &opts, &no_cap).unwrap();
        assert_relative_eq!(out[0][0], 32.0 / 5.0, max_relative = 1e-12);
    }

    #[test]
    fn max_step_cap_is_respected() {
        let mut count_large = 0usize;
        let mut last_t = 0.0f64;
        let mut f = |t: f64, _y: &[f64; 1]| {
            if t - last_t > 0.11 {
                count_large += 1;
            }
            last_t = last_t.max(t);
            [1.0]
        };
        let opts = Dopri5Options::default();
        let cap = |_: f64| 0.1;
        let (out, stats) =
            integrate_sampled(&mut f, 0.0, 3.0, [0.0], &[3.0], &opts, &cap).unwrap();
        assert_relative_eq!(out[0][0], 3.0, max_relative = 1e-12);
        assert!(stats.accepted >= 30, "caps force at least 30 steps");
    }

    #[test]
    fn blowup_is_reported() {
        let mut f = |_t: f64, y: &[f64; 1]| [y[0] * y[0]];
        let opts = Dopri5Options::default();
        let r = integrate_sampled(&mut f, 0.0, 5.0, [1.0], &[5.0], &opts, &no_cap);
        assert!(matches!(r, Err(Error::Blowup { .. }) | Err(Error::Stiffness { .. })));
    }

    #[test]
    fn empty_span_returns_initial_state() {
        let mut f = |_t: f64, y: &[f64; 1]| [-y[0]];
        let opts = Dopri5Options::default();
        let (out, stats) =
            integrate_sampled(&mut f, 1.0, 1.0, [3.0], &[1.0, 1.0], &opts, &no_cap).unwrap();
        assert_eq!(out, vec![[3.0], [3.0]]);
        assert_eq!(stats.accepted, 0);
    }

    #[test]
    fn convergence_under_tolerance_halving() {
        // Mildly stiff-free oscillator with drift; halving rtol must not move
        // the endpoint by more than ~the coarser tolerance.
        let rhs = |t: f64, y: &[f64; 2]| [y[1], -(1.0 + 0.3 * (3.0 * t).sin()) * y[0]];
        let run = |rtol: f64| {
            let mut f = rhs;
            let opts = Dopri5Options { rtol, atol: 1e-14, ..Default::default() };
            integrate_sampled(&mut f, 0.0, 30.0, [1.0, 0.0], &[30.0], &opts, &no_cap)
                .unwrap()
                .0[0]
        };
        let coarse = run(1e-8);
        let fine = run(1e-12);
        assert!((coarse[0] - fine[0]).abs() < 1e-6);
        assert!((coarse[1] - fine[1]).abs() < 1e-6);
    }
}
