//! Quadrature utilities shared across the crate.
//!
//! Besides plain Gauss–Legendre panels this module owns the oscillatory-tail
//! machinery.  The central primitive is
//!
//! ```text
//!     J_nu(u) = ∫_u^∞ w^(-nu) sin(w) dw ,        u > 0, nu > 0,
//! ```
//!
//! which converges only conditionally, so naive panel summation is hopeless
//! for small `nu`.  Two classical identities make it cheap:
//!
//! * integrating by parts twice gives the recursion
//!   `J_m(u) = u^(-m) cos u + m u^(-m-1) sin u - m(m+1) J_{m+2}(u)`,
//!   an asymptotic expansion whose remainder after truncation is bounded by
//!   the first omitted term; optimal truncation at `u >= 40` reaches ~1e-13
//!   relative accuracy, and smaller `u` are bridged with Gauss–Legendre
//!   panels of half-period length;
//! * for the weighted absolute integral `∫ u^(gamma-1) |J_nu(u)| du`, on any
//!   interval `[a, b]` where `J_nu` keeps its sign,
//!   `∫_a^b u^(gamma-1) J_nu du = (b^g J_nu(b) - a^g J_nu(a))/g
//!                                + (J_{nu-g}(a) - J_{nu-g}(b))/g`
//!   with `g = gamma`, so splitting at the (asymptotically known) zeros of
//!   `J_nu` evaluates the integral piecewise exactly with two tail
//!   evaluations per piece, independent of how fast the integrand
//!   oscillates.

use std::sync::OnceLock;

use num_complex::Complex64;

/// 8-point Gauss–Legendre nodes on `[-1, 1]`.
pub const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];

/// Weights matching [`GL8_NODES`].
pub const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// 8-point Gauss–Legendre rule on a single interval.
pub fn gl8<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Composite 8-point Gauss–Legendre rule with `n` equal panels.
pub fn gl8_panels<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n.max(1);
    let h = (b - a) / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        acc += gl8(&mut f, a + i as f64 * h, a + (i + 1) as f64 * h);
    }
    acc
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Threshold above which the asymptotic expansion of `J_nu` is accurate to
/// roughly machine precision at optimal truncation.
const ASYMPTOTIC_CUT: f64 = 40.0;

/// A value together with a rigorous absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub const ZERO: Estimate = Estimate { value: 0.0, error: 0.0 };

    pub fn new(value: f64, error: f64) -> Self {
        Estimate { value, error }
    }

    /// Upper bound `|value| + error`, used when feeding reports that need a
    /// one-sided estimate.
    pub fn upper(&self) -> f64 {
        self.value.abs() + self.error
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate::new(self.value + rhs.value, self.error + rhs.error)
    }
}

/// Asymptotic evaluation of `J_nu(z)` for `z >= ASYMPTOTIC_CUT`, by the
/// two-fold integration-by-parts recursion with optimal truncation.
fn sin_tail_asymptotic(z: f64, nu: f64) -> Estimate {
    let s = z.sin();
    let c = z.cos();
    let mut acc = 0.0;
    let mut best = Estimate::new(0.0, f64::INFINITY);
    let mut pref = 1.0; // (-1)^L (nu)(nu+1)...(nu+2L-1)
    let mut m = nu;
    for _ in 0..64 {
        acc += pref * (z.powf(-m) * c + m * z.powf(-m - 1.0) * s);
        let next_pref = pref * m * (m + 1.0);
        // |remainder| <= |(nu)_{2L+2}| * |J_{m+2}(z)| <= 2 |(nu)_{2L+2}| z^{-(m+2)}
        let rem = 2.0 * next_pref.abs() * z.powf(-(m + 2.0));
        if rem < best.error {
            best = Estimate::new(acc, rem);
        }
        if rem < 1e-17 * acc.abs() || rem > best.error * 4.0 {
            break;
        }
        pref = -next_pref;
        m += 2.0;
    }
    best
}

/// `J_nu(u) = ∫_u^∞ w^(-nu) sin w dw` with a rigorous error bound.
///
/// Cost is O(1) for `u >= 40` and O(40 - u) below, so callers may treat it
/// as a pointwise-evaluable special function.
pub fn sin_tail(u: f64, nu: f64) -> Estimate {
    assert!(u > 0.0 && nu > 0.0, "sin_tail needs u > 0 and nu > 0");
    if u >= ASYMPTOTIC_CUT {
        return sin_tail_asymptotic(u, nu);
    }
    let far = sin_tail_asymptotic(ASYMPTOTIC_CUT, nu);
    let panels = ((ASYMPTOTIC_CUT - u) / std::f64::consts::FRAC_PI_2).ceil() as usize;
    let bridge = gl8_panels(|w| w.powf(-nu) * w.sin(), u, ASYMPTOTIC_CUT, panels);
    // GL-8 on half-period panels of an analytic integrand is accurate to
    // ~1e-15 relative per panel.
    let bridge_err = 1e-15 * panels as f64 * u.powf(-nu).max(1.0);
    Estimate::new(bridge + far.value, far.error + bridge_err)
}

/// Exact signed integral `∫_a^b u^(gamma-1) J_nu(u) du` via integration by
/// parts; requires `nu > gamma` and positive endpoints.
fn weighted_piece(a: f64, b: f64, nu: f64, gamma: f64, ja: Estimate, jb: Estimate) -> Estimate {
    let boundary = (b.powf(gamma) * jb.value - a.powf(gamma) * ja.value) / gamma;
    let inner_a = sin_tail(a, nu - gamma);
    let inner_b = sin_tail(b, nu - gamma);
    let inner = (inner_a.value - inner_b.value) / gamma;
    let err = (b.powf(gamma) * jb.error + a.powf(gamma) * ja.error + inner_a.error + inner_b.error)
        / gamma;
    Estimate::new(boundary + inner, err)
}

/// Approximate `k`-th zero of `J_nu` beyond `u`, from the leading asymptotic
/// form `J_nu ~ u^(-nu) (cos u + nu sin(u)/u)`: zeros sit near
/// `(k + 1/2) pi + nu / ((k + 1/2) pi)`.
fn asymptotic_zero(k: f64, nu: f64) -> f64 {
    let base = (k + 0.5) * std::f64::consts::PI;
    base + nu / base
}

/// `∫_{u_start}^∞ u^(gamma-1) |J_nu(u)| du` with a rigorous error bound.
///
/// Requires `nu > gamma > 0`.  The integral is split into a resolved head
/// (Gauss–Legendre with explicit splitting at the sign changes of `J_nu`),
/// a long midsection summed exactly piece-by-piece between consecutive
/// asymptotic zeros of `J_nu` (at most `piece_budget` pieces), and a closed
/// tail estimate `2 Z^(gamma-nu) / (pi (nu - gamma))` whose relative error
/// is O(1/Z) and is charged to the error bound.
pub fn abs_weighted_sin_tail(u_start: f64, nu: f64, gamma: f64, piece_budget: usize) -> Estimate {
    assert!(u_start > 0.0 && nu > gamma && gamma > 0.0);
    let mut total = Estimate::ZERO;

    // Head: resolve [u_start, 40] directly.
    let head_end = ASYMPTOTIC_CUT.max(u_start);
    if u_start < head_end {
        total = total + abs_weighted_head(u_start, head_end, nu, gamma);
    }

    // Midsection: pieces between asymptotic zeros of J_nu.
    let mut a = head_end;
    let mut ja = sin_tail(a, nu);
    let k0 = ((a / std::f64::consts::PI) - 0.5).ceil().max(0.0);
    let mut k = k0;
    if asymptotic_zero(k, nu) <= a {
        k += 1.0;
    }
    for _ in 0..piece_budget {
        let b = asymptotic_zero(k, nu);
        let jb = sin_tail(b, nu);
        let piece = weighted_piece(a, b, nu, gamma, ja, jb);
        // Sign slivers around the approximate zeros are O(nu^2 / z^2) of a
        // piece; charge them to the error bound.
        let sliver = piece.value.abs() * (nu + 1.0) * (nu + 1.0) / (a * a);
        total = total + Estimate::new(piece.value.abs(), piece.error + sliver);
        a = b;
        ja = jb;
        k += 1.0;
    }

    // Tail: |J_nu| ~ u^(-nu) |cos u|, mean of |cos| is 2/pi.
    let z = a;
    let est = 2.0 / std::f64::consts::PI * z.powf(gamma - nu) / (nu - gamma);
    let tail_err = est * (4.0 * (nu + 1.0 - gamma) / z) + ja.error * z.powf(gamma) / gamma;
    total + Estimate::new(est, tail_err)
}

/// Resolved quadrature of `u^(gamma-1) |J_nu(u)|` on a short interval,
/// splitting panels at sign changes of `J_nu` located by bisection.
fn abs_weighted_head(a: f64, b: f64, nu: f64, gamma: f64) -> Estimate {
    let mut acc = 0.0;
    let mut err = 0.0;
    let n = ((b - a) / std::f64::consts::FRAC_PI_2).ceil().max(1.0) as usize;
    let h = (b - a) / n as f64;
    let integrand = |u: f64| u.powf(gamma - 1.0) * sin_tail(u, nu).value.abs();
    let mut lo = a;
    let mut f_lo = sin_tail(lo, nu).value;
    for i in 0..n {
        let hi = if i + 1 == n { b } else { a + (i + 1) as f64 * h };
        let f_hi = sin_tail(hi, nu).value;
        if f_lo * f_hi < 0.0 {
            // Bisect the sign change, then integrate both sign-definite parts.
            let mut x0 = lo;
            let mut x1 = hi;
            let mut fx0 = f_lo;
            for _ in 0..60 {
                let xm = 0.5 * (x0 + x1);
                let fxm = sin_tail(xm, nu).value;
                if fx0 * fxm <= 0.0 {
                    x1 = xm;
                } else {
                    x0 = xm;
                    fx0 = fxm;
                }
            }
            let split = 0.5 * (x0 + x1);
            acc += gl8(integrand, lo, split) + gl8(integrand, split, hi);
        } else {
            acc += gl8(integrand, lo, hi);
        }
        // J_nu carries its own evaluation error into the integrand.
        err += (hi - lo) * lo.powf(gamma - 1.0).max(hi.powf(gamma - 1.0)) * sin_tail(lo, nu).error;
        err += 1e-14 * acc.abs();
        lo = hi;
        f_lo = f_hi;
    }
    Estimate::new(acc, err)
}

/// Partial-integration matrix on the 8-point Gauss–Legendre nodes:
/// `S[j][k] = ∫_{-1}^{x_j} L_k(x) dx` for the Lagrange basis `L_k`.
///
/// Together with the plain weights this turns samples of a smooth function
/// at panel nodes into cumulative integrals *at the nodes themselves*,
/// exactly for polynomials of degree <= 7.
pub fn gl8_partial_matrix() -> &'static [[f64; 8]; 8] {
    static MATRIX: OnceLock<[[f64; 8]; 8]> = OnceLock::new();
    MATRIX.get_or_init(|| {
        // Nodal polynomial coefficients (monomial basis, ascending).
        let mut omega = vec![1.0f64];
        for &x in GL8_NODES.iter() {
            let mut next = vec![0.0; omega.len() + 1];
            for (i, &c) in omega.iter().enumerate() {
                next[i] -= x * c;
                next[i + 1] += c;
            }
            omega = next;
        }
        let mut s = [[0.0; 8]; 8];
        for k in 0..8 {
            // Synthetic division: q_k = omega / (x - x_k), degree 7.
            let xk = GL8_NODES[k];
            let mut q = [0.0f64; 8];
            let mut carry = omega[8];
            for i in (0..8).rev() {
                q[i] = carry;
                carry = omega[i] + carry * xk;
            }
            // omega'(x_k) = q_k(x_k).
            let mut dq = 0.0;
            for i in (0..8).rev() {
                dq = dq * xk + q[i];
            }
            for (j, &xj) in GL8_NODES.iter().enumerate() {
                let mut integral = 0.0;
                for (i, &c) in q.iter().enumerate() {
                    let p = (i + 1) as f64;
                    let neg = if (i + 1) % 2 == 0 { 1.0 } else { -1.0 };
                    integral += c / p * (xj.powi(i as i32 + 1) - neg);
                }
                s[j][k] = integral / dq;
            }
        }
        s
    })
}

/// A partition of `[bounds[0], bounds[last]]` into Gauss–Legendre panels,
/// with helpers for cumulative integration of node-sampled functions.
#[derive(Debug, Clone)]
pub struct PanelGrid {
    bounds: Vec<f64>,
    nodes: Vec<f64>,
}

impl PanelGrid {
    /// Builds the grid from strictly increasing panel boundaries.
    pub fn from_bounds(bounds: Vec<f64>) -> Self {
        assert!(bounds.len() >= 2);
        let mut nodes = Vec::with_capacity(8 * (bounds.len() - 1));
        for w in bounds.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let half = 0.5 * (w[1] - w[0]);
            for &x in GL8_NODES.iter() {
                nodes.push(mid + half * x);
            }
        }
        PanelGrid { bounds, nodes }
    }

    /// All quadrature nodes, panel by panel.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn panel_count(&self) -> usize {
        self.bounds.len() - 1
    }

    /// Cumulative integrals `F(x_i) = ∫_{bounds[0]}^{x_i} f` at every node,
    /// given samples of `f` at the nodes.  Exact for piecewise polynomials of
    /// degree <= 7 on the panels.
    pub fn cumulative(&self, samples: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(samples.len(), self.nodes.len());
        let s = gl8_partial_matrix();
        let mut out = Vec::with_capacity(samples.len());
        let mut carried = Complex64::new(0.0, 0.0);
        for (p, w) in self.bounds.windows(2).enumerate() {
            let half = 0.5 * (w[1] - w[0]);
            let vals = &samples[8 * p..8 * (p + 1)];
            for j in 0..8 {
                let mut part = Complex64::new(0.0, 0.0);
                for k in 0..8 {
                    part += vals[k] * s[j][k];
                }
                out.push(carried + part * half);
            }
            let mut full = Complex64::new(0.0, 0.0);
            for k in 0..8 {
                full += vals[k] * GL8_WEIGHTS[k];
            }
            carried += full * half;
        }
        out
    }

    /// Integral over the whole grid from node samples.
    pub fn total(&self, samples: &[Complex64]) -> Complex64 {
        assert_eq!(samples.len(), self.nodes.len());
        let mut acc = Complex64::new(0.0, 0.0);
        for (p, w) in self.bounds.windows(2).enumerate() {
            let half = 0.5 * (w[1] - w[0]);
            let vals = &samples[8 * p..8 * (p + 1)];
            for k in 0..8 {
                acc += vals[k] * GL8_WEIGHTS[k] * half;
            }
        }
        acc
    }
}
