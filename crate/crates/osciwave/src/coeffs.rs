//! Dissipation coefficients b(t) = μ(t) + σ(t).
//!
//! The principal part μ(t) = μ₀(1+t)⁻¹ is weak ("non-effective") damping;
//! the oscillating part σ comes in two families:
//!
//! * `Sine`: σ(t) = (1+t)^p sin((1+t)^q) — a chirp whose phase advances like
//!   (1+t)^q, so its *averaged* tails decay much faster than its amplitude;
//! * `BumpTrain`: bursts of a C^m bump profile χ repeated N_n = ⌊n^h⌋ times
//!   at speed t_n^{q-1} starting at t_n = n^r, and exactly zero in between.
//!
//! Everything downstream needs two things from these families: exact jets
//! (higher t-derivatives) at a point, and *closed-form* control of the
//! oscillatory tails ∫_t^∞ σ and ∫_t^∞|∫_s^∞ σ|, which no generic quadrature
//! can reach once the phase gets large.  Both are provided here: jets via
//! the `jet` module, tails via the `quad` machinery (Sine) or per-burst
//! antiderivatives (BumpTrain).

use num_complex::Complex64;

use crate::jet::{power_jet, Jet};
use crate::quad::{self, Estimate};
use crate::{Error, Result};

/// Largest jet order any coefficient evaluation accepts.
pub const MAX_JET_ORDER: usize = 12;

/// Principal damping μ(t) = μ₀(1+t)⁻¹.
///
/// μ₀ = 0 is admitted as the degenerate free-wave case (b ≡ σ); the
/// hypothesis checks report it as violating strict positivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrincipalPart {
    mu0: f64,
    onset: f64,
}

impl PrincipalPart {
    pub fn new(mu0: f64) -> Result<Self> {
        Self::with_onset(mu0, 0.0)
    }

    /// `onset` is the time from which the monotonicity/positivity bounds are
    /// required to hold; it only shifts where hypothesis scans start.
    pub fn with_onset(mu0: f64, onset: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&mu0) {
            return Err(Error::Config(format!(
                "principal coefficient mu0 must lie in [0, 1), got {mu0}"
            )));
        }
        if !onset.is_finite() || onset < 0.0 {
            return Err(Error::Config(format!("onset time must be >= 0, got {onset}")));
        }
        Ok(PrincipalPart { mu0, onset })
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn onset(&self) -> f64 {
        self.onset
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.mu0 / (1.0 + t)
    }

    /// Exact jet of μ at `t`.
    pub fn jet(&self, t: f64, order: usize) -> Jet {
        assert!(order <= MAX_JET_ORDER, "jet order {order} exceeds cap");
        if self.mu0 == 0.0 {
            return Jet::zero(order);
        }
        power_jet(self.mu0, 1.0, -1.0, t, order).expect("1 + t > 0")
    }

    /// ∫₀ᵗ μ = μ₀ log(1+t).
    pub fn integral(&self, t: f64) -> f64 {
        self.mu0 * (1.0 + t).ln()
    }

    /// η_μ(t) = exp(−∫₀ᵗ μ) = (1+t)^(−μ₀).
    pub fn eta(&self, t: f64) -> f64 {
        (1.0 + t).powf(-self.mu0)
    }

    /// ∫₀ᵗ η_μ, closed form (μ₀ < 1 so the exponent never degenerates).
    pub fn eta_integral(&self, t: f64) -> f64 {
        ((1.0 + t).powf(1.0 - self.mu0) - 1.0) / (1.0 - self.mu0)
    }
}

/// A C^m bump on [0,1]: χ(τ) = c_m · sin(2πτ) · (4τ(1−τ))^(m+1), normalized
/// so max |χ| = 1.  χ is antisymmetric about τ = ½, hence ∫₀¹ χ = 0, and the
/// polynomial factor makes χ vanish to order m+1 at both endpoints, so the
/// periodic extension glues C^m-smoothly.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpProfile {
    smoothness: usize,
    normalization: f64,
    /// Monomial coefficients (ascending) of c_m (4τ(1−τ))^(m+1).
    poly: Vec<f64>,
    /// Antiderivative pieces: ∫ P sin(2πτ) dτ = cos(2πτ)Q_c(τ) + sin(2πτ)Q_s(τ).
    q_cos: Vec<f64>,
    q_sin: Vec<f64>,
    /// ∫₀¹ |X(w)| dw where X(w) = ∫_w^1 χ; the per-cell mass of the inner tail.
    abs_primitive_mass: f64,
}

fn poly_eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn poly_derivative(p: &[f64]) -> Vec<f64> {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| i as f64 * c)
        .collect()
}

impl BumpProfile {
    pub fn new(smoothness: usize) -> Self {
        assert!(smoothness >= 1, "bump profile needs m >= 1");
        assert!(smoothness <= 8, "bump profile polynomial degenerates beyond m = 8");
        // (4τ(1−τ))^(m+1) by repeated polynomial multiplication.
        let base = vec![0.0, 4.0, -4.0];
        let mut poly = vec![1.0];
        for _ in 0..=smoothness {
            let mut next = vec![0.0; poly.len() + 2];
            for (i, &a) in poly.iter().enumerate() {
                for (j, &b) in base.iter().enumerate() {
                    next[i + j] += a * b;
                }
            }
            poly = next;
        }

        // Normalize: the maximum of sin(2πτ)·P(τ) on [0, ½] (antisymmetry
        // makes [½, 1] its mirror).  Coarse scan, then golden-section.
        let raw = |tau: f64| (2.0 * std::f64::consts::PI * tau).sin() * poly_eval(&poly, tau);
        let mut best_x = 0.25;
        let mut best = 0.0;
        for i in 0..=512 {
            let x = 0.5 * i as f64 / 512.0;
            let v = raw(x);
            if v > best {
                best = v;
                best_x = x;
            }
        }
        let (mut a, mut b) = (best_x - 0.002, best_x + 0.002);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let (mut f1, mut f2) = (raw(x1), raw(x2));
        for _ in 0..80 {
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = raw(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = raw(x1);
            }
        }
        let normalization = 1.0 / raw(0.5 * (a + b));
        for c in poly.iter_mut() {
            *c *= normalization;
        }

        // Antiderivative of P(τ) sin(aτ): Q_c = −(P − P''/a² + …)/a,
        // Q_s = (P' − P'''/a² + …)/a².
        let a = 2.0 * std::f64::consts::PI;
        let a2 = a * a;
        let mut q_cos = vec![0.0; poly.len()];
        let mut q_sin = vec![0.0; poly.len()];
        let mut deriv = poly.clone();
        let mut scale = 1.0;
        loop {
            // Q_c = −(P − P''/a² + P''''/a⁴ − …)/a, Q_s = (P' − P'''/a² + …)/a².
            for (i, &c) in deriv.iter().enumerate() {
                q_cos[i] -= scale * c / a;
            }
            deriv = poly_derivative(&deriv);
            if deriv.is_empty() {
                break;
            }
            for (i, &c) in deriv.iter().enumerate() {
                q_sin[i] += scale * c / a2;
            }
            deriv = poly_derivative(&deriv);
            scale = -scale / a2;
            if deriv.is_empty() {
                break;
            }
        }

        let mut profile = BumpProfile {
            smoothness,
            normalization,
            poly,
            q_cos,
            q_sin,
            abs_primitive_mass: 0.0,
        };
        // J_χ = ∫₀¹ |X(w)| dw; X ≤ 0, so |X| = −X.  One-time quadrature of a
        // smooth closed-form integrand.
        profile.abs_primitive_mass =
            quad::gl8_panels(|w| -profile.primitive(w), 0.0, 1.0, 8);
        profile
    }

    pub fn smoothness(&self) -> usize {
        self.smoothness
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// χ on the periodic extension (argument reduced mod 1).
    pub fn eval(&self, tau: f64) -> f64 {
        let w = tau.rem_euclid(1.0);
        (2.0 * std::f64::consts::PI * w).sin() * poly_eval(&self.poly, w)
    }

    /// Jet of the periodic extension at `tau`; at cell seams the expansion is
    /// one-sided from the right, which is where the C^m gluing is tested.
    pub fn jet(&self, tau: f64, order: usize) -> Jet {
        let w = tau.rem_euclid(1.0);
        let var = Jet::variable(w, order);
        let phase = var.scaled(Complex64::new(2.0 * std::f64::consts::PI, 0.0));
        let (sin_jet, _) = phase.sin_cos();
        let mut poly_jet = Jet::constant(
            Complex64::new(*self.poly.last().unwrap(), 0.0),
            order,
        );
        for &c in self.poly.iter().rev().skip(1) {
            poly_jet = poly_jet
                .mul(&var)
                .expect("orders match")
                .add(&Jet::constant(Complex64::new(c, 0.0), order))
                .expect("orders match");
        }
        sin_jet.mul(&poly_jet).expect("orders match")
    }

    /// F(w) = ∫₀ʷ χ, closed form.
    fn forward_primitive(&self, w: f64) -> f64 {
        let a = 2.0 * std::f64::consts::PI;
        let at_w = (a * w).cos() * poly_eval(&self.q_cos, w) + (a * w).sin() * poly_eval(&self.q_sin, w);
        let at_0 = poly_eval(&self.q_cos, 0.0);
        at_w - at_0
    }

    /// X(w) = ∫_w^1 χ = −F(w); single-signed (≤ 0) with minimum at w = ½.
    pub fn primitive(&self, w: f64) -> f64 {
        -self.forward_primitive(w.clamp(0.0, 1.0))
    }

    /// min_w X(w) = X(½) < 0.
    pub fn primitive_min(&self) -> f64 {
        self.primitive(0.5)
    }

    /// J_χ = ∫₀¹ |X(w)| dw.
    pub fn abs_primitive_mass(&self) -> f64 {
        self.abs_primitive_mass
    }

    /// ∫_w^1 |X(w')| dw' for the partially-consumed cell of a tail integral.
    pub fn abs_primitive_tail(&self, w: f64) -> f64 {
        let w = w.clamp(0.0, 1.0);
        quad::gl8_panels(|x| -self.primitive(x), w, 1.0, 4)
    }
}

/// Geometry of one burst of a bump train.
#[derive(Debug, Clone, Copy)]
pub struct Burst {
    pub index: usize,
    /// Start time t_n = n^r.
    pub start: f64,
    /// Number of bump cells N_n = ⌊n^h⌋.
    pub cells: usize,
    /// Duration of one cell, t_n^(1−q).
    pub cell_width: f64,
}

impl Burst {
    pub fn end(&self) -> f64 {
        self.start + self.cells as f64 * self.cell_width
    }
}

/// The oscillating part σ(t) of the dissipation coefficient.
#[derive(Debug, Clone, PartialEq)]
pub enum OscillatingPart {
    Zero,
    Sine { p: f64, q: f64 },
    BumpTrain { p: f64, q: f64, r: f64, h: f64, profile: BumpProfile },
}

impl OscillatingPart {
    pub fn sine(p: f64, q: f64) -> Result<Self> {
        if p < -1.0 || !p.is_finite() {
            return Err(Error::Config(format!("sine amplitude exponent p must be >= -1, got {p}")));
        }
        if q <= 1.0 || !q.is_finite() {
            return Err(Error::Config(format!("sine phase exponent q must be > 1, got {q}")));
        }
        Ok(OscillatingPart::Sine { p, q })
    }

    pub fn bump_train(p: f64, q: f64, r: f64, h: f64, profile: BumpProfile) -> Result<Self> {
        if p < -1.0 || !p.is_finite() {
            return Err(Error::Config(format!("bump amplitude exponent p must be >= -1, got {p}")));
        }
        if q <= 1.0 || !q.is_finite() {
            return Err(Error::Config(format!("bump phase exponent q must be > 1, got {q}")));
        }
        if r < 1.0 || !r.is_finite() {
            return Err(Error::Config(format!("burst spacing exponent r must be >= 1, got {r}")));
        }
        if h < 0.0 || !h.is_finite() {
            return Err(Error::Config(format!("burst length exponent h must be >= 0, got {h}")));
        }
        // Bursts must not overlap the next start: t_n + N_n t_n^(1−q) <= t_{n+1}.
        if h > r * q - 1.0 {
            return Err(Error::Config(format!(
                "burst intervals overlap: need h <= r*q - 1, got h = {h} > {}",
                r * q - 1.0
            )));
        }
        Ok(OscillatingPart::BumpTrain { p, q, r, h, profile })
    }

    /// Maximum jet order the family supports everywhere (`None` = unlimited).
    pub fn smoothness_limit(&self) -> Option<usize> {
        match self {
            OscillatingPart::BumpTrain { profile, .. } => Some(profile.smoothness()),
            _ => None,
        }
    }

    /// The burst whose support contains `t`, if any.
    pub fn burst_at(&self, t: f64) -> Option<Burst> {
        let OscillatingPart::BumpTrain { q, r, h, .. } = self else {
            return None;
        };
        if t < 1.0 {
            return None;
        }
        let center = t.powf(1.0 / r).floor() as i64;
        for n in [center - 1, center, center + 1] {
            if n < 1 {
                continue;
            }
            let b = bump_burst(n as usize, *q, *r, *h);
            if t >= b.start && t <= b.end() {
                return Some(b);
            }
        }
        None
    }

    /// Start of the first burst with start time > `t` (BumpTrain only).
    pub fn next_burst_start(&self, t: f64) -> Option<f64> {
        let OscillatingPart::BumpTrain { r, .. } = self else {
            return None;
        };
        let n = (t.max(0.0).powf(1.0 / r).floor() as usize).max(0) + 1;
        // powf rounding can put us one off in either direction.
        for cand in n.saturating_sub(1).max(1)..n + 2 {
            let start = (cand as f64).powf(*r);
            if start > t {
                return Some(start);
            }
        }
        Some(((n + 2) as f64).powf(*r))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            OscillatingPart::Zero => 0.0,
            OscillatingPart::Sine { p, q } => (1.0 + t).powf(*p) * (1.0 + t).powf(*q).sin(),
            OscillatingPart::BumpTrain { p, q, profile, .. } => match self.burst_at(t) {
                None => 0.0,
                Some(b) => {
                    let tau = (t - b.start) * b.start.powf(q - 1.0);
                    b.start.powf(*p) * profile.eval(tau)
                }
            },
        }
    }

    /// Exact jet of σ at `t`.  BumpTrain jets beyond the profile smoothness
    /// are refused: the periodic extension has no more derivatives at seams.
    pub fn jet(&self, t: f64, order: usize) -> Result<Jet> {
        assert!(order <= MAX_JET_ORDER, "jet order {order} exceeds cap");
        match self {
            OscillatingPart::Zero => Ok(Jet::zero(order)),
            OscillatingPart::Sine { p, q } => {
                let amp = power_jet(1.0, 1.0, *p, t, order)?;
                let phase = power_jet(1.0, 1.0, *q, t, order)?;
                let (sin_jet, _) = phase.sin_cos();
                amp.mul(&sin_jet)
            }
            OscillatingPart::BumpTrain { p, q, profile, .. } => {
                if order > profile.smoothness() {
                    return Err(Error::SmoothnessExceeded {
                        requested: order,
                        available: profile.smoothness(),
                    });
                }
                match self.burst_at(t) {
                    None => Ok(Jet::zero(order)),
                    Some(b) => {
                        let rate = b.start.powf(q - 1.0);
                        let tau = (t - b.start) * rate;
                        let inner = profile.jet(tau, order);
                        // Compose with the affine map τ(t): coefficient k picks
                        // up rate^k; then scale by the burst amplitude.
                        let coeffs: Vec<Complex64> = (0..=order)
                            .map(|k| inner.coeff(k) * rate.powi(k as i32))
                            .collect();
                        Ok(Jet::new(coeffs).scaled(Complex64::new(b.start.powf(*p), 0.0)))
                    }
                }
            }
        }
    }

    /// Inner tail I(t) = ∫_t^∞ σ(s) ds, exactly in O(1) evaluations.
    ///
    /// Sine: substituting u = (1+s)^q gives I(t) = J_ν((1+t)^q)/q with
    /// ν = (q−1−p)/q, which must be positive (p < q−1) for convergence.
    /// BumpTrain: full bursts and full cells integrate to zero, so only the
    /// current partial cell contributes: I = t_n^(p−q+1) X(frac τ).
    pub fn tail_integral(&self, t: f64) -> Result<Estimate> {
        match self {
            OscillatingPart::Zero => Ok(Estimate::ZERO),
            OscillatingPart::Sine { p, q } => {
                let nu = (q - 1.0 - p) / q;
                if nu <= 0.0 {
                    return Err(Error::Hypothesis(format!(
                        "∫σ diverges for sine: need p < q - 1, got p = {p}, q = {q}"
                    )));
                }
                let j = quad::sin_tail((1.0 + t).powf(*q), nu);
                Ok(Estimate::new(j.value / q, j.error / q))
            }
            OscillatingPart::BumpTrain { p, q, profile, .. } => match self.burst_at(t) {
                None => Ok(Estimate::ZERO),
                Some(b) => {
                    let tau = (t - b.start) * b.start.powf(q - 1.0);
                    let w = tau - tau.floor();
                    let scale = b.start.powf(p - q + 1.0);
                    Ok(Estimate::new(scale * profile.primitive(w), scale * 1e-14))
                }
            },
        }
    }

    /// ∫₀ᵗ σ = I(0) − I(t).
    pub fn integral_from_zero(&self, t: f64) -> Result<Estimate> {
        let at_zero = self.tail_integral(0.0)?;
        let at_t = self.tail_integral(t)?;
        Ok(Estimate::new(at_zero.value - at_t.value, at_zero.error + at_t.error))
    }

    /// Monotone envelope bound for |I(s)|, s ≥ t.
    pub fn tail_envelope(&self, t: f64) -> f64 {
        match self {
            OscillatingPart::Zero => 0.0,
            // |J_ν(u)| ≤ 2 u^(−ν) gives |I(s)| ≤ (2/q)(1+s)^(p−q+1).
            OscillatingPart::Sine { p, q } => 2.0 / q * (1.0 + t).powf(p - q + 1.0),
            OscillatingPart::BumpTrain { p, q, r, profile, .. } => {
                // |I| ≤ t_n^(p−q+1) |X_min| on burst n; bursts at or after t.
                let n = t.max(1.0).powf(1.0 / r).floor().max(1.0);
                let start = n.powf(*r);
                let scale = if p - q + 1.0 <= 0.0 {
                    start.powf(p - q + 1.0)
                } else {
                    f64::INFINITY
                };
                scale * profile.primitive_min().abs()
            }
        }
    }

    /// Outer stabilization tail T(t) = ∫_t^∞ |I(s)| ds.
    ///
    /// Sine: u = (1+s)^q turns T into (1/q²)∫ u^(1/q − 1)|J_ν(u)| du, handled
    /// piecewise-exactly by `quad::abs_weighted_sin_tail`; convergence needs
    /// ν > 1/q, i.e. p < q − 2.  BumpTrain: per-burst masses N_k t_k^(p−2q+2)J_χ
    /// summed with an Euler–Maclaurin tail; convergence needs the summand
    /// exponent h + r(p−2q+2) < −1.
    pub fn stabilization_tail(&self, t: f64) -> Result<Estimate> {
        match self {
            OscillatingPart::Zero => Ok(Estimate::ZERO),
            OscillatingPart::Sine { p, q } => {
                if *p >= q - 2.0 {
                    return Err(Error::Hypothesis(format!(
                        "∫∫σ diverges for sine: need p < q - 2, got p = {p}, q = {q}"
                    )));
                }
                let nu = (q - 1.0 - p) / q;
                let gamma = 1.0 / q;
                let est = quad::abs_weighted_sin_tail((1.0 + t).powf(*q), nu, gamma, 2000);
                Ok(Estimate::new(est.value / (q * q), est.error / (q * q)))
            }
            OscillatingPart::BumpTrain { p, q, r, h, profile } => {
                let exponent = h + r * (p - 2.0 * q + 2.0);
                if exponent >= -1.0 {
                    return Err(Error::Hypothesis(format!(
                        "∫∫σ diverges for bump train: need h + r(p-2q+2) < -1, got {exponent}"
                    )));
                }
                let mass = profile.abs_primitive_mass();
                let mut total = Estimate::ZERO;
                let mut first_full = 1usize;
                if let Some(b) = self.burst_at(t) {
                    // Partial burst: remaining whole cells plus the tail of
                    // the current cell (nothing if t sits on the burst end).
                    let tau = (t - b.start) * b.start.powf(q - 1.0);
                    if tau < b.cells as f64 {
                        let cell = tau.floor();
                        let w = tau - cell;
                        let scale = b.start.powf(p - 2.0 * q + 2.0);
                        let whole_cells = (b.cells as f64 - cell - 1.0).max(0.0);
                        total = total
                            + Estimate::new(
                                scale * (profile.abs_primitive_tail(w) + whole_cells * mass),
                                scale * 1e-12,
                            );
                    }
                    first_full = b.index + 1;
                } else if let Some(start) = self.next_burst_start(t) {
                    first_full = start.powf(1.0 / r).round() as usize;
                }
                // Σ_{k ≥ first_full} ⌊k^h⌋ k^(r(p−2q+2)) J_χ: explicit terms,
                // then an integral tail for the smooth majorant with the
                // floor defect charged to the error bound.
                let g = r * (p - 2.0 * q + 2.0);
                let cutoff = 4096usize.max(first_full + 16);
                let mut sum = 0.0;
                for k in first_full..cutoff {
                    let kf = k as f64;
                    sum += kf.powf(*h).floor() * kf.powf(g);
                }
                let z = cutoff as f64 - 0.5;
                let smooth_tail = z.powf(exponent + 1.0) / (-exponent - 1.0);
                let floor_defect = if *h > 0.0 {
                    z.powf(g + 1.0).max(0.0) / (-g - 1.0).max(1e-12)
                } else {
                    0.0
                };
                let tail_err = smooth_tail * (exponent.abs() / z) + floor_defect;
                total = total + Estimate::new(mass * (sum + smooth_tail), mass * tail_err);
                Ok(total)
            }
        }
    }

    /// Local angular rate of the oscillation, for step-size control.
    pub fn oscillation_rate(&self, t: f64) -> f64 {
        match self {
            OscillatingPart::Zero => 0.0,
            OscillatingPart::Sine { q, .. } => q * (1.0 + t).powf(q - 1.0),
            OscillatingPart::BumpTrain { q, .. } => match self.burst_at(t) {
                Some(b) => 2.0 * std::f64::consts::PI * b.start.powf(q - 1.0),
                None => 0.0,
            },
        }
    }

    /// Hard step cap preventing an integrator from leaping over an entire
    /// burst without sampling it.  Infinite when no structural cap applies.
    pub fn max_step(&self, t: f64) -> f64 {
        match self {
            OscillatingPart::BumpTrain { .. } => {
                if let Some(b) = self.burst_at(t) {
                    // Stay within a fraction of a bump cell.
                    0.2 * b.cell_width
                } else if let Some(next) = self.next_burst_start(t) {
                    // Land on (or negligibly inside) the next burst start.
                    let cell = {
                        let OscillatingPart::BumpTrain { q, r, h, .. } = self else {
                            unreachable!()
                        };
                        let n = next.powf(1.0 / r).round().max(1.0);
                        bump_burst(n as usize, *q, *r, *h).cell_width
                    };
                    (next - t).max(1e-3 * cell)
                } else {
                    f64::INFINITY
                }
            }
            _ => f64::INFINITY,
        }
    }

    /// Extremes (ω₀, ω₁) of ω(t) = exp(I(t)) over t ≥ 0.
    ///
    /// The critical points of I are the zeros of σ, so the extremes are
    /// attained among: the endpoint t = 0, the zeros of σ, and the limit 0 of
    /// I at infinity.  For Sine the zeros are u = kπ in the substituted
    /// variable and the decaying envelope 2u^(−ν)/q cuts the scan off as soon
    /// as it falls below the extremes found so far; for BumpTrain the global
    /// extremes are exp(X_min) (first burst) and 1.
    pub fn omega_extremes(&self) -> Result<(f64, f64)> {
        match self {
            OscillatingPart::Zero => Ok((1.0, 1.0)),
            OscillatingPart::Sine { p, q } => {
                let nu = (q - 1.0 - p) / q;
                if nu <= 0.0 {
                    return Err(Error::Hypothesis(format!(
                        "ω undefined: ∫σ diverges (p = {p} >= q - 1 = {})",
                        q - 1.0
                    )));
                }
                let mut lo: f64 = 0.0; // I → 0 at infinity
                let mut hi: f64 = 0.0;
                let at0 = quad::sin_tail(1.0, nu).value / q;
                lo = lo.min(at0);
                hi = hi.max(at0);
                let mut k = 1.0f64;
                loop {
                    let u = k * std::f64::consts::PI;
                    if u > 1.0 {
                        let envelope = 2.0 * u.powf(-nu) / q;
                        if envelope < lo.abs().max(hi.abs()).max(1e-300) && k > 2.0 {
                            break;
                        }
                        let val = quad::sin_tail(u, nu).value / q;
                        lo = lo.min(val);
                        hi = hi.max(val);
                    }
                    k += 1.0;
                    if k > 1e7 {
                        break;
                    }
                }
                Ok((lo.exp(), hi.exp()))
            }
            OscillatingPart::BumpTrain { p, q, profile, .. } => {
                if p - q + 1.0 > 0.0 {
                    return Err(Error::Hypothesis(
                        "ω unbounded: bump inner tail grows with the burst index".into(),
                    ));
                }
                Ok((profile.primitive_min().exp(), 1.0))
            }
        }
    }
}

fn bump_burst(n: usize, q: f64, r: f64, h: f64) -> Burst {
    let nf = n as f64;
    let start = nf.powf(r);
    Burst {
        index: n,
        start,
        cells: nf.powf(h).floor() as usize,
        cell_width: start.powf(1.0 - q),
    }
}

/// The full dissipation coefficient b(t) = μ(t) + σ(t) with a declared
/// smoothness order m (how many derivatives the machinery may request).
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationCoefficient {
    principal: PrincipalPart,
    oscillating: OscillatingPart,
    smoothness: usize,
}

impl DissipationCoefficient {
    pub fn new(
        principal: PrincipalPart,
        oscillating: OscillatingPart,
        smoothness: usize,
    ) -> Result<Self> {
        if smoothness == 0 {
            return Err(Error::Config("smoothness order m must be >= 1".into()));
        }
        if smoothness > MAX_JET_ORDER {
            return Err(Error::Config(format!(
                "smoothness order m = {smoothness} exceeds the jet cap {MAX_JET_ORDER}"
            )));
        }
        if let Some(limit) = oscillating.smoothness_limit() {
            if smoothness > limit {
                return Err(Error::Config(format!(
                    "declared smoothness m = {smoothness} exceeds the bump profile's C^{limit}"
                )));
            }
        }
        Ok(DissipationCoefficient { principal, oscillating, smoothness })
    }

    pub fn principal(&self) -> &PrincipalPart {
        &self.principal
    }

    pub fn oscillating(&self) -> &OscillatingPart {
        &self.oscillating
    }

    pub fn smoothness(&self) -> usize {
        self.smoothness
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.principal.eval(t) + self.oscillating.eval(t)
    }

    /// Exact jet of b at `t`: sum of the two family jets.
    pub fn jet(&self, t: f64, order: usize) -> Result<Jet> {
        let mu = self.principal.jet(t, order);
        let sigma = self.oscillating.jet(t, order)?;
        mu.add(&sigma)
    }

    /// ∫₀ᵗ b with error bar from the oscillatory part.
    pub fn integral(&self, t: f64) -> Result<Estimate> {
        let sigma = self.oscillating.integral_from_zero(t)?;
        Ok(Estimate::new(self.principal.integral(t) + sigma.value, sigma.error))
    }

    /// η_b(t) = exp(−∫₀ᵗ b).
    pub fn eta(&self, t: f64) -> Result<Estimate> {
        let integral = self.integral(t)?;
        let value = (-integral.value).exp();
        Ok(Estimate::new(value, value * integral.error))
    }
}
