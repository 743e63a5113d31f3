//! Truncated Taylor ("jet") arithmetic over the complex numbers.
//!
//! A [`Jet`] of order `m` stores the normalised Taylor coefficients
//! `c[k] = f^(k)(t0) / k!`, `k = 0..=m`, of a function of one *real*
//! variable at a base point `t0`.  The base point itself is not stored;
//! all operations combine jets taken at the same point and the same order.
//!
//! Working with normalised coefficients keeps every recurrence free of
//! factorials: multiplication is a Cauchy product, and reciprocal, square
//! root, exponential and sine/cosine all follow from their defining ODEs.
//! Because the variable is real, complex conjugation of a function is
//! coefficient-wise conjugation of its jet; this is what the refined
//! diagonalisation code relies on when it forms `|r|^2 = r * conj(r)`
//! without ever introducing a non-smooth absolute value.

use num_complex::Complex64;

use crate::{Error, Result};

/// Truncated Taylor expansion with normalised complex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    coeffs: Vec<Complex64>,
}

impl Jet {
    /// Builds a jet from normalised coefficients `c[k] = f^(k)/k!`.
    ///
    /// Panics if `coeffs` is empty: a jet always carries at least a value.
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least an order-0 coefficient");
        Jet { coeffs }
    }

    /// Builds a jet from real normalised coefficients.
    pub fn from_real(coeffs: &[f64]) -> Self {
        Jet::new(coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// The constant function `z`, truncated at `order`.
    pub fn constant(z: Complex64, order: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); order + 1];
        coeffs[0] = z;
        Jet { coeffs }
    }

    /// The zero jet of the given order.
    pub fn zero(order: usize) -> Self {
        Jet::constant(Complex64::new(0.0, 0.0), order)
    }

    /// The multiplicative unit of the given order.
    pub fn one(order: usize) -> Self {
        Jet::constant(Complex64::new(1.0, 0.0), order)
    }

    /// Jet of the identity function `t` at base point `t0`.
    pub fn variable(t0: f64, order: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); order + 1];
        coeffs[0] = Complex64::new(t0, 0.0);
        if order >= 1 {
            coeffs[1] = Complex64::new(1.0, 0.0);
        }
        Jet { coeffs }
    }

    /// Truncation order `m` (the jet stores `m + 1` coefficients).
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Normalised coefficient `c[k]`; zero beyond the truncation order.
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// All normalised coefficients.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Function value at the base point (`c[0]`).
    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Un-normalised derivative `f^(k)(t0) = k! * c[k]`.
    pub fn derivative(&self, k: usize) -> Complex64 {
        let mut fact = 1.0;
        for j in 2..=k {
            fact *= j as f64;
        }
        self.coeff(k) * fact
    }

    /// Restricts the jet to a (smaller or equal) order.
    pub fn truncated(&self, order: usize) -> Jet {
        let take = order.min(self.order());
        Jet::new(self.coeffs[..=take].to_vec())
    }

    /// Jet of the derivative `f'`; the order drops by one.
    pub fn differentiate(&self) -> Result<Jet> {
        if self.order() == 0 {
            return Err(Error::CannotDifferentiate);
        }
        let coeffs = (1..self.coeffs.len())
            .map(|k| self.coeffs[k] * k as f64)
            .collect();
        Ok(Jet { coeffs })
    }

    /// Coefficient-wise complex conjugate; this is the jet of `conj(f)`
    /// because the underlying variable is real.
    pub fn conj(&self) -> Jet {
        Jet::new(self.coeffs.iter().map(|c| c.conj()).collect())
    }

    /// Jet of `Re f = (f + conj f)/2`.
    pub fn re_part(&self) -> Jet {
        Jet::new(self.coeffs.iter().map(|c| Complex64::new(c.re, 0.0)).collect())
    }

    /// Jet of `Im f = (f - conj f)/(2i)`.
    pub fn im_part(&self) -> Jet {
        Jet::new(self.coeffs.iter().map(|c| Complex64::new(c.im, 0.0)).collect())
    }

    /// Evaluates the truncated polynomial at an offset `dt` from the base
    /// point (Horner form).  Useful for cross-checking against sampled data.
    pub fn eval(&self, dt: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * dt + c;
        }
        acc
    }

    /// Scales every coefficient by a complex factor.
    pub fn scaled(&self, z: Complex64) -> Jet {
        Jet::new(self.coeffs.iter().map(|&c| c * z).collect())
    }

    fn check_same_order(&self, other: &Jet) -> Result<()> {
        if self.order() != other.order() {
            return Err(Error::OrderMismatch(self.order(), other.order()));
        }
        Ok(())
    }

    /// Coefficient-wise sum.
    pub fn add(&self, other: &Jet) -> Result<Jet> {
        self.check_same_order(other)?;
        Ok(Jet::new(
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    /// Coefficient-wise difference.
    pub fn sub(&self, other: &Jet) -> Result<Jet> {
        self.check_same_order(other)?;
        Ok(Jet::new(
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    /// Truncated Cauchy product `c[k] = sum_j a[j] b[k-j]`.
    pub fn mul(&self, other: &Jet) -> Result<Jet> {
        self.check_same_order(other)?;
        let n = self.coeffs.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..=k {
                acc += self.coeffs[j] * other.coeffs[k - j];
            }
            out[k] = acc;
        }
        Ok(Jet::new(out))
    }

    /// Jet of `1/f`, by the recurrence
    /// `c[0] = 1/a[0]`, `c[k] = -(sum_{j=1..=k} a[j] c[k-j]) / a[0]`.
    pub fn reciprocal(&self) -> Result<Jet> {
        let a0 = self.coeffs[0];
        if a0.norm() == 0.0 {
            return Err(Error::DivisionAtBase);
        }
        let n = self.coeffs.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        out[0] = Complex64::new(1.0, 0.0) / a0;
        for k in 1..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                acc += self.coeffs[j] * out[k - j];
            }
            out[k] = -acc / a0;
        }
        Ok(Jet::new(out))
    }

    /// Jet of `f/g`.
    pub fn div(&self, other: &Jet) -> Result<Jet> {
        self.mul(&other.reciprocal()?)
    }

    /// Jet of `sqrt(f)` on the principal branch.
    ///
    /// Requires a positive real part at the base point; the intended use is
    /// for jets that represent real positive functions (discriminants of the
    /// diagonalisation), where the branch is unambiguous.
    pub fn sqrt(&self) -> Result<Jet> {
        let a0 = self.coeffs[0];
        if a0.re <= 0.0 {
            return Err(Error::SqrtBranch(a0.re));
        }
        let n = self.coeffs.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        out[0] = a0.sqrt();
        let two_s0 = out[0] * 2.0;
        for k in 1..n {
            // a[k] = sum_{j=0..=k} s[j] s[k-j]  =>  solve for s[k].
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 1..k {
                acc += out[j] * out[k - j];
            }
            out[k] = (self.coeffs[k] - acc) / two_s0;
        }
        Ok(Jet::new(out))
    }

    /// Jet of `exp(f)` via `e' = f' e`:
    /// `e[k] = (1/k) sum_{j=1..=k} j a[j] e[k-j]`.
    pub fn exp(&self) -> Jet {
        let n = self.coeffs.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        out[0] = self.coeffs[0].exp();
        for k in 1..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                acc += self.coeffs[j] * out[k - j] * j as f64;
            }
            out[k] = acc / k as f64;
        }
        Jet::new(out)
    }

    /// Jets of `sin(f)` and `cos(f)`, computed together through the coupled
    /// recurrences `s' = f' c`, `c' = -f' s`.
    pub fn sin_cos(&self) -> (Jet, Jet) {
        let n = self.coeffs.len();
        let mut s = vec![Complex64::new(0.0, 0.0); n];
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        s[0] = self.coeffs[0].sin();
        c[0] = self.coeffs[0].cos();
        for k in 1..n {
            let mut acc_s = Complex64::new(0.0, 0.0);
            let mut acc_c = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                let ja = self.coeffs[j] * j as f64;
                acc_s += ja * c[k - j];
                acc_c += ja * s[k - j];
            }
            s[k] = acc_s / k as f64;
            c[k] = -acc_c / k as f64;
        }
        (Jet::new(s), Jet::new(c))
    }

    /// Largest coefficient magnitude; handy for tolerance scaling in tests.
    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Jet of the power law `scale * (shift + t)^expo` at base point `t0`.
///
/// Requires `shift + t0 > 0`.  The coefficients follow from
/// `c[j] = c[j-1] * (expo - j + 1) / (j * (shift + t0))`.
pub fn power_jet(scale: f64, shift: f64, expo: f64, t0: f64, order: usize) -> Result<Jet> {
    let base = shift + t0;
    if base <= 0.0 {
        return Err(Error::Domain(format!(
            "power-law jet needs shift + t0 > 0, got {base}"
        )));
    }
    let mut coeffs = vec![Complex64::new(0.0, 0.0); order + 1];
    let mut c = scale * base.powf(expo);
    coeffs[0] = Complex64::new(c, 0.0);
    for j in 1..=order {
        c *= (expo - (j as f64) + 1.0) / (j as f64 * base);
        coeffs[j] = Complex64::new(c, 0.0);
    }
    Ok(Jet::new(coeffs))
}

/// Free-function form of the truncated product of two jets of equal order.
pub fn jet_mul(a: &Jet, b: &Jet) -> Result<Jet> {
    a.mul(b)
}

/// Free-function form of the truncated reciprocal.
pub fn jet_reciprocal(a: &Jet) -> Result<Jet> {
    a.reciprocal()
}

/// Free-function form of the truncated square root (principal branch).
pub fn jet_sqrt(a: &Jet) -> Result<Jet> {
    a.sqrt()
}
