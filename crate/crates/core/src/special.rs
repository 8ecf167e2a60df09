//! Complex log-gamma, pole bookkeeping for Gamma factors, and a series-only
//! Gauss hypergeometric evaluator.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// Default integer-snap tolerance: an argument within this distance of an
/// integer is treated as sitting exactly on it.
pub const INT_SNAP_TOL: f64 = 1e-9;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LN_PI: f64 = 1.144_729_885_849_400_2;

// B_{2k} / (2k (2k-1)) for k = 1..10.
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
    43867.0 / 244188.0,
    -174611.0 / 125400.0,
];

const STIRLING_MIN_ABS: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialError {
    #[error("gamma argument {re}{im:+}i is within {tol:e} of the pole at -{pole}")]
    GammaPole { re: f64, im: f64, pole: u64, tol: f64 },
    #[error("hypergeometric argument |z| = {0} is outside the series disc (limit {1})")]
    OutsideDisc(f64, f64),
    #[error("hypergeometric lower parameter c = {0} is a non-positive integer")]
    BadLowerParameter(Complex64),
    #[error("hypergeometric series did not converge within {0} terms")]
    NoConvergence(usize),
}

/// Nearest non-positive integer index `k` to `z` if `z` lies within `tol` of `-k`.
pub fn near_nonpositive_integer(z: Complex64, tol: f64) -> Option<u64> {
    if z.re > tol || z.im.abs() > tol {
        return None;
    }
    let k = (-z.re).round();
    if (z.re + k).abs() <= tol && (z.re + k).hypot(z.im) <= tol {
        Some(k as u64)
    } else {
        None
    }
}

fn stirling(z: Complex64) -> Complex64 {
    let w = z.inv();
    let w2 = w * w;
    let mut series = Complex64::new(0.0, 0.0);
    let mut p = w;
    for c in STIRLING {
        series += p * c;
        p *= w2;
    }
    (z - 0.5) * z.ln() - z + LN_SQRT_2PI + series
}

fn log_gamma_right(z: Complex64) -> Complex64 {
    if z.norm() >= STIRLING_MIN_ABS {
        return stirling(z);
    }
    // Shift up until the asymptotic series is accurate, dividing out the product.
    let n = (STIRLING_MIN_ABS - z.re).ceil().max(0.0) as usize;
    let mut prod = Complex64::new(1.0, 0.0);
    let mut log_acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        prod *= z + j as f64;
        if prod.norm() > 1e250 {
            log_acc += prod.ln();
            prod = Complex64::new(1.0, 0.0);
        }
    }
    stirling(z + n as f64) - log_acc - prod.ln()
}

/// `ln sin(pi z)` on any branch, stable for large `|Im z|`.
pub fn ln_sin_pi(z: Complex64) -> Complex64 {
    // sin(pi z) has period 2 in Re z.
    let re = z.re - 2.0 * (z.re / 2.0).round();
    let w = Complex64::new(re, z.im);
    if w.im > 20.0 {
        // sin(pi w) ~ exp(-i pi w) / (-2i)
        Complex64::new(0.0, -PI) * w - LN_2 + Complex64::new(0.0, PI / 2.0)
    } else if w.im < -20.0 {
        Complex64::new(0.0, PI) * w - LN_2 - Complex64::new(0.0, PI / 2.0)
    } else {
        (w * PI).sin().ln()
    }
}

/// Log of the Gamma function. The imaginary part is some branch of `arg
/// Gamma(z)`; only `exp` of the result is meaningful.
pub fn log_gamma(z: Complex64) -> Result<Complex64, SpecialError> {
    if let Some(k) = near_nonpositive_integer(z, INT_SNAP_TOL) {
        return Err(SpecialError::GammaPole {
            re: z.re,
            im: z.im,
            pole: k,
            tol: INT_SNAP_TOL,
        });
    }
    if z.re < 0.5 {
        Ok(LN_PI - ln_sin_pi(z) - log_gamma_right(Complex64::new(1.0, 0.0) - z))
    } else {
        Ok(log_gamma_right(z))
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(phase: f64) -> f64 {
    let mut p = phase % (2.0 * PI);
    if p <= -PI {
        p += 2.0 * PI;
    } else if p > PI {
        p -= 2.0 * PI;
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "type", content = "order", rename_all = "snake_case")]
pub enum Kind {
    Finite,
    Zero(u32),
    Pole(u32),
}

impl Kind {
    /// Signed order: positive for zeros, negative for poles.
    pub fn order(self) -> i32 {
        match self {
            Kind::Finite => 0,
            Kind::Zero(n) => n as i32,
            Kind::Pole(n) => -(n as i32),
        }
    }

    pub fn from_order(order: i32) -> Kind {
        match order {
            0 => Kind::Finite,
            n if n > 0 => Kind::Zero(n as u32),
            n => Kind::Pole((-n) as u32),
        }
    }

    pub fn is_zero(self) -> bool {
        matches!(self, Kind::Zero(_))
    }

    pub fn is_pole(self) -> bool {
        matches!(self, Kind::Pole(_))
    }
}

/// A complex quantity that may be finite, vanish, or diverge at the point of
/// evaluation. For zeros and poles, `log_magnitude` and `phase` describe the
/// leading coefficient of the expansion in the local energy offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularValue {
    pub kind: Kind,
    pub log_magnitude: f64,
    pub phase: f64,
}

impl SingularValue {
    pub fn new(kind: Kind, log_magnitude: f64, phase: f64) -> Self {
        SingularValue {
            kind,
            log_magnitude,
            phase: wrap_phase(phase),
        }
    }

    pub fn one() -> Self {
        SingularValue::new(Kind::Finite, 0.0, 0.0)
    }

    /// Finite value from its complex logarithm.
    pub fn from_ln(ln: Complex64) -> Self {
        SingularValue::new(Kind::Finite, ln.re, ln.im)
    }

    pub fn from_complex(c: Complex64) -> Self {
        SingularValue::new(Kind::Finite, c.norm().ln(), c.arg())
    }

    pub fn order(&self) -> i32 {
        self.kind.order()
    }

    pub fn is_finite(&self) -> bool {
        self.kind == Kind::Finite
    }

    /// `log_magnitude + i phase`.
    pub fn ln(&self) -> Complex64 {
        Complex64::new(self.log_magnitude, self.phase)
    }

    /// The value (finite kind) or leading coefficient (zero/pole kinds).
    pub fn coefficient(&self) -> Complex64 {
        Complex64::from_polar(self.log_magnitude.exp(), self.phase)
    }

    /// The actual value: the coefficient when finite, 0 for zeros, infinity for poles.
    pub fn value(&self) -> Complex64 {
        match self.kind {
            Kind::Finite => self.coefficient(),
            Kind::Zero(_) => Complex64::new(0.0, 0.0),
            Kind::Pole(_) => Complex64::new(f64::INFINITY, f64::INFINITY),
        }
    }

    pub fn log10_abs(&self) -> f64 {
        self.log_magnitude / std::f64::consts::LN_10
    }

    pub fn recip(self) -> Self {
        SingularValue::new(
            Kind::from_order(-self.order()),
            -self.log_magnitude,
            -self.phase,
        )
    }

    pub fn conj(self) -> Self {
        SingularValue::new(self.kind, self.log_magnitude, -self.phase)
    }

    /// Multiplies by a positive real factor.
    pub fn scale(self, factor: f64) -> Self {
        SingularValue::new(self.kind, self.log_magnitude + factor.ln(), self.phase)
    }

    pub fn neg(self) -> Self {
        SingularValue::new(self.kind, self.log_magnitude, self.phase + PI)
    }

    pub fn powi(self, n: i32) -> Self {
        SingularValue::new(
            Kind::from_order(self.order() * n),
            self.log_magnitude * n as f64,
            self.phase * n as f64,
        )
    }

    /// `|value|^2` as a coefficient, with the kind doubled in order.
    pub fn norm_sqr(self) -> Self {
        SingularValue::new(
            Kind::from_order(self.order() * 2),
            2.0 * self.log_magnitude,
            0.0,
        )
    }

    /// Leading-order difference `self - other`.
    ///
    /// Terms of different order: the more singular one survives. Equal order:
    /// coefficients subtract; an exact cancellation is reported instead of a
    /// value since the next order is not tracked.
    pub fn sub(self, other: SingularValue) -> Difference {
        let (oa, ob) = (self.order(), other.order());
        if oa < ob {
            return Difference::Value(self);
        }
        if ob < oa {
            return Difference::Value(other.neg());
        }
        // Same order: factor out the larger magnitude to stay in range.
        let (big, small, sign) = if self.log_magnitude >= other.log_magnitude {
            (self, other, 1.0)
        } else {
            (other, self, -1.0)
        };
        if small.log_magnitude == f64::NEG_INFINITY {
            let v = if sign > 0.0 { big } else { big.neg() };
            return Difference::Value(v);
        }
        let ratio = (small.ln() - big.ln()).exp();
        let diff = (Complex64::new(1.0, 0.0) - ratio) * sign;
        if diff.norm() <= CANCEL_TOL {
            return Difference::Cancelled { min_order: oa + 1 };
        }
        let ln = diff.ln() + big.ln();
        Difference::Value(SingularValue::new(self.kind, ln.re, ln.im))
    }

    /// Relative distance between two values of the same kind, via their coefficients.
    pub fn rel_diff(&self, other: &SingularValue) -> f64 {
        if self.kind != other.kind {
            return f64::INFINITY;
        }
        let d = Complex64::new(
            other.log_magnitude - self.log_magnitude,
            wrap_phase(other.phase - self.phase),
        );
        (d.exp() - 1.0).norm()
    }
}

/// Relative size below which an equal-order difference counts as exact cancellation.
pub const CANCEL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Difference {
    Value(SingularValue),
    /// Leading terms cancelled; the result vanishes at least to `min_order`.
    Cancelled { min_order: i32 },
}

impl std::ops::Mul for SingularValue {
    type Output = SingularValue;
    fn mul(self, rhs: SingularValue) -> SingularValue {
        SingularValue::new(
            Kind::from_order(self.order() + rhs.order()),
            self.log_magnitude + rhs.log_magnitude,
            self.phase + rhs.phase,
        )
    }
}

impl std::ops::Div for SingularValue {
    type Output = SingularValue;
    fn div(self, rhs: SingularValue) -> SingularValue {
        self * rhs.recip()
    }
}

/// Gamma residue data at `z = -k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaPoleInfo {
    pub pole_index: u64,
    pub leading_coefficient: f64,
}

pub fn gamma_pole_info(k: u64) -> GammaPoleInfo {
    let ln_fact = (1..=k).map(|j| (j as f64).ln()).sum::<f64>();
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    GammaPoleInfo {
        pole_index: k,
        leading_coefficient: sign * (-ln_fact).exp(),
    }
}

/// `Gamma(x)` for real `x` as a singular value. A snapped pole carries its residue.
pub fn gamma_info(x: f64) -> SingularValue {
    gamma_term(x, 1.0)
}

/// `Gamma(z(E))` near `E0` where `z` moves with slope `dz/dE`.
///
/// At a pole the leading coefficient is expressed per unit energy offset,
/// i.e. the residue divided by the slope, so ratios of poles taken along the
/// same energy path give the correct finite limit.
pub fn gamma_term(x: f64, slope: f64) -> SingularValue {
    let z = Complex64::new(x, 0.0);
    match near_nonpositive_integer(z, INT_SNAP_TOL) {
        Some(k) => {
            let ln_fact: f64 = (1..=k).map(|j| (j as f64).ln()).sum();
            let s = if slope.abs() > 1e-300 { slope } else { 1.0 };
            let phase = if (k % 2 == 1) != (s < 0.0) { PI } else { 0.0 };
            SingularValue::new(Kind::Pole(1), -ln_fact - s.abs().ln(), phase)
        }
        None => match log_gamma(z) {
            Ok(ln) => SingularValue::from_ln(ln),
            Err(_) => unreachable!("pole proximity already handled"),
        },
    }
}

/// Gauss hypergeometric 2F1 by direct power series, for `|z| <= max_abs_z`.
pub fn hyp2f1(a: Complex64, b: Complex64, c: Complex64, z: Complex64) -> Result<Complex64, SpecialError> {
    hyp2f1_with(a, b, c, z, &Hyp2f1Options::default())
}

#[derive(Debug, Clone, Copy)]
pub struct Hyp2f1Options {
    pub max_abs_z: f64,
    pub max_terms: usize,
    pub tolerance: f64,
}

impl Default for Hyp2f1Options {
    fn default() -> Self {
        Hyp2f1Options {
            max_abs_z: 0.95,
            max_terms: 100_000,
            tolerance: 1e-16,
        }
    }
}

pub fn hyp2f1_with(
    a: Complex64,
    b: Complex64,
    c: Complex64,
    z: Complex64,
    opts: &Hyp2f1Options,
) -> Result<Complex64, SpecialError> {
    if near_nonpositive_integer(c, INT_SNAP_TOL).is_some() {
        return Err(SpecialError::BadLowerParameter(c));
    }
    let az = z.norm();
    if az > opts.max_abs_z {
        return Err(SpecialError::OutsideDisc(az, opts.max_abs_z));
    }
    let one = Complex64::new(1.0, 0.0);
    if az == 0.0 {
        return Ok(one);
    }
    let mut sum = one;
    let mut term = one;
    let mut scale = 1.0f64;
    let settle = a.norm().max(b.norm()).max(c.norm()) + 2.0;
    for n in 0..opts.max_terms {
        let nf = n as f64;
        let ratio = (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        term *= ratio;
        if term.norm() == 0.0 {
            return Ok(sum);
        }
        sum += term;
        scale = scale.max(sum.norm());
        // Beyond the settling index the term ratio tends monotonically to |z|.
        if nf > settle {
            let r = ratio.norm().max(az);
            if r < 1.0 && term.norm() * r / (1.0 - r) <= opts.tolerance * scale {
                return Ok(sum);
            }
        }
    }
    Err(SpecialError::NoConvergence(opts.max_terms))
}
