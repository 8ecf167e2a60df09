//! Double-double Frobenius series and Taylor continuation for
//! `(1+u) u^2 psi'' + (1+u) u psi' - (A + B u) psi = 0`.

use num_complex::{Complex, Complex64};
use twofloat::TwoFloat;

use super::OracleError;

pub(crate) type Cdd = Complex<TwoFloat>;

const MAX_TERMS: usize = 200_000;
/// Digits of headroom lost to cancellation before a series is rejected.
const MAX_CANCELLATION: f64 = 1e24;

pub(crate) fn tf(x: f64) -> TwoFloat {
    TwoFloat::from_f64(x)
}

pub(crate) fn dd(z: Complex64) -> Cdd {
    Cdd::new(tf(z.re), tf(z.im))
}

pub(crate) fn to_c64(z: &Cdd) -> Complex64 {
    Complex64::new(z.re.hi() + z.re.lo(), z.im.hi() + z.im.lo())
}

/// Leading-part magnitude; plenty for step and convergence control.
pub(crate) fn mag(z: &Cdd) -> f64 {
    z.re.hi().hypot(z.im.hi())
}

/// Reciprocal to full double-double accuracy; the crate's own division only
/// carries the leading word.
pub(crate) fn recip(x: TwoFloat) -> TwoFloat {
    let one = tf(1.0);
    let r = tf(1.0 / x.hi());
    let r = r + r * (one - x * r);
    r + r * (one - x * r)
}

pub(crate) fn cdiv(a: Cdd, b: Cdd) -> Cdd {
    let inv = recip(b.re * b.re + b.im * b.im);
    cmul_real(a * b.conj(), inv)
}

fn cmul_real(z: Cdd, x: TwoFloat) -> Cdd {
    Cdd::new(z.re * x, z.im * x)
}

/// `(F, theta F)` for `F = sum c_j w^j`, `theta F = sum (s + j) c_j w^j`, with
/// `c_0 = 1` and `c_j = -c_{j-1} (s+j-1-o)(s+j-1+o) / (j (j + 2s))`.
pub(crate) fn frobenius(s: f64, o: f64, w: Cdd, tol: f64) -> Result<(Cdd, Cdd), OracleError> {
    let (s_t, o_t) = (tf(s), tf(o));
    let one = Cdd::new(tf(1.0), tf(0.0));
    let mut coeff_w = one; // c_j w^j
    let mut f = one;
    let mut tf_sum = cmul_real(one, s_t);
    let mut peak = 1.0f64;
    let aw = mag(&w);
    let settle = s.abs() + o.abs() + 2.0;
    for j in 1..MAX_TERMS {
        let jt = tf(j as f64);
        let base = s_t + jt - tf(1.0);
        let num = (base - o_t) * (base + o_t);
        let den = jt * (jt + tf(2.0) * s_t);
        let ratio_j = num * recip(den);
        coeff_w = cmul_real(coeff_w * w, -ratio_j);
        f = f + coeff_w;
        tf_sum = tf_sum + cmul_real(coeff_w, s_t + jt);
        let m = mag(&coeff_w);
        peak = peak.max(m);
        if !m.is_finite() {
            return Err(OracleError::DynamicRange(m));
        }
        if (j as f64) > settle {
            let ratio = ratio_j.hi().abs() * aw;
            let r = ratio.max(aw);
            let scale = mag(&f).max(mag(&tf_sum));
            if r < 1.0 && m * (1.0 + (s.abs() + j as f64)) * r / (1.0 - r) <= tol * scale {
                if peak > MAX_CANCELLATION * scale {
                    return Err(OracleError::DynamicRange(peak / scale));
                }
                return Ok((f, tf_sum));
            }
        }
    }
    Err(OracleError::NoConvergence(MAX_TERMS))
}

/// Taylor step of the ODE from center `c` by `h`, given `psi(c)`, `psi'(c)`.
/// `a_sq`, `b_sq` are the squared channel parameters.
pub(crate) fn taylor_step(c: Cdd, h: Cdd, psi: Cdd, dpsi: Cdd, a_sq: TwoFloat, b_sq: TwoFloat, tol: f64) -> Result<(Cdd, Cdd), OracleError> {
    let one = Cdd::new(tf(1.0), tf(0.0));
    let opc = one + c;
    let a_co = [opc * c * c, c * c + cmul_real(c * opc, tf(2.0)), one + cmul_real(c, tf(3.0)), one];
    let b_co = [opc * c, one + cmul_real(c, tf(2.0)), one];
    let c_co = [Cdd::new(a_sq, tf(0.0)) + cmul_real(c, b_sq), Cdd::new(b_sq, tf(0.0))];
    let lead_inv = cdiv(one, a_co[0]);

    let mut p: Vec<Cdd> = vec![psi, dpsi];
    let mut hp = one; // h^n
    let mut val = Cdd::new(tf(0.0), tf(0.0));
    let mut der = val;
    let scale = mag(&psi).max(mag(&dpsi) * mag(&h)).max(f64::MIN_POSITIVE);
    let mut quiet = 0;
    for n in 0..MAX_TERMS {
        // Accumulate the current term before extending the recurrence.
        val = val + p[n] * hp;
        if n >= 1 {
            der = der + cdiv(cmul_real(p[n] * hp, tf(n as f64)), h);
        }
        let term = mag(&p[n]) * mag(&hp) * (1.0 + n as f64);
        if !term.is_finite() {
            return Err(OracleError::DynamicRange(term));
        }
        if term <= tol * scale {
            quiet += 1;
            if quiet >= 3 && n > 8 {
                return Ok((val, der));
            }
        } else {
            quiet = 0;
        }
        hp = hp * h;
        let mut acc = Cdd::new(tf(0.0), tf(0.0));
        for (i, a) in a_co.iter().enumerate().skip(1) {
            if let Some(k) = (n + 2).checked_sub(i) {
                if k >= 2 && k < p.len() {
                    acc = acc + cmul_real(*a * p[k], tf((k * (k - 1)) as f64));
                }
            }
        }
        for (i, b) in b_co.iter().enumerate() {
            if let Some(k) = (n + 1).checked_sub(i) {
                if k >= 1 && k < p.len() {
                    acc = acc + cmul_real(*b * p[k], tf(k as f64));
                }
            }
        }
        for (i, cc) in c_co.iter().enumerate() {
            if let Some(k) = n.checked_sub(i) {
                acc = acc - *cc * p[k];
            }
        }
        let denom = tf(((n + 2) * (n + 1)) as f64);
        let next = cmul_real(-(acc * lead_inv), recip(denom));
        p.push(next);
    }
    Err(OracleError::NoConvergence(MAX_TERMS))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn division_keeps_both_words() {
        let third = recip(tf(3.0));
        assert!(third.lo() != 0.0);
        assert_eq!((third * tf(3.0) - tf(1.0)).hi(), 0.0);
        let q = cdiv(dd(Complex64::new(1.0, 2.0)), dd(Complex64::new(3.0, -1.0)));
        let back = q * dd(Complex64::new(3.0, -1.0)) - dd(Complex64::new(1.0, 2.0));
        assert!(mag(&back) < 1e-30);
    }

    #[test]
    fn frobenius_terminates_for_free_motion() {
        // o = s makes the first factor vanish: F = 1 exactly.
        let (f, t) = frobenius(0.7, 0.7, dd(Complex64::new(0.5, 0.3)), 1e-30).unwrap();
        assert!((to_c64(&f) - 1.0).norm() < 1e-30);
        assert!((to_c64(&t) - 0.7).norm() < 1e-30);
    }

    #[test]
    fn frobenius_matches_hypergeometric() {
        // F(w) = 2F1(s - o, s + o; 1 + 2s; -w)
        let (s, o) = (0.6, 1.3);
        let w = Complex64::new(0.4, -0.2);
        let (f, _) = frobenius(s, o, dd(w), 1e-30).unwrap();
        let c = |x: f64| Complex64::new(x, 0.0);
        let want = crate::special::hyp2f1(c(s - o), c(s + o), c(1.0 + 2.0 * s), -w).unwrap();
        assert!((to_c64(&f) - want).norm() < 1e-14);
    }

    #[test]
    fn taylor_step_reproduces_series_solution() {
        // psi = u^s F(u) is an exact solution; step from u = 0.3 to 0.5 and compare.
        let (s, o) = (0.8, 1.4);
        let eval = |u: f64| {
            let (f, tfs) = frobenius(s, o, dd(Complex64::new(u, 0.0)), 1e-32).unwrap();
            let pref = u.powf(s);
            (to_c64(&f) * pref, to_c64(&tfs) * pref / u)
        };
        let (p0, d0) = eval(0.3);
        let (p1, d1) = eval(0.5);
        let (v, d) = taylor_step(
            dd(Complex64::new(0.3, 0.0)),
            dd(Complex64::new(0.2, 0.0)),
            dd(p0),
            dd(d0),
            tf(s * s),
            tf(o * o),
            1e-32,
        )
        .unwrap();
        assert!((to_c64(&v) - p1).norm() < 1e-14 * p1.norm());
        assert!((to_c64(&d) - d1).norm() < 1e-14 * d1.norm());
    }
}
