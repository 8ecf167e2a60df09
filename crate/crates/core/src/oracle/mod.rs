//! Independent numerical cross-check of the closed-form amplitudes.
//!
//! The wave equation `psi'' + 4 m (E - V) psi = 0` is continued along the
//! constant-`x0` contour `x - i zeta`. In the variable `u = exp(-i rho x)` the
//! contour is a ray through the origin; solutions are launched from exact
//! power series near the flat `V = 0` end, carried across by double-double
//! Taylor steps, and decomposed on exact series solutions at the `V = -v0`
//! end. No Gamma function is involved anywhere.

mod hermitian;
mod residual;
pub mod rk45;
mod series;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;
use crate::amplitudes::{channel_params, AmplitudeError, AmplitudeSet, GFactors};
use crate::special::{wrap_phase, SingularValue, SpecialError, INT_SNAP_TOL};
use crate::units::PotentialSpec;

use series::{cdiv, dd, frobenius, mag, taylor_step, tf, to_c64, Cdd};

pub use hermitian::hermitian_oracle;
pub use residual::{psi_one_closed_form, wavefunction_residual, wavefunction_residual_with};

/// `|u|` at the launch point when no explicit `Z` is given.
pub const DEFAULT_LAUNCH_RADIUS: f64 = 0.9;
pub const DEFAULT_TOLERANCE: f64 = 1e-30;
pub const OVERFLOW_GUARD: f64 = 1e120;
pub const MAX_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Amplitude(#[from] AmplitudeError),
    #[error("energy is within {tol:e} of the critical condition {condition} = {value}")]
    NearCritical {
        condition: &'static str,
        value: f64,
        tol: f64,
    },
    #[error("contour at x0 = {0} passes through the potential singularity")]
    SingularContour(f64),
    #[error("Z must be positive and finite, got {0}")]
    InvalidDepth(f64),
    #[error("series cancellation or magnitude {0:e} exceeds the working range")]
    DynamicRange(f64),
    #[error("series did not converge within {0} terms")]
    NoConvergence(usize),
    #[error("step size underflow at {0}")]
    StepUnderflow(f64),
    #[error("step limit reached at {0}")]
    StepLimit(f64),
    #[error("solution magnitude exceeded the overflow guard at {0}")]
    Overflow(f64),
    #[error("ill-conditioned asymptotic fit (condition number {0:e})")]
    IllConditioned(f64),
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error("invalid oracle input: {0}")]
    InvalidInput(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Launch {
    /// Outgoing `exp(-i K1 x)` at the flat end.
    PsiOne,
    /// Outgoing `exp(+i K1 x)` at the flat end.
    PsiTwo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourOptions {
    pub x0: f64,
    /// Contour half-length; `None` picks the default launch radius.
    pub depth: Option<f64>,
    pub tolerance: f64,
}

impl Default for ContourOptions {
    fn default() -> Self {
        ContourOptions {
            x0: 0.0,
            depth: None,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

/// State carried to the far end in double-double, for the exact fit.
#[derive(Debug, Clone, Copy)]
struct EndState {
    point: Cdd,
    ln_point: Complex64,
    psi: Cdd,
    dpsi_du: Cdd,
    a3: f64,
    a2: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ContourSolution {
    pub x0: f64,
    pub zeta_start: f64,
    pub zeta_end: f64,
    /// `psi` and `d psi / d xbar` at the start (flat) end.
    pub psi_start: Complex64,
    pub dpsi_start: Complex64,
    /// `psi` and `d psi / d xbar` at the far end.
    pub psi_end: Complex64,
    pub dpsi_end: Complex64,
    pub step_count: usize,
    pub tolerance: f64,
    end: EndState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedCoefficients {
    pub c_plus: Complex64,
    pub c_minus: Complex64,
    pub condition_number: f64,
}

/// Signed `rho` whose `u = exp(-i rho_eff xbar)` carries the chosen variant.
fn rho_eff(spec: &PotentialSpec) -> f64 {
    spec.rho * spec.variant.sign()
}

fn check_generic(a2: f64, a3: f64) -> Result<(), OracleError> {
    let tol = 3.0 * INT_SNAP_TOL;
    let (a2, a3) = (a2.abs(), a3.abs());
    for (condition, value) in [
        ("2 a2", 2.0 * a2),
        ("2 a3", 2.0 * a3),
        ("a2 + a3", a2 + a3),
        ("a3 - a2", a3 - a2),
    ] {
        let r = value.round();
        if r >= 1.0 && (value - r).abs() <= tol {
            return Err(OracleError::NearCritical { condition, value, tol });
        }
    }
    Ok(())
}

/// `ln z` on the branch nearest `target`.
fn ln_near(z: Complex64, target: Complex64) -> Complex64 {
    let p = z.ln();
    let turns = ((target.im - p.im) / (2.0 * std::f64::consts::PI)).round();
    Complex64::new(p.re, p.im + turns * 2.0 * std::f64::consts::PI)
}

/// Continues a launched solution from the flat end to the far end.
pub fn integrate_contour(
    spec: &PotentialSpec,
    energy: f64,
    launch: Launch,
    opts: &ContourOptions,
) -> Result<ContourSolution, OracleError> {
    let ch = channel_params(spec, energy)?;
    check_generic(ch.a2, ch.a3)?;
    let re = rho_eff(spec);
    let depth = opts.depth.unwrap_or(-DEFAULT_LAUNCH_RADIUS.ln() / spec.rho);
    if !(depth > 0.0 && depth.is_finite()) {
        return Err(OracleError::InvalidDepth(depth));
    }
    let radius = (-spec.rho * depth).exp();
    if radius == 0.0 {
        return Err(OracleError::InvalidDepth(depth));
    }
    // Coefficients are referenced to the strip between the potential poles
    // that contains the real origin; other strips differ by Floquet phases.
    let phase = wrap_phase(-re * opts.x0);
    let dir = Complex64::from_polar(1.0, phase);
    // The ray's closest approach to u = -1.
    let cos = dir.re;
    let closest = if cos < 0.0 { (1.0 - cos * cos).sqrt() } else { 1.0 };
    if closest < 1e-3 {
        return Err(OracleError::SingularContour(opts.x0));
    }

    let s = match launch {
        Launch::PsiOne => ch.a2,
        Launch::PsiTwo => -ch.a2,
    };
    let start = dir * radius;
    let ln_start = ln_near(start, Complex64::new(radius.ln(), phase));
    let (f, theta_f) = frobenius(s, ch.a3, dd(start), opts.tolerance)?;
    let pref = (ln_start * s).exp();
    if !pref.is_finite() || pref.norm() > OVERFLOW_GUARD {
        return Err(OracleError::DynamicRange(pref.norm()));
    }
    let start_dd = dd(start);
    let mut psi = dd(pref) * f;
    let mut dpsi = cdiv(dd(pref) * theta_f, start_dd);
    let psi_start = to_c64(&psi);
    let dpsi_start = to_c64(&dpsi) * (Complex64::new(0.0, -re) * start);

    let (a_sq, b_sq) = (tf(ch.a2) * tf(ch.a2), tf(ch.a3) * tf(ch.a3));
    let end_s = 1.0 / radius;
    let mut sc = radius;
    let mut center = start;
    let mut steps = 0usize;
    while sc < end_s {
        let reach = center.norm().min((center + 1.0).norm());
        let next_s = (sc + 0.5 * reach).min(end_s);
        let next = if next_s == end_s { dir * end_s } else { dir * next_s };
        let h = dd(next) - dd(center);
        let (p, d) = taylor_step(dd(center), h, psi, dpsi, a_sq, b_sq, opts.tolerance)?;
        psi = p;
        dpsi = d;
        if mag(&psi) > OVERFLOW_GUARD {
            return Err(OracleError::Overflow(-(next_s.ln()) / spec.rho));
        }
        sc = next_s;
        center = next;
        steps += 1;
        if steps > 100_000 {
            return Err(OracleError::StepLimit(-(sc.ln()) / spec.rho));
        }
    }
    let ln_end = ln_near(center, Complex64::new(end_s.ln(), phase));
    Ok(ContourSolution {
        x0: opts.x0,
        zeta_start: depth,
        zeta_end: -depth,
        psi_start,
        dpsi_start,
        psi_end: to_c64(&psi),
        dpsi_end: to_c64(&dpsi) * (Complex64::new(0.0, -re) * center),
        step_count: steps,
        tolerance: opts.tolerance,
        end: EndState {
            point: dd(center),
            ln_point: ln_end,
            psi,
            dpsi_du: dpsi,
            a3: ch.a3,
            a2: ch.a2,
        },
    })
}

/// Far-end basis `phi_sigma = y^sigma H(y)`, `y = 1/u`: value and `d/du`.
fn far_basis(end: &EndState, sigma: f64, tol: f64) -> Result<(Cdd, Cdd), OracleError> {
    let one = Cdd::new(tf(1.0), tf(0.0));
    let y = cdiv(one, end.point);
    let (h, theta_h) = frobenius(sigma, end.a2, y, tol)?;
    let pref = (-end.ln_point * sigma).exp();
    if !pref.is_finite() {
        return Err(OracleError::DynamicRange(pref.norm()));
    }
    let p = dd(pref);
    Ok((p * h, -(y * p * theta_h)))
}

fn wronskian(a: (Cdd, Cdd), b: (Cdd, Cdd)) -> Cdd {
    a.0 * b.1 - a.1 * b.0
}

fn condition_2x2(m: [[Complex64; 2]; 2]) -> f64 {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let fro = m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>();
    if det.norm() == 0.0 {
        f64::INFINITY
    } else {
        fro / det.norm()
    }
}

/// Decomposes the far-end solution on the outgoing/incoming pair
/// `exp(+i K2 xbar)`, `exp(-i K2 xbar)` (exact series continuations thereof).
pub fn fit_asymptotics(sol: &ContourSolution) -> Result<FittedCoefficients, OracleError> {
    let plus = far_basis(&sol.end, sol.end.a3, sol.tolerance)?;
    let minus = far_basis(&sol.end, -sol.end.a3, sol.tolerance)?;
    let psi = (sol.end.psi, sol.end.dpsi_du);
    let c_plus = cdiv(wronskian(psi, minus), wronskian(plus, minus));
    let c_minus = cdiv(wronskian(psi, plus), wronskian(minus, plus));
    let cond = condition_2x2([
        [to_c64(&plus.0), to_c64(&minus.0)],
        [to_c64(&plus.1), to_c64(&minus.1)],
    ]);
    if cond > MAX_CONDITION {
        return Err(OracleError::IllConditioned(cond));
    }
    Ok(FittedCoefficients {
        c_plus: to_c64(&c_plus),
        c_minus: to_c64(&c_minus),
        condition_number: cond,
    })
}

/// Solves `psi = c+ e^{iKx} + c- e^{-iKx}` and its derivative at `x`.
pub fn fit_plane_waves(psi: Complex64, dpsi: Complex64, x: Complex64, k: f64) -> Result<FittedCoefficients, OracleError> {
    let i = Complex64::new(0.0, 1.0);
    let ep = (i * k * x).exp();
    let em = (-i * k * x).exp();
    let m = [[ep, em], [i * k * ep, -i * k * em]];
    let cond = condition_2x2(m);
    if cond > MAX_CONDITION {
        return Err(OracleError::IllConditioned(cond));
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    Ok(FittedCoefficients {
        c_plus: (psi * m[1][1] - m[0][1] * dpsi) / det,
        c_minus: (m[0][0] * dpsi - m[1][0] * psi) / det,
        condition_number: cond,
    })
}

impl FittedCoefficients {
    /// `(psi, dpsi/dx)` of the plane-wave pair at `x`.
    pub fn synthesize(&self, x: Complex64, k: f64) -> (Complex64, Complex64) {
        let i = Complex64::new(0.0, 1.0);
        let ep = (i * k * x).exp() * self.c_plus;
        let em = (-i * k * x).exp() * self.c_minus;
        (ep + em, i * k * (ep - em))
    }
}

/// Fitted `[G1, G2, G3, G4]` from the two launches.
pub fn oracle_g_factors(spec: &PotentialSpec, energy: f64, opts: &ContourOptions) -> Result<[Complex64; 4], OracleError> {
    let one = fit_asymptotics(&integrate_contour(spec, energy, Launch::PsiOne, opts)?)?;
    let two = fit_asymptotics(&integrate_contour(spec, energy, Launch::PsiTwo, opts)?)?;
    Ok([one.c_plus, one.c_minus, two.c_plus, two.c_minus])
}

pub fn oracle_amplitudes(spec: &PotentialSpec, energy: f64) -> Result<AmplitudeSet, OracleError> {
    oracle_amplitudes_with(spec, energy, &ContourOptions::default())
}

pub fn oracle_amplitudes_with(spec: &PotentialSpec, energy: f64, opts: &ContourOptions) -> Result<AmplitudeSet, OracleError> {
    let ch = channel_params(spec, energy)?;
    let g = oracle_g_factors(spec, energy, opts)?;
    let sv = SingularValue::from_complex;
    let gf = GFactors {
        g1: sv(g[0]),
        g2: sv(g[1]),
        g3: sv(g[2]),
        g4: sv(g[3]),
    };
    Ok(AmplitudeSet::from_g_factors(energy, ch.k1 / ch.k2, &gf))
}
